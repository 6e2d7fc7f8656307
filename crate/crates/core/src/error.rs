use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("Fock space of {sites} sites with at most {max_total} bosons has {dim} states, above the cap of {cap}")]
    BasisTooLarge {
        sites: usize,
        max_total: u32,
        dim: u128,
        cap: usize,
    },

    #[error("site count must be at least 1")]
    NoSites,

    #[error("site {site} out of range for {sites} sites")]
    InvalidSite { site: usize, sites: usize },

    #[error("invalid edge ({0}, {1}): {2}")]
    InvalidEdge(usize, usize, &'static str),

    #[error("occupation {0:?} is not in the basis")]
    StateNotInBasis(Vec<u32>),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("Delta = 0 with g24 != 0: the level-4 shift is singular and perturbation theory does not apply")]
    SingularDetuning,

    #[error("B = sqrt(g^2 + Omega_L^2) vanishes; the dark polariton is undefined")]
    DegenerateCoupling,

    #[error("ramp duration must be positive, got {0}")]
    NonPositiveDuration(f64),

    #[error("time {t} outside the ramp window [0, {duration}]")]
    TimeOutOfRange { t: f64, duration: f64 },

    #[error("state is not normalized (norm {0})")]
    NotNormalized(f64),

    #[error("particle sector {0} is empty in this basis")]
    EmptySector(u32),

    #[error("eigensolver did not converge (residual norm {residual:e})")]
    NoConvergence { residual: f64 },

    #[error("negative dissipation rate {0}")]
    NegativeRate(f64),

    #[error("step size underflow at t = {t:e} (h = {h:e})")]
    StepUnderflow { t: f64, h: f64 },

    #[error("density matrix lost positivity at t = {t:e}: min eigenvalue {min_eigenvalue:e}")]
    PositivityViolation { t: f64, min_eigenvalue: f64 },

    #[error("dark branch is ambiguous: best overlap {0:.3} below 0.5, mapping invalid")]
    AmbiguousDarkState(f64),

    #[error("{n_p} polaritons do not fit a sector with {excitations} excitations and {atoms} atoms")]
    ExcitationMismatch {
        n_p: u32,
        excitations: u32,
        atoms: u64,
    },
}
