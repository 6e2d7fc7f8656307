//! Lindblad dynamics of the driven, lossy polariton array.
//!
//! The state is a dense density matrix over the truncated Fock basis. Each
//! site loses polaritons through the jump operator `p_i` at the dark-polariton
//! rate Γ(t); the coherent part is the Bose-Hubbard Hamiltonian with κ(t), J(t)
//! following the drive ramp.

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fock::{CavityGraph, FockBasis, SparseOperator};
use crate::hubbard::{statistics_from_populations, BHParams, FockPopulations, HamiltonianTerms};
use crate::integrate::{integrate, IntegrationStats, IntegratorSettings};
use crate::params::{
    params_at_time, validity_report, PhysicalParams, RampSchedule, Verdict,
};

const I: Complex64 = Complex64::new(0.0, 1.0);

#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix(DMatrix<Complex64>);

impl DensityMatrix {
    pub fn from_matrix(m: DMatrix<Complex64>) -> Result<Self> {
        if !m.is_square() {
            return Err(Error::DimensionMismatch {
                expected: m.nrows(),
                found: m.ncols(),
            });
        }
        Ok(Self(m))
    }

    /// Projector onto a normalized pure state.
    pub fn pure(psi: &nalgebra::DVector<Complex64>) -> Self {
        Self(psi * psi.adjoint())
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.0
    }

    pub fn into_inner(self) -> DMatrix<Complex64> {
        self.0
    }

    pub fn trace(&self) -> f64 {
        self.0.trace().re
    }

    /// tr ρ², assuming ρ Hermitian.
    pub fn purity(&self) -> f64 {
        self.0.iter().map(|z| z.norm_sqr()).sum()
    }

    /// max |ρ − ρ†| over entries.
    pub fn hermiticity_error(&self) -> f64 {
        let n = self.dim();
        let mut worst: f64 = 0.0;
        for r in 0..n {
            for c in r..n {
                worst = worst.max((self.0[(r, c)] - self.0[(c, r)].conj()).norm());
            }
        }
        worst
    }

    /// Smallest eigenvalue of the Hermitian part.
    pub fn min_eigenvalue(&self) -> f64 {
        let herm = (&self.0 + self.0.adjoint()) * Complex64::new(0.5, 0.0);
        SymmetricEigen::new(herm).eigenvalues.min()
    }
}

impl FockPopulations for DensityMatrix {
    fn populations(&self) -> Vec<f64> {
        self.0.populations()
    }
}

/// Pure Fock state `|occ⟩⟨occ|`.
pub fn initial_mott_state(basis: &FockBasis, occ: &[u32]) -> Result<DensityMatrix> {
    let k = basis.state_index(occ)?;
    let mut m = DMatrix::zeros(basis.dim(), basis.dim());
    m[(k, k)] = Complex64::new(1.0, 0.0);
    Ok(DensityMatrix(m))
}

/// `dρ/dt = −i[H, ρ] + Σ_k γ_k (L_k ρ L_k† − ½{L_k†L_k, ρ})`.
pub fn lindblad_derivative(
    h: &SparseOperator,
    jumps: &[(SparseOperator, f64)],
    rho: &DensityMatrix,
) -> Result<DMatrix<Complex64>> {
    let n = rho.dim();
    for op in std::iter::once(h).chain(jumps.iter().map(|(l, _)| l)) {
        if op.dim() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: op.dim(),
            });
        }
    }
    if let Some(&(_, rate)) = jumps.iter().find(|(_, r)| *r < 0.0 || r.is_nan()) {
        return Err(Error::NegativeRate(rate));
    }
    let r = rho.matrix();
    let hd = h.to_dense();
    let mut out = (&hd * r - r * &hd) * (-I);
    for (l, rate) in jumps {
        if *rate == 0.0 {
            continue;
        }
        let ld = l.to_dense();
        let ldag = ld.adjoint();
        let ldl = &ldag * &ld;
        let half = Complex64::new(0.5, 0.0);
        let term = &ld * r * &ldag - (&ldl * r + r * &ldl) * half;
        out += term * Complex64::new(*rate, 0.0);
    }
    Ok(out)
}

/// Instantaneous couplings seen by the dynamics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DriveState {
    pub omega_l: f64,
    pub bh: BHParams,
    /// Per-site polariton loss rate.
    pub gamma: f64,
}

pub trait Drive {
    fn duration(&self) -> f64;
    fn state_at(&self, t: f64) -> Result<DriveState>;
}

/// Couplings from the polariton mapping along a Rabi-frequency ramp.
#[derive(Debug, Clone, Copy)]
pub struct RampDrive {
    pub params: PhysicalParams,
    pub ramp: RampSchedule,
}

impl Drive for RampDrive {
    fn duration(&self) -> f64 {
        self.ramp.duration
    }

    fn state_at(&self, t: f64) -> Result<DriveState> {
        let e = params_at_time(&self.params, &self.ramp, t)?;
        Ok(DriveState {
            omega_l: e.omega_l,
            bh: BHParams::from_effective(&e),
            gamma: e.gamma,
        })
    }
}

/// Time-independent couplings.
#[derive(Debug, Clone, Copy)]
pub struct ConstantDrive {
    pub bh: BHParams,
    pub gamma: f64,
    pub duration: f64,
}

impl Drive for ConstantDrive {
    fn duration(&self) -> f64 {
        self.duration
    }

    fn state_at(&self, t: f64) -> Result<DriveState> {
        if !(0.0..=self.duration * (1.0 + 1e-12)).contains(&t) {
            return Err(Error::TimeOutOfRange {
                t,
                duration: self.duration,
            });
        }
        Ok(DriveState {
            omega_l: f64::NAN,
            bh: self.bh,
            gamma: self.gamma,
        })
    }
}

/// Precomputed pieces of the Liouvillian for uniform per-site loss.
struct Liouvillian {
    dim: usize,
    interaction: Vec<f64>,
    number: Vec<f64>,
    hopping: Vec<(usize, usize, f64)>,
    /// For each site, `(target, source, amplitude)` of `p_i`.
    jumps: Vec<Vec<(usize, usize, f64)>>,
}

impl Liouvillian {
    fn new(basis: &FockBasis, graph: &CavityGraph) -> Result<Self> {
        let terms = HamiltonianTerms::new(basis, graph)?;
        let diag = |op: &SparseOperator| {
            let mut d = vec![0.0; op.dim()];
            for &(r, _, v) in op.entries() {
                d[r] = v.re;
            }
            d
        };
        let real = |op: &SparseOperator| op.entries().iter().map(|&(r, c, v)| (r, c, v.re)).collect();
        let jumps = (0..basis.site_count())
            .map(|site| crate::fock::ladder_operator(basis, site).map(|l| real(&l)))
            .collect::<Result<_>>()?;
        Ok(Self {
            dim: basis.dim(),
            interaction: diag(&terms.interaction),
            number: diag(&terms.number),
            hopping: real(&terms.hopping),
            jumps,
        })
    }

    fn derivative(&self, s: &DriveState, rho: &DMatrix<Complex64>) -> DMatrix<Complex64> {
        let n = self.dim;
        let energy: Vec<f64> = self
            .interaction
            .iter()
            .zip(&self.number)
            .map(|(u, m)| s.bh.kappa * u + s.bh.mu * m)
            .collect();
        let half_loss = 0.5 * s.gamma;
        let mut out = DMatrix::from_fn(n, n, |r, c| {
            rho[(r, c)]
                * (-I * (energy[r] - energy[c]) - half_loss * (self.number[r] + self.number[c]))
        });
        if s.bh.hopping != 0.0 {
            // −iJ (Kρ − ρK) with K real symmetric
            let mj = -I * s.bh.hopping;
            for &(a, b, k) in &self.hopping {
                for c in 0..n {
                    out[(a, c)] += mj * k * rho[(b, c)];
                    out[(c, b)] -= mj * k * rho[(c, a)];
                }
            }
        }
        if s.gamma != 0.0 {
            for site in &self.jumps {
                for &(ta, a, amp_a) in site {
                    for &(tb, b, amp_b) in site {
                        out[(ta, tb)] += s.gamma * amp_a * amp_b * rho[(a, b)];
                    }
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvolutionControl {
    pub integrator: IntegratorSettings,
    /// Number of equally spaced sample times including both endpoints.
    pub samples: usize,
    /// Runs abort when the smallest eigenvalue of ρ drops below minus this value.
    pub positivity_tolerance: f64,
}

impl Default for EvolutionControl {
    fn default() -> Self {
        Self {
            integrator: IntegratorSettings::default(),
            samples: 200,
            positivity_tolerance: 1e-6,
        }
    }
}

/// Sampled observables of one run, one entry per sample time.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ObservableSeries {
    pub sites: usize,
    pub times: Vec<f64>,
    pub omega_l: Vec<f64>,
    pub kappa: Vec<f64>,
    pub hopping: Vec<f64>,
    pub gamma: Vec<f64>,
    /// `mean_n[k][i]` = ⟨n_i⟩ at `times[k]`.
    pub mean_n: Vec<Vec<f64>>,
    /// `fluctuation[k][i]` = F_i at `times[k]`.
    pub fluctuation: Vec<Vec<f64>>,
    pub trace: Vec<f64>,
    pub purity: Vec<f64>,
    pub min_eigenvalue: Vec<f64>,
    pub hermiticity_error: Vec<f64>,
    pub warnings: Vec<String>,
    pub stats: IntegrationStats,
}

impl ObservableSeries {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Checks that times increase strictly and all records have one entry per time.
    pub fn is_consistent(&self) -> bool {
        let n = self.len();
        self.times.windows(2).all(|w| w[1] > w[0])
            && [
                self.omega_l.len(),
                self.kappa.len(),
                self.hopping.len(),
                self.gamma.len(),
                self.mean_n.len(),
                self.fluctuation.len(),
                self.trace.len(),
                self.purity.len(),
            ]
            .iter()
            .all(|&l| l == n)
            && self
                .mean_n
                .iter()
                .chain(&self.fluctuation)
                .all(|row| row.len() == self.sites)
    }
}

/// Integrates the ramp experiment: H(t) from the polariton mapping along
/// `ramp`, loss `p_i` at rate Γ(t) on every site.
pub fn evolve(
    rho0: &DensityMatrix,
    p: &PhysicalParams,
    ramp: &RampSchedule,
    graph: &CavityGraph,
    basis: &FockBasis,
    control: &EvolutionControl,
) -> Result<ObservableSeries> {
    let drive = RampDrive {
        params: *p,
        ramp: *ramp,
    };
    let mut warnings = Vec::new();
    let n_p = basis.max_total();
    for (label, omega) in [("start", ramp.omega_start), ("end", ramp.omega_end)] {
        let report = validity_report(&p.with_omega_l(omega), n_p)?;
        if report.verdict() != Verdict::Valid {
            warnings.push(format!(
                "polariton mapping {:?} at ramp {label} (Omega_L = {omega:e}): worst ratio {:.3} > {}",
                report.verdict(),
                report.max_ratio(),
                report.threshold
            ));
        }
    }
    let mut series = evolve_drive(rho0, &drive, graph, basis, control)?;
    series.warnings = warnings;
    Ok(series)
}

pub fn evolve_drive<D: Drive>(
    rho0: &DensityMatrix,
    drive: &D,
    graph: &CavityGraph,
    basis: &FockBasis,
    control: &EvolutionControl,
) -> Result<ObservableSeries> {
    if rho0.dim() != basis.dim() {
        return Err(Error::DimensionMismatch {
            expected: basis.dim(),
            found: rho0.dim(),
        });
    }
    if control.samples < 2 {
        return Err(Error::InvalidParameter("at least two samples are required".into()));
    }
    let liouvillian = Liouvillian::new(basis, graph)?;
    let duration = drive.duration();
    let last = control.samples - 1;
    let samples: Vec<f64> = (0..control.samples)
        .map(|k| {
            if k == last {
                duration
            } else {
                duration * k as f64 / last as f64
            }
        })
        .collect();

    let sites = basis.site_count();
    let mut series = ObservableSeries {
        sites,
        ..Default::default()
    };
    let (_, stats) = integrate(
        |t, rho: &DMatrix<Complex64>| {
            let s = drive.state_at(t)?;
            if s.gamma < 0.0 {
                return Err(Error::NegativeRate(s.gamma));
            }
            Ok(liouvillian.derivative(&s, rho))
        },
        0.0,
        rho0.matrix().clone(),
        &samples,
        &control.integrator,
        |t, rho| {
            let rho = DensityMatrix(rho.clone());
            let min_eigenvalue = rho.min_eigenvalue();
            if min_eigenvalue < -control.positivity_tolerance {
                return Err(Error::PositivityViolation { t, min_eigenvalue });
            }
            let s = drive.state_at(t)?;
            let pops = rho.populations();
            let mut means = Vec::with_capacity(sites);
            let mut flucts = Vec::with_capacity(sites);
            for site in 0..sites {
                let st = statistics_from_populations(&pops, basis, site)?;
                means.push(st.mean_n);
                flucts.push(st.fluctuation);
            }
            series.times.push(t);
            series.omega_l.push(s.omega_l);
            series.kappa.push(s.bh.kappa);
            series.hopping.push(s.bh.hopping);
            series.gamma.push(s.gamma);
            series.mean_n.push(means);
            series.fluctuation.push(flucts);
            series.trace.push(rho.trace());
            series.purity.push(rho.purity());
            series.min_eigenvalue.push(min_eigenvalue);
            series.hermiticity_error.push(rho.hermiticity_error());
            Ok(())
        },
    )?;
    series.stats = stats;
    Ok(series)
}
