//! Polariton Bose-Hubbard simulator for coupled cavity arrays.
//!
//! The crate maps the microscopic parameters of an EIT-driven atom-cavity
//! array onto an effective Bose-Hubbard model for dark-state polaritons,
//! checks that mapping against exact diagonalization of a single cavity, and
//! integrates the dissipative ramp from the Mott insulator into the
//! superfluid regime.
//!
//! Units: all rates and energies are angular frequencies in 1/s with ħ = 1,
//! times are in seconds.

pub mod error;
pub mod fock;
pub mod hubbard;
pub mod integrate;
pub mod lindblad;
pub mod micro;
pub mod params;

pub use error::{Error, Result};
pub use fock::{CavityGraph, FockBasis, SparseOperator};
pub use hubbard::{BHParams, GroundState, SiteStatistics};
pub use integrate::IntegratorSettings;
pub use lindblad::{DensityMatrix, ObservableSeries};
pub use micro::{ShiftMeasurement, SymBasis};
pub use params::{
    EffectiveParams, PhysicalParams, RampSchedule, RampShape, ValidityReport, Verdict,
};

pub use nalgebra::{DMatrix, DVector};
pub use num_complex::Complex64;
