//! Exact diagonalization of one cavity coupled to N four-level atoms in the
//! permutation-symmetric sector.
//!
//! Symmetric N-atom states are labelled by collective occupations
//! (n1, n2, n3, n4) with n1 = N − n2 − n3 − n4; `Σ_j σ_kl^j` acts as
//! `b_k† b_l` with amplitude √(n_l (n_k + 1)). In the rotating frame every
//! photon and every atom in levels 2 or 3 carries one excitation, level 4
//! carries two, and the interaction conserves that count.

use std::collections::HashMap;

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};
use crate::params::{effective_parameters, PhysicalParams};

/// Dark branch identification needs at least this squared overlap.
pub const DARK_OVERLAP_THRESHOLD: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct SymState {
    pub photons: u32,
    pub n2: u32,
    pub n3: u32,
    pub n4: u32,
}

impl SymState {
    pub fn excitations(&self) -> u32 {
        self.photons + self.n2 + self.n3 + 2 * self.n4
    }

    fn excited_atoms(&self) -> u64 {
        (self.n2 + self.n3 + self.n4) as u64
    }
}

#[derive(Debug, Clone)]
pub struct SymBasis {
    n_atoms: u64,
    states: Vec<SymState>,
    index: HashMap<SymState, usize>,
}

impl SymBasis {
    /// All symmetric states with exactly `excitations` excitations.
    pub fn sector(n_atoms: u64, excitations: u32) -> Result<Self> {
        Self::build(n_atoms, excitations..=excitations)
    }

    /// All sectors with 0..=`max_excitations` excitations, in ascending order.
    pub fn up_to(n_atoms: u64, max_excitations: u32) -> Result<Self> {
        Self::build(n_atoms, 0..=max_excitations)
    }

    fn build(n_atoms: u64, sectors: std::ops::RangeInclusive<u32>) -> Result<Self> {
        if n_atoms == 0 {
            return Err(Error::InvalidParameter("n_atoms must be at least 1".into()));
        }
        let mut states = Vec::new();
        for n_ex in sectors {
            for photons in (0..=n_ex).rev() {
                let rest = n_ex - photons;
                for n4 in 0..=rest / 2 {
                    let single = rest - 2 * n4;
                    for n2 in (0..=single).rev() {
                        let s = SymState {
                            photons,
                            n2,
                            n3: single - n2,
                            n4,
                        };
                        if s.excited_atoms() <= n_atoms {
                            states.push(s);
                        }
                    }
                }
            }
        }
        let index = states.iter().enumerate().map(|(k, &s)| (s, k)).collect();
        Ok(Self {
            n_atoms,
            states,
            index,
        })
    }

    pub fn n_atoms(&self) -> u64 {
        self.n_atoms
    }

    pub fn dim(&self) -> usize {
        self.states.len()
    }

    pub fn states(&self) -> &[SymState] {
        &self.states
    }

    pub fn index_of(&self, s: &SymState) -> Option<usize> {
        self.index.get(s).copied()
    }

    /// Excitation number if the basis is a single sector.
    pub fn single_sector(&self) -> Option<u32> {
        let first = self.states.first()?.excitations();
        self.states
            .iter()
            .all(|s| s.excitations() == first)
            .then_some(first)
    }
}

pub fn symmetric_basis(n_atoms: u64, excitations: u32) -> Result<SymBasis> {
    SymBasis::sector(n_atoms, excitations)
}

/// Real symmetric matrix of `H_I` on a [`SymBasis`].
#[derive(Debug, Clone, PartialEq)]
pub struct MicroscopicOperator(DMatrix<f64>);

impl MicroscopicOperator {
    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn is_symmetric(&self) -> bool {
        self.0 == self.0.transpose()
    }

    /// Eigenvalues in ascending order.
    pub fn eigenvalues(&self) -> Vec<f64> {
        let mut ev: Vec<f64> = SymmetricEigen::new(self.0.clone()).eigenvalues.iter().copied().collect();
        ev.sort_by(f64::total_cmp);
        ev
    }
}

/// `H_I = Σ_j [ε σ22 + δ σ33 + (Δ+ε) σ44] + Σ_j [Ω_L σ23 + g13 σ13 a† + g24 σ24 a† + h.c.]`.
pub fn build_hi(basis: &SymBasis, p: &PhysicalParams) -> MicroscopicOperator {
    let n = basis.dim();
    let mut h = DMatrix::zeros(n, n);
    let mut diagonal = Vec::with_capacity(n);
    let mut couple = |from: usize, to: SymState, amp: f64| {
        if amp == 0.0 {
            return;
        }
        let j = basis
            .index_of(&to)
            .expect("H_I conserves excitations, so targets stay in the basis");
        h[(j, from)] += amp;
        h[(from, j)] += amp;
    };
    for (k, s) in basis.states().iter().enumerate() {
        let n1 = (basis.n_atoms() - s.excited_atoms()) as f64;
        let (m, n2, n3, n4) = (s.photons as f64, s.n2 as f64, s.n3 as f64, s.n4 as f64);
        if s.n3 > 0 {
            // Ω_L σ23: level 3 → 2
            couple(
                k,
                SymState {
                    n2: s.n2 + 1,
                    n3: s.n3 - 1,
                    ..*s
                },
                p.omega_l * (n3 * (n2 + 1.0)).sqrt(),
            );
            // g13 σ13 a†: level 3 → 1, photon created
            couple(
                k,
                SymState {
                    photons: s.photons + 1,
                    n3: s.n3 - 1,
                    ..*s
                },
                p.g13 * (n3 * (n1 + 1.0)).sqrt() * (m + 1.0).sqrt(),
            );
        }
        if s.n4 > 0 {
            // g24 σ24 a†: level 4 → 2, photon created
            couple(
                k,
                SymState {
                    photons: s.photons + 1,
                    n2: s.n2 + 1,
                    n4: s.n4 - 1,
                    ..*s
                },
                p.g24 * (n4 * (n2 + 1.0)).sqrt() * (m + 1.0).sqrt(),
            );
        }
        diagonal.push(p.epsilon * n2 + p.delta_small * n3 + (p.delta_cap + p.epsilon) * n4);
    }
    for (k, d) in diagonal.into_iter().enumerate() {
        h[(k, k)] = d;
    }
    MicroscopicOperator(h)
}

/// Normalized `(p0†)^n_p |vac⟩` with `p0† = (g S12† − Ω_L a†)/B`, expanded
/// exactly at finite N.
pub fn dark_excitation_state(basis: &SymBasis, p: &PhysicalParams, n_p: u32) -> Result<DVector<f64>> {
    if basis.single_sector() != Some(n_p) || n_p as u64 > basis.n_atoms() {
        return Err(Error::ExcitationMismatch {
            n_p,
            excitations: basis.single_sector().unwrap_or(u32::MAX),
            atoms: basis.n_atoms(),
        });
    }
    let g = p.collective_coupling();
    let b = g.hypot(p.omega_l);
    if b == 0.0 {
        return Err(Error::DegenerateCoupling);
    }
    let (atomic, photonic) = (g / b, -p.omega_l / b);
    let n_atoms = basis.n_atoms() as f64;
    let mut v = DVector::<f64>::zeros(basis.dim());
    let mut binom = 1.0;
    // S12†^k |vac⟩ = √(N!/(N−k)! · k!) / N^{k/2} |n2 = k⟩
    let mut collective = 1.0;
    for k in 0..=n_p {
        if k > 0 {
            binom = binom * (n_p - k + 1) as f64 / k as f64;
            collective *= ((n_atoms - (k - 1) as f64) * k as f64 / n_atoms).sqrt();
        }
        let photons = n_p - k;
        let photon_norm = (1..=photons).fold(1.0, |acc, j| acc * (j as f64).sqrt());
        let amp = binom * atomic.powi(k as i32) * photonic.powi(photons as i32) * collective * photon_norm;
        let s = SymState {
            photons,
            n2: k,
            n3: 0,
            n4: 0,
        };
        let idx = basis.index_of(&s).ok_or(Error::ExcitationMismatch {
            n_p,
            excitations: n_p,
            atoms: basis.n_atoms(),
        })?;
        v[idx] += amp;
    }
    let norm = v.norm();
    Ok(v / norm)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShiftMeasurement {
    /// Exact eigenvalue of the dark branch in the n_p-excitation sector.
    pub shift: f64,
    /// n_p(n_p−1)·κ + n_p·ε g²/B² from the closed-form mapping.
    pub predicted: f64,
    /// Squared overlap of the selected eigenvector with the dark state.
    pub overlap: f64,
    pub kappa: f64,
}

impl ShiftMeasurement {
    /// |shift − predicted| / |predicted|; the absolute error when the prediction is zero.
    pub fn relative_error(&self) -> f64 {
        let diff = (self.shift - self.predicted).abs();
        if self.predicted == 0.0 {
            diff
        } else {
            diff / self.predicted.abs()
        }
    }
}

/// Diagonalizes `H_I` in the n_p-excitation sector and returns the energy of
/// the eigenvector closest to the dark state `(p0†)^n_p |vac⟩`.
pub fn extract_kappa_shift(p: &PhysicalParams, n_p: u32) -> Result<ShiftMeasurement> {
    if n_p == 0 {
        return Err(Error::InvalidParameter("n_p must be at least 1".into()));
    }
    let eff = effective_parameters(p)?;
    let basis = SymBasis::sector(p.n_atoms, n_p)?;
    let h = build_hi(&basis, p);
    let dark = dark_excitation_state(&basis, p, n_p)?;

    let scale = h.matrix().amax().max(f64::MIN_POSITIVE);
    let eig = SymmetricEigen::new(h.matrix() / scale);
    let (best, overlap) = eig
        .eigenvectors
        .column_iter()
        .map(|v| v.dot(&dark).powi(2))
        .enumerate()
        .fold((0, f64::MIN), |acc, (k, o)| if o > acc.1 { (k, o) } else { acc });
    if overlap < DARK_OVERLAP_THRESHOLD {
        return Err(Error::AmbiguousDarkState(overlap));
    }
    let n = n_p as f64;
    Ok(ShiftMeasurement {
        shift: eig.eigenvalues[best] * scale,
        predicted: n * (n - 1.0) * eff.kappa + n * eff.chem_shift,
        overlap,
        kappa: eff.kappa,
    })
}

/// Sorted one-excitation spectrum of `H_I`.
pub fn one_excitation_spectrum(p: &PhysicalParams) -> Result<Vec<f64>> {
    let basis = SymBasis::sector(p.n_atoms, 1)?;
    Ok(build_hi(&basis, p).eigenvalues())
}
