//! Effective Bose-Hubbard and bare photonic Hamiltonians on a cavity graph,
//! ground states in fixed particle-number sectors, and per-site number
//! statistics.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fock::{
    hopping_operator, total_number_operator, CavityGraph, FockBasis, SparseOperator, DENSE_LIMIT,
};
use crate::params::EffectiveParams;

/// Couplings of `H = κ Σ n_i(n_i−1) + J Σ_edges (p_i†p_j + h.c.) + μ Σ n_i`.
///
/// The interaction is written as κ·(p†)²p² = κ·n(n−1), so the conventional
/// Hubbard `U/2·n(n−1)` corresponds to `U = 2κ`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct BHParams {
    pub kappa: f64,
    pub hopping: f64,
    pub mu: f64,
}

impl BHParams {
    pub fn new(kappa: f64, hopping: f64, mu: f64) -> Self {
        Self { kappa, hopping, mu }
    }

    /// κ and J from the polariton mapping, with the ε-shift as chemical potential.
    pub fn from_effective(e: &EffectiveParams) -> Self {
        Self {
            kappa: e.kappa,
            hopping: e.hopping,
            mu: e.chem_shift,
        }
    }
}

/// The three parameter-independent pieces of the Bose-Hubbard Hamiltonian.
#[derive(Debug, Clone)]
pub struct HamiltonianTerms {
    /// Σ n_i(n_i−1)
    pub interaction: SparseOperator,
    /// Σ_edges (p_i†p_j + h.c.)
    pub hopping: SparseOperator,
    /// Σ n_i
    pub number: SparseOperator,
}

impl HamiltonianTerms {
    pub fn new(basis: &FockBasis, graph: &CavityGraph) -> Result<Self> {
        if graph.site_count() != basis.site_count() {
            return Err(Error::DimensionMismatch {
                expected: basis.site_count(),
                found: graph.site_count(),
            });
        }
        let interaction = SparseOperator::from_triplets(
            basis.dim(),
            basis.states().iter().enumerate().map(|(k, occ)| {
                let v: u32 = occ.iter().map(|&n| n * n.saturating_sub(1)).sum();
                (k, k, Complex64::new(v as f64, 0.0))
            }),
        )?;
        let mut hopping = SparseOperator::zeros(basis.dim());
        for &edge in graph.edges() {
            hopping = hopping.add(&hopping_operator(basis, edge)?)?;
        }
        Ok(Self {
            interaction,
            hopping,
            number: total_number_operator(basis),
        })
    }

    pub fn assemble(&self, bh: &BHParams) -> Result<SparseOperator> {
        self.interaction
            .scale_real(bh.kappa)
            .add(&self.hopping.scale_real(bh.hopping))?
            .add(&self.number.scale_real(bh.mu))
    }
}

pub fn build_bh_hamiltonian(
    basis: &FockBasis,
    graph: &CavityGraph,
    bh: &BHParams,
) -> Result<SparseOperator> {
    HamiltonianTerms::new(basis, graph)?.assemble(bh)
}

/// `ω_C Σ (a_i†a_i + 1/2) + 2ω_Cα Σ_edges (a_i†a_j + h.c.)`, zero-point energy included.
pub fn build_photonic_hamiltonian(
    basis: &FockBasis,
    graph: &CavityGraph,
    omega_c: f64,
    two_omega_alpha: f64,
) -> Result<SparseOperator> {
    let terms = HamiltonianTerms::new(basis, graph)?;
    let zero_point = SparseOperator::identity(basis.dim()).scale_real(0.5 * basis.site_count() as f64);
    terms
        .number
        .add(&zero_point)?
        .scale_real(omega_c)
        .add(&terms.hopping.scale_real(two_omega_alpha))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EigenSolver {
    /// Dense Hermitian solver below [`DENSE_LIMIT`] states, Lanczos above.
    Auto,
    Dense,
    Lanczos,
}

/// Residual tolerance of the iterative solver, relative to the operator scale.
pub const LANCZOS_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone)]
pub struct GroundState {
    pub energy: f64,
    /// Normalized amplitudes over the full basis (zero outside the sector).
    /// The first non-negligible amplitude is real and positive.
    pub vector: DVector<Complex64>,
    /// ‖Hψ − Eψ‖
    pub residual: f64,
}

pub fn ground_state(h: &SparseOperator, basis: &FockBasis, particles: u32) -> Result<GroundState> {
    ground_state_with(h, basis, particles, EigenSolver::Auto)
}

pub fn ground_state_with(
    h: &SparseOperator,
    basis: &FockBasis,
    particles: u32,
    solver: EigenSolver,
) -> Result<GroundState> {
    if h.dim() != basis.dim() {
        return Err(Error::DimensionMismatch {
            expected: basis.dim(),
            found: h.dim(),
        });
    }
    let range = basis.sector(particles)?;
    if range.is_empty() {
        return Err(Error::EmptySector(particles));
    }
    let block = h.block(range.clone());
    let dense = match solver {
        EigenSolver::Auto => block.dim() < DENSE_LIMIT,
        EigenSolver::Dense => true,
        EigenSolver::Lanczos => false,
    };
    let (energy, mut local) = if dense {
        dense_lowest(&block)
    } else {
        lanczos_lowest(&block)?
    };
    fix_phase(&mut local);
    let residual = (block.apply(&local) - local.scale(energy)).norm();
    let mut vector = DVector::zeros(basis.dim());
    vector.rows_mut(range.start, range.len()).copy_from(&local);
    Ok(GroundState {
        energy,
        vector,
        residual,
    })
}

fn dense_lowest(op: &SparseOperator) -> (f64, DVector<Complex64>) {
    let eig = SymmetricEigen::new(op.to_dense());
    let k = eig.eigenvalues.imin();
    (eig.eigenvalues[k], eig.eigenvectors.column(k).into_owned())
}

/// Max absolute row sum, an upper bound on the spectral norm.
fn operator_scale(op: &SparseOperator) -> f64 {
    let mut rows = vec![0.0; op.dim()];
    for &(r, _, v) in op.entries() {
        rows[r] += v.norm();
    }
    rows.into_iter().fold(0.0, f64::max)
}

/// Lowest eigenpair of a Hermitian operator by restarted Lanczos with full
/// reorthogonalization. Deterministic start vector.
fn lanczos_lowest(op: &SparseOperator) -> Result<(f64, DVector<Complex64>)> {
    const KRYLOV: usize = 120;
    const RESTARTS: usize = 60;
    let n = op.dim();
    let scale = operator_scale(op).max(1.0);
    let tol = LANCZOS_TOLERANCE * scale;

    let mut start = DVector::from_fn(n, |i, _| {
        let phase = (i as f64 * 0.618_033_988_749_895).fract();
        Complex64::new(0.5 + phase, 0.0)
    });
    start /= Complex64::new(start.norm(), 0.0);

    let mut best = (f64::NAN, start.clone(), f64::INFINITY);
    for _ in 0..RESTARTS {
        let m = KRYLOV.min(n);
        let mut basis: Vec<DVector<Complex64>> = Vec::with_capacity(m);
        let mut alpha = Vec::with_capacity(m);
        let mut beta: Vec<f64> = Vec::with_capacity(m);
        let mut v = start.clone();
        for j in 0..m {
            let mut w = op.apply(&v);
            let a = v.dotc(&w).re;
            alpha.push(a);
            basis.push(v.clone());
            // full reorthogonalization, twice for stability
            for _ in 0..2 {
                for q in &basis {
                    let c = q.dotc(&w);
                    w -= q * c;
                }
            }
            let b = w.norm();
            if j + 1 == m || b <= 1e-14 * scale {
                break;
            }
            beta.push(b);
            v = w / Complex64::new(b, 0.0);
        }
        let k = alpha.len();
        let t = DMatrix::from_fn(k, k, |r, c| {
            if r == c {
                alpha[r]
            } else if r + 1 == c {
                beta[r]
            } else if c + 1 == r {
                beta[c]
            } else {
                0.0
            }
        });
        let eig = SymmetricEigen::new(t);
        let idx = eig.eigenvalues.imin();
        let theta = eig.eigenvalues[idx];
        let mut ritz = DVector::zeros(n);
        for (q, &y) in basis.iter().zip(eig.eigenvectors.column(idx).iter()) {
            ritz += q * Complex64::new(y, 0.0);
        }
        ritz /= Complex64::new(ritz.norm(), 0.0);
        let residual = (op.apply(&ritz) - ritz.scale(theta)).norm();
        if residual < best.2 {
            best = (theta, ritz.clone(), residual);
        }
        if residual <= tol {
            return Ok((theta, ritz));
        }
        start = ritz;
    }
    Err(Error::NoConvergence { residual: best.2 })
}

fn fix_phase(v: &mut DVector<Complex64>) {
    let cutoff = 1e-12 * v.iter().map(|z| z.norm()).fold(0.0, f64::max);
    if let Some(first) = v.iter().find(|z| z.norm() > cutoff).copied() {
        let rot = first.conj() / first.norm();
        v.apply(|z| *z *= rot);
    }
}

/// Mean and variance of one site's occupation number.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SiteStatistics {
    /// ⟨n_i⟩
    pub mean_n: f64,
    /// F_i = ⟨n_i²⟩ − ⟨n_i⟩²
    pub fluctuation: f64,
}

/// States whose Fock-basis populations are available. Number operators are
/// diagonal in the Fock basis, so populations fix all site statistics.
pub trait FockPopulations {
    fn populations(&self) -> Vec<f64>;
}

impl FockPopulations for DVector<Complex64> {
    fn populations(&self) -> Vec<f64> {
        self.iter().map(|z| z.norm_sqr()).collect()
    }
}

impl FockPopulations for DMatrix<Complex64> {
    fn populations(&self) -> Vec<f64> {
        self.diagonal().iter().map(|z| z.re).collect()
    }
}

/// Tolerance on the norm (or trace) of states passed to [`site_statistics`].
pub const NORMALIZATION_TOLERANCE: f64 = 1e-8;

pub fn site_statistics<S: FockPopulations + ?Sized>(
    state: &S,
    basis: &FockBasis,
    site: usize,
) -> Result<SiteStatistics> {
    if site >= basis.site_count() {
        return Err(Error::InvalidSite {
            site,
            sites: basis.site_count(),
        });
    }
    let pops = state.populations();
    statistics_from_populations(&pops, basis, site)
}

pub(crate) fn statistics_from_populations(
    pops: &[f64],
    basis: &FockBasis,
    site: usize,
) -> Result<SiteStatistics> {
    if pops.len() != basis.dim() {
        return Err(Error::DimensionMismatch {
            expected: basis.dim(),
            found: pops.len(),
        });
    }
    let total: f64 = pops.iter().sum();
    if (total - 1.0).abs() > NORMALIZATION_TOLERANCE {
        return Err(Error::NotNormalized(total));
    }
    let occ = |k: usize| basis.state(k)[site] as f64;
    let mean_n: f64 = pops.iter().enumerate().map(|(k, p)| p * occ(k)).sum();
    let fluctuation = pops
        .iter()
        .enumerate()
        .map(|(k, p)| p * (occ(k) - mean_n).powi(2))
        .sum();
    Ok(SiteStatistics {
        mean_n,
        fluctuation,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn interaction_diagonal_two_particles() {
        let basis = FockBasis::new(2, 2).unwrap();
        let graph = CavityGraph::cycle(2).unwrap();
        let h = build_bh_hamiltonian(&basis, &graph, &BHParams::new(1.0, 0.0, 0.0)).unwrap();
        for (occ, e) in [([2, 0], 2.0), ([1, 1], 0.0), ([0, 2], 2.0)] {
            let k = basis.state_index(&occ).unwrap();
            assert_eq!(h.get(k, k), c(e));
        }
        assert!(h.entries().iter().all(|&(r, col, _)| r == col));
    }

    #[test]
    fn zero_couplings_give_zero_matrix() {
        let basis = FockBasis::new(3, 3).unwrap();
        let graph = CavityGraph::cycle(3).unwrap();
        let h = build_bh_hamiltonian(&basis, &graph, &BHParams::default()).unwrap();
        assert_eq!(h.nnz(), 0);
    }

    #[test]
    fn mismatched_graph_rejected() {
        let basis = FockBasis::new(2, 2).unwrap();
        let graph = CavityGraph::cycle(3).unwrap();
        assert!(build_bh_hamiltonian(&basis, &graph, &BHParams::default()).is_err());
        assert!(build_photonic_hamiltonian(&basis, &graph, 1.0, 0.1).is_err());
    }

    #[test]
    fn hermitian_and_number_conserving() {
        let basis = FockBasis::new(3, 3).unwrap();
        let graph = CavityGraph::cycle(3).unwrap();
        let h = build_bh_hamiltonian(&basis, &graph, &BHParams::new(0.7, -1.3, 0.2)).unwrap();
        assert_eq!(h.hermiticity_error(), 0.0);
        let n = total_number_operator(&basis);
        assert_eq!(h.commutator(&n).unwrap().max_abs(), 0.0);
    }

    #[test]
    fn photonic_single_cavity_one_photon() {
        let basis = FockBasis::new(1, 1).unwrap();
        let graph = CavityGraph::cycle(1).unwrap();
        let h = build_photonic_hamiltonian(&basis, &graph, 3.0, 0.4).unwrap();
        assert_eq!(h.get(1, 1), c(4.5));
        assert_eq!(h.get(0, 0), c(1.5));
    }

    #[test]
    fn photonic_two_cavities_split_by_hopping() {
        let basis = FockBasis::new(2, 1).unwrap();
        let graph = CavityGraph::cycle(2).unwrap();
        let (wc, hop) = (5.0, 0.3);
        let h = build_photonic_hamiltonian(&basis, &graph, wc, hop).unwrap();
        let block = h.block(basis.sector(1).unwrap());
        let mut eig: Vec<f64> = SymmetricEigen::new(block.to_dense()).eigenvalues.iter().copied().collect();
        eig.sort_by(f64::total_cmp);
        assert_relative_eq!(eig[0], 2.0 * wc - hop, max_relative = 1e-14);
        assert_relative_eq!(eig[1], 2.0 * wc + hop, max_relative = 1e-14);

        let bare = build_photonic_hamiltonian(&basis, &graph, wc, 0.0).unwrap();
        assert!(bare.entries().iter().all(|&(r, col, _)| r == col));
    }

    #[test]
    fn decoupled_sites_mott_state() {
        let basis = FockBasis::new(3, 3).unwrap();
        let graph = CavityGraph::cycle(3).unwrap();
        let h = build_bh_hamiltonian(&basis, &graph, &BHParams::new(1.0, 0.0, 0.0)).unwrap();
        let gs = ground_state(&h, &basis, 3).unwrap();
        assert!(gs.energy.abs() < 1e-14);
        let k = basis.state_index(&[1, 1, 1]).unwrap();
        assert_relative_eq!(gs.vector[k].re, 1.0, max_relative = 1e-12);
        for site in 0..3 {
            let s = site_statistics(&gs.vector, &basis, site).unwrap();
            assert!(s.fluctuation.abs() < 1e-12);
        }
    }

    #[test]
    fn free_bosons_on_two_sites() {
        let basis = FockBasis::new(2, 2).unwrap();
        let graph = CavityGraph::cycle(2).unwrap();
        let h = build_bh_hamiltonian(&basis, &graph, &BHParams::new(0.0, 1.0, 0.0)).unwrap();
        let gs = ground_state(&h, &basis, 2).unwrap();
        assert!((gs.energy + 2.0).abs() < 1e-12);
        let expected = [([2, 0], 0.5), ([1, 1], -0.5 * 2f64.sqrt()), ([0, 2], 0.5)];
        for (occ, amp) in expected {
            let k = basis.state_index(&occ).unwrap();
            assert!((gs.vector[k] - c(amp)).norm() < 1e-12, "{occ:?}");
        }
        let s = site_statistics(&gs.vector, &basis, 0).unwrap();
        assert!((s.mean_n - 1.0).abs() < 1e-12);
        assert!((s.fluctuation - 0.5).abs() < 1e-12);
    }

    #[test]
    fn strong_interaction_suppresses_fluctuations() {
        let basis = FockBasis::new(3, 3).unwrap();
        let graph = CavityGraph::cycle(3).unwrap();
        let h = build_bh_hamiltonian(&basis, &graph, &BHParams::new(100.0, 1.0, 0.0)).unwrap();
        let gs = ground_state(&h, &basis, 3).unwrap();
        let s = site_statistics(&gs.vector, &basis, 0).unwrap();
        assert!(s.fluctuation < 0.01);
        // frozen from an independent numpy eigh of the 10x10 block (J/κ = 0.01)
        assert_relative_eq!(s.fluctuation, 1.9399170976774904e-4, max_relative = 1e-8);
    }

    #[test]
    fn lanczos_matches_dense() {
        let basis = FockBasis::new(6, 6).unwrap();
        let graph = CavityGraph::cycle(6).unwrap();
        let h = build_bh_hamiltonian(&basis, &graph, &BHParams::new(0.8, 1.0, 0.1)).unwrap();
        let dense = ground_state_with(&h, &basis, 6, EigenSolver::Dense).unwrap();
        let iter = ground_state_with(&h, &basis, 6, EigenSolver::Lanczos).unwrap();
        assert_relative_eq!(dense.energy, iter.energy, max_relative = 1e-10);
        let overlap = dense.vector.dotc(&iter.vector).norm();
        assert!((overlap - 1.0).abs() < 1e-9);
        assert!(iter.residual < 1e-8);
    }

    #[test]
    fn large_sector_uses_iterative_solver() {
        let basis = FockBasis::new(7, 7).unwrap();
        assert!(basis.sector(7).unwrap().len() > DENSE_LIMIT);
        let graph = CavityGraph::chain(7).unwrap();
        let h = build_bh_hamiltonian(&basis, &graph, &BHParams::new(1.0, 0.2, 0.0)).unwrap();
        let gs = ground_state(&h, &basis, 7).unwrap();
        assert!(gs.residual <= LANCZOS_TOLERANCE * operator_scale(&h.block(basis.sector(7).unwrap())));
        assert!((gs.vector.norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn phase_convention() {
        let basis = FockBasis::new(2, 2).unwrap();
        let graph = CavityGraph::cycle(2).unwrap();
        let h = build_bh_hamiltonian(&basis, &graph, &BHParams::new(0.3, -1.0, 0.0)).unwrap();
        let gs = ground_state(&h, &basis, 2).unwrap();
        let first = gs.vector.iter().find(|z| z.norm() > 1e-12).unwrap();
        assert!(first.re > 0.0 && first.im == 0.0);
    }

    #[test]
    fn empty_sector_rejected() {
        let basis = FockBasis::new(2, 2).unwrap();
        let h = SparseOperator::zeros(basis.dim());
        assert!(matches!(ground_state(&h, &basis, 3), Err(Error::EmptySector(3))));
    }

    #[test]
    fn statistics_of_mixture() {
        let basis = FockBasis::new(2, 1).unwrap();
        let mut rho = DMatrix::<Complex64>::zeros(3, 3);
        rho[(basis.state_index(&[1, 0]).unwrap(), basis.state_index(&[1, 0]).unwrap())] = c(0.5);
        rho[(basis.state_index(&[0, 1]).unwrap(), basis.state_index(&[0, 1]).unwrap())] = c(0.5);
        let s = site_statistics(&rho, &basis, 0).unwrap();
        assert_eq!(s.mean_n, 0.5);
        assert_eq!(s.fluctuation, 0.25);
    }

    #[test]
    fn statistics_reject_bad_input() {
        let basis = FockBasis::new(2, 1).unwrap();
        let v = DVector::from_element(3, c(1.0));
        assert!(matches!(site_statistics(&v, &basis, 0), Err(Error::NotNormalized(_))));
        let v = DVector::from_element(3, c(1.0 / 3f64.sqrt()));
        assert!(site_statistics(&v, &basis, 2).is_err());
        let short = DVector::from_element(2, c(1.0 / 2f64.sqrt()));
        assert!(site_statistics(&short, &basis, 0).is_err());
    }
}
