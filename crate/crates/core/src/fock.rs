//! Truncated bosonic Fock space on a cavity graph, with sparse operators.

use std::collections::{BTreeMap, HashMap};
use std::ops::Range;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Default cap on the number of basis states.
pub const DEFAULT_DIM_CAP: usize = 200_000;

/// Operators on spaces smaller than this may be materialized densely.
pub const DENSE_LIMIT: usize = 512;

/// Number of occupation vectors of `sites` modes with total at most `max_total`,
/// i.e. `C(max_total + sites, sites)`. Saturates at `u128::MAX`.
pub fn fock_dimension(sites: usize, max_total: u32) -> u128 {
    let n = max_total as u128;
    let mut dim: u128 = 1;
    for i in 1..=sites as u128 {
        // dim * (n + i) is divisible by i at every step
        dim = match dim.checked_mul(n + i) {
            Some(v) => v / i,
            None => return u128::MAX,
        };
    }
    dim
}

/// Occupation-number basis ordered by total particle number, then
/// lexicographically within each number sector.
#[derive(Debug, Clone)]
pub struct FockBasis {
    sites: usize,
    max_total: u32,
    states: Vec<Vec<u32>>,
    index: HashMap<Vec<u32>, usize>,
    sector_starts: Vec<usize>,
}

impl FockBasis {
    pub fn new(sites: usize, max_total: u32) -> Result<Self> {
        Self::with_cap(sites, max_total, DEFAULT_DIM_CAP)
    }

    pub fn with_cap(sites: usize, max_total: u32, cap: usize) -> Result<Self> {
        if sites == 0 {
            return Err(Error::NoSites);
        }
        let dim = fock_dimension(sites, max_total);
        if dim > cap as u128 {
            return Err(Error::BasisTooLarge {
                sites,
                max_total,
                dim,
                cap,
            });
        }
        let mut states = Vec::with_capacity(dim as usize);
        let mut sector_starts = Vec::with_capacity(max_total as usize + 2);
        let mut scratch = vec![0u32; sites];
        for n in 0..=max_total {
            sector_starts.push(states.len());
            compositions(n, 0, &mut scratch, &mut states);
        }
        sector_starts.push(states.len());
        let index = states
            .iter()
            .enumerate()
            .map(|(k, s)| (s.clone(), k))
            .collect();
        Ok(Self {
            sites,
            max_total,
            states,
            index,
            sector_starts,
        })
    }

    pub fn site_count(&self) -> usize {
        self.sites
    }

    pub fn max_total(&self) -> u32 {
        self.max_total
    }

    pub fn dim(&self) -> usize {
        self.states.len()
    }

    pub fn states(&self) -> &[Vec<u32>] {
        &self.states
    }

    pub fn state(&self, k: usize) -> &[u32] {
        &self.states[k]
    }

    /// Ordinal of an occupation vector.
    pub fn state_index(&self, occ: &[u32]) -> Result<usize> {
        if occ.len() != self.sites {
            return Err(Error::DimensionMismatch {
                expected: self.sites,
                found: occ.len(),
            });
        }
        self.index
            .get(occ)
            .copied()
            .ok_or_else(|| Error::StateNotInBasis(occ.to_vec()))
    }

    /// Contiguous index range of states with exactly `n` bosons.
    pub fn sector(&self, n: u32) -> Result<Range<usize>> {
        if n > self.max_total {
            return Err(Error::EmptySector(n));
        }
        let n = n as usize;
        Ok(self.sector_starts[n]..self.sector_starts[n + 1])
    }

    fn check_site(&self, site: usize) -> Result<()> {
        if site >= self.sites {
            Err(Error::InvalidSite {
                site,
                sites: self.sites,
            })
        } else {
            Ok(())
        }
    }
}

/// Appends all vectors with `remaining` bosons spread over `slot..` in lexicographic order.
fn compositions(remaining: u32, slot: usize, scratch: &mut [u32], out: &mut Vec<Vec<u32>>) {
    if slot + 1 == scratch.len() {
        scratch[slot] = remaining;
        out.push(scratch.to_vec());
        return;
    }
    for k in 0..=remaining {
        scratch[slot] = k;
        compositions(remaining - k, slot + 1, scratch, out);
    }
    scratch[slot] = 0;
}

/// Square operator stored as coordinate triplets, sorted row-major with no
/// duplicate coordinates and no explicit zeros.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseOperator {
    dim: usize,
    entries: Vec<(usize, usize, Complex64)>,
}

impl SparseOperator {
    pub fn zeros(dim: usize) -> Self {
        Self {
            dim,
            entries: Vec::new(),
        }
    }

    pub fn identity(dim: usize) -> Self {
        Self {
            dim,
            entries: (0..dim).map(|k| (k, k, Complex64::new(1.0, 0.0))).collect(),
        }
    }

    /// Builds an operator from triplets, summing repeated coordinates.
    pub fn from_triplets<I>(dim: usize, triplets: I) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, usize, Complex64)>,
    {
        let mut acc: BTreeMap<(usize, usize), Complex64> = BTreeMap::new();
        for (r, c, v) in triplets {
            if r >= dim || c >= dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: r.max(c) + 1,
                });
            }
            *acc.entry((r, c)).or_default() += v;
        }
        let entries = acc
            .into_iter()
            .filter(|(_, v)| *v != Complex64::new(0.0, 0.0))
            .map(|((r, c), v)| (r, c, v))
            .collect();
        Ok(Self { dim, entries })
    }

    fn from_real_triplets<I>(dim: usize, triplets: I) -> Self
    where
        I: IntoIterator<Item = (usize, usize, f64)>,
    {
        Self::from_triplets(
            dim,
            triplets
                .into_iter()
                .map(|(r, c, v)| (r, c, Complex64::new(v, 0.0))),
        )
        .expect("basis-generated coordinates are in range")
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn entries(&self) -> &[(usize, usize, Complex64)] {
        &self.entries
    }

    pub fn nnz(&self) -> usize {
        self.entries.len()
    }

    pub fn get(&self, row: usize, col: usize) -> Complex64 {
        self.entries
            .binary_search_by(|&(r, c, _)| (r, c).cmp(&(row, col)))
            .map(|k| self.entries[k].2)
            .unwrap_or_default()
    }

    pub fn adjoint(&self) -> Self {
        let mut entries: Vec<_> = self
            .entries
            .iter()
            .map(|&(r, c, v)| (c, r, v.conj()))
            .collect();
        entries.sort_by_key(|&(r, c, _)| (r, c));
        Self {
            dim: self.dim,
            entries,
        }
    }

    /// Largest entrywise deviation between the operator and its adjoint.
    pub fn hermiticity_error(&self) -> f64 {
        let adj = self.adjoint();
        match self.sub(&adj) {
            Ok(d) => d.max_abs(),
            Err(_) => f64::INFINITY,
        }
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.hermiticity_error() <= tol
    }

    pub fn max_abs(&self) -> f64 {
        self.entries.iter().map(|e| e.2.norm()).fold(0.0, f64::max)
    }

    fn check_dim(&self, other: &Self) -> Result<()> {
        if self.dim != other.dim {
            Err(Error::DimensionMismatch {
                expected: self.dim,
                found: other.dim,
            })
        } else {
            Ok(())
        }
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_dim(other)?;
        Self::from_triplets(
            self.dim,
            self.entries.iter().chain(other.entries.iter()).copied(),
        )
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.add(&other.scale(Complex64::new(-1.0, 0.0)))
    }

    pub fn scale(&self, factor: Complex64) -> Self {
        if factor == Complex64::new(0.0, 0.0) {
            return Self::zeros(self.dim);
        }
        Self {
            dim: self.dim,
            entries: self
                .entries
                .iter()
                .map(|&(r, c, v)| (r, c, v * factor))
                .collect(),
        }
    }

    pub fn scale_real(&self, factor: f64) -> Self {
        self.scale(Complex64::new(factor, 0.0))
    }

    /// Matrix product `self · other`.
    pub fn compose(&self, other: &Self) -> Result<Self> {
        self.check_dim(other)?;
        let mut rows: Vec<Vec<(usize, Complex64)>> = vec![Vec::new(); self.dim];
        for &(r, c, v) in &other.entries {
            rows[r].push((c, v));
        }
        Self::from_triplets(
            self.dim,
            self.entries.iter().flat_map(|&(r, k, a)| {
                rows[k].iter().map(move |&(c, b)| (r, c, a * b))
            }),
        )
    }

    /// `[self, other] = self·other − other·self`.
    pub fn commutator(&self, other: &Self) -> Result<Self> {
        self.compose(other)?.sub(&other.compose(self)?)
    }

    pub fn apply(&self, v: &DVector<Complex64>) -> DVector<Complex64> {
        let mut out = DVector::zeros(self.dim);
        for &(r, c, a) in &self.entries {
            out[r] += a * v[c];
        }
        out
    }

    pub fn to_dense(&self) -> DMatrix<Complex64> {
        let mut m = DMatrix::zeros(self.dim, self.dim);
        for &(r, c, v) in &self.entries {
            m[(r, c)] = v;
        }
        m
    }

    /// Principal sub-block on `range × range`, re-indexed from zero.
    pub fn block(&self, range: Range<usize>) -> Self {
        let start = range.start;
        let entries = self
            .entries
            .iter()
            .filter(|&&(r, c, _)| range.contains(&r) && range.contains(&c))
            .map(|&(r, c, v)| (r - start, c - start, v))
            .collect();
        Self {
            dim: range.len(),
            entries,
        }
    }
}

/// Nearest-neighbour structure of the cavity array.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CavityGraph {
    sites: usize,
    edges: Vec<(usize, usize)>,
}

impl CavityGraph {
    pub fn new(sites: usize, edges: Vec<(usize, usize)>) -> Result<Self> {
        if sites == 0 {
            return Err(Error::NoSites);
        }
        let mut seen = std::collections::HashSet::new();
        for &(i, j) in &edges {
            if i >= sites || j >= sites {
                return Err(Error::InvalidEdge(i, j, "endpoint out of range"));
            }
            if i == j {
                return Err(Error::InvalidEdge(i, j, "self-loop"));
            }
            if !seen.insert((i.min(j), i.max(j))) {
                return Err(Error::InvalidEdge(i, j, "duplicate edge"));
            }
        }
        Ok(Self { sites, edges })
    }

    /// Ring `0-1-…-(M-1)-0` (periodic boundary conditions).
    pub fn cycle(sites: usize) -> Result<Self> {
        let edges = match sites {
            0 => return Err(Error::NoSites),
            1 => Vec::new(),
            2 => vec![(0, 1)],
            m => (0..m).map(|i| (i, (i + 1) % m)).collect(),
        };
        Self::new(sites, edges)
    }

    /// Open chain `0-1-…-(M-1)`.
    pub fn chain(sites: usize) -> Result<Self> {
        Self::new(sites, (1..sites).map(|i| (i - 1, i)).collect())
    }

    pub fn site_count(&self) -> usize {
        self.sites
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    /// Same graph with site `i` renamed to `perm[i]`.
    pub fn relabeled(&self, perm: &[usize]) -> Result<Self> {
        if perm.len() != self.sites {
            return Err(Error::DimensionMismatch {
                expected: self.sites,
                found: perm.len(),
            });
        }
        Self::new(
            self.sites,
            self.edges.iter().map(|&(i, j)| (perm[i], perm[j])).collect(),
        )
    }
}

/// Annihilation operator `a_site`. The creation operator is its adjoint and
/// drops amplitudes that would leave the truncated basis.
pub fn ladder_operator(basis: &FockBasis, site: usize) -> Result<SparseOperator> {
    basis.check_site(site)?;
    let mut triplets = Vec::new();
    let mut target = vec![0u32; basis.site_count()];
    for (k, occ) in basis.states().iter().enumerate() {
        let n = occ[site];
        if n == 0 {
            continue;
        }
        target.copy_from_slice(occ);
        target[site] -= 1;
        let j = basis.state_index(&target)?;
        triplets.push((j, k, (n as f64).sqrt()));
    }
    Ok(SparseOperator::from_real_triplets(basis.dim(), triplets))
}

pub fn creation_operator(basis: &FockBasis, site: usize) -> Result<SparseOperator> {
    Ok(ladder_operator(basis, site)?.adjoint())
}

/// `n_site = a†a`, diagonal in the Fock basis.
pub fn number_operator(basis: &FockBasis, site: usize) -> Result<SparseOperator> {
    basis.check_site(site)?;
    Ok(SparseOperator::from_real_triplets(
        basis.dim(),
        basis
            .states()
            .iter()
            .enumerate()
            .map(|(k, occ)| (k, k, occ[site] as f64)),
    ))
}

pub fn total_number_operator(basis: &FockBasis) -> SparseOperator {
    SparseOperator::from_real_triplets(
        basis.dim(),
        basis
            .states()
            .iter()
            .enumerate()
            .map(|(k, occ)| (k, k, occ.iter().sum::<u32>() as f64)),
    )
}

/// `a_i† a_j + a_j† a_i` for the edge `(i, j)`.
pub fn hopping_operator(basis: &FockBasis, edge: (usize, usize)) -> Result<SparseOperator> {
    let (i, j) = edge;
    if i >= basis.site_count() || j >= basis.site_count() {
        return Err(Error::InvalidEdge(i, j, "endpoint out of range"));
    }
    if i == j {
        return Err(Error::InvalidEdge(i, j, "self-loop"));
    }
    let mut triplets = Vec::new();
    let mut target = vec![0u32; basis.site_count()];
    for (k, occ) in basis.states().iter().enumerate() {
        for (to, from) in [(i, j), (j, i)] {
            if occ[from] == 0 {
                continue;
            }
            target.copy_from_slice(occ);
            target[from] -= 1;
            target[to] += 1;
            let amp = ((occ[from] as f64) * (occ[to] as f64 + 1.0)).sqrt();
            triplets.push((basis.state_index(&target)?, k, amp));
        }
    }
    Ok(SparseOperator::from_real_triplets(basis.dim(), triplets))
}
