//! Disordered nearest-neighbour ring lattices and their chiral structure.

use std::collections::VecDeque;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::RandomStream;

/// Smallest ring with one distinct edge per adjacent pair.
pub const MIN_RING_SITES: usize = 3;

/// Uniform off-diagonal disorder: every coupling is drawn from
/// `[c_mean - half_width, c_mean + half_width]` with `half_width = eta * c_mean`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DisorderSpec {
    c_mean: f64,
    eta: f64,
}

impl DisorderSpec {
    pub fn new(c_mean: f64, eta: f64) -> Result<Self> {
        if !(c_mean.is_finite() && c_mean > 0.0) {
            return Err(Error::InvalidDisorder(format!("c_mean must be positive, got {c_mean}")));
        }
        if !(0.0..=1.0).contains(&eta) {
            return Err(Error::InvalidDisorder(format!("eta must lie in [0, 1], got {eta}")));
        }
        Ok(DisorderSpec { c_mean, eta })
    }

    pub fn c_mean(&self) -> f64 {
        self.c_mean
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    pub fn half_width(&self) -> f64 {
        self.eta * self.c_mean
    }

    /// Closed support `[lo, hi]` of the coupling law.
    pub fn support(&self) -> (f64, f64) {
        (self.c_mean - self.half_width(), self.c_mean + self.half_width())
    }
}

/// Draw `n_sites` i.i.d. couplings. Edge `k` is always the `k`-th draw of
/// `stream`, so the result depends only on `(spec, n_sites, stream)`.
pub fn sample_couplings(spec: &DisorderSpec, n_sites: usize, stream: &RandomStream) -> Result<Vec<f64>> {
    check_ring_size(n_sites)?;
    let (lo, hi) = spec.support();
    let width = hi - lo;
    let mut rng = stream.rng();
    Ok((0..n_sites)
        .map(|_| {
            let u: f64 = rng.random();
            (lo + width * u).min(hi)
        })
        .collect())
}

fn check_ring_size(n_sites: usize) -> Result<()> {
    if n_sites < MIN_RING_SITES {
        return Err(Error::InvalidLattice(format!("ring needs at least {MIN_RING_SITES} sites, got {n_sites}")));
    }
    Ok(())
}

/// One disorder realization of a ring. `couplings[k]` joins site `k` and
/// site `(k + 1) % n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RingLattice {
    couplings: Vec<f64>,
    excited_site: usize,
}

impl RingLattice {
    pub fn new(couplings: Vec<f64>, excited_site: usize) -> Result<Self> {
        check_ring_size(couplings.len())?;
        if let Some(c) = couplings.iter().find(|c| !(c.is_finite() && **c >= 0.0)) {
            return Err(Error::InvalidLattice(format!("coupling {c} is not a finite nonnegative value")));
        }
        if excited_site >= couplings.len() {
            return Err(Error::InvalidLattice(format!(
                "excited site {excited_site} out of range for {} sites",
                couplings.len()
            )));
        }
        Ok(RingLattice { couplings, excited_site })
    }

    /// Uniform ring with every coupling equal to `c`.
    pub fn uniform(n_sites: usize, c: f64, excited_site: usize) -> Result<Self> {
        Self::new(vec![c; n_sites], excited_site)
    }

    pub fn sample(spec: &DisorderSpec, n_sites: usize, excited_site: usize, stream: &RandomStream) -> Result<Self> {
        Self::new(sample_couplings(spec, n_sites, stream)?, excited_site)
    }

    pub fn n_sites(&self) -> usize {
        self.couplings.len()
    }

    pub fn couplings(&self) -> &[f64] {
        &self.couplings
    }

    pub fn excited_site(&self) -> usize {
        self.excited_site
    }

    pub fn into_couplings(self) -> Vec<f64> {
        self.couplings
    }
}

/// Dense real symmetric coupling matrix, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Hamiltonian {
    n: usize,
    entries: Vec<f64>,
}

impl Hamiltonian {
    /// Wrap an arbitrary dense matrix; it must be square and symmetric.
    pub fn from_dense(n: usize, entries: Vec<f64>) -> Result<Self> {
        if n == 0 || entries.len() != n * n {
            return Err(Error::InvalidParameter(format!("expected {n}x{n} entries, got {}", entries.len())));
        }
        for i in 0..n {
            for j in (i + 1)..n {
                if entries[i * n + j] != entries[j * n + i] {
                    return Err(Error::InvalidParameter(format!("matrix is not symmetric at ({i}, {j})")));
                }
            }
        }
        Ok(Hamiltonian { n, entries })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.n + j]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.entries
    }

    /// Frobenius norm.
    pub fn norm(&self) -> f64 {
        self.entries.iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    /// `P H Pᵀ` where row `i` of the result is row `order[i]` of `self`.
    pub fn permuted(&self, order: &[usize]) -> Hamiltonian {
        let n = self.n;
        let mut entries = vec![0.0; n * n];
        for (i, &pi) in order.iter().enumerate() {
            for (j, &pj) in order.iter().enumerate() {
                entries[i * n + j] = self.get(pi, pj);
            }
        }
        Hamiltonian { n, entries }
    }
}

pub fn build_hamiltonian(lattice: &RingLattice) -> Hamiltonian {
    let n = lattice.n_sites();
    let mut entries = vec![0.0; n * n];
    for (k, &c) in lattice.couplings().iter().enumerate() {
        let l = (k + 1) % n;
        entries[k * n + l] = c;
        entries[l * n + k] = c;
    }
    Hamiltonian { n, entries }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Sublattice {
    A,
    B,
}

/// Two-colouring of the coupling graph with the block ordering it induces.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Bipartition {
    pub coloring: Vec<Sublattice>,
    /// All A sites (ascending) followed by all B sites (ascending).
    pub permutation: Vec<usize>,
}

impl Bipartition {
    pub fn a_count(&self) -> usize {
        self.coloring.iter().filter(|s| **s == Sublattice::A).count()
    }

    /// True when `h` reordered by this partition has identically zero A×A and
    /// B×B blocks.
    pub fn block_off_diagonalizes(&self, h: &Hamiltonian) -> bool {
        let p = h.permuted(&self.permutation);
        let na = self.a_count();
        let n = h.dim();
        (0..n).all(|i| (0..n).all(|j| (i < na) != (j < na) || p.get(i, j) == 0.0))
    }
}

/// BFS two-colouring of the graph of nonzero off-diagonal entries.
/// `None` means the graph has an odd cycle, i.e. no chiral block structure.
pub fn find_chiral_permutation(h: &Hamiltonian) -> Option<Bipartition> {
    let n = h.dim();
    let mut color: Vec<Option<Sublattice>> = vec![None; n];
    let mut queue = VecDeque::new();
    for start in 0..n {
        if color[start].is_some() {
            continue;
        }
        color[start] = Some(Sublattice::A);
        queue.push_back(start);
        while let Some(u) = queue.pop_front() {
            let cu = color[u].expect("queued sites are coloured");
            let other = match cu {
                Sublattice::A => Sublattice::B,
                Sublattice::B => Sublattice::A,
            };
            for (v, slot) in color.iter_mut().enumerate() {
                if v == u || h.get(u, v) == 0.0 {
                    continue;
                }
                match *slot {
                    None => {
                        *slot = Some(other);
                        queue.push_back(v);
                    }
                    Some(cv) if cv == cu => return None,
                    Some(_) => {}
                }
            }
        }
    }
    let coloring: Vec<Sublattice> = color.into_iter().map(|c| c.expect("every site visited")).collect();
    let mut permutation: Vec<usize> = (0..n).filter(|&i| coloring[i] == Sublattice::A).collect();
    permutation.extend((0..n).filter(|&i| coloring[i] == Sublattice::B));
    Some(Bipartition { coloring, permutation })
}
