//! Disorder-ensemble simulation and phase-diagram sweeps over (N, η).
//!
//! All randomness descends from one master seed: cell `c`, realization `r`
//! uses `RandomStream::new(master.split(c).split(r).fingerprint())`, so results
//! do not depend on thread count or evaluation order.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::defaults;
use crate::error::{Error, Result};
use crate::evolve::{intensities, single_site_output};
use crate::lattice::{build_hamiltonian, find_chiral_permutation, DisorderSpec, RingLattice, MIN_RING_SITES};
use crate::rng::RandomStream;
use crate::stats::{bootstrap_g2, g2, localization_level, mean_intensities, mean_std, EnsembleRecord};

/// Physical parameters shared by every realization of an ensemble.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnsembleParams {
    pub c_mean: f64,
    pub eta: f64,
    /// Dimensionless propagation distance `z · c̄`.
    pub z_normalized: f64,
    pub excited_site: usize,
}

impl Default for EnsembleParams {
    fn default() -> Self {
        EnsembleParams {
            c_mean: defaults::C_MEAN,
            eta: defaults::ETA,
            z_normalized: defaults::Z_NORMALIZED_EXPERIMENT,
            excited_site: 0,
        }
    }
}

impl EnsembleParams {
    pub fn disorder(&self) -> Result<DisorderSpec> {
        DisorderSpec::new(self.c_mean, self.eta)
    }

    /// Physical distance in mm.
    pub fn z_physical(&self) -> f64 {
        self.z_normalized / self.c_mean
    }

    pub fn validate(&self, n_sites: usize) -> Result<()> {
        self.disorder()?;
        if n_sites < MIN_RING_SITES {
            return Err(Error::InvalidLattice(format!("ring needs at least {MIN_RING_SITES} sites, got {n_sites}")));
        }
        if !(self.z_normalized.is_finite() && self.z_normalized >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "normalized distance must be finite and >= 0, got {}",
                self.z_normalized
            )));
        }
        if self.excited_site >= n_sites {
            return Err(Error::InvalidLattice(format!(
                "excited site {} out of range for {n_sites} sites",
                self.excited_site
            )));
        }
        Ok(())
    }
}

/// Simulate one realization from its own seed.
pub fn simulate_realization(n_sites: usize, params: &EnsembleParams, realization_seed: u64) -> Result<EnsembleRecord> {
    let spec = params.disorder()?;
    let lattice = RingLattice::sample(&spec, n_sites, params.excited_site, &RandomStream::new(realization_seed))?;
    let out = single_site_output(&lattice, params.z_physical())?;
    EnsembleRecord::new(realization_seed, lattice.into_couplings(), &intensities(&out), params.excited_site)
}

/// `size` realizations; realization `r` is seeded by `stream.split(r)`.
pub fn simulate_ensemble(
    n_sites: usize,
    params: &EnsembleParams,
    size: usize,
    stream: &RandomStream,
) -> Result<Vec<EnsembleRecord>> {
    params.validate(n_sites)?;
    (0..size)
        .into_par_iter()
        .map(|r| simulate_realization(n_sites, params, stream.split(r as u64).fingerprint()))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepGrid {
    pub site_counts: Vec<usize>,
    pub disorder_levels: Vec<f64>,
    pub c_mean: f64,
    pub z_normalized: f64,
    pub ensemble_size: usize,
    /// Bootstrap resamples per cell.
    pub repeats: usize,
    pub master_seed: u64,
    pub excited_site: usize,
}

impl Default for SweepGrid {
    fn default() -> Self {
        SweepGrid {
            site_counts: (3..=30).collect(),
            disorder_levels: (1..=20).map(|k| k as f64 * 0.05).collect(),
            c_mean: defaults::C_MEAN,
            z_normalized: defaults::Z_NORMALIZED_FIGURE,
            ensemble_size: defaults::SIMULATION_REPEATS * defaults::ENSEMBLE_SIZE,
            repeats: crate::stats::DEFAULT_REPEATS,
            master_seed: 0,
            excited_site: 0,
        }
    }
}

impl SweepGrid {
    pub fn validate(&self) -> Result<()> {
        if self.site_counts.is_empty() || self.disorder_levels.is_empty() {
            return Err(Error::InvalidParameter("sweep grid axes must be nonempty".into()));
        }
        if self.ensemble_size < 2 {
            return Err(Error::InvalidParameter(format!("ensemble size must be >= 2, got {}", self.ensemble_size)));
        }
        if self.repeats < 2 {
            return Err(Error::InvalidParameter(format!("repeats must be >= 2, got {}", self.repeats)));
        }
        for &n in &self.site_counts {
            for &eta in &self.disorder_levels {
                self.params(eta).validate(n)?;
            }
        }
        Ok(())
    }

    pub fn params(&self, eta: f64) -> EnsembleParams {
        EnsembleParams { c_mean: self.c_mean, eta, z_normalized: self.z_normalized, excited_site: self.excited_site }
    }

    pub fn cell_index(&self, n_index: usize, eta_index: usize) -> usize {
        n_index * self.disorder_levels.len() + eta_index
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseCell {
    pub n_sites: usize,
    pub eta: f64,
    pub g2_mean: f64,
    pub g2_std: f64,
    pub lambda_mean: f64,
    pub chiral: bool,
}

/// Simulate one grid point. g² comes from bootstrapping the cell's ensemble,
/// λ from its site-averaged intensities.
pub fn run_cell(n_sites: usize, eta: f64, grid: &SweepGrid, stream: &RandomStream) -> Result<PhaseCell> {
    let params = grid.params(eta);
    let records = simulate_ensemble(n_sites, &params, grid.ensemble_size, &stream.split(0))?;
    let report = bootstrap_g2(&records, grid.ensemble_size, grid.repeats, &stream.split(1))?;
    let lambda_mean = localization_level(&mean_intensities(&records)?)?;
    let lattice = RingLattice::new(records[0].couplings.clone(), params.excited_site)?;
    let chiral = find_chiral_permutation(&build_hamiltonian(&lattice)).is_some();
    Ok(PhaseCell { n_sites, eta, g2_mean: report.g2_mean, g2_std: report.g2_std, lambda_mean, chiral })
}

/// Cells in row-major `(n_sites, eta)` order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseMap {
    pub site_counts: Vec<usize>,
    pub disorder_levels: Vec<f64>,
    pub cells: Vec<PhaseCell>,
}

impl PhaseMap {
    pub fn get(&self, n_index: usize, eta_index: usize) -> &PhaseCell {
        &self.cells[n_index * self.disorder_levels.len() + eta_index]
    }

    pub fn find(&self, n_sites: usize, eta_index: usize) -> Option<&PhaseCell> {
        let i = self.site_counts.iter().position(|&n| n == n_sites)?;
        Some(self.get(i, eta_index))
    }

    pub fn to_csv(&self) -> String {
        let mut out = format!("{PHASE_MAP_HEADER}\n");
        for c in &self.cells {
            out.push_str(&format!(
                "{},{},{},{},{},{}\n",
                c.n_sites, c.eta, c.g2_mean, c.g2_std, c.lambda_mean, c.chiral
            ));
        }
        out
    }

    /// Parse the table written by [`PhaseMap::to_csv`]. Rows must be ordered
    /// by site count, then disorder level.
    pub fn from_csv(text: &str) -> Result<PhaseMap> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        if lines.next().map(str::trim) != Some(PHASE_MAP_HEADER) {
            return Err(Error::Table(format!("expected header `{PHASE_MAP_HEADER}`")));
        }
        let mut cells = Vec::new();
        for (row, line) in lines.enumerate() {
            let fields: Vec<&str> = line.split(',').map(str::trim).collect();
            if fields.len() != 6 {
                return Err(Error::Table(format!("row {}: expected 6 fields, found {}", row + 1, fields.len())));
            }
            let num = |i: usize| {
                fields[i]
                    .parse::<f64>()
                    .map_err(|_| Error::Table(format!("row {}: bad number `{}`", row + 1, fields[i])))
            };
            cells.push(PhaseCell {
                n_sites: fields[0]
                    .parse()
                    .map_err(|_| Error::Table(format!("row {}: bad site count `{}`", row + 1, fields[0])))?,
                eta: num(1)?,
                g2_mean: num(2)?,
                g2_std: num(3)?,
                lambda_mean: num(4)?,
                chiral: fields[5]
                    .parse()
                    .map_err(|_| Error::Table(format!("row {}: bad flag `{}`", row + 1, fields[5])))?,
            });
        }
        let Some(first) = cells.first() else {
            return Err(Error::Table("no rows".into()));
        };
        let disorder_levels: Vec<f64> =
            cells.iter().take_while(|c| c.n_sites == first.n_sites).map(|c| c.eta).collect();
        let n_eta = disorder_levels.len();
        if cells.len() % n_eta != 0 {
            return Err(Error::Table("rows do not form a full grid".into()));
        }
        let site_counts: Vec<usize> = cells.chunks(n_eta).map(|c| c[0].n_sites).collect();
        for (i, chunk) in cells.chunks(n_eta).enumerate() {
            let consistent =
                chunk.iter().zip(&disorder_levels).all(|(c, &e)| c.n_sites == site_counts[i] && c.eta == e);
            if !consistent || site_counts[..i].contains(&site_counts[i]) {
                return Err(Error::Table(format!("block for {} sites is not aligned with the grid", site_counts[i])));
            }
        }
        Ok(PhaseMap { site_counts, disorder_levels, cells })
    }
}

const PHASE_MAP_HEADER: &str = "n_sites,eta,g2_mean,g2_std,lambda_mean,chiral";

pub fn gap_map(grid: &SweepGrid) -> Result<PhaseMap> {
    grid.validate()?;
    let master = RandomStream::new(grid.master_seed);
    let n_eta = grid.disorder_levels.len();
    let cells = (0..grid.site_counts.len() * n_eta)
        .into_par_iter()
        .map(|idx| {
            let n = grid.site_counts[idx / n_eta];
            let eta = grid.disorder_levels[idx % n_eta];
            run_cell(n, eta, grid, &master.split(idx as u64))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(PhaseMap { site_counts: grid.site_counts.clone(), disorder_levels: grid.disorder_levels.clone(), cells })
}

/// One `(even N, N − 1)` comparison at a disorder level.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParityComparison {
    pub n_even: usize,
    pub eta: f64,
    pub g2_difference: f64,
    pub lambda: f64,
    pub marked: bool,
    pub boundary: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundEstimate {
    pub bound: f64,
    pub gap_threshold: f64,
    pub comparisons: Vec<ParityComparison>,
}

impl BoundEstimate {
    pub fn boundary_count(&self) -> usize {
        self.comparisons.iter().filter(|c| c.boundary).count()
    }
}

/// Locate the localization level separating the region where the parity gap
/// is resolvable from the one where it is not.
///
/// Each even `N` is paired with `N − 1`. A pair is *marked* when
/// `|g²(N) − g²(N − 1)| < gap_threshold`. Marked pairs with at least one
/// unmarked neighbour on the (pair, η) grid form the boundary; the bound is
/// the median over boundary pairs of the pair-averaged λ taken from `loc`.
pub fn derive_bound(gap: &PhaseMap, loc: &PhaseMap, gap_threshold: f64) -> Result<BoundEstimate> {
    if gap.site_counts != loc.site_counts || gap.disorder_levels != loc.disorder_levels {
        return Err(Error::InvalidParameter("gap and localization maps are not co-indexed".into()));
    }
    if !(gap_threshold.is_finite() && gap_threshold >= 0.0) {
        return Err(Error::InvalidParameter(format!("gap threshold must be >= 0, got {gap_threshold}")));
    }
    let pairs: Vec<usize> =
        gap.site_counts.iter().copied().filter(|&n| n % 2 == 0 && gap.site_counts.contains(&(n - 1))).collect();
    let n_eta = gap.disorder_levels.len();
    if pairs.is_empty() {
        return Err(Error::NoBoundary("grid has no adjacent odd/even site counts".into()));
    }

    let mut comparisons = Vec::with_capacity(pairs.len() * n_eta);
    for &n in &pairs {
        for e in 0..n_eta {
            let even = gap.find(n, e).expect("paired count is on the grid");
            let odd = gap.find(n - 1, e).expect("paired count is on the grid");
            let g2_difference = (even.g2_mean - odd.g2_mean).abs();
            let lambda = 0.5 * (loc.find(n, e).unwrap().lambda_mean + loc.find(n - 1, e).unwrap().lambda_mean);
            comparisons.push(ParityComparison {
                n_even: n,
                eta: gap.disorder_levels[e],
                g2_difference,
                lambda,
                marked: g2_difference < gap_threshold,
                boundary: false,
            });
        }
    }

    let marked = |p: usize, e: usize| comparisons[p * n_eta + e].marked;
    let mut boundary_flags = vec![false; comparisons.len()];
    for p in 0..pairs.len() {
        for e in 0..n_eta {
            if !marked(p, e) {
                continue;
            }
            let mut neighbours = Vec::with_capacity(4);
            if p > 0 {
                neighbours.push((p - 1, e));
            }
            if p + 1 < pairs.len() {
                neighbours.push((p + 1, e));
            }
            if e > 0 {
                neighbours.push((p, e - 1));
            }
            if e + 1 < n_eta {
                neighbours.push((p, e + 1));
            }
            boundary_flags[p * n_eta + e] = neighbours.iter().any(|&(q, f)| !marked(q, f));
        }
    }
    for (c, b) in comparisons.iter_mut().zip(boundary_flags) {
        c.boundary = b;
    }

    let mut lambdas: Vec<f64> = comparisons.iter().filter(|c| c.boundary).map(|c| c.lambda).collect();
    if lambdas.is_empty() {
        let n_marked = comparisons.iter().filter(|c| c.marked).count();
        return Err(Error::NoBoundary(format!(
            "{n_marked} of {} parity pairs marked at threshold {gap_threshold}",
            comparisons.len()
        )));
    }
    lambdas.sort_by(f64::total_cmp);
    let m = lambdas.len();
    let bound = if m % 2 == 1 { lambdas[m / 2] } else { 0.5 * (lambdas[m / 2 - 1] + lambdas[m / 2]) };
    Ok(BoundEstimate { bound, gap_threshold, comparisons })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Band {
    pub mean: f64,
    pub std: f64,
}

impl Band {
    pub fn lower(&self) -> f64 {
        self.mean - self.std
    }

    pub fn upper(&self) -> f64 {
        self.mean + self.std
    }

    pub fn overlaps(&self, other: &Band) -> bool {
        self.lower() <= other.upper() && other.lower() <= self.upper()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SizeBand {
    pub ensemble_size: usize,
    pub odd: Band,
    pub even: Band,
    /// The ensemble size used in the fabricated-chip experiment.
    pub operating_point: bool,
}

impl SizeBand {
    pub fn overlapping(&self) -> bool {
        self.odd.overlaps(&self.even)
    }
}

/// For each ensemble size, simulate `repeats` independent ensembles per parity
/// and report mean ± 1 std of their g².
pub fn ensemble_size_study(
    n_odd: usize,
    n_even: usize,
    sizes: &[usize],
    repeats: usize,
    params: &EnsembleParams,
    stream: &RandomStream,
) -> Result<Vec<SizeBand>> {
    if sizes.is_empty() || sizes.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidParameter("ensemble sizes must be nonempty and strictly ascending".into()));
    }
    if sizes[0] < 2 || repeats < 2 {
        return Err(Error::InvalidParameter("ensemble sizes and repeats must be >= 2".into()));
    }
    params.validate(n_odd.min(n_even))?;
    let band = |n: usize, size: usize, size_stream: RandomStream| -> Result<Band> {
        let values = (0..repeats)
            .into_par_iter()
            .map(|r| {
                let ens = simulate_ensemble(n, params, size, &size_stream.split(r as u64))?;
                g2(&crate::stats::excited_samples(&ens))
            })
            .collect::<Result<Vec<f64>>>()?;
        let (mean, std) = mean_std(&values);
        Ok(Band { mean, std })
    };
    sizes
        .iter()
        .enumerate()
        .map(|(i, &size)| {
            let s = stream.split(i as u64);
            Ok(SizeBand {
                ensemble_size: size,
                odd: band(n_odd, size, s.split(0))?,
                even: band(n_even, size, s.split(1))?,
                operating_point: size == defaults::ENSEMBLE_SIZE,
            })
        })
        .collect()
}
