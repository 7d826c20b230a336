//! Disorder-ensemble simulation of ring photonic lattices.
//!
//! Light hopping between nearest-neighbour waveguides arranged on a ring obeys
//! `-i dψ/dz = Hψ` with a real symmetric coupling matrix `H`. Drawing the
//! couplings from a uniform law and repeating the evolution over many
//! realizations yields intensity statistics whose correlation `g²` at the
//! excited site depends on whether the ring is even (chiral, bipartite) or odd.
//!
//! - [`lattice`]: disorder realizations, Hamiltonians, bipartite detection
//! - [`evolve`]: Jacobi diagonalization, exact and RK4 propagation
//! - [`stats`]: g², localization level, bootstrap, amplitude-law fits
//! - [`sweep`]: ensembles, phase cells, gap maps, bound and size studies
//! - [`layout`]: coupling → waveguide coordinates on a circle
//! - [`ingest`]: PGM facet images → per-site intensities

pub mod error;
pub mod evolve;
pub mod ingest;
pub mod lattice;
pub mod layout;
pub mod rng;
pub mod stats;
pub mod sweep;

pub use error::{Error, ErrorClass, Result};
pub use evolve::{eigendecompose, intensities, propagate, propagate_stepper, FieldState, Spectrum};
pub use ingest::{extract_site_intensities, load_image, Background, RasterImage, SiteSpot};
pub use lattice::{
    build_hamiltonian, find_chiral_permutation, sample_couplings, Bipartition, DisorderSpec, Hamiltonian, RingLattice,
};
pub use layout::{ChipLayout, CouplingCalibration};
pub use rng::RandomStream;
pub use stats::{bootstrap_g2, g2, localization_level, BootstrapReport, EnsembleRecord};
pub use sweep::{EnsembleParams, PhaseCell, PhaseMap, SweepGrid};

/// Parameters of the fabricated-chip experiment and its simulations.
pub mod defaults {
    /// Mean coupling c̄, mm⁻¹.
    pub const C_MEAN: f64 = 0.5;
    pub const ETA: f64 = 0.8;
    /// z·c̄ of the fabricated 34.5 mm waveguides.
    pub const Z_NORMALIZED_EXPERIMENT: f64 = 17.25;
    /// z·c̄ used for the simulated gap map.
    pub const Z_NORMALIZED_FIGURE: f64 = 17.5;
    pub const WAVEGUIDE_LENGTH_MM: f64 = 34.5;
    /// Lattices measured per site count for the g² gap.
    pub const ENSEMBLE_SIZE: usize = 120;
    /// Lattices measured per site count for the localization study.
    pub const LOCALIZATION_ENSEMBLE_SIZE: usize = 200;
    /// Site count from which the localization ensemble size applies.
    pub const LOCALIZATION_MIN_SITES: usize = 11;
    /// Independent simulated ensembles per point in the size study.
    pub const SIMULATION_REPEATS: usize = 800;
    pub const MEAN_SEPARATION_UM: f64 = 9.76;
    pub const WAVELENGTH_NM: f64 = 852.0;
    /// Placeholder decay length of the separation–coupling law.
    pub const ILLUSTRATIVE_DECAY_LENGTH_UM: f64 = 1.5;
    /// Localization level separating gap-dominated and localized regimes.
    pub const LOCALIZATION_BOUND: f64 = 0.2;
}
