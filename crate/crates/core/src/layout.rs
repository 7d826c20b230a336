//! Waveguide placement: couplings → separations → sites on a common circle.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::defaults;
use crate::error::{Error, Result};

/// Exponential separation–coupling law `c(d) = c_ref · exp(−(d − d_ref)/ξ)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CouplingCalibration {
    /// Separation at which the coupling equals `c_ref` (μm).
    pub d_ref_um: f64,
    /// mm⁻¹
    pub c_ref: f64,
    /// ξ in μm.
    pub decay_length_um: f64,
    pub wavelength_nm: f64,
}

impl Default for CouplingCalibration {
    /// 9.76 μm ↔ 0.5 mm⁻¹ at 852 nm. The decay length of 1.5 μm is an
    /// illustrative placeholder, not a measured value; supply your own.
    fn default() -> Self {
        CouplingCalibration {
            d_ref_um: defaults::MEAN_SEPARATION_UM,
            c_ref: defaults::C_MEAN,
            decay_length_um: defaults::ILLUSTRATIVE_DECAY_LENGTH_UM,
            wavelength_nm: defaults::WAVELENGTH_NM,
        }
    }
}

impl CouplingCalibration {
    pub fn validate(&self) -> Result<()> {
        let ok = |x: f64| x.is_finite() && x > 0.0;
        if !(ok(self.d_ref_um) && ok(self.c_ref) && ok(self.decay_length_um) && ok(self.wavelength_nm)) {
            return Err(Error::InvalidParameter(format!("calibration values must be positive: {self:?}")));
        }
        Ok(())
    }
}

pub fn distance_to_coupling(d_um: f64, cal: &CouplingCalibration) -> f64 {
    cal.c_ref * (-(d_um - cal.d_ref_um) / cal.decay_length_um).exp()
}

/// `d = d_ref − ξ ln(c / c_ref)`.
pub fn coupling_to_distance(c: f64, cal: &CouplingCalibration) -> Result<f64> {
    if !(c.is_finite() && c > 0.0) {
        return Err(Error::NonPositiveCoupling(c));
    }
    Ok(cal.d_ref_um - cal.decay_length_um * (c / cal.c_ref).ln())
}

fn angle_sum(chords: &[f64], r: f64) -> f64 {
    chords.iter().map(|&c| 2.0 * (c / (2.0 * r)).min(1.0).asin()).sum()
}

/// Radius of the circle on which consecutive chords of the given lengths
/// close up, with the centre strictly inside the polygon.
///
/// The total central angle is strictly decreasing in `R`, so the root of
/// `Σ 2·asin(c_k / 2R) = 2π` on `R > max(c)/2` is unique and found by
/// bisection to full double precision.
pub fn solve_circumradius(chords: &[f64]) -> Result<f64> {
    if chords.len() < 3 {
        return Err(Error::InfeasibleChords(format!("need at least 3 chords, got {}", chords.len())));
    }
    if let Some(c) = chords.iter().find(|c| !(c.is_finite() && **c > 0.0)) {
        return Err(Error::InfeasibleChords(format!("chord {c} is not positive")));
    }
    let longest = chords.iter().copied().fold(0.0, f64::max);
    let total: f64 = chords.iter().sum();
    let mut lo = longest / 2.0;
    if angle_sum(chords, lo) <= 2.0 * PI {
        return Err(Error::InfeasibleChords(format!(
            "longest chord {longest} spans at least half the perimeter; the centre cannot lie inside the polygon"
        )));
    }
    // asin(x) <= πx/2 puts the angle sum below 2π beyond Σc/4.
    let mut hi = (total / 4.0).max(lo) * 1.5;
    debug_assert!(angle_sum(chords, hi) < 2.0 * PI);
    for _ in 0..2000 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if angle_sum(chords, mid) > 2.0 * PI {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let (flo, fhi) = (angle_sum(chords, lo) - 2.0 * PI, angle_sum(chords, hi) - 2.0 * PI);
    Ok(if flo.abs() <= fhi.abs() { lo } else { hi })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChipLayout {
    pub circumradius_um: f64,
    /// `(x, y)` in μm, site 0 at angle 0.
    pub sites: Vec<(f64, f64)>,
    /// `chord_lengths[k]` separates site `k` and site `(k + 1) % n`.
    pub chord_lengths: Vec<f64>,
    pub waveguide_length_mm: f64,
}

impl ChipLayout {
    pub fn central_angles(&self) -> Vec<f64> {
        self.chord_lengths.iter().map(|&c| 2.0 * (c / (2.0 * self.circumradius_um)).asin()).collect()
    }

    /// Distances between consecutive placed sites, closing edge last.
    pub fn measured_chords(&self) -> Vec<f64> {
        let n = self.sites.len();
        (0..n)
            .map(|k| {
                let (x0, y0) = self.sites[k];
                let (x1, y1) = self.sites[(k + 1) % n];
                (x1 - x0).hypot(y1 - y0)
            })
            .collect()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("site,x_um,y_um\n");
        for (k, (x, y)) in self.sites.iter().enumerate() {
            out.push_str(&format!("{k},{x},{y}\n"));
        }
        out
    }
}

pub fn place_sites(chords: &[f64], circumradius_um: f64) -> Result<ChipLayout> {
    if !(circumradius_um.is_finite() && circumradius_um > 0.0) {
        return Err(Error::InfeasibleChords(format!("radius {circumradius_um} is not positive")));
    }
    if let Some(c) = chords.iter().find(|&&c| !(c > 0.0 && c < 2.0 * circumradius_um)) {
        return Err(Error::InfeasibleChords(format!("chord {c} does not fit a circle of radius {circumradius_um}")));
    }
    let mut theta = 0.0f64;
    let mut sites = Vec::with_capacity(chords.len());
    for &c in chords {
        sites.push((circumradius_um * theta.cos(), circumradius_um * theta.sin()));
        theta += 2.0 * (c / (2.0 * circumradius_um)).asin();
    }
    Ok(ChipLayout {
        circumradius_um,
        sites,
        chord_lengths: chords.to_vec(),
        waveguide_length_mm: defaults::WAVEGUIDE_LENGTH_MM,
    })
}

/// Full pipeline from a realization's couplings to site coordinates.
pub fn layout_from_couplings(couplings: &[f64], cal: &CouplingCalibration) -> Result<ChipLayout> {
    cal.validate()?;
    let chords = couplings.iter().map(|&c| coupling_to_distance(c, cal)).collect::<Result<Vec<_>>>()?;
    let r = solve_circumradius(&chords)?;
    place_sites(&chords, r)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{sample_couplings, DisorderSpec};
    use crate::rng::RandomStream;
    use proptest::prelude::*;

    #[test]
    fn calibration_anchor() {
        let cal = CouplingCalibration::default();
        assert!((coupling_to_distance(0.5, &cal).unwrap() - 9.76).abs() < 1e-12);
        let d = coupling_to_distance(0.5 * std::f64::consts::E, &cal).unwrap();
        assert!((d - (9.76 - 1.5)).abs() < 1e-12);
        assert!(matches!(coupling_to_distance(0.0, &cal), Err(Error::NonPositiveCoupling(_))));
        assert!(coupling_to_distance(-0.2, &cal).is_err());
    }

    #[test]
    fn regular_polygons() {
        let r = solve_circumradius(&[9.76; 6]).unwrap();
        assert!((r - 9.76).abs() < 1e-9 * 9.76);
        let r = solve_circumradius(&[3.0; 4]).unwrap();
        assert!((r - 3.0 / 2f64.sqrt()).abs() < 1e-12);
        for n in 3..20 {
            let r = solve_circumradius(&vec![1.0; n]).unwrap();
            assert!((r - 1.0 / (2.0 * (PI / n as f64).sin())).abs() < 1e-12, "n = {n}");
        }
    }

    #[test]
    fn infeasible_chords() {
        // One chord as long as the rest combined cannot enclose the centre.
        assert!(matches!(solve_circumradius(&[1.0, 1.0, 2.5]), Err(Error::InfeasibleChords(_))));
        assert!(solve_circumradius(&[1.0, 1.0]).is_err());
        assert!(solve_circumradius(&[1.0, 0.0, 1.0]).is_err());
    }

    #[test]
    fn hexagon_vertices() {
        let lay = place_sites(&[2.0; 6], 2.0).unwrap();
        for (k, (x, y)) in lay.sites.iter().enumerate() {
            let a = k as f64 * PI / 3.0;
            assert!((x - 2.0 * a.cos()).abs() < 1e-12 && (y - 2.0 * a.sin()).abs() < 1e-12);
        }
    }

    #[test]
    fn round_trip_through_geometry() {
        let spec = DisorderSpec::new(0.5, 0.8).unwrap();
        let cal = CouplingCalibration::default();
        for seed in 0..200 {
            let c = sample_couplings(&spec, 3 + seed as usize % 10, &RandomStream::new(seed)).unwrap();
            let lay = layout_from_couplings(&c, &cal).unwrap();
            let back: Vec<f64> = lay.measured_chords().iter().map(|&d| distance_to_coupling(d, &cal)).collect();
            for (a, b) in c.iter().zip(&back) {
                assert!((a - b).abs() <= 1e-9 * a, "seed {seed}");
            }
        }
    }

    proptest! {
        #[test]
        fn coupling_distance_inverse(c in 1e-3f64..10.0) {
            let cal = CouplingCalibration::default();
            let back = distance_to_coupling(coupling_to_distance(c, &cal).unwrap(), &cal);
            prop_assert!((back - c).abs() <= 1e-12 * c);
        }

        #[test]
        fn larger_coupling_is_closer(a in 1e-3f64..10.0, b in 1e-3f64..10.0) {
            prop_assume!(a < b);
            let cal = CouplingCalibration::default();
            prop_assert!(coupling_to_distance(a, &cal).unwrap() > coupling_to_distance(b, &cal).unwrap());
        }

        #[test]
        fn placement_invariants(seed in any::<u64>(), n in 3usize..16, scale in 0.1f64..10.0) {
            let spec = DisorderSpec::new(0.5, 0.8).unwrap();
            let cal = CouplingCalibration::default();
            let chords: Vec<f64> = sample_couplings(&spec, n, &RandomStream::new(seed)).unwrap()
                .iter().map(|&c| coupling_to_distance(c, &cal).unwrap()).collect();
            let r = solve_circumradius(&chords).unwrap();
            let lay = place_sites(&chords, r).unwrap();
            prop_assert!((lay.central_angles().iter().sum::<f64>() - 2.0 * PI).abs() < 1e-9);
            for (x, y) in &lay.sites {
                prop_assert!((x.hypot(*y) - r).abs() <= 1e-9 * r);
            }
            for (m, c) in lay.measured_chords().iter().zip(&chords) {
                prop_assert!((m - c).abs() <= 1e-9 * c);
            }
            let scaled: Vec<f64> = chords.iter().map(|c| c * scale).collect();
            let rs = solve_circumradius(&scaled).unwrap();
            prop_assert!((rs - r * scale).abs() <= 1e-12 * rs);
        }
    }
}
