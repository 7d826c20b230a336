//! Coupled-mode evolution `-i dψ/dz = Hψ`, i.e. `ψ(z) = exp(+iHz) ψ(0)`.
//!
//! The exact propagator goes through a cyclic Jacobi diagonalization of `H`;
//! a fixed-step RK4 integrator is kept alongside as an independent check.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::lattice::{build_hamiltonian, Hamiltonian, RingLattice};

/// Jacobi stops once the off-diagonal Frobenius norm drops below this
/// fraction of `‖H‖`.
pub const JACOBI_TOLERANCE: f64 = 1e-12;
pub const JACOBI_MAX_SWEEPS: usize = 100;

/// Norm drift beyond which the RK4 stepper reports its step as too large.
pub const STEPPER_MAX_DRIFT: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct FieldState {
    pub amplitudes: Vec<Complex64>,
    /// Propagation distance in mm.
    pub z: f64,
}

impl FieldState {
    pub fn new(amplitudes: Vec<Complex64>) -> Self {
        FieldState { amplitudes, z: 0.0 }
    }

    /// Unit amplitude on `site`, zero elsewhere.
    pub fn single_site(n: usize, site: usize) -> Self {
        let mut amplitudes = vec![Complex64::new(0.0, 0.0); n];
        amplitudes[site] = Complex64::new(1.0, 0.0);
        FieldState { amplitudes, z: 0.0 }
    }

    pub fn len(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.amplitudes.is_empty()
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum()
    }
}

/// `I_k = |ψ_k|²`.
pub fn intensities(psi: &FieldState) -> Vec<f64> {
    psi.amplitudes.iter().map(|a| a.norm_sqr()).collect()
}

/// Eigen-decomposition `H = V diag(λ) Vᵀ` with ascending eigenvalues.
#[derive(Debug, Clone)]
pub struct Spectrum {
    pub eigenvalues: Vec<f64>,
    /// Row-major `n × n`; column `k` pairs with `eigenvalues[k]`.
    pub eigenvectors: Vec<f64>,
}

impl Spectrum {
    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    /// Component `i` of eigenvector `k`.
    #[inline]
    pub fn vector(&self, i: usize, k: usize) -> f64 {
        self.eigenvectors[i * self.dim() + k]
    }

    /// `V diag(λ) Vᵀ`, row-major.
    pub fn reconstruct(&self) -> Vec<f64> {
        let n = self.dim();
        let mut out = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                out[i * n + j] = (0..n).map(|k| self.vector(i, k) * self.eigenvalues[k] * self.vector(j, k)).sum();
            }
        }
        out
    }

    /// Largest deviation from a `±E` symmetric spectrum,
    /// `max_k |λ_k + λ_{n-1-k}|` over the ascending list.
    pub fn chiral_mismatch(&self) -> f64 {
        let e = &self.eigenvalues;
        let n = e.len();
        (0..n).map(|k| (e[k] + e[n - 1 - k]).abs()).fold(0.0, f64::max)
    }

    /// Apply `exp(+iHz)` to `psi`.
    pub fn propagate(&self, psi: &FieldState, z: f64) -> Result<FieldState> {
        check_distance(z)?;
        let n = self.dim();
        if psi.len() != n {
            return Err(Error::InvalidParameter(format!("field has {} sites, hamiltonian has {n}", psi.len())));
        }
        if z == 0.0 {
            return Ok(psi.clone());
        }
        // Project onto eigenmodes, rotate phases, project back.
        let modes: Vec<Complex64> = (0..n)
            .map(|k| {
                let overlap: Complex64 = (0..n).map(|i| psi.amplitudes[i] * self.vector(i, k)).sum();
                overlap * Complex64::from_polar(1.0, self.eigenvalues[k] * z)
            })
            .collect();
        let amplitudes = (0..n).map(|i| (0..n).map(|k| modes[k] * self.vector(i, k)).sum()).collect();
        Ok(FieldState { amplitudes, z: psi.z + z })
    }
}

fn check_distance(z: f64) -> Result<()> {
    if !(z.is_finite() && z >= 0.0) {
        return Err(Error::InvalidParameter(format!("propagation distance must be finite and >= 0, got {z}")));
    }
    Ok(())
}

/// Cyclic Jacobi rotations.
pub fn eigendecompose(h: &Hamiltonian) -> Result<Spectrum> {
    let n = h.dim();
    let mut a = h.as_slice().to_vec();
    let mut v = vec![0.0; n * n];
    for i in 0..n {
        v[i * n + i] = 1.0;
    }
    let threshold = JACOBI_TOLERANCE * h.norm();
    let off_norm = |a: &[f64]| -> f64 {
        let mut s = 0.0;
        for p in 0..n {
            for q in (p + 1)..n {
                s += a[p * n + q] * a[p * n + q];
            }
        }
        (2.0 * s).sqrt()
    };

    let mut converged = false;
    for _ in 0..JACOBI_MAX_SWEEPS {
        if off_norm(&a) <= threshold {
            converged = true;
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[p * n + q];
                if apq == 0.0 {
                    continue;
                }
                let app = a[p * n + p];
                let aqq = a[q * n + q];
                let theta = (aqq - app) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;

                a[p * n + p] = app - t * apq;
                a[q * n + q] = aqq + t * apq;
                a[p * n + q] = 0.0;
                a[q * n + p] = 0.0;
                for r in 0..n {
                    if r == p || r == q {
                        continue;
                    }
                    let arp = a[r * n + p];
                    let arq = a[r * n + q];
                    let new_rp = c * arp - s * arq;
                    let new_rq = s * arp + c * arq;
                    a[r * n + p] = new_rp;
                    a[p * n + r] = new_rp;
                    a[r * n + q] = new_rq;
                    a[q * n + r] = new_rq;
                }
                for r in 0..n {
                    let vrp = v[r * n + p];
                    let vrq = v[r * n + q];
                    v[r * n + p] = c * vrp - s * vrq;
                    v[r * n + q] = s * vrp + c * vrq;
                }
            }
        }
    }
    if !converged {
        let off = off_norm(&a);
        if off > threshold {
            return Err(Error::NoConvergence { sweeps: JACOBI_MAX_SWEEPS, off_norm: off });
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[i * n + i].total_cmp(&a[j * n + j]));
    let eigenvalues = order.iter().map(|&k| a[k * n + k]).collect();
    let mut eigenvectors = vec![0.0; n * n];
    for (col, &k) in order.iter().enumerate() {
        for r in 0..n {
            eigenvectors[r * n + col] = v[r * n + k];
        }
    }
    Ok(Spectrum { eigenvalues, eigenvectors })
}

pub fn propagate(h: &Hamiltonian, psi0: &FieldState, z: f64) -> Result<FieldState> {
    check_distance(z)?;
    eigendecompose(h)?.propagate(psi0, z)
}

fn apply_generator(h: &Hamiltonian, psi: &[Complex64], out: &mut [Complex64]) {
    // out = i H psi
    let n = h.dim();
    for (i, o) in out.iter_mut().enumerate() {
        let mut acc = Complex64::new(0.0, 0.0);
        for (j, p) in psi.iter().enumerate() {
            let hij = h.get(i, j);
            if hij != 0.0 {
                acc += p * hij;
            }
        }
        *o = Complex64::new(-acc.im, acc.re);
    }
    debug_assert_eq!(out.len(), n);
}

/// Classical RK4 on `dψ/dz = iHψ` with a fixed step no larger than `dz`.
pub fn propagate_stepper(h: &Hamiltonian, psi0: &FieldState, z: f64, dz: f64) -> Result<FieldState> {
    check_distance(z)?;
    if z == 0.0 {
        return Ok(psi0.clone());
    }
    if !(dz.is_finite() && dz > 0.0 && dz <= z) {
        return Err(Error::InvalidParameter(format!("step must satisfy 0 < dz <= z, got dz = {dz}, z = {z}")));
    }
    let n = h.dim();
    if psi0.len() != n {
        return Err(Error::InvalidParameter(format!("field has {} sites, hamiltonian has {n}", psi0.len())));
    }
    let steps = (z / dz).ceil() as usize;
    let step = z / steps as f64;
    let norm0 = psi0.norm_sqr();

    let zero = Complex64::new(0.0, 0.0);
    let mut psi = psi0.amplitudes.clone();
    let (mut k1, mut k2, mut k3, mut k4) = (vec![zero; n], vec![zero; n], vec![zero; n], vec![zero; n]);
    let mut tmp = vec![zero; n];
    for s in 0..steps {
        apply_generator(h, &psi, &mut k1);
        for i in 0..n {
            tmp[i] = psi[i] + k1[i] * (0.5 * step);
        }
        apply_generator(h, &tmp, &mut k2);
        for i in 0..n {
            tmp[i] = psi[i] + k2[i] * (0.5 * step);
        }
        apply_generator(h, &tmp, &mut k3);
        for i in 0..n {
            tmp[i] = psi[i] + k3[i] * step;
        }
        apply_generator(h, &tmp, &mut k4);
        for i in 0..n {
            psi[i] += (k1[i] + (k2[i] + k3[i]) * 2.0 + k4[i]) * (step / 6.0);
        }
        if s % 64 == 63 || s + 1 == steps {
            let drift = (psi.iter().map(|a| a.norm_sqr()).sum::<f64>() - norm0).abs();
            if drift.is_nan() || drift > STEPPER_MAX_DRIFT {
                return Err(Error::NormDrift { drift });
            }
        }
    }
    Ok(FieldState { amplitudes: psi, z: psi0.z + z })
}

/// Output field of `lattice` after distance `z` (mm) with unit input on its
/// excited site.
pub fn single_site_output(lattice: &RingLattice, z: f64) -> Result<FieldState> {
    let spectrum = eigendecompose(&build_hamiltonian(lattice))?;
    let psi0 = FieldState::single_site(lattice.n_sites(), lattice.excited_site());
    spectrum.propagate(&psi0, z)
}
