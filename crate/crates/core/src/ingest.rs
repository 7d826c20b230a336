//! Facet-image intensity extraction: binary PGM loading and per-site
//! isotropic Gaussian fits.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::stats::normalize;

/// Grayscale raster, row-major, `pixels[y * width + x]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RasterImage {
    pub width: usize,
    pub height: usize,
    pub maxval: u16,
    pub pixels: Vec<u16>,
}

impl RasterImage {
    pub fn new(width: usize, height: usize, maxval: u16, pixels: Vec<u16>) -> Result<Self> {
        if maxval == 0 {
            return Err(Error::Pgm("maxval must be in 1..=65535".into()));
        }
        if pixels.len() != width * height {
            return Err(Error::Pgm(format!("expected {} pixels, got {}", width * height, pixels.len())));
        }
        if let Some(p) = pixels.iter().find(|&&p| p > maxval) {
            return Err(Error::Pgm(format!("pixel value {p} exceeds maxval {maxval}")));
        }
        Ok(RasterImage { width, height, maxval, pixels })
    }

    /// Rasterize `f(x, y)` at pixel centres, rounding and clamping to `[0, maxval]`.
    pub fn from_fn(width: usize, height: usize, maxval: u16, f: impl Fn(f64, f64) -> f64) -> Self {
        let mut pixels = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                let v = f(x as f64, y as f64).round().clamp(0.0, maxval as f64);
                pixels.push(v as u16);
            }
        }
        RasterImage { width, height, maxval, pixels }
    }

    pub fn bit_depth(&self) -> u8 {
        if self.maxval < 256 {
            8
        } else {
            16
        }
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.pixels[y * self.width + x] as f64
    }

    /// Binary P5 encoding.
    pub fn to_pgm(&self) -> Vec<u8> {
        let mut out = format!("P5\n{} {}\n{}\n", self.width, self.height, self.maxval).into_bytes();
        if self.bit_depth() == 8 {
            out.extend(self.pixels.iter().map(|&p| p as u8));
        } else {
            for &p in &self.pixels {
                out.extend_from_slice(&p.to_be_bytes());
            }
        }
        out
    }
}

struct HeaderCursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl HeaderCursor<'_> {
    fn skip_whitespace_and_comments(&mut self) {
        while self.pos < self.bytes.len() {
            match self.bytes[self.pos] {
                b'#' => {
                    while self.pos < self.bytes.len() && self.bytes[self.pos] != b'\n' {
                        self.pos += 1;
                    }
                }
                b if b.is_ascii_whitespace() => self.pos += 1,
                _ => break,
            }
        }
    }

    fn number(&mut self, what: &str) -> Result<u64> {
        self.skip_whitespace_and_comments();
        let start = self.pos;
        while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(Error::Pgm(format!("missing {what} in header")));
        }
        std::str::from_utf8(&self.bytes[start..self.pos])
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| Error::Pgm(format!("{what} out of range")))
    }
}

/// Parse a binary (P5) PGM; 16-bit samples are big-endian.
pub fn parse_pgm(bytes: &[u8]) -> Result<RasterImage> {
    if bytes.len() < 2 || &bytes[..2] != b"P5" {
        return Err(Error::Pgm("missing P5 magic number".into()));
    }
    let mut cur = HeaderCursor { bytes, pos: 2 };
    let width = cur.number("width")? as usize;
    let height = cur.number("height")? as usize;
    let maxval = cur.number("maxval")?;
    if width == 0 || height == 0 {
        return Err(Error::Pgm(format!("zero-sized image {width}x{height}")));
    }
    if maxval == 0 || maxval > 65535 {
        return Err(Error::Pgm(format!("unsupported maxval {maxval}")));
    }
    match bytes.get(cur.pos) {
        Some(b) if b.is_ascii_whitespace() => cur.pos += 1,
        _ => return Err(Error::Pgm("header must end with a single whitespace byte".into())),
    }
    let bytes_per_sample = if maxval < 256 { 1 } else { 2 };
    let count = width.checked_mul(height).ok_or_else(|| Error::Pgm("image dimensions overflow".into()))?;
    let payload = &bytes[cur.pos..];
    if payload.len() < count * bytes_per_sample {
        return Err(Error::Pgm(format!(
            "truncated payload: expected {} bytes, found {}",
            count * bytes_per_sample,
            payload.len()
        )));
    }
    let pixels = if bytes_per_sample == 1 {
        payload[..count].iter().map(|&b| b as u16).collect()
    } else {
        payload[..2 * count].chunks_exact(2).map(|c| u16::from_be_bytes([c[0], c[1]])).collect()
    };
    RasterImage::new(width, height, maxval as u16, pixels)
}

pub fn load_image(path: impl AsRef<Path>) -> Result<RasterImage> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|source| Error::Io { path: path.to_path_buf(), source })?;
    parse_pgm(&bytes)
}

/// Expected spot position and its 1/e intensity radius, in pixels.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SiteSpot {
    pub x: f64,
    pub y: f64,
    pub radius_1e: f64,
}

/// Fit window radius in units of the 1/e radius.
pub const WINDOW_RADII: f64 = 3.0;
/// Outer edge of the background annulus in units of the 1/e radius.
pub const ANNULUS_OUTER_RADII: f64 = 4.0;
/// Maximum centre refinement, in pixels.
pub const MAX_CENTER_SHIFT: f64 = 1.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Background {
    None,
    Constant(f64),
    /// Median of the pixels between the fit window and 4 × the 1/e radius.
    AnnulusMedian,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpotFit {
    pub amplitude: f64,
    pub x: f64,
    pub y: f64,
    /// 1/e radius of the fitted `A·exp(−r²/w²)` profile.
    pub width: f64,
    pub background: f64,
    pub iterations: usize,
}

impl SpotFit {
    /// Integrated intensity up to the constant π.
    pub fn intensity(&self) -> f64 {
        self.amplitude * self.width * self.width
    }
}

fn pixels_within(image: &RasterImage, cx: f64, cy: f64, r_in: f64, r_out: f64) -> Vec<(f64, f64, f64)> {
    let x0 = (cx - r_out).floor().max(0.0) as usize;
    let y0 = (cy - r_out).floor().max(0.0) as usize;
    let x1 = ((cx + r_out).ceil() as usize).min(image.width - 1);
    let y1 = ((cy + r_out).ceil() as usize).min(image.height - 1);
    let mut out = Vec::new();
    for y in y0..=y1 {
        for x in x0..=x1 {
            let r = (x as f64 - cx).hypot(y as f64 - cy);
            if r >= r_in && r <= r_out {
                out.push((x as f64, y as f64, image.get(x, y)));
            }
        }
    }
    out
}

fn background_level(image: &RasterImage, spot: &SiteSpot, strategy: Background) -> Result<f64> {
    match strategy {
        Background::None => Ok(0.0),
        Background::Constant(b) => Ok(b),
        Background::AnnulusMedian => {
            let inner = WINDOW_RADII * spot.radius_1e;
            let outer = ANNULUS_OUTER_RADII * spot.radius_1e;
            let mut values: Vec<f64> = pixels_within(image, spot.x, spot.y, inner, outer)
                .into_iter()
                .filter(|p| (p.0 - spot.x).hypot(p.1 - spot.y) > inner)
                .map(|p| p.2)
                .collect();
            if values.is_empty() {
                return Err(Error::FitFailed("background annulus has no pixels".into()));
            }
            values.sort_by(f64::total_cmp);
            let m = values.len();
            Ok(if m % 2 == 1 { values[m / 2] } else { 0.5 * (values[m / 2 - 1] + values[m / 2]) })
        }
    }
}

fn solve3(a: [[f64; 3]; 3], b: [f64; 3]) -> Option<[f64; 3]> {
    let mut m = [[0.0; 4]; 3];
    for i in 0..3 {
        m[i][..3].copy_from_slice(&a[i]);
        m[i][3] = b[i];
    }
    for col in 0..3 {
        let pivot = (col..3).max_by(|&i, &j| m[i][col].abs().total_cmp(&m[j][col].abs()))?;
        if m[pivot][col].abs() < 1e-300 {
            return None;
        }
        m.swap(col, pivot);
        for row in 0..3 {
            if row != col {
                let f = m[row][col] / m[col][col];
                let pivot_row = m[col];
                for (x, p) in m[row].iter_mut().zip(pivot_row).skip(col) {
                    *x -= f * p;
                }
            }
        }
    }
    Some([m[0][3] / m[0][0], m[1][3] / m[1][1], m[2][3] / m[2][2]])
}

/// Separable least-squares fit of `A·exp(−((x−x₀)² + (y−y₀)²)/w²)` to the
/// background-subtracted window around `spot`. The amplitude is eliminated
/// in closed form; (x₀, y₀, w) are refined by Levenberg–Marquardt.
pub fn fit_spot(image: &RasterImage, spot: &SiteSpot, background: Background) -> Result<SpotFit> {
    if !(spot.radius_1e.is_finite() && spot.radius_1e > 0.0) {
        return Err(Error::InvalidParameter(format!("spot radius {} must be positive", spot.radius_1e)));
    }
    let reach = WINDOW_RADII * spot.radius_1e;
    if spot.x - reach < 0.0
        || spot.y - reach < 0.0
        || spot.x + reach > (image.width - 1) as f64
        || spot.y + reach > (image.height - 1) as f64
    {
        return Err(Error::InvalidParameter(format!(
            "spot window at ({}, {}) radius {reach} leaves the image",
            spot.x, spot.y
        )));
    }
    let bg = background_level(image, spot, background)?;
    let data: Vec<(f64, f64, f64)> =
        pixels_within(image, spot.x, spot.y, 0.0, reach).into_iter().map(|(x, y, v)| (x, y, v - bg)).collect();
    if data.len() < 4 {
        return Err(Error::FitFailed("fit window has fewer than 4 pixels".into()));
    }

    // Projected residual and its Kaufman Jacobian for parameters (x0, y0, w).
    let evaluate = |p: [f64; 3], want_jac: bool| -> (f64, f64, Vec<[f64; 3]>, Vec<f64>) {
        let [x0, y0, w] = p;
        let w2 = w * w;
        let g: Vec<f64> = data.iter().map(|&(x, y, _)| (-((x - x0).powi(2) + (y - y0).powi(2)) / w2).exp()).collect();
        let gg: f64 = g.iter().map(|v| v * v).sum();
        let gd: f64 = g.iter().zip(&data).map(|(gi, d)| gi * d.2).sum();
        let amp = if gg > 0.0 { gd / gg } else { 0.0 };
        let resid: Vec<f64> = g.iter().zip(&data).map(|(gi, d)| d.2 - amp * gi).collect();
        let cost: f64 = resid.iter().map(|r| r * r).sum();
        let mut jac = Vec::new();
        if want_jac {
            let dg: Vec<[f64; 3]> = data
                .iter()
                .zip(&g)
                .map(|(&(x, y, _), &gi)| {
                    let (dx, dy) = (x - x0, y - y0);
                    [gi * 2.0 * dx / w2, gi * 2.0 * dy / w2, gi * 2.0 * (dx * dx + dy * dy) / (w2 * w)]
                })
                .collect();
            // J = −A (I − g gᵀ/gᵀg) ∂g/∂θ
            let mut proj = [0.0; 3];
            for (gi, d) in g.iter().zip(&dg) {
                for k in 0..3 {
                    proj[k] += gi * d[k];
                }
            }
            jac = dg
                .iter()
                .zip(&g)
                .map(|(d, gi)| {
                    let mut row = [0.0; 3];
                    for k in 0..3 {
                        row[k] = -amp * (d[k] - gi * proj[k] / gg);
                    }
                    row
                })
                .collect();
        }
        (cost, amp, jac, resid)
    };

    let clamp = |p: [f64; 3]| -> [f64; 3] {
        [
            p[0].clamp(spot.x - MAX_CENTER_SHIFT, spot.x + MAX_CENTER_SHIFT),
            p[1].clamp(spot.y - MAX_CENTER_SHIFT, spot.y + MAX_CENTER_SHIFT),
            p[2].clamp(0.2 * spot.radius_1e, 3.0 * spot.radius_1e),
        ]
    };

    let mut params = [spot.x, spot.y, spot.radius_1e];
    let (mut cost, _, mut jac, mut resid) = evaluate(params, true);
    let mut mu = 1e-3;
    let mut iterations = 0;
    for it in 0..200 {
        iterations = it + 1;
        let mut jtj = [[0.0; 3]; 3];
        let mut jtr = [0.0; 3];
        for (row, r) in jac.iter().zip(&resid) {
            for a in 0..3 {
                jtr[a] += row[a] * r;
                for b in 0..3 {
                    jtj[a][b] += row[a] * row[b];
                }
            }
        }
        let mut improved = false;
        for _ in 0..30 {
            let mut lhs = jtj;
            for (a, row) in lhs.iter_mut().enumerate() {
                row[a] += mu * jtj[a][a].max(1e-300);
            }
            let Some(step) = solve3(lhs, [-jtr[0], -jtr[1], -jtr[2]]) else {
                mu *= 10.0;
                continue;
            };
            let trial = clamp([params[0] + step[0], params[1] + step[1], params[2] + step[2]]);
            let (trial_cost, _, _, _) = evaluate(trial, false);
            if trial_cost < cost {
                let rel = (cost - trial_cost) / cost.max(f64::MIN_POSITIVE);
                params = trial;
                let next = evaluate(params, true);
                cost = next.0;
                jac = next.2;
                resid = next.3;
                mu = (mu / 3.0).max(1e-12);
                improved = rel > 1e-14;
                break;
            }
            mu *= 4.0;
        }
        if !improved {
            break;
        }
    }
    let (_, amplitude, _, _) = evaluate(params, false);
    if !(amplitude.is_finite() && amplitude > 0.0 && params[2] > 0.0) {
        return Err(Error::FitFailed(format!("no positive gaussian peak near ({}, {})", spot.x, spot.y)));
    }
    Ok(SpotFit { amplitude, x: params[0], y: params[1], width: params[2], background: bg, iterations })
}

/// Fitted spot volumes, normalized to unit sum, in spot order.
pub fn extract_site_intensities(image: &RasterImage, spots: &[SiteSpot], background: Background) -> Result<Vec<f64>> {
    if spots.is_empty() {
        return Err(Error::InvalidParameter("no spots given".into()));
    }
    for i in 0..spots.len() {
        for j in (i + 1)..spots.len() {
            let d = (spots[i].x - spots[j].x).hypot(spots[i].y - spots[j].y);
            if d < 2.0 * (spots[i].radius_1e + spots[j].radius_1e) {
                return Err(Error::OverlappingSpots(i, j));
            }
        }
    }
    let volumes =
        spots.iter().map(|s| fit_spot(image, s, background).map(|f| f.intensity())).collect::<Result<Vec<_>>>()?;
    normalize(&volumes)
}
