//! Exponential-decay diagnostics for lattice operators.
//!
//! Kernels are inspected block-by-block: `|A_{m,n}|` is the spectral norm of
//! the orbital block for the site pair `(m, n)`, and distances are measured
//! in the 1-norm `|m1-n1| + |m2-n2|`. Fits operate on the per-distance
//! envelope `max_{|x(m,n)| = x} |A_{m,n}|`, which estimates the smallest
//! admissible prefactor at each distance.

use crate::operator::LatticeOperator;
use ndarray::ArrayView2;
use ndarray_linalg::SVD;
use num_complex::Complex64 as C64;
use serde::Serialize;

/// Blocks with norm below this floor are treated as numerically zero and
/// excluded from logarithmic fits.
pub const BLOCK_FLOOR: f64 = 1e-14;

/// Result of a locality or confinement diagnostic.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct LocalityProfile {
    /// Decay exponent per lattice spacing. `f64::INFINITY` for an operator
    /// whose kernel is entirely below the floor.
    pub exponent: f64,
    /// Prefactor `C` such that the envelope is `C e^{-exponent * x}`.
    pub prefactor: f64,
    /// Root-mean-square residual of the log-envelope fit (log units).
    pub residual: f64,
    /// True when every block is below the floor.
    pub effectively_zero: bool,
}

/// Decay profile against which a kernel is fitted.
#[derive(Clone, Copy, Debug)]
pub enum DecayProfile {
    /// 1-norm site separation `|m - n|`.
    Distance,
    /// Distance of the column site from a coordinate in direction 1,
    /// `|n1 - center|`.
    Coordinate1 { center: i64 },
    /// Simultaneous confinement and locality about a cut:
    /// `|n1 - center| + |m2 - n2|`.
    Mixed { center: i64 },
}

impl DecayProfile {
    fn value(&self, m: (i64, i64), n: (i64, i64)) -> i64 {
        match self {
            DecayProfile::Distance => (m.0 - n.0).abs() + (m.1 - n.1).abs(),
            DecayProfile::Coordinate1 { center } => (n.0 - center).abs(),
            DecayProfile::Mixed { center } => (n.0 - center).abs() + (m.1 - n.1).abs(),
        }
    }
}

/// Spectral norm of a small block. 1x1 and 2x2 are closed form; larger
/// blocks go through LAPACK singular values.
pub fn block_spectral_norm(block: ArrayView2<'_, C64>) -> f64 {
    match block.nrows() {
        1 => block[[0, 0]].norm(),
        2 => {
            let f2: f64 = block.iter().map(|z| z.norm_sqr()).sum();
            let det = block[[0, 0]] * block[[1, 1]] - block[[0, 1]] * block[[1, 0]];
            let disc = (f2 * f2 - 4.0 * det.norm_sqr()).max(0.0);
            (0.5 * (f2 + disc.sqrt())).sqrt()
        }
        _ => {
            let owned = block.to_owned();
            let (_, s, _) = owned.svd(false, false).expect("svd of orbital block");
            s.iter().cloned().fold(0.0, f64::max)
        }
    }
}

/// Per-distance envelope of block norms for the chosen profile.
fn envelope(a: &LatticeOperator, profile: DecayProfile) -> Vec<(i64, f64)> {
    let g = &a.geometry;
    let mut max_at: std::collections::BTreeMap<i64, f64> = std::collections::BTreeMap::new();
    for m in g.sites() {
        for n in g.sites() {
            let x = profile.value(m, n);
            let norm = block_spectral_norm(a.block(m, n).unwrap());
            let e = max_at.entry(x).or_insert(0.0);
            if norm > *e {
                *e = norm;
            }
        }
    }
    max_at.into_iter().collect()
}

/// Smallest prefactor `C` with `|A_{m,n}| <= C e^{-mu |m-n|}` over all pairs.
///
/// A huge `C` signals a non-local kernel; no error is raised. The result is
/// monotone in `mu`: a larger exponent can only demand a larger prefactor.
pub fn locality_norm(a: &LatticeOperator, mu: f64) -> LocalityProfile {
    assert!(mu > 0.0, "locality exponent must be positive");
    let env = envelope(a, DecayProfile::Distance);
    let mut c: f64 = 0.0;
    let mut all_zero = true;
    for &(x, norm) in &env {
        if norm > BLOCK_FLOOR {
            all_zero = false;
        }
        c = c.max(norm * (mu * x as f64).exp());
    }
    LocalityProfile {
        exponent: mu,
        prefactor: c,
        residual: 0.0,
        effectively_zero: all_zero,
    }
}

/// Least-squares fit of the log block-norm envelope against a decay profile.
///
/// Returns the fitted exponent, prefactor and RMS residual in log units.
/// When every block is below the floor the verdict is "effectively zero"
/// with an infinite exponent sentinel.
pub fn decay_rate_fit(a: &LatticeOperator, profile: DecayProfile) -> LocalityProfile {
    let env = envelope(a, profile);
    let pts: Vec<(f64, f64)> = env
        .iter()
        .filter(|(_, norm)| *norm > BLOCK_FLOOR)
        .map(|&(x, norm)| (x as f64, norm.ln()))
        .collect();
    if pts.is_empty() {
        return LocalityProfile {
            exponent: f64::INFINITY,
            prefactor: 0.0,
            residual: 0.0,
            effectively_zero: true,
        };
    }
    if pts.len() == 1 {
        // single distance bin: no slope information
        return LocalityProfile {
            exponent: f64::INFINITY,
            prefactor: pts[0].1.exp(),
            residual: 0.0,
            effectively_zero: false,
        };
    }
    let n = pts.len() as f64;
    let sx: f64 = pts.iter().map(|p| p.0).sum();
    let sy: f64 = pts.iter().map(|p| p.1).sum();
    let sxx: f64 = pts.iter().map(|p| p.0 * p.0).sum();
    let sxy: f64 = pts.iter().map(|p| p.0 * p.1).sum();
    let denom = n * sxx - sx * sx;
    let slope = (n * sxy - sx * sy) / denom;
    let intercept = (sy - slope * sx) / n;
    let rms = (pts
        .iter()
        .map(|&(x, y)| {
            let r = y - (intercept + slope * x);
            r * r
        })
        .sum::<f64>()
        / n)
        .sqrt();
    LocalityProfile {
        exponent: -slope,
        prefactor: intercept.exp(),
        residual: rms,
        effectively_zero: false,
    }
}
