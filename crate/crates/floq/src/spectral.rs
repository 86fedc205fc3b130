//! Spectral analysis of the one-period unitary: eigenphases, gap detection,
//! the branch-cut logarithm (effective Hamiltonian), arc spectral
//! projections, and the real-space Chern number.

use crate::error::{Error, Result};
use crate::operator::{adjoint, commutator_diag, frobenius, LatticeOperator, SwitchFunction};
use crate::tol;
use ndarray::{s, Array1, Array2};
use ndarray_linalg::{Eigh, UPLO};
use num_complex::Complex64 as C64;
use std::f64::consts::{PI, TAU};

/// Full eigensystem of a unitary matrix: phases in `(-pi, pi]` and an
/// orthonormal eigenvector matrix.
#[derive(Clone, Debug)]
pub struct UnitarySpectrum {
    pub phases: Array1<f64>,
    pub vectors: Array2<C64>,
    pub dim: usize,
    /// Frobenius defect of `V diag(e^{i phase}) V^dag - U`.
    pub reconstruction_defect: f64,
}

/// Eigenvalue clusters of the Hermitian part closer than this are
/// re-diagonalized jointly against the anti-Hermitian part.
const CLUSTER_TOL: f64 = 1e-9;

/// Matrix-level unitary eigensystem; see [`eigendecompose_unitary`].
pub(crate) fn unitary_eigensystem(m: &Array2<C64>) -> Result<(Array1<f64>, Array2<C64>, f64)> {
    let n = m.nrows();
    let udag = adjoint(m);
    let cos_part = (m + &udag).mapv(|z| z * C64::new(0.5, 0.0));
    let sin_part = (m - &udag).mapv(|z| z * C64::new(0.0, -0.5));
    let (cos_vals, mut vectors) = cos_part.eigh(UPLO::Lower)?;

    // split clusters of equal cosine by the sine part
    let mut phases = Array1::zeros(n);
    let mut start = 0;
    while start < n {
        let mut end = start + 1;
        while end < n && (cos_vals[end] - cos_vals[start]).abs() < CLUSTER_TOL {
            end += 1;
        }
        if end - start == 1 {
            let v = vectors.slice(s![.., start]).to_owned();
            let sv = sin_part.dot(&v);
            let s_val = v
                .iter()
                .zip(sv.iter())
                .map(|(a, b)| (a.conj() * b).re)
                .sum::<f64>();
            phases[start] = normalize_phase(s_val.atan2(cos_vals[start]));
        } else {
            let block = vectors.slice(s![.., start..end]).to_owned();
            let small = adjoint(&block).dot(&sin_part).dot(&block);
            let (s_vals, w) = small.eigh(UPLO::Lower)?;
            let rotated = block.dot(&w);
            vectors.slice_mut(s![.., start..end]).assign(&rotated);
            for (k, s_val) in s_vals.iter().enumerate() {
                phases[start + k] = normalize_phase(s_val.atan2(cos_vals[start + k]));
            }
        }
        start = end;
    }
    let defect = reconstruction_defect(m, &phases, &vectors);
    Ok((phases, vectors, defect))
}

/// Diagonalize a unitary matrix through the commuting Hermitian pair
/// `(U + U^dag)/2` and `(U - U^dag)/(2i)`.
///
/// The cosine part is diagonalized first; degenerate clusters (including the
/// `cos = c` pairing of phases `+theta` and `-theta`) are split by
/// diagonalizing the sine part within each cluster. The eigenvector matrix
/// is unitary by construction, which keeps near-degenerate phases stable.
pub fn eigendecompose_unitary(u: &LatticeOperator) -> Result<UnitarySpectrum> {
    let defect = u.unitarity_defect();
    if defect > 1e-8 * (1.0 + u.dim() as f64) {
        return Err(Error::NonUnitary {
            defect,
            tol: 1e-8,
        });
    }
    let n = u.dim();
    let (phases, vectors, reconstruction_defect) = unitary_eigensystem(&u.matrix)?;
    if reconstruction_defect > tol::RECONSTRUCTION * (1.0 + n as f64) {
        return Err(Error::Reconstruction {
            defect: reconstruction_defect,
            tol: tol::RECONSTRUCTION,
        });
    }
    Ok(UnitarySpectrum {
        phases,
        vectors,
        dim: n,
        reconstruction_defect,
    })
}

fn reconstruction_defect(u: &Array2<C64>, phases: &Array1<f64>, vectors: &Array2<C64>) -> f64 {
    let mut scaled = adjoint(vectors);
    for (i, th) in phases.iter().enumerate() {
        let f = C64::from_polar(1.0, *th);
        scaled.row_mut(i).mapv_inplace(|z| z * f);
    }
    frobenius(&(&vectors.dot(&scaled) - u))
}

/// Map an angle to `(-pi, pi]`.
pub fn normalize_phase(theta: f64) -> f64 {
    let mut t = theta.rem_euclid(TAU);
    if t > PI {
        t -= TAU;
    }
    t
}

/// An arc of the unit circle free of eigenphases.
#[derive(Clone, Copy, Debug)]
pub struct GapDescriptor {
    /// Quasi-energy of the arc midpoint (representative in `[0, 2pi/T)`).
    pub center_quasienergy: f64,
    /// Phase at the start of the gap (an eigenphase).
    pub phase_lo: f64,
    /// Phase at the end of the gap; `phase_lo + width`.
    pub phase_hi: f64,
    pub width: f64,
    /// Whether the quasi-energy sits at the arc midpoint.
    pub at_midpoint: bool,
}

/// All angular gaps wider than `min_width` between consecutive eigenphases
/// on the circle. May be empty.
pub fn find_gaps(spectrum: &UnitarySpectrum, period: f64, min_width: f64) -> Vec<GapDescriptor> {
    assert!(min_width > 0.0, "min_width must be positive");
    let mut sorted: Vec<f64> = spectrum.phases.iter().cloned().collect();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = sorted.len();
    let mut gaps = Vec::new();
    for i in 0..n {
        let lo = sorted[i];
        let hi = if i + 1 < n {
            sorted[i + 1]
        } else {
            sorted[0] + TAU
        };
        let width = hi - lo;
        if width > min_width {
            let center_phase = lo + width / 2.0;
            // phase theta corresponds to quasi-energy -theta / T
            let eps = (-center_phase / period).rem_euclid(TAU / period);
            gaps.push(GapDescriptor {
                center_quasienergy: eps,
                phase_lo: lo,
                phase_hi: hi,
                width,
                at_midpoint: true,
            });
        }
    }
    gaps
}

/// Angular distance from the branch-cut phase `-T eps` to the nearest
/// eigenphase.
pub fn gap_distance(spectrum: &UnitarySpectrum, period: f64, epsilon: f64) -> f64 {
    let cut = -period * epsilon;
    spectrum
        .phases
        .iter()
        .map(|&th| {
            let d = (th - cut).rem_euclid(TAU);
            d.min(TAU - d)
        })
        .fold(f64::INFINITY, f64::min)
}

fn validate_gap(spectrum: &UnitarySpectrum, period: f64, epsilon: f64) -> Result<()> {
    let required = (1e-6f64).max(3.0 * spectrum.reconstruction_defect);
    let distance = gap_distance(spectrum, period, epsilon);
    if distance < required {
        return Err(Error::GapValidation {
            epsilon,
            distance,
            required,
        });
    }
    Ok(())
}

/// Effective Hamiltonian `H^eps = (i/T) log U(T)` with the branch cut of
/// the logarithm at the angle `-T eps`.
///
/// Phases are lifted to the window `(-T eps, -T eps + 2 pi)`, so the
/// spectrum of `H^eps` lies in `(eps - 2 pi/T, eps)` and
/// `e^{-i T H^eps}` reconstructs `U(T)`.
pub fn effective_hamiltonian(
    u_t: &LatticeOperator,
    epsilon: f64,
    period: f64,
) -> Result<LatticeOperator> {
    let spectrum = eigendecompose_unitary(u_t)?;
    effective_hamiltonian_from_spectrum(&spectrum, u_t.geometry, epsilon, period)
}

/// Same as [`effective_hamiltonian`] with a precomputed eigensystem.
pub fn effective_hamiltonian_from_spectrum(
    spectrum: &UnitarySpectrum,
    geometry: crate::geometry::LatticeGeometry,
    epsilon: f64,
    period: f64,
) -> Result<LatticeOperator> {
    validate_gap(spectrum, period, epsilon)?;
    let energies = branch_energies(&spectrum.phases, epsilon, period);
    let mut scaled = adjoint(&spectrum.vectors);
    for (i, e) in energies.iter().enumerate() {
        let f = C64::new(*e, 0.0);
        scaled.row_mut(i).mapv_inplace(|z| z * f);
    }
    let h = spectrum.vectors.dot(&scaled);
    // enforce exact hermiticity against roundoff in the two products
    let h = (&h + &adjoint(&h)).mapv(|z| z * C64::new(0.5, 0.0));
    LatticeOperator::new(geometry, h)
}

/// Quasi-energies selected by the branch cut: phase `theta` lifts to
/// `phi in (-T eps, -T eps + 2 pi)` and maps to the energy `-phi / T`.
pub fn branch_energies(phases: &Array1<f64>, epsilon: f64, period: f64) -> Array1<f64> {
    let cut = -period * epsilon;
    phases.mapv(|th| {
        let rem = (th - cut).rem_euclid(TAU);
        let phi = cut + rem;
        -phi / period
    })
}

/// Orthogonal projection onto the eigenvalues whose phases lie on the
/// clockwise arc from `e^{-i T eps}` to `e^{-i T eps'}`.
///
/// Requires `0 <= eps' - eps <= 2 pi / T`; both endpoints must sit in gaps.
/// The full-circle limit returns the identity.
pub fn arc_projection(
    u_t: &LatticeOperator,
    epsilon: f64,
    epsilon_prime: f64,
    period: f64,
) -> Result<LatticeOperator> {
    let spectrum = eigendecompose_unitary(u_t)?;
    arc_projection_from_spectrum(&spectrum, u_t.geometry, epsilon, epsilon_prime, period)
}

pub fn arc_projection_from_spectrum(
    spectrum: &UnitarySpectrum,
    geometry: crate::geometry::LatticeGeometry,
    epsilon: f64,
    epsilon_prime: f64,
    period: f64,
) -> Result<LatticeOperator> {
    let span = epsilon_prime - epsilon;
    if !(0.0..=TAU / period + 1e-12).contains(&span) {
        return Err(Error::InvalidArgument(format!(
            "need 0 <= eps' - eps <= 2 pi / T, got {span}"
        )));
    }
    validate_gap(spectrum, period, epsilon)?;
    validate_gap(spectrum, period, epsilon_prime)?;
    let arc = period * span;
    let start = -period * epsilon; // walk clockwise (decreasing angle) from here
    let member: Vec<usize> = spectrum
        .phases
        .iter()
        .enumerate()
        .filter(|(_, &th)| (start - th).rem_euclid(TAU) < arc)
        .map(|(i, _)| i)
        .collect();
    let n = spectrum.dim;
    let mut p = Array2::<C64>::zeros((n, n));
    if !member.is_empty() {
        let mut cols = Array2::<C64>::zeros((n, member.len()));
        for (k, &j) in member.iter().enumerate() {
            cols.column_mut(k).assign(&spectrum.vectors.column(j));
        }
        p = cols.dot(&adjoint(&cols));
    }
    // projector algebra is exact up to the two products above
    let p = (&p + &adjoint(&p)).mapv(|z| z * C64::new(0.5, 0.0));
    LatticeOperator::new(geometry, p)
}

/// Real-space Chern number of a projection,
/// `c(P) = -2 pi i Tr( P [[L1, P], [L2, P]] )`,
/// reported with its quantization residual.
pub fn chern_number(
    p: &LatticeOperator,
    lambda1: &SwitchFunction,
    lambda2: &SwitchFunction,
) -> Result<crate::indices::IndexReport> {
    let idem_defect = frobenius(&(&p.matrix.dot(&p.matrix) - &p.matrix));
    if idem_defect > 1e-8 * (1.0 + p.dim() as f64) {
        return Err(Error::InvalidArgument(format!(
            "chern_number needs a projection; idempotency defect {idem_defect:.3e}"
        )));
    }
    let c1 = commutator_diag(&lambda1.values, &p.matrix);
    let c2 = commutator_diag(&lambda2.values, &p.matrix);
    let inner = c1.dot(&c2) - c2.dot(&c1);
    let tr: C64 = p.matrix.dot(&inner).diag().sum();
    let raw = -C64::new(0.0, TAU) * tr;
    Ok(crate::indices::IndexReport::new(raw).with_kind("chern"))
}
