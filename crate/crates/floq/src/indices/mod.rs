//! Integer-valued transport indices of driven lattices: edge, bulk,
//! interface and relative forms, plus the pair-of-projections index and
//! consistency identities.

mod bulk;
mod identities;
mod relative;

pub use bulk::{additivity_check, bulk_index, projection_loop, AdditivityReport, QuadratureConfig};
pub use identities::{algebraic_identity_suite, lemma_periodic_trace_triple, IdentityDefects};
pub use relative::{
    epsilon_shift_check, relative_gap_indices, relative_loop_defect, EpsilonShiftReport,
    RelativeGapIndices,
};

use crate::error::{Error, Result};
use crate::operator::{adjoint, commutator_diag, LatticeOperator, SwitchFunction};
use crate::tol;
use ndarray::{Array1, Array2};
use ndarray_linalg::{Eigh, UPLO};
use num_complex::Complex64 as C64;
use serde::Serialize;

/// A computed index: complex raw value, nearest integer, quantization
/// residual, and the evaluation metadata needed to reproduce it.
#[derive(Clone, Debug, Serialize)]
pub struct IndexReport {
    pub raw_re: f64,
    pub raw_im: f64,
    pub integer: i64,
    /// `|raw - integer|` (complex modulus).
    pub residual: f64,
    pub imag_abs: f64,
    pub quantized: bool,
    pub meta: IndexMeta,
    #[serde(skip)]
    pub raw: C64,
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct IndexMeta {
    pub kind: String,
    pub window_r: Option<i64>,
    pub switch_jumps: Vec<(u8, i64)>,
    pub samples_per_segment: Option<usize>,
    pub lattice: Option<(usize, usize, usize)>,
    /// Set when halving the quadrature moves the value by more than the
    /// refinement tolerance.
    pub refinement_flagged: bool,
}

impl IndexReport {
    pub fn new(raw: C64) -> Self {
        Self::with_tolerances(raw, tol::QUANTIZATION, tol::IMAGINARY)
    }

    pub fn with_tolerances(raw: C64, tol_quant: f64, tol_imag: f64) -> Self {
        let integer = raw.re.round() as i64;
        let residual = (raw - C64::new(integer as f64, 0.0)).norm();
        let imag_abs = raw.im.abs();
        Self {
            raw_re: raw.re,
            raw_im: raw.im,
            integer,
            residual,
            imag_abs,
            quantized: residual < tol_quant && imag_abs < tol_imag,
            meta: IndexMeta::default(),
            raw,
        }
    }

    pub fn with_kind(mut self, kind: &str) -> Self {
        self.meta.kind = kind.to_string();
        self
    }

    pub fn with_window(mut self, r: i64) -> Self {
        self.meta.window_r = Some(r);
        self
    }

    pub fn with_lattice(mut self, g: &crate::geometry::LatticeGeometry) -> Self {
        self.meta.lattice = Some((g.l1, g.l2, g.n_orb));
        self
    }
}

/// Diagonal 0/1 window projector `chi_{n_d < bound}`.
#[derive(Clone, Debug)]
pub struct WindowProjector {
    pub geometry: crate::geometry::LatticeGeometry,
    pub direction: u8,
    pub bound: i64,
    pub values: Array1<f64>,
}

/// Window keeping coordinates `n_d < bound` in direction `d`.
pub fn window_below(
    geometry: crate::geometry::LatticeGeometry,
    direction: u8,
    bound: i64,
) -> WindowProjector {
    let values = crate::operator::diagonal_from_coordinate(&geometry, direction, |n| {
        if n < bound {
            1.0
        } else {
            0.0
        }
    });
    WindowProjector {
        geometry,
        direction,
        bound,
        values,
    }
}

/// Window keeping `|n_d - center| < radius`.
pub fn window_around(
    geometry: crate::geometry::LatticeGeometry,
    direction: u8,
    center: i64,
    radius: i64,
) -> WindowProjector {
    let values = crate::operator::diagonal_from_coordinate(&geometry, direction, |n| {
        if (n - center).abs() < radius {
            1.0
        } else {
            0.0
        }
    });
    WindowProjector {
        geometry,
        direction,
        bound: center + radius,
        values,
    }
}

/// Charge pumped along the boundary in one period:
/// `Tr( U^dag [Lambda_2, U] Q )` with `Q` a window in direction 1 that
/// removes the spurious opposite edge of the finite strip.
///
/// On the half-plane the window would be unnecessary; on a finite rectangle
/// it is the single most important numerical control and is recorded in the
/// report metadata.
pub fn edge_index(
    u_et: &LatticeOperator,
    lambda2: &SwitchFunction,
    window: &WindowProjector,
) -> Result<IndexReport> {
    if u_et.geometry != lambda2.geometry || u_et.geometry != window.geometry {
        return Err(Error::GeometryMismatch(
            "edge index needs operator, switch and window on one geometry".into(),
        ));
    }
    if lambda2.direction != 2 || window.direction != 1 {
        return Err(Error::InvalidArgument(
            "edge index expects a direction-2 switch and a direction-1 window".into(),
        ));
    }
    let r_extent = window.bound - u_et.geometry.origin1;
    if r_extent <= lambda2.ramp_width() as i64 {
        return Err(Error::InvalidArgument(format!(
            "window radius {r_extent} must exceed the switch ramp width {}",
            lambda2.ramp_width()
        )));
    }
    let raw = windowed_pump_trace(&u_et.matrix, &lambda2.values, &window.values);
    Ok(IndexReport::new(raw)
        .with_kind("edge")
        .with_window(r_extent)
        .with_lattice(&u_et.geometry))
}

/// `Tr( U^dag [diag(l), U] diag(q) )`.
pub(crate) fn windowed_pump_trace(
    u: &Array2<C64>,
    lambda: &Array1<f64>,
    q: &Array1<f64>,
) -> C64 {
    let c = commutator_diag(lambda, u);
    let m = adjoint(u).dot(&c);
    m.diag()
        .iter()
        .zip(q.iter())
        .map(|(z, w)| z * C64::new(*w, 0.0))
        .sum()
}

/// Index of a pair of projections:
/// `dim ker(P - Q - 1) - dim ker(P - Q + 1)`, counted as the eigenvalues of
/// `P - Q` within `tolerance` of +1 and -1.
///
/// Eigenvalues falling in the ambiguous band `(tolerance, 2 tolerance)`
/// around either endpoint abort with an error.
pub fn pair_projection_index(
    p: &LatticeOperator,
    q: &LatticeOperator,
    tolerance: f64,
) -> Result<i64> {
    p.check_same_geometry(q)?;
    let diff = &p.matrix - &q.matrix;
    let (vals, _) = diff.eigh(UPLO::Lower)?;
    let mut plus = 0i64;
    let mut minus = 0i64;
    for v in vals.iter() {
        for (target, count) in [(1.0, &mut plus), (-1.0, &mut minus)] {
            let d = (v - target).abs();
            if d < tolerance {
                *count += 1;
            } else if d < 2.0 * tolerance {
                return Err(Error::AmbiguousEigenvalue {
                    value: *v,
                    tol: tolerance,
                    twice: 2.0 * tolerance,
                });
            }
        }
    }
    Ok(plus - minus)
}

/// Interface pumping index for two drives glued along a cut whose bulk
/// one-period propagators coincide:
/// `Tr( W^dag [Lambda_2, W] Q )` with `W = U_B(T)^dag U_I(T)` and `Q` a
/// window centered on the cut.
pub fn interface_index(
    u_i_t: &LatticeOperator,
    u_b_t: &LatticeOperator,
    lambda2: &SwitchFunction,
    window: &WindowProjector,
) -> Result<IndexReport> {
    u_i_t.check_same_geometry(u_b_t)?;
    if u_i_t.geometry != lambda2.geometry || u_i_t.geometry != window.geometry {
        return Err(Error::GeometryMismatch(
            "interface index needs all operators on one geometry".into(),
        ));
    }
    let w = adjoint(&u_b_t.matrix).dot(&u_i_t.matrix);
    let raw = windowed_pump_trace(&w, &lambda2.values, &window.values);
    Ok(IndexReport::new(raw)
        .with_kind("interface")
        .with_window(window.bound)
        .with_lattice(&u_i_t.geometry))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::build_geometry;
    use crate::operator::{switch_function, SwitchProfile};
    use crate::rng::SplitMix64;

    #[test]
    fn edge_index_of_identity_is_exactly_zero() {
        let g = build_geometry(8, 8, 1, (0, -4)).unwrap();
        let l2 = switch_function(g, 2, 0, SwitchProfile::Sharp).unwrap();
        let q = window_below(g, 1, 4);
        let rep = edge_index(&LatticeOperator::identity(g), &l2, &q).unwrap();
        assert_eq!(rep.raw, C64::new(0.0, 0.0));
        assert_eq!(rep.integer, 0);
        assert!(rep.quantized);
    }

    #[test]
    fn edge_index_of_boundary_shift_is_one() {
        // cyclic shift up by one site on the single column n1 = 0,
        // identity elsewhere
        let g = build_geometry(6, 8, 1, (0, -4)).unwrap();
        let n = g.dim();
        let mut m = Array2::<C64>::zeros((n, n));
        for (n1, n2) in g.sites() {
            let from = g.index_of(n1, n2, 0).unwrap();
            if n1 == 0 {
                let to_n2 = if n2 + 1 < 4 { n2 + 1 } else { -4 };
                let to = g.index_of(n1, to_n2, 0).unwrap();
                m[[to, from]] = C64::new(1.0, 0.0);
            } else {
                m[[from, from]] = C64::new(1.0, 0.0);
            }
        }
        let u = LatticeOperator::new(g, m).unwrap();
        assert!(u.unitarity_defect() < 1e-14);
        let l2 = switch_function(g, 2, 0, SwitchProfile::Sharp).unwrap();
        for r in [1, 3, 6] {
            let q = window_below(g, 1, r);
            let rep = edge_index(&u, &l2, &q).unwrap();
            // telescoping: sum_n Lambda(n+1) - Lambda(n) = 1 on the shifted
            // column, up to the wrap-around bond far from the jump
            assert!(
                (rep.raw - C64::new(1.0, 0.0)).norm() < 1e-10,
                "r = {r}, raw = {}",
                rep.raw
            );
        }
    }

    #[test]
    fn edge_index_rejects_window_smaller_than_ramp() {
        let g = build_geometry(6, 8, 1, (0, -4)).unwrap();
        let l2 = switch_function(g, 2, 0, SwitchProfile::Ramp { width: 4 }).unwrap();
        let q = window_below(g, 1, 3);
        assert!(edge_index(&LatticeOperator::identity(g), &l2, &q).is_err());
        let q_ok = window_below(g, 1, 5);
        assert!(edge_index(&LatticeOperator::identity(g), &l2, &q_ok).is_ok());
    }

    #[test]
    fn pair_projection_index_basics() {
        let g = build_geometry(4, 1, 1, (0, 0)).unwrap();
        let n = g.dim();
        // rank-1 projector onto e_0
        let mut p1 = Array2::<C64>::zeros((n, n));
        p1[[0, 0]] = C64::new(1.0, 0.0);
        let p1 = LatticeOperator::new(g, p1).unwrap();
        let zero = LatticeOperator::zeros(g);
        assert_eq!(pair_projection_index(&p1, &p1, 0.1).unwrap(), 0);
        assert_eq!(pair_projection_index(&p1, &zero, 0.1).unwrap(), 1);
        assert_eq!(pair_projection_index(&zero, &p1, 0.1).unwrap(), -1);

        // orthogonal rank-1 projectors: eigenvalues +1 and -1 cancel
        let mut p2 = Array2::<C64>::zeros((n, n));
        p2[[1, 1]] = C64::new(1.0, 0.0);
        let p2 = LatticeOperator::new(g, p2).unwrap();
        assert_eq!(pair_projection_index(&p1, &p2, 0.1).unwrap(), 0);
    }

    #[test]
    fn pair_projection_ambiguous_band_errors() {
        let g = build_geometry(2, 1, 1, (0, 0)).unwrap();
        let mut m = Array2::<C64>::zeros((2, 2));
        m[[0, 0]] = C64::new(0.85, 0.0); // inside (tol, 2 tol) of +1 for tol = 0.1
        let p = LatticeOperator::new(g, m).unwrap();
        let q = LatticeOperator::zeros(g);
        assert!(matches!(
            pair_projection_index(&p, &q, 0.1),
            Err(Error::AmbiguousEigenvalue { .. })
        ));
    }

    #[test]
    fn edge_index_agrees_with_pair_projection_on_shift() {
        // I_E as the index of the pair (U^dag P2 U, P2), compressed to the
        // direction-1 window
        let g = build_geometry(6, 10, 1, (0, -5)).unwrap();
        let n = g.dim();
        let mut m = Array2::<C64>::zeros((n, n));
        for (n1, n2) in g.sites() {
            let from = g.index_of(n1, n2, 0).unwrap();
            if n1 == 0 {
                let to_n2 = if n2 + 1 < 5 { n2 + 1 } else { -5 };
                m[[g.index_of(n1, to_n2, 0).unwrap(), from]] = C64::new(1.0, 0.0);
            } else {
                m[[from, from]] = C64::new(1.0, 0.0);
            }
        }
        let u = LatticeOperator::new(g, m).unwrap();
        let l2 = switch_function(g, 2, 0, SwitchProfile::Sharp).unwrap();
        let q = window_below(g, 1, 3);
        let rep = edge_index(&u, &l2, &q).unwrap();

        let p2 = l2.as_operator();
        let moved = LatticeOperator::new(
            g,
            adjoint(&u.matrix).dot(&p2.matrix).dot(&u.matrix),
        )
        .unwrap();
        // compress both projections to the window sub-block
        let qd = &q.values;
        let compress = |a: &LatticeOperator| {
            let keep: Vec<usize> = (0..n).filter(|&i| qd[i] == 1.0).collect();
            let mut b = Array2::<C64>::zeros((keep.len(), keep.len()));
            for (bi, &i) in keep.iter().enumerate() {
                for (bj, &j) in keep.iter().enumerate() {
                    b[[bi, bj]] = a.matrix[[i, j]];
                }
            }
            let sub = build_geometry(keep.len(), 1, 1, (0, 0)).unwrap();
            LatticeOperator::new(sub, b).unwrap()
        };
        let ind = pair_projection_index(&compress(&moved), &compress(&p2), 0.2).unwrap();
        assert_eq!(ind, rep.integer);
        assert_eq!(ind, 1);
    }

    #[test]
    fn interface_index_of_identical_halves_vanishes() {
        let g = build_geometry(8, 8, 1, (-4, -4)).unwrap();
        let mut rng = SplitMix64::new(17);
        let a = Array2::from_shape_fn((g.dim(), g.dim()), |_| {
            C64::new(rng.next_symmetric(1.0), rng.next_symmetric(1.0))
        });
        let h = (&a + &adjoint(&a)).mapv(|z| z * C64::new(0.5, 0.0));
        let u = crate::propagator::expm_hermitian(&h, 1.0).unwrap();
        let u = LatticeOperator::new(g, u).unwrap();
        let l2 = switch_function(g, 2, 0, SwitchProfile::Sharp).unwrap();
        let q = window_around(g, 1, 0, 2);
        // U_I = U_B: the commutator of W = I with anything vanishes
        let rep = interface_index(&u, &u, &l2, &q).unwrap();
        assert!(rep.raw.norm() < 1e-12);
    }
}
