//! Bulk index of unitary loops: half the period integral of the
//! triple-commutator trace
//! `g(t) = Tr( U^dag dU/dt [ U^dag [L1, U], U^dag [L2, U] ] )`,
//! evaluated with the exact derivative `dU/dt = -i H(t) U(t)` and composite
//! Simpson quadrature per constant segment.

use super::IndexReport;
use crate::error::{Error, Result};
use crate::operator::{adjoint, commutator_diag, frobenius, LatticeOperator, SwitchFunction};
use crate::propagator::PropagatorTrajectory;
use crate::protocol::{DriveProtocol, Segment};
use crate::tol;
use ndarray::{Array1, Array2};
use num_complex::Complex64 as C64;

#[derive(Clone, Copy, Debug)]
pub struct QuadratureConfig {
    /// Simpson intervals per segment; must be even. Multiples of 4 allow
    /// the built-in refinement check against the half-resolution rule.
    pub samples_per_segment: usize,
    /// Report flag threshold: halving the node count must move the value by
    /// less than this.
    pub refinement_tol: f64,
    pub tol_loop: f64,
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        Self {
            samples_per_segment: 32,
            refinement_tol: 1e-3,
            tol_loop: tol::LOOP,
        }
    }
}

/// `g(t)` for a loop sample `W` with derivative `Wdot`.
pub(crate) fn loop_integrand(
    w: &Array2<C64>,
    wdot: &Array2<C64>,
    l1: &Array1<f64>,
    l2: &Array1<f64>,
) -> C64 {
    let wd = adjoint(w);
    let a1 = wd.dot(&commutator_diag(l1, w));
    let a2 = wd.dot(&commutator_diag(l2, w));
    let b = a1.dot(&a2) - a2.dot(&a1);
    let y = wdot.dot(&b);
    // Tr(W^dag Y) without forming the product
    w.iter().zip(y.iter()).map(|(a, b)| a.conj() * b).sum()
}

/// Composite Simpson weights for `m` intervals (m even) of width `h`.
fn simpson_weights(m: usize, h: f64) -> Vec<f64> {
    let mut w = vec![0.0; m + 1];
    for (i, wi) in w.iter_mut().enumerate() {
        *wi = if i == 0 || i == m {
            1.0
        } else if i % 2 == 1 {
            4.0
        } else {
            2.0
        } * h
            / 3.0;
    }
    w
}

/// Integrate `g(t)` over the whole period, segment by segment, returning
/// the full-resolution and half-resolution values.
fn integrate_loop(
    traj: &PropagatorTrajectory,
    l1: &Array1<f64>,
    l2: &Array1<f64>,
    intervals: usize,
) -> Result<(C64, Option<C64>)> {
    if intervals < 2 || intervals % 2 != 0 {
        return Err(Error::InvalidArgument(
            "samples_per_segment must be an even count of at least 2".into(),
        ));
    }
    let nested = intervals % 4 == 0;
    let mut fine = C64::new(0.0, 0.0);
    let mut coarse = C64::new(0.0, 0.0);
    let stored_per_seg = traj.config.samples_per_segment - 1;
    let weights_fine = simpson_weights(intervals, 1.0);
    let weights_coarse = if nested {
        Some(simpson_weights(intervals / 2, 2.0))
    } else {
        None
    };
    for (s, seg) in traj.protocol.segments.iter().enumerate() {
        if frobenius(&seg.generator.matrix) == 0.0 {
            // dU/dt vanishes with the generator, and so does the integrand
            continue;
        }
        let eig = &traj.segment_eigens[s];
        let seg_start = &traj.samples[s * stored_per_seg];
        let prepared = eig.prepare(seg_start);
        let h_fine = seg.duration / intervals as f64;
        for node in 0..=intervals {
            let tau = h_fine * node as f64;
            let w = eig.propagate_prepared(tau, &prepared);
            let wdot = seg.generator.matrix.dot(&w).mapv(|z| z * C64::new(0.0, -1.0));
            let g = loop_integrand(&w, &wdot, l1, l2);
            fine += g * weights_fine[node] * h_fine;
            if let Some(wc) = &weights_coarse {
                if node % 2 == 0 {
                    coarse += g * wc[node / 2] * h_fine;
                }
            }
        }
    }
    Ok((fine, weights_coarse.map(|_| coarse)))
}

/// Bulk index of a loop trajectory (`|U(T) - I|` below the loop tolerance).
///
/// Switch jumps should sit at the lattice center, away from the open
/// boundary; the integrand is a product of factors confined around the two
/// jumps, so boundary contamination decays exponentially in the distance.
pub fn bulk_index(
    traj: &PropagatorTrajectory,
    lambda1: &SwitchFunction,
    lambda2: &SwitchFunction,
    quad: &QuadratureConfig,
) -> Result<IndexReport> {
    if lambda1.geometry != traj.geometry || lambda2.geometry != traj.geometry {
        return Err(Error::GeometryMismatch(
            "switches must live on the trajectory geometry".into(),
        ));
    }
    if lambda1.direction != 1 || lambda2.direction != 2 {
        return Err(Error::InvalidArgument(
            "bulk index expects switches in directions 1 and 2".into(),
        ));
    }
    let n = traj.geometry.dim();
    let loop_defect = {
        let mut d = traj.at_period().clone();
        for i in 0..n {
            d[[i, i]] -= C64::new(1.0, 0.0);
        }
        frobenius(&d)
    };
    if loop_defect > quad.tol_loop * (1.0 + n as f64) {
        return Err(Error::LoopCondition {
            defect: loop_defect,
            tol: quad.tol_loop,
        });
    }
    let (fine, coarse) = integrate_loop(traj, &lambda1.values, &lambda2.values, quad.samples_per_segment)?;
    let raw = fine * C64::new(0.5, 0.0);
    let mut report = IndexReport::new(raw)
        .with_kind("bulk")
        .with_lattice(&traj.geometry);
    report.meta.switch_jumps = vec![(1, lambda1.jump), (2, lambda2.jump)];
    report.meta.samples_per_segment = Some(quad.samples_per_segment);
    if let Some(c) = coarse {
        let c = c * C64::new(0.5, 0.0);
        report.meta.refinement_flagged = (raw - c).norm() > quad.refinement_tol;
    }
    Ok(report)
}

/// Loop protocol winding the phase of a projection once around the circle:
/// identity on `[0, T/2]`, then `e^{-i 2 (T - t) (2 pi / T) P}` on
/// `[T/2, T]`. Its bulk index equals the Chern number of `P`.
pub fn projection_loop(p: &LatticeOperator, period: f64) -> Result<DriveProtocol> {
    let idem = frobenius(&(&p.matrix.dot(&p.matrix) - &p.matrix));
    if idem > 1e-8 * (1.0 + p.dim() as f64) {
        return Err(Error::InvalidArgument(format!(
            "projection_loop needs a projection; idempotency defect {idem:.3e}"
        )));
    }
    let geometry = p.geometry;
    let zero = LatticeOperator::zeros(geometry);
    let generator = p.scale(C64::new(-2.0 * std::f64::consts::TAU / period, 0.0));
    DriveProtocol::new(
        period,
        vec![
            Segment {
                duration: period / 2.0,
                generator: zero,
            },
            Segment {
                duration: period / 2.0,
                generator,
            },
        ],
        None,
    )
}

#[derive(Clone, Debug)]
pub struct AdditivityReport {
    pub product: IndexReport,
    pub left: IndexReport,
    pub right: IndexReport,
    pub defect: f64,
}

/// Check `I_B[UV] = I_B[U] + I_B[V]` for two loop trajectories on one
/// geometry. The pointwise product `W(t) = U(t) V(t)` has the exact
/// derivative `-i (H_U W + U H_V V)`, evaluated on the common refinement of
/// the two segment grids.
pub fn additivity_check(
    traj_u: &PropagatorTrajectory,
    traj_v: &PropagatorTrajectory,
    lambda1: &SwitchFunction,
    lambda2: &SwitchFunction,
    quad: &QuadratureConfig,
) -> Result<AdditivityReport> {
    if traj_u.geometry != traj_v.geometry {
        return Err(Error::GeometryMismatch(
            "additivity needs both loops on one geometry".into(),
        ));
    }
    let left = bulk_index(traj_u, lambda1, lambda2, quad)?;
    let right = bulk_index(traj_v, lambda1, lambda2, quad)?;

    // common refinement of the segment boundaries
    let mut cuts: Vec<f64> = traj_u
        .protocol
        .boundaries()
        .into_iter()
        .chain(traj_v.protocol.boundaries())
        .collect();
    cuts.sort_by(|a, b| a.partial_cmp(b).unwrap());
    cuts.dedup_by(|a, b| (*a - *b).abs() < 1e-12);

    let intervals = quad.samples_per_segment;
    let weights = simpson_weights(intervals, 1.0);
    let mut total = C64::new(0.0, 0.0);
    for w in cuts.windows(2) {
        let (t0, t1) = (w[0], w[1]);
        let h = (t1 - t0) / intervals as f64;
        let mid = 0.5 * (t0 + t1);
        let h_u = &traj_u.protocol.segment_at(mid).generator.matrix;
        let h_v = &traj_v.protocol.segment_at(mid).generator.matrix;
        for node in 0..=intervals {
            let t = t0 + h * node as f64;
            let u = traj_u.propagator_at(t)?.matrix;
            let v = traj_v.propagator_at(t)?.matrix;
            let prod = u.dot(&v);
            let wdot = (h_u.dot(&prod) + u.dot(&h_v.dot(&v))).mapv(|z| z * C64::new(0.0, -1.0));
            let g = loop_integrand(&prod, &wdot, &lambda1.values, &lambda2.values);
            total += g * weights[node] * h;
        }
    }
    let product = IndexReport::new(total * C64::new(0.5, 0.0))
        .with_kind("bulk-product")
        .with_lattice(&traj_u.geometry);
    let defect = (product.raw - left.raw - right.raw).norm();
    Ok(AdditivityReport {
        product,
        left,
        right,
        defect,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::build_geometry;
    use crate::operator::{switch_function, SwitchProfile};
    use crate::propagator::{evolve, EvolutionConfig};
    use crate::protocol::zero_protocol;

    fn switches(
        g: crate::geometry::LatticeGeometry,
    ) -> (SwitchFunction, SwitchFunction) {
        (
            switch_function(g, 1, 0, SwitchProfile::Sharp).unwrap(),
            switch_function(g, 2, 0, SwitchProfile::Sharp).unwrap(),
        )
    }

    #[test]
    fn zero_protocol_has_zero_bulk_index() {
        let g = build_geometry(4, 4, 1, (-2, -2)).unwrap();
        let p = zero_protocol(g, 1.0).unwrap();
        let traj = evolve(&p, &EvolutionConfig::default()).unwrap();
        let (l1, l2) = switches(g);
        let rep = bulk_index(&traj, &l1, &l2, &QuadratureConfig::default()).unwrap();
        assert_eq!(rep.raw, C64::new(0.0, 0.0));
        assert!(!rep.meta.refinement_flagged);
    }

    #[test]
    fn non_loop_is_rejected_with_guidance() {
        let g = build_geometry(4, 4, 2, (-2, -2)).unwrap();
        let p = crate::models::five_step_drive(g, 0.7, 0.3, 1.0).unwrap();
        let traj = evolve(&p, &EvolutionConfig::default()).unwrap();
        let (l1, l2) = switches(g);
        let err = bulk_index(&traj, &l1, &l2, &QuadratureConfig::default()).unwrap_err();
        assert!(err.to_string().contains("relative_gap_indices"));
    }

    #[test]
    fn projection_loops_with_trivial_projections_give_zero() {
        let g = build_geometry(4, 4, 1, (-2, -2)).unwrap();
        let (l1, l2) = switches(g);
        let quad = QuadratureConfig::default();
        for p in [LatticeOperator::zeros(g), LatticeOperator::identity(g)] {
            let proto = projection_loop(&p, 1.0).unwrap();
            let traj = evolve(&proto, &EvolutionConfig::default()).unwrap();
            // the loop closes exactly for any projection
            let rep = bulk_index(&traj, &l1, &l2, &quad).unwrap();
            assert!(rep.raw.norm() < 1e-12);
        }
    }

    #[test]
    fn projection_loop_closes_for_generic_projection() {
        let g = build_geometry(4, 4, 1, (-2, -2)).unwrap();
        let mut rng = crate::rng::SplitMix64::new(23);
        let a = Array2::from_shape_fn((g.dim(), g.dim()), |_| {
            C64::new(rng.next_symmetric(1.0), rng.next_symmetric(1.0))
        });
        let h = (&a + &adjoint(&a)).mapv(|z| z * C64::new(0.5, 0.0));
        let (_, vecs) = ndarray_linalg::Eigh::eigh(&h, ndarray_linalg::UPLO::Lower).unwrap();
        let half = g.dim() / 2;
        let cols = vecs.slice(ndarray::s![.., ..half]).to_owned();
        let p = LatticeOperator::new(g, cols.dot(&adjoint(&cols))).unwrap();
        let proto = projection_loop(&p, 1.0).unwrap();
        let traj = evolve(&proto, &EvolutionConfig::default()).unwrap();
        let n = g.dim();
        let mut d = traj.at_period().clone();
        for i in 0..n {
            d[[i, i]] -= C64::new(1.0, 0.0);
        }
        assert!(frobenius(&d) < 1e-10);
    }

    #[test]
    fn additivity_with_identity_loop_is_exact() {
        let g = build_geometry(4, 4, 1, (-2, -2)).unwrap();
        let (l1, l2) = switches(g);
        let id_loop = projection_loop(&LatticeOperator::identity(g), 1.0).unwrap();
        let zero = zero_protocol(g, 1.0).unwrap();
        let t1 = evolve(&id_loop, &EvolutionConfig::default()).unwrap();
        let t2 = evolve(&zero, &EvolutionConfig::default()).unwrap();
        let rep = additivity_check(&t1, &t2, &l1, &l2, &QuadratureConfig::default()).unwrap();
        assert!(rep.defect < 1e-10);
    }
}
