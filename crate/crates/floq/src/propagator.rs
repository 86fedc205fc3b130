//! Exact unitary evolution of piecewise-constant drives.
//!
//! Within a constant segment the propagator advances by the matrix
//! exponential `e^{-i dt H}`, evaluated through the Hermitian
//! eigendecomposition of the segment generator. There is no
//! time-discretization error; residuals in downstream quantities isolate
//! finite-lattice effects.

use crate::error::{Error, Result};
use crate::geometry::{LatticeGeometry, RestrictionMap};
use crate::locality::{decay_rate_fit, DecayProfile, LocalityProfile};
use crate::operator::{frobenius, restrict, unitarity_defect, LatticeOperator};
use crate::protocol::DriveProtocol;
use crate::tol;
use ndarray::{Array1, Array2};
use ndarray_linalg::{Eigh, Inverse, UPLO};
use num_complex::Complex64 as C64;

/// Evolution settings.
#[derive(Clone, Copy, Debug)]
pub struct EvolutionConfig {
    /// Unitary samples stored per segment (>= 2; endpoints always included).
    pub samples_per_segment: usize,
    /// Project drifting samples back to the nearest unitary.
    pub reunitarize: bool,
}

impl Default for EvolutionConfig {
    fn default() -> Self {
        Self {
            samples_per_segment: 2,
            reunitarize: true,
        }
    }
}

/// Eigendecomposition of one segment generator.
#[derive(Clone, Debug)]
pub struct SegmentEigen {
    pub values: Array1<f64>,
    pub vectors: Array2<C64>,
}

impl SegmentEigen {
    pub fn new(h: &Array2<C64>) -> Result<Self> {
        let (values, vectors) = h.eigh(UPLO::Lower)?;
        Ok(Self { values, vectors })
    }

    /// Change of basis `V^dag . rhs`, reused across several `propagate` calls
    /// with the same right factor.
    pub fn prepare(&self, rhs: &Array2<C64>) -> Array2<C64> {
        crate::operator::adjoint(&self.vectors).dot(rhs)
    }

    /// `e^{-i dt H} . rhs` given `prepared = V^dag . rhs`.
    pub fn propagate_prepared(&self, dt: f64, prepared: &Array2<C64>) -> Array2<C64> {
        let mut scaled = prepared.clone();
        for (i, lam) in self.values.iter().enumerate() {
            let phase = C64::from_polar(1.0, -dt * lam);
            scaled.row_mut(i).mapv_inplace(|z| z * phase);
        }
        self.vectors.dot(&scaled)
    }

    /// `e^{-i dt H} . rhs` using the precomputed eigenbasis.
    pub fn propagate(&self, dt: f64, rhs: &Array2<C64>) -> Array2<C64> {
        let prepared = self.prepare(rhs);
        self.propagate_prepared(dt, &prepared)
    }

    /// `e^{-i dt H}` itself.
    pub fn exponential(&self, dt: f64) -> Array2<C64> {
        let n = self.vectors.nrows();
        self.propagate(dt, &Array2::eye(n))
    }
}

/// Matrix exponential `e^{-i t H}` of a Hermitian generator.
pub fn expm_hermitian(h: &Array2<C64>, t: f64) -> Result<Array2<C64>> {
    Ok(SegmentEigen::new(h)?.exponential(t))
}

/// Nearest unitary (polar factor) by Newton iteration; converges
/// quadratically from the small drifts seen here.
pub fn nearest_unitary(u: &Array2<C64>) -> Result<Array2<C64>> {
    let mut x = u.clone();
    for _ in 0..4 {
        if unitarity_defect(&x) < 1e-14 {
            break;
        }
        let inv_adj = crate::operator::adjoint(&x.inv()?);
        x = (&x + &inv_adj).mapv(|z| z * C64::new(0.5, 0.0));
    }
    Ok(x)
}

/// Unitary family `U(t) = U(t, 0)` of a drive, sampled on a time grid that
/// contains every segment boundary.
#[derive(Clone, Debug)]
pub struct PropagatorTrajectory {
    pub protocol: DriveProtocol,
    pub geometry: LatticeGeometry,
    pub times: Vec<f64>,
    pub samples: Vec<Array2<C64>>,
    /// Eigendecompositions of the segment generators, in segment order.
    pub segment_eigens: Vec<SegmentEigen>,
    pub config: EvolutionConfig,
}

/// Evolve a protocol from the identity at `t = 0` to `t = T`.
pub fn evolve(protocol: &DriveProtocol, config: &EvolutionConfig) -> Result<PropagatorTrajectory> {
    if config.samples_per_segment < 2 {
        return Err(Error::InvalidArgument(
            "samples_per_segment must be at least 2".into(),
        ));
    }
    let geometry = protocol.geometry();
    let n = geometry.dim();
    let mut times = vec![0.0];
    let mut samples = vec![Array2::<C64>::eye(n)];
    let mut segment_eigens = Vec::with_capacity(protocol.segments.len());

    let mut t0 = 0.0;
    for seg in &protocol.segments {
        let eig = SegmentEigen::new(&seg.generator.matrix)?;
        let seg_start = samples.last().unwrap().clone();
        let prepared = eig.prepare(&seg_start);
        let steps = config.samples_per_segment - 1;
        let dt = seg.duration / steps as f64;
        for s in 1..=steps {
            // one exact exponential from the segment start per sample; no
            // error accumulates across samples of one segment
            let tau = if s == steps { seg.duration } else { dt * s as f64 };
            let u_s = eig.propagate_prepared(tau, &prepared);
            times.push(t0 + tau);
            samples.push(u_s);
        }
        let last = samples.len() - 1;
        if config.reunitarize && unitarity_defect(&samples[last]) > tol::REUNITARIZE * n as f64 {
            samples[last] = nearest_unitary(&samples[last])?;
        }
        t0 += seg.duration;
        segment_eigens.push(eig);
    }
    Ok(PropagatorTrajectory {
        protocol: protocol.clone(),
        geometry,
        times,
        samples,
        segment_eigens,
        config: *config,
    })
}

impl PropagatorTrajectory {
    pub fn period(&self) -> f64 {
        self.protocol.period
    }

    /// Stored sample at the final time `t = T`.
    pub fn at_period(&self) -> &Array2<C64> {
        self.samples.last().unwrap()
    }

    /// Index of the segment containing `t` and the segment's start time.
    fn segment_index_at(&self, t: f64) -> (usize, f64) {
        let mut acc = 0.0;
        for (i, seg) in self.protocol.segments.iter().enumerate() {
            if t < acc + seg.duration || i == self.protocol.segments.len() - 1 {
                return (i, acc);
            }
            acc += seg.duration;
        }
        unreachable!()
    }

    /// `U(t)` for any `t` in `[0, T]`: the nearest earlier stored sample is
    /// extended by one exact in-segment exponential (never interpolated).
    pub fn propagator_at(&self, t: f64) -> Result<LatticeOperator> {
        let tol_t = 1e-12 * self.period().max(1.0);
        if t < -tol_t || t > self.period() + tol_t {
            return Err(Error::InvalidArgument(format!(
                "time {t} outside [0, {}]",
                self.period()
            )));
        }
        let t = t.clamp(0.0, self.period());
        // exact grid hit
        if let Some(k) = self
            .times
            .iter()
            .position(|&tk| (tk - t).abs() <= tol_t)
        {
            return LatticeOperator::new(self.geometry, self.samples[k].clone());
        }
        let (seg_idx, seg_start) = self.segment_index_at(t);
        // nearest earlier sample within this segment
        let mut base_idx = 0;
        for (k, &tk) in self.times.iter().enumerate() {
            if tk <= t + tol_t && tk >= seg_start - tol_t {
                base_idx = k;
            }
            if tk > t {
                break;
            }
        }
        let dt = t - self.times[base_idx];
        let u = self.segment_eigens[seg_idx].propagate(dt, &self.samples[base_idx]);
        LatticeOperator::new(self.geometry, u)
    }

    /// Two-parameter propagator `U(t, r)` recomputed from scratch.
    pub fn propagator_between(&self, t: f64, r: f64) -> Result<LatticeOperator> {
        if !(0.0..=self.period() + 1e-12).contains(&r) || r > t + 1e-12 || t > self.period() + 1e-12
        {
            return Err(Error::InvalidArgument(format!(
                "need 0 <= r <= t <= T, got r = {r}, t = {t}"
            )));
        }
        let n = self.geometry.dim();
        let mut u = Array2::<C64>::eye(n);
        let mut acc = 0.0;
        for (i, seg) in self.protocol.segments.iter().enumerate() {
            let seg_lo = acc;
            let seg_hi = acc + seg.duration;
            acc = seg_hi;
            let lo = seg_lo.max(r);
            let hi = seg_hi.min(t);
            if hi <= lo + 1e-15 {
                continue;
            }
            u = self.segment_eigens[i].propagate(hi - lo, &u);
        }
        LatticeOperator::new(self.geometry, u)
    }

    /// `|U(t) - U(t, r) U(r)|` (Frobenius), with `U(t, r)` freshly computed.
    pub fn composition_defect(&self, t: f64, r: f64) -> Result<f64> {
        let u_t = self.propagator_at(t)?;
        let u_r = self.propagator_at(r)?;
        let u_tr = self.propagator_between(t, r)?;
        let recomposed = u_tr.matrix.dot(&u_r.matrix);
        Ok(frobenius(&(&u_t.matrix - &recomposed)))
    }

    /// Largest unitarity defect over the stored samples.
    pub fn max_unitarity_defect(&self) -> f64 {
        self.samples
            .iter()
            .map(unitarity_defect)
            .fold(0.0, f64::max)
    }
}

/// Difference between the edge evolution and the truncated bulk evolution,
/// `D(t) = U_E(t) - i* U_B(t) i`, with its mixed confinement fit about the
/// cut (exponential decay away from the edge in direction 1, locality in
/// direction 2).
pub fn edge_bulk_difference(
    protocol: &DriveProtocol,
    map: &RestrictionMap,
    t: f64,
) -> Result<(LatticeOperator, LocalityProfile)> {
    if protocol.geometry() != map.source {
        return Err(Error::GeometryMismatch(
            "protocol does not live on the bulk geometry".into(),
        ));
    }
    let edge_protocol = restrict_protocol(protocol, map)?;
    let config = EvolutionConfig::default();
    let bulk = evolve(protocol, &config)?;
    let edge = evolve(&edge_protocol, &config)?;
    let u_b = bulk.propagator_at(t)?;
    let u_e = edge.propagator_at(t)?;
    let d = u_e.sub(&restrict(&u_b, map)?)?;
    let fit = decay_rate_fit(
        &d,
        DecayProfile::Mixed {
            center: map.target.origin1,
        },
    );
    Ok((d, fit))
}

/// Truncate every segment generator of a drive to a sub-rectangle.
pub fn restrict_protocol(protocol: &DriveProtocol, map: &RestrictionMap) -> Result<DriveProtocol> {
    let segments = protocol
        .segments
        .iter()
        .map(|s| {
            Ok(crate::protocol::Segment {
                duration: s.duration,
                generator: restrict(&s.generator, map)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    DriveProtocol::new(protocol.period, segments, protocol.bloch.clone())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::build_geometry;
    use crate::models::five_step_drive;
    use crate::protocol::{static_drive, zero_protocol};
    use crate::rng::SplitMix64;

    fn random_hermitian(g: LatticeGeometry, seed: u64) -> LatticeOperator {
        let n = g.dim();
        let mut rng = SplitMix64::new(seed);
        let a = Array2::from_shape_fn((n, n), |_| {
            C64::new(rng.next_symmetric(1.0), rng.next_symmetric(1.0))
        });
        let h = (&a + &crate::operator::adjoint(&a)).mapv(|z| z * C64::new(0.5, 0.0));
        LatticeOperator::new(g, h).unwrap()
    }

    #[test]
    fn zero_protocol_stays_at_identity() {
        let g = build_geometry(3, 3, 1, (0, 0)).unwrap();
        let p = zero_protocol(g, 1.0).unwrap();
        let traj = evolve(&p, &EvolutionConfig::default()).unwrap();
        for s in &traj.samples {
            assert_eq!(s, &Array2::<C64>::eye(g.dim()));
        }
    }

    #[test]
    fn static_drive_matches_direct_exponential() {
        let g = build_geometry(3, 2, 2, (0, 0)).unwrap();
        let h = random_hermitian(g, 7);
        let t_final = 0.8;
        let p = static_drive(h.clone(), t_final).unwrap();
        let traj = evolve(&p, &EvolutionConfig::default()).unwrap();
        // independent spectral oracle
        let (vals, vecs) = h.matrix.eigh(UPLO::Lower).unwrap();
        let mut d = Array2::<C64>::zeros((g.dim(), g.dim()));
        for (i, lam) in vals.iter().enumerate() {
            d[[i, i]] = C64::from_polar(1.0, -t_final * lam);
        }
        let oracle = vecs.dot(&d).dot(&crate::operator::adjoint(&vecs));
        assert!(frobenius(&(traj.at_period() - &oracle)) < 1e-12);
    }

    #[test]
    fn half_period_evolutions_compose() {
        let g = build_geometry(4, 4, 2, (-2, -2)).unwrap();
        let p = five_step_drive(g, 1.1, 0.3, 1.0).unwrap();
        let traj = evolve(&p, &EvolutionConfig::default()).unwrap();
        assert!(traj.composition_defect(1.0, 0.5).unwrap() < 1e-12);
        assert!(traj.composition_defect(1.0, 0.0).unwrap() < 1e-12);
        assert!(traj.composition_defect(0.7, 0.7).unwrap() < 1e-12);
        // generic interior point
        assert!(traj.composition_defect(0.9, 0.35).unwrap() < 1e-11);
    }

    #[test]
    fn propagator_at_interior_times_is_unitary() {
        let g = build_geometry(4, 4, 2, (-2, -2)).unwrap();
        let p = five_step_drive(g, 0.9, 0.2, 1.0).unwrap();
        let traj = evolve(&p, &EvolutionConfig::default()).unwrap();
        let u0 = traj.propagator_at(0.0).unwrap();
        assert_eq!(u0.matrix, Array2::<C64>::eye(g.dim()));
        for t in [1.0 / 3.0, 0.5, 0.77, 1.0] {
            let u = traj.propagator_at(t).unwrap();
            assert!(u.unitarity_defect() < 1e-12, "defect at t = {t}");
        }
        assert!(traj.propagator_at(-0.1).is_err());
        assert!(traj.propagator_at(1.1).is_err());
        assert!(traj.max_unitarity_defect() < tol::UNITARITY);
    }

    #[test]
    fn period_property_via_doubled_protocol() {
        // U(t + T) = U(t) U(T): compare the doubled-period evolution against
        // the product of single-period pieces.
        let g = build_geometry(4, 2, 2, (0, 0)).unwrap();
        let p = five_step_drive(g, 0.8, 0.4, 1.0).unwrap();
        let traj = evolve(&p, &EvolutionConfig::default()).unwrap();
        let mut doubled_segments = p.segments.clone();
        doubled_segments.extend(p.segments.iter().cloned());
        let p2 = DriveProtocol::new(2.0, doubled_segments, None).unwrap();
        let traj2 = evolve(&p2, &EvolutionConfig::default()).unwrap();
        for t in [0.3, 0.6, 1.0] {
            let lhs = traj2.propagator_at(t + 1.0).unwrap();
            let rhs = traj
                .propagator_at(t)
                .unwrap()
                .matrix
                .dot(traj.at_period());
            assert!(frobenius(&(&lhs.matrix - &rhs)) < 1e-11, "t = {t}");
        }
    }

    #[test]
    fn onsite_protocol_has_zero_edge_bulk_difference() {
        let bulk = build_geometry(6, 4, 1, (-3, -2)).unwrap();
        let edge = build_geometry(3, 4, 1, (0, -2)).unwrap();
        let map = RestrictionMap::new(bulk, edge).unwrap();
        // diagonal generator: truncation commutes with the evolution
        let mut rng = SplitMix64::new(4);
        let mut m = Array2::<C64>::zeros((bulk.dim(), bulk.dim()));
        for i in 0..bulk.dim() {
            m[[i, i]] = C64::new(rng.next_symmetric(1.0), 0.0);
        }
        let p = static_drive(LatticeOperator::new(bulk, m).unwrap(), 1.0).unwrap();
        for t in [0.0, 0.4, 1.0] {
            let (d, fit) = edge_bulk_difference(&p, &map, t).unwrap();
            assert!(frobenius(&d.matrix) < 1e-13, "t = {t}");
            assert!(fit.effectively_zero);
        }
    }

    #[test]
    fn edge_bulk_difference_vanishes_at_t_zero_and_is_confined_at_t_period() {
        let bulk = build_geometry(8, 8, 2, (-4, -4)).unwrap();
        let edge = build_geometry(4, 8, 2, (0, -4)).unwrap();
        let map = RestrictionMap::new(bulk, edge).unwrap();
        let p = five_step_drive(bulk, 0.8 * crate::models::five_step_full_coupling(1.0), 0.2, 1.0)
            .unwrap();
        let (d0, _) = edge_bulk_difference(&p, &map, 0.0).unwrap();
        assert_eq!(frobenius(&d0.matrix), 0.0);

        let (d, fit) = edge_bulk_difference(&p, &map, 1.0).unwrap();
        assert!(frobenius(&d.matrix) > 1e-6);
        assert!(fit.exponent > 0.0, "confinement exponent {}", fit.exponent);

        // growth bound: |D(t)| <= t * max_t |H(t)|
        let hmax = p
            .segments
            .iter()
            .map(|s| {
                let eig = SegmentEigen::new(&s.generator.matrix).unwrap();
                eig.values.iter().fold(0.0f64, |a, b| a.max(b.abs()))
            })
            .fold(0.0, f64::max);
        for t in [0.25, 0.5, 1.0] {
            let (dt, _) = edge_bulk_difference(&p, &map, t).unwrap();
            // spectral norm bounded by Frobenius; the bound has slack
            assert!(frobenius(&dt.matrix) <= 2.0 * t * hmax * (edge.dim() as f64).sqrt());
        }
    }

    #[test]
    fn continuity_in_the_generator_is_first_order() {
        let g = build_geometry(4, 4, 2, (-2, -2)).unwrap();
        let p = five_step_drive(g, 1.0, 0.3, 1.0).unwrap();
        let base = evolve(&p, &EvolutionConfig::default()).unwrap();
        let probe = random_hermitian(g, 11);
        let probe = probe.scale(C64::new(1.0 / frobenius(&probe.matrix), 0.0));
        let mut deltas = Vec::new();
        for eta in [1e-3, 1e-4] {
            let segments = p
                .segments
                .iter()
                .map(|s| crate::protocol::Segment {
                    duration: s.duration,
                    generator: s
                        .generator
                        .add(&probe.scale(C64::new(eta, 0.0)))
                        .unwrap(),
                })
                .collect();
            let p_eta = DriveProtocol::new(1.0, segments, None).unwrap();
            let traj = evolve(&p_eta, &EvolutionConfig::default()).unwrap();
            deltas.push(frobenius(&(traj.at_period() - base.at_period())));
        }
        let slope = deltas[0] / deltas[1];
        assert!(
            (3.0..30.0).contains(&slope),
            "expected first-order scaling, got ratio {slope}"
        );
    }
}
