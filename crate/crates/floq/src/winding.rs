//! Momentum-space winding numbers for translation-invariant drives.
//!
//! Fourier orientation used throughout: `A(k) = sum_n e^{+i k.n} A_{0,n}`,
//! so a hopping list `{(d, M)}` has the symbol `H(k) = sum_d e^{-i k.d} M_d`
//! and an upward shift along direction 2 has the symbol `e^{-i k_2}`. With
//! this orientation the edge winding
//! `(i / 2 pi) \int dk_2 Tr( U^dag dU/dk_2 Q )`
//! assigns +1 to the upward boundary shift, matching the real-space edge
//! index sign.

use crate::error::{Error, Result};
use crate::indices::IndexReport;
use crate::operator::{adjoint, frobenius, unitarity_defect};
use crate::propagator::SegmentEigen;
use crate::protocol::BlochModel;
use crate::spectral::branch_energies;
use ndarray::{Array1, Array2};

use num_complex::Complex64 as C64;
use std::f64::consts::TAU;

/// Grid resolution for torus integrals.
#[derive(Clone, Copy, Debug)]
pub struct BlochGrid {
    pub n_k1: usize,
    pub n_k2: usize,
    /// Total time intervals, distributed over segments by duration.
    pub n_t: usize,
}

impl BlochGrid {
    pub fn cubic(n: usize) -> Self {
        Self {
            n_k1: n,
            n_k2: n,
            n_t: n,
        }
    }
}

/// A loop of Bloch unitaries: either a drive whose one-period Bloch
/// propagator is the identity at every `k`, or the relative loop of a drive
/// against the effective vacuum of one of its gaps (computed pointwise in
/// `k` through the same branch-cut logarithm as in real space).
#[derive(Clone, Copy, Debug)]
pub enum BlochLoop<'a> {
    Protocol(&'a BlochModel),
    Relative { model: &'a BlochModel, epsilon: f64 },
}

/// Segment list `(duration, H(k))` of a Bloch loop at fixed `k`.
fn loop_segments_at(loop_: &BlochLoop<'_>, k: (f64, f64)) -> Result<Vec<(f64, Array2<C64>)>> {
    match loop_ {
        BlochLoop::Protocol(model) => Ok((0..model.segments.len())
            .map(|s| (model.segments[s].duration, model.h_k(s, k)))
            .collect()),
        BlochLoop::Relative { model, epsilon } => {
            let mut u = Array2::<C64>::eye(model.n_orb);
            let mut segs: Vec<(f64, Array2<C64>)> = Vec::with_capacity(model.segments.len() + 1);
            for s in 0..model.segments.len() {
                let h = model.h_k(s, k);
                let eig = SegmentEigen::new(&h)?;
                u = eig.propagate(model.segments[s].duration, &u);
                segs.push((
                    model.segments[s].duration / 2.0,
                    h.mapv(|z| z * C64::new(2.0, 0.0)),
                ));
            }
            let h_eff = bloch_effective_h(&u, *epsilon, model.period)?;
            let rebuilt = SegmentEigen::new(&h_eff)?.exponential(model.period);
            let defect = frobenius(&(&rebuilt - &u));
            if defect > 1e-8 * (1.0 + model.n_orb as f64) {
                return Err(Error::Reconstruction { defect, tol: 1e-8 });
            }
            segs.push((
                model.period / 2.0,
                h_eff.mapv(|z| z * C64::new(-2.0, 0.0)),
            ));
            Ok(segs)
        }
    }
}

/// Branch-cut logarithm of a small unitary: `(i/T) log U` with phases
/// lifted to `(-T eps, -T eps + 2 pi)`. Shares the cluster-splitting
/// eigensystem with the real-space effective Hamiltonian.
pub fn bloch_effective_h(u: &Array2<C64>, epsilon: f64, period: f64) -> Result<Array2<C64>> {
    let (phases, vecs, defect) = crate::spectral::unitary_eigensystem(u)?;
    if defect > 1e-9 * (1.0 + u.nrows() as f64) {
        return Err(Error::Reconstruction {
            defect,
            tol: 1e-9,
        });
    }
    let energies = branch_energies(&phases, epsilon, period);
    let mut scaled = adjoint(&vecs);
    for (i, e) in energies.iter().enumerate() {
        let f = C64::new(*e, 0.0);
        scaled.row_mut(i).mapv_inplace(|z| z * f);
    }
    let h = vecs.dot(&scaled);
    Ok((&h + &adjoint(&h)).mapv(|z| z * C64::new(0.5, 0.0)))
}

/// Winding of the edge Bloch propagator along `k_2`:
/// `(i / 2 pi) sum_k Tr( U^dag (dU/dk_2) Q_r ) dk`,
/// with centered differences on the periodic grid and the trace windowed to
/// the first `r` columns of the finite strip.
///
/// Errors when halving the grid moves the value by more than 0.1.
pub fn winding_k2(model: &BlochModel, l1: usize, r: i64, n_k: usize) -> Result<IndexReport> {
    if n_k < 8 || n_k % 4 != 0 {
        return Err(Error::InvalidArgument(
            "winding grid must be a multiple of 4, at least 8".into(),
        ));
    }
    let dim = l1 * model.n_orb;
    let mut u_k: Vec<Array2<C64>> = Vec::with_capacity(n_k);
    for j in 0..n_k {
        let k2 = TAU * j as f64 / n_k as f64;
        let mut u = Array2::<C64>::eye(dim);
        for s in 0..model.segments.len() {
            let h = model.h_column_k2(s, l1, k2);
            let eig = SegmentEigen::new(&h)?;
            u = eig.propagate(model.segments[s].duration, &u);
        }
        let defect = unitarity_defect(&u);
        if defect > 1e-8 * (1.0 + dim as f64) {
            return Err(Error::NonUnitary { defect, tol: 1e-8 });
        }
        u_k.push(u);
    }
    let window = Array1::from_shape_fn(dim, |i| {
        if (i / model.n_orb) as i64 <= r - 1 {
            1.0
        } else {
            0.0
        }
    });
    let fine = windowed_winding_sum(&u_k, &window, 1);
    let coarse = windowed_winding_sum(&u_k, &window, 2);
    if (fine - coarse).norm() > 0.1 {
        return Err(Error::GridTooCoarse {
            value: fine.re,
            refined: coarse.re,
        });
    }
    let mut rep = IndexReport::new(fine).with_kind("winding-k2").with_window(r);
    rep.meta.samples_per_segment = Some(n_k);
    Ok(rep)
}

/// `(i / 2 pi) sum_k Tr( U^dag dU/dk Q ) dk` over a periodic family with
/// centered differences at the given stride.
pub(crate) fn windowed_winding_sum(
    u_k: &[Array2<C64>],
    window: &Array1<f64>,
    stride: usize,
) -> C64 {
    let n_k = u_k.len();
    let count = n_k / stride;
    let dk = TAU / count as f64;
    let mut acc = C64::new(0.0, 0.0);
    for jj in 0..count {
        let j = jj * stride;
        let plus = &u_k[(j + stride) % n_k];
        let minus = &u_k[(j + n_k - stride) % n_k];
        let du = (plus - minus).mapv(|z| z / C64::new(2.0 * dk, 0.0));
        let m = adjoint(&u_k[j]).dot(&du);
        let tr: C64 = m
            .diag()
            .iter()
            .zip(window.iter())
            .map(|(z, w)| z * C64::new(*w, 0.0))
            .sum();
        acc += tr * C64::new(dk, 0.0);
    }
    acc * C64::new(0.0, 1.0) / C64::new(TAU, 0.0)
}

/// Degree of the Bloch loop map on the time-momentum torus:
/// `-(1/8 pi^2) \int dt d^2k tr( U^dag dU/dt [U^dag dU/dk1, U^dag dU/dk2] )`,
/// with the exact time derivative `-i H(t,k) U` and centered k-differences.
pub fn winding_3d(loop_: &BlochLoop<'_>, grid: &BlochGrid) -> Result<IndexReport> {
    let (nk1, nk2) = (grid.n_k1, grid.n_k2);
    let model = match loop_ {
        BlochLoop::Protocol(m) => m,
        BlochLoop::Relative { model, .. } => model,
    };
    let n_orb = model.n_orb;
    let period = model.period;

    // per-k segment lists; memory is n_k^2 * segments * n_orb^2
    let mut segs_k: Vec<Vec<(f64, Array2<C64>)>> = Vec::with_capacity(nk1 * nk2);
    for j1 in 0..nk1 {
        for j2 in 0..nk2 {
            let k = (TAU * j1 as f64 / nk1 as f64, TAU * j2 as f64 / nk2 as f64);
            segs_k.push(loop_segments_at(loop_, k)?);
        }
    }
    let n_segments = segs_k[0].len();
    let durations: Vec<f64> = segs_k[0].iter().map(|s| s.0).collect();

    // state U(t, k) for every k, advanced segment by segment
    let mut u_k: Vec<Array2<C64>> = vec![Array2::eye(n_orb); nk1 * nk2];
    let at = |j1: usize, j2: usize| j1 * nk2 + j2;

    let mut total = C64::new(0.0, 0.0);
    for s in 0..n_segments {
        // node count proportional to duration, even, at least 4
        let mut m = ((grid.n_t as f64) * durations[s] / period).ceil() as usize;
        m = m.max(4);
        if m % 2 == 1 {
            m += 1;
        }
        let h_t = durations[s] / m as f64;
        let eigs: Vec<SegmentEigen> = segs_k
            .iter()
            .map(|segs| SegmentEigen::new(&segs[s].1))
            .collect::<Result<Vec<_>>>()?;
        let prepared: Vec<Array2<C64>> = eigs
            .iter()
            .zip(u_k.iter())
            .map(|(e, u)| e.prepare(u))
            .collect();
        let mut u_now: Vec<Array2<C64>> = u_k.clone();
        for node in 0..=m {
            let tau = h_t * node as f64;
            if node > 0 {
                for (i, e) in eigs.iter().enumerate() {
                    u_now[i] = e.propagate_prepared(tau, &prepared[i]);
                }
            }
            let w = if node == 0 || node == m { 1.0 } else if node % 2 == 1 { 4.0 } else { 2.0 };
            let weight = w * h_t / 3.0;
            let dk1 = TAU / nk1 as f64;
            let dk2 = TAU / nk2 as f64;
            let mut slice_sum = C64::new(0.0, 0.0);
            for j1 in 0..nk1 {
                for j2 in 0..nk2 {
                    let u = &u_now[at(j1, j2)];
                    let ud = adjoint(u);
                    let du1 = (&u_now[at((j1 + 1) % nk1, j2)]
                        - &u_now[at((j1 + nk1 - 1) % nk1, j2)])
                        .mapv(|z| z / C64::new(2.0 * dk1, 0.0));
                    let du2 = (&u_now[at(j1, (j2 + 1) % nk2)]
                        - &u_now[at(j1, (j2 + nk2 - 1) % nk2)])
                        .mapv(|z| z / C64::new(2.0 * dk2, 0.0));
                    let a1 = ud.dot(&du1);
                    let a2 = ud.dot(&du2);
                    let hdot = segs_k[at(j1, j2)][s].1.dot(u).mapv(|z| z * C64::new(0.0, -1.0));
                    let a0 = ud.dot(&hdot);
                    let inner = a1.dot(&a2) - a2.dot(&a1);
                    slice_sum += a0.dot(&inner).diag().sum() * C64::new(dk1 * dk2, 0.0);
                }
            }
            total += slice_sum * C64::new(weight, 0.0);
        }
        for (i, e) in eigs.iter().enumerate() {
            u_k[i] = e.propagate_prepared(durations[s], &prepared[i]);
        }
    }

    // loop condition at t = T
    let mut max_defect = 0.0f64;
    for u in &u_k {
        let mut d = u.clone();
        for i in 0..n_orb {
            d[[i, i]] -= C64::new(1.0, 0.0);
        }
        max_defect = max_defect.max(frobenius(&d));
    }
    if max_defect > 1e-8 {
        return Err(Error::LoopCondition {
            defect: max_defect,
            tol: 1e-8,
        });
    }

    let raw = total * C64::new(-1.0 / (8.0 * std::f64::consts::PI * std::f64::consts::PI), 0.0);
    let mut rep = IndexReport::new(raw).with_kind("winding-3d");
    rep.meta.samples_per_segment = Some(grid.n_t);
    Ok(rep)
}
