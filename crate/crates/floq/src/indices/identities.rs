//! Finite-dimensional checks of the algebraic identities behind the index
//! theory. At finite matrix size every step is exact trace algebra, so the
//! defects measure only roundoff and quadrature.

use super::bulk::{bulk_index, loop_integrand, projection_loop, QuadratureConfig};
use crate::error::Result;
use crate::operator::{adjoint, commutator_diag, LatticeOperator, SwitchFunction};
use crate::propagator::{evolve, EvolutionConfig, PropagatorTrajectory};
use crate::rng::SplitMix64;
use crate::spectral::chern_number;
use ndarray::{Array1, Array2};
use ndarray_linalg::{Eigh, UPLO};
use num_complex::Complex64 as C64;

/// Maximum absolute defect per identity.
#[derive(Clone, Copy, Debug)]
pub struct IdentityDefects {
    /// Product-loop decomposition residue (additivity integrand identity).
    pub additivity_residue: f64,
    /// Windowed commutator identity behind the bulk-edge equality.
    pub bulk_edge_algebraic: f64,
    /// Projection-loop bulk index against the real-space Chern number.
    pub chern_loop: f64,
    /// Periodic trace = position matrix element = Fourier winding, 1d.
    pub periodic_trace: f64,
}

fn tr(m: &Array2<C64>) -> C64 {
    m.diag().sum()
}

/// Sample `U(t)` and its generator at a time strictly inside a segment.
fn sample(traj: &PropagatorTrajectory, t: f64) -> Result<(Array2<C64>, Array2<C64>)> {
    let u = traj.propagator_at(t)?.matrix;
    let h = traj.protocol.segment_at(t).generator.matrix.clone();
    Ok((u, h))
}

/// Evaluate all identity defects on the given trajectories at the sampled
/// times. The second trajectory enters only the product-decomposition
/// identity; pass the first one again to test the pair `(U, U)`.
pub fn algebraic_identity_suite(
    traj_u: &PropagatorTrajectory,
    traj_v: &PropagatorTrajectory,
    lambda1: &SwitchFunction,
    lambda2: &SwitchFunction,
    window_switch: &SwitchFunction,
    t_samples: &[f64],
    quad: &QuadratureConfig,
) -> Result<IdentityDefects> {
    let mut additivity_residue = 0.0f64;
    let mut bulk_edge_algebraic = 0.0f64;
    for &t in t_samples {
        let (u, h_u) = sample(traj_u, t)?;
        let (v, h_v) = sample(traj_v, t)?;
        bulk_edge_algebraic = bulk_edge_algebraic.max(windowed_commutator_defect(
            &u,
            &h_u,
            &lambda2.values,
            &window_switch.values,
        ));
        additivity_residue = additivity_residue.max(product_decomposition_defect(
            &u,
            &h_u,
            &v,
            &h_v,
            &lambda1.values,
            &lambda2.values,
        ));
    }
    let chern_loop = chern_loop_defect(traj_u, lambda1, lambda2, quad)?;
    let periodic_trace = lemma_periodic_trace_triple(64, 3, 0xabcd).1;
    Ok(IdentityDefects {
        additivity_residue,
        bulk_edge_algebraic,
        chern_loop,
        periodic_trace,
    })
}

/// Defect of the windowed identity
/// `Tr([L2,U] U* [(dU)U*, P]) = 1/2 Tr((dU)U* [[P,U]U*, [L2,U]U*])
///  + 1/2 d/dt Tr([[L2,U], P] U*)`,
/// with the time derivative expanded through the generator.
fn windowed_commutator_defect(
    u: &Array2<C64>,
    h: &Array2<C64>,
    l2: &Array1<f64>,
    p: &Array1<f64>,
) -> f64 {
    let minus_i = C64::new(0.0, -1.0);
    let ud = adjoint(u);
    let udot = h.dot(u).mapv(|z| z * minus_i);
    let udot_dag = adjoint(&udot);

    // commutator_diag(p, X) = [diag(p), X]; [X, diag(p)] is its negative
    let c2u = commutator_diag(l2, u);
    let dudag = udot.dot(&ud);
    let lhs = tr(&c2u.dot(&ud).dot(&commutator_diag(p, &dudag).mapv(|z| -z)));
    let first = {
        let a = commutator_diag(p, u).dot(&ud);
        let b = c2u.dot(&ud);
        tr(&dudag.dot(&(a.dot(&b) - b.dot(&a)))) * C64::new(0.5, 0.0)
    };
    let second = {
        // d/dt Tr([[L2, U], P] U^dag) through the generator
        let c2udot = commutator_diag(l2, &udot);
        let term1 = tr(&commutator_diag(p, &c2udot).mapv(|z| -z).dot(&ud));
        let term2 = tr(&commutator_diag(p, &c2u).mapv(|z| -z).dot(&udot_dag));
        (term1 + term2) * C64::new(0.5, 0.0)
    };
    (lhs - (first + second)).norm()
}

/// Defect of the product-loop integrand decomposition: the integrand of
/// `UV` minus those of `U` and `V` equals a total time derivative (the two
/// switch-commutator traces vanish identically at finite dimension).
fn product_decomposition_defect(
    u: &Array2<C64>,
    h_u: &Array2<C64>,
    v: &Array2<C64>,
    h_v: &Array2<C64>,
    l1: &Array1<f64>,
    l2: &Array1<f64>,
) -> f64 {
    let minus_i = C64::new(0.0, -1.0);
    let udot = h_u.dot(u).mapv(|z| z * minus_i);
    let vdot = h_v.dot(v).mapv(|z| z * minus_i);
    let w = u.dot(v);
    let wdot = &udot.dot(v) + &u.dot(&vdot);

    let g_w = loop_integrand(&w, &wdot, l1, l2);
    let g_u = loop_integrand(u, &udot, l1, l2);
    let g_v = loop_integrand(v, &vdot, l1, l2);
    let direct = g_w - g_u - g_v;

    // G = U^dag [L1,U][L2,V] V^dag - (1 <-> 2); formula value is -dG/dt
    let ud = adjoint(u);
    let vd = adjoint(v);
    let uddot = adjoint(&udot);
    let vddot = adjoint(&vdot);
    let d_of = |la: &Array1<f64>, lb: &Array1<f64>| {
        let cu = commutator_diag(la, u);
        let cv = commutator_diag(lb, v);
        let cudot = commutator_diag(la, &udot);
        let cvdot = commutator_diag(lb, &vdot);
        let t1 = uddot.dot(&cu).dot(&cv).dot(&vd);
        let t2 = ud.dot(&cudot).dot(&cv).dot(&vd);
        let t3 = ud.dot(&cu).dot(&cvdot).dot(&vd);
        let t4 = ud.dot(&cu).dot(&cv).dot(&vddot);
        tr(&(&(&t1 + &t2) + &(&t3 + &t4)))
    };
    let formula = -(d_of(l1, l2) - d_of(l2, l1));
    (direct - formula).norm()
}

/// `I_B` of the phase loop of a projection against the Kubo-Streda Chern
/// number of the same projection. The projection is the lower spectral
/// half of the trajectory's first segment generator.
fn chern_loop_defect(
    traj: &PropagatorTrajectory,
    lambda1: &SwitchFunction,
    lambda2: &SwitchFunction,
    quad: &QuadratureConfig,
) -> Result<f64> {
    let g = traj.geometry;
    let h = &traj.protocol.segments[0].generator.matrix;
    let (_, vecs) = h.eigh(UPLO::Lower)?;
    let half = g.dim() / 2;
    let cols = vecs.slice(ndarray::s![.., ..half.max(1)]).to_owned();
    let p = LatticeOperator::new(g, cols.dot(&adjoint(&cols)))?;
    let c = chern_number(&p, lambda1, lambda2)?;
    let loop_proto = projection_loop(&p, traj.period())?;
    let loop_traj = evolve(&loop_proto, &EvolutionConfig::default())?;
    let ib = bulk_index(&loop_traj, lambda1, lambda2, quad)?;
    Ok((ib.raw - c.raw).norm())
}

/// The three equal values of the periodic-trace identity on a banded
/// translation-invariant pair in one dimension:
/// `Tr(A [Lambda, B])`, `(A X B)_{00}` with `X` the position operator, and
/// the Fourier winding `i \int dk/2pi  A(k) dB/dk`.
///
/// Returns `(values, max pairwise defect)`.
pub fn lemma_periodic_trace_triple(n: usize, band: i64, seed: u64) -> ([C64; 3], f64) {
    let m = n as i64 / 2;
    let mut rng = SplitMix64::new(seed);
    let mut coeff = |_: i64| C64::new(rng.next_symmetric(1.0), rng.next_symmetric(1.0));
    let a_coeffs: Vec<(i64, C64)> = (-band..=band).map(|d| (d, coeff(d))).collect();
    let b_coeffs: Vec<(i64, C64)> = (-band..=band).map(|d| (d, coeff(d))).collect();

    // A_{i,j} = a_{j-i}: the coefficient is indexed by the displacement
    let toeplitz = |coeffs: &[(i64, C64)]| {
        let mut t = Array2::<C64>::zeros((n, n));
        for i in 0..n as i64 {
            for j in 0..n as i64 {
                let d = j - i;
                if d.abs() <= band {
                    t[[i as usize, j as usize]] = coeffs[(d + band) as usize].1;
                }
            }
        }
        t
    };
    let a = toeplitz(&a_coeffs);
    let b = toeplitz(&b_coeffs);

    // value 1: Tr(A [Lambda, B]) with the sharp switch at coordinate 0
    let lambda = Array1::from_shape_fn(n, |i| if i as i64 - m >= 0 { 1.0 } else { 0.0 });
    let t1 = tr(&a.dot(&commutator_diag(&lambda, &b)));

    // value 2: (A X B) at the coordinate-0 site
    let x = Array1::from_shape_fn(n, |i| (i as i64 - m) as f64);
    let mut xb = b.clone();
    for i in 0..n {
        for j in 0..n {
            xb[[i, j]] *= C64::new(x[i], 0.0);
        }
    }
    let axb = a.dot(&xb);
    let idx0 = m as usize;
    let t2 = axb[[idx0, idx0]];

    // value 3: Fourier winding from the center-row symbols, trapezoid rule
    let n_k = 256;
    let symbol = |mat: &Array2<C64>, k: f64| {
        let mut s = C64::new(0.0, 0.0);
        for d in -band..=band {
            let col = (idx0 as i64 + d) as usize;
            s += mat[[idx0, col]] * C64::from_polar(1.0, k * d as f64);
        }
        s
    };
    let symbol_deriv = |mat: &Array2<C64>, k: f64| {
        let mut s = C64::new(0.0, 0.0);
        for d in -band..=band {
            let col = (idx0 as i64 + d) as usize;
            s += mat[[idx0, col]] * C64::new(0.0, d as f64) * C64::from_polar(1.0, k * d as f64);
        }
        s
    };
    let mut t3 = C64::new(0.0, 0.0);
    for j in 0..n_k {
        let k = std::f64::consts::TAU * j as f64 / n_k as f64;
        t3 += symbol(&a, k) * symbol_deriv(&b, k);
    }
    t3 *= C64::new(0.0, 1.0) / C64::new(n_k as f64, 0.0);

    let defect = (t1 - t2)
        .norm()
        .max((t2 - t3).norm())
        .max((t1 - t3).norm());
    ([t1, t2, t3], defect)
}
