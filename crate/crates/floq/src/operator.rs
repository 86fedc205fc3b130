//! Dense operators over the site (x) orbital basis of a lattice geometry,
//! together with switch functions and restriction/embedding.

use crate::error::{Error, Result};
use crate::geometry::{LatticeGeometry, RestrictionMap};
use ndarray::{s, Array1, Array2, ArrayView2};
use num_complex::Complex64 as C64;

/// Dense complex operator tagged with its geometry.
#[derive(Clone, Debug)]
pub struct LatticeOperator {
    pub geometry: LatticeGeometry,
    pub matrix: Array2<C64>,
}

impl LatticeOperator {
    pub fn new(geometry: LatticeGeometry, matrix: Array2<C64>) -> Result<Self> {
        let n = geometry.dim();
        if matrix.nrows() != n || matrix.ncols() != n {
            return Err(Error::GeometryMismatch(format!(
                "matrix is {}x{} but geometry dimension is {n}",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        Ok(Self { geometry, matrix })
    }

    pub fn zeros(geometry: LatticeGeometry) -> Self {
        let n = geometry.dim();
        Self {
            geometry,
            matrix: Array2::zeros((n, n)),
        }
    }

    pub fn identity(geometry: LatticeGeometry) -> Self {
        let n = geometry.dim();
        Self {
            geometry,
            matrix: Array2::eye(n),
        }
    }

    pub fn dim(&self) -> usize {
        self.geometry.dim()
    }

    /// Orbital block `A_{m,n}` for a pair of sites in physical coordinates.
    pub fn block(&self, m: (i64, i64), n: (i64, i64)) -> Option<ArrayView2<'_, C64>> {
        let g = &self.geometry;
        let i = g.index_of(m.0, m.1, 0)?;
        let j = g.index_of(n.0, n.1, 0)?;
        let k = g.n_orb;
        Some(self.matrix.slice(s![i..i + k, j..j + k]))
    }

    pub fn adjoint(&self) -> Self {
        Self {
            geometry: self.geometry,
            matrix: self.matrix.t().mapv(|z| z.conj()),
        }
    }

    pub fn dot(&self, other: &Self) -> Result<Self> {
        self.check_same_geometry(other)?;
        Ok(Self {
            geometry: self.geometry,
            matrix: self.matrix.dot(&other.matrix),
        })
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_same_geometry(other)?;
        Ok(Self {
            geometry: self.geometry,
            matrix: &self.matrix + &other.matrix,
        })
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.check_same_geometry(other)?;
        Ok(Self {
            geometry: self.geometry,
            matrix: &self.matrix - &other.matrix,
        })
    }

    pub fn scale(&self, factor: C64) -> Self {
        Self {
            geometry: self.geometry,
            matrix: self.matrix.mapv(|z| z * factor),
        }
    }

    pub fn check_same_geometry(&self, other: &Self) -> Result<()> {
        if self.geometry != other.geometry {
            return Err(Error::GeometryMismatch(format!(
                "{:?} vs {:?}",
                self.geometry, other.geometry
            )));
        }
        Ok(())
    }

    pub fn trace(&self) -> C64 {
        self.matrix.diag().sum()
    }

    /// Frobenius norm of `A - A^dag`.
    pub fn hermiticity_defect(&self) -> f64 {
        frobenius(&(&self.matrix - &self.matrix.t().mapv(|z| z.conj())))
    }

    /// Frobenius norm of `A^dag A - I`.
    pub fn unitarity_defect(&self) -> f64 {
        unitarity_defect(&self.matrix)
    }
}

/// Frobenius norm of a matrix.
pub fn frobenius(m: &Array2<C64>) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

pub fn hermiticity_defect(m: &Array2<C64>) -> f64 {
    frobenius(&(m - &m.t().mapv(|z| z.conj())))
}

pub fn unitarity_defect(m: &Array2<C64>) -> f64 {
    let n = m.nrows();
    let mut g = m.t().mapv(|z| z.conj()).dot(m);
    for i in 0..n {
        g[[i, i]] -= C64::new(1.0, 0.0);
    }
    frobenius(&g)
}

pub fn adjoint(m: &Array2<C64>) -> Array2<C64> {
    m.t().mapv(|z| z.conj())
}

/// Basic health record of an operator: departures from hermiticity and
/// unitarity (Frobenius norm), and the complex trace.
#[derive(Clone, Copy, Debug)]
pub struct OperatorDiagnostics {
    pub hermiticity_defect: f64,
    pub unitarity_defect: f64,
    pub trace: C64,
}

pub fn operator_diagnostics(a: &LatticeOperator) -> OperatorDiagnostics {
    OperatorDiagnostics {
        hermiticity_defect: a.hermiticity_defect(),
        unitarity_defect: a.unitarity_defect(),
        trace: a.trace(),
    }
}

/// Shape of a switch profile along one lattice direction.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum SwitchProfile {
    /// 0 for n < jump, 1 for n >= jump. A projection.
    Sharp,
    /// Linear ramp from 0 to 1 over `width` sites centered at the jump.
    Ramp { width: usize },
}

/// Switch function in one direction, realized as a diagonal operator.
///
/// The profile is 0 below the jump region and 1 above it, within the
/// coordinate range of the geometry.
#[derive(Clone, Debug)]
pub struct SwitchFunction {
    pub geometry: LatticeGeometry,
    pub direction: u8,
    pub jump: i64,
    pub profile: SwitchProfile,
    /// Diagonal values aligned with the basis ordering.
    pub values: Array1<f64>,
}

/// Build a switch function with the jump strictly inside the coordinate range.
pub fn switch_function(
    geometry: LatticeGeometry,
    direction: u8,
    jump: i64,
    profile: SwitchProfile,
) -> Result<SwitchFunction> {
    if direction != 1 && direction != 2 {
        return Err(Error::InvalidArgument("direction must be 1 or 2".into()));
    }
    let (lo, hi) = geometry.coordinate_range(direction);
    if jump <= lo || jump >= hi {
        return Err(Error::InvalidArgument(format!(
            "switch jump {jump} must lie strictly inside the coordinate range ({lo}, {hi})"
        )));
    }
    let values = diagonal_from_coordinate(&geometry, direction, |n| profile_value(profile, jump, n));
    Ok(SwitchFunction {
        geometry,
        direction,
        jump,
        profile,
        values,
    })
}

fn profile_value(profile: SwitchProfile, jump: i64, n: i64) -> f64 {
    match profile {
        SwitchProfile::Sharp => {
            if n >= jump {
                1.0
            } else {
                0.0
            }
        }
        SwitchProfile::Ramp { width } => {
            if width == 0 {
                return profile_value(SwitchProfile::Sharp, jump, n);
            }
            let x = (n - jump) as f64 / width as f64 + 0.5;
            x.clamp(0.0, 1.0)
        }
    }
}

/// Diagonal operator from a function of one coordinate.
pub fn diagonal_from_coordinate(
    geometry: &LatticeGeometry,
    direction: u8,
    f: impl Fn(i64) -> f64,
) -> Array1<f64> {
    let n = geometry.dim();
    let mut values = Array1::zeros(n);
    for idx in 0..n {
        let (n1, n2, _) = geometry.coords_of(idx);
        let c = if direction == 1 { n1 } else { n2 };
        values[idx] = f(c);
    }
    values
}

impl SwitchFunction {
    /// The switch as a dense diagonal operator.
    pub fn as_operator(&self) -> LatticeOperator {
        let n = self.geometry.dim();
        let mut m = Array2::zeros((n, n));
        for i in 0..n {
            m[[i, i]] = C64::new(self.values[i], 0.0);
        }
        LatticeOperator {
            geometry: self.geometry,
            matrix: m,
        }
    }

    /// Ramp width in sites (0 for a sharp switch).
    pub fn ramp_width(&self) -> usize {
        match self.profile {
            SwitchProfile::Sharp => 0,
            SwitchProfile::Ramp { width } => width,
        }
    }
}

/// Commutator `[diag(v), A]`, computed elementwise.
pub fn commutator_diag(values: &Array1<f64>, a: &Array2<C64>) -> Array2<C64> {
    let n = a.nrows();
    let mut out = a.clone();
    for i in 0..n {
        for j in 0..n {
            out[[i, j]] *= C64::new(values[i] - values[j], 0.0);
        }
    }
    out
}

/// Sandwich `diag(v) . A . diag(v)` for a 0/1 projector diagonal.
pub fn project_diag(values: &Array1<f64>, a: &Array2<C64>) -> Array2<C64> {
    let n = a.nrows();
    let mut out = a.clone();
    for i in 0..n {
        for j in 0..n {
            out[[i, j]] *= C64::new(values[i] * values[j], 0.0);
        }
    }
    out
}

/// Compress an operator to the sub-rectangle of a restriction map.
pub fn restrict(a: &LatticeOperator, map: &RestrictionMap) -> Result<LatticeOperator> {
    if a.geometry != map.source {
        return Err(Error::GeometryMismatch(
            "operator does not live on the source geometry".into(),
        ));
    }
    let nt = map.target.dim();
    let mut out = Array2::zeros((nt, nt));
    for i in 0..nt {
        let si = map.source_index(i);
        for j in 0..nt {
            out[[i, j]] = a.matrix[[si, map.source_index(j)]];
        }
    }
    LatticeOperator::new(map.target, out)
}

/// Zero-pad an operator from the sub-rectangle back into the source geometry.
pub fn embed(a_sub: &LatticeOperator, map: &RestrictionMap) -> Result<LatticeOperator> {
    if a_sub.geometry != map.target {
        return Err(Error::GeometryMismatch(
            "operator does not live on the target geometry".into(),
        ));
    }
    let ns = map.source.dim();
    let nt = map.target.dim();
    let mut out = Array2::zeros((ns, ns));
    for i in 0..nt {
        let si = map.source_index(i);
        for j in 0..nt {
            out[[si, map.source_index(j)]] = a_sub.matrix[[i, j]];
        }
    }
    LatticeOperator::new(map.source, out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::build_geometry;

    fn geom() -> LatticeGeometry {
        build_geometry(4, 4, 2, (-2, -2)).unwrap()
    }

    #[test]
    fn diagnostics_of_identity() {
        let id = LatticeOperator::identity(geom());
        let d = operator_diagnostics(&id);
        assert_eq!(d.hermiticity_defect, 0.0);
        assert_eq!(d.unitarity_defect, 0.0);
        assert_eq!(d.trace, C64::new(32.0, 0.0));
    }

    #[test]
    fn sharp_switch_is_projection() {
        let g = build_geometry(16, 4, 1, (-8, 0)).unwrap();
        let sw = switch_function(g, 1, 0, SwitchProfile::Sharp).unwrap();
        for idx in 0..g.dim() {
            let (n1, _, _) = g.coords_of(idx);
            let expect = if n1 >= 0 { 1.0 } else { 0.0 };
            assert_eq!(sw.values[idx], expect);
            // projection: values squared equal values
            assert_eq!(sw.values[idx] * sw.values[idx], sw.values[idx]);
        }
    }

    #[test]
    fn switch_jump_must_be_interior() {
        let g = build_geometry(8, 4, 1, (0, 0)).unwrap();
        assert!(switch_function(g, 1, 0, SwitchProfile::Sharp).is_err());
        assert!(switch_function(g, 1, 8, SwitchProfile::Sharp).is_err());
        assert!(switch_function(g, 1, 3, SwitchProfile::Sharp).is_ok());
    }

    #[test]
    fn two_switches_differ_on_finite_support() {
        let g = build_geometry(4, 16, 3, (0, -8)).unwrap();
        let a = switch_function(g, 2, 0, SwitchProfile::Sharp).unwrap();
        let b = switch_function(g, 2, 2, SwitchProfile::Sharp).unwrap();
        let diff = &a.values - &b.values;
        let support: usize = diff.iter().filter(|v| **v != 0.0).count();
        // difference supported on 2 rows of sites, each with L1 * n_orb entries
        assert_eq!(support, 2 * 4 * 3);
    }

    #[test]
    fn ramp_profile_clips_to_unit_interval() {
        let g = build_geometry(1, 16, 1, (0, -8)).unwrap();
        let sw = switch_function(g, 2, 0, SwitchProfile::Ramp { width: 4 }).unwrap();
        for idx in 0..g.dim() {
            let (_, n2, _) = g.coords_of(idx);
            let v = sw.values[idx];
            assert!((0.0..=1.0).contains(&v));
            if n2 <= -2 {
                assert_eq!(v, 0.0);
            }
            if n2 >= 2 {
                assert_eq!(v, 1.0);
            }
        }
    }

    #[test]
    fn restrict_embed_identities() {
        let bulk = build_geometry(6, 4, 2, (-3, -2)).unwrap();
        let half = build_geometry(3, 4, 2, (0, -2)).unwrap();
        let map = RestrictionMap::new(bulk, half).unwrap();

        // restrict(identity) = identity on the sub-space
        let id = LatticeOperator::identity(bulk);
        let rid = restrict(&id, &map).unwrap();
        assert_eq!(rid.matrix, Array2::<C64>::eye(half.dim()));

        // embed(identity) = projector onto the sub-rectangle
        let id_sub = LatticeOperator::identity(half);
        let p1 = embed(&id_sub, &map).unwrap();
        assert_eq!(p1.dot(&p1).unwrap().matrix, p1.matrix);
        assert_eq!(p1.trace(), C64::new(half.dim() as f64, 0.0));

        // restrict . embed = identity map on sub-space operators (exact)
        let mut rng = crate::rng::SplitMix64::new(9);
        let a = Array2::from_shape_fn((half.dim(), half.dim()), |_| {
            C64::new(rng.next_symmetric(1.0), rng.next_symmetric(1.0))
        });
        let a = LatticeOperator::new(half, a).unwrap();
        let back = restrict(&embed(&a, &map).unwrap(), &map).unwrap();
        assert_eq!(back.matrix, a.matrix);

        // embed . restrict = P1 A P1 (exact)
        let b = Array2::from_shape_fn((bulk.dim(), bulk.dim()), |_| {
            C64::new(rng.next_symmetric(1.0), rng.next_symmetric(1.0))
        });
        let b = LatticeOperator::new(bulk, b).unwrap();
        let er = embed(&restrict(&b, &map).unwrap(), &map).unwrap();
        let sandwich = p1.dot(&b).unwrap().dot(&p1).unwrap();
        assert_eq!(er.matrix, sandwich.matrix);

        // trace preservation under embedding
        let ta = a.trace();
        let tea = embed(&a, &map).unwrap().trace();
        assert!((ta - tea).norm() < 1e-14);
    }

    #[test]
    fn restriction_of_hermitian_is_hermitian_and_diagonal_subblock() {
        let bulk = build_geometry(4, 4, 1, (0, 0)).unwrap();
        let half = build_geometry(2, 4, 1, (2, 0)).unwrap();
        let map = RestrictionMap::new(bulk, half).unwrap();
        let mut rng = crate::rng::SplitMix64::new(3);
        // purely on-site diagonal Hamiltonian
        let mut h = Array2::<C64>::zeros((bulk.dim(), bulk.dim()));
        for i in 0..bulk.dim() {
            h[[i, i]] = C64::new(rng.next_symmetric(2.0), 0.0);
        }
        let h = LatticeOperator::new(bulk, h).unwrap();
        let r = restrict(&h, &map).unwrap();
        assert_eq!(r.hermiticity_defect(), 0.0);
        for j in 0..half.dim() {
            let (n1, n2, orb) = half.coords_of(j);
            let i = bulk.index_of(n1, n2, orb).unwrap();
            assert_eq!(r.matrix[[j, j]], h.matrix[[i, i]]);
        }
    }

    #[test]
    fn commutator_with_diagonal_matches_dense() {
        let g = build_geometry(3, 3, 1, (0, 0)).unwrap();
        let sw = switch_function(g, 1, 1, SwitchProfile::Sharp).unwrap();
        let mut rng = crate::rng::SplitMix64::new(11);
        let a = Array2::from_shape_fn((g.dim(), g.dim()), |_| {
            C64::new(rng.next_symmetric(1.0), rng.next_symmetric(1.0))
        });
        let fast = commutator_diag(&sw.values, &a);
        let lam = sw.as_operator().matrix;
        let dense = lam.dot(&a) - a.dot(&lam);
        assert!(frobenius(&(&fast - &dense)) < 1e-14);
    }
}
