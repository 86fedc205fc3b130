//! Finite rectangular lattice geometries and the basis bookkeeping between
//! them.
//!
//! A geometry is an `L1 x L2` rectangle of sites with `n_orb` internal
//! orbitals per site. Integer site coordinates start at `(origin1, origin2)`,
//! so the same struct describes a window of the full plane (centered origin)
//! or of a half-plane (origin at the cut).
//!
//! Basis ordering is site-major, orbital-minor:
//! `index = ((n1 - origin1) * L2 + (n2 - origin2)) * n_orb + orbital`.

use crate::error::{Error, Result};
use serde::Serialize;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct LatticeGeometry {
    pub l1: usize,
    pub l2: usize,
    pub n_orb: usize,
    pub origin1: i64,
    pub origin2: i64,
}

/// Build a geometry, validating the site counts.
pub fn build_geometry(
    l1: usize,
    l2: usize,
    n_orb: usize,
    origin: (i64, i64),
) -> Result<LatticeGeometry> {
    if l1 == 0 || l2 == 0 || n_orb == 0 {
        return Err(Error::InvalidArgument(format!(
            "geometry dimensions must be positive, got {l1}x{l2} with {n_orb} orbitals"
        )));
    }
    Ok(LatticeGeometry {
        l1,
        l2,
        n_orb,
        origin1: origin.0,
        origin2: origin.1,
    })
}

impl LatticeGeometry {
    /// Total basis dimension `L1 * L2 * n_orb`.
    pub fn dim(&self) -> usize {
        self.l1 * self.l2 * self.n_orb
    }

    pub fn site_count(&self) -> usize {
        self.l1 * self.l2
    }

    /// Basis index of `(n1, n2, orbital)` in physical coordinates.
    pub fn index_of(&self, n1: i64, n2: i64, orbital: usize) -> Option<usize> {
        let i1 = n1.checked_sub(self.origin1)?;
        let i2 = n2.checked_sub(self.origin2)?;
        if i1 < 0 || i2 < 0 || i1 >= self.l1 as i64 || i2 >= self.l2 as i64 || orbital >= self.n_orb
        {
            return None;
        }
        Some(((i1 as usize * self.l2) + i2 as usize) * self.n_orb + orbital)
    }

    /// Physical coordinates and orbital of a basis index.
    pub fn coords_of(&self, index: usize) -> (i64, i64, usize) {
        let orbital = index % self.n_orb;
        let site = index / self.n_orb;
        let i1 = (site / self.l2) as i64;
        let i2 = (site % self.l2) as i64;
        (self.origin1 + i1, self.origin2 + i2, orbital)
    }

    pub fn contains_site(&self, n1: i64, n2: i64) -> bool {
        n1 >= self.origin1
            && n2 >= self.origin2
            && n1 < self.origin1 + self.l1 as i64
            && n2 < self.origin2 + self.l2 as i64
    }

    /// Iterate over all sites in physical coordinates, basis order.
    pub fn sites(&self) -> impl Iterator<Item = (i64, i64)> + '_ {
        let (o1, o2) = (self.origin1, self.origin2);
        let (l1, l2) = (self.l1 as i64, self.l2 as i64);
        (0..l1).flat_map(move |i1| (0..l2).map(move |i2| (o1 + i1, o2 + i2)))
    }

    /// Coordinate range `[origin, origin + L)` in the given direction (1 or 2).
    pub fn coordinate_range(&self, direction: u8) -> (i64, i64) {
        match direction {
            1 => (self.origin1, self.origin1 + self.l1 as i64),
            2 => (self.origin2, self.origin2 + self.l2 as i64),
            _ => panic!("direction must be 1 or 2"),
        }
    }

    /// 1-norm distance between two sites.
    pub fn site_distance(a: (i64, i64), b: (i64, i64)) -> i64 {
        (a.0 - b.0).abs() + (a.1 - b.1).abs()
    }
}

/// Index correspondence between a geometry and a sub-rectangle of it.
///
/// `restrict` compresses an operator to the sub-rectangle and `embed`
/// zero-pads it back; together they satisfy `restrict . embed = id` and
/// `embed . restrict = P (.) P` with `P` the sub-rectangle projection,
/// exactly (pure index bookkeeping).
#[derive(Clone, Debug)]
pub struct RestrictionMap {
    pub source: LatticeGeometry,
    pub target: LatticeGeometry,
    /// `target_to_source[j]` is the source basis index of target index `j`.
    target_to_source: Vec<usize>,
}

impl RestrictionMap {
    pub fn new(source: LatticeGeometry, target: LatticeGeometry) -> Result<Self> {
        if source.n_orb != target.n_orb {
            return Err(Error::GeometryMismatch(format!(
                "orbital counts differ: {} vs {}",
                source.n_orb, target.n_orb
            )));
        }
        let fits = target.origin1 >= source.origin1
            && target.origin2 >= source.origin2
            && target.origin1 + target.l1 as i64 <= source.origin1 + source.l1 as i64
            && target.origin2 + target.l2 as i64 <= source.origin2 + source.l2 as i64;
        if !fits {
            return Err(Error::GeometryMismatch(
                "target is not a sub-rectangle of the source".into(),
            ));
        }
        let mut target_to_source = Vec::with_capacity(target.dim());
        for j in 0..target.dim() {
            let (n1, n2, orb) = target.coords_of(j);
            let i = source
                .index_of(n1, n2, orb)
                .expect("sub-rectangle site must exist in source");
            target_to_source.push(i);
        }
        Ok(Self {
            source,
            target,
            target_to_source,
        })
    }

    /// Source basis index corresponding to target basis index `j`.
    pub fn source_index(&self, j: usize) -> usize {
        self.target_to_source[j]
    }
}
