//! Time-periodic drive protocols: ordered lists of piecewise-constant
//! Hermitian segments, with an optional Bloch (momentum-space) form for
//! translation-invariant models.

use crate::error::{Error, Result};
use crate::geometry::LatticeGeometry;
use crate::operator::LatticeOperator;
use crate::tol;
use ndarray::Array2;
use num_complex::Complex64 as C64;

/// One constant piece of a drive: duration and Hermitian generator.
#[derive(Clone, Debug)]
pub struct Segment {
    pub duration: f64,
    pub generator: LatticeOperator,
}

/// Hopping term of a translation-invariant generator: the generator
/// contains `|m + d> M <m|` for every cell `m` (open boundaries drop the
/// bonds that leave the rectangle). Hermitian generators carry the partner
/// term `(-d, M^dag)` explicitly.
#[derive(Clone, Debug)]
pub struct HoppingTerm {
    pub displacement: (i64, i64),
    pub matrix: Array2<C64>,
}

/// Momentum-space form of one segment:
/// `H(k) = sum_d e^{-i k.d} M_d` over the hopping terms.
#[derive(Clone, Debug)]
pub struct BlochSegment {
    pub duration: f64,
    pub terms: Vec<HoppingTerm>,
}

/// Bloch form of a whole protocol, available for translation-invariant
/// models only.
#[derive(Clone, Debug)]
pub struct BlochModel {
    pub n_orb: usize,
    pub period: f64,
    pub segments: Vec<BlochSegment>,
}

impl BlochModel {
    /// Dense `n_orb x n_orb` Bloch generator of segment `s` at quasi-momentum k.
    pub fn h_k(&self, s: usize, k: (f64, f64)) -> Array2<C64> {
        let mut h = Array2::<C64>::zeros((self.n_orb, self.n_orb));
        for term in &self.segments[s].terms {
            let phase = -(k.0 * term.displacement.0 as f64 + k.1 * term.displacement.1 as f64);
            let f = C64::from_polar(1.0, phase);
            h = h + term.matrix.mapv(|z| z * f);
        }
        h
    }

    /// Generator of segment `s` on a finite open column in direction 1,
    /// at quasi-momentum `k2`. Dimension `l1 * n_orb`, sites ordered by
    /// column index then orbital.
    pub fn h_column_k2(&self, s: usize, l1: usize, k2: f64) -> Array2<C64> {
        let n = l1 * self.n_orb;
        let mut h = Array2::<C64>::zeros((n, n));
        for term in &self.segments[s].terms {
            let (d1, d2) = term.displacement;
            let f = C64::from_polar(1.0, -k2 * d2 as f64);
            for n1 in 0..l1 as i64 {
                let m1 = n1 + d1;
                if m1 < 0 || m1 >= l1 as i64 {
                    continue;
                }
                for a in 0..self.n_orb {
                    for b in 0..self.n_orb {
                        let row = m1 as usize * self.n_orb + a;
                        let col = n1 as usize * self.n_orb + b;
                        h[[row, col]] += f * term.matrix[[a, b]];
                    }
                }
            }
        }
        h
    }
}

/// A time-periodic Hamiltonian as an ordered list of constant Hermitian
/// segments whose durations sum to the period.
#[derive(Clone, Debug)]
pub struct DriveProtocol {
    pub period: f64,
    pub segments: Vec<Segment>,
    pub bloch: Option<BlochModel>,
}

impl DriveProtocol {
    /// Validate and assemble a protocol.
    pub fn new(period: f64, segments: Vec<Segment>, bloch: Option<BlochModel>) -> Result<Self> {
        if period <= 0.0 {
            return Err(Error::InvalidArgument("period must be positive".into()));
        }
        if segments.is_empty() {
            return Err(Error::InvalidArgument(
                "protocol needs at least one segment".into(),
            ));
        }
        let total: f64 = segments.iter().map(|s| s.duration).sum();
        if (total - period).abs() > 1e-12 * period.max(1.0) {
            return Err(Error::InvalidArgument(format!(
                "segment durations sum to {total}, expected period {period}"
            )));
        }
        let geom = segments[0].generator.geometry;
        for (i, s) in segments.iter().enumerate() {
            if s.duration <= 0.0 {
                return Err(Error::InvalidArgument(format!(
                    "segment {i} has non-positive duration"
                )));
            }
            if s.generator.geometry != geom {
                return Err(Error::GeometryMismatch(format!(
                    "segment {i} lives on a different geometry"
                )));
            }
            let defect = s.generator.hermiticity_defect();
            if defect > tol::HERMITICITY * (1.0 + s.generator.dim() as f64) {
                return Err(Error::NonHermitian {
                    defect,
                    tol: tol::HERMITICITY,
                });
            }
        }
        Ok(Self {
            period,
            segments,
            bloch,
        })
    }

    pub fn geometry(&self) -> LatticeGeometry {
        self.segments[0].generator.geometry
    }

    /// Generator in force at time `t in [0, T)`; the left segment is used at
    /// interior segment boundaries.
    pub fn segment_at(&self, t: f64) -> &Segment {
        let mut acc = 0.0;
        for s in &self.segments {
            acc += s.duration;
            if t < acc {
                return s;
            }
        }
        self.segments.last().unwrap()
    }

    /// Start times of all segments plus the final period.
    pub fn boundaries(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.segments.len() + 1);
        let mut acc = 0.0;
        out.push(0.0);
        for s in &self.segments {
            acc += s.duration;
            out.push(acc);
        }
        out
    }
}

/// Single-segment protocol generated by a constant Hamiltonian.
pub fn static_drive(h0: LatticeOperator, period: f64) -> Result<DriveProtocol> {
    let defect = h0.hermiticity_defect();
    if defect > tol::HERMITICITY * (1.0 + h0.dim() as f64) {
        return Err(Error::NonHermitian {
            defect,
            tol: tol::HERMITICITY,
        });
    }
    DriveProtocol::new(
        period,
        vec![Segment {
            duration: period,
            generator: h0,
        }],
        None,
    )
}

/// Zero generator protocol: the propagator stays at the identity.
pub fn zero_protocol(geometry: LatticeGeometry, period: f64) -> Result<DriveProtocol> {
    static_drive(LatticeOperator::zeros(geometry), period)
}

/// Join two drives of equal period back to back: the first runs compressed
/// into `[0, T/2]`, the second runs time-reversed (reversed order, negated
/// generators) in `[T/2, T]`. When the two one-period propagators coincide,
/// the combined propagator is a loop: it returns to the identity at `t = T`.
pub fn relative_protocol(p1: &DriveProtocol, p2: &DriveProtocol) -> Result<DriveProtocol> {
    if (p1.period - p2.period).abs() > 1e-12 * p1.period.max(1.0) {
        return Err(Error::InvalidArgument(format!(
            "period mismatch: {} vs {}",
            p1.period, p2.period
        )));
    }
    if p1.geometry() != p2.geometry() {
        return Err(Error::GeometryMismatch(
            "relative protocol requires a common geometry".into(),
        ));
    }
    let two = C64::new(2.0, 0.0);
    let minus_two = C64::new(-2.0, 0.0);
    let mut segments = Vec::with_capacity(p1.segments.len() + p2.segments.len());
    for s in &p1.segments {
        segments.push(Segment {
            duration: s.duration / 2.0,
            generator: s.generator.scale(two),
        });
    }
    for s in p2.segments.iter().rev() {
        segments.push(Segment {
            duration: s.duration / 2.0,
            generator: s.generator.scale(minus_two),
        });
    }
    let bloch = match (&p1.bloch, &p2.bloch) {
        (Some(b1), Some(b2)) => {
            let mut segs = Vec::new();
            for s in &b1.segments {
                segs.push(BlochSegment {
                    duration: s.duration / 2.0,
                    terms: scale_terms(&s.terms, two),
                });
            }
            for s in b2.segments.iter().rev() {
                segs.push(BlochSegment {
                    duration: s.duration / 2.0,
                    terms: scale_terms(&s.terms, minus_two),
                });
            }
            Some(BlochModel {
                n_orb: b1.n_orb,
                period: b1.period,
                segments: segs,
            })
        }
        _ => None,
    };
    DriveProtocol::new(p1.period, segments, bloch)
}

fn scale_terms(terms: &[HoppingTerm], f: C64) -> Vec<HoppingTerm> {
    terms
        .iter()
        .map(|t| HoppingTerm {
            displacement: t.displacement,
            matrix: t.matrix.mapv(|z| z * f),
        })
        .collect()
}

/// Static drive generated by an effective (gap-selected) Hamiltonian.
pub fn effective_vacuum_protocol(h_eff: LatticeOperator, period: f64) -> Result<DriveProtocol> {
    static_drive(h_eff, period)
}
