//! Model zoo: concrete driven and static lattice Hamiltonians, disorder,
//! boundary perturbations and interface gluings.

use crate::error::{Error, Result};
use crate::geometry::LatticeGeometry;
use crate::locality::{decay_rate_fit, DecayProfile};
use crate::operator::{switch_function, LatticeOperator, SwitchProfile};
use crate::protocol::{
    BlochModel, BlochSegment, DriveProtocol, HoppingTerm, Segment,
};
use crate::rng::{coordinate_seed, SplitMix64};
use ndarray::Array2;
use num_complex::Complex64 as C64;

/// Assemble the dense generator of a list of hopping terms on a finite open
/// rectangle. Bonds leaving the rectangle are dropped (Dirichlet cut).
pub fn generator_from_terms(geometry: LatticeGeometry, terms: &[HoppingTerm]) -> LatticeOperator {
    let n = geometry.dim();
    let n_orb = geometry.n_orb;
    let mut m = Array2::<C64>::zeros((n, n));
    for term in terms {
        let (d1, d2) = term.displacement;
        for (n1, n2) in geometry.sites() {
            let (m1, m2) = (n1 + d1, n2 + d2);
            if !geometry.contains_site(m1, m2) {
                continue;
            }
            for a in 0..n_orb {
                for b in 0..n_orb {
                    let row = geometry.index_of(m1, m2, a).unwrap();
                    let col = geometry.index_of(n1, n2, b).unwrap();
                    m[[row, col]] += term.matrix[[a, b]];
                }
            }
        }
    }
    LatticeOperator { geometry, matrix: m }
}

fn hop(d: (i64, i64), m: Array2<C64>) -> Vec<HoppingTerm> {
    let dagger = HoppingTerm {
        displacement: (-d.0, -d.1),
        matrix: m.t().mapv(|z| z.conj()),
    };
    let fwd = HoppingTerm {
        displacement: d,
        matrix: m,
    };
    if d == (0, 0) {
        // on-site terms must be Hermitian already
        vec![fwd]
    } else {
        vec![fwd, dagger]
    }
}

/// Five-step driven bipartite model on a square cell lattice with two
/// orbitals (A, B) per cell.
///
/// Steps 1-4 switch on A-B hopping of strength `j` towards the four
/// checkerboard neighbors in cyclic order (cell displacements
/// `(0,0), (0,-1), (-1,-1), (-1,0)`); step 5 applies the on-site splitting
/// `diag(+delta/2, -delta/2)`. All five segments last `T/5`.
///
/// At full coupling `j T / 5 = pi/2` (and `delta = 0`) each bulk site
/// returns to itself after one period while states on the direction-1
/// boundary of a half lattice advance by one site along direction 2.
pub fn five_step_drive(
    geometry: LatticeGeometry,
    j: f64,
    delta: f64,
    period: f64,
) -> Result<DriveProtocol> {
    if geometry.n_orb != 2 {
        return Err(Error::InvalidArgument(
            "five-step drive needs two orbitals per cell".into(),
        ));
    }
    if geometry.l1 % 2 != 0 || geometry.l2 % 2 != 0 {
        return Err(Error::InvalidArgument(
            "five-step drive needs even site counts".into(),
        ));
    }
    let displacements = [(0i64, 0i64), (0, -1), (-1, -1), (-1, 0)];
    let dt = period / 5.0;
    let mut segments = Vec::with_capacity(5);
    let mut bloch_segments = Vec::with_capacity(5);
    for d in displacements {
        let mut ab = Array2::<C64>::zeros((2, 2));
        ab[[1, 0]] = C64::new(j, 0.0); // <B, m+d| H |A, m>
        if d == (0, 0) {
            ab[[0, 1]] = C64::new(j, 0.0); // intra-cell bond carries its own h.c.
        }
        let terms = hop(d, ab);
        segments.push(Segment {
            duration: dt,
            generator: generator_from_terms(geometry, &terms),
        });
        bloch_segments.push(BlochSegment {
            duration: dt,
            terms,
        });
    }
    let mut onsite = Array2::<C64>::zeros((2, 2));
    onsite[[0, 0]] = C64::new(delta / 2.0, 0.0);
    onsite[[1, 1]] = C64::new(-delta / 2.0, 0.0);
    let terms = hop((0, 0), onsite);
    segments.push(Segment {
        duration: dt,
        generator: generator_from_terms(geometry, &terms),
    });
    bloch_segments.push(BlochSegment {
        duration: dt,
        terms,
    });
    DriveProtocol::new(
        period,
        segments,
        Some(BlochModel {
            n_orb: 2,
            period,
            segments: bloch_segments,
        }),
    )
}

/// Coupling strength that closes the bulk one-period propagator to the
/// identity for the five-step drive: `j = (pi/2) / (T/5)`.
pub fn five_step_full_coupling(period: f64) -> f64 {
    std::f64::consts::FRAC_PI_2 * 5.0 / period
}

/// Static two-band Chern insulator on a square lattice (two orbitals per
/// site): `H(k) = sin k1 s_x + sin k2 s_y + (u + cos k1 + cos k2) s_z`.
///
/// For `0 < |u| < 2` the bands carry Chern numbers -sgn(u) (lower band,
/// with this crate's Fourier orientation) and the bandwidth is bounded by
/// `2 sqrt(u^2 + ...) <= 2(|u| + 2)`.
pub fn chern_insulator(geometry: LatticeGeometry, u: f64) -> Result<(LatticeOperator, BlochModel)> {
    if geometry.n_orb != 2 {
        return Err(Error::InvalidArgument(
            "chern insulator needs two orbitals per site".into(),
        ));
    }
    let i = C64::i();
    let half = C64::new(0.5, 0.0);
    // sigma matrices
    let sx = ndarray::array![[C64::new(0.0, 0.0), C64::new(1.0, 0.0)], [
        C64::new(1.0, 0.0),
        C64::new(0.0, 0.0)
    ]];
    let sy = ndarray::array![[C64::new(0.0, 0.0), -i], [i, C64::new(0.0, 0.0)]];
    let sz = ndarray::array![[C64::new(1.0, 0.0), C64::new(0.0, 0.0)], [
        C64::new(0.0, 0.0),
        C64::new(-1.0, 0.0)
    ]];
    let mut terms = Vec::new();
    terms.extend(hop((0, 0), sz.mapv(|z| z * C64::new(u, 0.0))));
    // sin k1 s_x + cos k1 s_z  ->  M_{+e1} = (i s_x + s_z)/2
    terms.extend(hop((1, 0), (sx.mapv(|z| z * i) + &sz).mapv(|z| z * half)));
    // sin k2 s_y + cos k2 s_z  ->  M_{+e2} = (i s_y + s_z)/2
    terms.extend(hop((0, 1), (sy.mapv(|z| z * i) + &sz).mapv(|z| z * half)));
    let h0 = generator_from_terms(geometry, &terms);
    let bloch = BlochModel {
        n_orb: 2,
        period: 1.0,
        segments: vec![BlochSegment {
            duration: 1.0,
            terms,
        }],
    };
    Ok((h0, bloch))
}

/// On-site disorder specification: i.i.d. uniform on `[-w, w]` per site and
/// orbital, addressed by physical coordinates so that the same seed yields
/// the same realization on any window of the plane.
#[derive(Clone, Copy, Debug)]
pub struct DisorderSpec {
    pub amplitude: f64,
    pub seed: u64,
}

/// Diagonal disorder realization on a geometry.
pub fn disorder_potential(geometry: LatticeGeometry, spec: &DisorderSpec) -> LatticeOperator {
    let n = geometry.dim();
    let mut m = Array2::<C64>::zeros((n, n));
    for idx in 0..n {
        let (n1, n2, orb) = geometry.coords_of(idx);
        let mut stream = SplitMix64::new(coordinate_seed(spec.seed, n1, n2, orb));
        m[[idx, idx]] = C64::new(stream.next_symmetric(spec.amplitude), 0.0);
    }
    LatticeOperator { geometry, matrix: m }
}

/// Add the same time-independent disorder realization to every segment.
pub fn add_onsite_disorder(protocol: &DriveProtocol, spec: &DisorderSpec) -> Result<DriveProtocol> {
    if spec.amplitude == 0.0 {
        return Ok(protocol.clone());
    }
    let v = disorder_potential(protocol.geometry(), spec);
    let segments = protocol
        .segments
        .iter()
        .map(|s| {
            Ok(Segment {
                duration: s.duration,
                generator: s.generator.add(&v)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    // disorder breaks translation invariance: drop the Bloch form
    DriveProtocol::new(protocol.period, segments, None)
}

/// Random Hermitian operator confined about the coordinate `center1` in
/// direction 1 and local in direction 2:
/// `|block(m, n)| <= amplitude * e^{-mu(|m1-c| + |n1-c|)} e^{-mu |m2-n2|}`.
///
/// Deterministic in the seed. Models a boundary condition or defect term.
pub fn confined_perturbation(
    geometry: LatticeGeometry,
    amplitude: f64,
    mu: f64,
    center1: i64,
    seed: u64,
) -> Result<LatticeOperator> {
    if mu <= 0.0 {
        return Err(Error::InvalidArgument(
            "confinement exponent must be positive".into(),
        ));
    }
    let n = geometry.dim();
    let n_orb = geometry.n_orb;
    let mut m = Array2::<C64>::zeros((n, n));
    if amplitude == 0.0 {
        return Ok(LatticeOperator { geometry, matrix: m });
    }
    let sites: Vec<(i64, i64)> = geometry.sites().collect();
    let mut rng = SplitMix64::new(seed);
    for (si, &ms) in sites.iter().enumerate() {
        for &ns in sites.iter().skip(si) {
            let envelope = amplitude
                * (-mu
                    * ((ms.0 - center1).abs() + (ns.0 - center1).abs() + (ms.1 - ns.1).abs())
                        as f64)
                    .exp();
            for a in 0..n_orb {
                for b in 0..n_orb {
                    let phase = 2.0 * std::f64::consts::PI * rng.next_f64();
                    let val = C64::from_polar(envelope / n_orb as f64, phase);
                    let row = geometry.index_of(ms.0, ms.1, a).unwrap();
                    let col = geometry.index_of(ns.0, ns.1, b).unwrap();
                    if row == col {
                        m[[row, col]] = C64::new(val.re, 0.0);
                    } else {
                        m[[row, col]] = val;
                        m[[col, row]] = val.conj();
                    }
                }
            }
        }
    }
    Ok(LatticeOperator { geometry, matrix: m })
}

/// Two drives glued along a vertical cut, with an optional interface term.
#[derive(Clone, Debug)]
pub struct InterfaceSpec {
    /// Drive ruling the half `n1 < cut`.
    pub left: DriveProtocol,
    /// Drive ruling the half `n1 >= cut`.
    pub right: DriveProtocol,
    /// Time-independent interface term, confined about the cut.
    pub h_int: Option<LatticeOperator>,
    pub cut: i64,
}

/// Glue two drives along the cut:
/// `H_I = P H_right P + (1-P) H_left (1-P) + H_int` per refined segment,
/// with `P` the sharp switch at the cut.
///
/// The two protocols are refined to a common segment partition. A supplied
/// interface term must pass the mixed confinement fit about the cut.
pub fn interface_hamiltonian(spec: &InterfaceSpec, geometry: LatticeGeometry) -> Result<DriveProtocol> {
    if spec.left.geometry() != geometry || spec.right.geometry() != geometry {
        return Err(Error::GeometryMismatch(
            "interface halves must live on the interface geometry".into(),
        ));
    }
    if (spec.left.period - spec.right.period).abs() > 1e-12 {
        return Err(Error::InvalidArgument("interface halves differ in period".into()));
    }
    if let Some(h_int) = &spec.h_int {
        h_int.check_same_geometry(&spec.left.segments[0].generator)?;
        let fit = decay_rate_fit(h_int, DecayProfile::Mixed { center: spec.cut });
        if !fit.effectively_zero && fit.exponent <= 0.0 {
            return Err(Error::ConfinementFit {
                exponent: fit.exponent,
            });
        }
    }
    let p = switch_function(geometry, 1, spec.cut, SwitchProfile::Sharp)?;
    let n = geometry.dim();

    // common refinement of the two segment partitions
    let mut cuts: Vec<f64> = spec
        .left
        .boundaries()
        .into_iter()
        .chain(spec.right.boundaries())
        .collect();
    cuts.sort_by(|a, b| a.partial_cmp(b).unwrap());
    cuts.dedup_by(|a, b| (*a - *b).abs() < 1e-12);

    let mut segments = Vec::new();
    for w in cuts.windows(2) {
        let (t0, t1) = (w[0], w[1]);
        let mid = 0.5 * (t0 + t1);
        let hl = &spec.left.segment_at(mid).generator;
        let hr = &spec.right.segment_at(mid).generator;
        let mut m = Array2::<C64>::zeros((n, n));
        for i in 0..n {
            for j in 0..n {
                let pi = p.values[i];
                let pj = p.values[j];
                m[[i, j]] = pi * pj * hr.matrix[[i, j]]
                    + (1.0 - pi) * (1.0 - pj) * hl.matrix[[i, j]];
            }
        }
        if let Some(h_int) = &spec.h_int {
            m = m + &h_int.matrix;
        }
        segments.push(Segment {
            duration: t1 - t0,
            generator: LatticeOperator { geometry, matrix: m },
        });
    }
    DriveProtocol::new(spec.left.period, segments, None)
}
