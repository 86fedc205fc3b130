//! Time-periodic tight-binding lattices: unitary propagators, spectral gaps
//! of the one-period map, and the integer-valued transport indices attached
//! to them (bulk, edge, interface, relative and Chern).
//!
//! The crate works on finite open rectangles with dense complex matrices.
//! All constructors are pure functions of their inputs; randomness is
//! injected exclusively through explicit 64-bit seeds.

pub mod error;
pub mod geometry;
pub mod indices;
pub mod locality;
pub mod models;
pub mod operator;
pub mod propagator;
pub mod protocol;
pub mod rng;
pub mod spectral;
pub mod winding;

pub use error::{Error, Result};
pub use geometry::{build_geometry, LatticeGeometry, RestrictionMap};
pub use locality::{decay_rate_fit, locality_norm, DecayProfile, LocalityProfile};
pub use operator::{
    embed, operator_diagnostics, restrict, switch_function, LatticeOperator, SwitchFunction,
    SwitchProfile,
};
pub use protocol::{DriveProtocol, Segment};

/// Default numeric tolerances.
///
/// Rationale in brief: exact-arithmetic identities (index bookkeeping,
/// projector algebra) are tested at a small multiple of f64 epsilon;
/// accumulated linear algebra (eigendecomposition, long products of
/// exponentials) at 1e-10..1e-8; quantization of the physical indices at
/// 0.1, far above the exponentially small finite-size error of gapped
/// systems at the lattice sizes used here.
pub mod tol {
    /// Hermiticity defect allowed for protocol generators.
    pub const HERMITICITY: f64 = 1e-12;
    /// Unitarity defect allowed for evolved propagators.
    pub const UNITARITY: f64 = 1e-10;
    /// `|U(T) - I|` allowed when a formula requires a loop.
    pub const LOOP: f64 = 1e-8;
    /// Spectral reconstruction defect for unitary eigendecomposition.
    pub const RECONSTRUCTION: f64 = 1e-9;
    /// Default quantization tolerance on index reports.
    pub const QUANTIZATION: f64 = 0.1;
    /// Default tolerance on the imaginary part of index reports.
    pub const IMAGINARY: f64 = 1e-6;
    /// Relative drift beyond which a propagator sample is re-unitarized.
    pub const REUNITARIZE: f64 = 1e-12;
}
