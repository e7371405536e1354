//! Integrable curve, spin, and map flows on complex projective space.
//!
//! The state variable everywhere is built on the splitting
//! su(N+1) = m + h with m isomorphic to C^N and h isomorphic to u(N).
//! A complex vector field q(x) on a periodic interval (the Hasimoto
//! variable) drives a hierarchy of commuting flows (NLS at n = 2, mKdV
//! at n = 3) whose geometric faces are a Heisenberg spin model, a
//! vortex filament flow, and a Schroedinger map into CP^N. The
//! `transform` module carries states between these faces through a
//! parallel moving frame.
//!
//! Conventions used throughout: the metric is the negative Killing
//! form, `J = ad(A)` acts as multiplication by i on m, `efac = 2N` is
//! the squared Killing norm of the pivot element A, and flows are
//! written on the time scale with `q_t = efac * R^n(J q)` where R is
//! the recursion operator.

pub mod algebra;
pub mod calculus;
pub mod error;
pub mod geometry;
pub mod hierarchy;
pub mod identities;
pub mod init;
pub mod io;
pub mod linalg;
pub mod map;
pub mod timestep;
pub mod tol;
pub mod transform;

pub use algebra::{
    AlgebraDescriptor, AlgebraElement, BracketSlot, BracketTweak, HElement, MVector, C64,
};
pub use calculus::{DxInvPolicy, FieldElement, Grid, PeriodicField};
pub use error::Error;
pub use geometry::{CurveFlow, CurveState, SpinFlow, SpinState};
pub use hierarchy::{FlowFrameData, HasimotoState, LaxPair, QFlow};
pub use identities::{identity_suite, IdentityCheck};
pub use io::{read_snapshot, write_snapshot, DiagnosticsWriter, Snapshot};
pub use linalg::CMat;
pub use map::{MapCoords, MapFlow, MapState};
pub use transform::{
    CurveReconstruction, EquivalenceReport, FrameScheme, FrameState, GaugeData, MapTransform,
    QuantityCheck,
};

/// Crate-wide result type.
pub type Result<T> = std::result::Result<T, Error>;
