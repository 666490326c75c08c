//! Classical and quantum analysis of the linearly driven, damped Duffing
//! oscillator in the rotating frame.
//!
//! The crate is organised bottom-up:
//!
//! * [`model`]: physical parameters and the lab-frame → scaled-frame maps.
//! * [`fock`]: truncated number-basis operators (`a`, `a†`, `Q`, `P`, `g`).
//! * [`classical`]: the quasienergy landscape, damped fixed points and the
//!   bistability window.
//! * [`spectrum`]: quasienergy levels, wavefunctions and anticrossings.
//! * [`lindblad`]: the dissipative master equation and its stationary state.
//! * [`metastable`]: identification of the stable states inside the
//!   stationary density matrix and their effective damping.

pub mod classical;
pub mod error;
pub mod fock;
pub mod lindblad;
pub mod metastable;
pub mod model;
pub mod spectrum;

pub use classical::{BifurcationWindow, Branch, FixedPoint, PhasePoint, Stability};
pub use error::{Error, Result};
pub use fock::FockOperator;
pub use model::{DerivedRwaParams, LabFrameParams, ScaledParams};
pub use spectrum::{QuasienergySpectrum, Region};
pub use lindblad::{DensityMatrix, LindbladGenerator, SteadyMethod};
pub use metastable::{IdentifiedStates, MetastableState};
