//! Reservoir computing with edge-of-stability echo state networks (ES2N).
//!
//! The crate is layered bottom-up:
//!
//! - [`numerics`]: dense matrices, QR, eigenvalues, singular values, ridge
//!   solves and seeded random streams.
//! - [`reservoir`]: the five reservoir models (ES2N, leaky ESN, linear ESN,
//!   orthogonal ESN, linear simple-cycle reservoir), their state update and
//!   Jacobian.
//! - [`readout`]: ridge-regression readouts and closed-loop generation.
//! - [`analysis`]: echo-state sufficiency, Jacobian eigenspectra with their
//!   annulus/disc bounds, and the maximum local Lyapunov exponent.
//! - [`tasks`]: memory capacity, the memory/nonlinearity trade-off, MSO8
//!   autoregression and random hyperparameter search.

pub mod analysis;
pub mod error;
pub mod numerics;
pub mod readout;
pub mod reservoir;
pub mod tasks;

pub use error::{Error, Result};
pub use numerics::{ComplexValue, Matrix, SeededRng};
pub use readout::Readout;
pub use reservoir::{ModelKind, Reservoir, ReservoirConfig, ReservoirParams, Trajectory};
