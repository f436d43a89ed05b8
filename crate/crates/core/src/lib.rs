//! Operator-splitting time integrators and their lift to high order by
//! integral deferred correction.

pub mod error;
pub mod format;
pub mod idc;
pub mod ode;
pub mod pde2d;
pub mod polyint;
pub mod stability;
pub mod steppers;

pub use error::{Error, Result};
pub use ode::{DenseMatrix, FnSplitRhs, LinearSplit, Scalar, SplitIvp, SplitRhs, Trajectory};
pub use steppers::newton::{JacobianMode, NewtonConfig};
pub use steppers::{Scheme, SchemeStepper, Stepper};
