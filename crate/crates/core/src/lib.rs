//! Numerical laboratory for Brownian motion with weakly form-bounded drift.
//!
//! The crate is organised bottom-up:
//!
//! * [`drift`]: drift fields `b`, analytic certificates for the model field
//!   `c x/|x|^2`, mollified truncations `b_n` and smooth cutoffs.
//! * [`operators`]: Fourier multipliers on a periodic grid, numerical
//!   form-bound norms, the factorized resolvent and weighted estimates.
//! * [`semigroup`]: grid evolution `u_t = Delta u - b_n . grad u`, the direct
//!   resolvent and Feller-limit diagnostics.
//! * [`sde`]: Euler–Maruyama ensembles for `dX = -b_n(X) dt + sqrt(2) dW`
//!   and the statistical experiments built on them.
//!
//! All experiment tables are written as CSV through [`report`].

pub mod drift;
pub mod error;
pub mod operators;
pub mod quadrature;
pub mod report;
pub mod sde;
pub mod semigroup;
pub mod stats;

pub use error::{Error, Result};
