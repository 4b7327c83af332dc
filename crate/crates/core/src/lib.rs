//! Non-signalling assisted communication cost of bipartite quantum channels.
//!
//! The crate is organised bottom-up:
//!
//! - [`tensor`]: Hermitian operators on labelled tensor-product spaces.
//! - [`channel`]: bipartite channels in Choi form, builders, and the
//!   non-signalling predicates.
//! - [`conic`]: the semidefinite programs of the cost measures, compiled to
//!   real symmetric form.
//! - [`solver`]: a dense primal-dual interior-point solver.
//! - [`costs`]: the user-facing quantities, reported in bits.
//! - [`certificates`]: explicit feasible points checked without a solver.

pub mod certificates;
pub mod channel;
pub mod conic;
pub mod costs;
pub mod error;
pub mod solver;
pub mod tensor;

pub use error::{Error, Result};
