//! Command-line front end of `nscost`: experiment sweeps, the property
//! suite, and the seeded channel corpora they share.

pub mod corpus;
pub mod sweep;
pub mod verify;
