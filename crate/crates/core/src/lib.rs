//! Randomly trapped random walks on Z^d: skeleton walks, trap environments,
//! clock processes, limit-process references and scaling-limit checks.

// Comparisons are written `!(x > 0.0)` on purpose so that NaN is rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod clock;
pub mod environment;
pub mod lattice;
pub mod quadrature;
pub mod reference;
pub mod rng;
pub mod skeleton;
pub mod stats;
pub mod verify;
