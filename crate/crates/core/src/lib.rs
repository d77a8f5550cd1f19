//! Two-party neural-network inference from packed additively homomorphic
//! encryption (linear layers) and garbled circuits (non-linear layers).
//!
//! * [`modarith`] — pseudo-Mersenne/Barrett reduction, negacyclic NTT, prime search.
//! * [`pahe`] — private-key BFV with SIMD slots, plaintext windows and hoisted slot permutations.
//! * [`linalg`] — encrypted matrix–vector kernels (naive, packed, diagonal, hybrid).
//! * [`conv`] — encrypted 2-D convolution kernels with channel packing.
//! * [`gc`] — half-gates garbling, ReLU/MaxPool circuits, base oblivious transfer.
//! * [`protocol`] — share translation, network descriptors, client/server sessions.
//! * [`reference`] — plaintext fixed-point oracle.
//! * [`bench`] — benchmark harness and reports.

pub mod bench;
pub mod conv;
pub mod gc;
pub mod linalg;
pub mod modarith;
pub mod pahe;
pub mod par;
pub mod protocol;
pub mod reference;
