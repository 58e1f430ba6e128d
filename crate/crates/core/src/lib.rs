//! Graph similarity learning with a fused-pair attention model, plus classical
//! graph edit distance solvers for generating verifiable ground truth.
//!
//! The crate is split along the pipeline:
//!
//! * [`tensor`] — dense f64 matrices with a recording tape for reverse-mode
//!   gradients; exactly the operations the model forward pass needs.
//! * [`graph`] / [`synth`] / [`batch`] — graph data model, synthetic pair
//!   generation under an edit budget, and padded batching.
//! * [`ged`] — exact A* edit distance, beam and bipartite upper bounds, a
//!   Hausdorff lower bound, and the assignment solver backing them.
//! * [`model`] — the fusion model: SAGE/GIN encoders, global attention over
//!   merged node sequences (exact or linear-complexity), two similarity heads.
//! * [`train`] — Adam training loop, ranking metrics, evaluation protocols.
//!
//! Everything here is pure computation over heap data; IO, file formats and
//! timing live in the companion CLI crate.

#![cfg_attr(not(test), no_std)]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod batch;
pub mod error;
pub mod ged;
pub mod graph;
pub mod model;
pub mod rng;
pub mod synth;
pub mod tensor;
pub mod train;

#[cfg(any(test, feature = "oracles"))]
pub mod oracles;
