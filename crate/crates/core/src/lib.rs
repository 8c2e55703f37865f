//! Exact contraction of tensor-network ground states of finite Abelian lattice
//! gauge theories.
//!
//! States are built on a gauge lattice (spins on edges, Gauss-law tensors on
//! vertices), sandwiched into double-layer networks and reduced with a fixed
//! catalog of diagrammatic rewrite rules until only a small residual network is
//! left, which is then contracted densely. A brute-force contractor serves as
//! the reference.

pub mod error;
pub mod group;
pub mod lattice;
pub mod network;
pub mod observables;
pub mod oracle;
pub mod rewrite;
pub mod tensor;

pub use error::{Error, Result};
pub use group::{GroupElement, GroupSpec};
pub use lattice::{LatticeKind, LatticeSpec, SiteId};
pub use network::{Layer, LegLabel, NodeId, TensorNetwork};
pub use tensor::{DenseTensor, NodeKind, ScalarAccumulator};
