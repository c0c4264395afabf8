//! Card-based shuffle protocols for graph automorphism groups.
//!
//! A *graph shuffle* rearranges a face-down input sequence of `n` cards by a
//! uniformly random automorphism of a graph, without revealing which one was
//! applied. This crate models cards and lying sequences, shuffle actions,
//! an abstract protocol machine with exhaustive branch enumeration, the
//! general graph-shuffle protocol, specialised protocols for directed and
//! undirected cycles, and an exact verifier for correctness and security.

pub mod cards;
pub mod cycle_protocols;
pub mod error;
pub mod graph_shuffle;
pub mod graphs;
pub mod machine;
pub mod perm;
pub mod verify;

/// Exact probability weight.
pub type Weight = num_rational::Ratio<u128>;

pub use cards::{Atom, CardId, CardSequence, Face, LyingCard, Orientation, RFlipSpec};
pub use error::{Error, Result};

pub use machine::{Action, EnumerationOptions, ExecutionTrace, Outcome, Protocol, ProtocolMachine};
pub use graphs::{Graph, GraphFile};
pub use perm::{Permutation, ShuffleSpec};
