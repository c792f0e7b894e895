//! Randomized rainbow decompositions of properly edge-coloured graphs.
//!
//! The crate builds, and checks, families of edge-disjoint rainbow
//! structures: transversals of generalized Latin squares (perfect rainbow
//! matchings of `K_{n,n}`), near-perfect rainbow matchings via a semi-random
//! nibble, rainbow 2-factors and Hamiltonian cycles, and spanning rainbow
//! trees. Every emitted structure is re-verified with [`graph::verify`].

pub mod config;
pub mod error;
pub mod generate;
pub mod graph;
pub mod hamilton;
pub mod matchings;
pub mod nibble;
pub mod oracle;
pub mod pseudorandom;
pub mod regularize;
pub mod report;
pub mod rng;
pub mod trees;

pub use error::{Error, Result};
pub use graph::{
    CycleFactor, Edge, GeneralizedLatinSquare, Graph, RainbowForest, RainbowMatching, StructureKind,
    VerificationReport,
};
pub use rng::Rng;
