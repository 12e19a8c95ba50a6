//! Solvers and tooling for the Clustered Vehicle Routing Problem: customers
//! are partitioned into clusters and a vehicle entering a cluster must serve
//! all of its customers before leaving.
//!
//! The crate provides the instance model with a TSPLIB-style file format,
//! exact intra-cluster Hamiltonian-path preprocessing, a route evaluation
//! engine based on subsequence concatenation, two iterated local search
//! solvers (vertex-level with M-penalized costs, and cluster-level), a
//! hybrid genetic search over cluster giant tours, and a benchmark harness.

pub mod bench;
pub mod hampath;
pub mod ils;
pub mod instance;
pub mod neighborhoods;
pub mod seqconcat;
pub mod solution;
pub mod uhgs;
