//! Random walks in random environments on finite truncations of infinite graphs.
//!
//! Infinity is modelled by a single sink vertex into which everything beyond a
//! truncation radius is contracted. On top of that the crate provides:
//!
//! - [`graph`]: lattice balls, trees and edge-list graphs with a sink,
//! - [`environment`]: i.i.d. resistance environments, truncation `R^(k)` and threshold subgraphs,
//! - [`resistance`]: effective resistance, unit-current flows and Dirichlet energy,
//! - [`percolation`]: bond percolation sharing its randomness with environment sampling,
//! - [`walk`]: the reversible walk, the monotone truncation coupling and event classification,
//! - [`construction`]: the level-by-level staircase distribution that forces recurrence,
//! - [`tree`]: branching number, critical probability and decaying flows on trees.

// `!(x > 0.0)` is used on purpose: it rejects NaN as well.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod construction;
pub mod environment;
pub mod graph;
pub mod percolation;
pub mod resistance;
pub mod seed;
pub mod stats;
pub mod tree;
pub mod union_find;
pub mod walk;

pub use environment::{Environment, ResistanceDistribution, Resistances, StaircaseMu};
pub use graph::{FiniteGraph, GraphWithSink};
