//! Greedy resource-flow ("distributed clustering") dynamics on finite
//! periodic graphs.
//!
//! At every step each vertex holding resource sends all of it to the
//! richest vertex of its closed neighborhood (itself included), all vertices
//! at once, with ties broken uniformly at random. The crate provides the
//! graphs ([`graph`]), initial laws ([`init`]), the synchronous engine with
//! cluster genealogy ([`engine`], [`cluster`]), an exact brute-force
//! reference ([`oracle`]) and run statistics ([`stats`]).

pub mod cluster;
pub mod engine;
pub mod graph;
pub mod init;
pub mod oracle;
pub mod rng;
pub mod stats;
pub mod value;

pub use cluster::ClusterState;
pub use engine::{
    apply, classify, is_absorbed, run, step, targets, transition, EngineError, EventCounts, EventTag,
    JointThreshold, Observer, RunOptions, StepReport, StepView, TargetMap,
};
pub use graph::{build_layered, build_torus, Boundary, EdgeTemplate, Graph, GraphError, GraphKind};
pub use init::{pattern_field, sample_field, DistributionSpec, Field, InitError, Law};
pub use stats::{RunResult, TimeSeriesRow, VertexType};
pub use value::{Exact, Magnitude, Real, Resource, ValueMode};
