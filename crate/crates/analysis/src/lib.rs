//! Analytics over observed graphs: degree distributions with a power-law
//! fit, clustering (global and per degree), average-neighbor-degree
//! curves, k-core decomposition with shell statistics, alias-rank curves,
//! and side-by-side topology comparison.
//!
//! All floating computations are generic over the scalar type through
//! [`Real`]; the `*64` aliases at the crate root pin the default `f64`
//! instantiations used by the pipeline.

mod adjacency;
mod clustering;
mod compare;
mod degree;
mod kcore;

use std::fmt;
use std::iter::Sum;
use std::ops::AddAssign;

use num_traits::{Float, FromPrimitive};
use thiserror::Error;

pub use adjacency::Adjacency;
pub use clustering::{avg_neighbor_degree, clustering, ClusteringStats};
pub use compare::{
    alias_rank_curve, compare, edge_observation_histograms, summary_row, ComparisonReport,
    SummaryRow,
};
pub use degree::{degree_stats, fit_power_law, DegreeStats, PowerLawFit};
pub use kcore::{k_core, shell_stats, KCoreResult, ShellRow};

/// Scalar type the analytics run on: any float with primitive
/// conversions.
pub trait Real:
    Float + FromPrimitive + AddAssign + Sum<Self> + fmt::Debug + fmt::Display + 'static
{
    fn from_count(n: usize) -> Self {
        Self::from_usize(n).expect("count fits the scalar")
    }
}

impl<T> Real for T where
    T: Float + FromPrimitive + AddAssign + Sum<T> + fmt::Debug + fmt::Display + 'static
{
}

#[derive(Debug, Error, PartialEq)]
pub enum AnalysisError {
    #[error("graph is empty")]
    EmptyGraph,
    #[error("graphs are at different levels ({a} vs {b})")]
    LevelMismatch { a: String, b: String },
    #[error("k-core result does not cover the same node set as the graph")]
    NodeSetMismatch,
}

/// Default scalar used by the command-line pipeline.
pub type Scalar = f64;

pub type DegreeStats64 = DegreeStats<Scalar>;
pub type PowerLawFit64 = PowerLawFit<Scalar>;
pub type ClusteringStats64 = ClusteringStats<Scalar>;
pub type ShellRow64 = ShellRow<Scalar>;
pub type SummaryRow64 = SummaryRow<Scalar>;
pub type ComparisonReport64 = ComparisonReport<Scalar>;
