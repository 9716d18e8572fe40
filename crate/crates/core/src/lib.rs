//! Optimal non-bipartite full matching for continuous-dose observational studies.
//!
//! Units are grouped into subclasses of size two or more by solving a
//! minimum-cost edge cover, which is reduced to minimum-weight perfect
//! matching on a mirrored graph. The crate also provides the distance
//! constructions, homogeneity and balance diagnostics, a rank-based
//! randomization test for clustered designs, and a simulation harness.

pub mod blossom;
pub mod cover;
pub mod distance;
pub mod error;
pub mod graph;
pub mod homogeneity;
pub mod inference;
pub mod io;
pub mod par;
pub mod regression;
pub mod simulation;
pub mod subclass;

pub use blossom::{min_weight_perfect_matching, MatchingResult, SolverStats};
pub use cover::{
    build_mirror_graph, extract_cover, full_match, optimal_pair_match, star_reduce,
    CardinalityPenalty,
};
pub use distance::{
    apply_dose_penalty, mahalanobis_matrix, DistanceMatrix, DosePenaltyConfig, UnitTable,
};
pub use error::{Error, Result};
pub use graph::{cover_cost, validate_graph, Edge, EdgeCover, Matching, WeightedGraph};
pub use homogeneity::{HomogeneityReport, Measure, WeightingScheme, Weights};
pub use inference::{Alternative, ClusteredStudy, TestResult};
pub use par::Execution;
pub use subclass::{Subclass, Subclassification};
