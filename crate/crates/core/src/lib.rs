//! Differentially private aggregation over trust graphs.
//!
//! Each user trusts its neighbors in an undirected graph. The protocols here
//! let users share data with trusted neighbors and allocate noise according to
//! a fractional dominating set, so that the joint view of everyone outside a
//! user's closed neighborhood stays differentially private in that user's
//! input.
//!
//! * [`graph`]: trust graphs, edge-list ingestion, thresholds.
//! * [`lp`]: covering LPs, the robust variant, and their packing duals.
//! * [`noise`]: discrete Laplace and (symmetric) negative binomial noise.
//! * [`protocol`]: seeded protocol simulation with transcripts and views.
//! * [`bounds`]: packings, dominating sets, and the rounding argument.
//! * [`audit`]: privacy certification and utility measurement.

pub mod audit;
pub mod bounds;
pub mod graph;
pub mod lp;
pub mod noise;
pub mod protocol;
pub mod rng;

pub use graph::{make_threshold, EdgeFormat, GraphError, ThresholdVector, TrustGraph};
pub use lp::{
    solve_cover, solve_packing_dual, solve_robust_cover, DualPacking, FractionalCover, LpError,
};
pub use noise::{NoiseDist, NoiseError, Pmf};
pub use protocol::{NoiseMode, ProtocolError, Transcript};

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error(transparent)]
    Graph(#[from] graph::GraphError),
    #[error(transparent)]
    Lp(#[from] lp::LpError),
    #[error(transparent)]
    Noise(#[from] noise::NoiseError),
    #[error(transparent)]
    Protocol(#[from] protocol::ProtocolError),
    #[error(transparent)]
    Bounds(#[from] bounds::BoundsError),
    #[error(transparent)]
    Audit(#[from] audit::AuditError),
}
