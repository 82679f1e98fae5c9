//! Scatter-Combine graph processing over agent-graph partitions.
//!
//! - [`graph`]: edge streams, CSR, id indexes, edge-list files
//! - [`rmat`]: deterministic R-MAT generator
//! - [`partition`]: streaming edge placement and agent-graph construction
//! - [`engine`]: BSP execution of [`engine::VertexProgram`]s
//! - [`programs`]: PageRank, SSSP, connected components
//! - [`oracle`]: serial reference implementations

pub mod engine;
pub mod graph;
pub mod oracle;
pub mod partition;
pub mod programs;
pub mod rmat;
