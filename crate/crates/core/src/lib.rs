//! Text-embedding analysis for labeled property graphs.
//!
//! Nodes and relation contexts are serialized to text, embedded with a
//! pluggable provider behind a persistent cache, and fed to lightweight
//! classifiers for node classification and relation prediction.

pub mod classifiers;
pub mod embedding;
pub mod evaluation;
pub mod fixtures;
pub mod graph;
pub mod ingest;
pub mod tasks;
pub mod textualize;
