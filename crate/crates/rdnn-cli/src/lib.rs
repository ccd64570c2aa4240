//! File formats used by the `rdnn` binary: grid files, PGM heatmaps, and
//! external-data ingestion.

pub mod gridfile;
pub mod heatmap;
pub mod ingest;
