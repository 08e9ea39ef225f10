//! File formats, external evaluation and the command line around
//! [`cellspace_core`].

pub use cellspace_core as core;

pub mod cache;
pub mod config;
pub mod export;
pub mod external;
pub mod genome_io;
pub mod pareto;
pub mod svg;
