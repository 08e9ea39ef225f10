//! Architecture export: one decoded genome as a shaped operation graph.

use cellspace_core::genome::decode;
use cellspace_core::graph::{build_graph, infer_shapes, GraphError};
use cellspace_core::metrics::{total_param_count, MetricsError};
use cellspace_core::{ArchGraph, DigitGenome, GenomeLayout, SearchConfig};
use serde::{Deserialize, Serialize};

use crate::config::fingerprint;
use crate::genome_io::{packed_strings, GenomeInputError};

pub const FORMAT_VERSION: &str = "1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExportGenome {
    pub digits: Vec<u32>,
    pub packed: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ArchitectureExport {
    pub format_version: String,
    pub genome: ExportGenome,
    pub graph: ArchGraph,
    pub param_count: u64,
    pub config_fingerprint: String,
}

#[derive(Debug, thiserror::Error)]
pub enum ExportError {
    #[error("export JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("unsupported format_version {0:?}")]
    Version(String),
    #[error(transparent)]
    Genome(#[from] GenomeInputError),
    #[error("graph: {0}")]
    Graph(#[from] GraphError),
    #[error("node {0}: stored node differs from the re-inferred one")]
    StaleShape(usize),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
    #[error("param_count {stored} does not match the graph ({actual})")]
    ParamMismatch { stored: u64, actual: u64 },
}

impl ArchitectureExport {
    /// Wraps an already shaped `graph` for `genome`.
    pub fn from_graph(
        genome: &DigitGenome,
        graph: ArchGraph,
        layout: &GenomeLayout,
        config_fingerprint: String,
    ) -> Result<Self, ExportError> {
        let param_count = total_param_count(&graph)?;
        Ok(ArchitectureExport {
            format_version: FORMAT_VERSION.to_string(),
            genome: ExportGenome {
                digits: genome.digits().to_vec(),
                packed: packed_strings(genome, layout),
            },
            graph,
            param_count,
            config_fingerprint,
        })
    }

    /// Decodes and builds `genome` under `config`.
    pub fn build(genome: &DigitGenome, config: &SearchConfig) -> Result<Self, ExportError> {
        let layout = GenomeLayout::new(config.params());
        let plan = decode(genome, config).map_err(GenomeInputError::from)?;
        let graph = build_graph(&plan, config)?;
        Self::from_graph(genome, graph, &layout, fingerprint(config))
    }

    /// Canonical JSON: sorted keys, no insignificant whitespace.
    pub fn to_canonical_json(&self) -> String {
        to_canonical_json(self)
    }

    /// Parses an export and checks its graph and parameter count.
    pub fn parse(text: &str) -> Result<Self, ExportError> {
        let export: ArchitectureExport = serde_json::from_str(text)?;
        if export.format_version != FORMAT_VERSION {
            return Err(ExportError::Version(export.format_version));
        }
        let reshaped = infer_shapes(&export.graph)?;
        if reshaped != export.graph {
            return Err(ExportError::StaleShape(first_difference(
                &reshaped,
                &export.graph,
            )));
        }
        let actual = total_param_count(&export.graph)?;
        if actual != export.param_count {
            return Err(ExportError::ParamMismatch {
                stored: export.param_count,
                actual,
            });
        }
        Ok(export)
    }
}

fn first_difference(a: &ArchGraph, b: &ArchGraph) -> usize {
    a.nodes
        .iter()
        .zip(&b.nodes)
        .position(|(x, y)| x != y)
        .unwrap_or(a.nodes.len().min(b.nodes.len()))
}

/// Serializes through `serde_json::Value`, whose maps keep keys sorted.
pub fn to_canonical_json<T: Serialize>(value: &T) -> String {
    let v = serde_json::to_value(value).expect("value serializes");
    serde_json::to_string(&v).expect("value serializes")
}
