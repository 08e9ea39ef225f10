//! Pareto front files: CSV for reading, JSON for round-tripping.

use cellspace_core::{DigitGenome, GenomeLayout, Individual, ObjectiveVector, ParetoArchive};
use serde::{Deserialize, Serialize};

use crate::genome_io::packed_csv;

pub const CSV_HEADER: [&str; 5] = ["genome_packed", "f1", "f2", "g", "param_count"];

fn rows_by_f1(archive: &ParetoArchive) -> Vec<&Individual> {
    let mut rows: Vec<&Individual> = archive.entries().iter().collect();
    rows.sort_by(|a, b| {
        a.objectives
            .f1
            .total_cmp(&b.objectives.f1)
            .then(a.objectives.f2.total_cmp(&b.objectives.f2))
            .then_with(|| a.genome.cmp(&b.genome))
    });
    rows
}

/// Rows sorted by ascending `f1`. Floats use the shortest representation
/// that parses back to the same value.
pub fn pareto_csv(archive: &ParetoArchive, layout: &GenomeLayout) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(CSV_HEADER).expect("in-memory write");
    for ind in rows_by_f1(archive) {
        let o = ind.objectives;
        w.write_record([
            packed_csv(&ind.genome, layout),
            o.f1.to_string(),
            o.f2.to_string(),
            o.g.to_string(),
            ind.param_count.to_string(),
        ])
        .expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("csv output is UTF-8")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParetoRow {
    pub genome: Vec<u32>,
    pub genome_packed: String,
    pub f1: f64,
    pub f2: f64,
    pub g: f64,
    pub param_count: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParetoDoc {
    pub config_fingerprint: String,
    pub entries: Vec<ParetoRow>,
}

pub fn pareto_doc(
    archive: &ParetoArchive,
    layout: &GenomeLayout,
    config_fingerprint: &str,
) -> ParetoDoc {
    ParetoDoc {
        config_fingerprint: config_fingerprint.to_string(),
        entries: rows_by_f1(archive)
            .into_iter()
            .map(|ind| ParetoRow {
                genome: ind.genome.digits().to_vec(),
                genome_packed: packed_csv(&ind.genome, layout),
                f1: ind.objectives.f1,
                f2: ind.objectives.f2,
                g: ind.objectives.g,
                param_count: ind.param_count,
            })
            .collect(),
    }
}

/// Pretty-printed JSON; each row carries the full digit genome.
pub fn pareto_json(
    archive: &ParetoArchive,
    layout: &GenomeLayout,
    config_fingerprint: &str,
) -> String {
    let mut text = serde_json::to_string_pretty(&pareto_doc(archive, layout, config_fingerprint))
        .expect("pareto rows serialize");
    text.push('\n');
    text
}

#[derive(Debug, thiserror::Error)]
pub enum ParetoReadError {
    #[error("pareto JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("row {0}: genome does not fit the layout")]
    Genome(usize),
}

/// Reads a file written by [`pareto_json`] back into an archive.
pub fn read_pareto_json(
    text: &str,
    layout: &GenomeLayout,
) -> Result<(ParetoArchive, String), ParetoReadError> {
    let doc: ParetoDoc = serde_json::from_str(text)?;
    let entries = doc
        .entries
        .into_iter()
        .enumerate()
        .map(|(i, row)| {
            let genome =
                DigitGenome::new(row.genome, layout).map_err(|_| ParetoReadError::Genome(i))?;
            let objectives = ObjectiveVector {
                f1: row.f1,
                f2: row.f2,
                g: row.g,
            };
            Ok(Individual::new(genome, objectives, row.param_count))
        })
        .collect::<Result<Vec<_>, ParetoReadError>>()?;
    Ok((ParetoArchive::from_entries(entries), doc.config_fingerprint))
}
