//! JSON configuration files.
//!
//! The file mirrors [`SearchConfig`] one to one. Unknown keys are rejected,
//! and every error names the key it is about, e.g. `layers.L_c` or
//! `merge_modes[1]`.

use std::fs;
use std::hash::Hasher;
use std::path::{Path, PathBuf};

use cellspace_core::optimizer::EaParams;
use cellspace_core::space::{
    Activation, BlockDef, BlockOption, ConfigParts, HeadLayer, LayerCounts, MergeMode, OpKind,
    Operation, SamplingMode,
};
use cellspace_core::{ConfigError, SearchConfig, TensorShape};
use serde::{Deserialize, Serialize};

/// The shipped reference configuration.
pub const DEFAULT_CONFIG: &str = include_str!("../configs/default.json");
/// The shipped 64-genome fixture.
pub const TINY_CONFIG: &str = include_str!("../configs/tiny.json");

#[derive(Debug, thiserror::Error)]
pub enum ConfigFileError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{key}: {message}")]
    Parse { key: String, message: String },
    #[error("{}: {}", .0.key(), .0)]
    Invalid(#[from] ConfigError),
}

impl ConfigFileError {
    /// The offending key, when there is one.
    pub fn key(&self) -> Option<&str> {
        match self {
            ConfigFileError::Io { .. } => None,
            ConfigFileError::Parse { key, .. } => Some(key),
            ConfigFileError::Invalid(e) => Some(e.key()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub blocks: Vec<BlockEntry>,
    pub block_options: Vec<OptionEntry>,
    pub reduction_blocks: Vec<OperationEntry>,
    pub merge_modes: Vec<MergeMode>,
    pub sampling_modes: Vec<SamplingMode>,
    pub layers: LayersEntry,
    pub input_shape: [u64; 3],
    pub stem_filters: u64,
    pub head: Vec<HeadLayer>,
    pub objectives: ObjectivesEntry,
    #[serde(default)]
    pub ea: EaParams,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BlockEntry {
    pub name: String,
    pub op: OpKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kernel: Option<u32>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OperationEntry {
    pub op: OpKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kernel: Option<u32>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OptionEntry {
    #[serde(default)]
    pub skip: bool,
    #[serde(default)]
    pub batch_norm: bool,
    #[serde(default)]
    pub activation: Activation,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LayersEntry {
    #[serde(rename = "L_c")]
    pub l_c: usize,
    #[serde(rename = "N_c")]
    pub n_c: usize,
    #[serde(rename = "L_p")]
    pub l_p: usize,
    #[serde(rename = "L_B")]
    pub l_b: usize,
    #[serde(rename = "L_r", default, skip_serializing_if = "Option::is_none")]
    pub l_r: Option<usize>,
    #[serde(
        rename = "allow_mismatched_L_r",
        default,
        skip_serializing_if = "is_false"
    )]
    pub allow_mismatched_l_r: bool,
}

fn is_false(b: &bool) -> bool {
    !*b
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObjectivesEntry {
    pub total_param: u64,
}

fn operation(op: OpKind, kernel: Option<u32>, key: &'static str) -> Result<Operation, ConfigError> {
    match (op, kernel) {
        (OpKind::Identity, _) => Ok(Operation::identity()),
        (_, None) => Err(ConfigError::Invalid {
            key,
            reason: "kernel is required for this operation".into(),
        }),
        (kind, Some(k)) => Operation::new(kind, k).map_err(|e| ConfigError::Invalid {
            key,
            reason: e.to_string(),
        }),
    }
}

fn operation_entry(op: &Operation) -> OperationEntry {
    OperationEntry {
        op: op.kind(),
        kernel: (op.kind() != OpKind::Identity).then_some(op.kernel()),
    }
}

impl ConfigFile {
    pub fn into_config(self) -> Result<SearchConfig, ConfigFileError> {
        let blocks = self
            .blocks
            .into_iter()
            .map(|b| Ok(BlockDef::new(b.name, operation(b.op, b.kernel, "blocks")?)))
            .collect::<Result<Vec<_>, ConfigError>>()?;
        let mut block_options = Vec::with_capacity(self.block_options.len());
        for (i, o) in self.block_options.iter().enumerate() {
            if o.skip && (o.batch_norm || o.activation != Activation::None) {
                log::warn!("block_options[{i}]: skip overrides batch_norm and activation");
            }
            block_options.push(BlockOption::new(o.skip, o.batch_norm, o.activation));
        }
        let reduction_blocks = self
            .reduction_blocks
            .iter()
            .map(|r| operation(r.op, r.kernel, "reduction_blocks"))
            .collect::<Result<Vec<_>, ConfigError>>()?;
        let [h, w, c] = self.input_shape;
        let parts = ConfigParts {
            layers: LayerCounts {
                l_c: self.layers.l_c,
                n_c: self.layers.n_c,
                l_p: self.layers.l_p,
                l_b: self.layers.l_b,
                l_r: self.layers.l_r,
                allow_mismatched_l_r: self.layers.allow_mismatched_l_r,
            },
            blocks,
            block_options,
            reduction_blocks,
            merge_modes: self.merge_modes,
            sampling_modes: self.sampling_modes,
            input_shape: TensorShape::new(h, w, c),
            stem_filters: self.stem_filters,
            head: self.head,
            total_param: self.objectives.total_param,
            ea: self.ea,
        };
        Ok(SearchConfig::from_parts(parts)?)
    }

    /// The file form of `config`, with `L_r` always spelled out.
    pub fn from_config(config: &SearchConfig) -> Self {
        let p = config.params();
        let s = config.input_shape();
        ConfigFile {
            blocks: config
                .blocks()
                .iter()
                .map(|b| {
                    let e = operation_entry(&b.op);
                    BlockEntry {
                        name: b.name.clone(),
                        op: e.op,
                        kernel: e.kernel,
                    }
                })
                .collect(),
            block_options: config
                .block_options()
                .iter()
                .map(|o| OptionEntry {
                    skip: o.is_skip(),
                    batch_norm: o.batch_norm(),
                    activation: o.activation(),
                })
                .collect(),
            reduction_blocks: config
                .reduction_blocks()
                .iter()
                .map(operation_entry)
                .collect(),
            merge_modes: config.merge_modes().to_vec(),
            sampling_modes: config.sampling_modes().to_vec(),
            layers: LayersEntry {
                l_c: p.l_c,
                n_c: p.n_c,
                l_p: p.l_p,
                l_b: p.l_b,
                l_r: Some(p.l_r),
                allow_mismatched_l_r: config.allow_mismatched_l_r(),
            },
            input_shape: [s.h, s.w, s.c],
            stem_filters: config.stem_filters(),
            head: config.head().to_vec(),
            objectives: ObjectivesEntry {
                total_param: config.total_param(),
            },
            ea: *config.ea(),
        }
    }
}

pub fn parse_config(text: &str) -> Result<SearchConfig, ConfigFileError> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let file: ConfigFile = serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        ConfigFileError::Parse {
            key: if path == "." { "<root>".into() } else { path },
            message: e.into_inner().to_string(),
        }
    })?;
    file.into_config()
}

pub fn load_config(path: &Path) -> Result<SearchConfig, ConfigFileError> {
    let text = fs::read_to_string(path).map_err(|source| ConfigFileError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_config(&text)
}

/// Compact JSON with sorted keys and every default filled in.
pub fn canonical_json(config: &SearchConfig) -> String {
    let value = serde_json::to_value(ConfigFile::from_config(config)).expect("config serializes");
    serde_json::to_string(&value).expect("value serializes")
}

/// FNV-1a 64 of [`canonical_json`], as 16 lowercase hex digits.
pub fn fingerprint(config: &SearchConfig) -> String {
    let mut h = fnv::FnvHasher::default();
    h.write(canonical_json(config).as_bytes());
    format!("{:016x}", h.finish())
}
