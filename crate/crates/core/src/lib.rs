//! Infographic generation from text: structured chart metadata, a
//! coder/judge loop over a declarative chart program, SVG rendering, and
//! the evaluation and dataset curation tools around them.

pub mod jsonx;
pub mod metadata;
pub mod gateway;
pub mod chart;
pub mod codegen;
pub mod config;
pub mod curation;
pub mod reply;
pub mod eval;
pub mod metagen;
pub mod pipeline;
pub mod seed;

pub use chart::{ChartError, ChartIR, ConstraintReport};
pub use codegen::{LoopAudit, LoopConfig};
pub use config::{Config, ConfigError};
pub use curation::{CurationConfig, DatasetRecord, SourceRecord};
pub use eval::{EvalOptions, EvalPair, MetricsReport};
pub use gateway::{BackendConfig, CompletionRequest, Gateway, GatewayCounters};
pub use metadata::{ChartKind, MetadataDoc, Subchart};
pub use metagen::{StageAudit, StageConfig};
pub use pipeline::{text_to_chart, DocumentAudit, DocumentOutputs};
