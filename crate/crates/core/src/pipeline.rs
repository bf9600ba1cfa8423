//! Text in, chart out: metadata generation, the coder/judge loop and SVG
//! rendering for one document.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::chart::{check_ir, layout_and_render, ChartIR, ConstraintReport};
use crate::codegen::{run_loop, CodegenError, LoopAudit};
use crate::config::Config;
use crate::gateway::Gateway;
use crate::metadata::MetadataDoc;
use crate::metagen::{generate_metadata, MetagenError, StageAudit};
use crate::seed::derive_seed;

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("metadata generation: {0}")]
    Metagen(#[from] MetagenError),
    #[error("chart program: {0}")]
    Codegen(#[from] CodegenError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DocumentAudit {
    pub id: String,
    pub seed: u64,
    pub metadata: StageAudit,
    pub codegen: LoopAudit,
    /// Checks of the returned program against the chosen metadata.
    pub final_checks: ConstraintReport,
}

#[derive(Debug, Clone)]
pub struct DocumentOutputs {
    pub doc: MetadataDoc,
    pub ir: ChartIR,
    pub svg: String,
    pub audit: DocumentAudit,
}

/// Seed for one document of a corpus run; independent of processing order.
pub fn document_seed(root: u64, id: &str) -> u64 {
    derive_seed(root, &["document", id])
}

/// Runs the full pipeline for one input text.
pub fn text_to_chart(id: &str, text: &str, cfg: &Config, gw: &Gateway, seed: u64) -> Result<DocumentOutputs, PipelineError> {
    let (doc, stage) = generate_metadata(text, &cfg.metagen, gw, Some(derive_seed(seed, &["metagen"])))?;
    let (ir, loop_audit) = run_loop(&doc, &cfg.codegen, Some(gw), Some(derive_seed(seed, &["codegen"])))?;
    let (_, svg) = layout_and_render(&ir).map_err(CodegenError::from)?;
    let final_checks = check_ir(&ir, &doc);
    Ok(DocumentOutputs {
        audit: DocumentAudit { id: id.to_string(), seed, metadata: stage, codegen: loop_audit, final_checks },
        doc,
        ir,
        svg,
    })
}
