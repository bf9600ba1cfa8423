//! The coder/judge loop that turns metadata into an accepted chart program.

use std::time::Instant;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::chart::{check_ir, compile_metadata, layout, ChartError, ChartIR, CheckId, ConstraintReport};
use crate::gateway::{bindings, CompletionRequest, Gateway, GatewayError, TemplateId, DEFAULT_MAX_TOKENS, DEFAULT_TEMPERATURE};
use crate::jsonx::outermost_object;
use crate::metadata::{serialize_metadata, MetadataDoc};
use crate::reply::yes_no;

/// Hard ceiling on coder/judge rounds.
pub const MAX_ITERATIONS: u32 = 5;

/// Sent as the system message in llm coder mode: the template asks for
/// plotting code, this pins the output to the chart program format.
pub const CODER_FORMAT_NOTE: &str = "Answer with one JSON chart program and nothing else. Schema: \
{\"figure_title\": str, \"figure_summary\": str, \"canvas\": {\"width_px\": int, \"height_px\": int}, \
\"arrangement\": {\"type\": \"column\"|\"row\"|\"grid\", \"rows\"?: int, \"cols\"?: int}, \
\"panels\": [{\"kind\": \"bar\"|\"horizontal_bar\"|\"grouped_bar\"|\"stacked_bar\"|\"line\"|\"pie\"|\"histogram\"|\"area\", \
\"series\": [{\"name\": str, \"points\": [{\"label\": str, \"value\": number, \"unit\"?: \"percent\"}]}], \
\"x_label\"?: str, \"y_label\"?: str, \"heading\": str, \"heading_anchor\": \"above\"|\"below\"|\"left\"|\"right\", \
\"palette\": [str], \"show_value_labels\": bool}]}";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CoderMode {
    Llm,
    #[default]
    Deterministic,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum JudgeMode {
    #[default]
    Mechanical,
    Llm,
    Combined,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LoopConfig {
    pub max_iterations: u32,
    pub coder_mode: CoderMode,
    pub judge_mode: JudgeMode,
    pub allow_deterministic_fallback: bool,
    pub coder_backend: String,
    pub judge_backend: String,
    pub coder_model: String,
    pub judge_model: String,
    pub temperature: f64,
    pub max_tokens: u32,
}

impl Default for LoopConfig {
    fn default() -> Self {
        LoopConfig {
            max_iterations: MAX_ITERATIONS,
            coder_mode: CoderMode::Deterministic,
            judge_mode: JudgeMode::Mechanical,
            allow_deterministic_fallback: true,
            coder_backend: "coder".into(),
            judge_backend: "judge".into(),
            coder_model: "coder".into(),
            judge_model: "judge".into(),
            temperature: DEFAULT_TEMPERATURE,
            max_tokens: DEFAULT_MAX_TOKENS,
        }
    }
}

impl LoopConfig {
    pub fn validate(&self) -> Result<(), CodegenError> {
        if self.max_iterations == 0 || self.max_iterations > MAX_ITERATIONS {
            return Err(CodegenError::InvalidConfig(format!(
                "max_iterations must be between 1 and {MAX_ITERATIONS}, got {}",
                self.max_iterations
            )));
        }
        Ok(())
    }

    fn needs_gateway(&self) -> bool {
        self.coder_mode == CoderMode::Llm || self.judge_mode != JudgeMode::Mechanical
    }
}

#[derive(Debug, Error)]
pub enum CodegenError {
    #[error("loop configuration: {0}")]
    InvalidConfig(String),
    #[error("model call failed and deterministic fallback is disabled: {0}")]
    Gateway(#[from] GatewayError),
    #[error(transparent)]
    Chart(#[from] ChartError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VerdictSource {
    Mechanical,
    Llm,
    Combined,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub accepted: bool,
    /// Present exactly when the program was rejected.
    pub feedback: Option<String>,
    pub mechanical_report: ConstraintReport,
    pub source: VerdictSource,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub judge_reply: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoderOutput {
    pub ir: ChartIR,
    pub fell_back: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub iteration: u32,
    pub ir: ChartIR,
    pub coder_fell_back: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub coder_note: Option<String>,
    pub verdict: Verdict,
    /// Wall time, kept out of the serialized audit so reruns compare equal.
    #[serde(skip)]
    pub duration_ms: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    Accepted,
    MaxIterations,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LoopAudit {
    pub iterations: Vec<IterationRecord>,
    pub terminated_by: Termination,
    /// 1-based iteration whose program was returned.
    pub selected_iteration: u32,
    /// True when no iteration was accepted and the best one was returned.
    pub degraded: bool,
    pub final_ir: ChartIR,
}

fn gateway_for(gw: Option<&Gateway>) -> Result<&Gateway, CodegenError> {
    gw.ok_or_else(|| CodegenError::InvalidConfig("a model backend is required for llm mode".into()))
}

/// Proposes a chart program. Deterministic mode compiles the metadata;
/// llm mode asks the coder model and falls back to compilation when the
/// reply holds no chart program.
pub fn coder_step(
    doc: &MetadataDoc,
    prior_feedback: Option<&str>,
    cfg: &LoopConfig,
    gw: Option<&Gateway>,
    seed: Option<u64>,
) -> Result<CoderOutput, CodegenError> {
    let fallback = |note: String| -> Result<CoderOutput, CodegenError> {
        Ok(CoderOutput {
            ir: compile_metadata(doc)?,
            fell_back: true,
            note: Some(note),
        })
    };
    if cfg.coder_mode == CoderMode::Deterministic {
        return Ok(CoderOutput {
            ir: compile_metadata(doc)?,
            fell_back: false,
            note: None,
        });
    }
    let gw = gateway_for(gw)?;
    let mut b = bindings([("metadata", serialize_metadata(doc))]);
    if let Some(f) = prior_feedback {
        b.insert("feedback".into(), format!("\n\nFeedback on the previous attempt:\n{f}"));
    }
    let req = CompletionRequest::from_template(cfg.coder_model.clone(), TemplateId::Coder, b)?
        .with_system(CODER_FORMAT_NOTE)
        .with_temperature(cfg.temperature)
        .with_max_tokens(cfg.max_tokens)
        .with_seed(seed);
    let reply = match gw.complete(&cfg.coder_backend, &req) {
        Ok(c) => c.text,
        Err(e) if cfg.allow_deterministic_fallback => return fallback(format!("coder call failed: {e}")),
        Err(e) => return Err(e.into()),
    };
    match outermost_object(&reply).map(serde_json::from_str::<ChartIR>) {
        Some(Ok(ir)) => Ok(CoderOutput {
            ir,
            fell_back: false,
            note: None,
        }),
        Some(Err(e)) => fallback(format!("coder reply is not a chart program: {e}")),
        None => fallback("coder reply contains no JSON object".into()),
    }
}

fn check_sentence(id: CheckId) -> &'static str {
    match id {
        CheckId::SubchartCount => "The number of subcharts does not match the metadata",
        CheckId::SubchartType => "A subchart has the wrong chart type",
        CheckId::AxisLabels => "Axis labels differ from the metadata",
        CheckId::StatsCoverage => "Some statistics from the metadata are not plotted",
        CheckId::Arrangement => "The subchart arrangement ignores the placement descriptions",
        CheckId::TitleSummary => "The figure title or summary is missing",
        CheckId::ValueLabels => "Data values must be shown on the marks",
        CheckId::LayoutFeasible => "The layout cannot be realized",
        CheckId::SpacingBound => "Vertical spacing exceeds 1/(rows-1)",
        CheckId::NoOverlaps => "Text overlaps other text or marks",
        CheckId::NoExtraAxes => "Panels must draw exactly one axis pair, and pies none",
    }
}

/// One sentence per failed check, each prefixed with its check id.
pub fn mechanical_feedback(report: &ConstraintReport) -> Vec<String> {
    report
        .failures()
        .map(|c| format!("[{}] {}: {}.", c.id, check_sentence(c.id), c.detail))
        .collect()
}

fn geometry_summary(ir: &ChartIR) -> String {
    match layout(ir) {
        Ok(f) => {
            let mut s = format!(
                "Layout: canvas {:.0}x{:.0}, {} row(s) x {} column(s), normalized vertical spacing {:.4}",
                f.canvas.w, f.canvas.h, f.rows, f.cols, f.normalized_spacing
            );
            for (i, p) in f.panels.iter().enumerate() {
                s.push_str(&format!(
                    "\n  panel {}: box ({:.0}, {:.0}, {:.0}x{:.0})",
                    i + 1,
                    p.outer.x,
                    p.outer.y,
                    p.outer.w,
                    p.outer.h
                ));
            }
            s
        }
        Err(e) => format!("Layout: {e}"),
    }
}

/// Reviews a program. Mechanical checks always run; acceptance requires
/// them to pass whatever the mode.
pub fn judge_step(
    doc: &MetadataDoc,
    ir: &ChartIR,
    cfg: &LoopConfig,
    gw: Option<&Gateway>,
    seed: Option<u64>,
) -> Result<Verdict, CodegenError> {
    let report = check_ir(ir, doc);
    let mech = mechanical_feedback(&report);
    if cfg.judge_mode == JudgeMode::Mechanical {
        return Ok(Verdict {
            accepted: report.passed,
            feedback: (!report.passed).then(|| mech.join("\n")),
            mechanical_report: report,
            source: VerdictSource::Mechanical,
            judge_reply: None,
            note: None,
        });
    }
    let gw = gateway_for(gw)?;
    let code = format!(
        "{}\n\n{}",
        serde_json::to_string_pretty(ir).expect("chart programs serialize"),
        geometry_summary(ir)
    );
    let req = CompletionRequest::from_template(
        cfg.judge_model.clone(),
        TemplateId::Judge,
        bindings([("metadata", serialize_metadata(doc)), ("code", code)]),
    )?
    .with_temperature(cfg.temperature)
    .with_max_tokens(cfg.max_tokens)
    .with_seed(seed);
    let source = if cfg.judge_mode == JudgeMode::Llm { VerdictSource::Llm } else { VerdictSource::Combined };
    let reply = match gw.complete(&cfg.judge_backend, &req) {
        Ok(c) => c.text,
        Err(e) if cfg.allow_deterministic_fallback => {
            return Ok(Verdict {
                accepted: report.passed,
                feedback: (!report.passed).then(|| mech.join("\n")),
                mechanical_report: report,
                source: VerdictSource::Mechanical,
                judge_reply: None,
                note: Some(format!("judge call failed, mechanical verdict used: {e}")),
            });
        }
        Err(e) => return Err(e.into()),
    };
    let llm_yes = yes_no(&reply) == Some(true);
    let mut feedback = mech;
    if !llm_yes {
        feedback.push(reply.trim().to_string());
    }
    let accepted = report.passed && llm_yes;
    Ok(Verdict {
        accepted,
        feedback: (!accepted).then(|| feedback.join("\n")),
        mechanical_report: report,
        source,
        judge_reply: Some(reply),
        note: None,
    })
}

/// Alternates coder and judge until acceptance or the iteration cap.
///
/// Without acceptance, the iteration with the most passing checks is
/// returned, the latest among ties, and the audit is marked degraded.
pub fn run_loop(
    doc: &MetadataDoc,
    cfg: &LoopConfig,
    gw: Option<&Gateway>,
    seed: Option<u64>,
) -> Result<(ChartIR, LoopAudit), CodegenError> {
    cfg.validate()?;
    if cfg.needs_gateway() {
        gateway_for(gw)?;
    }
    let mut iterations: Vec<IterationRecord> = Vec::new();
    let mut feedback: Option<String> = None;
    for k in 1..=cfg.max_iterations {
        let started = Instant::now();
        let coded = coder_step(doc, feedback.as_deref(), cfg, gw, seed)?;
        let verdict = judge_step(doc, &coded.ir, cfg, gw, seed)?;
        feedback = verdict.feedback.clone();
        let accepted = verdict.accepted;
        iterations.push(IterationRecord {
            iteration: k,
            ir: coded.ir,
            coder_fell_back: coded.fell_back,
            coder_note: coded.note,
            verdict,
            duration_ms: started.elapsed().as_millis() as u64,
        });
        if accepted {
            let final_ir = iterations[iterations.len() - 1].ir.clone();
            return Ok((
                final_ir.clone(),
                LoopAudit {
                    iterations,
                    terminated_by: Termination::Accepted,
                    selected_iteration: k,
                    degraded: false,
                    final_ir,
                },
            ));
        }
    }
    let best = iterations
        .iter()
        .enumerate()
        .max_by_key(|(i, r)| (r.verdict.mechanical_report.passing_count(), *i))
        .map(|(i, _)| i)
        .expect("at least one iteration ran");
    let final_ir = iterations[best].ir.clone();
    Ok((
        final_ir.clone(),
        LoopAudit {
            selected_iteration: best as u32 + 1,
            iterations,
            terminated_by: Termination::MaxIterations,
            degraded: true,
            final_ir,
        },
    ))
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::gateway::ScriptedMock;
    use crate::metadata::parse_metadata;

    fn doc() -> MetadataDoc {
        parse_metadata(
            r#"{"title":"Trust in science","summary":"Most trust scientists",
                "subchart_1":{"kind":"bar","stats":"Yes: 35%, No: 63%","position_chart":"first"},
                "subchart_2":{"kind":"bar","stats":"Yes: 40%, No: 59%","position_chart":"below the first"},
                "subchart_3":{"kind":"pie","stats":"A: 14%, B: 86%","position_chart":"below the second"}}"#,
        )
        .unwrap()
    }

    fn gw(pairs: &[(&str, &str)]) -> Gateway {
        Gateway::new(1).with_backend("coder", Arc::new(ScriptedMock::from_pairs(pairs.iter().copied())))
            .with_backend("judge", Arc::new(ScriptedMock::from_pairs(pairs.iter().copied())))
    }

    #[test]
    fn deterministic_loop_accepts_first_time() {
        let (ir, audit) = run_loop(&doc(), &LoopConfig::default(), None, None).unwrap();
        assert_eq!(audit.iterations.len(), 1);
        assert_eq!(audit.terminated_by, Termination::Accepted);
        assert_eq!(ir.panels.len(), 3);
    }

    #[test]
    fn llm_coder_passthrough_and_fallback() {
        let good = serde_json::to_string(&compile_metadata(&doc()).unwrap()).unwrap();
        let cfg = LoopConfig { coder_mode: CoderMode::Llm, ..LoopConfig::default() };
        let g = gw(&[("template:coder", good.as_str())]);
        let out = coder_step(&doc(), None, &cfg, Some(&g), None).unwrap();
        assert!(!out.fell_back);
        assert_eq!(out.ir, compile_metadata(&doc()).unwrap());

        let g = gw(&[("template:coder", "Here is some Plotly code: fig = go.Figure()")]);
        let out = coder_step(&doc(), None, &cfg, Some(&g), None).unwrap();
        assert!(out.fell_back);
        assert!(out.note.unwrap().contains("no JSON"));
    }

    #[test]
    fn missing_panel_feedback_names_the_check() {
        let d = doc();
        let mut ir = compile_metadata(&d).unwrap();
        ir.panels.pop();
        let v = judge_step(&d, &ir, &LoopConfig::default(), None, None).unwrap();
        assert!(!v.accepted);
        let fb = v.feedback.unwrap();
        assert!(fb.contains("expected 3, found 2"), "{fb}");
        for line in fb.lines() {
            assert!(CheckId::ALL.iter().any(|id| line.starts_with(&format!("[{id}]"))), "{line}");
        }
    }

    #[test]
    fn combined_judge_needs_both() {
        let d = doc();
        let ir = compile_metadata(&d).unwrap();
        let cfg = LoopConfig { judge_mode: JudgeMode::Combined, ..LoopConfig::default() };
        let g = gw(&[("template:judge", "No — title missing")]);
        let v = judge_step(&d, &ir, &cfg, Some(&g), None).unwrap();
        assert!(v.mechanical_report.passed && !v.accepted);
        assert_eq!(v.feedback.as_deref(), Some("No — title missing"));
        let g = gw(&[("template:judge", "Yes.")]);
        assert!(judge_step(&d, &ir, &cfg, Some(&g), None).unwrap().accepted);
    }

    #[test]
    fn llm_judge_cannot_accept_broken_programs() {
        let d = doc();
        let mut ir = compile_metadata(&d).unwrap();
        ir.panels.pop();
        let cfg = LoopConfig { judge_mode: JudgeMode::Llm, ..LoopConfig::default() };
        let v = judge_step(&d, &ir, &cfg, Some(&gw(&[("template:judge", "yes")])), None).unwrap();
        assert!(!v.accepted);
        assert_eq!(v.source, VerdictSource::Llm);
    }

    #[test]
    fn iteration_cap_is_enforced() {
        let cfg = LoopConfig { max_iterations: 6, ..LoopConfig::default() };
        assert!(matches!(run_loop(&doc(), &cfg, None, None), Err(CodegenError::InvalidConfig(_))));
        let cfg = LoopConfig { coder_mode: CoderMode::Llm, ..LoopConfig::default() };
        assert!(matches!(run_loop(&doc(), &cfg, None, None), Err(CodegenError::InvalidConfig(_))));
    }
}
