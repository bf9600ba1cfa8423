use std::path::{Path, PathBuf};
use std::process::ExitCode;

use infochart::curation::{
    apply_splits, build_preference_pair, classify_complexity, dataset_stats, parse_jsonl, review_export_text,
    review_import_text, synthesize_metadata, synthesize_text, to_jsonl, CurationError, DatasetRecord, SourceRecord,
};
use infochart::gateway::Gateway;
use infochart::seed::derive_seed;
use rayon::prelude::*;
use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::manifest::ManifestBuilder;
use crate::run::{ensure_dir, exit_for, pretty_json, read_text, sibling, write_file, CliError, Context};

#[derive(clap::Subcommand, Debug)]
pub enum Command {
    /// Keep only sources a model classifies as complex.
    Filter {
        #[arg(long)]
        sources: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Draft metadata for each source; drafts start unreviewed.
    SynthMeta {
        #[arg(long)]
        sources: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Write a leak-free input passage for each record.
    SynthText {
        #[arg(long)]
        records: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Export records as editable review JSONL.
    ExportReview {
        #[arg(long)]
        records: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Validate reviewed JSONL, report the diff and assign splits.
    ImportReview {
        /// The records that were exported.
        #[arg(long)]
        records: PathBuf,
        /// The reviewer's edited file.
        #[arg(long)]
        review: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Build judged preference pairs from record input texts.
    Prefs {
        #[arg(long)]
        records: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Dataset summary statistics.
    Stats {
        #[arg(long)]
        records: PathBuf,
        /// Output JSON; a text table is written beside it.
        #[arg(long)]
        out: PathBuf,
        /// Count only verified or corrected records.
        #[arg(long)]
        approved_only: bool,
    },
}

fn load<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>, CliError> {
    parse_jsonl(&read_text(path)?).map_err(|e| CliError::usage(anyhow::anyhow!("{}: {e}", path.display())))
}

fn gateway(ctx: &Context, judge: bool) -> Result<Gateway, CliError> {
    ctx.config.validate_for_curation(judge).map_err(CliError::usage)?;
    ctx.config.build_gateway().map_err(CliError::usage)
}

fn prepare(ctx: &Context, out: &Path, inputs: &[&Path]) -> Result<ManifestBuilder, CliError> {
    if let Some(dir) = out.parent().filter(|d| !d.as_os_str().is_empty()) {
        ensure_dir(dir)?;
    }
    let mut m = ManifestBuilder::start(sibling(out, "manifest.json"), &ctx.config, ctx.config_path.as_deref());
    for p in inputs {
        m.input(p);
    }
    Ok(m)
}

fn emit(m: &mut ManifestBuilder, path: &Path, body: impl AsRef<[u8]>) -> Result<(), CliError> {
    write_file(path, body)?;
    m.output(path);
    Ok(())
}

#[derive(Serialize)]
struct Flagged {
    id: String,
    error: String,
}

/// Writes kept items to `out` and failed ones to `<stem>.flagged.jsonl`.
fn split_results<T: Serialize>(
    m: &mut ManifestBuilder,
    out: &Path,
    results: Vec<(String, Result<T, CurationError>)>,
) -> Result<usize, CliError> {
    let mut kept = Vec::new();
    let mut flagged = Vec::new();
    for (id, r) in results {
        match r {
            Ok(v) => kept.push(v),
            Err(e) => {
                log::warn!("record {id}: {e}");
                m.failure(id.clone(), &e);
                flagged.push(Flagged { id, error: e.to_string() });
            }
        }
    }
    emit(m, out, to_jsonl(&kept))?;
    if !flagged.is_empty() {
        emit(m, &sibling(out, "flagged.jsonl"), to_jsonl(&flagged))?;
    }
    Ok(kept.len())
}

fn par_map<I: Sync, T: Send>(ctx: &Context, items: &[I], f: impl Fn(&I) -> T + Sync + Send) -> Result<Vec<T>, CliError> {
    Ok(ctx.pool()?.install(|| items.par_iter().map(f).collect()))
}

fn source_of(r: &DatasetRecord) -> SourceRecord {
    SourceRecord { id: r.id.clone(), image_ref: r.image_ref.clone(), provenance: String::new() }
}

pub fn run(ctx: &Context, cmd: Command) -> Result<ExitCode, CliError> {
    let cfg = &ctx.config;
    let step_seed = |step: &str, id: &str| derive_seed(cfg.seed, &["curate", step, id]);
    match cmd {
        Command::Filter { sources, out } => {
            let gw = gateway(ctx, false)?;
            let recs: Vec<SourceRecord> = load(&sources)?;
            let mut m = prepare(ctx, &out, &[&sources])?;
            let verdicts = par_map(ctx, &recs, |r| classify_complexity(r, &cfg.curation, &gw, step_seed("filter", &r.id)))?;
            let mut kept = Vec::new();
            for (r, v) in recs.iter().zip(verdicts) {
                match v {
                    Ok(true) => kept.push(r.clone()),
                    Ok(false) => {}
                    Err(e) => m.failure(r.id.clone(), e),
                }
            }
            emit(&mut m, &out, to_jsonl(&kept))?;
            m.gateway(gw.counters());
            m.summary(serde_json::json!({ "sources": recs.len(), "kept": kept.len() }));
            let failed = m.failures();
            m.finish()?;
            Ok(exit_for(failed))
        }
        Command::SynthMeta { sources, out } => {
            let gw = gateway(ctx, false)?;
            let recs: Vec<SourceRecord> = load(&sources)?;
            let mut m = prepare(ctx, &out, &[&sources])?;
            let results = par_map(ctx, &recs, |r| {
                (r.id.clone(), synthesize_metadata(r, &cfg.curation, &gw, step_seed("synth_meta", &r.id)))
            })?;
            let kept = split_results(&mut m, &out, results)?;
            m.gateway(gw.counters());
            m.summary(serde_json::json!({ "sources": recs.len(), "drafted": kept }));
            let failed = m.failures();
            m.finish()?;
            Ok(exit_for(failed))
        }
        Command::SynthText { records, out } => {
            let gw = gateway(ctx, false)?;
            let recs: Vec<DatasetRecord> = load(&records)?;
            let mut m = prepare(ctx, &out, &[&records])?;
            let results = par_map(ctx, &recs, |r| {
                let s = synthesize_text(&source_of(r), Some(&r.metadata), &cfg.curation, &gw, step_seed("synth_text", &r.id));
                let attempts = s.as_ref().map(|s| s.attempts).unwrap_or(0);
                let missing = s.as_ref().ok().and_then(|s| s.coverage.as_ref()).map(|c| c.missing.len()).unwrap_or(0);
                let rec = s.map(|s| DatasetRecord { input_text: s.text, ..r.clone() });
                ((r.id.clone(), rec), (attempts, missing))
            })?;
            let retried = results.iter().filter(|(_, (a, _))| *a > 1).count();
            let uncovered = results.iter().filter(|(_, (_, n))| *n > 0).count();
            let kept = split_results(&mut m, &out, results.into_iter().map(|(r, _)| r).collect())?;
            m.gateway(gw.counters());
            m.summary(serde_json::json!({
                "records": recs.len(), "written": kept, "retried": retried, "missing_statistics": uncovered
            }));
            let failed = m.failures();
            m.finish()?;
            Ok(exit_for(failed))
        }
        Command::ExportReview { records, out } => {
            let recs: Vec<DatasetRecord> = load(&records)?;
            let mut m = prepare(ctx, &out, &[&records])?;
            emit(&mut m, &out, review_export_text(&recs))?;
            m.summary(serde_json::json!({ "records": recs.len() }));
            m.finish()?;
            Ok(ExitCode::SUCCESS)
        }
        Command::ImportReview { records, review, out } => {
            let originals: Vec<DatasetRecord> = load(&records)?;
            let mut report = review_import_text(&read_text(&review)?, &originals).map_err(CliError::usage)?;
            apply_splits(&mut report.records, cfg.curation.split_seed, cfg.curation.strict_review);
            let mut m = prepare(ctx, &out, &[&records, &review])?;
            emit(&mut m, &out, to_jsonl(&report.records))?;
            emit(&mut m, &sibling(&out, "diff.json"), pretty_json(&report.diffs))?;
            let with_split = report.records.iter().filter(|r| r.split.is_some()).count();
            m.summary(serde_json::json!({
                "records": report.records.len(), "changed": report.changed_records(), "assigned_split": with_split
            }));
            m.finish()?;
            for d in &report.diffs {
                eprintln!("{}: {}", d.id, d.changed.join(", "));
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Prefs { records, out } => {
            let gw = gateway(ctx, true)?;
            let recs: Vec<DatasetRecord> = load(&records)?;
            let mut m = prepare(ctx, &out, &[&records])?;
            let jobs: Vec<(String, &str, String)> = recs
                .iter()
                .filter(|r| !r.input_text.trim().is_empty())
                .flat_map(|r| (0..cfg.curation.pairs_per_record).map(move |k| (r.id.clone(), r.input_text.as_str(), k.to_string())))
                .collect();
            let results = par_map(ctx, &jobs, |(id, text, k)| {
                build_preference_pair(id, text, &cfg.curation, &gw, derive_seed(cfg.seed, &["curate", "prefs", id, k]))
            })?;
            let mut pairs = Vec::new();
            let mut discarded = Vec::new();
            for ((id, _, _), r) in jobs.iter().zip(results) {
                match r {
                    Ok(p) => pairs.push(p),
                    Err(
                        e @ (CurationError::IdenticalOutputs(_)
                        | CurationError::UnparseableGeneration { .. }
                        | CurationError::UnparseableJudgeReply { .. }),
                    ) => discarded.push(serde_json::json!({ "id": id, "reason": e.to_string() })),
                    Err(e) => m.failure(id.clone(), e),
                }
            }
            emit(&mut m, &out, to_jsonl(&pairs))?;
            m.gateway(gw.counters());
            m.summary(serde_json::json!({ "attempted": jobs.len(), "pairs": pairs.len(), "discarded": discarded }));
            let failed = m.failures();
            m.finish()?;
            Ok(exit_for(failed))
        }
        Command::Stats { records, out, approved_only } => {
            let recs: Vec<DatasetRecord> = load(&records)?;
            let chosen: Vec<&DatasetRecord> = recs.iter().filter(|r| !approved_only || r.review.status.is_approved()).collect();
            let stats = dataset_stats(chosen.iter().map(|r| (r.input_text.as_str(), &r.metadata)));
            let mut m = prepare(ctx, &out, &[&records])?;
            let table = stats.to_table();
            emit(&mut m, &out, pretty_json(&stats))?;
            emit(&mut m, &sibling(&out, "md"), &table)?;
            m.summary(serde_json::json!({ "records": chosen.len() }));
            m.finish()?;
            print!("{table}");
            Ok(ExitCode::SUCCESS)
        }
    }
}
