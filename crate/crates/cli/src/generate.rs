use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use infochart::pipeline::{document_seed, text_to_chart};
use rayon::prelude::*;
use serde::Deserialize;

use crate::manifest::ManifestBuilder;
use crate::run::{ensure_dir, exit_for, pretty_json, read_text, write_file, CliError, Context};

#[derive(clap::Args, Debug)]
#[command(group(clap::ArgGroup::new("source").required(true).args(["input", "corpus"])))]
pub struct Args {
    /// One plain-text document; its file stem becomes the id.
    #[arg(long)]
    input: Option<PathBuf>,
    /// JSONL corpus of `{"id": ..., "text": ...}` lines.
    #[arg(long)]
    corpus: Option<PathBuf>,
    /// Output directory; one subdirectory per document.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct CorpusLine {
    id: String,
    #[serde(alias = "input_text")]
    text: String,
}

/// Directory name for a document id: anything outside `[A-Za-z0-9._-]`
/// becomes `_`.
pub fn dir_name(id: &str) -> String {
    let s: String = id.chars().map(|c| if c.is_ascii_alphanumeric() || matches!(c, '.' | '_' | '-') { c } else { '_' }).collect();
    if s.is_empty() || s.chars().all(|c| c == '.') {
        format!("_{s}")
    } else {
        s
    }
}

fn load_documents(args: &Args) -> Result<Vec<(String, String)>, CliError> {
    if let Some(p) = &args.input {
        let id = p.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "input".into());
        return Ok(vec![(id, read_text(p)?)]);
    }
    let path = args.corpus.as_ref().expect("clap requires a source");
    let mut docs = Vec::new();
    for (n, line) in read_text(path)?.lines().enumerate().filter(|(_, l)| !l.trim().is_empty()) {
        let rec: CorpusLine = serde_json::from_str(line)
            .map_err(|e| CliError::usage(anyhow::anyhow!("{} line {}: {e}", path.display(), n + 1)))?;
        docs.push((rec.id, rec.text));
    }
    if docs.is_empty() {
        return Err(CliError::usage(anyhow::anyhow!("{} holds no documents", path.display())));
    }
    Ok(docs)
}

pub fn run(ctx: &Context, args: Args) -> Result<ExitCode, CliError> {
    let cfg = &ctx.config;
    cfg.validate_for_generate().map_err(CliError::usage)?;
    let docs = load_documents(&args)?;
    let mut dirs = BTreeMap::new();
    for (id, _) in &docs {
        if let Some(other) = dirs.insert(dir_name(id), id) {
            return Err(CliError::usage(anyhow::anyhow!("ids `{other}` and `{id}` map to the same output directory")));
        }
    }
    let gw = cfg.build_gateway().map_err(CliError::usage)?;
    ensure_dir(&args.out)?;
    let mut manifest = ManifestBuilder::start(args.out.join("manifest.json"), cfg, ctx.config_path.as_deref());
    for p in args.input.iter().chain(args.corpus.iter()) {
        manifest.input(p);
    }

    let results: Vec<_> = ctx.pool()?.install(|| {
        docs.par_iter()
            .map(|(id, text)| {
                let out = text_to_chart(id, text, cfg, &gw, document_seed(cfg.seed, id));
                (id, out)
            })
            .collect()
    });

    let mut ok = 0usize;
    for (id, result) in results {
        match result {
            Ok(outputs) => {
                let dir = args.out.join(dir_name(id));
                ensure_dir(&dir)?;
                let files: [(&str, String); 4] = [
                    ("doc.json", pretty_json(&infochart::metadata::to_value(&outputs.doc))),
                    ("ir.json", pretty_json(&outputs.ir)),
                    ("out.svg", outputs.svg),
                    ("audit.json", pretty_json(&outputs.audit)),
                ];
                for (name, body) in files {
                    let path: PathBuf = dir.join(name);
                    write_file(&path, body)?;
                    manifest.output(&path);
                }
                ok += 1;
            }
            Err(e) => {
                log::error!("document {id}: {e}");
                manifest.failure(id.clone(), e);
            }
        }
    }
    manifest.gateway(gw.counters());
    let failed = manifest.failures();
    manifest.summary(serde_json::json!({ "documents": docs.len(), "succeeded": ok, "failed": failed }));
    let path = manifest.finish()?;
    eprintln!("{ok}/{} documents rendered; manifest at {}", docs.len(), Path::new(&path).display());
    Ok(exit_for(failed))
}

#[cfg(test)]
mod tests {
    use super::dir_name;

    #[test]
    fn directory_names_are_safe() {
        assert_eq!(dir_name("doc-1"), "doc-1");
        assert_eq!(dir_name("a/b c"), "a_b_c");
        assert_eq!(dir_name(".."), "_..");
        assert_eq!(dir_name(""), "_");
    }
}
