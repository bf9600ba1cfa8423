use std::path::PathBuf;
use std::process::ExitCode;

use infochart::chart::{compile_metadata, layout_and_render};
use infochart::metadata::{parse_metadata, validate};

use crate::manifest::ManifestBuilder;
use crate::run::{ensure_dir, pretty_json, read_text, sibling, write_file, CliError, Context};

#[derive(clap::Args, Debug)]
pub struct Args {
    /// Metadata JSON document.
    #[arg(long)]
    metadata: PathBuf,
    /// SVG path to write.
    #[arg(long)]
    out: PathBuf,
}

/// Compiles metadata straight to SVG, without model calls. Invalid
/// metadata prints its validation report and exits 2.
pub fn run(ctx: &Context, args: Args) -> Result<ExitCode, CliError> {
    let doc = parse_metadata(&read_text(&args.metadata)?)
        .map_err(|e| CliError::usage(anyhow::anyhow!("{}: {e}", args.metadata.display())))?;
    let report = validate(&doc);
    if !report.is_valid {
        eprint!("{}", pretty_json(&report));
        return Err(CliError::usage(anyhow::anyhow!("{} failed validation", args.metadata.display())));
    }
    let ir = compile_metadata(&doc).map_err(CliError::usage)?;
    let (_, svg) = layout_and_render(&ir).map_err(CliError::usage)?;
    if let Some(dir) = args.out.parent().filter(|d| !d.as_os_str().is_empty()) {
        ensure_dir(dir)?;
    }
    let mut manifest = ManifestBuilder::start(sibling(&args.out, "manifest.json"), &ctx.config, ctx.config_path.as_deref());
    manifest.input(&args.metadata);
    write_file(&args.out, svg)?;
    manifest.output(&args.out);
    manifest.summary(serde_json::json!({ "panels": ir.panels.len(), "warnings": report.warnings.len() }));
    manifest.finish()?;
    Ok(ExitCode::SUCCESS)
}
