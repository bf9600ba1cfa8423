use std::path::PathBuf;
use std::process::ExitCode;

use clap::ValueEnum;
use infochart::eval::{
    evaluate_corpus, format_table, join_by_id, rating_sheet, read_docs_jsonl, read_pairs_jsonl, EvalError, RougeVariant,
    StatMatching, SummaryAggregation,
};

use crate::manifest::ManifestBuilder;
use crate::run::{ensure_dir, pretty_json, read_text, write_file, CliError, Context};

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Rouge {
    Recall,
    F1,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum SubchartSummary {
    Max,
    BestMatchMean,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Matching {
    SortedMerge,
    Positional,
}

#[derive(clap::Args, Debug)]
#[command(group(clap::ArgGroup::new("source").required(true).args(["pred", "pairs"])))]
pub struct Args {
    /// Predictions, JSONL of `{"id", "metadata"}`.
    #[arg(long, requires = "gold")]
    pred: Option<PathBuf>,
    /// Gold references, JSONL of `{"id", "metadata"}`.
    #[arg(long, requires = "pred")]
    gold: Option<PathBuf>,
    /// Joined pairs, JSONL of `{"id", "gold", "pred"}`.
    #[arg(long, conflicts_with_all = ["pred", "gold"])]
    pairs: Option<PathBuf>,
    /// Output directory for report.json, table.md and manifest.json.
    #[arg(long)]
    out: PathBuf,
    /// Row label in the results table.
    #[arg(long, default_value = "model")]
    label: String,
    #[arg(long, value_enum)]
    rouge: Option<Rouge>,
    #[arg(long, value_enum)]
    subchart_summary: Option<SubchartSummary>,
    #[arg(long, value_enum)]
    stat_matching: Option<Matching>,
    /// Also write rating_sheet.csv with one row per id and listed model.
    #[arg(long, value_delimiter = ',')]
    rating_models: Vec<String>,
}

pub fn run(ctx: &Context, args: Args) -> Result<ExitCode, CliError> {
    let mut opts = ctx.config.eval;
    if let Some(r) = args.rouge {
        opts.rouge = match r {
            Rouge::Recall => RougeVariant::Recall,
            Rouge::F1 => RougeVariant::F1,
        };
    }
    if let Some(s) = args.subchart_summary {
        opts.subchart_summary = match s {
            SubchartSummary::Max => SummaryAggregation::Max,
            SubchartSummary::BestMatchMean => SummaryAggregation::BestMatchMean,
        };
    }
    if let Some(m) = args.stat_matching {
        opts.stat_matching = match m {
            Matching::SortedMerge => StatMatching::SortedMerge,
            Matching::Positional => StatMatching::Positional,
        };
    }

    let mut manifest = ManifestBuilder::start(args.out.join("manifest.json"), &ctx.config, ctx.config_path.as_deref());
    let pairs = match (&args.pairs, &args.pred, &args.gold) {
        (Some(p), _, _) => {
            manifest.input(p);
            read_pairs_jsonl(&read_text(p)?).map_err(CliError::usage)?
        }
        (None, Some(pred), Some(gold)) => {
            manifest.input(pred);
            manifest.input(gold);
            let p = read_docs_jsonl(&read_text(pred)?).map_err(CliError::usage)?;
            let g = read_docs_jsonl(&read_text(gold)?).map_err(CliError::usage)?;
            join_by_id(p, g).map_err(|e| {
                if let EvalError::IdMismatch { only_pred, only_gold } = &e {
                    for id in only_pred {
                        eprintln!("only in predictions: {id}");
                    }
                    for id in only_gold {
                        eprintln!("only in gold: {id}");
                    }
                }
                CliError::usage(e)
            })?
        }
        _ => unreachable!("clap enforces a source"),
    };
    let report = evaluate_corpus(&pairs, &opts).map_err(CliError::usage)?;
    let table = format_table(&[(args.label.as_str(), &report)]);

    ensure_dir(&args.out)?;
    let mut files = vec![("report.json", pretty_json(&report)), ("table.md", table.clone())];
    if !args.rating_models.is_empty() {
        let ids: Vec<String> = pairs.iter().map(|p| p.id.clone()).collect();
        files.push(("rating_sheet.csv", rating_sheet(&ids, &args.rating_models)));
    }
    for (name, body) in files {
        let path = args.out.join(name);
        write_file(&path, body)?;
        manifest.output(&path);
    }
    manifest.summary(serde_json::json!({ "pairs": report.n_pairs, "flagged": report.flagged }));
    manifest.finish()?;
    print!("{table}");
    Ok(ExitCode::SUCCESS)
}
