use std::collections::BTreeMap;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Serialize;
use slice_client::{run_extraction, EndpointConfig, HttpBackend, RunOptions};
use slice_lineage::config::EvaluationConfig;
use slice_lineage::corpus::{
    build_prompt, detect_features, difficulty_level, gold_findings, load_gold, load_predictions, Corpus, GoldSet,
    PromptSpec,
};
use slice_lineage::lineage::DictSyntax;
use slice_lineage::report::{aligned_table, compare_reports, evaluate, tsv, CorpusReport, RunLabels};
use slice_lineage::Scorer;

use crate::exit::{self, config_error, io_error};
use crate::{DifficultyArgs, ExtractArgs, PromptArgs, ReportArgs, ScoreArgs, SyntaxFlags, ValidateArgs};

/// Inputs and provenance of one score run, kept apart from the report so
/// the report stays byte-identical across runs.
#[derive(Debug, Serialize)]
struct RunManifest {
    config: Option<PathBuf>,
    gold: PathBuf,
    predictions: Vec<PathBuf>,
    corpus: Option<PathBuf>,
    output_dir: PathBuf,
    emitted_at: String,
    tool_version: &'static str,
}

fn require_exists(path: &Path) -> Result<()> {
    if path.exists() {
        Ok(())
    } else {
        Err(io_error(format!("{} does not exist", path.display())))
    }
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).with_context(|| format!("writing {}", path.display()))
}

fn create_dir(path: &Path) -> Result<()> {
    fs::create_dir_all(path).with_context(|| format!("creating {}", path.display()))
}

fn set_jobs(jobs: Option<usize>) -> Result<()> {
    if let Some(n) = jobs {
        if n == 0 {
            return Err(config_error("--jobs must be at least 1"));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .context("starting worker pool")?;
    }
    Ok(())
}

fn apply_syntax(config: &mut EvaluationConfig, flags: &SyntaxFlags) {
    if flags.strict {
        config.dict_syntax = DictSyntax::Strict;
    } else if flags.lenient {
        config.dict_syntax = DictSyntax::Lenient;
    }
}

fn gold_path(gold: Option<PathBuf>, corpus: Option<&Corpus>) -> Result<PathBuf> {
    gold.or_else(|| corpus.and_then(|c| c.gold_path.clone()))
        .ok_or_else(|| config_error("no gold file: pass --gold or a corpus whose manifest names one"))
}

pub fn score(args: ScoreArgs) -> Result<u8> {
    for path in args
        .config
        .iter()
        .chain(&args.gold)
        .chain(&args.predictions)
        .chain(&args.corpus)
    {
        require_exists(path)?;
    }
    set_jobs(args.jobs)?;
    let mut config = match &args.config {
        Some(path) => EvaluationConfig::load(path)?,
        None => EvaluationConfig::default(),
    };
    apply_syntax(&mut config, &args.syntax);
    if let Some(strategy) = args.strategy {
        if strategy.response_mode() != config.mode {
            return Err(config_error(format!(
                "strategy {strategy} expects {} responses but the config mode is {}",
                strategy.response_mode(),
                config.mode
            )));
        }
    }
    let scorer = Scorer::new(config)?;
    let corpus = args.corpus.as_deref().map(Corpus::load).transpose()?;
    let gold_path = gold_path(args.gold, corpus.as_ref())?;
    let gold = load_gold(&gold_path)?;
    let mut predictions = Vec::new();
    for path in &args.predictions {
        predictions.extend(load_predictions(path)?);
    }
    let labels = corpus.as_ref().map(Corpus::difficulty_labels);
    let run = RunLabels {
        model: args.model,
        strategy: args.strategy.map(|s| s.as_str().to_owned()),
    };
    let evaluation = evaluate(&scorer, &gold, &predictions, labels.as_ref(), &run)?;

    create_dir(&args.out)?;
    for (name, contents) in evaluation.output_files() {
        write_file(&args.out.join(name), &contents)?;
    }
    let manifest = RunManifest {
        config: args.config,
        gold: gold_path,
        predictions: args.predictions,
        corpus: args.corpus,
        output_dir: args.out.clone(),
        emitted_at: chrono::Utc::now().to_rfc3339(),
        tool_version: env!("CARGO_PKG_VERSION"),
    };
    write_file(
        &args.out.join("manifest.json"),
        &(serde_json::to_string_pretty(&manifest)? + "\n"),
    )?;
    print!("{}", evaluation.report.summary_text());
    Ok(exit::OK)
}

fn file_label(path: &Path) -> String {
    let path = if path.file_name().is_some_and(|n| n == "report.json") {
        path.parent().unwrap_or(path)
    } else {
        path
    };
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| path.display().to_string())
}

fn safe_name(s: &str) -> String {
    s.chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || c == '-' || c == '.' {
                c
            } else {
                '_'
            }
        })
        .collect()
}

pub fn report(args: ReportArgs) -> Result<u8> {
    let mut reports = Vec::new();
    let mut names = Vec::new();
    for path in &args.reports {
        let file = if path.is_dir() {
            path.join("report.json")
        } else {
            path.clone()
        };
        let text = fs::read_to_string(&file).with_context(|| format!("reading {}", file.display()))?;
        reports.push(CorpusReport::from_json(&text).with_context(|| format!("parsing {}", file.display()))?);
        names.push(file_label(&file));
    }
    let comparison = compare_reports(&reports, &names)?;
    create_dir(&args.out)?;
    let table = aligned_table(&comparison.table_rows());
    write_file(&args.out.join("table.txt"), &table)?;
    write_file(&args.out.join("table.tsv"), &tsv(&comparison.table_rows()))?;
    write_file(&args.out.join("series.tsv"), &tsv(&comparison.table_series()))?;
    let series = comparison.strata_series();
    if !series.is_empty() {
        let dir = args.out.join("strata");
        create_dir(&dir)?;
        for ((model, strategy), rows) in series {
            let name = format!("{}__{}.tsv", safe_name(&model), safe_name(&strategy));
            write_file(&dir.join(name), &tsv(&rows))?;
        }
    }
    print!("{table}");
    Ok(exit::OK)
}

pub fn validate(args: ValidateArgs) -> Result<u8> {
    let mut findings: Vec<String> = gold_findings(&args.gold)?
        .into_iter()
        .map(|f| format!("{}:{f}", args.gold.display()))
        .collect();
    if let Some(dir) = &args.corpus {
        let corpus = Corpus::load(dir)?;
        if findings.is_empty() {
            let gold = load_gold(&args.gold)?;
            for id in gold.script_ids() {
                if corpus.script(id).is_none() {
                    findings.push(format!("{}: script `{id}` is not in the corpus", args.gold.display()));
                }
            }
        }
    }
    for f in &findings {
        println!("{f}");
    }
    println!("{} findings", findings.len());
    Ok(if findings.is_empty() { exit::OK } else { exit::FINDINGS })
}

pub fn prompt(args: PromptArgs) -> Result<u8> {
    let corpus = Corpus::load(&args.corpus)?;
    create_dir(&args.out)?;
    for script in &corpus.scripts {
        let spec = PromptSpec::from_pool(args.strategy, script, &corpus.examples)?;
        let path = args.out.join(format!("{}.txt", safe_name(&script.script_id)));
        write_file(&path, &build_prompt(&spec)?)?;
        println!("{}", path.display());
    }
    Ok(exit::OK)
}

pub fn difficulty(args: DifficultyArgs) -> Result<u8> {
    let corpus = Corpus::load(&args.corpus)?;
    let mut rows = vec![["script", "label", "declared", "detected features", "detected"]
        .map(str::to_owned)
        .to_vec()];
    let features = |f: &slice_lineage::corpus::Features| {
        format!(
            "sources={} chain={} agg={}",
            f.source_count, f.has_transformation_chain, f.has_aggregation
        )
    };
    for script in &corpus.scripts {
        let detected = detect_features(script);
        let label = corpus
            .difficulty_of(&script.script_id)
            .map(|d| d.to_string())
            .unwrap_or_else(|| "-".into());
        rows.push(vec![
            script.script_id.clone(),
            label,
            script
                .declared_features
                .as_ref()
                .map(features)
                .unwrap_or_else(|| "-".into()),
            features(&detected),
            difficulty_level(Some(&detected))?.to_string(),
        ]);
    }
    print!("{}", aligned_table(&rows));
    Ok(exit::OK)
}

pub fn extract(args: ExtractArgs) -> Result<u8> {
    let corpus = Corpus::load(&args.corpus)?;
    let gold_path = gold_path(args.gold, Some(&corpus))?;
    let gold: GoldSet = load_gold(&gold_path)?;
    let endpoint = EndpointConfig::load(&args.endpoint)?;
    let options = RunOptions {
        strategy: args.strategy,
        trial_id: args.trial_id,
        seed: args.seed,
        workers: args.jobs.unwrap_or(endpoint.workers),
        requests_per_second: endpoint.requests_per_second,
        retry: endpoint.retry.clone(),
    };
    let backend = HttpBackend::new(endpoint)?;
    if let Some(dir) = args.out.parent().filter(|d| !d.as_os_str().is_empty()) {
        create_dir(dir)?;
    }
    // written to a sibling and renamed so an aborted run leaves no partial file
    let partial = args.out.with_extension("partial");
    let file = fs::File::create(&partial).with_context(|| format!("creating {}", partial.display()))?;
    let mut sink = BufWriter::new(file);
    let summary = match run_extraction(&corpus, &gold, &backend, &options, &mut sink) {
        Ok(s) => s,
        Err(e) => {
            drop(sink);
            let _ = fs::remove_file(&partial);
            return Err(e.into());
        }
    };
    sink.flush()?;
    drop(sink);
    fs::rename(&partial, &args.out).with_context(|| format!("writing {}", args.out.display()))?;
    let counts: BTreeMap<&str, usize> = [("records", summary.records), ("failed", summary.failed)].into();
    println!("{}", serde_json::to_string(&counts)?);
    Ok(exit::OK)
}
