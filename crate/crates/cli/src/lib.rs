//! Batch commands behind the `wcagfix` binary.
//!
//! Every command writes into a fixed layout under the output directory
//! (`reports/`, `fixed/`, `metrics/`, `history/`) and returns an exit code:
//! 0 for success, 1 when violations or unfixable residue remain, 2 on errors.

pub mod config;

use std::collections::{BTreeSet, HashSet};
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use wcagfix::color::ThresholdProfile;
use wcagfix::corpus::{verify_assets, CorpusManifest};
use wcagfix::dom::DomTree;
use wcagfix::fix::{fix_to_fixed_point, FixRound};
use wcagfix::guidance::{assemble_prompt, decode, extract_html_segment, Condition, ToyModel};
use wcagfix::metrics::{
    alt_image_pairs, evaluate, CommandEmbedder, EmbeddingProvider, EvalDocument, RasterImage,
};
use wcagfix::rules::{check_document, ViolationReport};
use wcagfix::stats::{summarize_study, VoteCounts};

pub use config::RunConfig;

pub const EXIT_OK: i32 = 0;
pub const EXIT_RESIDUAL: i32 = 1;
pub const EXIT_ERROR: i32 = 2;

pub const HISTORY_SCHEMA_VERSION: u32 = 1;
pub const VTT_PLACEHOLDER: &str = "WEBVTT\n";

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}: {1}")]
    Io(PathBuf, String),
    #[error("config: {0}")]
    Config(String),
    #[error("{0}: {1}")]
    Input(PathBuf, String),
    #[error("{0}")]
    Alignment(String),
    #[error("{0}")]
    Decode(String),
}

/// Exit code plus the text to print on stdout.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CommandResult {
    pub code: i32,
    pub stdout: String,
}

#[derive(Debug, Parser)]
#[command(
    name = "wcagfix",
    version,
    about = "Check, repair and evaluate WCAG2 violations in HTML"
)]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalOpts,
    #[command(subcommand)]
    pub command: Cmd,
}

#[derive(Debug, Args, Default)]
pub struct GlobalOpts {
    /// Root of reports/, fixed/, metrics/ and history/
    #[arg(long, global = true)]
    pub output_dir: Option<PathBuf>,
    /// key = value configuration file
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Guidance scale for decode-demo
    #[arg(long, global = true)]
    pub gamma: Option<f64>,
    /// Contrast thresholds: AA or paper3to1
    #[arg(long, global = true)]
    pub threshold_profile: Option<ThresholdProfile>,
    #[arg(long, global = true, value_parser = clap::value_parser!(u64).range(1..))]
    pub max_iterations: Option<u64>,
}

#[derive(Debug, Subcommand)]
pub enum Cmd {
    /// Report violations for each HTML file
    Check {
        #[arg(required = true)]
        inputs: Vec<PathBuf>,
    },
    /// Repair HTML files to a fixed point; originals are never modified
    Fix {
        #[arg(required = true)]
        inputs: Vec<PathBuf>,
    },
    /// Compute corpus metrics for outputs aligned with a manifest
    Eval {
        manifest: PathBuf,
        /// Directory holding <doc_id>.html outputs and optional <doc_id>.png renderings
        outputs: PathBuf,
    },
    /// Chi-squared summary of a `label count` vote table
    Stats { votes: PathBuf },
    /// Prompt, guided decode and HTML extraction with a toy model
    DecodeDemo {
        /// Transition table; the bundled demo model when omitted
        #[arg(long)]
        model: Option<PathBuf>,
        /// HTML placed into the prompt
        input: Option<PathBuf>,
    },
    /// List missing assets referenced by a manifest
    Verify { manifest: PathBuf },
}

impl Cli {
    pub fn run_config(&self) -> Result<RunConfig, CliError> {
        let mut cfg = match &self.global.config {
            Some(p) => RunConfig::load(p)?,
            None => RunConfig::default(),
        };
        if let Some(d) = &self.global.output_dir {
            cfg.output_dir = d.clone();
        }
        if let Some(g) = self.global.gamma {
            cfg.gamma = g;
        }
        if let Some(p) = self.global.threshold_profile {
            cfg.profile = p;
        }
        if let Some(m) = self.global.max_iterations {
            cfg.max_iterations = m as usize;
        }
        Ok(cfg)
    }
}

/// Parses arguments and runs; errors become exit code 2 with the message on stderr.
pub fn run(cli: &Cli) -> (CommandResult, Option<String>) {
    let outcome = cli.run_config().and_then(|cfg| match &cli.command {
        Cmd::Check { inputs } => cmd_check(inputs, &cfg),
        Cmd::Fix { inputs } => cmd_fix(inputs, &cfg),
        Cmd::Eval { manifest, outputs } => cmd_eval(manifest, outputs, &cfg),
        Cmd::Stats { votes } => cmd_stats(votes, &cfg),
        Cmd::DecodeDemo { model, input } => {
            cmd_decode_demo(model.as_deref(), input.as_deref(), &cfg)
        }
        Cmd::Verify { manifest } => cmd_verify(manifest, &cfg),
    });
    match outcome {
        Ok(r) => (r, None),
        Err(e) => (
            CommandResult {
                code: EXIT_ERROR,
                stdout: String::new(),
            },
            Some(format!("error: {e}")),
        ),
    }
}

fn io_err(path: &Path, e: impl std::fmt::Display) -> CliError {
    CliError::Io(path.to_path_buf(), e.to_string())
}

fn ensure_dir(path: &Path) -> Result<PathBuf, CliError> {
    fs::create_dir_all(path).map_err(|e| io_err(path, e))?;
    Ok(path.to_path_buf())
}

fn write_file(path: &Path, contents: &str) -> Result<(), CliError> {
    fs::write(path, contents).map_err(|e| io_err(path, e))
}

fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("serializable");
    s.push('\n');
    s
}

pub fn doc_id_for(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "document".to_string())
}

fn load_inputs(inputs: &[PathBuf]) -> Result<Vec<(String, PathBuf, DomTree)>, CliError> {
    let mut seen = HashSet::new();
    let mut docs = Vec::new();
    for path in inputs {
        let bytes = fs::read(path).map_err(|e| io_err(path, e))?;
        let tree =
            DomTree::parse(&bytes).map_err(|e| CliError::Input(path.clone(), e.to_string()))?;
        let id = doc_id_for(path);
        if !seen.insert(id.clone()) {
            return Err(CliError::Input(
                path.clone(),
                format!("duplicate document id {id:?}"),
            ));
        }
        docs.push((id, path.clone(), tree));
    }
    Ok(docs)
}

/// Writes `reports/<doc>.txt` and `reports/<doc>.json`; exit 0 iff no input has violations.
pub fn cmd_check(inputs: &[PathBuf], cfg: &RunConfig) -> Result<CommandResult, CliError> {
    let docs = load_inputs(inputs)?;
    let dir = ensure_dir(&cfg.output_dir.join("reports"))?;
    let rules = cfg.rule_config();
    let reports: Vec<ViolationReport> = docs
        .par_iter()
        .map(|(id, _, tree)| check_document(id, tree, &rules))
        .collect();
    let mut stdout = String::new();
    for r in &reports {
        write_file(&dir.join(format!("{}.txt", r.doc_id)), &r.to_text())?;
        write_file(&dir.join(format!("{}.json", r.doc_id)), &r.to_json())?;
        let _ = writeln!(stdout, "{}: {} violation(s)", r.doc_id, r.total);
    }
    let code = if reports.iter().all(|r| r.total == 0) {
        EXIT_OK
    } else {
        EXIT_RESIDUAL
    };
    Ok(CommandResult { code, stdout })
}

#[derive(Debug, Serialize)]
struct History<'a> {
    schema_version: u32,
    doc_id: &'a str,
    rounds: &'a [FixRound],
    final_total: usize,
}

fn same_file(a: &Path, b: &Path) -> bool {
    match (fs::canonicalize(a), fs::canonicalize(b)) {
        (Ok(x), Ok(y)) => x == y,
        _ => false,
    }
}

/// Writes `fixed/<doc>.html`, caption stubs next to it, and `history/<doc>.json`.
pub fn cmd_fix(inputs: &[PathBuf], cfg: &RunConfig) -> Result<CommandResult, CliError> {
    let docs = load_inputs(inputs)?;
    let fixed_dir = ensure_dir(&cfg.output_dir.join("fixed"))?;
    let history_dir = ensure_dir(&cfg.output_dir.join("history"))?;
    for (id, path, _) in &docs {
        if same_file(path, &fixed_dir.join(format!("{id}.html"))) {
            return Err(CliError::Input(
                path.clone(),
                "output would overwrite the input".into(),
            ));
        }
    }
    let outcomes: Vec<_> = docs
        .par_iter()
        .map(|(id, path, tree)| {
            let root = path.parent().map(Path::to_path_buf);
            (id, fix_to_fixed_point(tree, id, &cfg.fix_config(root)))
        })
        .collect();
    let mut stdout = String::new();
    let mut residual = false;
    for (id, out) in &outcomes {
        write_file(&fixed_dir.join(format!("{id}.html")), &out.tree.serialize())?;
        for sidecar in out.sidecars() {
            let p = fixed_dir.join(sidecar);
            if !p.exists() {
                write_file(&p, VTT_PLACEHOLDER)?;
            }
        }
        let history = History {
            schema_version: HISTORY_SCHEMA_VERSION,
            doc_id: id,
            rounds: &out.history,
            final_total: out.final_report.total,
        };
        write_file(&history_dir.join(format!("{id}.json")), &to_json(&history))?;
        let before = out.history.first().map_or(0, |r| r.report.total);
        let applied = out.actions().count();
        let _ = writeln!(
            stdout,
            "{id}: {before} -> {} violation(s), {applied} fix(es) in {} round(s)",
            out.final_report.total,
            out.history.len()
        );
        residual |= out.final_report.total > 0;
    }
    Ok(CommandResult {
        code: if residual { EXIT_RESIDUAL } else { EXIT_OK },
        stdout,
    })
}

fn render(command: &str, html: &Path, png: &Path) -> Result<(), CliError> {
    let mut parts = command.split_whitespace();
    let program = parts
        .next()
        .ok_or_else(|| CliError::Config("empty renderer command".into()))?;
    let status = Command::new(program)
        .args(parts)
        .arg(html)
        .arg(png)
        .status()
        .map_err(|e| CliError::Config(format!("renderer {program}: {e}")))?;
    if !status.success() {
        return Err(CliError::Input(
            html.to_path_buf(),
            format!("renderer exited with {status}"),
        ));
    }
    Ok(())
}

fn read_tree(path: &Path) -> Result<DomTree, CliError> {
    let bytes = fs::read(path).map_err(|e| io_err(path, e))?;
    DomTree::parse(&bytes).map_err(|e| CliError::Input(path.to_path_buf(), e.to_string()))
}

fn load_image(path: &Path, cfg: &RunConfig) -> Result<RasterImage, CliError> {
    RasterImage::load(path, cfg.resize)
        .map_err(|e| CliError::Input(path.to_path_buf(), e.to_string()))
}

/// Writes `metrics/metrics.json` and `metrics/metrics.txt`.
///
/// Entries with missing assets are excluded. Tree edit distance compares each
/// output with its raw input; SSIM compares the output rendering with the
/// ground-truth rendering, or with the input rendering when there is none.
pub fn cmd_eval(
    manifest_path: &Path,
    outputs: &Path,
    cfg: &RunConfig,
) -> Result<CommandResult, CliError> {
    let manifest = CorpusManifest::load(manifest_path)
        .map_err(|e| CliError::Input(manifest_path.into(), e.to_string()))?;
    let assets = verify_assets(&manifest);
    let excluded = assets.excluded_ids();
    let entries: Vec<_> = manifest
        .entries
        .iter()
        .filter(|e| !excluded.contains(e.doc_id.as_str()))
        .collect();
    if entries.is_empty() {
        return Err(CliError::Alignment("no usable manifest entries".into()));
    }

    let expected: BTreeSet<String> = manifest.entries.iter().map(|e| e.doc_id.clone()).collect();
    let found: BTreeSet<String> = fs::read_dir(outputs)
        .map_err(|e| io_err(outputs, e))?
        .filter_map(Result::ok)
        .map(|d| d.path())
        .filter(|p| p.extension().is_some_and(|x| x == "html"))
        .map(|p| doc_id_for(&p))
        .collect();
    let missing: Vec<_> = entries
        .iter()
        .filter(|e| !found.contains(&e.doc_id))
        .map(|e| e.doc_id.as_str())
        .collect();
    let extra: Vec<_> = found.difference(&expected).map(String::as_str).collect();
    if !missing.is_empty() || !extra.is_empty() {
        return Err(CliError::Alignment(format!(
            "outputs do not line up with the manifest (missing: [{}], unexpected: [{}])",
            missing.join(", "),
            extra.join(", ")
        )));
    }

    let metrics_dir = ensure_dir(&cfg.output_dir.join("metrics"))?;
    let mut docs = Vec::with_capacity(entries.len());
    for e in &entries {
        let input_path = manifest.resolve(&e.html_path);
        let output_path = outputs.join(format!("{}.html", e.doc_id));
        let output = read_tree(&output_path)?;
        let reference_shot = e
            .ground_truth_screenshot_path
            .as_deref()
            .or(e.screenshot_path.as_deref())
            .map(|p| manifest.resolve(p));
        let mut output_shot =
            Some(outputs.join(format!("{}.png", e.doc_id))).filter(|p| p.exists());
        if output_shot.is_none() && reference_shot.is_some() {
            if let Some(cmd) = &cfg.renderer {
                let png =
                    ensure_dir(&metrics_dir.join("render"))?.join(format!("{}.png", e.doc_id));
                render(cmd, &output_path, &png)?;
                output_shot = Some(png);
            }
        }
        let (reference_image, output_image) = match (reference_shot, output_shot) {
            (Some(r), Some(o)) => (Some(load_image(&r, cfg)?), Some(load_image(&o, cfg)?)),
            _ => (None, None),
        };
        let asset_base = input_path
            .parent()
            .map(Path::to_path_buf)
            .unwrap_or_default();
        docs.push(EvalDocument {
            doc_id: e.doc_id.clone(),
            alt_images: alt_image_pairs(&output, &asset_base),
            input: read_tree(&input_path)?,
            output,
            reference_image,
            output_image,
        });
    }

    let embedder = cfg
        .embedder
        .as_deref()
        .and_then(CommandEmbedder::from_command_line);
    let provider = embedder.as_ref().map(|e| e as &dyn EmbeddingProvider);
    let mut record = evaluate(&docs, &cfg.rule_config(), provider)
        .map_err(|e| CliError::Alignment(e.to_string()))?;
    for m in &assets.entries {
        record.skipped.push(format!(
            "excluded {}: missing {}",
            m.doc_id,
            m.missing.join(", ")
        ));
    }
    let table = record.to_table();
    write_file(&metrics_dir.join("metrics.json"), &record.to_json())?;
    write_file(&metrics_dir.join("metrics.txt"), &table)?;
    let mut stdout = table;
    for s in &record.skipped {
        let _ = writeln!(stdout, "skipped: {s}");
    }
    Ok(CommandResult {
        code: EXIT_OK,
        stdout,
    })
}

/// Prints the global test, Cramér's V, the adjusted threshold and pairwise tests.
pub fn cmd_stats(votes_path: &Path, cfg: &RunConfig) -> Result<CommandResult, CliError> {
    let text = fs::read_to_string(votes_path).map_err(|e| io_err(votes_path, e))?;
    let votes =
        VoteCounts::parse(&text).map_err(|e| CliError::Input(votes_path.into(), e.to_string()))?;
    let summary = summarize_study(&votes, cfg.alpha, cfg.yates)
        .map_err(|e| CliError::Input(votes_path.into(), e.to_string()))?;
    let dir = ensure_dir(&cfg.output_dir.join("metrics"))?;
    write_file(&dir.join("stats.json"), &to_json(&summary))?;
    Ok(CommandResult {
        code: EXIT_OK,
        stdout: summary.to_text(),
    })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DemoOutput {
    pub prompt: String,
    pub raw: String,
    pub extracted: Option<String>,
}

/// Assembles the prompt, decodes with both conditions and extracts the HTML segment.
pub fn decode_demo(
    model: &ToyModel,
    input_html: &str,
    cfg: &RunConfig,
) -> Result<DemoOutput, CliError> {
    let prompt = assemble_prompt(input_html, Condition::ZeroViolations);
    let tokens = decode(model, &[model.bos()], &cfg.guidance_config())
        .map_err(|e| CliError::Decode(e.to_string()))?;
    let raw = model.detokenize(&tokens);
    let extracted = extract_html_segment(&raw).ok().map(str::to_string);
    Ok(DemoOutput {
        prompt,
        raw,
        extracted,
    })
}

pub fn cmd_decode_demo(
    model_path: Option<&Path>,
    input: Option<&Path>,
    cfg: &RunConfig,
) -> Result<CommandResult, CliError> {
    let model = match model_path {
        Some(p) => {
            let text = fs::read_to_string(p).map_err(|e| io_err(p, e))?;
            ToyModel::parse(&text).map_err(|e| CliError::Input(p.into(), e.to_string()))?
        }
        None => ToyModel::demo(),
    };
    let html = match input {
        Some(p) => fs::read_to_string(p).map_err(|e| io_err(p, e))?,
        None => String::new(),
    };
    let out = decode_demo(&model, &html, cfg)?;
    let mut stdout = String::new();
    let _ = writeln!(stdout, "gamma: {}", cfg.gamma);
    let _ = writeln!(stdout, "raw: {}", out.raw);
    match &out.extracted {
        Some(h) => {
            let _ = writeln!(stdout, "html: {h}");
            if let Ok(tree) = DomTree::parse_str(h) {
                let _ = writeln!(
                    stdout,
                    "violations: {}",
                    check_document("decoded", &tree, &cfg.rule_config()).total
                );
            }
            Ok(CommandResult {
                code: EXIT_OK,
                stdout,
            })
        }
        None => Err(CliError::Decode(format!(
            "no <html>...</html> segment found in decoded output {:?}",
            out.raw
        ))),
    }
}

/// Writes `reports/assets.json`; exit 1 when any entry has missing assets.
pub fn cmd_verify(manifest_path: &Path, cfg: &RunConfig) -> Result<CommandResult, CliError> {
    let manifest = CorpusManifest::load(manifest_path)
        .map_err(|e| CliError::Input(manifest_path.into(), e.to_string()))?;
    let report = verify_assets(&manifest);
    let dir = ensure_dir(&cfg.output_dir.join("reports"))?;
    write_file(&dir.join("assets.json"), &to_json(&report))?;
    let mut stdout = format!(
        "{} entries checked, {} with missing assets\n",
        report.checked,
        report.entries.len()
    );
    for e in &report.entries {
        let _ = writeln!(stdout, "{}: missing {}", e.doc_id, e.missing.join(", "));
    }
    Ok(CommandResult {
        code: if report.is_clean() {
            EXIT_OK
        } else {
            EXIT_RESIDUAL
        },
        stdout,
    })
}
