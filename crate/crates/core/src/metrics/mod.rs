//! Evaluation metrics: violations, caption-image alignment, structural accuracy, tree edit distance.

pub mod ssim;
pub mod ted;

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::Command;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dom::DomTree;
use crate::rules::{check_document, RuleConfig};

pub use ssim::{ssim, structural_accuracy, RasterImage, SsimParams};
pub use ted::{labeled_tree_distance, tree_edit_distance, LabeledTree};

pub const METRICS_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MetricsError {
    #[error("images differ in size ({left:?} vs {right:?})")]
    DimensionMismatch {
        left: (usize, usize),
        right: (usize, usize),
    },
    #[error("image {width}x{height} is smaller than the {window}px window")]
    ImageTooSmall {
        width: usize,
        height: usize,
        window: usize,
    },
    #[error("raster data has {found} values, expected {expected}")]
    BadRaster { expected: usize, found: usize },
    #[error("no input pairs")]
    EmptyInput,
    #[error("embedding provider unavailable: {0}")]
    ProviderUnavailable(String),
    #[error("embedding dimensions differ ({0} vs {1})")]
    EmbeddingMismatch(usize, usize),
    #[error("baseline violation count is zero")]
    ZeroBaseline,
    #[error("outputs do not line up with the manifest: {0}")]
    AlignmentMismatch(String),
    #[error("image error: {0}")]
    Image(String),
}

pub trait EmbeddingProvider: Send + Sync {
    fn embed_text(&self, text: &str) -> Result<Vec<f64>, MetricsError>;
    fn embed_image(&self, image: &Path) -> Result<Vec<f64>, MetricsError>;
}

/// Runs `program [args..] text <alt>` or `program [args..] image <path>` and reads
/// whitespace-separated floats from stdout.
#[derive(Debug, Clone)]
pub struct CommandEmbedder {
    pub program: String,
    pub args: Vec<String>,
}

impl CommandEmbedder {
    pub fn from_command_line(line: &str) -> Option<Self> {
        let mut parts = line.split_whitespace().map(str::to_string);
        Some(CommandEmbedder {
            program: parts.next()?,
            args: parts.collect(),
        })
    }

    fn run(&self, kind: &str, arg: &str) -> Result<Vec<f64>, MetricsError> {
        let unavailable = |m: String| MetricsError::ProviderUnavailable(m);
        let out = Command::new(&self.program)
            .args(&self.args)
            .arg(kind)
            .arg(arg)
            .output()
            .map_err(|e| unavailable(format!("{}: {e}", self.program)))?;
        if !out.status.success() {
            return Err(unavailable(format!(
                "{} exited with {}",
                self.program, out.status
            )));
        }
        let text = String::from_utf8_lossy(&out.stdout);
        let v = text
            .split_whitespace()
            .map(|t| t.parse::<f64>())
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| unavailable(format!("bad embedding output: {e}")))?;
        if v.is_empty() {
            return Err(unavailable("empty embedding".into()));
        }
        Ok(v)
    }
}

impl EmbeddingProvider for CommandEmbedder {
    fn embed_text(&self, text: &str) -> Result<Vec<f64>, MetricsError> {
        self.run("text", text)
    }

    fn embed_image(&self, image: &Path) -> Result<Vec<f64>, MetricsError> {
        self.run("image", &image.to_string_lossy())
    }
}

/// Cosine similarity; zero vectors score 0.
pub fn cosine(a: &[f64], b: &[f64]) -> Result<f64, MetricsError> {
    if a.len() != b.len() {
        return Err(MetricsError::EmbeddingMismatch(a.len(), b.len()));
    }
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        return Ok(0.0);
    }
    Ok(dot / (na * nb))
}

/// Mean text/image cosine over `(alt, image)` pairs; blank alt text scores 0.
pub fn caption_image_score(
    pairs: &[(String, PathBuf)],
    provider: &dyn EmbeddingProvider,
) -> Result<f64, MetricsError> {
    if pairs.is_empty() {
        return Err(MetricsError::EmptyInput);
    }
    let mut total = 0.0;
    for (alt, img) in pairs {
        if alt.trim().is_empty() {
            continue;
        }
        total += cosine(&provider.embed_text(alt)?, &provider.embed_image(img)?)?;
    }
    Ok(total / pairs.len() as f64)
}

/// Percent reduction of the average violation count relative to the raw input.
pub fn violation_improvement(raw_avg: f64, fixed_avg: f64) -> Result<f64, MetricsError> {
    if raw_avg.is_nan() || raw_avg <= 0.0 {
        return Err(MetricsError::ZeroBaseline);
    }
    Ok(100.0 * (raw_avg - fixed_avg) / raw_avg)
}

/// `(alt, image path)` for every `img` with a `src` in the tree.
pub fn alt_image_pairs(tree: &DomTree, base: &Path) -> Vec<(String, PathBuf)> {
    tree.elements()
        .into_iter()
        .filter(|e| e.element.tag == "img")
        .filter_map(|e| {
            let src = e.element.nonempty_attr("src")?;
            let src = src.split(['?', '#']).next().unwrap_or_default();
            Some((
                e.element.attr("alt").unwrap_or_default().to_string(),
                base.join(src),
            ))
        })
        .collect()
}

/// One document's inputs to the evaluation.
#[derive(Debug, Clone)]
pub struct EvalDocument {
    pub doc_id: String,
    pub input: DomTree,
    pub output: DomTree,
    /// Ground-truth rendering, or the input rendering when no ground truth exists.
    pub reference_image: Option<RasterImage>,
    pub output_image: Option<RasterImage>,
    pub alt_images: Vec<(String, PathBuf)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DocMetrics {
    pub doc_id: String,
    pub raw_violations: usize,
    pub violations: usize,
    pub tree_edit_distance: usize,
    pub ssim: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsRecord {
    pub schema_version: u32,
    pub documents: usize,
    pub avg_violations: f64,
    pub raw_avg_violations: f64,
    pub improvement_percent: Option<f64>,
    pub caption_img_score: Option<f64>,
    pub structural_accuracy: Option<f64>,
    pub tree_edit_distance: f64,
    pub ssim_params: SsimParams,
    /// Metrics that could not be computed and why.
    pub skipped: Vec<String>,
    pub per_document: Vec<DocMetrics>,
}

impl MetricsRecord {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("record serializes");
        s.push('\n');
        s
    }

    /// Fixed-width summary in the column order of the benchmark table.
    pub fn to_table(&self) -> String {
        let opt = |v: Option<f64>, prec: usize| match v {
            Some(x) => format!("{x:.prec$}"),
            None => "n/a".to_string(),
        };
        let mut out = String::new();
        let _ = writeln!(
            out,
            "{:>6} {:>12} {:>12} {:>12} {:>13} {:>16}",
            "Docs", "# Violation", "Improv. (%)", "Caption-Img", "Struct. Acc.", "Tree Edit Dist."
        );
        let _ = writeln!(
            out,
            "{:>6} {:>12.3} {:>12} {:>12} {:>13} {:>16.3}",
            self.documents,
            self.avg_violations,
            opt(self.improvement_percent, 2),
            opt(self.caption_img_score, 4),
            opt(self.structural_accuracy, 3),
            self.tree_edit_distance
        );
        out
    }
}

/// Aggregates all metrics; means are taken per document in input order.
pub fn evaluate(
    docs: &[EvalDocument],
    rules: &RuleConfig,
    provider: Option<&dyn EmbeddingProvider>,
) -> Result<MetricsRecord, MetricsError> {
    if docs.is_empty() {
        return Err(MetricsError::EmptyInput);
    }
    let per_document = docs
        .par_iter()
        .map(|d| {
            let ssim = match (&d.reference_image, &d.output_image) {
                (Some(r), Some(o)) => Some(ssim(o, r)?),
                _ => None,
            };
            Ok(DocMetrics {
                doc_id: d.doc_id.clone(),
                raw_violations: check_document(&d.doc_id, &d.input, rules).total,
                violations: check_document(&d.doc_id, &d.output, rules).total,
                tree_edit_distance: tree_edit_distance(&d.input, &d.output),
                ssim,
            })
        })
        .collect::<Result<Vec<_>, MetricsError>>()?;
    let n = docs.len() as f64;
    let mean = |f: &dyn Fn(&DocMetrics) -> f64| per_document.iter().map(f).sum::<f64>() / n;
    let avg_violations = mean(&|m| m.violations as f64);
    let raw_avg_violations = mean(&|m| m.raw_violations as f64);
    let mut skipped = Vec::new();

    let scored: Vec<f64> = per_document.iter().filter_map(|m| m.ssim).collect();
    let structural_accuracy = if scored.is_empty() {
        skipped.push("structural_accuracy: no screenshot pairs".to_string());
        None
    } else {
        if scored.len() < docs.len() {
            skipped.push(format!(
                "structural_accuracy: {} of {} documents lack screenshots",
                docs.len() - scored.len(),
                docs.len()
            ));
        }
        Some(
            scored
                .iter()
                .filter(|s| **s > ssim::STRUCTURAL_THRESHOLD)
                .count() as f64
                / scored.len() as f64,
        )
    };

    let pairs: Vec<(String, PathBuf)> = docs
        .iter()
        .flat_map(|d| d.alt_images.iter().cloned())
        .collect();
    let caption_img_score = match provider {
        None => {
            skipped.push("caption_img_score: no embedding provider".to_string());
            None
        }
        Some(_) if pairs.is_empty() => {
            skipped.push("caption_img_score: no images".to_string());
            None
        }
        Some(p) => Some(caption_image_score(&pairs, p)?),
    };

    let improvement_percent = match violation_improvement(raw_avg_violations, avg_violations) {
        Ok(v) => Some(v),
        Err(_) => {
            skipped.push("improvement_percent: raw inputs have no violations".to_string());
            None
        }
    };

    Ok(MetricsRecord {
        schema_version: METRICS_SCHEMA_VERSION,
        documents: docs.len(),
        avg_violations,
        raw_avg_violations,
        improvement_percent,
        caption_img_score,
        structural_accuracy,
        tree_edit_distance: mean(&|m| m.tree_edit_distance as f64),
        ssim_params: SsimParams::default(),
        skipped,
        per_document,
    })
}
