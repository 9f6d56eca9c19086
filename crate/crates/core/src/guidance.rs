//! Violation-conditioned negative-guidance decoding over a pluggable model.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;
use std::sync::OnceLock;

use regex::Regex;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const DEFAULT_GAMMA: f64 = 1.1;
pub const DEFAULT_MAX_TOKENS: usize = 2048;

/// The demo bigram table shipped with the crate.
pub const DEMO_MODEL: &str = include_str!("../data/demo_model.txt");

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GuidanceError {
    #[error("logit vectors differ in length ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("logit at index {0} is not finite")]
    NonFinite(usize),
    #[error("prompt is empty")]
    EmptyPrompt,
    #[error("invalid guidance config: {0}")]
    InvalidConfig(String),
    #[error("no <html>...</html> segment found")]
    NoHtmlFound,
    #[error("transition table has no entries for prefix {prefix:?} under condition {condition}")]
    IncompleteTable {
        prefix: String,
        condition: Condition,
    },
    #[error("model table line {line}: {message}")]
    ModelParse { line: usize, message: String },
    #[error("unknown token {0:?}")]
    UnknownToken(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Condition {
    ZeroViolations,
    NonZeroViolations,
}

impl Condition {
    pub const BOTH: [Condition; 2] = [Condition::ZeroViolations, Condition::NonZeroViolations];

    pub fn prompt_text(self) -> &'static str {
        match self {
            Condition::ZeroViolations => "The expected output HTML has zero violations",
            Condition::NonZeroViolations => "The expected output HTML has non-zero violations",
        }
    }

    fn slot(self) -> &'static str {
        match self {
            Condition::ZeroViolations => "zero",
            Condition::NonZeroViolations => "non-zero",
        }
    }
}

impl fmt::Display for Condition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Condition::ZeroViolations => "zero",
            Condition::NonZeroViolations => "nonzero",
        })
    }
}

impl FromStr for Condition {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "zero" | "0" | "c=0" => Ok(Condition::ZeroViolations),
            "nonzero" | "non-zero" | ">0" | "c>0" => Ok(Condition::NonZeroViolations),
            other => Err(format!("unknown condition {other:?}")),
        }
    }
}

/// Training and inference prompt for one input document.
pub fn assemble_prompt(input_html: &str, condition: Condition) -> String {
    format!(
        "Modify the following HTML code to comply with WCAG 2.2 accessibility\n\
         guidelines. Ensure the output is a properly formatted HTML file without \n\
         additional explanations or descriptions. Return only the modified HTML \n\
         code without extra text or commentary.\n\
         \n\
         The expected output HTML has {} violations.\n\
         \n\
         Input HTML:\n\
         {}",
        condition.slot(),
        input_html
    )
}

/// Vocabulary-indexed scores.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogitVector {
    pub scores: Vec<f64>,
}

impl LogitVector {
    pub fn new(scores: Vec<f64>) -> Result<Self, GuidanceError> {
        if let Some(i) = scores.iter().position(|s| !s.is_finite()) {
            return Err(GuidanceError::NonFinite(i));
        }
        Ok(LogitVector { scores })
    }

    pub fn len(&self) -> usize {
        self.scores.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scores.is_empty()
    }

    /// Index of the largest score; the lowest index wins ties.
    pub fn argmax(&self) -> Option<usize> {
        let mut best: Option<usize> = None;
        for (i, s) in self.scores.iter().enumerate() {
            if best.is_none_or(|b| *s > self.scores[b]) {
                best = Some(i);
            }
        }
        best
    }
}

/// Negative-guided logits `neg + gamma * (pos - neg)`.
///
/// `pos` is conditioned on zero violations and `neg` on non-zero violations.
/// Evaluated as `(1 - gamma) * neg + gamma * pos` so that gamma 1 and 0 return
/// `pos` and `neg` bit for bit.
pub fn guided_logits(
    pos: &LogitVector,
    neg: &LogitVector,
    gamma: f64,
) -> Result<LogitVector, GuidanceError> {
    if pos.len() != neg.len() {
        return Err(GuidanceError::LengthMismatch(pos.len(), neg.len()));
    }
    let scores = pos
        .scores
        .iter()
        .zip(&neg.scores)
        .map(|(p, n)| (1.0 - gamma) * n + gamma * p)
        .collect();
    Ok(LogitVector { scores })
}

/// Softmax with max subtraction.
pub fn guided_distribution(l: &LogitVector) -> Vec<f64> {
    let max = l.scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = l.scores.iter().map(|s| (s - max).exp()).collect();
    let z: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / z).collect()
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Sampling {
    #[default]
    Top1,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GuidanceConfig {
    pub gamma: f64,
    pub max_tokens: usize,
    pub sampling: Sampling,
}

impl Default for GuidanceConfig {
    fn default() -> Self {
        GuidanceConfig {
            gamma: DEFAULT_GAMMA,
            max_tokens: DEFAULT_MAX_TOKENS,
            sampling: Sampling::Top1,
        }
    }
}

impl GuidanceConfig {
    pub fn with_gamma(gamma: f64) -> Self {
        GuidanceConfig {
            gamma,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<(), GuidanceError> {
        if !(self.gamma.is_finite() && self.gamma >= 0.0) {
            return Err(GuidanceError::InvalidConfig(format!(
                "gamma {} must be >= 0",
                self.gamma
            )));
        }
        if self.max_tokens == 0 {
            return Err(GuidanceError::InvalidConfig(
                "max_tokens must be >= 1".into(),
            ));
        }
        Ok(())
    }
}

pub type TokenId = usize;

/// A deterministic next-token scorer conditioned on the violation flag.
pub trait ConditionalModel: Send + Sync {
    fn vocabulary(&self) -> &[String];
    fn eos(&self) -> TokenId;
    fn next_logits(&self, prefix: &[TokenId], condition: Condition) -> LogitVector;
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecodeStep {
    pub pos: LogitVector,
    pub neg: LogitVector,
    pub guided: LogitVector,
    pub token: TokenId,
}

/// Greedy guided decoding that also keeps every step's logits.
pub fn decode_trace(
    model: &dyn ConditionalModel,
    prompt: &[TokenId],
    cfg: &GuidanceConfig,
) -> Result<Vec<DecodeStep>, GuidanceError> {
    cfg.validate()?;
    if prompt.is_empty() {
        return Err(GuidanceError::EmptyPrompt);
    }
    let mut seq = prompt.to_vec();
    let mut steps = Vec::new();
    while steps.len() < cfg.max_tokens {
        let pos = model.next_logits(&seq, Condition::ZeroViolations);
        let neg = model.next_logits(&seq, Condition::NonZeroViolations);
        let guided = guided_logits(&pos, &neg, cfg.gamma)?;
        let token = guided.argmax().ok_or(GuidanceError::LengthMismatch(0, 0))?;
        steps.push(DecodeStep {
            pos,
            neg,
            guided,
            token,
        });
        if token == model.eos() {
            break;
        }
        seq.push(token);
    }
    Ok(steps)
}

/// Generated tokens after the prompt, without the end-of-sequence token.
pub fn decode(
    model: &dyn ConditionalModel,
    prompt: &[TokenId],
    cfg: &GuidanceConfig,
) -> Result<Vec<TokenId>, GuidanceError> {
    let eos = model.eos();
    Ok(decode_trace(model, prompt, cfg)?
        .into_iter()
        .map(|s| s.token)
        .filter(|t| *t != eos)
        .collect())
}

/// Greedy decoding under one condition only, one forward pass per step.
pub fn decode_single(
    model: &dyn ConditionalModel,
    prompt: &[TokenId],
    condition: Condition,
    max_tokens: usize,
) -> Result<Vec<TokenId>, GuidanceError> {
    if prompt.is_empty() {
        return Err(GuidanceError::EmptyPrompt);
    }
    let mut seq = prompt.to_vec();
    let mut out = Vec::new();
    while out.len() < max_tokens {
        let token = model
            .next_logits(&seq, condition)
            .argmax()
            .ok_or(GuidanceError::LengthMismatch(0, 0))?;
        if token == model.eos() {
            break;
        }
        seq.push(token);
        out.push(token);
    }
    Ok(out)
}

fn html_regex() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"(?is)<html\b[^>]*>.*?</html\s*>").expect("valid regex"))
}

/// First `<html ...>...</html>` span, tags included.
pub fn extract_html_segment(text: &str) -> Result<&str, GuidanceError> {
    html_regex()
        .find(text)
        .map(|m| m.as_str())
        .ok_or(GuidanceError::NoHtmlFound)
}

pub const BOS: &str = "<s>";
pub const EOS: &str = "</s>";
/// Score for transitions the table does not list.
pub const MISSING_LOGIT: f64 = -1e9;

/// Bigram conditional model: the next-token scores depend on the last token and the condition.
#[derive(Debug, Clone, PartialEq)]
pub struct ToyModel {
    vocab: Vec<String>,
    index: HashMap<String, TokenId>,
    table: HashMap<(TokenId, Condition), Vec<f64>>,
}

impl ToyModel {
    /// Builds a model from `(prefix, condition, next, logit)` rows.
    ///
    /// Every non-EOS token must have at least one row under each condition.
    pub fn from_entries<S: AsRef<str>>(
        entries: &[(S, Condition, S, f64)],
    ) -> Result<Self, GuidanceError> {
        let mut vocab = vec![BOS.to_string(), EOS.to_string()];
        let mut index: HashMap<String, TokenId> = vocab
            .iter()
            .enumerate()
            .map(|(i, t)| (t.clone(), i))
            .collect();
        let mut intern = |t: &str| -> TokenId {
            if let Some(&i) = index.get(t) {
                return i;
            }
            vocab.push(t.to_string());
            index.insert(t.to_string(), vocab.len() - 1);
            vocab.len() - 1
        };
        let rows: Vec<(TokenId, Condition, TokenId, f64)> = entries
            .iter()
            .map(|(p, c, n, l)| (intern(p.as_ref()), *c, intern(n.as_ref()), *l))
            .collect();
        let size = vocab.len();
        let mut table: HashMap<(TokenId, Condition), Vec<f64>> = HashMap::new();
        for (p, c, n, l) in rows {
            if !l.is_finite() {
                return Err(GuidanceError::NonFinite(n));
            }
            table
                .entry((p, c))
                .or_insert_with(|| vec![MISSING_LOGIT; size])[n] = l;
        }
        let eos = 1;
        for (t, name) in vocab.iter().enumerate() {
            if t == eos {
                continue;
            }
            for c in Condition::BOTH {
                if !table.contains_key(&(t, c)) {
                    return Err(GuidanceError::IncompleteTable {
                        prefix: name.clone(),
                        condition: c,
                    });
                }
            }
        }
        Ok(ToyModel {
            vocab,
            index,
            table,
        })
    }

    /// Parses `prefix_token condition next_token logit` lines; `#` starts a comment.
    pub fn parse(text: &str) -> Result<Self, GuidanceError> {
        let mut entries = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let err = |message: String| GuidanceError::ModelParse {
                line: i + 1,
                message,
            };
            let cols: Vec<&str> = line.split_whitespace().collect();
            if cols.len() != 4 {
                return Err(err(format!("expected 4 columns, found {}", cols.len())));
            }
            let cond: Condition = cols[1].parse().map_err(err)?;
            let logit: f64 = cols[3]
                .parse()
                .map_err(|_| err(format!("bad logit {:?}", cols[3])))?;
            entries.push((cols[0].to_string(), cond, cols[2].to_string(), logit));
        }
        Self::from_entries(&entries)
    }

    pub fn demo() -> Self {
        Self::parse(DEMO_MODEL).expect("bundled demo model is valid")
    }

    pub fn bos(&self) -> TokenId {
        0
    }

    pub fn token_id(&self, token: &str) -> Result<TokenId, GuidanceError> {
        self.index
            .get(token)
            .copied()
            .ok_or_else(|| GuidanceError::UnknownToken(token.to_string()))
    }

    /// Tokens joined by single spaces.
    pub fn detokenize(&self, tokens: &[TokenId]) -> String {
        tokens
            .iter()
            .map(|t| self.vocab[*t].as_str())
            .collect::<Vec<_>>()
            .join(" ")
    }
}

impl ConditionalModel for ToyModel {
    fn vocabulary(&self) -> &[String] {
        &self.vocab
    }

    fn eos(&self) -> TokenId {
        1
    }

    fn next_logits(&self, prefix: &[TokenId], condition: Condition) -> LogitVector {
        let last = prefix.last().copied().unwrap_or(0);
        let scores = self
            .table
            .get(&(last, condition))
            .cloned()
            .unwrap_or_else(|| vec![MISSING_LOGIT; self.vocab.len()]);
        LogitVector { scores }
    }
}
