//! Run configuration from a `key = value` file plus command-line overrides.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use wcagfix::color::ThresholdProfile;
use wcagfix::fix::{CommandCaptioner, FixConfig, TitleStrategy};
use wcagfix::guidance::GuidanceConfig;
use wcagfix::metrics::ssim::{DEFAULT_HEIGHT, DEFAULT_WIDTH};
use wcagfix::rules::RuleConfig;

use crate::CliError;

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub profile: ThresholdProfile,
    pub text_block_words: usize,
    pub default_lang: String,
    pub contrast_target: Option<f64>,
    pub max_iterations: usize,
    pub title_strategy: TitleStrategy,
    pub gamma: f64,
    pub max_tokens: usize,
    pub output_dir: PathBuf,
    pub renderer: Option<String>,
    pub captioner: Option<String>,
    pub embedder: Option<String>,
    pub resize: Option<(u32, u32)>,
    pub alpha: f64,
    pub yates: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        let guidance = GuidanceConfig::default();
        let fix = FixConfig::default();
        RunConfig {
            profile: ThresholdProfile::default(),
            text_block_words: RuleConfig::default().text_block_words,
            default_lang: fix.default_lang,
            contrast_target: None,
            max_iterations: fix.max_iterations,
            title_strategy: fix.title_strategy,
            gamma: guidance.gamma,
            max_tokens: guidance.max_tokens,
            output_dir: PathBuf::from("out"),
            renderer: None,
            captioner: None,
            embedder: None,
            resize: Some((DEFAULT_WIDTH, DEFAULT_HEIGHT)),
            alpha: 0.05,
            yates: false,
        }
    }
}

fn parse_resize(v: &str) -> Result<Option<(u32, u32)>, String> {
    if v.eq_ignore_ascii_case("none") {
        return Ok(None);
    }
    let (w, h) = v.split_once(['x', 'X']).ok_or("expected WxH or none")?;
    let w = w.trim().parse().map_err(|_| "bad width")?;
    let h = h.trim().parse().map_err(|_| "bad height")?;
    Ok(Some((w, h)))
}

fn opt_command(v: &str) -> Option<String> {
    let v = v.trim();
    (!v.is_empty()).then(|| v.to_string())
}

impl RunConfig {
    /// Applies `key = value` lines; `#` starts a comment, unknown keys are errors.
    pub fn apply_text(&mut self, text: &str, source: &Path) -> Result<(), CliError> {
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or_default().trim();
            if line.is_empty() {
                continue;
            }
            let bad = |m: String| CliError::Config(format!("{}:{}: {m}", source.display(), i + 1));
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| bad("expected key = value".into()))?;
            self.set(key.trim(), value.trim()).map_err(bad)?;
        }
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Io(path.to_path_buf(), e.to_string()))?;
        let mut cfg = RunConfig::default();
        cfg.apply_text(&text, path)?;
        Ok(cfg)
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<(), String> {
        let num = |v: &str| {
            v.parse::<f64>()
                .map_err(|_| format!("{key}: bad number {v:?}"))
        };
        let int = |v: &str| {
            v.parse::<usize>()
                .map_err(|_| format!("{key}: bad integer {v:?}"))
        };
        match key {
            "threshold_profile" => self.profile = value.parse()?,
            "text_block_words" => self.text_block_words = int(value)?,
            "default_lang" => self.default_lang = value.to_string(),
            "contrast_target" => {
                self.contrast_target = if value.eq_ignore_ascii_case("auto") {
                    None
                } else {
                    Some(num(value)?)
                }
            }
            "max_iterations" => {
                self.max_iterations = int(value)?;
                if self.max_iterations == 0 {
                    return Err("max_iterations must be >= 1".into());
                }
            }
            "title_strategy" => {
                self.title_strategy = match value {
                    "first_heading" => TitleStrategy::FirstHeading,
                    "doc_id" => TitleStrategy::DocId,
                    other => return Err(format!("unknown title_strategy {other:?}")),
                }
            }
            "gamma" => self.gamma = num(value)?,
            "max_tokens" => self.max_tokens = int(value)?,
            "output_dir" => self.output_dir = PathBuf::from(value),
            "renderer" => self.renderer = opt_command(value),
            "captioner" => self.captioner = opt_command(value),
            "embedder" => self.embedder = opt_command(value),
            "resize" => self.resize = parse_resize(value)?,
            "alpha" => self.alpha = num(value)?,
            "yates" => {
                self.yates = value
                    .parse()
                    .map_err(|_| format!("yates: expected true or false, got {value:?}"))?
            }
            other => return Err(format!("unknown key {other:?}")),
        }
        Ok(())
    }

    pub fn rule_config(&self) -> RuleConfig {
        RuleConfig {
            text_block_words: self.text_block_words,
            ..RuleConfig::with_profile(self.profile)
        }
    }

    pub fn fix_config(&self, asset_root: Option<PathBuf>) -> FixConfig {
        FixConfig {
            rules: self.rule_config(),
            default_lang: self.default_lang.clone(),
            contrast_target: self.contrast_target,
            max_iterations: self.max_iterations,
            caption_provider: self
                .captioner
                .as_deref()
                .and_then(CommandCaptioner::from_command_line)
                .map(|c| Arc::new(c) as Arc<_>),
            asset_root,
            title_strategy: self.title_strategy,
        }
    }

    pub fn guidance_config(&self) -> GuidanceConfig {
        GuidanceConfig {
            gamma: self.gamma,
            max_tokens: self.max_tokens,
            ..GuidanceConfig::default()
        }
    }
}
