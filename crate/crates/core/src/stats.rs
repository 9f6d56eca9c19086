//! Chi-squared tests for preference studies.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StatsError {
    #[error("counts are empty or sum to zero")]
    EmptyCounts,
    #[error("need at least two categories, found {0}")]
    TooFewCategories(usize),
    #[error("vote table line {line}: {message}")]
    Parse { line: usize, message: String },
}

const LANCZOS: [f64; 9] = [
    0.999_999_999_999_809_9,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_1,
    -176.615_029_162_140_6,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_572e-6,
    1.505_632_735_149_311_6e-7,
];

/// Natural log of the gamma function for `x > 0` (Lanczos, g = 7).
pub fn ln_gamma(x: f64) -> f64 {
    if x < 0.5 {
        let pi = std::f64::consts::PI;
        return (pi / (pi * x).sin()).ln() - ln_gamma(1.0 - x);
    }
    let x = x - 1.0;
    let t = x + 7.5;
    let mut a = LANCZOS[0];
    for (i, c) in LANCZOS.iter().enumerate().skip(1) {
        a += c / (x + i as f64);
    }
    0.5 * (2.0 * std::f64::consts::PI).ln() + (x + 0.5) * t.ln() - t + a.ln()
}

const EPS: f64 = 1e-16;
const MAX_ITER: usize = 10_000;

/// Regularized lower incomplete gamma `P(a, x)` by its power series.
fn gamma_p_series(a: f64, x: f64) -> f64 {
    let mut sum = 1.0 / a;
    let mut term = sum;
    let mut ap = a;
    for _ in 0..MAX_ITER {
        ap += 1.0;
        term *= x / ap;
        sum += term;
        if term.abs() < sum.abs() * EPS {
            break;
        }
    }
    sum * (-x + a * x.ln() - ln_gamma(a)).exp()
}

/// Regularized upper incomplete gamma `Q(a, x)` by a continued fraction (modified Lentz).
fn gamma_q_cf(a: f64, x: f64) -> f64 {
    let tiny = 1e-300;
    let mut b = x + 1.0 - a;
    let mut c = 1.0 / tiny;
    let mut d = 1.0 / b;
    let mut h = d;
    for i in 1..MAX_ITER {
        let an = -(i as f64) * (i as f64 - a);
        b += 2.0;
        d = an * d + b;
        if d.abs() < tiny {
            d = tiny;
        }
        c = b + an / c;
        if c.abs() < tiny {
            c = tiny;
        }
        d = 1.0 / d;
        let delta = d * c;
        h *= delta;
        if (delta - 1.0).abs() < EPS {
            break;
        }
    }
    (-x + a * x.ln() - ln_gamma(a)).exp() * h
}

/// Regularized upper incomplete gamma `Q(a, x) = 1 - P(a, x)`.
pub fn gamma_q(a: f64, x: f64) -> f64 {
    if x <= 0.0 {
        return 1.0;
    }
    if x < a + 1.0 {
        1.0 - gamma_p_series(a, x)
    } else {
        gamma_q_cf(a, x)
    }
}

/// Upper-tail probability of the chi-squared distribution.
pub fn chi2_sf(x: f64, dof: usize) -> f64 {
    gamma_q(dof as f64 / 2.0, x / 2.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GoodnessOfFit {
    pub chi2: f64,
    pub dof: usize,
    pub p_value: f64,
    pub n: u64,
}

/// Pearson statistic against equal proportions.
pub fn chi2_goodness(counts: &[u64]) -> Result<GoodnessOfFit, StatsError> {
    if counts.len() < 2 {
        return Err(StatsError::TooFewCategories(counts.len()));
    }
    let n: u64 = counts.iter().sum();
    if n == 0 {
        return Err(StatsError::EmptyCounts);
    }
    let expected = n as f64 / counts.len() as f64;
    let chi2: f64 = counts
        .iter()
        .map(|c| (*c as f64 - expected).powi(2) / expected)
        .sum();
    let dof = counts.len() - 1;
    Ok(GoodnessOfFit {
        chi2,
        dof,
        p_value: chi2_sf(chi2, dof),
        n,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PairwiseTest {
    pub chi2: f64,
    pub p_two_sided: f64,
    /// p for the alternative that the first count's share is larger.
    pub p_one_tailed: f64,
    pub n: u64,
}

/// Two-cell equal-proportion test of `n_i` against `n_j`.
pub fn chi2_pairwise(n_i: u64, n_j: u64, yates: bool) -> Result<PairwiseTest, StatsError> {
    let n = n_i + n_j;
    if n == 0 {
        return Err(StatsError::EmptyCounts);
    }
    let m = n as f64 / 2.0;
    let mut dev = (n_i as f64 - m).abs();
    if yates {
        dev = (dev - 0.5).max(0.0);
    }
    let chi2 = 2.0 * dev * dev / m;
    let p = chi2_sf(chi2, 1);
    let p_one_tailed = if n_i > n_j { p / 2.0 } else { 1.0 - p / 2.0 };
    Ok(PairwiseTest {
        chi2,
        p_two_sided: p,
        p_one_tailed,
        n,
    })
}

pub fn cramers_v(chi2: f64, n: u64, k: usize) -> f64 {
    if n == 0 || k < 2 {
        return 0.0;
    }
    (chi2 / (n as f64 * (k - 1) as f64)).sqrt()
}

pub fn bonferroni(alpha: f64, m: usize) -> f64 {
    alpha / m.max(1) as f64
}

/// Named vote tallies in file order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VoteCounts {
    pub labels: Vec<String>,
    pub counts: Vec<u64>,
}

impl VoteCounts {
    pub fn n(&self) -> u64 {
        self.counts.iter().sum()
    }

    /// Parses `label count` lines; blank lines and `#` comments are skipped.
    pub fn parse(text: &str) -> Result<Self, StatsError> {
        let mut labels = Vec::new();
        let mut counts = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let err = |message: String| StatsError::Parse {
                line: i + 1,
                message,
            };
            let mut cols = line
                .split(|c: char| c.is_whitespace() || c == ',' || c == '\t')
                .filter(|s| !s.is_empty());
            let (Some(label), Some(count), None) = (cols.next(), cols.next(), cols.next()) else {
                return Err(err("expected `label count`".into()));
            };
            counts.push(
                count
                    .parse()
                    .map_err(|_| err(format!("bad count {count:?}")))?,
            );
            labels.push(label.to_string());
        }
        Ok(VoteCounts { labels, counts })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairSummary {
    pub first: String,
    pub second: String,
    pub test: PairwiseTest,
    pub significant: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudySummary {
    pub global: GoodnessOfFit,
    pub cramers_v: f64,
    pub alpha: f64,
    pub alpha_adjusted: f64,
    pub pairwise: Vec<PairSummary>,
}

/// Global test, then one-tailed tests for every pair in file order with Bonferroni control.
pub fn summarize_study(
    votes: &VoteCounts,
    alpha: f64,
    yates: bool,
) -> Result<StudySummary, StatsError> {
    let global = chi2_goodness(&votes.counts)?;
    let k = votes.counts.len();
    let m = k * (k - 1) / 2;
    let alpha_adjusted = bonferroni(alpha, m);
    let mut pairwise = Vec::new();
    for i in 0..k {
        for j in i + 1..k {
            let test = chi2_pairwise(votes.counts[i], votes.counts[j], yates)?;
            pairwise.push(PairSummary {
                first: votes.labels[i].clone(),
                second: votes.labels[j].clone(),
                significant: test.p_one_tailed < alpha_adjusted,
                test,
            });
        }
    }
    Ok(StudySummary {
        cramers_v: cramers_v(global.chi2, global.n, k),
        global,
        alpha,
        alpha_adjusted,
        pairwise,
    })
}

impl StudySummary {
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let g = &self.global;
        let _ = writeln!(
            out,
            "chi2_global({}, N={}) = {:.2}, p = {:.3e}",
            g.dof, g.n, g.chi2, g.p_value
        );
        let _ = writeln!(out, "Cramer's V = {:.4}", self.cramers_v);
        let _ = writeln!(
            out,
            "alpha_adj = {} / {} = {:.4}",
            self.alpha,
            self.pairwise.len(),
            self.alpha_adjusted
        );
        for p in &self.pairwise {
            let _ = writeln!(
                out,
                "chi2_{}>{}(1, N={}) = {:.2}, p_one_tailed = {:.3e}{}",
                p.first,
                p.second,
                p.test.n,
                p.test.chi2,
                p.test.p_one_tailed,
                if p.significant { " *" } else { "" }
            );
        }
        out
    }
}
