//! Step-by-step guided greedy decoding straight from a transition table.

#![allow(dead_code)]

use std::collections::HashMap;

pub struct Table {
    pub vocab: Vec<String>,
    /// (prefix token, zero-violation condition?, next token) -> logit
    pub logits: HashMap<(usize, bool, usize), f64>,
    pub eos: usize,
}

impl Table {
    fn logit(&self, prev: usize, zero: bool, next: usize) -> f64 {
        self.logits
            .get(&(prev, zero, next))
            .copied()
            .unwrap_or(-1e9)
    }

    /// Tokens emitted after `start`, EOS excluded.
    pub fn simulate(&self, start: usize, gamma: f64, cap: usize) -> Vec<usize> {
        let mut prev = start;
        let mut out = Vec::new();
        while out.len() < cap {
            let mut best = 0;
            let mut best_score = f64::NEG_INFINITY;
            for t in 0..self.vocab.len() {
                let pos = self.logit(prev, true, t);
                let neg = self.logit(prev, false, t);
                let score = neg + gamma * (pos - neg);
                if score > best_score {
                    best = t;
                    best_score = score;
                }
            }
            if best == self.eos {
                break;
            }
            out.push(best);
            prev = best;
        }
        out
    }
}
