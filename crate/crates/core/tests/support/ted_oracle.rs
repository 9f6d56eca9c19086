//! Brute-force tree edit distance: minimum-cost edit mapping by exhaustive search.
//!
//! A mapping pairs nodes of the two trees one-to-one while preserving both
//! ancestry and preorder (equivalently, left-to-right) order. Its cost is one
//! per relabeled pair plus one per unmapped node on either side.

#![allow(dead_code)]

use wcagfix::metrics::LabeledTree;

pub struct Flat {
    pub labels: Vec<String>,
    /// Bit j of `anc[i]`: node i is a proper ancestor of node j (preorder indices).
    pub anc: Vec<u64>,
}

pub fn flatten(t: &LabeledTree) -> Flat {
    fn walk(t: &LabeledTree, stack: &mut Vec<usize>, labels: &mut Vec<String>, anc: &mut Vec<u64>) {
        let me = labels.len();
        assert!(me < 64, "oracle handles at most 64 nodes");
        labels.push(t.label.clone());
        anc.push(0);
        for &s in stack.iter() {
            anc[s] |= 1 << me;
        }
        stack.push(me);
        for c in &t.children {
            walk(c, stack, labels, anc);
        }
        stack.pop();
    }
    let mut labels = Vec::new();
    let mut anc = Vec::new();
    walk(t, &mut Vec::new(), &mut labels, &mut anc);
    Flat { labels, anc }
}

fn is_anc(f: &Flat, i: usize, j: usize) -> bool {
    f.anc[i] >> j & 1 == 1
}

struct Search<'a> {
    a: &'a Flat,
    b: &'a Flat,
    pairs: Vec<(usize, usize)>,
    best: usize,
}

impl Search<'_> {
    // i: next node of a; j: first still-unused node of b; cost: cost so far
    fn go(&mut self, i: usize, j: usize, cost: usize) {
        let (n1, n2) = (self.a.labels.len(), self.b.labels.len());
        let bound = cost + (n1 - i).abs_diff(n2 - j);
        if bound >= self.best {
            return;
        }
        if i == n1 {
            self.best = cost + (n2 - j);
            return;
        }
        for jj in j..n2 {
            let ok = self
                .pairs
                .iter()
                .all(|&(pi, pj)| is_anc(self.a, pi, i) == is_anc(self.b, pj, jj));
            if ok {
                self.pairs.push((i, jj));
                let relabel = usize::from(self.a.labels[i] != self.b.labels[jj]);
                self.go(i + 1, jj + 1, cost + relabel + (jj - j));
                self.pairs.pop();
            }
        }
        // leave node i unmapped
        self.go(i + 1, j, cost + 1);
    }
}

pub fn brute_force_distance(a: &LabeledTree, b: &LabeledTree) -> usize {
    flat_distance(&flatten(a), &flatten(b))
}

pub fn flat_distance(fa: &Flat, fb: &Flat) -> usize {
    let mut s = Search {
        a: fa,
        b: fb,
        pairs: Vec::with_capacity(fa.labels.len()),
        best: fa.labels.len() + fb.labels.len() + 1,
    };
    s.go(0, 0, 0);
    s.best
}

/// Every ordered tree shape with exactly `n` nodes.
fn shapes(n: usize) -> Vec<LabeledTree> {
    fn forests(m: usize) -> Vec<Vec<LabeledTree>> {
        if m == 0 {
            return vec![Vec::new()];
        }
        let mut out = Vec::new();
        for k in 1..=m {
            for first in shapes(k) {
                for rest in forests(m - k) {
                    let mut f = vec![first.clone()];
                    f.extend(rest);
                    out.push(f);
                }
            }
        }
        out
    }
    forests(n - 1)
        .into_iter()
        .map(|children| LabeledTree::node("", children))
        .collect()
}

fn relabel(t: &LabeledTree, labels: &mut impl Iterator<Item = String>) -> LabeledTree {
    let label = labels.next().expect("enough labels");
    LabeledTree::node(
        label,
        t.children.iter().map(|c| relabel(c, labels)).collect(),
    )
}

/// All ordered trees with exactly `n` nodes over `alphabet`.
pub fn labeled_trees(n: usize, alphabet: &[&str]) -> Vec<LabeledTree> {
    let k = alphabet.len();
    let mut out = Vec::new();
    for shape in shapes(n) {
        for mut code in 0..k.pow(n as u32) {
            let mut digits = Vec::with_capacity(n);
            for _ in 0..n {
                digits.push(alphabet[code % k].to_string());
                code /= k;
            }
            out.push(relabel(&shape, &mut digits.into_iter()));
        }
    }
    out
}

/// All ordered trees with 1..=max nodes.
pub fn labeled_trees_upto(max: usize, alphabet: &[&str]) -> Vec<LabeledTree> {
    (1..=max).flat_map(|n| labeled_trees(n, alphabet)).collect()
}
