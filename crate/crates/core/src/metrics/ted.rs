//! Unit-cost ordered tree edit distance over element tag trees (Zhang–Shasha).

use std::collections::HashMap;
use std::fmt;

use crate::dom::{DomTree, Element};

/// An ordered tree with string labels.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct LabeledTree {
    pub label: String,
    pub children: Vec<LabeledTree>,
}

impl LabeledTree {
    pub fn leaf(label: impl Into<String>) -> Self {
        LabeledTree {
            label: label.into(),
            children: Vec::new(),
        }
    }

    pub fn node(label: impl Into<String>, children: Vec<LabeledTree>) -> Self {
        LabeledTree {
            label: label.into(),
            children,
        }
    }

    /// Tag tree of an element; text and comments are dropped.
    pub fn from_element(el: &Element) -> Self {
        LabeledTree {
            label: el.tag.clone(),
            children: el
                .element_children()
                .map(LabeledTree::from_element)
                .collect(),
        }
    }

    pub fn size(&self) -> usize {
        1 + self.children.iter().map(LabeledTree::size).sum::<usize>()
    }
}

/// Bracket notation, e.g. `a(b,c(a))`.
impl fmt::Display for LabeledTree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label)?;
        if !self.children.is_empty() {
            f.write_str("(")?;
            for (i, c) in self.children.iter().enumerate() {
                if i > 0 {
                    f.write_str(",")?;
                }
                write!(f, "{c}")?;
            }
            f.write_str(")")?;
        }
        Ok(())
    }
}

/// Postorder arrays, 1-based: `labels[i]`, `lmd[i]` = leftmost leaf descendant.
struct Indexed {
    labels: Vec<u32>,
    lmd: Vec<usize>,
    keyroots: Vec<usize>,
}

fn index_tree<'a>(t: &'a LabeledTree, ids: &mut HashMap<&'a str, u32>) -> Indexed {
    fn walk<'a>(
        t: &'a LabeledTree,
        ids: &mut HashMap<&'a str, u32>,
        labels: &mut Vec<u32>,
        lmd: &mut Vec<usize>,
    ) -> usize {
        let mut first_leaf = None;
        for c in &t.children {
            let leaf = walk(c, ids, labels, lmd);
            first_leaf.get_or_insert(leaf);
        }
        let next = ids.len() as u32;
        labels.push(*ids.entry(t.label.as_str()).or_insert(next));
        let me = labels.len() - 1;
        let leaf = first_leaf.unwrap_or(me);
        lmd.push(leaf);
        leaf
    }
    let mut labels = vec![0];
    let mut lmd = vec![0];
    walk(t, ids, &mut labels, &mut lmd);
    let n = labels.len() - 1;
    let mut seen = vec![false; n + 2];
    let mut keyroots = Vec::new();
    for i in (1..=n).rev() {
        if !seen[lmd[i]] {
            seen[lmd[i]] = true;
            keyroots.push(i);
        }
    }
    keyroots.reverse();
    Indexed {
        labels,
        lmd,
        keyroots,
    }
}

/// Minimum number of node insertions, deletions and relabelings.
pub fn labeled_tree_distance(a: &LabeledTree, b: &LabeledTree) -> usize {
    let mut ids = HashMap::new();
    let ta = index_tree(a, &mut ids);
    let tb = index_tree(b, &mut ids);
    zhang_shasha(&ta, &tb)
}

fn zhang_shasha(a: &Indexed, b: &Indexed) -> usize {
    let n = a.labels.len() - 1;
    let m = b.labels.len() - 1;
    let w = m + 1;
    // row-major (n+1) x (m+1) tables
    let mut td = vec![0usize; (n + 1) * w];
    let mut fd = vec![0usize; (n + 1) * w];
    for &i in &a.keyroots {
        for &j in &b.keyroots {
            let (li, lj) = (a.lmd[i], b.lmd[j]);
            fd[(li - 1) * w + lj - 1] = 0;
            for di in li..=i {
                fd[di * w + lj - 1] = fd[(di - 1) * w + lj - 1] + 1;
            }
            for dj in lj..=j {
                fd[(li - 1) * w + dj] = fd[(li - 1) * w + dj - 1] + 1;
            }
            for di in li..=i {
                let lmd_i = a.lmd[di];
                for dj in lj..=j {
                    let del = fd[(di - 1) * w + dj] + 1;
                    let ins = fd[di * w + dj - 1] + 1;
                    let lmd_j = b.lmd[dj];
                    let best = if lmd_i == li && lmd_j == lj {
                        let rel =
                            fd[(di - 1) * w + dj - 1] + usize::from(a.labels[di] != b.labels[dj]);
                        let v = del.min(ins).min(rel);
                        td[di * w + dj] = v;
                        v
                    } else {
                        del.min(ins)
                            .min(fd[(lmd_i - 1) * w + lmd_j - 1] + td[di * w + dj])
                    };
                    fd[di * w + dj] = best;
                }
            }
        }
    }
    td[n * w + m]
}

/// Tag-tree edit distance between two documents, rooted at their `html` elements.
pub fn tree_edit_distance(a: &DomTree, b: &DomTree) -> usize {
    labeled_tree_distance(
        &LabeledTree::from_element(&a.root),
        &LabeledTree::from_element(&b.root),
    )
}
