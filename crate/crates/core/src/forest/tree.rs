//! CART classification trees on bootstrap-weighted samples.

use rand::Rng;

use crate::rng::DetRng;

/// Column-major view of one segment prepared for repeated tree fits:
/// raw values, dense per-feature ranks and binary labels.
pub(crate) struct FitData {
    pub(crate) m: usize,
    pub(crate) d: usize,
    pub(crate) values: Vec<Vec<f64>>,
    pub(crate) ranks: Vec<Vec<u32>>,
    pub(crate) distinct: Vec<Vec<f64>>,
    /// `true` for class 1 (observations up to the split).
    pub(crate) labels: Vec<bool>,
}

impl FitData {
    pub(crate) fn new(values: Vec<Vec<f64>>, labels: Vec<bool>) -> Self {
        let d = values.len();
        let m = labels.len();
        let mut ranks = Vec::with_capacity(d);
        let mut distinct = Vec::with_capacity(d);
        let mut order: Vec<u32> = Vec::with_capacity(m);
        for col in &values {
            order.clear();
            order.extend(0..m as u32);
            order.sort_unstable_by(|&a, &b| col[a as usize].total_cmp(&col[b as usize]));
            let mut rank = vec![0u32; m];
            let mut uniq: Vec<f64> = Vec::new();
            for &i in &order {
                let x = col[i as usize];
                if uniq.last() != Some(&x) {
                    uniq.push(x);
                }
                rank[i as usize] = (uniq.len() - 1) as u32;
            }
            ranks.push(rank);
            distinct.push(uniq);
        }
        Self {
            m,
            d,
            values,
            ranks,
            distinct,
            labels,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Node {
    Leaf {
        /// Weighted majority class, ties going to class 1.
        class1: bool,
        /// Bootstrap weight of class-1 and class-2 samples in the leaf.
        weight1: u32,
        weight2: u32,
        depth: u32,
    },
    Split {
        feature: u32,
        threshold: f64,
        left: u32,
        right: u32,
        depth: u32,
    },
}

#[derive(Clone, Debug)]
pub struct Tree {
    nodes: Vec<Node>,
}

pub(crate) struct TreeSettings {
    pub(crate) max_depth: Option<usize>,
    pub(crate) mtry: usize,
    pub(crate) min_leaf: usize,
}

impl Tree {
    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn depth(&self) -> usize {
        self.nodes
            .iter()
            .map(|n| match *n {
                Node::Leaf { depth, .. } | Node::Split { depth, .. } => depth as usize,
            })
            .max()
            .unwrap_or(0)
    }

    /// Class-1 decision for a feature vector.
    pub fn predict(&self, row: &[f64]) -> bool {
        matches!(self.leaf(|f| row[f]), Node::Leaf { class1: true, .. })
    }

    /// Bootstrap-weighted class-1 frequency of the leaf reached by `row`.
    pub fn predict_proba(&self, row: &[f64]) -> f64 {
        leaf_frequency(self.leaf(|f| row[f]))
    }

    /// `(vote, class-1 frequency)` for observation `i` of the fit data.
    pub(crate) fn predict_local(&self, data: &FitData, i: usize) -> (bool, f64) {
        let leaf = self.leaf(|f| data.values[f][i]);
        (
            matches!(leaf, Node::Leaf { class1: true, .. }),
            leaf_frequency(leaf),
        )
    }

    fn leaf(&self, value: impl Fn(usize) -> f64) -> Node {
        let mut k = 0usize;
        loop {
            match self.nodes[k] {
                leaf @ Node::Leaf { .. } => return leaf,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                    ..
                } => {
                    k = if value(feature as usize) <= threshold {
                        left as usize
                    } else {
                        right as usize
                    };
                }
            }
        }
    }

    /// Grows a tree on the samples with positive `weights` (bootstrap counts).
    pub(crate) fn grow(
        data: &FitData,
        weights: &[u32],
        settings: &TreeSettings,
        rng: &mut DetRng,
    ) -> Tree {
        let mut idx: Vec<u32> = (0..data.m as u32)
            .filter(|&i| weights[i as usize] > 0)
            .collect();
        let mut builder = Builder {
            data,
            weights,
            settings,
            nodes: Vec::new(),
            keys: Vec::with_capacity(idx.len()),
            scratch: Vec::with_capacity(idx.len()),
            features: (0..data.d as u32).collect(),
        };
        builder.nodes.push(placeholder());
        let len = idx.len();
        let mut stack = vec![(0usize, 0usize, len, 0u32)];
        while let Some((node, start, end, depth)) = stack.pop() {
            let built = builder.build_node(&mut idx[start..end], depth, rng);
            match built {
                Built::Leaf(leaf) => builder.nodes[node] = leaf,
                Built::Split {
                    feature,
                    threshold,
                    n_left,
                } => {
                    let left = builder.nodes.len();
                    builder.nodes.push(placeholder());
                    builder.nodes.push(placeholder());
                    builder.nodes[node] = Node::Split {
                        feature,
                        threshold,
                        left: left as u32,
                        right: left as u32 + 1,
                        depth,
                    };
                    // right first so the left subtree is grown first
                    stack.push((left + 1, start + n_left, end, depth + 1));
                    stack.push((left, start, start + n_left, depth + 1));
                }
            }
        }
        Tree {
            nodes: builder.nodes,
        }
    }
}

fn leaf_frequency(leaf: Node) -> f64 {
    match leaf {
        Node::Leaf {
            weight1, weight2, ..
        } => weight1 as f64 / (weight1 + weight2) as f64,
        Node::Split { .. } => unreachable!("descent ends at a leaf"),
    }
}

fn placeholder() -> Node {
    Node::Leaf {
        class1: true,
        weight1: 0,
        weight2: 0,
        depth: 0,
    }
}

enum Built {
    Leaf(Node),
    Split {
        feature: u32,
        threshold: f64,
        n_left: usize,
    },
}

struct Builder<'a> {
    data: &'a FitData,
    weights: &'a [u32],
    settings: &'a TreeSettings,
    nodes: Vec<Node>,
    keys: Vec<u64>,
    scratch: Vec<u32>,
    features: Vec<u32>,
}

struct Candidate {
    score: f64,
    feature: u32,
    rank: u32,
    threshold: f64,
}

impl Builder<'_> {
    fn build_node(&mut self, idx: &mut [u32], depth: u32, rng: &mut DetRng) -> Built {
        let (mut w1, mut w2) = (0u32, 0u32);
        for &i in idx.iter() {
            let w = self.weights[i as usize];
            if self.data.labels[i as usize] {
                w1 += w;
            } else {
                w2 += w;
            }
        }
        let leaf = Node::Leaf {
            class1: w1 >= w2,
            weight1: w1,
            weight2: w2,
            depth,
        };
        let total = (w1 + w2) as usize;
        let at_depth_limit = self
            .settings
            .max_depth
            .is_some_and(|md| depth as usize >= md);
        if w1 == 0 || w2 == 0 || at_depth_limit || total < 2 * self.settings.min_leaf {
            return Built::Leaf(leaf);
        }

        let Some(best) = self.best_split(idx, w1, w2, rng) else {
            return Built::Leaf(leaf);
        };

        // stable partition by rank
        let ranks = &self.data.ranks[best.feature as usize];
        self.scratch.clear();
        let mut n_left = 0;
        for k in 0..idx.len() {
            let i = idx[k];
            if ranks[i as usize] <= best.rank {
                idx[n_left] = i;
                n_left += 1;
            } else {
                self.scratch.push(i);
            }
        }
        idx[n_left..].copy_from_slice(&self.scratch);
        Built::Split {
            feature: best.feature,
            threshold: best.threshold,
            n_left,
        }
    }

    /// Best Gini split over randomly ordered features, stopping after `mtry`
    /// features that are non-constant in the node.
    fn best_split(&mut self, idx: &[u32], w1: u32, w2: u32, rng: &mut DetRng) -> Option<Candidate> {
        let d = self.data.d;
        let min_leaf = self.settings.min_leaf as f64;
        let (w1, w2) = (w1 as f64, w2 as f64);
        let mut best: Option<Candidate> = None;
        let mut visited = 0;
        for slot in 0..d {
            if visited == self.settings.mtry {
                break;
            }
            let pick = rng.random_range(slot..d);
            self.features.swap(slot, pick);
            let f = self.features[slot];
            let ranks = &self.data.ranks[f as usize];

            self.keys.clear();
            let (mut lo, mut hi) = (u32::MAX, 0u32);
            for &i in idx {
                let r = ranks[i as usize];
                lo = lo.min(r);
                hi = hi.max(r);
                self.keys.push(((r as u64) << 32) | i as u64);
            }
            if lo == hi {
                continue;
            }
            visited += 1;
            self.keys.sort_unstable();

            let (mut l1, mut l2) = (0f64, 0f64);
            for k in 0..self.keys.len() - 1 {
                let i = (self.keys[k] & 0xffff_ffff) as usize;
                let w = self.weights[i] as f64;
                if self.data.labels[i] {
                    l1 += w;
                } else {
                    l2 += w;
                }
                let r = (self.keys[k] >> 32) as u32;
                let r_next = (self.keys[k + 1] >> 32) as u32;
                if r == r_next {
                    continue;
                }
                let nl = l1 + l2;
                let (r1, r2) = (w1 - l1, w2 - l2);
                let nr = r1 + r2;
                if nl < min_leaf || nr < min_leaf {
                    continue;
                }
                // maximising this is minimising the weighted Gini impurity
                let score = (l1 * l1 + l2 * l2) / nl + (r1 * r1 + r2 * r2) / nr;
                if best.as_ref().is_none_or(|b| score > b.score) {
                    let (a, b) = (
                        self.data.distinct[f as usize][r as usize],
                        self.data.distinct[f as usize][r_next as usize],
                    );
                    let mid = 0.5 * (a + b);
                    best = Some(Candidate {
                        score,
                        feature: f,
                        rank: r,
                        // adjacent floats can round the midpoint up to b
                        threshold: if mid < b { mid } else { a },
                    });
                }
            }
        }
        best
    }
}
