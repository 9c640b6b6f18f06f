//! Tree decoding and probe evaluation metrics.

mod correlation;
mod enumerate;
mod mst;

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use correlation::{dspr, dspr_sentence, spearman_rank, DsprMode, DsprOptions, DsprScore};
pub use enumerate::{count_labeled_directed, count_trees, enumerate_trees, prufer_decode};
pub use mst::{mst_prim, Objective};

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum MetricError {
    #[error("predicted tree has {pred} nodes, gold has {gold}")]
    NodeCountMismatch { pred: usize, gold: usize },
    #[error("sequences differ in length ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("need at least 2 observations, got {0}")]
    TooShort(usize),
    #[error("tree enumeration supports 1 <= n <= 8, got {0}")]
    OutOfRange(usize),
    #[error("{0} edges cannot span {1} nodes")]
    NotSpanning(usize, usize),
    #[error("edge ({0}, {1}) is invalid for {2} nodes")]
    BadEdge(usize, usize, usize),
}

/// A spanning tree over nodes `1..=n`, edges stored as `(min, max)`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "TreeRepr", into = "TreeRepr")]
pub struct UndirectedTree {
    n: usize,
    edges: BTreeSet<(usize, usize)>,
}

#[derive(Serialize, Deserialize)]
struct TreeRepr {
    n: usize,
    edges: Vec<(usize, usize)>,
}

impl TryFrom<TreeRepr> for UndirectedTree {
    type Error = MetricError;
    fn try_from(repr: TreeRepr) -> Result<Self, Self::Error> {
        UndirectedTree::from_edges(repr.n, repr.edges)
    }
}

impl From<UndirectedTree> for TreeRepr {
    fn from(tree: UndirectedTree) -> Self {
        TreeRepr {
            n: tree.n,
            edges: tree.edges.into_iter().collect(),
        }
    }
}

impl UndirectedTree {
    /// Validates that the edges form a spanning tree over `1..=n`.
    pub fn from_edges<I>(n: usize, edges: I) -> Result<Self, MetricError>
    where
        I: IntoIterator<Item = (usize, usize)>,
    {
        let mut set = BTreeSet::new();
        for (a, b) in edges {
            if a == b || a == 0 || b == 0 || a > n || b > n {
                return Err(MetricError::BadEdge(a, b, n));
            }
            set.insert((a.min(b), a.max(b)));
        }
        if set.len() + 1 != n.max(1) {
            return Err(MetricError::NotSpanning(set.len(), n));
        }
        // n - 1 distinct edges span n nodes iff there is no cycle.
        let mut parent: Vec<usize> = (0..=n).collect();
        fn find(parent: &mut [usize], mut x: usize) -> usize {
            while parent[x] != x {
                parent[x] = parent[parent[x]];
                x = parent[x];
            }
            x
        }
        for &(a, b) in &set {
            let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
            if ra == rb {
                return Err(MetricError::NotSpanning(set.len(), n));
            }
            parent[ra] = rb;
        }
        Ok(UndirectedTree { n, edges: set })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn edges(&self) -> &BTreeSet<(usize, usize)> {
        &self.edges
    }

    pub fn contains(&self, a: usize, b: usize) -> bool {
        self.edges.contains(&(a.min(b), a.max(b)))
    }

    /// Sum of `weight(i, j)` over edges, with 1-based endpoints.
    pub fn weight<F: Fn(usize, usize) -> f64>(&self, weight: F) -> f64 {
        self.edges.iter().map(|&(a, b)| weight(a, b)).sum()
    }
}

/// Fraction of gold edges present in the predicted tree.
pub fn uuas(pred: &UndirectedTree, gold: &UndirectedTree) -> Result<f64, MetricError> {
    let mut acc = UuasAccumulator::default();
    acc.add(pred, gold, None)?;
    Ok(acc.micro())
}

/// Corpus-level UUAS. The micro average pools edges over sentences; the
/// macro average is the mean of per-sentence scores.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct UuasAccumulator {
    pub correct: usize,
    pub total: usize,
    pub sentences: usize,
    macro_sum: f64,
    macro_count: usize,
}

impl UuasAccumulator {
    /// Adds one sentence. With `keep`, edges touching a node `i` where
    /// `keep[i - 1]` is false are ignored on both sides.
    pub fn add(
        &mut self,
        pred: &UndirectedTree,
        gold: &UndirectedTree,
        keep: Option<&[bool]>,
    ) -> Result<(), MetricError> {
        if pred.n() != gold.n() {
            return Err(MetricError::NodeCountMismatch {
                pred: pred.n(),
                gold: gold.n(),
            });
        }
        let kept = |&&(a, b): &&(usize, usize)| keep.is_none_or(|k| k[a - 1] && k[b - 1]);
        let gold_edges: Vec<_> = gold.edges().iter().filter(kept).collect();
        let correct = gold_edges.iter().filter(|&&&(a, b)| pred.contains(a, b)).count();
        self.sentences += 1;
        self.correct += correct;
        self.total += gold_edges.len();
        if !gold_edges.is_empty() {
            self.macro_sum += correct as f64 / gold_edges.len() as f64;
            self.macro_count += 1;
        }
        Ok(())
    }

    /// Pooled score; 0 when no gold edges were seen.
    pub fn micro(&self) -> f64 {
        if self.total == 0 {
            0.0
        } else {
            self.correct as f64 / self.total as f64
        }
    }

    pub fn macro_average(&self) -> f64 {
        if self.macro_count == 0 {
            0.0
        } else {
            self.macro_sum / self.macro_count as f64
        }
    }
}
