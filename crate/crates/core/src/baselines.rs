//! Baselines that never look at the words: the Path chain and the
//! per-length Majority tree.

use std::collections::BTreeMap;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::metrics::{mst_prim, Objective, UndirectedTree};
use crate::treebank::Sentence;

/// Longest sentence length that gets its own Majority tree.
pub const MAJORITY_MAX_LEN: usize = 40;

/// Chain linking each word to its right neighbour.
pub fn path_tree(n: usize) -> UndirectedTree {
    UndirectedTree::from_edges(n, (1..n).map(|i| (i, i + 1))).expect("a chain is a tree")
}

/// Maximum spanning trees of gold edge counts, one per sentence length.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct MajorityModel {
    trees: BTreeMap<usize, Vec<(usize, usize)>>,
}

impl MajorityModel {
    /// Bins the training corpus by exact length and, for each length up to
    /// [`MAJORITY_MAX_LEN`] with data, keeps the maximum spanning tree of
    /// the edge-count graph.
    pub fn fit(train: &[Sentence]) -> Self {
        let mut counts: BTreeMap<usize, Array2<f64>> = BTreeMap::new();
        for sentence in train {
            let n = sentence.len();
            if !(2..=MAJORITY_MAX_LEN).contains(&n) {
                continue;
            }
            let graph = counts.entry(n).or_insert_with(|| Array2::zeros((n, n)));
            for &(a, b) in sentence.gold_tree().edges() {
                graph[(a - 1, b - 1)] += 1.0;
                graph[(b - 1, a - 1)] += 1.0;
            }
        }
        Self::from_counts(counts)
    }

    /// Builds the model from per-length symmetric edge-count matrices.
    pub fn from_counts(counts: BTreeMap<usize, Array2<f64>>) -> Self {
        let trees = counts
            .into_iter()
            .map(|(n, graph)| {
                let tree = mst_prim(graph.view(), Objective::Maximize);
                (n, tree.edges().iter().copied().collect())
            })
            .collect();
        MajorityModel { trees }
    }

    /// Stored tree for `n`, falling back to [`path_tree`].
    pub fn predict(&self, n: usize) -> UndirectedTree {
        match self.trees.get(&n) {
            Some(edges) => UndirectedTree::from_edges(n, edges.iter().copied()).expect("stored trees are spanning"),
            None => path_tree(n),
        }
    }

    pub fn fitted_lengths(&self) -> impl Iterator<Item = usize> + '_ {
        self.trees.keys().copied()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("model serializes")
    }

    /// Parses `{"n": [[a, b], ...]}`, checking each tree spans its length.
    pub fn from_json(text: &str) -> Result<Self, String> {
        let model: MajorityModel = serde_json::from_str(text).map_err(|e| e.to_string())?;
        for (&n, edges) in &model.trees {
            UndirectedTree::from_edges(n, edges.iter().copied()).map_err(|e| format!("length {n}: {e}"))?;
        }
        Ok(model)
    }
}

pub fn majority_fit(train: &[Sentence]) -> MajorityModel {
    MajorityModel::fit(train)
}

pub fn majority_predict(model: &MajorityModel, n: usize) -> UndirectedTree {
    model.predict(n)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::{enumerate_trees, uuas};
    use crate::treebank::tests::{enjoyed_sentence, token};

    #[test]
    fn path_shapes() {
        assert_eq!(
            path_tree(3).edges().iter().copied().collect::<Vec<_>>(),
            vec![(1, 2), (2, 3)]
        );
        assert!(path_tree(1).edges().is_empty());
        assert_eq!(uuas(&path_tree(6), &enjoyed_sentence().gold_tree()).unwrap(), 0.6);
    }

    #[test]
    fn unanimous_training_data() {
        let copies = vec![enjoyed_sentence(); 10];
        let model = majority_fit(&copies);
        assert_eq!(model.predict(6), enjoyed_sentence().gold_tree());
        assert_eq!(model.predict(41), path_tree(41));
        assert_eq!(model.predict(37), path_tree(37));
    }

    #[test]
    fn toy_counts_by_brute_force() {
        let counts = [
            ((1, 2), 3.0),
            ((2, 3), 2.0),
            ((3, 4), 3.0),
            ((1, 4), 1.0),
            ((2, 4), 1.0),
        ];
        let mut graph = Array2::zeros((4, 4));
        for ((a, b), c) in counts {
            graph[(a - 1, b - 1)] = c;
            graph[(b - 1, a - 1)] = c;
        }
        let best = enumerate_trees(4)
            .unwrap()
            .map(|t| t.weight(|a, b| graph[(a - 1, b - 1)]))
            .fold(f64::MIN, f64::max);
        let model = MajorityModel::from_counts(BTreeMap::from([(4, graph.clone())]));
        let tree = model.predict(4);
        assert_eq!(tree.weight(|a, b| graph[(a - 1, b - 1)]), best);
        assert_eq!(
            tree.edges().iter().copied().collect::<Vec<_>>(),
            vec![(1, 2), (2, 3), (3, 4)]
        );
    }

    #[test]
    fn long_sentences_are_not_binned() {
        let tokens = (1..=41)
            .map(|i| token(i, "w", "X", if i == 1 { 0 } else { 1 }))
            .collect();
        let star = Sentence::new("long", vec![], tokens).unwrap();
        let model = majority_fit(&[star]);
        assert_eq!(model.fitted_lengths().count(), 0);
        assert_eq!(model.predict(41), path_tree(41));
    }

    #[test]
    fn json_round_trip() {
        let model = majority_fit(&[enjoyed_sentence()]);
        let back = MajorityModel::from_json(&model.to_json()).unwrap();
        assert_eq!(back, model);
        assert!(MajorityModel::from_json(r#"{"3": [[1, 2]]}"#).is_err());
    }
}
