//! Linear syntactic-distance probes.
//!
//! Both probes share one parameterisation: a `k x d` matrix `B` mapping
//! embeddings into a space where squared Euclidean distance stands in for
//! tree distance. The structural probe regresses tree distances directly;
//! the perceptron probe is trained so that the minimum spanning tree of the
//! predicted distances is the gold tree.

mod adam;
mod io;
mod loss;
mod search;
pub mod synthetic;
mod train;

use ndarray::{Array2, ArrayView1, ArrayView2};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::metrics::{mst_prim, Objective, UndirectedTree};
use crate::treebank::{DistanceMatrix, Sentence};

pub use adam::Adam;
pub use io::{read_params, read_params_file, write_params, write_params_file, JPRB_MAGIC};
pub use loss::{perceptron_loss, structural_loss, LossAndGrad};
pub use search::{random_search, sample_configs, sweep_layers, SearchResult, SearchSpace, TrialResult};
pub use train::{train_probe, Checkpoint, DropoutTarget, StopReason, TrainConfig, TrainHistory};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProbeKind {
    Structural,
    Perceptron,
}

impl ProbeKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ProbeKind::Structural => "structural",
            ProbeKind::Perceptron => "perceptron",
        }
    }
}

impl std::str::FromStr for ProbeKind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "structural" => Ok(ProbeKind::Structural),
            "perceptron" => Ok(ProbeKind::Perceptron),
            other => Err(format!("unknown probe kind `{other}`")),
        }
    }
}

impl std::fmt::Display for ProbeKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Error)]
pub enum ProbeError {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimMismatch { expected: usize, found: usize },
    #[error("{0} data is empty")]
    EmptyData(&'static str),
    #[error("invalid training configuration: {0}")]
    BadConfig(String),
    #[error("non-finite training loss {loss} at step {step} (learning rate {learning_rate})")]
    NumericalAbort { step: usize, learning_rate: f64, loss: f64 },
    #[error("probe file: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// The probe's linear map.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbeParams {
    pub kind: ProbeKind,
    /// `rank x dim`.
    pub b: Array2<f64>,
}

impl ProbeParams {
    pub fn new(kind: ProbeKind, b: Array2<f64>) -> Result<Self, ProbeError> {
        if b.nrows() == 0 || b.nrows() > b.ncols() {
            return Err(ProbeError::BadConfig(format!(
                "rank {} must lie in [1, {}]",
                b.nrows(),
                b.ncols()
            )));
        }
        if b.iter().any(|v| !v.is_finite()) {
            return Err(ProbeError::BadConfig("non-finite parameter".into()));
        }
        Ok(ProbeParams { kind, b })
    }

    pub fn rank(&self) -> usize {
        self.b.nrows()
    }

    pub fn dim(&self) -> usize {
        self.b.ncols()
    }

    /// Squared distances between every pair of rows of `h` (`n x d`).
    pub fn predict_distances(&self, h: ArrayView2<f64>) -> Array2<f64> {
        loss::pairwise_squared(&h.dot(&self.b.t()))
    }

    /// Minimum spanning tree of the predicted distances.
    pub fn decode_tree(&self, h: ArrayView2<f64>) -> UndirectedTree {
        mst_prim(self.predict_distances(h).view(), Objective::Minimize)
    }
}

/// `||B (h_i - h_j)||^2`.
pub fn squared_distance(params: &ProbeParams, h_i: ArrayView1<f64>, h_j: ArrayView1<f64>) -> Result<f64, ProbeError> {
    for h in [&h_i, &h_j] {
        if h.len() != params.dim() {
            return Err(ProbeError::DimMismatch {
                expected: params.dim(),
                found: h.len(),
            });
        }
    }
    let diff = &h_i - &h_j;
    Ok(params.b.dot(&diff).iter().map(|v| v * v).sum())
}

/// One sentence prepared for probing: token embeddings plus gold structure.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbeExample {
    pub sent_id: String,
    /// `n x d`.
    pub embeddings: Array2<f64>,
    pub distances: DistanceMatrix,
    pub tree: UndirectedTree,
}

impl ProbeExample {
    pub fn new(sentence: &Sentence, embeddings: &Array2<f32>) -> Result<Self, ProbeError> {
        if embeddings.nrows() != sentence.len() {
            return Err(ProbeError::DimMismatch {
                expected: sentence.len(),
                found: embeddings.nrows(),
            });
        }
        let tree = sentence.gold_tree();
        Ok(ProbeExample {
            sent_id: sentence.sent_id().to_string(),
            embeddings: embeddings.mapv(f64::from),
            distances: DistanceMatrix::from_tree(&tree),
            tree,
        })
    }

    pub fn len(&self) -> usize {
        self.tree.n()
    }

    pub fn is_empty(&self) -> bool {
        self.tree.n() == 0
    }
}

#[cfg(test)]
mod tests {
    use ndarray::array;

    use super::*;

    #[test]
    fn squared_distance_examples() {
        let p = ProbeParams::new(ProbeKind::Structural, array![[1.0]]).unwrap();
        assert_eq!(
            squared_distance(&p, array![3.0].view(), array![1.0].view()).unwrap(),
            4.0
        );

        let zero = ProbeParams::new(ProbeKind::Structural, Array2::zeros((2, 3))).unwrap();
        assert_eq!(
            squared_distance(&zero, array![1.0, -2.0, 5.0].view(), array![0.3, 0.0, 9.0].view()).unwrap(),
            0.0
        );

        let p = ProbeParams::new(ProbeKind::Structural, array![[1.0, 0.0], [0.0, 2.0]]).unwrap();
        assert_eq!(
            squared_distance(&p, array![2.0, 3.0].view(), array![1.0, 2.0].view()).unwrap(),
            5.0
        );

        assert!(matches!(
            squared_distance(&p, array![1.0].view(), array![1.0, 2.0].view()),
            Err(ProbeError::DimMismatch { expected: 2, found: 1 })
        ));
    }

    #[test]
    fn rank_bounds() {
        assert!(ProbeParams::new(ProbeKind::Structural, Array2::zeros((3, 2))).is_err());
        assert!(ProbeParams::new(ProbeKind::Structural, Array2::zeros((0, 2))).is_err());
    }

    #[test]
    fn scale_equivariance_of_distances_and_decoding() {
        let b = array![[0.3, -1.2, 0.5], [0.9, 0.1, -0.4]];
        let h = array![[0.1, 0.2, 0.3], [1.0, -1.0, 0.0], [0.5, 0.5, 2.0], [-0.7, 0.2, 0.9]];
        let p = ProbeParams::new(ProbeKind::Perceptron, b.clone()).unwrap();
        let scaled = ProbeParams::new(ProbeKind::Perceptron, &b * 3.0).unwrap();
        let d = p.predict_distances(h.view());
        let d3 = scaled.predict_distances(h.view());
        for (a, c) in d.iter().zip(d3.iter()) {
            assert!((c - 9.0 * a).abs() < 1e-12);
        }
        assert_eq!(p.decode_tree(h.view()), scaled.decode_tree(h.view()));
    }
}
