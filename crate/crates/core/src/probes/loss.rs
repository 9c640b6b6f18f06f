use ndarray::{Array2, ArrayView2, Axis};

use super::ProbeParams;
use crate::metrics::{mst_prim, Objective, UndirectedTree};
use crate::treebank::DistanceMatrix;

/// A loss value and its (sub)gradient with respect to `B`.
#[derive(Debug, Clone, PartialEq)]
pub struct LossAndGrad {
    pub loss: f64,
    pub grad: Array2<f64>,
}

/// `n x n` squared Euclidean distances between rows of `projected`.
pub(crate) fn pairwise_squared(projected: &Array2<f64>) -> Array2<f64> {
    let n = projected.nrows();
    let mut out = Array2::zeros((n, n));
    for i in 0..n {
        for j in (i + 1)..n {
            let d: f64 = projected
                .row(i)
                .iter()
                .zip(projected.row(j))
                .map(|(a, b)| (a - b) * (a - b))
                .sum();
            out[(i, j)] = d;
            out[(j, i)] = d;
        }
    }
    out
}

/// Gradient of `sum_ij coeff_ij ||P_i - P_j||^2` (ordered pairs, symmetric
/// `coeff`) with respect to `B`, where `P = (H B^T) * mask`.
///
/// The derivative with respect to `P` is `4 L P` for the graph Laplacian
/// `L = diag(rowsum(coeff)) - coeff`.
fn backprop(
    coeff: &Array2<f64>,
    projected: &Array2<f64>,
    h: ArrayView2<f64>,
    mask: Option<&Array2<f64>>,
) -> Array2<f64> {
    let mut laplacian = -coeff;
    for (i, s) in coeff.sum_axis(Axis(1)).iter().enumerate() {
        laplacian[(i, i)] += s;
    }
    let mut grad_p = laplacian.dot(projected) * 4.0;
    if let Some(mask) = mask {
        grad_p *= mask;
    }
    grad_p.t().dot(&h)
}

fn project(b: &Array2<f64>, h: ArrayView2<f64>, mask: Option<&Array2<f64>>) -> Array2<f64> {
    let mut p = h.dot(&b.t());
    if let Some(mask) = mask {
        p *= mask;
    }
    p
}

pub(crate) fn structural_objective(
    b: &Array2<f64>,
    h: ArrayView2<f64>,
    gold: &DistanceMatrix,
    mask: Option<&Array2<f64>>,
) -> LossAndGrad {
    let n = h.nrows();
    let projected = project(b, h, mask);
    let predicted = pairwise_squared(&projected);
    let norm = (n * n) as f64;
    let mut loss = 0.0;
    let mut coeff = Array2::zeros((n, n));
    for i in 0..n {
        for j in 0..n {
            if i == j {
                continue;
            }
            let residual = predicted[(i, j)] - gold.get(i, j) as f64;
            loss += residual.abs();
            coeff[(i, j)] = residual.signum() * (residual != 0.0) as u8 as f64 / norm;
        }
    }
    LossAndGrad {
        loss: loss / norm,
        grad: backprop(&coeff, &projected, h, mask),
    }
}

pub(crate) fn perceptron_objective(
    b: &Array2<f64>,
    h: ArrayView2<f64>,
    gold: &UndirectedTree,
    mask: Option<&Array2<f64>>,
) -> LossAndGrad {
    let n = h.nrows();
    let projected = project(b, h, mask);
    let predicted = pairwise_squared(&projected);
    let decoded = mst_prim(predicted.view(), Objective::Minimize);
    let mut coeff = Array2::zeros((n, n));
    let mut loss = 0.0;
    for (&(a, c), sign) in gold
        .edges()
        .iter()
        .map(|e| (e, 1.0))
        .chain(decoded.edges().iter().map(|e| (e, -1.0)))
    {
        loss += sign * predicted[(a - 1, c - 1)];
        // Each unordered edge appears twice in the ordered-pair sum.
        coeff[(a - 1, c - 1)] += sign / 2.0;
        coeff[(c - 1, a - 1)] += sign / 2.0;
    }
    LossAndGrad {
        loss: loss.max(0.0),
        grad: backprop(&coeff, &projected, h, mask),
    }
}

/// Mean absolute error between gold tree distances and predicted squared
/// distances over all ordered pairs, `(1/n^2) sum_ij |d_ij - ||B(h_i - h_j)||^2|`.
/// Ties (zero residual) contribute a zero subgradient.
pub fn structural_loss(params: &ProbeParams, h: ArrayView2<f64>, gold: &DistanceMatrix) -> LossAndGrad {
    structural_objective(&params.b, h, gold, None)
}

/// Structured-perceptron loss: gold tree score minus the score of the
/// minimum spanning tree under predicted distances. Nonnegative, and zero
/// exactly when the gold tree is a minimum spanning tree. The decoded tree
/// is treated as a constant when differentiating.
pub fn perceptron_loss(params: &ProbeParams, h: ArrayView2<f64>, gold: &UndirectedTree) -> LossAndGrad {
    perceptron_objective(&params.b, h, gold, None)
}
