use std::cmp::Ordering;

use ndarray::ArrayView2;

use super::UndirectedTree;

/// Best known connection of a node outside the tree: weight, edge key and
/// the tree node it attaches to.
type Candidate = (f64, (usize, usize), usize);

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Objective {
    Minimize,
    Maximize,
}

/// Prim's algorithm over a dense symmetric weight matrix.
///
/// `weights[(i, j)]` is the weight between 0-based nodes `i` and `j`; the
/// returned tree uses 1-based nodes. Maximization runs the minimizer on
/// negated weights. Among equal-weight candidate edges the one with the
/// smaller `(min endpoint, max endpoint)` pair is taken.
pub fn mst_prim(weights: ArrayView2<f64>, objective: Objective) -> UndirectedTree {
    let n = weights.nrows();
    assert_eq!(n, weights.ncols(), "weight matrix must be square");
    let sign = match objective {
        Objective::Minimize => 1.0,
        Objective::Maximize => -1.0,
    };
    let w = |i: usize, j: usize| sign * weights[(i, j)];
    let key = |i: usize, j: usize| (i.min(j), i.max(j));

    let mut in_tree = vec![false; n];
    let mut best: Vec<Option<Candidate>> = vec![None; n];
    let mut edges = Vec::with_capacity(n.saturating_sub(1));
    if n == 0 {
        return UndirectedTree::from_edges(0, []).expect("empty tree");
    }

    let better = |cand: (f64, (usize, usize)), cur: Option<Candidate>| match cur {
        None => true,
        Some((cw, ck, _)) => match cand.0.partial_cmp(&cw).unwrap_or(Ordering::Equal) {
            Ordering::Less => true,
            Ordering::Greater => false,
            Ordering::Equal => cand.1 < ck,
        },
    };

    let mut current = 0;
    in_tree[0] = true;
    for _ in 1..n {
        for v in 0..n {
            if !in_tree[v] {
                let cand = (w(current, v), key(current, v));
                if better(cand, best[v]) {
                    best[v] = Some((cand.0, cand.1, current));
                }
            }
        }
        let mut chosen: Option<usize> = None;
        for v in 0..n {
            if in_tree[v] {
                continue;
            }
            let (vw, vk, _) = best[v].expect("every outside node has a candidate");
            chosen = match chosen {
                None => Some(v),
                Some(c) => {
                    let (cw, ck, _) = best[c].unwrap();
                    if better((vw, vk), Some((cw, ck, c))) {
                        Some(v)
                    } else {
                        Some(c)
                    }
                }
            };
        }
        let v = chosen.expect("graph is complete");
        let (_, _, u) = best[v].unwrap();
        in_tree[v] = true;
        edges.push((u + 1, v + 1));
        current = v;
    }
    UndirectedTree::from_edges(n, edges).expect("Prim yields a spanning tree")
}

#[cfg(test)]
mod tests {
    use ndarray::array;

    use super::*;

    #[test]
    fn three_nodes() {
        let w = array![[0.0, 1.0, 5.0], [1.0, 0.0, 2.0], [5.0, 2.0, 0.0]];
        let t = mst_prim(w.view(), Objective::Minimize);
        assert_eq!(t.edges().iter().copied().collect::<Vec<_>>(), vec![(1, 2), (2, 3)]);
        let t = mst_prim(w.view(), Objective::Maximize);
        assert_eq!(t.edges().iter().copied().collect::<Vec<_>>(), vec![(1, 3), (2, 3)]);
    }

    #[test]
    fn single_node() {
        let w = array![[0.0]];
        assert!(mst_prim(w.view(), Objective::Minimize).edges().is_empty());
    }

    #[test]
    fn ties_are_lexicographic() {
        // All weights equal: the star around node 1 wins every tie.
        let w = ndarray::Array2::<f64>::ones((4, 4));
        let t = mst_prim(w.view(), Objective::Minimize);
        assert_eq!(
            t.edges().iter().copied().collect::<Vec<_>>(),
            vec![(1, 2), (1, 3), (1, 4)]
        );
    }
}
