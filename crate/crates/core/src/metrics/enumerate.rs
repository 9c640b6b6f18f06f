use num_bigint::BigUint;

use super::{MetricError, UndirectedTree};

/// Largest `n` accepted by [`enumerate_trees`]; 8^6 = 262144 trees.
const MAX_ENUMERATION: usize = 8;

/// Decodes a Prüfer sequence over `1..=n` (length `n - 2`) into its tree.
pub fn prufer_decode(n: usize, sequence: &[usize]) -> UndirectedTree {
    assert!(
        n >= 2 && sequence.len() == n - 2,
        "Prüfer sequence must have n - 2 entries"
    );
    let mut degree = vec![1usize; n + 1];
    for &s in sequence {
        degree[s] += 1;
    }
    let mut edges = Vec::with_capacity(n - 1);
    for &s in sequence {
        let leaf = (1..=n).find(|&v| degree[v] == 1).expect("a leaf always exists");
        edges.push((leaf, s));
        degree[leaf] -= 1;
        degree[s] -= 1;
    }
    let last: Vec<usize> = (1..=n).filter(|&v| degree[v] == 1).collect();
    edges.push((last[0], last[1]));
    UndirectedTree::from_edges(n, edges).expect("Prüfer decoding yields a tree")
}

/// Every labeled tree on `n` nodes, each exactly once.
pub fn enumerate_trees(n: usize) -> Result<impl Iterator<Item = UndirectedTree>, MetricError> {
    if !(1..=MAX_ENUMERATION).contains(&n) {
        return Err(MetricError::OutOfRange(n));
    }
    let len = n.saturating_sub(2);
    let total = if n <= 2 { 1 } else { n.pow(len as u32) };
    Ok((0..total).map(move |code| {
        if n == 1 {
            return UndirectedTree::from_edges(1, []).unwrap();
        }
        let mut sequence = vec![0; len];
        let mut rest = code;
        for slot in sequence.iter_mut().rev() {
            *slot = rest % n + 1;
            rest /= n;
        }
        prufer_decode(n, &sequence)
    }))
}

/// Cayley's formula, `n^(n-2)`, with `count_trees(1) = 1`.
pub fn count_trees(n: usize) -> BigUint {
    assert!(n >= 1, "n must be positive");
    if n <= 2 {
        return BigUint::from(1u32);
    }
    BigUint::from(n).pow(n as u32 - 2)
}

/// Labeled directed trees: a choice of root, an undirected tree and a label
/// for each of the `n - 1` arcs, `n * n^(n-2) * k^(n-1)`.
pub fn count_labeled_directed(n: usize, labels: usize) -> BigUint {
    assert!(n >= 1 && labels >= 1, "n and labels must be positive");
    BigUint::from(n) * count_trees(n) * BigUint::from(labels).pow(n as u32 - 1)
}
