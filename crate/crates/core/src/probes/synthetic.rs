//! Sentences with a planted exact probe solution.
//!
//! Rooting a tree at `r` and embedding word `v` as the 0/1 indicator of the
//! edges on the path from `r` to `v` makes `||h_u - h_v||^2` the size of the
//! symmetric difference of the two paths, which is the tree distance. The
//! identity map is therefore a perfect probe.

use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::ProbeExample;
use crate::metrics::prufer_decode;
use crate::treebank::{Features, Misc, Sentence, Token};

/// Parent of each word (1-based, 0 for the root) after rooting `edges` at `root`.
fn orient(n: usize, edges: &[(usize, usize)], root: usize) -> Vec<usize> {
    let mut adj = vec![Vec::new(); n + 1];
    for &(a, b) in edges {
        adj[a].push(b);
        adj[b].push(a);
    }
    let mut parent = vec![usize::MAX; n + 1];
    parent[root] = 0;
    let mut stack = vec![root];
    while let Some(u) = stack.pop() {
        for &v in &adj[u] {
            if parent[v] == usize::MAX {
                parent[v] = u;
                stack.push(v);
            }
        }
    }
    parent[1..].to_vec()
}

/// Path-indicator embeddings for a sentence, padded with zeros to `dim`
/// columns. Each non-root word owns one coordinate, marking the edge to its
/// head, so `n - 1` columns suffice.
pub fn path_indicator_embeddings(sentence: &Sentence, dim: usize) -> Array2<f64> {
    let n = sentence.len();
    assert!(dim + 1 >= n, "need at least {} columns", n - 1);
    let heads: Vec<usize> = sentence.tokens().iter().map(|t| t.head).collect();
    let root = heads.iter().position(|&h| h == 0).expect("sentence has a root") + 1;
    let column = |v: usize| if v < root { v - 1 } else { v - 2 };
    let mut h = Array2::zeros((n, dim));
    for v in 1..=n {
        let mut u = v;
        while heads[u - 1] != 0 {
            h[(v - 1, column(u))] = 1.0;
            u = heads[u - 1];
        }
    }
    h
}

/// A uniformly random labelled tree on `n` words with a uniformly random root.
pub fn random_sentence(rng: &mut impl Rng, n: usize, sent_id: &str) -> Sentence {
    let heads = if n == 1 {
        vec![0]
    } else {
        let seq: Vec<usize> = (0..n - 2).map(|_| rng.random_range(1..=n)).collect();
        let tree = prufer_decode(n, &seq);
        let edges: Vec<_> = tree.edges().iter().copied().collect();
        orient(n, &edges, rng.random_range(1..=n))
    };
    let tokens = heads
        .iter()
        .enumerate()
        .map(|(i, &head)| Token {
            index: i + 1,
            form: format!("w{}", i + 1),
            lemma: format!("w{}", i + 1),
            upos: "X".into(),
            xpos: "_".into(),
            feats: Features::default(),
            head,
            deprel: if head == 0 { "root" } else { "dep" }.into(),
            deps: "_".into(),
            misc: Misc::default(),
        })
        .collect();
    let comments = vec![format!(" sent_id = {sent_id}")];
    Sentence::new(sent_id.to_string(), comments, tokens).expect("oriented tree is valid")
}

/// `count` planted examples with lengths drawn uniformly from
/// `min_len..=max_len`, all embedded in `max_len - 1` dimensions.
pub fn planted_examples(count: usize, min_len: usize, max_len: usize, seed: u64) -> Vec<ProbeExample> {
    assert!(1 <= min_len && min_len <= max_len);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|i| {
            let n = rng.random_range(min_len..=max_len);
            let sentence = random_sentence(&mut rng, n, &format!("planted-{i}"));
            let h = path_indicator_embeddings(&sentence, (max_len - 1).max(1));
            ProbeExample::new(&sentence, &h.mapv(|v| v as f32)).expect("row count matches")
        })
        .collect()
}
