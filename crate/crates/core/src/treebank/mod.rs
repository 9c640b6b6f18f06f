//! Universal Dependencies sentences, gold trees and tree distances.
//!
//! Token indices follow CoNLL-U: tokens are numbered from 1 and a head of 0
//! marks the root. [`DistanceMatrix`] is indexed from 0, so the distance
//! between tokens `i` and `j` is `matrix.get(i - 1, j - 1)`.

mod align;
mod conllu;

use std::collections::{BTreeMap, VecDeque};
use std::fmt;

use thiserror::Error;

use crate::metrics::UndirectedTree;

pub use align::{
    align_and_reconcile, read_alignments, reconcile_corpus, write_alignments, AlignStatus, AlignmentRecord,
    ReconcileError, ReconcileLog, Reconciled, Span,
};
pub use conllu::{parse_conllu, write_conllu, ConlluError};

/// Ordered `key=value` feature list, as found in the FEATS column.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash)]
pub struct Features(Vec<(String, String)>);

impl Features {
    pub fn new() -> Self {
        Self::default()
    }

    /// Parses a FEATS cell. `_` is the empty set.
    pub fn parse(cell: &str) -> Result<Self, String> {
        let mut features = Features::new();
        if cell == "_" || cell.is_empty() {
            return Ok(features);
        }
        for item in cell.split('|') {
            let (key, value) = item
                .split_once('=')
                .ok_or_else(|| format!("feature `{item}` has no `=`"))?;
            if key.is_empty() {
                return Err(format!("feature `{item}` has an empty key"));
            }
            if features.get(key).is_some() {
                return Err(format!("duplicate feature key `{key}`"));
            }
            features.0.push((key.to_string(), value.to_string()));
        }
        Ok(features)
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.0.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    /// True when `key=value` is present.
    pub fn has(&self, key: &str, value: &str) -> bool {
        self.get(key) == Some(value)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &str)> {
        self.0.iter().map(|(k, v)| (k.as_str(), v.as_str()))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl fmt::Display for Features {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return f.write_str("_");
        }
        for (i, (k, v)) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str("|")?;
            }
            write!(f, "{k}={v}")?;
        }
        Ok(())
    }
}

/// The MISC column: `|`-separated items, usually `key=value`.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash)]
pub struct Misc(Vec<String>);

impl Misc {
    pub fn parse(cell: &str) -> Self {
        if cell == "_" || cell.is_empty() {
            return Misc::default();
        }
        Misc(cell.split('|').map(str::to_string).collect())
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.0.iter().find_map(|item| match item.split_once('=') {
            Some((k, v)) if k == key => Some(v),
            _ => None,
        })
    }

    /// Sets `key=value`, replacing an existing entry in place or appending.
    pub fn set(&mut self, key: &str, value: &str) {
        let entry = format!("{key}={value}");
        match self
            .0
            .iter()
            .position(|item| item.split_once('=').map(|(k, _)| k) == Some(key))
        {
            Some(pos) => self.0[pos] = entry,
            None => self.0.push(entry),
        }
    }

    /// Removes `key` and returns its value.
    pub fn remove(&mut self, key: &str) -> Option<String> {
        let pos = self
            .0
            .iter()
            .position(|item| item.split_once('=').map(|(k, _)| k) == Some(key))?;
        let item = self.0.remove(pos);
        item.split_once('=').map(|(_, v)| v.to_string())
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl fmt::Display for Misc {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            f.write_str("_")
        } else {
            f.write_str(&self.0.join("|"))
        }
    }
}

/// One syntactic word of a CoNLL-U sentence.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Token {
    /// 1-based position.
    pub index: usize,
    pub form: String,
    pub lemma: String,
    pub upos: String,
    pub xpos: String,
    pub feats: Features,
    /// Parent index, 0 for the root.
    pub head: usize,
    pub deprel: String,
    /// Enhanced dependencies, passed through untouched.
    pub deps: String,
    pub misc: Misc,
}

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum TreeError {
    #[error("sentence has no tokens")]
    Empty,
    #[error("token at position {position} has index {found}")]
    IndexOutOfOrder { position: usize, found: usize },
    #[error("token {token} has head {head} outside [0, {n}]")]
    HeadOutOfRange { token: usize, head: usize, n: usize },
    #[error("token {token} is its own head")]
    SelfLoop { token: usize },
    #[error("expected exactly one root, found {0}")]
    RootCount(usize),
    #[error("head links of token {token} form a cycle")]
    Cycle { token: usize },
}

/// A dependency-annotated sentence whose head links form a tree.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Sentence {
    sent_id: String,
    comments: Vec<String>,
    tokens: Vec<Token>,
}

impl Sentence {
    /// Builds a sentence, checking indices and tree shape.
    pub fn new(sent_id: impl Into<String>, comments: Vec<String>, tokens: Vec<Token>) -> Result<Self, TreeError> {
        check_tree(&tokens)?;
        Ok(Sentence {
            sent_id: sent_id.into(),
            comments,
            tokens,
        })
    }

    pub fn sent_id(&self) -> &str {
        &self.sent_id
    }

    /// Comment lines without their leading `#`, in file order.
    pub fn comments(&self) -> &[String] {
        &self.comments
    }

    pub fn tokens(&self) -> &[Token] {
        &self.tokens
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    /// Undirected gold edges as `(min, max)` pairs of 1-based indices.
    pub fn gold_tree(&self) -> UndirectedTree {
        UndirectedTree::from_edges(
            self.len(),
            self.tokens.iter().filter(|t| t.head != 0).map(|t| (t.index, t.head)),
        )
        .expect("sentence invariants guarantee a spanning tree")
    }

    pub fn distance_matrix(&self) -> DistanceMatrix {
        DistanceMatrix::from_tree(&self.gold_tree())
    }

    /// Applies `edit` to every token. Tree-shaping fields (index, head) must
    /// not change; this is checked.
    pub fn map_tokens<F>(&self, mut edit: F) -> Sentence
    where
        F: FnMut(&mut Token),
    {
        let mut tokens = self.tokens.clone();
        for token in &mut tokens {
            let (index, head) = (token.index, token.head);
            edit(token);
            assert!(
                token.index == index && token.head == head,
                "token edits must preserve the tree"
            );
        }
        Sentence {
            sent_id: self.sent_id.clone(),
            comments: self.comments.clone(),
            tokens,
        }
    }
}

pub(crate) fn check_tree(tokens: &[Token]) -> Result<(), TreeError> {
    let n = tokens.len();
    if n == 0 {
        return Err(TreeError::Empty);
    }
    for (position, token) in tokens.iter().enumerate() {
        if token.index != position + 1 {
            return Err(TreeError::IndexOutOfOrder {
                position: position + 1,
                found: token.index,
            });
        }
        if token.head > n {
            return Err(TreeError::HeadOutOfRange {
                token: token.index,
                head: token.head,
                n,
            });
        }
        if token.head == token.index {
            return Err(TreeError::SelfLoop { token: token.index });
        }
    }
    let roots = tokens.iter().filter(|t| t.head == 0).count();
    if roots != 1 {
        return Err(TreeError::RootCount(roots));
    }
    // With a single root and n-1 head links, the graph is a tree iff every
    // token reaches the root.
    for token in tokens {
        let mut current = token.index;
        let mut steps = 0;
        while current != 0 {
            current = tokens[current - 1].head;
            steps += 1;
            if steps > n {
                return Err(TreeError::Cycle { token: token.index });
            }
        }
    }
    Ok(())
}

/// All-pairs path lengths in an undirected tree.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DistanceMatrix {
    n: usize,
    entries: Vec<u32>,
}

impl DistanceMatrix {
    /// Breadth-first search from every node.
    pub fn from_tree(tree: &UndirectedTree) -> Self {
        let n = tree.n();
        let mut adjacency = vec![Vec::new(); n];
        for &(a, b) in tree.edges() {
            adjacency[a - 1].push(b - 1);
            adjacency[b - 1].push(a - 1);
        }
        let mut entries = vec![u32::MAX; n * n];
        let mut queue = VecDeque::new();
        for source in 0..n {
            let row = &mut entries[source * n..(source + 1) * n];
            row[source] = 0;
            queue.push_back(source);
            while let Some(node) = queue.pop_front() {
                for &next in &adjacency[node] {
                    if row[next] == u32::MAX {
                        row[next] = row[node] + 1;
                        queue.push_back(next);
                    }
                }
            }
        }
        DistanceMatrix { n, entries }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Distance between 0-based positions `i` and `j`.
    pub fn get(&self, i: usize, j: usize) -> u32 {
        self.entries[i * self.n + j]
    }

    pub fn row(&self, i: usize) -> &[u32] {
        &self.entries[i * self.n..(i + 1) * self.n]
    }

    /// Entries as reals, row-major.
    pub fn to_f64(&self) -> Vec<f64> {
        self.entries.iter().map(|&d| d as f64).collect()
    }
}

/// Sentence and token counts for one corpus split.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct CorpusStats {
    pub sentences: usize,
    pub tokens: usize,
    pub length_histogram: BTreeMap<usize, usize>,
}

pub fn corpus_stats(corpus: &[Sentence]) -> CorpusStats {
    let mut stats = CorpusStats::default();
    for sentence in corpus {
        stats.sentences += 1;
        stats.tokens += sentence.len();
        *stats.length_histogram.entry(sentence.len()).or_default() += 1;
    }
    stats
}
