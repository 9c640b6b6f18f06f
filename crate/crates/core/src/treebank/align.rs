//! Reconciling UD tokenization with a model tokenizer's subword split.
//!
//! An [`AlignmentRecord`] says, for one sentence, which UD tokens have to be
//! merged because the tokenizer keeps them together, and which subword span
//! each resulting token covers. Sentences the aligner could not fix are
//! marked `removed`.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{check_tree, Sentence, Token, TreeError};

/// Half-open `[start, end)` range of subword rows.
pub type Span = [usize; 2];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AlignStatus {
    Ok,
    Removed,
}

/// One line of an alignment JSONL file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AlignmentRecord {
    pub sent_id: String,
    pub status: AlignStatus,
    /// One span per token of the reconciled sentence.
    #[serde(default)]
    pub token_map: Vec<Span>,
    /// Groups of contiguous 1-based UD token indices collapsed into one node.
    #[serde(default)]
    pub merges: Vec<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reason: Option<String>,
}

impl AlignmentRecord {
    /// One subword per token, no merges.
    pub fn identity(sentence: &Sentence) -> Self {
        AlignmentRecord {
            sent_id: sentence.sent_id().to_string(),
            status: AlignStatus::Ok,
            token_map: (0..sentence.len()).map(|i| [i, i + 1]).collect(),
            merges: Vec::new(),
            reason: None,
        }
    }

    pub fn removed(sent_id: impl Into<String>, reason: impl Into<String>) -> Self {
        AlignmentRecord {
            sent_id: sent_id.into(),
            status: AlignStatus::Removed,
            token_map: Vec::new(),
            merges: Vec::new(),
            reason: Some(reason.into()),
        }
    }

    /// Spans must be nonempty, ordered and pairwise disjoint.
    pub fn check_spans(&self) -> Result<(), ReconcileError> {
        let mut previous_end = 0;
        for (i, &[start, end]) in self.token_map.iter().enumerate() {
            if start >= end || start < previous_end {
                return Err(ReconcileError::BadSpan {
                    sent_id: self.sent_id.clone(),
                    token: i + 1,
                    span: [start, end],
                });
            }
            previous_end = end;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Reconciled {
    Kept(Sentence),
    Removed,
}

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum ReconcileError {
    #[error("alignment record for `{found}` applied to sentence `{expected}`")]
    IdMismatch { expected: String, found: String },
    #[error("sentence {sent_id}: merge group {group:?} is not a contiguous in-range run")]
    MergeNotContiguous { sent_id: String, group: Vec<usize> },
    #[error("sentence {sent_id}: token {token} appears in more than one merge group")]
    OverlappingMerges { sent_id: String, token: usize },
    #[error("sentence {sent_id}: merged result is not a tree: {source}")]
    NotATree { sent_id: String, source: TreeError },
    #[error("sentence {sent_id}: token_map has {found} spans for {expected} tokens")]
    TokenMapLength {
        sent_id: String,
        expected: usize,
        found: usize,
    },
    #[error("sentence {sent_id}: span {span:?} of token {token} is empty, overlapping or out of order")]
    BadSpan { sent_id: String, token: usize, span: Span },
}

impl ReconcileError {
    /// Stable short code for removal accounting.
    pub fn reason_code(&self) -> &'static str {
        match self {
            ReconcileError::IdMismatch { .. } => "id_mismatch",
            ReconcileError::MergeNotContiguous { .. } => "merge_not_contiguous",
            ReconcileError::OverlappingMerges { .. } => "overlapping_merges",
            ReconcileError::NotATree { .. } => "not_a_tree",
            ReconcileError::TokenMapLength { .. } => "token_map_length",
            ReconcileError::BadSpan { .. } => "bad_span",
        }
    }
}

/// Applies an alignment record to a sentence.
///
/// Each merge group collapses into its first member. The merged node takes
/// the concatenated form and records the original forms under `MergedForms`
/// in MISC. It keeps the first member's head and relation unless that head
/// is inside the group, in which case it takes those of the first member
/// attached outside the group. Dependents of any member reattach to the
/// merged node. Results that are no longer trees are rejected.
pub fn align_and_reconcile(sentence: &Sentence, record: &AlignmentRecord) -> Result<Reconciled, ReconcileError> {
    let sent_id = sentence.sent_id().to_string();
    if record.sent_id != sent_id {
        return Err(ReconcileError::IdMismatch {
            expected: sent_id,
            found: record.sent_id.clone(),
        });
    }
    if record.status == AlignStatus::Removed {
        return Ok(Reconciled::Removed);
    }

    let tokens = sentence.tokens();
    let n = tokens.len();
    // representative[i] = surviving 1-based index for old token i (1-based).
    let mut representative: Vec<usize> = (0..=n).collect();
    let mut in_group = vec![false; n + 1];
    let mut merged_tokens: HashMap<usize, Token> = HashMap::new();

    for group in &record.merges {
        let contiguous = !group.is_empty()
            && group.windows(2).all(|w| w[1] == w[0] + 1)
            && group[0] >= 1
            && *group.last().unwrap() <= n;
        if !contiguous {
            return Err(ReconcileError::MergeNotContiguous {
                sent_id,
                group: group.clone(),
            });
        }
        for &member in group {
            if in_group[member] {
                return Err(ReconcileError::OverlappingMerges { sent_id, token: member });
            }
            in_group[member] = true;
        }
        let (first, last) = (group[0], *group.last().unwrap());
        let inside = |i: usize| (first..=last).contains(&i);
        // The first member keeps its head when that head lies outside the
        // group; otherwise the group's first external attachment is used.
        let anchor = group
            .iter()
            .copied()
            .find(|&m| !inside(tokens[m - 1].head))
            .expect("a group inside a tree has an external attachment");

        let mut survivor = tokens[first - 1].clone();
        survivor.head = tokens[anchor - 1].head;
        survivor.deprel = tokens[anchor - 1].deprel.clone();
        survivor.form = group.iter().map(|&m| tokens[m - 1].form.as_str()).collect();
        let originals: Vec<&str> = group.iter().map(|&m| tokens[m - 1].form.as_str()).collect();
        survivor.misc.set("MergedForms", &originals.join("+"));
        merged_tokens.insert(first, survivor);
        for &member in group {
            representative[member] = first;
        }
    }

    let mut new_index = vec![0usize; n + 1];
    let mut next = 0;
    for old in 1..=n {
        if representative[old] == old {
            next += 1;
            new_index[old] = next;
        }
    }
    let remap = |old_head: usize| {
        if old_head == 0 {
            0
        } else {
            new_index[representative[old_head]]
        }
    };

    let mut reconciled = Vec::with_capacity(next);
    for old in 1..=n {
        if representative[old] != old {
            continue;
        }
        let mut token = merged_tokens.remove(&old).unwrap_or_else(|| tokens[old - 1].clone());
        token.index = new_index[old];
        token.head = remap(token.head);
        reconciled.push(token);
    }

    check_tree(&reconciled).map_err(|source| ReconcileError::NotATree {
        sent_id: sent_id.clone(),
        source,
    })?;
    if record.token_map.len() != reconciled.len() {
        return Err(ReconcileError::TokenMapLength {
            sent_id,
            expected: reconciled.len(),
            found: record.token_map.len(),
        });
    }
    record.check_spans()?;

    Ok(Reconciled::Kept(Sentence {
        sent_id,
        comments: sentence.comments().to_vec(),
        tokens: reconciled,
    }))
}

/// Which sentences were dropped during reconciliation, and why.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ReconcileLog {
    pub kept: usize,
    pub removed: Vec<(String, String)>,
}

/// Reconciles a corpus against its alignment records, dropping sentences
/// that are removed, lack a record, or fail to reconcile.
pub fn reconcile_corpus(
    corpus: &[Sentence],
    records: &HashMap<String, AlignmentRecord>,
) -> (Vec<Sentence>, ReconcileLog) {
    let mut kept = Vec::new();
    let mut log = ReconcileLog::default();
    for sentence in corpus {
        let reason = match records.get(sentence.sent_id()) {
            None => "missing_alignment".to_string(),
            Some(record) => match align_and_reconcile(sentence, record) {
                Ok(Reconciled::Kept(s)) => {
                    kept.push(s);
                    continue;
                }
                Ok(Reconciled::Removed) => record
                    .reason
                    .clone()
                    .unwrap_or_else(|| "removed_by_aligner".to_string()),
                Err(e) => {
                    log::warn!("dropping sentence: {e}");
                    e.reason_code().to_string()
                }
            },
        };
        log.removed.push((sentence.sent_id().to_string(), reason));
    }
    log.kept = kept.len();
    (kept, log)
}

/// Reads alignment JSONL; blank lines are ignored.
pub fn read_alignments(text: &str) -> Result<Vec<AlignmentRecord>, (usize, serde_json::Error)> {
    text.lines()
        .enumerate()
        .filter(|(_, line)| !line.trim().is_empty())
        .map(|(i, line)| serde_json::from_str(line).map_err(|e| (i + 1, e)))
        .collect()
}

pub fn write_alignments(records: &[AlignmentRecord]) -> String {
    let mut out = String::new();
    for record in records {
        out.push_str(&serde_json::to_string(record).expect("records serialize"));
        out.push('\n');
    }
    out
}
