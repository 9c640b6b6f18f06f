//! Locating and loading corpora, alignments and embeddings.
//!
//! Extractor output lives under `embeddings_dir/{model}/`:
//! `{split}.layer{L}.jemb` holds subword matrices and `{split}.align.jsonl`
//! the alignment records that map them onto UD tokens.

use std::cell::OnceCell;
use std::collections::HashMap;
use std::path::{Path, PathBuf};

use jabberprobe::embeddings::{
    compose_fast_pos, read_embedding_file, token_vectors_from_subwords, PositionTable, WordVectors,
};
use jabberprobe::probes::ProbeExample;
use jabberprobe::treebank::{parse_conllu, read_alignments, reconcile_corpus, AlignmentRecord};
use jabberprobe::Sentence;

use crate::config::{Config, FAST_POS};
use crate::error::{CliError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Split {
    Train,
    Dev,
    Test,
    Jabberwocky,
}

impl Split {
    pub fn name(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Dev => "dev",
            Split::Test => "test",
            Split::Jabberwocky => "jabberwocky",
        }
    }
}

pub fn read_corpus(path: &Path) -> Result<Vec<Sentence>> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::data(path.display(), e))?;
    parse_conllu(&text).map_err(|e| CliError::data(path.display(), e))
}

pub fn embedding_path(dir: &Path, model: &str, split: Split, layer: u32) -> PathBuf {
    dir.join(model).join(format!("{}.layer{layer}.jemb", split.name()))
}

pub fn alignment_path(dir: &Path, model: &str, split: Split) -> PathBuf {
    dir.join(model).join(format!("{}.align.jsonl", split.name()))
}

pub fn punct_flags(sentence: &Sentence) -> Vec<bool> {
    sentence.tokens().iter().map(|t| t.upos == "PUNCT").collect()
}

fn read_alignment_map(path: &Path) -> Result<HashMap<String, AlignmentRecord>> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::data(path.display(), e))?;
    let records =
        read_alignments(&text).map_err(|(line, e)| CliError::Data(format!("{} line {line}: {e}", path.display())))?;
    Ok(records.into_iter().map(|r| (r.sent_id.clone(), r)).collect())
}

/// Probe inputs for one (model, split, layer), with a punctuation flag per
/// token for metric masking.
pub struct Examples {
    pub items: Vec<ProbeExample>,
    pub punct: Vec<Vec<bool>>,
}

/// Loads corpora and embeddings on demand, caching what is reused.
pub struct DataSource<'a> {
    config: &'a Config,
    corpora: std::cell::RefCell<HashMap<Split, std::rc::Rc<Vec<Sentence>>>>,
    fast_pos: OnceCell<(WordVectors, PositionTable)>,
}

impl<'a> DataSource<'a> {
    pub fn new(config: &'a Config) -> Self {
        DataSource {
            config,
            corpora: Default::default(),
            fast_pos: OnceCell::new(),
        }
    }

    pub fn corpus(&self, split: Split) -> Result<std::rc::Rc<Vec<Sentence>>> {
        if let Some(c) = self.corpora.borrow().get(&split) {
            return Ok(c.clone());
        }
        let path = match split {
            Split::Train => self.config.require("treebank_train")?.to_path_buf(),
            Split::Dev => self.config.require("treebank_dev")?.to_path_buf(),
            Split::Test => self.config.require("treebank_test")?.to_path_buf(),
            Split::Jabberwocky => {
                let path = self.config.jabberwocky_path();
                if !path.exists() {
                    return Err(CliError::Config(format!(
                        "Jabberwocky corpus {} does not exist; run `generate` or set `jabberwocky_test`",
                        path.display()
                    )));
                }
                path
            }
        };
        let corpus = std::rc::Rc::new(read_corpus(&path)?);
        self.corpora.borrow_mut().insert(split, corpus.clone());
        Ok(corpus)
    }

    fn fast_pos_inputs(&self) -> Result<&(WordVectors, PositionTable)> {
        if let Some(inputs) = self.fast_pos.get() {
            return Ok(inputs);
        }
        let words_path = self.config.require("word_vectors")?;
        let table_path = self.config.require("position_table")?;
        let words = WordVectors::read_file(words_path).map_err(|e| CliError::data(words_path.display(), e))?;
        let table = read_embedding_file(table_path)
            .and_then(|set| PositionTable::from_embedding_set(&set))
            .map_err(|e| CliError::data(table_path.display(), e))?;
        Ok(self.fast_pos.get_or_init(|| (words, table)))
    }

    /// Token-level probe inputs for one (model, split, layer). Sentences the
    /// aligner removed, or that fail reconciliation, are left out.
    pub fn examples(&self, model: &str, split: Split, layer: u32) -> Result<Examples> {
        let corpus = self.corpus(split)?;
        let to_examples = |sentences: &[Sentence], get: &dyn Fn(&Sentence) -> Result<ndarray::Array2<f32>>| {
            let items = sentences
                .iter()
                .map(|s| {
                    let vectors = get(s)?;
                    ProbeExample::new(s, &vectors).map_err(|e| CliError::Data(format!("sentence {}: {e}", s.sent_id())))
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(Examples {
                items,
                punct: sentences.iter().map(punct_flags).collect(),
            })
        };

        if model == FAST_POS {
            let (words, table) = self.fast_pos_inputs()?;
            let (set, _) = compose_fast_pos(&corpus, words, table, FAST_POS, split.name());
            let kept: Vec<Sentence> = corpus
                .iter()
                .filter(|s| set.sentences.contains_key(s.sent_id()))
                .cloned()
                .collect();
            return to_examples(&kept, &|s| Ok(set.sentences[s.sent_id()].clone()));
        }

        let dir = self.config.require("embeddings_dir")?;
        let records = read_alignment_map(&alignment_path(dir, model, split))?;
        let (kept, log) = reconcile_corpus(&corpus, &records);
        if !log.removed.is_empty() {
            log::info!(
                "{model} {}: {} sentences kept, {} removed",
                split.name(),
                log.kept,
                log.removed.len()
            );
        }
        let path = embedding_path(dir, model, split, layer);
        let set = read_embedding_file(&path).map_err(|e| CliError::data(path.display(), e))?;
        if set.layer != layer {
            return Err(CliError::Data(format!(
                "{} declares layer {}, expected {layer}",
                path.display(),
                set.layer
            )));
        }
        to_examples(&kept, &|s| {
            let raw = set.get(s.sent_id()).ok_or_else(|| {
                CliError::Data(format!("{} has no matrix for sentence {}", path.display(), s.sent_id()))
            })?;
            token_vectors_from_subwords(raw, &records[s.sent_id()]).map_err(|e| CliError::data(path.display(), e))
        })
    }
}
