//! A small experiment directory built from the bundled treebank fixture.
//!
//! The toy model's embeddings are path indicators plus noise. Layer 0 is
//! noise only, so it carries no syntax; deeper layers carry more.

#![allow(dead_code)]

use std::path::{Path, PathBuf};

use clap::Parser;
use jabberprobe::embeddings::{write_embedding_file, EmbeddingSet};
use jabberprobe::probes::synthetic::path_indicator_embeddings;
use jabberprobe::treebank::{parse_conllu, write_conllu, AlignmentRecord};
use jabberprobe::Sentence;
use jabberprobe_cli::{run, Cli};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const FIXTURE: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/../core/fixtures/ewt_sample.conllu");
pub const LEXICON: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/../core/fixtures/pseudowords.tsv");
pub const TOY_DIM: usize = 32;

pub fn fixture() -> Vec<Sentence> {
    parse_conllu(&std::fs::read_to_string(FIXTURE).unwrap()).unwrap()
}

pub struct Experiment {
    pub dir: tempfile::TempDir,
}

impl Experiment {
    /// Train/dev/test splits of 120/40/40 sentences and a config file.
    pub fn new(extra_config: &str) -> Self {
        let dir = tempfile::tempdir().unwrap();
        let corpus = fixture();
        let splits = [
            ("train", &corpus[..120]),
            ("dev", &corpus[120..160]),
            ("test", &corpus[160..]),
        ];
        for (name, sentences) in splits {
            std::fs::write(dir.path().join(format!("{name}.conllu")), write_conllu(sentences)).unwrap();
        }
        let e = Experiment { dir };
        let config = format!(
            "seed = 7\n\
             output_dir = \"{out}\"\n\
             treebank_train = \"{p}/train.conllu\"\n\
             treebank_dev = \"{p}/dev.conllu\"\n\
             treebank_test = \"{p}/test.conllu\"\n\
             lexicon = \"{LEXICON}\"\n\
             embeddings_dir = \"{p}/emb\"\n\
             {extra_config}\n",
            out = e.out().display(),
            p = e.root().display(),
        );
        std::fs::write(e.config(), config).unwrap();
        e
    }

    pub fn root(&self) -> &Path {
        self.dir.path()
    }

    pub fn out(&self) -> PathBuf {
        self.root().join("out")
    }

    pub fn config(&self) -> PathBuf {
        self.root().join("config.toml")
    }

    /// Runs a subcommand with `--config` plus `args`.
    pub fn run(&self, args: &[&str]) -> Result<(), jabberprobe_cli::error::CliError> {
        let config = self.config();
        let mut argv = vec!["jabberprobe", "--config", config.to_str().unwrap()];
        argv.extend_from_slice(args);
        run(&Cli::try_parse_from(argv).unwrap())
    }

    /// Writes toy embeddings and identity alignments for every split,
    /// including the Jabberwocky corpus when it exists.
    pub fn write_toy_model(&self, model: &str, layers: &[u32]) {
        let dir = self.root().join("emb").join(model);
        std::fs::create_dir_all(&dir).unwrap();
        let jabberwocky = self.out().join("jabberwocky/test.conllu");
        let mut splits = vec![
            ("train", self.root().join("train.conllu")),
            ("dev", self.root().join("dev.conllu")),
            ("test", self.root().join("test.conllu")),
        ];
        if jabberwocky.exists() {
            splits.push(("jabberwocky", jabberwocky));
        }
        for (split, path) in splits {
            let corpus = parse_conllu(&std::fs::read_to_string(path).unwrap()).unwrap();
            let jsonl: String = corpus
                .iter()
                .map(|s| serde_json::to_string(&AlignmentRecord::identity(s)).unwrap() + "\n")
                .collect();
            std::fs::write(dir.join(format!("{split}.align.jsonl")), jsonl).unwrap();
            for &layer in layers {
                let set = toy_embeddings(&corpus, model, layer, split);
                write_embedding_file(&set, dir.join(format!("{split}.layer{layer}.jemb"))).unwrap();
            }
        }
    }
}

pub fn toy_embeddings(corpus: &[Sentence], model: &str, layer: u32, split: &str) -> EmbeddingSet {
    let signal = (layer as f64 / 8.0).min(1.0);
    let mut rng = ChaCha8Rng::seed_from_u64(layer as u64 * 1000 + split.len() as u64);
    let mut set = EmbeddingSet::new(model, layer, TOY_DIM, split);
    for s in corpus {
        let planted = path_indicator_embeddings(s, TOY_DIM);
        let m = planted.mapv(|v| (signal * v + 0.3 * rng.random_range(-1.0..1.0)) as f32);
        set.insert(s.sent_id(), m).unwrap();
    }
    set
}
