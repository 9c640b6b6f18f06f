use std::collections::BTreeMap;

use jabberprobe::lexicon::{inflect, inflect_extended, load_lexicon, variety_counts, write_inflection_table};
use jabberprobe::substitute::{substitute_corpus, write_substitution_log, SubstitutionPlan};
use jabberprobe::treebank::write_conllu;
use serde::Serialize;

use crate::artifacts::{sha256_hex, write_atomic};
use crate::config::Config;
use crate::data::read_corpus;
use crate::error::{CliError, Result};

#[derive(Serialize)]
struct Manifest {
    config_hash: String,
    seed: u64,
    source: String,
    sentences: usize,
    tokens: usize,
    substituted_tokens: usize,
    lexicon_entries: usize,
    surface_types: usize,
    inflected_varieties: usize,
    /// File name to SHA-256.
    files: BTreeMap<String, String>,
}

/// Builds the Jabberwocky test corpus from the test treebank and lexicon.
pub fn run(config: &Config) -> Result<()> {
    let test_path = config.require("treebank_test")?;
    let lexicon_path = config.require("lexicon")?;
    let corpus = read_corpus(test_path)?;
    let entries = load_lexicon(lexicon_path).map_err(|e| CliError::data(lexicon_path.display(), e))?;

    let mut plan = SubstitutionPlan::new(config.seed);
    plan.probability = config.substitution_probability;
    let forms: Vec<_> = if config.past_tense {
        plan = plan.with_past_tense();
        entries.iter().flat_map(inflect_extended).collect()
    } else {
        entries.iter().flat_map(inflect).collect()
    };
    let (types, varieties) = variety_counts(&forms);
    let jabberwocky =
        substitute_corpus(&corpus, &forms, &plan).map_err(|e| CliError::Config(format!("lexicon: {e}")))?;

    let out_dir = config.output_dir.join("jabberwocky");
    let outputs = [
        ("test.conllu", write_conllu(&jabberwocky.sentences)),
        ("substitutions.tsv", write_substitution_log(&jabberwocky.log)),
        ("inflections.tsv", write_inflection_table(&forms)),
    ];
    let mut files = BTreeMap::new();
    for (name, text) in &outputs {
        write_atomic(&out_dir.join(name), text.as_bytes())?;
        files.insert(name.to_string(), sha256_hex(text.as_bytes()));
    }
    let manifest = Manifest {
        config_hash: config.hash(),
        seed: config.seed,
        source: test_path.display().to_string(),
        sentences: corpus.len(),
        tokens: corpus.iter().map(|s| s.len()).sum(),
        substituted_tokens: jabberwocky.log.len(),
        lexicon_entries: entries.len(),
        surface_types: types,
        inflected_varieties: varieties,
        files,
    };
    write_atomic(
        &out_dir.join("manifest.json"),
        &serde_json::to_vec_pretty(&manifest).expect("manifest serializes"),
    )?;
    log::info!(
        "substituted {} of {} tokens in {} sentences",
        manifest.substituted_tokens,
        manifest.tokens,
        manifest.sentences
    );
    Ok(())
}
