//! Jabberwocky corpus generation.
//!
//! Every token whose UPOS and features match an enabled bundle is replaced
//! by a randomly drawn pseudoword form realising that bundle. Only FORM,
//! LEMMA and MISC change; the original form and lemma are kept in MISC so
//! the substitution can be undone.

use std::collections::HashMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::lexicon::{bundle_inventory, past_tense_bundles, Bundle, InflectedForm, Pos};
use crate::treebank::{Sentence, Token};

pub const DEFAULT_PROVENANCE_KEY: &str = "OrigForm";
pub const DEFAULT_LEMMA_KEY: &str = "OrigLemma";

#[derive(Debug, Clone, PartialEq)]
pub struct SubstitutionPlan {
    pub seed: u64,
    pub bundles: Vec<Bundle>,
    /// MISC key that stores the replaced form.
    pub provenance_key: String,
    /// MISC key that stores the replaced lemma.
    pub lemma_key: String,
    /// Chance that an eligible token is replaced; 1 replaces all of them.
    pub probability: f64,
}

impl SubstitutionPlan {
    pub fn new(seed: u64) -> Self {
        SubstitutionPlan {
            seed,
            bundles: bundle_inventory(),
            provenance_key: DEFAULT_PROVENANCE_KEY.to_string(),
            lemma_key: DEFAULT_LEMMA_KEY.to_string(),
            probability: 1.0,
        }
    }

    /// Also substitutes past-tense and past-participle verbs.
    pub fn with_past_tense(mut self) -> Self {
        for bundle in past_tense_bundles() {
            if !self.bundles.contains(&bundle) {
                self.bundles.push(bundle);
            }
        }
        self
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum SubstituteError {
    #[error("no {pos} forms available for bundle {bundle:?}")]
    NoForms { bundle: Bundle, pos: Pos },
    #[error("substitution probability {0} is outside [0, 1]")]
    BadProbability(f64),
}

/// The most specific enabled bundle matching the token, if any.
pub fn substitutable_slot(token: &Token, bundles: &[Bundle]) -> Option<Bundle> {
    let pos: Pos = token.upos.parse().ok()?;
    bundles
        .iter()
        .copied()
        .filter(|b| b.applies_to(pos))
        .filter(|b| b.features().iter().all(|(k, v)| token.feats.has(k, v)))
        .fold(None, |best: Option<Bundle>, b| match best {
            Some(cur) if cur.features().len() >= b.features().len() => Some(cur),
            _ => Some(b),
        })
}

/// One replaced token.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SubstitutionRecord {
    pub sent_id: String,
    pub token: usize,
    pub original: String,
    pub replacement: String,
    pub bundle: Bundle,
}

#[derive(Debug, Clone, PartialEq)]
pub struct JabberwockyCorpus {
    pub sentences: Vec<Sentence>,
    pub log: Vec<SubstitutionRecord>,
}

/// Gives `surface` the casing shape of `original`.
fn match_case(original: &str, surface: &str) -> String {
    let letters: Vec<char> = original.chars().filter(|c| c.is_alphabetic()).collect();
    if letters.len() > 1 && letters.iter().all(|c| c.is_uppercase()) {
        return surface.to_uppercase();
    }
    match original.chars().next() {
        Some(first) if first.is_uppercase() => {
            let mut chars = surface.chars();
            chars
                .next()
                .map(|c| c.to_uppercase().chain(chars).collect())
                .unwrap_or_default()
        }
        _ => surface.to_string(),
    }
}

/// Replaces eligible tokens with pseudoword forms drawn uniformly (with
/// replacement) from `table`. The draw sequence is fixed by corpus order and
/// `plan.seed`.
pub fn substitute_corpus(
    corpus: &[Sentence],
    table: &[InflectedForm],
    plan: &SubstitutionPlan,
) -> Result<JabberwockyCorpus, SubstituteError> {
    if !(0.0..=1.0).contains(&plan.probability) {
        return Err(SubstituteError::BadProbability(plan.probability));
    }
    let mut by_slot: HashMap<(Pos, Bundle), Vec<&InflectedForm>> = HashMap::new();
    for form in table {
        by_slot.entry((form.upos, form.bundle)).or_default().push(form);
    }
    for &bundle in &plan.bundles {
        for &pos in bundle.classes() {
            if by_slot.get(&(pos, bundle)).is_none_or(|forms| forms.is_empty()) {
                return Err(SubstituteError::NoForms { bundle, pos });
            }
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(plan.seed);
    let mut log = Vec::new();
    let sentences = corpus
        .iter()
        .map(|sentence| {
            sentence.map_tokens(|token| {
                let Some(bundle) = substitutable_slot(token, &plan.bundles) else {
                    return;
                };
                if token.form.contains('|') || token.lemma.contains('|') {
                    return;
                }
                if token.misc.get(&plan.provenance_key).is_some() {
                    return;
                }
                if plan.probability < 1.0 && rng.random::<f64>() >= plan.probability {
                    return;
                }
                let pos: Pos = token.upos.parse().expect("slot implies a known POS");
                let forms = &by_slot[&(pos, bundle)];
                let choice = forms[rng.random_range(0..forms.len())];
                let replacement = match_case(&token.form, &choice.surface);
                log.push(SubstitutionRecord {
                    sent_id: sentence.sent_id().to_string(),
                    token: token.index,
                    original: token.form.clone(),
                    replacement: replacement.clone(),
                    bundle,
                });
                token.misc.set(&plan.provenance_key, &token.form);
                token.misc.set(&plan.lemma_key, &token.lemma);
                token.form = replacement;
                token.lemma = choice.lemma.clone();
            })
        })
        .collect();
    Ok(JabberwockyCorpus { sentences, log })
}

/// Undoes [`substitute_corpus`] using the provenance keys in MISC.
pub fn strip_substitutions(corpus: &[Sentence], plan: &SubstitutionPlan) -> Vec<Sentence> {
    corpus
        .iter()
        .map(|sentence| {
            sentence.map_tokens(|token| {
                if let Some(form) = token.misc.remove(&plan.provenance_key) {
                    token.form = form;
                    if let Some(lemma) = token.misc.remove(&plan.lemma_key) {
                        token.lemma = lemma;
                    }
                }
            })
        })
        .collect()
}

/// TSV log: sent_id, token index, original, replacement, bundle.
pub fn write_substitution_log(records: &[SubstitutionRecord]) -> String {
    let mut out = String::from("sent_id\ttoken\toriginal\treplacement\tbundle\n");
    for r in records {
        out.push_str(&format!(
            "{}\t{}\t{}\t{}\t{}\n",
            r.sent_id,
            r.token,
            r.original,
            r.replacement,
            r.bundle.feature_string()
        ));
    }
    out
}
