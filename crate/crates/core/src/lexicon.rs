//! Pseudoword lexicon and regular English inflection.
//!
//! Each lemma is expanded into the forms licensed by the UD feature bundles
//! the substitution step knows how to match. Spelling rules:
//!
//! - `-s`/`-es`: `+es` after s, x, z, ch, sh; consonant + y becomes `-ies`.
//! - `-ing`: a final silent e is dropped unless the word ends in `ee`.
//! - `-ed`, `-er`, `-est`: a final e absorbs the suffix's e; consonant + y
//!   becomes `i`.
//! - Vowel-initial suffixes double the final consonant of a one-syllable
//!   word ending consonant-vowel-consonant, unless that consonant is w, x
//!   or y.

use std::collections::HashSet;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Pos {
    Noun,
    Verb,
    Adj,
    Adv,
}

impl Pos {
    pub fn as_upos(self) -> &'static str {
        match self {
            Pos::Noun => "NOUN",
            Pos::Verb => "VERB",
            Pos::Adj => "ADJ",
            Pos::Adv => "ADV",
        }
    }
}

impl FromStr for Pos {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "NOUN" => Ok(Pos::Noun),
            "VERB" => Ok(Pos::Verb),
            "ADJ" => Ok(Pos::Adj),
            "ADV" => Ok(Pos::Adv),
            other => Err(format!("unknown part of speech `{other}`")),
        }
    }
}

impl fmt::Display for Pos {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_upos())
    }
}

/// A UD feature bundle that a pseudoword form can realise.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Bundle {
    NounSing,
    NounPlur,
    VerbInf,
    VerbPres3Sg,
    VerbPres,
    VerbPresPart,
    DegreeUnmarked,
    DegreeCmp,
    DegreeSup,
    /// Optional extension: finite past tense.
    VerbPast,
    /// Optional extension: past participle.
    VerbPastPart,
}

impl Bundle {
    /// Required features, in UD's alphabetical order.
    pub fn features(self) -> &'static [(&'static str, &'static str)] {
        match self {
            Bundle::NounSing => &[("Number", "Sing")],
            Bundle::NounPlur => &[("Number", "Plur")],
            Bundle::VerbInf => &[("VerbForm", "Inf")],
            Bundle::VerbPres3Sg => &[
                ("Mood", "Ind"),
                ("Number", "Sing"),
                ("Person", "3"),
                ("Tense", "Pres"),
                ("VerbForm", "Fin"),
            ],
            Bundle::VerbPres => &[("Mood", "Ind"), ("Tense", "Pres"), ("VerbForm", "Fin")],
            Bundle::VerbPresPart => &[("Tense", "Pres"), ("VerbForm", "Part")],
            Bundle::DegreeUnmarked => &[],
            Bundle::DegreeCmp => &[("Degree", "Cmp")],
            Bundle::DegreeSup => &[("Degree", "Sup")],
            Bundle::VerbPast => &[("Mood", "Ind"), ("Tense", "Past"), ("VerbForm", "Fin")],
            Bundle::VerbPastPart => &[("Tense", "Past"), ("VerbForm", "Part")],
        }
    }

    /// Parts of speech the bundle applies to.
    pub fn classes(self) -> &'static [Pos] {
        match self {
            Bundle::NounSing | Bundle::NounPlur => &[Pos::Noun],
            Bundle::DegreeUnmarked | Bundle::DegreeCmp | Bundle::DegreeSup => &[Pos::Adj, Pos::Adv],
            _ => &[Pos::Verb],
        }
    }

    pub fn applies_to(self, pos: Pos) -> bool {
        self.classes().contains(&pos)
    }

    pub fn is_past_extension(self) -> bool {
        matches!(self, Bundle::VerbPast | Bundle::VerbPastPart)
    }

    /// FEATS-style rendering, `_` for the unmarked bundle.
    pub fn feature_string(self) -> String {
        let features = self.features();
        if features.is_empty() {
            return "_".to_string();
        }
        features
            .iter()
            .map(|(k, v)| format!("{k}={v}"))
            .collect::<Vec<_>>()
            .join("|")
    }

    fn from_parts(pos: Pos, features: &str) -> Option<Bundle> {
        bundle_inventory()
            .into_iter()
            .chain(past_tense_bundles())
            .find(|b| b.applies_to(pos) && b.feature_string() == features)
    }
}

/// The nine bundles substitution supports by default.
pub fn bundle_inventory() -> Vec<Bundle> {
    vec![
        Bundle::NounSing,
        Bundle::NounPlur,
        Bundle::VerbInf,
        Bundle::VerbPres3Sg,
        Bundle::VerbPres,
        Bundle::VerbPresPart,
        Bundle::DegreeUnmarked,
        Bundle::DegreeCmp,
        Bundle::DegreeSup,
    ]
}

pub fn past_tense_bundles() -> [Bundle; 2] {
    [Bundle::VerbPast, Bundle::VerbPastPart]
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct PseudowordEntry {
    pub lemma: String,
    pub pos: Pos,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct InflectedForm {
    pub surface: String,
    pub lemma: String,
    pub upos: Pos,
    pub bundle: Bundle,
}

#[derive(Debug, Error)]
pub enum LexiconError {
    #[error("line {line}: expected `lemma<TAB>pos`")]
    MissingColumn { line: usize },
    #[error("line {line}: lemma `{lemma}` is not ASCII alphabetic")]
    BadLemma { line: usize, lemma: String },
    #[error("line {line}: {message}")]
    UnknownPos { line: usize, message: String },
    #[error("line {line}: bundle `{bundle}` is not valid for {upos}")]
    UnknownBundle { line: usize, upos: String, bundle: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Parses a `lemma<TAB>pos` lexicon. Blank lines, `#` comments and a
/// `lemma pos` header are skipped; duplicate rows are dropped with a warning.
pub fn parse_lexicon(text: &str) -> Result<Vec<PseudowordEntry>, LexiconError> {
    let mut seen = HashSet::new();
    let mut entries = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let row = raw.trim_end_matches('\r');
        if row.trim().is_empty() || row.starts_with('#') {
            continue;
        }
        let mut cols = row.split('\t');
        let (Some(lemma), Some(pos)) = (cols.next(), cols.next()) else {
            return Err(LexiconError::MissingColumn { line });
        };
        let (lemma, pos) = (lemma.trim(), pos.trim());
        if lemma == "lemma" && pos == "pos" {
            continue;
        }
        if lemma.is_empty() || !lemma.bytes().all(|b| b.is_ascii_alphabetic()) {
            return Err(LexiconError::BadLemma {
                line,
                lemma: lemma.to_string(),
            });
        }
        let pos: Pos = pos
            .parse()
            .map_err(|message| LexiconError::UnknownPos { line, message })?;
        let entry = PseudowordEntry {
            lemma: lemma.to_ascii_lowercase(),
            pos,
        };
        if seen.insert(entry.clone()) {
            entries.push(entry);
        } else {
            log::warn!("line {line}: duplicate entry {} {}", entry.lemma, entry.pos);
        }
    }
    Ok(entries)
}

pub fn load_lexicon(path: impl AsRef<Path>) -> Result<Vec<PseudowordEntry>, LexiconError> {
    parse_lexicon(&std::fs::read_to_string(path)?)
}

fn is_vowel(c: u8) -> bool {
    matches!(c, b'a' | b'e' | b'i' | b'o' | b'u')
}

fn ends_consonant_y(w: &[u8]) -> bool {
    w.len() >= 2 && w[w.len() - 1] == b'y' && !is_vowel(w[w.len() - 2])
}

fn sibilant(w: &str) -> bool {
    ["s", "x", "z", "ch", "sh"].iter().any(|s| w.ends_with(s))
}

/// Counts vowel groups; `y` is a vowel after a consonant.
fn vowel_groups(w: &[u8]) -> usize {
    let mut groups = 0;
    let mut in_group = false;
    for (i, &c) in w.iter().enumerate() {
        let vowel = is_vowel(c) || (c == b'y' && i > 0 && !is_vowel(w[i - 1]));
        if vowel && !in_group {
            groups += 1;
        }
        in_group = vowel;
    }
    groups
}

fn doubles_final_consonant(w: &[u8]) -> bool {
    let n = w.len();
    n >= 3
        && vowel_groups(w) == 1
        && !is_vowel(w[n - 1])
        && !matches!(w[n - 1], b'w' | b'x' | b'y')
        && is_vowel(w[n - 2])
        && !is_vowel(w[n - 3])
}

/// Appends `-s`, or `-es` where spelling requires it.
pub fn add_s(word: &str) -> String {
    if sibilant(word) {
        format!("{word}es")
    } else if ends_consonant_y(word.as_bytes()) {
        format!("{}ies", &word[..word.len() - 1])
    } else {
        format!("{word}s")
    }
}

/// Appends one of the vowel-initial suffixes `ing`, `ed`, `er`, `est`.
pub fn add_vowel_suffix(word: &str, suffix: &str) -> String {
    debug_assert!(matches!(suffix, "ing" | "ed" | "er" | "est"));
    let bytes = word.as_bytes();
    let stem = &word[..word.len() - 1];
    if word.ends_with('e') {
        if let Some(rest) = suffix.strip_prefix('e') {
            return format!("{word}{rest}");
        }
        if !word.ends_with("ee") {
            return format!("{stem}{suffix}");
        }
    }
    if suffix != "ing" && ends_consonant_y(bytes) {
        return format!("{stem}i{suffix}");
    }
    if doubles_final_consonant(bytes) {
        let last = &word[word.len() - 1..];
        return format!("{word}{last}{suffix}");
    }
    format!("{word}{suffix}")
}

fn form(e: &PseudowordEntry, surface: String, bundle: Bundle) -> InflectedForm {
    InflectedForm {
        surface,
        lemma: e.lemma.clone(),
        upos: e.pos,
        bundle,
    }
}

/// Regular forms for the default bundles: 2 for nouns, 4 for verbs and 3
/// for adjectives and adverbs.
pub fn inflect(e: &PseudowordEntry) -> Vec<InflectedForm> {
    let lemma = e.lemma.as_str();
    match e.pos {
        Pos::Noun => vec![
            form(e, lemma.to_string(), Bundle::NounSing),
            form(e, add_s(lemma), Bundle::NounPlur),
        ],
        Pos::Verb => vec![
            form(e, lemma.to_string(), Bundle::VerbInf),
            form(e, add_s(lemma), Bundle::VerbPres3Sg),
            form(e, lemma.to_string(), Bundle::VerbPres),
            form(e, add_vowel_suffix(lemma, "ing"), Bundle::VerbPresPart),
        ],
        Pos::Adj | Pos::Adv => vec![
            form(e, lemma.to_string(), Bundle::DegreeUnmarked),
            form(e, add_vowel_suffix(lemma, "er"), Bundle::DegreeCmp),
            form(e, add_vowel_suffix(lemma, "est"), Bundle::DegreeSup),
        ],
    }
}

/// [`inflect`] plus the past and past-participle forms of verbs.
pub fn inflect_extended(e: &PseudowordEntry) -> Vec<InflectedForm> {
    let mut forms = inflect(e);
    if e.pos == Pos::Verb {
        let past = add_vowel_suffix(&e.lemma, "ed");
        forms.push(form(e, past.clone(), Bundle::VerbPast));
        forms.push(form(e, past, Bundle::VerbPastPart));
    }
    forms
}

/// Distinct surface strings and distinct (surface, upos, bundle) varieties.
pub fn variety_counts(forms: &[InflectedForm]) -> (usize, usize) {
    let types: HashSet<&str> = forms.iter().map(|f| f.surface.as_str()).collect();
    let varieties: HashSet<(&str, Pos, Bundle)> =
        forms.iter().map(|f| (f.surface.as_str(), f.upos, f.bundle)).collect();
    (types.len(), varieties.len())
}

/// TSV with columns surface, lemma, upos, bundle.
pub fn write_inflection_table(forms: &[InflectedForm]) -> String {
    let mut out = String::from("surface\tlemma\tupos\tbundle\n");
    for f in forms {
        out.push_str(&format!(
            "{}\t{}\t{}\t{}\n",
            f.surface,
            f.lemma,
            f.upos,
            f.bundle.feature_string()
        ));
    }
    out
}

pub fn read_inflection_table(text: &str) -> Result<Vec<InflectedForm>, LexiconError> {
    let mut forms = Vec::new();
    for (i, row) in text.lines().enumerate() {
        let line = i + 1;
        if row.trim().is_empty() || (line == 1 && row.starts_with("surface\t")) {
            continue;
        }
        let cols: Vec<&str> = row.split('\t').collect();
        if cols.len() != 4 {
            return Err(LexiconError::MissingColumn { line });
        }
        let upos: Pos = cols[2]
            .parse()
            .map_err(|message| LexiconError::UnknownPos { line, message })?;
        let bundle = Bundle::from_parts(upos, cols[3]).ok_or_else(|| LexiconError::UnknownBundle {
            line,
            upos: cols[2].to_string(),
            bundle: cols[3].to_string(),
        })?;
        forms.push(InflectedForm {
            surface: cols[0].to_string(),
            lemma: cols[1].to_string(),
            upos,
            bundle,
        });
    }
    Ok(forms)
}
