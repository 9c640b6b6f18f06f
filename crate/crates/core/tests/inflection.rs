use jabberprobe::lexicon::{inflect, inflect_extended, Bundle, Pos, PseudowordEntry};
use proptest::prelude::*;

fn entry(lemma: &str, pos: Pos) -> PseudowordEntry {
    PseudowordEntry {
        lemma: lemma.to_string(),
        pos,
    }
}

fn surface(lemma: &str, pos: Pos, bundle: Bundle) -> String {
    inflect_extended(&entry(lemma, pos))
        .into_iter()
        .find(|f| f.bundle == bundle)
        .unwrap_or_else(|| panic!("{lemma} has no {bundle:?} form"))
        .surface
}

/// Regular English words whose spelling the rules must reproduce.
const ANALOGS: [(&str, Pos, Bundle, &str); 30] = [
    ("cat", Pos::Noun, Bundle::NounPlur, "cats"),
    ("box", Pos::Noun, Bundle::NounPlur, "boxes"),
    ("bus", Pos::Noun, Bundle::NounPlur, "buses"),
    ("church", Pos::Noun, Bundle::NounPlur, "churches"),
    ("dish", Pos::Noun, Bundle::NounPlur, "dishes"),
    ("buzz", Pos::Noun, Bundle::NounPlur, "buzzes"),
    ("fly", Pos::Noun, Bundle::NounPlur, "flies"),
    ("day", Pos::Noun, Bundle::NounPlur, "days"),
    ("fry", Pos::Verb, Bundle::VerbPres3Sg, "fries"),
    ("pass", Pos::Verb, Bundle::VerbPres3Sg, "passes"),
    ("play", Pos::Verb, Bundle::VerbPres3Sg, "plays"),
    ("tap", Pos::Verb, Bundle::VerbPresPart, "tapping"),
    ("bake", Pos::Verb, Bundle::VerbPresPart, "baking"),
    ("see", Pos::Verb, Bundle::VerbPresPart, "seeing"),
    ("agree", Pos::Verb, Bundle::VerbPresPart, "agreeing"),
    ("fry", Pos::Verb, Bundle::VerbPresPart, "frying"),
    ("fix", Pos::Verb, Bundle::VerbPresPart, "fixing"),
    ("snow", Pos::Verb, Bundle::VerbPresPart, "snowing"),
    ("visit", Pos::Verb, Bundle::VerbPresPart, "visiting"),
    ("dream", Pos::Verb, Bundle::VerbPresPart, "dreaming"),
    ("stop", Pos::Verb, Bundle::VerbPast, "stopped"),
    ("bake", Pos::Verb, Bundle::VerbPast, "baked"),
    ("fry", Pos::Verb, Bundle::VerbPastPart, "fried"),
    ("play", Pos::Verb, Bundle::VerbPast, "played"),
    ("big", Pos::Adj, Bundle::DegreeCmp, "bigger"),
    ("happy", Pos::Adj, Bundle::DegreeSup, "happiest"),
    ("large", Pos::Adj, Bundle::DegreeCmp, "larger"),
    ("free", Pos::Adj, Bundle::DegreeSup, "freest"),
    ("new", Pos::Adj, Bundle::DegreeCmp, "newer"),
    ("fast", Pos::Adv, Bundle::DegreeSup, "fastest"),
];

#[test]
fn real_word_analogs() {
    let mut wrong = Vec::new();
    for (lemma, pos, bundle, expected) in ANALOGS {
        let got = surface(lemma, pos, bundle);
        if got != expected {
            wrong.push(format!("{lemma} {bundle:?}: {got} (expected {expected})"));
        }
    }
    assert!(wrong.is_empty(), "{wrong:#?}");
}

#[test]
fn pseudowords_from_the_figure() {
    assert_eq!(surface("briticist", Pos::Noun, Bundle::NounPlur), "briticists");
    assert_eq!(surface("povicate", Pos::Verb, Bundle::VerbPresPart), "povicating");
    assert_eq!(surface("povicate", Pos::Verb, Bundle::VerbPres3Sg), "povicates");
    assert_eq!(surface("povicate", Pos::Verb, Bundle::VerbPast), "povicated");
    assert_eq!(surface("slub", Pos::Verb, Bundle::VerbPresPart), "slubbing");
}

proptest! {
    #[test]
    fn forms_are_lowercase_and_stable(lemma in "[a-z]{1,10}", pos in prop::sample::select(vec![Pos::Noun, Pos::Verb, Pos::Adj, Pos::Adv])) {
        let e = entry(&lemma, pos);
        let forms = inflect(&e);
        prop_assert_eq!(&forms, &inflect(&e));
        let expected = match pos {
            Pos::Noun => 2,
            Pos::Verb => 4,
            Pos::Adj | Pos::Adv => 3,
        };
        prop_assert_eq!(forms.len(), expected);
        for f in &forms {
            prop_assert!(!f.surface.is_empty() && f.surface.bytes().all(|b| b.is_ascii_lowercase()));
            prop_assert!(f.bundle.applies_to(pos));
            prop_assert_eq!(&f.lemma, &lemma);
            // Suffixes never shrink a word below its stem minus a dropped e or y.
            prop_assert!(f.surface.len() + 1 >= lemma.len());
        }
    }
}
