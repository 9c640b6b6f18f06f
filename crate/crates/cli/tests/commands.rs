mod common;

use std::path::Path;
use std::process::Command;

use common::Experiment;
use jabberprobe::probes::ProbeKind;
use jabberprobe_cli::artifacts::{job_key, probe_dir, status, Status};
use jabberprobe_cli::commands::eval::read_results;
use jabberprobe_cli::config::Config;
use jabberprobe_cli::error::CliError;

const SMALL: &str = "layers = [0, 8]\nmax_epochs = 3\nbatch_size = 16\nlearning_rate = 0.005";

fn read(path: impl AsRef<Path>) -> Vec<u8> {
    std::fs::read(path).unwrap()
}

fn mtime(path: impl AsRef<Path>) -> std::time::SystemTime {
    std::fs::metadata(path).unwrap().modified().unwrap()
}

fn binary(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_jabberprobe"))
        .args(args)
        .env("RUST_LOG", "off")
        .output()
        .unwrap()
}

#[test]
fn generate_writes_annotated_corpus_deterministically() {
    let e = Experiment::new("");
    e.run(&["generate"]).unwrap();
    let dir = e.out().join("jabberwocky");
    let files = ["test.conllu", "substitutions.tsv", "inflections.tsv", "manifest.json"];
    let first: Vec<_> = files.iter().map(|f| read(dir.join(f))).collect();
    let corpus = String::from_utf8(first[0].clone()).unwrap();
    assert!(corpus.contains("OrigForm="));
    e.run(&["generate"]).unwrap();
    for (f, bytes) in files.iter().zip(&first) {
        assert_eq!(&read(dir.join(f)), bytes, "{f} changed between runs");
    }
    let manifest: serde_json::Value = serde_json::from_slice(&first[3]).unwrap();
    assert_eq!(manifest["seed"], 7);
    assert_eq!(manifest["sentences"], 40);
    assert!(manifest["substituted_tokens"].as_u64().unwrap() > 0);
}

#[test]
fn other_seed_gives_other_corpus() {
    let e = Experiment::new("");
    e.run(&["generate"]).unwrap();
    let a = read(e.out().join("jabberwocky/test.conllu"));
    e.run(&["generate", "--seed", "8"]).unwrap();
    assert_ne!(a, read(e.out().join("jabberwocky/test.conllu")));
}

#[test]
fn missing_lexicon_is_a_config_error_naming_the_field() {
    let e = Experiment::new("");
    let text = std::fs::read_to_string(e.config()).unwrap();
    let text: String = text
        .lines()
        .filter(|l| !l.starts_with("lexicon"))
        .map(|l| format!("{l}\n"))
        .collect();
    std::fs::write(e.config(), &text).unwrap();
    match e.run(&["generate"]) {
        Err(err @ CliError::Config(_)) => {
            assert_eq!(err.exit_code(), 2);
            assert!(err.to_string().contains("lexicon"));
        }
        other => panic!("expected a config error, got {other:?}"),
    }

    std::fs::write(e.config(), text + "lexicon = \"/nonexistent/lexicon.tsv\"\n").unwrap();
    let out = binary(&["generate", "--config", e.config().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("`lexicon`"));
}

#[test]
fn exit_codes() {
    assert_eq!(binary(&["train"]).status.code(), Some(2));
    let e = Experiment::new("models = [\"toy\"]\nlayers = [0]");
    let config = e.config();
    let config = config.to_str().unwrap();
    // Configured paths must exist.
    assert_eq!(binary(&["train", "--config", config]).status.code(), Some(2));
    e.write_toy_model("toy", &[0]);
    let jemb = e.root().join("emb/toy/train.layer0.jemb");
    let good = read(&jemb);
    std::fs::write(&jemb, &good[..good.len() - 3]).unwrap();
    let out = binary(&["train", "--config", config]);
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stderr));
    std::fs::write(&jemb, good).unwrap();
    let out = binary(&["train", "--config", config, "--lr", "1e300", "--max-epochs", "1"]);
    assert_eq!(out.status.code(), Some(4), "{}", String::from_utf8_lossy(&out.stderr));
    std::fs::write(e.config(), "seed = 1\nunknown_key = 3\n").unwrap();
    assert_eq!(binary(&["eval", "--config", config]).status.code(), Some(2));
}

#[test]
fn extract_stub_prints_the_contract() {
    let out = binary(&["extract-stub"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    for needle in ["JEMB", "token_map", "removed", "{split}.layer{L}.jemb", "768"] {
        assert!(text.contains(needle), "missing {needle}");
    }
}

#[test]
fn train_is_resumable_and_checks_checksums() {
    let e = Experiment::new(&format!("models = [\"toy\"]\n{SMALL}"));
    e.write_toy_model("toy", &[0, 8]);
    e.run(&["train"]).unwrap();
    let dir = probe_dir(&e.out(), "toy", 8, ProbeKind::Structural);
    let params = read(dir.join("params.jprb"));
    let stamp = mtime(dir.join("params.json"));

    e.run(&["train"]).unwrap();
    assert_eq!(mtime(dir.join("params.json")), stamp, "completed job was retrained");

    let mut damaged = params.clone();
    *damaged.last_mut().unwrap() ^= 1;
    std::fs::write(dir.join("params.jprb"), &damaged).unwrap();
    let config = Config::load(&e.config()).unwrap();
    let key = job_key(&config, "toy", 8, ProbeKind::Structural, None);
    match status(&dir, &key) {
        Status::Corrupt(why) => assert!(why.contains("checksum mismatch")),
        other => panic!("expected a checksum mismatch, got {other:?}"),
    }
    e.run(&["train"]).unwrap();
    assert_eq!(read(dir.join("params.jprb")), params);
    assert!(matches!(status(&dir, &key), Status::Complete(_)));

    // A changed training setting makes the artifact stale.
    e.run(&["train", "--patience", "3"]).unwrap();
    assert_ne!(mtime(dir.join("params.json")), stamp);
}

#[test]
fn search_writes_every_trial_and_a_summary() {
    let e = Experiment::new(&format!(
        "models = [\"toy\"]\nprobes = [\"structural\"]\ntrials = 3\n{SMALL}"
    ));
    e.write_toy_model("toy", &[0, 8]);
    e.run(&["search"]).unwrap();
    let mut histories = 0;
    for layer in [0, 8] {
        for t in 0..3 {
            let dir = e.out().join(format!("search/toy/structural/L{layer}/trial{t:02}"));
            assert!(dir.join("history.json").exists(), "{}", dir.display());
            histories += 1;
        }
    }
    assert_eq!(histories, 6);
    let summary: serde_json::Value =
        serde_json::from_slice(&read(e.out().join("search/toy/structural/summary.json"))).unwrap();
    let layers = summary["layers"].as_array().unwrap();
    assert_eq!(layers.len(), 2);
    let best = &layers[summary["best"].as_u64().unwrap() as usize];
    for l in layers {
        assert!(best["dev_loss"].as_f64().unwrap() <= l["dev_loss"].as_f64().unwrap());
        let lr = l["config"]["learning_rate"].as_f64().unwrap();
        assert!((5e-5..=5e-3).contains(&lr));
    }
    // The chosen trial's parameters are what the probe directory holds.
    let chosen = &layers[1];
    let trial = chosen["trial"].as_u64().unwrap();
    assert_eq!(
        read(
            e.out()
                .join(format!("search/toy/structural/L8/trial{trial:02}/params.jprb"))
        ),
        read(e.out().join("probes/toy/L8/structural/params.jprb"))
    );
}

#[test]
fn eval_is_reproducible_and_baselines_are_blind() {
    let e = Experiment::new(&format!("models = [\"toy\", \"path\", \"majority\"]\n{SMALL}"));
    e.run(&["generate"]).unwrap();
    e.write_toy_model("toy", &[0, 8]);
    e.run(&["train"]).unwrap();
    e.run(&["eval"]).unwrap();
    let csv = e.out().join("eval/results.csv");
    let first = read(&csv);
    e.run(&["eval"]).unwrap();
    assert_eq!(read(&csv), first);

    let (provenance, rows) = read_results(&csv).unwrap();
    let config = Config::load(&e.config()).unwrap();
    assert_eq!(provenance, format!("# config_hash={} seed=7", config.hash()));
    for model in ["path", "majority"] {
        for metric in ["uuas", "dspr"] {
            let get = |dataset: &str| {
                rows.iter()
                    .find(|r| r.model == model && r.dataset == dataset && r.metric == metric)
                    .unwrap()
                    .value
            };
            assert_eq!(get("normal"), get("jabberwocky"), "{model} {metric}");
        }
    }
    // The planted signal is learnable at layer 8 but not at layer 0.
    let uuas = |layer: &str| {
        rows.iter()
            .find(|r| {
                r.model == "toy"
                    && r.layer == layer
                    && r.probe == "perceptron"
                    && r.dataset == "normal"
                    && r.metric == "uuas"
            })
            .unwrap()
            .value
    };
    assert!(uuas("8") > uuas("0") + 0.2, "{} vs {}", uuas("8"), uuas("0"));

    for chart in ["uuas.svg", "dspr.svg"] {
        let svg = String::from_utf8(read(e.out().join("eval").join(chart))).unwrap();
        assert!(svg.contains(&config.hash()));
        for model in ["toy", "path", "majority"] {
            assert!(svg.contains(&format!(">{model}<")), "{chart} lacks {model}");
        }
    }
}

#[test]
fn empty_model_list_gives_header_only_csv() {
    let e = Experiment::new("");
    e.run(&["eval"]).unwrap();
    let text = String::from_utf8(read(e.out().join("eval/results.csv"))).unwrap();
    let lines: Vec<_> = text.lines().collect();
    assert_eq!(lines.len(), 2);
    assert!(lines[0].starts_with("# config_hash="));
    assert_eq!(lines[1], "model,layer,probe,dataset,metric,value,n_sentences");
    assert!(read_results(&e.out().join("eval/results.csv")).unwrap().1.is_empty());
}

#[test]
fn report_needs_results() {
    let e = Experiment::new("");
    assert!(matches!(e.run(&["report"]), Err(CliError::Config(_))));
    e.run(&["eval"]).unwrap();
    e.run(&["report"]).unwrap();
    assert!(e.out().join("eval/uuas.svg").exists());
}

#[test]
fn fast_pos_composes_word_and_position_vectors() {
    use jabberprobe::embeddings::{write_embedding_file, PositionTable};
    use ndarray::Array2;

    let e =
        Experiment::new("models = [\"fastpos\"]\nprobes = [\"structural\"]\nmax_epochs = 1\nbatch_size = 32\nrank = 8");
    let mut words = String::from("3 300\n");
    for (w, v) in [("the", 0.1), ("meeting", 0.2), ("enjoyed", 0.3)] {
        words.push_str(w);
        for i in 0..300 {
            words.push_str(&format!(" {}", v * (i % 7) as f64));
        }
        words.push('\n');
    }
    std::fs::write(e.root().join("words.vec"), words).unwrap();
    let table = PositionTable::new(Array2::from_shape_fn((40, 768), |(i, j)| {
        ((i * 31 + j) % 17) as f32 / 17.0
    }))
    .unwrap();
    write_embedding_file(&table.to_embedding_set("bert-base"), e.root().join("positions.jemb")).unwrap();
    let mut config = std::fs::read_to_string(e.config()).unwrap();
    config.push_str(&format!(
        "word_vectors = \"{0}/words.vec\"\nposition_table = \"{0}/positions.jemb\"\n",
        e.root().display()
    ));
    std::fs::write(e.config(), config).unwrap();

    e.run(&["generate"]).unwrap();
    e.run(&["train"]).unwrap();
    let params =
        jabberprobe::probes::read_params_file(e.out().join("probes/fastpos/L0/structural/params.jprb")).unwrap();
    assert_eq!(params.dim(), 1068);
    assert!(!e.out().join("probes/fastpos/L4").exists());
    e.run(&["eval"]).unwrap();
    let (_, rows) = read_results(&e.out().join("eval/results.csv")).unwrap();
    assert!(rows.iter().all(|r| r.model == "fastpos" && r.layer == "0"));
    assert_eq!(rows.len(), 5);
}

#[test]
fn planted_probe_scores_well_on_its_training_fixture() {
    use jabberprobe::embeddings::{write_embedding_file, EmbeddingSet};
    use jabberprobe::probes::synthetic::{path_indicator_embeddings, random_sentence};
    use jabberprobe::treebank::{write_conllu, AlignmentRecord};
    use rand::{Rng, SeedableRng};

    let e = Experiment::new("");
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
    let corpus: Vec<_> = (0..200)
        .map(|i| {
            let n = rng.random_range(5..=12);
            random_sentence(&mut rng, n, &format!("p{i}"))
        })
        .collect();
    let planted = e.root().join("planted.conllu");
    std::fs::write(&planted, write_conllu(&corpus)).unwrap();
    let dir = e.root().join("emb/planted");
    std::fs::create_dir_all(&dir).unwrap();
    let jsonl: String = corpus
        .iter()
        .map(|s| serde_json::to_string(&AlignmentRecord::identity(s)).unwrap() + "\n")
        .collect();
    for split in ["train", "dev", "test", "jabberwocky"] {
        let mut set = EmbeddingSet::new("planted", 0, 11, split);
        for s in &corpus {
            set.insert(s.sent_id(), path_indicator_embeddings(s, 11).mapv(|v| v as f32))
                .unwrap();
        }
        write_embedding_file(&set, dir.join(format!("{split}.layer0.jemb"))).unwrap();
        std::fs::write(dir.join(format!("{split}.align.jsonl")), &jsonl).unwrap();
    }
    let p = planted.display();
    std::fs::write(
        e.config(),
        format!(
            "seed = 1\noutput_dir = \"{}\"\ntreebank_train = \"{p}\"\ntreebank_dev = \"{p}\"\n\
             treebank_test = \"{p}\"\njabberwocky_test = \"{p}\"\nembeddings_dir = \"{}\"\n\
             models = [\"planted\"]\nlayers = [0]\nprobes = [\"perceptron\"]\n\
             batch_size = 8\nlearning_rate = 0.005\n",
            e.out().display(),
            e.root().join("emb").display()
        ),
    )
    .unwrap();
    e.run(&["train"]).unwrap();
    e.run(&["eval"]).unwrap();
    let (_, rows) = read_results(&e.out().join("eval/results.csv")).unwrap();
    let uuas = rows
        .iter()
        .find(|r| r.dataset == "normal" && r.metric == "uuas")
        .unwrap();
    assert!(uuas.value >= 0.90, "{}", uuas.value);
}
