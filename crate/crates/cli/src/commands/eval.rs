use std::path::{Path, PathBuf};

use jabberprobe::baselines::{path_tree, MajorityModel};
use jabberprobe::metrics::{dspr, UuasAccumulator};
use jabberprobe::probes::ProbeParams;
use jabberprobe::{DistanceMatrix, UndirectedTree};
use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::artifacts::{self, probe_dir, write_atomic, Status};
use crate::config::Config;
use crate::data::{punct_flags, DataSource, Split};
use crate::error::{CliError, Result};
use crate::{MAJORITY, PATH};

/// One line of the results CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub model: String,
    /// `-` for baselines.
    pub layer: String,
    /// `-` for baselines.
    pub probe: String,
    /// `normal`, `jabberwocky` or `dev`.
    pub dataset: String,
    /// `uuas`, `dspr` or `dev_loss`.
    pub metric: String,
    pub value: f64,
    pub n_sentences: usize,
}

pub fn results_path(output_dir: &Path) -> PathBuf {
    output_dir.join("eval").join("results.csv")
}

const DATASETS: [(Split, &str); 2] = [(Split::Test, "normal"), (Split::Jabberwocky, "jabberwocky")];

/// UUAS and DSpr of predicted trees and distances against gold.
struct Scorer<'a> {
    config: &'a Config,
    uuas: UuasAccumulator,
    preds: Vec<Array2<f64>>,
    golds: Vec<DistanceMatrix>,
    keeps: Vec<Option<Vec<bool>>>,
}

impl<'a> Scorer<'a> {
    fn new(config: &'a Config) -> Self {
        Scorer {
            config,
            uuas: UuasAccumulator::default(),
            preds: Vec::new(),
            golds: Vec::new(),
            keeps: Vec::new(),
        }
    }

    fn add(
        &mut self,
        tree: &UndirectedTree,
        gold: &UndirectedTree,
        distances: Array2<f64>,
        punct: &[bool],
    ) -> Result<()> {
        let keep = self
            .config
            .exclude_punct
            .then(|| punct.iter().map(|p| !p).collect::<Vec<_>>());
        self.uuas
            .add(tree, gold, keep.as_deref())
            .map_err(|e| CliError::Data(e.to_string()))?;
        self.preds.push(distances);
        self.golds.push(DistanceMatrix::from_tree(gold));
        self.keeps.push(keep);
        Ok(())
    }

    fn rows(self, model: &str, layer: &str, probe: &str, dataset: &str) -> [ResultRow; 2] {
        let score = dspr(
            self.preds
                .iter()
                .zip(&self.golds)
                .zip(&self.keeps)
                .map(|((p, g), k)| (p.view(), g, k.as_deref())),
            self.config.dspr_options(),
        );
        let uuas = if self.config.uuas_macro {
            self.uuas.macro_average()
        } else {
            self.uuas.micro()
        };
        let row = |metric: &str, value: f64, n_sentences: usize| ResultRow {
            model: model.to_string(),
            layer: layer.to_string(),
            probe: probe.to_string(),
            dataset: dataset.to_string(),
            metric: metric.to_string(),
            value,
            n_sentences,
        };
        [
            row("uuas", uuas, self.uuas.sentences),
            row("dspr", score.value, score.n_sentences),
        ]
    }
}

fn tree_distances(tree: &UndirectedTree) -> Array2<f64> {
    let n = tree.n();
    Array2::from_shape_vec((n, n), DistanceMatrix::from_tree(tree).to_f64()).expect("n x n entries")
}

fn baseline_rows(config: &Config, source: &DataSource, model: &str) -> Result<Vec<ResultRow>> {
    let majority = if model == MAJORITY {
        Some(MajorityModel::fit(&source.corpus(Split::Train)?))
    } else {
        None
    };
    let predict = |n: usize| match &majority {
        Some(m) => m.predict(n),
        None => path_tree(n),
    };
    let mut rows = Vec::new();
    for (split, dataset) in DATASETS {
        let corpus = source.corpus(split)?;
        let mut scorer = Scorer::new(config);
        for sentence in corpus.iter() {
            let tree = predict(sentence.len());
            let distances = tree_distances(&tree);
            scorer.add(&tree, &sentence.gold_tree(), distances, &punct_flags(sentence))?;
        }
        rows.extend(scorer.rows(model, "-", "-", dataset));
    }
    Ok(rows)
}

fn probe_rows(config: &Config, source: &DataSource, model: &str) -> Result<Vec<ResultRow>> {
    let mut rows = Vec::new();
    for layer in config.layers_for(model) {
        let mut probes: Vec<(artifacts::Sidecar, ProbeParams)> = Vec::new();
        for &kind in &config.probes {
            let dir = probe_dir(&config.output_dir, model, layer, kind);
            match artifacts::status(&dir, "") {
                Status::Missing => log::warn!("no trained probe at {}; skipping", dir.display()),
                Status::Corrupt(why) => return Err(CliError::Data(format!("{}: {why}", dir.display()))),
                Status::Stale | Status::Complete(_) => probes.push(artifacts::load(&dir)?),
            }
        }
        if probes.is_empty() {
            continue;
        }
        let mut per_probe: Vec<Vec<ResultRow>> = probes
            .iter()
            .map(|(sidecar, _)| {
                vec![ResultRow {
                    model: model.to_string(),
                    layer: layer.to_string(),
                    probe: sidecar.probe.to_string(),
                    dataset: "dev".into(),
                    metric: "dev_loss".into(),
                    value: sidecar.best_dev_loss,
                    n_sentences: sidecar.dev_sentences,
                }]
            })
            .collect();
        for (split, dataset) in DATASETS {
            let examples = source.examples(model, split, layer)?;
            for ((sidecar, params), out) in probes.iter().zip(per_probe.iter_mut()) {
                if params.dim() != examples.items.first().map_or(params.dim(), |e| e.embeddings.ncols()) {
                    return Err(CliError::Data(format!(
                        "{model} layer {layer}: probe expects {} dimensions",
                        params.dim()
                    )));
                }
                let mut scorer = Scorer::new(config);
                for (example, punct) in examples.items.iter().zip(&examples.punct) {
                    let h = example.embeddings.view();
                    scorer.add(
                        &params.decode_tree(h),
                        &example.tree,
                        params.predict_distances(h),
                        punct,
                    )?;
                }
                out.extend(scorer.rows(model, &layer.to_string(), sidecar.probe.as_str(), dataset));
            }
        }
        rows.extend(per_probe.into_iter().flatten());
    }
    Ok(rows)
}

pub fn evaluate(config: &Config) -> Result<Vec<ResultRow>> {
    let source = DataSource::new(config);
    let mut rows = Vec::new();
    for model in &config.models {
        if model == PATH || model == MAJORITY {
            rows.extend(baseline_rows(config, &source, model)?);
        } else {
            rows.extend(probe_rows(config, &source, model)?);
        }
    }
    Ok(rows)
}

pub fn write_results(config: &Config, rows: &[ResultRow]) -> Vec<u8> {
    let mut out = format!("# config_hash={} seed={}\n", config.hash(), config.seed).into_bytes();
    {
        let mut writer = csv::WriterBuilder::new().has_headers(false).from_writer(&mut out);
        writer
            .write_record(["model", "layer", "probe", "dataset", "metric", "value", "n_sentences"])
            .expect("writing to memory");
        for row in rows {
            writer.serialize(row).expect("writing to memory");
        }
        writer.flush().expect("writing to memory");
    }
    out
}

pub fn read_results(path: &Path) -> Result<(String, Vec<ResultRow>)> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::data(path.display(), e))?;
    let header = text
        .lines()
        .next()
        .filter(|l| l.starts_with('#'))
        .unwrap_or("")
        .to_string();
    let mut reader = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_reader(text.as_bytes());
    let rows = reader
        .deserialize()
        .collect::<std::result::Result<Vec<ResultRow>, _>>()
        .map_err(|e| CliError::data(path.display(), e))?;
    Ok((header, rows))
}

/// Writes the results CSV and the charts derived from it.
pub fn run(config: &Config) -> Result<()> {
    let rows = evaluate(config)?;
    let path = results_path(&config.output_dir);
    write_atomic(&path, &write_results(config, &rows))?;
    log::info!("wrote {} result rows to {}", rows.len(), path.display());
    super::report::run(config)
}
