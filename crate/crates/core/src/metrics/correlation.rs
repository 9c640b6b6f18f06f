use ndarray::ArrayView2;

use super::MetricError;
use crate::treebank::DistanceMatrix;

/// Average ranks (1-based); tied values share the mean of their positions.
fn average_ranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && values[order[end]] == values[order[start]] {
            end += 1;
        }
        // Positions start+1 ..= end share their mean.
        let mean = (start + 1 + end) as f64 / 2.0;
        for &idx in &order[start..end] {
            ranks[idx] = mean;
        }
        start = end;
    }
    ranks
}

fn pearson(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (x, y) in xs.iter().zip(ys) {
        let (dx, dy) = (x - mx, y - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return 0.0;
    }
    (sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0)
}

/// Spearman's rho: Pearson correlation of average ranks. Returns 0 when
/// either side is constant.
pub fn spearman_rank(xs: &[f64], ys: &[f64]) -> Result<f64, MetricError> {
    if xs.len() != ys.len() {
        return Err(MetricError::LengthMismatch(xs.len(), ys.len()));
    }
    if xs.len() < 2 {
        return Err(MetricError::TooShort(xs.len()));
    }
    Ok(pearson(&average_ranks(xs), &average_ranks(ys)))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DsprMode {
    /// Correlate each word's row of distances, average over words.
    #[default]
    RowWise,
    /// Correlate all unordered pairs of the sentence at once.
    Flattened,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct DsprOptions {
    pub mode: DsprMode,
    /// Inclusive bounds on sentence length, e.g. `Some((5, 50))`.
    pub length_filter: Option<(usize, usize)>,
}

/// DSpr of one sentence, or `None` when fewer than three words remain after
/// masking (a single off-diagonal entry per row has no rank correlation).
///
/// In row-wise mode, rows whose gold distances are all equal are left out of
/// the average.
pub fn dspr_sentence(
    pred: ArrayView2<f64>,
    gold: &DistanceMatrix,
    keep: Option<&[bool]>,
    mode: DsprMode,
) -> Option<f64> {
    let n = gold.n();
    assert_eq!(pred.dim(), (n, n), "predicted distances must be n x n");
    let kept: Vec<usize> = (0..n).filter(|&i| keep.is_none_or(|k| k[i])).collect();
    if kept.len() < 3 {
        return None;
    }
    match mode {
        DsprMode::RowWise => {
            let mut total = 0.0;
            let mut rows = 0;
            for &i in &kept {
                let others = kept.iter().filter(|&&j| j != i);
                let xs: Vec<f64> = others.clone().map(|&j| gold.get(i, j) as f64).collect();
                // A word adjacent to every other word has no ranking to recover.
                if xs.iter().all(|&x| x == xs[0]) {
                    continue;
                }
                let ys: Vec<f64> = others.map(|&j| pred[(i, j)]).collect();
                total += spearman_rank(&xs, &ys).expect("rows have equal length >= 2");
                rows += 1;
            }
            (rows > 0).then(|| total / rows as f64)
        }
        DsprMode::Flattened => {
            let mut xs = Vec::new();
            let mut ys = Vec::new();
            for (a, &i) in kept.iter().enumerate() {
                for &j in &kept[a + 1..] {
                    xs.push(gold.get(i, j) as f64);
                    ys.push(pred[(i, j)]);
                }
            }
            Some(spearman_rank(&xs, &ys).expect("at least three pairs"))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct DsprScore {
    /// Macro mean over scored sentences (0 when none were scored).
    pub value: f64,
    pub n_sentences: usize,
    pub skipped: usize,
}

/// Corpus DSpr over `(predicted distances, gold distances, keep mask)`.
pub fn dspr<'a, I>(sentences: I, options: DsprOptions) -> DsprScore
where
    I: IntoIterator<Item = (ArrayView2<'a, f64>, &'a DistanceMatrix, Option<&'a [bool]>)>,
{
    let mut sum = 0.0;
    let mut score = DsprScore::default();
    for (pred, gold, keep) in sentences {
        if let Some((lo, hi)) = options.length_filter {
            if gold.n() < lo || gold.n() > hi {
                score.skipped += 1;
                continue;
            }
        }
        match dspr_sentence(pred, gold, keep, options.mode) {
            Some(value) => {
                sum += value;
                score.n_sentences += 1;
            }
            None => {
                log::debug!("skipping {}-token sentence in DSpr", gold.n());
                score.skipped += 1;
            }
        }
    }
    if score.n_sentences > 0 {
        score.value = sum / score.n_sentences as f64;
    }
    score
}
