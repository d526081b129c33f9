//! Metrics and report assembly for strength and emotion predictions.
//!
//! All metrics treat strength scores as plain f64 values. Categorical
//! strength uses a single 0.5 threshold where exactly 0.5 counts as
//! strong. Rank correlation uses average ranks for ties.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::data::MODEL_EMOTIONS;

/// Bin count used by strength histograms in reports.
pub const HISTOGRAM_BINS: usize = 20;

#[derive(Debug, thiserror::Error)]
pub enum EvalError {
    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("empty input")]
    Empty,
    #[error("value out of range: {0}")]
    OutOfRange(f64),
    #[error("need at least 2 points, got {0}")]
    TooShort(usize),
    #[error("zero variance in one of the inputs")]
    ZeroVariance,
    #[error("bad prediction file: {0}")]
    BadPrediction(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("bad report json: {0}")]
    Json(#[from] serde_json::Error),
}

pub type EvalResult<V> = Result<V, EvalError>;

fn check_finite(values: &[f64]) -> EvalResult<()> {
    for &v in values {
        if !v.is_finite() {
            return Err(EvalError::OutOfRange(v));
        }
    }
    Ok(())
}

fn check_paired(left: usize, right: usize) -> EvalResult<()> {
    if left != right {
        return Err(EvalError::LengthMismatch { left, right });
    }
    Ok(())
}

/// Mean absolute error between paired score lists.
pub fn mae(pred: &[f64], gt: &[f64]) -> EvalResult<f64> {
    check_paired(pred.len(), gt.len())?;
    if pred.is_empty() {
        return Err(EvalError::Empty);
    }
    check_finite(pred)?;
    check_finite(gt)?;
    let sum: f64 = pred.iter().zip(gt).map(|(p, g)| (p - g).abs()).sum();
    Ok(sum / pred.len() as f64)
}

/// Index of the largest probability; ties resolve to the lowest index.
pub fn argmax(probs: &[f32]) -> usize {
    let mut best = 0;
    for (i, &p) in probs.iter().enumerate() {
        if p > probs[best] {
            best = i;
        }
    }
    best
}

/// Fraction of utterances whose argmax class matches the ground truth.
pub fn ser_accuracy(pred_probs: &[Vec<f32>], gt_class: &[usize]) -> EvalResult<f64> {
    check_paired(pred_probs.len(), gt_class.len())?;
    if pred_probs.is_empty() {
        return Err(EvalError::Empty);
    }
    let hits = pred_probs
        .iter()
        .zip(gt_class)
        .filter(|(probs, &gt)| argmax(probs) == gt)
        .count();
    Ok(hits as f64 / pred_probs.len() as f64)
}

/// Categorical strength: scores at or above 0.5 count as strong.
pub fn is_strong(score: f64) -> bool {
    score >= 0.5
}

/// 2x2 confusion counts, rows indexed by ground truth and columns by
/// prediction, with index 0 = normal and 1 = strong.
pub fn strength_confusion(pred: &[f64], gt_strong: &[bool]) -> EvalResult<[[usize; 2]; 2]> {
    check_paired(pred.len(), gt_strong.len())?;
    if pred.is_empty() {
        return Err(EvalError::Empty);
    }
    check_finite(pred)?;
    let mut counts = [[0usize; 2]; 2];
    for (&p, &g) in pred.iter().zip(gt_strong) {
        counts[g as usize][is_strong(p) as usize] += 1;
    }
    Ok(counts)
}

/// Row-normalized percentages of a confusion table. Empty rows stay zero.
pub fn confusion_row_percent(counts: &[[usize; 2]; 2]) -> [[f64; 2]; 2] {
    let mut out = [[0.0; 2]; 2];
    for (row, row_counts) in counts.iter().enumerate() {
        let total: usize = row_counts.iter().sum();
        if total > 0 {
            for (col, &c) in row_counts.iter().enumerate() {
                out[row][col] = 100.0 * c as f64 / total as f64;
            }
        }
    }
    out
}

/// Histogram of scores over [0, 1] with equal-width bins; a score of
/// exactly 1.0 lands in the last bin. Scores outside [0, 1] are errors.
pub fn histogram(scores: &[f64], bins: usize) -> EvalResult<Vec<usize>> {
    assert!(bins > 0, "histogram needs at least one bin");
    let mut counts = vec![0usize; bins];
    for &s in scores {
        if !(0.0..=1.0).contains(&s) {
            return Err(EvalError::OutOfRange(s));
        }
        let bin = ((s * bins as f64) as usize).min(bins - 1);
        counts[bin] += 1;
    }
    Ok(counts)
}

/// 1-based average ranks; tied values share the mean of their positions.
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
        let mean_rank = (start + end + 1) as f64 / 2.0;
        for &idx in &order[start..end] {
            ranks[idx] = mean_rank;
        }
        start = end;
    }
    ranks
}

/// Spearman rank correlation with average ranks for ties.
pub fn spearman(pred: &[f64], gt: &[f64]) -> EvalResult<f64> {
    check_paired(pred.len(), gt.len())?;
    if pred.len() < 2 {
        return Err(EvalError::TooShort(pred.len()));
    }
    check_finite(pred)?;
    check_finite(gt)?;
    let rp = average_ranks(pred);
    let rg = average_ranks(gt);
    let n = pred.len() as f64;
    let mp = rp.iter().sum::<f64>() / n;
    let mg = rg.iter().sum::<f64>() / n;
    let mut cov = 0.0;
    let mut var_p = 0.0;
    let mut var_g = 0.0;
    for i in 0..pred.len() {
        let dp = rp[i] - mp;
        let dg = rg[i] - mg;
        cov += dp * dg;
        var_p += dp * dp;
        var_g += dg * dg;
    }
    if var_p == 0.0 || var_g == 0.0 {
        return Err(EvalError::ZeroVariance);
    }
    Ok(cov / (var_p * var_g).sqrt())
}

/// One scored utterance, as written by inference.
#[derive(Debug, Clone, PartialEq)]
pub struct Prediction {
    pub utterance_id: String,
    pub strength: f64,
    pub emotion: String,
    pub probs: Vec<f32>,
}

fn prediction_header() -> String {
    let mut cols = vec!["utterance_id".to_string(), "strength".to_string(), "emotion".to_string()];
    cols.extend(MODEL_EMOTIONS.iter().map(|e| format!("p_{e}")));
    cols.join("\t")
}

/// Write predictions as TSV with one probability column per class.
pub fn write_predictions(path: &Path, preds: &[Prediction]) -> EvalResult<()> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "{}", prediction_header())?;
    for p in preds {
        write!(w, "{}\t{:.9}\t{}", p.utterance_id, p.strength, p.emotion)?;
        for &prob in &p.probs {
            write!(w, "\t{prob:.9}")?;
        }
        writeln!(w)?;
    }
    w.flush()?;
    Ok(())
}

/// Read a prediction TSV produced by [`write_predictions`].
pub fn read_predictions(path: &Path) -> EvalResult<Vec<Prediction>> {
    let reader = BufReader::new(File::open(path)?);
    let mut lines = reader.lines();
    let header = lines
        .next()
        .ok_or_else(|| EvalError::BadPrediction("missing header".into()))??;
    if header != prediction_header() {
        return Err(EvalError::BadPrediction(format!("unexpected header: {header}")));
    }
    let want = 3 + MODEL_EMOTIONS.len();
    let mut preds = Vec::new();
    for (lineno, line) in lines.enumerate() {
        let line = line?;
        if line.is_empty() {
            continue;
        }
        let cols: Vec<&str> = line.split('\t').collect();
        if cols.len() != want {
            return Err(EvalError::BadPrediction(format!(
                "line {}: expected {} columns, got {}",
                lineno + 2,
                want,
                cols.len()
            )));
        }
        let parse_err =
            |what: &str| EvalError::BadPrediction(format!("line {}: bad {what}", lineno + 2));
        let strength: f64 = cols[1].parse().map_err(|_| parse_err("strength"))?;
        let mut probs = Vec::with_capacity(MODEL_EMOTIONS.len());
        for col in &cols[3..] {
            probs.push(col.parse().map_err(|_| parse_err("probability"))?);
        }
        preds.push(Prediction {
            utterance_id: cols[0].to_string(),
            strength,
            emotion: cols[2].to_string(),
            probs,
        });
    }
    Ok(preds)
}

/// One utterance joined with its ground truth, ready for scoring.
#[derive(Debug, Clone)]
pub struct EvalRow {
    pub dataset_id: String,
    pub pred_strength: f64,
    pub gt_strength: f64,
    pub pred_probs: Vec<f32>,
    pub gt_class: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct ConfusionTable {
    pub counts: [[usize; 2]; 2],
    pub row_percent: [[f64; 2]; 2],
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct DatasetMetrics {
    pub count: usize,
    pub mae: f64,
    pub ser_accuracy: f64,
    /// Absent when the dataset slice is too small or has no rank spread.
    pub spearman: Option<f64>,
}

/// Full evaluation summary over a prediction set.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct EvalReport {
    pub mae: f64,
    pub ser_accuracy: f64,
    pub spearman: f64,
    pub histogram: Vec<usize>,
    pub confusion: ConfusionTable,
    pub per_dataset: BTreeMap<String, DatasetMetrics>,
}

fn slice_metrics(rows: &[&EvalRow]) -> EvalResult<(f64, f64, Option<f64>)> {
    let pred: Vec<f64> = rows.iter().map(|r| r.pred_strength).collect();
    let gt: Vec<f64> = rows.iter().map(|r| r.gt_strength).collect();
    let probs: Vec<Vec<f32>> = rows.iter().map(|r| r.pred_probs.clone()).collect();
    let classes: Vec<usize> = rows.iter().map(|r| r.gt_class).collect();
    let mae = mae(&pred, &gt)?;
    let acc = ser_accuracy(&probs, &classes)?;
    let rho = match spearman(&pred, &gt) {
        Ok(v) => Some(v),
        Err(EvalError::TooShort(_)) | Err(EvalError::ZeroVariance) => None,
        Err(e) => return Err(e),
    };
    Ok((mae, acc, rho))
}

/// Assemble the full report; the overall rank correlation must exist.
pub fn build_report(rows: &[EvalRow]) -> EvalResult<EvalReport> {
    if rows.is_empty() {
        return Err(EvalError::Empty);
    }
    let all: Vec<&EvalRow> = rows.iter().collect();
    let (overall_mae, overall_acc, _) = slice_metrics(&all)?;
    let pred: Vec<f64> = rows.iter().map(|r| r.pred_strength).collect();
    let gt: Vec<f64> = rows.iter().map(|r| r.gt_strength).collect();
    let rho = spearman(&pred, &gt)?;
    let hist = histogram(&pred, HISTOGRAM_BINS)?;
    let gt_strong: Vec<bool> = gt.iter().map(|&g| is_strong(g)).collect();
    let counts = strength_confusion(&pred, &gt_strong)?;
    let confusion = ConfusionTable { counts, row_percent: confusion_row_percent(&counts) };

    let mut by_dataset: BTreeMap<String, Vec<&EvalRow>> = BTreeMap::new();
    for row in rows {
        by_dataset.entry(row.dataset_id.clone()).or_default().push(row);
    }
    let mut per_dataset = BTreeMap::new();
    for (dataset, slice) in by_dataset {
        let (mae, acc, rho) = slice_metrics(&slice)?;
        per_dataset.insert(
            dataset,
            DatasetMetrics { count: slice.len(), mae, ser_accuracy: acc, spearman: rho },
        );
    }

    Ok(EvalReport {
        mae: overall_mae,
        ser_accuracy: overall_acc,
        spearman: rho,
        histogram: hist,
        confusion,
        per_dataset,
    })
}

/// Write a report as pretty-printed JSON with a trailing newline.
pub fn write_report(path: &Path, report: &EvalReport) -> EvalResult<()> {
    let mut w = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut w, report)?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

pub fn read_report(path: &Path) -> EvalResult<EvalReport> {
    Ok(serde_json::from_reader(BufReader::new(File::open(path)?))?)
}

/// Histogram as TSV: bin bounds, count, and percentage per row.
pub fn write_histogram_tsv(path: &Path, counts: &[usize]) -> EvalResult<()> {
    let mut w = BufWriter::new(File::create(path)?);
    let total: usize = counts.iter().sum();
    writeln!(w, "bin_lo\tbin_hi\tcount\tpercent")?;
    for (i, &c) in counts.iter().enumerate() {
        let lo = i as f64 / counts.len() as f64;
        let hi = (i + 1) as f64 / counts.len() as f64;
        let pct = if total > 0 { 100.0 * c as f64 / total as f64 } else { 0.0 };
        writeln!(w, "{lo:.4}\t{hi:.4}\t{c}\t{pct:.4}")?;
    }
    w.flush()?;
    Ok(())
}

/// Confusion table as TSV: counts then row-normalized percentages.
pub fn write_confusion_tsv(path: &Path, table: &ConfusionTable) -> EvalResult<()> {
    let labels = ["normal", "strong"];
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "truth\tpred_normal\tpred_strong\tpct_normal\tpct_strong")?;
    for (row, label) in labels.iter().enumerate() {
        writeln!(
            w,
            "{label}\t{}\t{}\t{:.4}\t{:.4}",
            table.counts[row][0],
            table.counts[row][1],
            table.row_percent[row][0],
            table.row_percent[row][1],
        )?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn mae_is_symmetric_and_shift_invariant() {
        let a = [0.1, 0.4, 0.9, 0.3];
        let b = [0.2, 0.2, 0.95, 0.6];
        let ab = mae(&a, &b).unwrap();
        let ba = mae(&b, &a).unwrap();
        assert_eq!(ab, ba);
        let shift = 0.125;
        let a2: Vec<f64> = a.iter().map(|v| v + shift).collect();
        let b2: Vec<f64> = b.iter().map(|v| v + shift).collect();
        assert!((mae(&a2, &b2).unwrap() - ab).abs() < 1e-12);
        assert!(matches!(mae(&[], &[]), Err(EvalError::Empty)));
        assert!(matches!(mae(&a, &b[..2]), Err(EvalError::LengthMismatch { left: 4, right: 2 })));
    }

    #[test]
    fn argmax_ties_pick_the_lowest_index() {
        assert_eq!(argmax(&[0.25, 0.25, 0.25, 0.25]), 0);
        assert_eq!(argmax(&[0.1, 0.4, 0.4, 0.1]), 1);
        assert_eq!(argmax(&[0.1, 0.2, 0.3, 0.4]), 3);
        let probs = vec![vec![0.25, 0.25, 0.25, 0.25], vec![0.7, 0.1, 0.1, 0.1]];
        assert_eq!(ser_accuracy(&probs, &[0, 0]).unwrap(), 1.0);
        assert_eq!(ser_accuracy(&probs, &[1, 0]).unwrap(), 0.5);
    }

    #[test]
    fn confusion_marginals_match_category_counts() {
        let pred = [0.1, 0.5, 0.7, 0.49, 0.9, 0.2];
        let gt = [false, true, true, true, false, false];
        let counts = strength_confusion(&pred, &gt).unwrap();
        let gt_normal: usize = gt.iter().filter(|g| !**g).count();
        assert_eq!(counts[0][0] + counts[0][1], gt_normal);
        assert_eq!(counts[1][0] + counts[1][1], gt.len() - gt_normal);
        let total: usize = counts.iter().flatten().sum();
        assert_eq!(total, pred.len());
        assert_eq!(counts[1][1], 2, "0.5 and 0.7 predict strong");
        assert_eq!(counts[1][0], 1, "0.49 predicts normal");
        let pct = confusion_row_percent(&counts);
        for row in pct {
            let sum: f64 = row.iter().sum();
            assert!((sum - 100.0).abs() < 1e-9);
        }
    }

    #[test]
    fn confusion_diagonal_matches_direct_agreement_count() {
        let mut rng = ChaCha8Rng::seed_from_u64(19);
        let pred: Vec<f64> = (0..100).map(|_| rng.gen::<f64>()).collect();
        let gt: Vec<bool> = (0..100).map(|_| rng.gen::<bool>()).collect();
        let counts = strength_confusion(&pred, &gt).unwrap();
        let diagonal = counts[0][0] + counts[1][1];
        let direct =
            pred.iter().zip(&gt).filter(|&(&p, &g)| is_strong(p) == g).count();
        assert_eq!(diagonal, direct);
        let pred_strong: usize = pred.iter().filter(|&&p| is_strong(p)).count();
        assert_eq!(counts[0][1] + counts[1][1], pred_strong);
        assert_eq!(counts[0][0] + counts[1][0], pred.len() - pred_strong);
    }

    #[test]
    fn histogram_grid_of_bin_centers_fills_each_bin_once() {
        let centers: Vec<f64> = (0..20).map(|i| (i as f64 + 0.5) / 20.0).collect();
        assert_eq!(histogram(&centers, 20).unwrap(), vec![1; 20]);
        let zeros = vec![0.0; 7];
        let hist = histogram(&zeros, 20).unwrap();
        assert_eq!(hist[0], 7);
        assert_eq!(hist.iter().sum::<usize>(), 7);
    }

    #[test]
    fn histogram_places_endpoints_and_rejects_outliers() {
        let hist = histogram(&[0.0, 1.0, 0.999, 0.05, 0.0499], 20).unwrap();
        assert_eq!(hist[0], 2, "0.0 and 0.0499 share the first bin");
        assert_eq!(hist[1], 1, "0.05 starts the second bin");
        assert_eq!(hist[19], 2, "1.0 joins the last bin");
        assert_eq!(hist.iter().sum::<usize>(), 5);
        assert!(matches!(histogram(&[1.0001], 20), Err(EvalError::OutOfRange(_))));
        assert!(matches!(histogram(&[-0.0001], 20), Err(EvalError::OutOfRange(_))));
    }

    #[test]
    fn histogram_is_permutation_invariant() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let values: Vec<f64> = (0..200).map(|_| rng.gen::<f64>()).collect();
        let mut shuffled = values.clone();
        shuffled.reverse();
        shuffled.rotate_left(37);
        assert_eq!(histogram(&values, 20).unwrap(), histogram(&shuffled, 20).unwrap());
    }

    #[test]
    fn spearman_handles_monotone_and_reversed_inputs() {
        let x: [f64; 5] = [0.1, 0.3, 0.5, 0.7, 0.95];
        let cubed: Vec<f64> = x.iter().map(|v| v.powi(3)).collect();
        assert!((spearman(&x, &cubed).unwrap() - 1.0).abs() < 1e-12);
        let reversed: Vec<f64> = x.iter().rev().copied().collect();
        assert!((spearman(&x, &reversed).unwrap() + 1.0).abs() < 1e-12);
        assert!(matches!(spearman(&x[..1], &x[..1]), Err(EvalError::TooShort(1))));
        assert!(matches!(spearman(&[0.5, 0.5], &[0.1, 0.2]), Err(EvalError::ZeroVariance)));
    }

    #[test]
    fn spearman_averages_tied_ranks() {
        let x = [1.0, 2.0, 2.0, 3.0];
        let y = [1.0, 2.0, 3.0, 4.0];
        let expected = 4.5 / (4.5f64 * 5.0).sqrt();
        assert!((spearman(&x, &y).unwrap() - expected).abs() < 1e-12);
    }

    // Independent check: ranks by pairwise counting, correlation expanded
    // directly, all O(n^2).
    fn spearman_bruteforce(xs: &[f64], ys: &[f64]) -> f64 {
        let rank = |vals: &[f64]| -> Vec<f64> {
            vals.iter()
                .map(|&v| {
                    let less = vals.iter().filter(|&&o| o < v).count();
                    let eq = vals.iter().filter(|&&o| o == v).count();
                    less as f64 + (eq as f64 + 1.0) / 2.0
                })
                .collect()
        };
        let rx = rank(xs);
        let ry = rank(ys);
        let n = xs.len() as f64;
        let mx = rx.iter().sum::<f64>() / n;
        let my = ry.iter().sum::<f64>() / n;
        let cov: f64 = rx.iter().zip(&ry).map(|(a, b)| (a - mx) * (b - my)).sum();
        let vx: f64 = rx.iter().map(|a| (a - mx) * (a - mx)).sum();
        let vy: f64 = ry.iter().map(|b| (b - my) * (b - my)).sum();
        cov / (vx * vy).sqrt()
    }

    #[test]
    fn spearman_matches_pairwise_counting_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let xs: Vec<f64> = (0..50)
            .map(|i| {
                let v = rng.gen::<f64>();
                if i % 2 == 0 {
                    (v * 10.0).round() / 10.0
                } else {
                    v
                }
            })
            .collect();
        let ys: Vec<f64> = (0..50)
            .map(|i| {
                let v = rng.gen::<f64>();
                if i % 3 == 0 {
                    (v * 10.0).round() / 10.0
                } else {
                    v
                }
            })
            .collect();
        let fast = spearman(&xs, &ys).unwrap();
        let slow = spearman_bruteforce(&xs, &ys);
        assert!((fast - slow).abs() < 1e-9, "{fast} vs {slow}");
    }

    fn sample_rows() -> Vec<EvalRow> {
        let mut rows = Vec::new();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for i in 0..40 {
            let dataset = if i % 3 == 0 { "setB" } else { "setA" };
            let gt = (i as f64 + 0.5) / 40.0;
            let pred = (gt + rng.gen_range(-0.05..0.05)).clamp(0.0, 1.0);
            let class = i % MODEL_EMOTIONS.len();
            let mut probs = vec![0.1; MODEL_EMOTIONS.len()];
            probs[class] = 0.7;
            rows.push(EvalRow {
                dataset_id: dataset.to_string(),
                pred_strength: pred,
                gt_strength: gt,
                pred_probs: probs,
                gt_class: class,
            });
        }
        rows
    }

    #[test]
    fn report_aggregates_and_splits_by_dataset() {
        let rows = sample_rows();
        let report = build_report(&rows).unwrap();
        assert_eq!(report.histogram.len(), HISTOGRAM_BINS);
        assert_eq!(report.histogram.iter().sum::<usize>(), rows.len());
        assert_eq!(report.ser_accuracy, 1.0);
        assert!(report.spearman > 0.9);
        assert_eq!(report.per_dataset.len(), 2);
        assert_eq!(report.per_dataset["setA"].count + report.per_dataset["setB"].count, 40);
        let total: usize = report.confusion.counts.iter().flatten().sum();
        assert_eq!(total, 40);
    }

    #[test]
    fn report_json_roundtrips() {
        let report = build_report(&sample_rows()).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("report.json");
        write_report(&path, &report).unwrap();
        let back = read_report(&path).unwrap();
        assert_eq!(back, report);
        write_histogram_tsv(&dir.path().join("hist.tsv"), &report.histogram).unwrap();
        write_confusion_tsv(&dir.path().join("conf.tsv"), &report.confusion).unwrap();
    }

    #[test]
    fn prediction_tsv_roundtrips() {
        let preds = vec![
            Prediction {
                utterance_id: "u001".into(),
                strength: 0.4375,
                emotion: "happy".into(),
                probs: vec![0.125, 0.625, 0.125, 0.125],
            },
            Prediction {
                utterance_id: "u002".into(),
                strength: 1.0,
                emotion: "sad".into(),
                probs: vec![0.0, 0.0, 1.0, 0.0],
            },
        ];
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("pred.tsv");
        write_predictions(&path, &preds).unwrap();
        let back = read_predictions(&path).unwrap();
        assert_eq!(back, preds);
        std::fs::write(&path, "wrong\theader\n").unwrap();
        assert!(matches!(read_predictions(&path), Err(EvalError::BadPrediction(_))));
    }
}
