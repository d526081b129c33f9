//! Primal rank-SVM solver with squared slack penalties.
//!
//! The training objective over pair difference vectors d = x_strong - x_weak
//! (ordered) and d = x_i - x_j (similar) is
//!
//!   f(w) = 0.5 |w|^2 + C ( sum_O max(0, 1 - w.d)^2 + sum_S (w.d)^2 )
//!
//! which is convex and differentiable, so full-batch gradient descent with
//! a backtracking line search finds the global minimum deterministically.

use super::pairs::PairSets;
use super::{RankError, RankResult};

/// Solver knobs. `standardize` z-scores feature dimensions before training
/// (weights are folded back to raw units afterwards), which keeps margins
/// comparable across dimensions of very different scales.
#[derive(Debug, Clone)]
pub struct SolverConfig {
    pub c: f64,
    pub max_iters: usize,
    /// Relative objective decrease below which training counts as converged.
    pub tol: f64,
    pub standardize: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig { c: 1.0, max_iters: 2000, tol: 1e-8, standardize: true }
    }
}

/// A trained linear ranking function with its score normalization bounds.
#[derive(Debug, Clone, PartialEq)]
pub struct RankingModel {
    pub w: Vec<f64>,
    pub score_min: f64,
    pub score_max: f64,
    pub emotion: String,
    pub dataset_id: String,
}

impl RankingModel {
    /// Unnormalized projection w.x.
    pub fn raw_score(&self, x: &[f64]) -> RankResult<f64> {
        if x.len() != self.w.len() {
            return Err(RankError::DimensionMismatch { expected: self.w.len(), got: x.len() });
        }
        Ok(self.w.iter().zip(x).map(|(&a, &b)| a * b).sum())
    }
}

/// A strength value in [0,1]; 1 is the strongest expression.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StrengthScore {
    pub value: f64,
}

/// Training outcome. `converged` is false when the tolerance was never
/// reached within the iteration budget; the model is still usable.
#[derive(Debug, Clone)]
pub struct RankerFit {
    pub model: RankingModel,
    pub converged: bool,
    pub iterations: usize,
    /// Objective value before training and after each accepted step.
    pub objective_trace: Vec<f64>,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(&x, &y)| x * y).sum()
}

/// Objective and, when `grad` is given, its gradient at `w`.
/// `diffs` is row-major with `d` columns; the first `n_ordered` rows carry
/// hinge terms, the rest squared-projection terms.
fn objective(
    w: &[f64],
    diffs: &[f64],
    n_ordered: usize,
    c: f64,
    mut grad: Option<&mut [f64]>,
) -> f64 {
    let d = w.len();
    let mut f = 0.5 * dot(w, w);
    if let Some(g) = grad.as_deref_mut() {
        g.copy_from_slice(w);
    }
    for (row, chunk) in diffs.chunks_exact(d).enumerate() {
        let s = dot(w, chunk);
        let coef = if row < n_ordered {
            let viol = (1.0 - s).max(0.0);
            f += c * viol * viol;
            -2.0 * c * viol
        } else {
            f += c * s * s;
            2.0 * c * s
        };
        if coef != 0.0 {
            if let Some(g) = grad.as_deref_mut() {
                for (gk, &dk) in g.iter_mut().zip(chunk) {
                    *gk += coef * dk;
                }
            }
        }
    }
    f
}

/// Train a ranking function on the given pair sets.
///
/// Returns the model together with a convergence flag and the objective
/// trace, which is strictly decreasing across accepted steps. Fails when
/// the referenced feature vectors are non-finite, all identical, or give
/// the trained model zero score spread.
///
/// Panics if `pairs.ordered` is empty; `build_pair_sets` never produces
/// such sets.
pub fn train_ranker(pairs: &PairSets, config: &SolverConfig) -> RankResult<RankerFit> {
    assert!(!pairs.ordered.is_empty(), "ordered pair set must be non-empty");
    assert!(config.c > 0.0, "margin tradeoff must be positive");
    let dim = pairs.features[0].len();

    let mut referenced: Vec<usize> =
        pairs.ordered.iter().chain(&pairs.similar).flat_map(|&(i, j)| [i, j]).collect();
    referenced.sort_unstable();
    referenced.dedup();

    for &i in &referenced {
        if pairs.features[i].iter().any(|v| !v.is_finite()) {
            return Err(RankError::DegenerateFeatures(format!(
                "non-finite value in feature vector {i}"
            )));
        }
    }
    let spread = (0..dim).any(|k| {
        let first = pairs.features[referenced[0]][k];
        referenced.iter().any(|&i| pairs.features[i][k] != first)
    });
    if !spread {
        return Err(RankError::DegenerateFeatures(
            "all referenced feature vectors are identical".into(),
        ));
    }

    // Per-dimension scale for standardization; constant dimensions keep
    // scale 1 (their pair differences are zero regardless).
    let scale: Vec<f64> = if config.standardize {
        let m = referenced.len() as f64;
        (0..dim)
            .map(|k| {
                let mean = referenced.iter().map(|&i| pairs.features[i][k]).sum::<f64>() / m;
                let var = referenced
                    .iter()
                    .map(|&i| {
                        let v = pairs.features[i][k] - mean;
                        v * v
                    })
                    .sum::<f64>()
                    / m;
                let std = var.sqrt();
                if std < 1e-12 {
                    1.0
                } else {
                    std
                }
            })
            .collect()
    } else {
        vec![1.0; dim]
    };

    let n_ordered = pairs.ordered.len();
    let mut diffs = Vec::with_capacity((n_ordered + pairs.similar.len()) * dim);
    for &(i, j) in pairs.ordered.iter().chain(&pairs.similar) {
        for k in 0..dim {
            diffs.push((pairs.features[i][k] - pairs.features[j][k]) / scale[k]);
        }
    }

    let mut w = vec![0.0f64; dim];
    let mut grad = vec![0.0f64; dim];
    let mut f = objective(&w, &diffs, n_ordered, config.c, Some(&mut grad));
    let mut trace = vec![f];
    let mut step = 1.0f64;
    let mut converged = false;
    let mut iterations = 0;

    for _ in 0..config.max_iters {
        let gnorm2 = dot(&grad, &grad);
        if gnorm2 < 1e-24 {
            converged = true;
            break;
        }
        let mut accepted = None;
        for _ in 0..60 {
            let w_try: Vec<f64> = w.iter().zip(&grad).map(|(&wk, &gk)| wk - step * gk).collect();
            let f_try = objective(&w_try, &diffs, n_ordered, config.c, None);
            if f_try <= f - 1e-4 * step * gnorm2 {
                accepted = Some((w_try, f_try));
                break;
            }
            step *= 0.5;
        }
        let Some((w_new, f_new)) = accepted else {
            // No descent step representable: numerically stationary.
            converged = true;
            break;
        };
        debug_assert!(f_new <= f, "objective must not increase");
        let rel = (f - f_new) / f.max(f64::MIN_POSITIVE);
        w = w_new;
        f = objective(&w, &diffs, n_ordered, config.c, Some(&mut grad));
        trace.push(f);
        iterations += 1;
        if rel < config.tol {
            converged = true;
            break;
        }
        step = (step * 1.3).min(1e6);
    }

    for (wk, &sk) in w.iter_mut().zip(&scale) {
        *wk /= sk;
    }
    if w.iter().all(|&v| v == 0.0) {
        return Err(RankError::DegenerateFeatures("training produced a zero weight vector".into()));
    }

    // Normalization bounds come from the rows the model will score:
    // those on the strong side of ordered pairs. Weak-side-only rows
    // (the neutral references) stay outside the bounds, so a score of 0
    // means "as weak as the weakest scored utterance", not "neutral".
    // With a single distinct strong-side row the bounds widen to every
    // referenced row.
    let mut scored: Vec<usize> = pairs.ordered.iter().map(|&(i, _)| i).collect();
    scored.sort_unstable();
    scored.dedup();
    let bounds_of = |rows: &[usize]| {
        let raws = rows.iter().map(|&i| dot(&w, &pairs.features[i]));
        raws.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), r| (lo.min(r), hi.max(r)))
    };
    let (mut score_min, mut score_max) = bounds_of(&scored);
    if !(score_max > score_min) {
        (score_min, score_max) = bounds_of(&referenced);
    }
    if !(score_max > score_min) {
        return Err(RankError::DegenerateFeatures(
            "zero strength-score spread over training utterances".into(),
        ));
    }

    Ok(RankerFit {
        model: RankingModel {
            w,
            score_min,
            score_max,
            emotion: pairs.emotion.clone(),
            dataset_id: pairs.dataset_id.clone(),
        },
        converged,
        iterations,
        objective_trace: trace,
    })
}

/// Min-max normalized strength of a feature vector under a trained model,
/// clamped to [0,1] so out-of-domain projections stay valid scores.
pub fn score(model: &RankingModel, x: &[f64]) -> RankResult<StrengthScore> {
    let raw = model.raw_score(x)?;
    let value = ((raw - model.score_min) / (model.score_max - model.score_min)).clamp(0.0, 1.0);
    Ok(StrengthScore { value })
}

#[cfg(test)]
pub(super) fn training_objective(pairs: &PairSets, w: &[f64], c: f64) -> f64 {
    let dim = pairs.features[0].len();
    let mut diffs = Vec::new();
    for &(i, j) in pairs.ordered.iter().chain(&pairs.similar) {
        for k in 0..dim {
            diffs.push(pairs.features[i][k] - pairs.features[j][k]);
        }
    }
    objective(w, &diffs, pairs.ordered.len(), c, None)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rank::testutil::separable_2d;

    fn single_pair() -> PairSets {
        PairSets {
            ordered: vec![(0, 1)],
            similar: vec![],
            features: vec![vec![2.0], vec![1.0]],
            emotion: "happy".into(),
            dataset_id: "unit".into(),
        }
    }

    #[test]
    fn single_pair_learns_the_forced_direction() {
        for standardize in [false, true] {
            let config = SolverConfig { standardize, ..SolverConfig::default() };
            let fit = train_ranker(&single_pair(), &config).unwrap();
            assert!(fit.converged);
            assert!(fit.model.w[0] > 0.0);
            let strong = fit.model.raw_score(&[2.0]).unwrap();
            let weak = fit.model.raw_score(&[1.0]).unwrap();
            assert!(strong > weak);
        }
        // Without standardization, min 0.5 w^2 + (1 - w)^2 sits at w = 2/3.
        let raw = SolverConfig { standardize: false, ..SolverConfig::default() };
        let fit = train_ranker(&single_pair(), &raw).unwrap();
        let w = fit.model.w[0];
        assert!((w - 2.0 / 3.0).abs() < 1e-3, "w = {w}");
    }

    #[test]
    fn objective_trace_never_increases() {
        let pairs = separable_2d(20, 20, 60, 30, 5);
        let fit = train_ranker(&pairs, &SolverConfig::default()).unwrap();
        assert!(fit.objective_trace.len() >= 2);
        for pair in fit.objective_trace.windows(2) {
            assert!(pair[1] <= pair[0], "{} -> {}", pair[0], pair[1]);
        }
    }

    #[test]
    fn separable_instance_satisfies_nearly_all_ordered_constraints() {
        let pairs = separable_2d(40, 40, 200, 100, 11);
        let fit = train_ranker(&pairs, &SolverConfig::default()).unwrap();
        let satisfied = pairs
            .ordered
            .iter()
            .filter(|&&(i, j)| {
                let si = fit.model.raw_score(&pairs.features[i]).unwrap();
                let sj = fit.model.raw_score(&pairs.features[j]).unwrap();
                si > sj
            })
            .count();
        assert!(satisfied as f64 >= 0.95 * pairs.ordered.len() as f64, "{satisfied}/200");
    }

    #[test]
    fn training_is_bit_deterministic() {
        let pairs = separable_2d(15, 15, 50, 25, 3);
        let a = train_ranker(&pairs, &SolverConfig::default()).unwrap();
        let b = train_ranker(&pairs, &SolverConfig::default()).unwrap();
        assert_eq!(a.model, b.model);
        for (x, y) in a.model.w.iter().zip(&b.model.w) {
            assert_eq!(x.to_bits(), y.to_bits());
        }
        assert_eq!(a.objective_trace, b.objective_trace);
    }

    #[test]
    fn scores_hit_normalization_endpoints() {
        let model = RankingModel {
            w: vec![1.0],
            score_min: -2.0,
            score_max: 2.0,
            emotion: "happy".into(),
            dataset_id: "unit".into(),
        };
        for (x, expected) in [(-2.0, 0.0), (0.0, 0.5), (2.0, 1.0)] {
            assert_eq!(score(&model, &[x]).unwrap().value, expected);
        }
        // Out-of-domain projections clamp.
        assert_eq!(score(&model, &[99.0]).unwrap().value, 1.0);
        assert_eq!(score(&model, &[-99.0]).unwrap().value, 0.0);
    }

    #[test]
    fn score_ordering_is_invariant_to_weight_rescaling() {
        let pairs = separable_2d(10, 10, 30, 10, 9);
        let fit = train_ranker(&pairs, &SolverConfig::default()).unwrap();
        let scaled = RankingModel {
            w: fit.model.w.iter().map(|&v| 3.0 * v).collect(),
            score_min: 3.0 * fit.model.score_min,
            score_max: 3.0 * fit.model.score_max,
            ..fit.model.clone()
        };
        for x in &pairs.features {
            let a = score(&fit.model, x).unwrap().value;
            let b = score(&scaled, x).unwrap().value;
            assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn dimension_mismatch_is_reported() {
        let model = RankingModel {
            w: vec![1.0, 2.0],
            score_min: 0.0,
            score_max: 1.0,
            emotion: "happy".into(),
            dataset_id: "unit".into(),
        };
        assert!(matches!(
            score(&model, &[1.0]),
            Err(RankError::DimensionMismatch { expected: 2, got: 1 })
        ));
    }

    #[test]
    fn identical_features_are_degenerate() {
        let pairs = PairSets {
            ordered: vec![(0, 1)],
            similar: vec![],
            features: vec![vec![1.0, 2.0], vec![1.0, 2.0]],
            emotion: "happy".into(),
            dataset_id: "unit".into(),
        };
        assert!(matches!(
            train_ranker(&pairs, &SolverConfig::default()),
            Err(RankError::DegenerateFeatures(_))
        ));
    }

    #[test]
    fn standardization_preserves_ranking_on_mixed_scales() {
        // Dimension 1 is the informative one but lives at a tiny scale.
        let mut pairs = separable_2d(20, 20, 80, 40, 13);
        for row in &mut pairs.features {
            row.swap(0, 1);
            row[1] *= 1e-4;
        }
        let fit = train_ranker(&pairs, &SolverConfig::default()).unwrap();
        let satisfied = pairs
            .ordered
            .iter()
            .filter(|&&(i, j)| {
                fit.model.raw_score(&pairs.features[i]).unwrap()
                    > fit.model.raw_score(&pairs.features[j]).unwrap()
            })
            .count();
        assert!(satisfied as f64 >= 0.95 * pairs.ordered.len() as f64);
    }
}
