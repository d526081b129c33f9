//! The multi-task training objective.
//!
//! Three unweighted terms: frame-level strength MAE (the utterance ground
//! truth broadcast to every valid frame), utterance-level strength MAE,
//! and emotion cross-entropy. The reported total is their f64 sum, so
//! additivity holds exactly no matter what precision the tape ran at.

use crate::autodiff::{DiffResult, Real, Tape, Tensor, Var, PROB_CLAMP};

use super::net::{ForwardVars, ModelOutput};
use super::{ModelError, ModelResult};

/// Loss values for one utterance (or averaged over a batch).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossComponents {
    pub l_f_str: f64,
    pub l_u_str: f64,
    pub l_cat: f64,
    pub l_total: f64,
}

impl LossComponents {
    pub fn new(l_f_str: f64, l_u_str: f64, l_cat: f64) -> LossComponents {
        LossComponents { l_f_str, l_u_str, l_cat, l_total: l_f_str + l_u_str + l_cat }
    }

    /// Elementwise mean of several components, e.g. over a batch.
    pub fn mean(parts: &[LossComponents]) -> LossComponents {
        let n = parts.len() as f64;
        LossComponents::new(
            parts.iter().map(|p| p.l_f_str).sum::<f64>() / n,
            parts.iter().map(|p| p.l_u_str).sum::<f64>() / n,
            parts.iter().map(|p| p.l_cat).sum::<f64>() / n,
        )
    }

    pub fn is_finite(&self) -> bool {
        self.l_f_str.is_finite()
            && self.l_u_str.is_finite()
            && self.l_cat.is_finite()
            && self.l_total.is_finite()
    }
}

/// Tape variables for the loss terms; `l_total` is the differentiation
/// root used by training.
pub struct LossVars {
    pub l_f_str: Var,
    pub l_u_str: Var,
    pub l_cat: Var,
    pub l_total: Var,
}

impl LossVars {
    /// Read the terms off the tape. The total is re-summed in f64.
    pub fn components<T: Real>(&self, tape: &Tape<T>) -> LossComponents {
        LossComponents::new(
            tape.value(self.l_f_str).data()[0].as_f64(),
            tape.value(self.l_u_str).data()[0].as_f64(),
            tape.value(self.l_cat).data()[0].as_f64(),
        )
    }
}

/// Build the training loss for one utterance on the tape.
pub fn build_loss<T: Real>(
    tape: &mut Tape<T>,
    fwd: &ForwardVars,
    valid_t: usize,
    gt_strength: f64,
    gt_onehot: &[f32],
) -> DiffResult<LossVars> {
    let target = Tensor::scalar(T::from_f64(gt_strength));
    let l_f_str = tape.mae_loss(fwd.frame_scores, &target, valid_t)?;
    let l_u_str = tape.mae_loss(fwd.utterance_score, &target, 1)?;
    let onehot = Tensor::new(
        vec![gt_onehot.len()],
        gt_onehot.iter().map(|&v| T::from_f32(v)).collect(),
    );
    let l_cat = tape.cross_entropy_loss(fwd.emotion_probs, &onehot)?;
    let partial = tape.add(l_f_str, l_u_str)?;
    let l_total = tape.add(partial, l_cat)?;
    Ok(LossVars { l_f_str, l_u_str, l_cat, l_total })
}

/// Loss on concrete outputs, in f64. `valid` bounds the frame scores that
/// count (padded rows beyond it are ignored).
pub fn total_loss(
    output: &ModelOutput,
    valid: usize,
    gt_strength: f64,
    gt_onehot: &[f32],
) -> ModelResult<LossComponents> {
    if valid == 0 || valid > output.frame_scores.len() {
        return Err(ModelError::ShapeMismatch(format!(
            "valid {} of {} frame scores",
            valid,
            output.frame_scores.len()
        )));
    }
    if gt_onehot.len() != output.emotion_probs.len() {
        return Err(ModelError::ShapeMismatch(format!(
            "{} emotion targets for {} probabilities",
            gt_onehot.len(),
            output.emotion_probs.len()
        )));
    }
    let l_f_str = output.frame_scores[..valid]
        .iter()
        .map(|&a| (a as f64 - gt_strength).abs())
        .sum::<f64>()
        / valid as f64;
    let l_u_str = (output.utterance_score as f64 - gt_strength).abs();
    let l_cat = output
        .emotion_probs
        .iter()
        .zip(gt_onehot)
        .filter(|&(_, &y)| y != 0.0)
        .map(|(&p, &y)| -(y as f64) * (p as f64).max(PROB_CLAMP).ln())
        .sum::<f64>();
    Ok(LossComponents::new(l_f_str, l_u_str, l_cat))
}
