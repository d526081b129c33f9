//! Forward pass wiring.

use crate::audio::MelSpectrogram;
use crate::autodiff::{DiffResult, LossBuilder, Real, Tape, Tensor, Var};

use super::config::StrengthNetConfig;
use super::loss::build_loss;
use super::params::{DenseLayer, Head, Layout, ParameterSet};
use super::{ModelError, ModelResult};

/// Tape variables for every parameter tensor, in canonical order.
pub struct StagedParams {
    pub vars: Vec<Var>,
}

/// Tape variables produced by one forward pass.
pub struct ForwardVars {
    /// Encoder output, frames x encoder_out_dim.
    pub h: Var,
    /// Per-frame strength in (0,1), frames x 1. Rows past the valid
    /// length are meaningless and never consumed downstream.
    pub frame_scores: Var,
    /// Masked time-average of the valid frame scores, a 1-vector.
    pub utterance_score: Var,
    /// Emotion probabilities, a num_emotions-vector summing to 1.
    pub emotion_probs: Var,
}

/// Concrete outputs for one utterance.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelOutput {
    pub frame_scores: Vec<f32>,
    pub utterance_score: f32,
    pub emotion_probs: Vec<f32>,
}

/// Run the network on staged parameters. `x` must be a frames x channels
/// x 1 tensor variable; only the first `valid_t` frames are treated as
/// real. With `dropout_seed` set, inverted dropout is applied to each
/// BiLSTM output sequence and after FC1's ReLU (training mode); inference
/// passes `None` and is deterministic.
pub fn forward_staged<T: Real>(
    tape: &mut Tape<T>,
    config: &StrengthNetConfig,
    staged: &StagedParams,
    x: Var,
    valid_t: usize,
    dropout_seed: Option<u64>,
) -> DiffResult<ForwardVars> {
    let layout = Layout::of(config);
    let lstm_vars = |at: usize| crate::autodiff::LstmDirVars {
        wx: staged.vars[at],
        wh: staged.vars[at + 1],
        b: staged.vars[at + 2],
    };
    // Each dropout site gets its own mask stream.
    let site_seed =
        |site: u64| dropout_seed.map(|s| s ^ site.wrapping_mul(0x9E37_79B9_7F4A_7C15));

    let mut cur = x;
    for bi in 0..layout.blocks {
        for li in 0..layout.layers {
            let w = staged.vars[layout.conv_w(bi, li)];
            let b = staged.vars[layout.conv_b(bi, li)];
            cur = tape.conv2d(cur, w, b, config.block_strides[li], valid_t)?;
            cur = tape.relu(cur)?;
        }
    }
    let h = tape.flatten_freq(cur)?;

    let mut s = tape.bilstm(
        h,
        lstm_vars(layout.lstm(Head::Strength, false)),
        lstm_vars(layout.lstm(Head::Strength, true)),
        config.bilstm_hidden,
        valid_t,
    )?;
    if let Some(seed) = site_seed(0) {
        s = tape.dropout(s, config.dropout, true, seed)?;
    }
    let fc1 = layout.dense(DenseLayer::Fc1);
    let mut z = tape.dense(s, staged.vars[fc1], staged.vars[fc1 + 1])?;
    z = tape.relu(z)?;
    if let Some(seed) = site_seed(1) {
        z = tape.dropout(z, config.dropout, true, seed)?;
    }
    let fc2 = layout.dense(DenseLayer::Fc2);
    let logit = tape.dense(z, staged.vars[fc2], staged.vars[fc2 + 1])?;
    let frame_scores = tape.sigmoid(logit)?;
    let utterance_score = tape.avg_pool_time(frame_scores, valid_t)?;

    let mut e = tape.bilstm(
        h,
        lstm_vars(layout.lstm(Head::Emotion, false)),
        lstm_vars(layout.lstm(Head::Emotion, true)),
        config.bilstm_hidden,
        valid_t,
    )?;
    if let Some(seed) = site_seed(2) {
        e = tape.dropout(e, config.dropout, true, seed)?;
    }
    let pooled = tape.avg_pool_time(e, valid_t)?;
    let out = layout.dense(DenseLayer::EmotionOut);
    let logits = tape.dense(pooled, staged.vars[out], staged.vars[out + 1])?;
    let emotion_probs = tape.softmax(logits)?;

    Ok(ForwardVars { h, frame_scores, utterance_score, emotion_probs })
}

/// Configuration plus parameters; the unit of training and inference.
#[derive(Debug, Clone)]
pub struct StrengthNet {
    pub config: StrengthNetConfig,
    pub params: ParameterSet,
}

impl StrengthNet {
    pub fn new(config: StrengthNetConfig, params: ParameterSet) -> ModelResult<StrengthNet> {
        config.validate()?;
        params.validate_against(&config)?;
        Ok(StrengthNet { config, params })
    }

    /// Fresh randomly initialized network.
    pub fn init(config: StrengthNetConfig, seed: u64) -> ModelResult<StrengthNet> {
        config.validate()?;
        let params = ParameterSet::init(&config, seed);
        Ok(StrengthNet { config, params })
    }

    /// Put every parameter tensor on a tape, as gradient-tracked leaves
    /// for training or constants for inference.
    pub fn stage<T: Real>(&self, tape: &mut Tape<T>, trainable: bool) -> DiffResult<StagedParams> {
        let mut vars = Vec::with_capacity(self.params.len());
        for tensor in self.params.tensors() {
            let value = tensor.cast::<T>();
            vars.push(if trainable { tape.leaf(value)? } else { tape.constant(value)? });
        }
        Ok(StagedParams { vars })
    }

    pub fn forward<T: Real>(
        &self,
        tape: &mut Tape<T>,
        staged: &StagedParams,
        x: Var,
        valid_t: usize,
        dropout_seed: Option<u64>,
    ) -> DiffResult<ForwardVars> {
        forward_staged(tape, &self.config, staged, x, valid_t, dropout_seed)
    }

    /// Deterministic inference on one normalized spectrogram.
    pub fn infer(&self, spec: &MelSpectrogram) -> ModelResult<ModelOutput> {
        if !spec.is_normalized() {
            return Err(ModelError::UnnormalizedInput);
        }
        if spec.channels() != self.config.mel_channels {
            return Err(ModelError::ShapeMismatch(format!(
                "{} mel channels, model expects {}",
                spec.channels(),
                self.config.mel_channels
            )));
        }
        let t_len = spec.frames();
        if t_len == 0 {
            return Err(ModelError::ShapeMismatch("empty spectrogram".into()));
        }
        let mut tape: Tape<f32> = Tape::new();
        let staged = self.stage(&mut tape, false)?;
        let x = tape
            .constant(Tensor::new(vec![t_len, self.config.mel_channels, 1], spec.data().to_vec()))?;
        let out = self.forward(&mut tape, &staged, x, t_len, None)?;
        Ok(ModelOutput {
            frame_scores: tape.value(out.frame_scores).data().to_vec(),
            utterance_score: tape.value(out.utterance_score).data()[0],
            emotion_probs: tape.value(out.emotion_probs).data().to_vec(),
        })
    }
}

/// Builds the full training loss from parameter leaves; drives the
/// gradient checker end to end.
pub struct NetLossBuilder {
    pub config: StrengthNetConfig,
    pub input: Tensor<f32>,
    pub valid_t: usize,
    pub gt_strength: f64,
    pub gt_onehot: Vec<f32>,
    pub dropout_seed: Option<u64>,
}

impl LossBuilder for NetLossBuilder {
    fn build<T: Real>(&self, tape: &mut Tape<T>, leaves: &[Var]) -> DiffResult<Var> {
        let staged = StagedParams { vars: leaves.to_vec() };
        let x = tape.constant(self.input.cast::<T>())?;
        let fwd =
            forward_staged(tape, &self.config, &staged, x, self.valid_t, self.dropout_seed)?;
        let loss = build_loss(tape, &fwd, self.valid_t, self.gt_strength, &self.gt_onehot)?;
        Ok(loss.l_total)
    }
}
