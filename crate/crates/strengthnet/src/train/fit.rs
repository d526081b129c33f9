//! Gradient descent over utterances with padded batches, per-epoch
//! validation, best-checkpoint retention, and early stopping.
//!
//! Determinism contract: given identical configs, seeds, and inputs,
//! every parameter update and log value is identical. Per-utterance
//! passes may run on worker threads, but gradients are reduced in fixed
//! slot order, and the optimizer step is single-threaded.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::audio::{MelSpectrogram, NormStats};
use crate::autodiff::{adam_step, AdamConfig, AdamState, DiffResult, Tape, Tensor};
use crate::data::{
    emotion_class_index, make_batches, Batch, CorpusManifest, DataError, FeatureStore,
    MODEL_EMOTIONS,
};
use crate::eval::{mae, ser_accuracy};
use crate::model::{
    build_loss, forward_staged, LossComponents, StagedParams, StrengthNet, StrengthNetConfig,
};

use super::{mix_seed, EarlyStopper, StopDecision, TrainError, TrainResult, TrainingConfig};

/// Utterances whose gradients are computed concurrently before the
/// fixed-order reduction. Bounds transient gradient memory.
const GRAD_WAVE: usize = 16;

/// One line of the training log.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct EpochLog {
    pub epoch: usize,
    pub l_f_str: f64,
    pub l_u_str: f64,
    pub l_cat: f64,
    pub l_total: f64,
    pub val_mae: f64,
    pub val_acc: f64,
    pub seconds: f64,
}

/// Write one JSON object per line.
pub fn write_training_log(path: &Path, log: &[EpochLog]) -> TrainResult<()> {
    let mut w = BufWriter::new(File::create(path)?);
    for rec in log {
        serde_json::to_writer(&mut w, rec).map_err(crate::eval::EvalError::Json)?;
        writeln!(w)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_training_log(path: &Path) -> TrainResult<Vec<EpochLog>> {
    let reader = BufReader::new(File::open(path)?);
    let mut log = Vec::new();
    for line in reader.lines() {
        let line = line?;
        if line.is_empty() {
            continue;
        }
        log.push(serde_json::from_str(&line).map_err(crate::eval::EvalError::Json)?);
    }
    Ok(log)
}

/// Hooks for observing a run. The clock returns monotonic seconds; tests
/// inject a deterministic counter so logs become byte-stable.
pub struct FitOptions<'a> {
    pub clock: Option<Box<dyn FnMut() -> f64 + 'a>>,
    pub on_epoch: Option<Box<dyn FnMut(&EpochLog) + 'a>>,
}

impl Default for FitOptions<'_> {
    fn default() -> Self {
        FitOptions { clock: None, on_epoch: None }
    }
}

/// A finished run: the best-validation-MAE model and the full log.
#[derive(Debug)]
pub struct FitOutcome {
    pub model: StrengthNet,
    pub best_epoch: usize,
    pub best_val_mae: f64,
    pub log: Vec<EpochLog>,
    pub stopped_early: bool,
}

struct ValRow<'a> {
    spec: &'a MelSpectrogram,
    gt: f64,
    class: usize,
}

/// Forward/backward for one utterance on its own tape. Parameters are
/// staged as leaves from the shared working copy.
fn utterance_pass(
    config: &StrengthNetConfig,
    work: &[Tensor<f32>],
    batch: &Batch,
    slot: usize,
    dropout_seed: u64,
) -> DiffResult<(Vec<Tensor<f32>>, LossComponents)> {
    let mut tape: Tape<f32> = Tape::new();
    let mut vars = Vec::with_capacity(work.len());
    for tensor in work {
        vars.push(tape.leaf(tensor.clone())?);
    }
    let staged = StagedParams { vars };
    let x = tape.constant(batch.utterance_input(slot))?;
    let valid = batch.valid_len(slot);
    let seed = (config.dropout > 0.0).then_some(dropout_seed);
    let fwd = forward_staged(&mut tape, config, &staged, x, valid, seed)?;
    let loss = build_loss(&mut tape, &fwd, valid, batch.gt_strength[slot], batch.one_hot(slot))?;
    tape.backward(loss.l_total)?;
    let grads = staged.vars.iter().map(|&v| tape.grad(v)).collect();
    Ok((grads, loss.components(&tape)))
}

fn validation_metrics(net: &StrengthNet, rows: &[ValRow<'_>]) -> TrainResult<(f64, f64)> {
    let outputs = rows
        .par_iter()
        .map(|row| net.infer(row.spec))
        .collect::<Result<Vec<_>, _>>()?;
    let pred: Vec<f64> = outputs.iter().map(|o| o.utterance_score as f64).collect();
    let gt: Vec<f64> = rows.iter().map(|r| r.gt).collect();
    let probs: Vec<Vec<f32>> = outputs.into_iter().map(|o| o.emotion_probs).collect();
    let classes: Vec<usize> = rows.iter().map(|r| r.class).collect();
    Ok((mae(&pred, &gt)?, ser_accuracy(&probs, &classes)?))
}

// The tape rejects non-finite values as soon as an op produces one, so a
// diverging batch surfaces as a per-utterance NonFiniteValue error.
fn non_finite_loss(epoch: usize, batch_idx: usize, batch: &Batch, slot: usize, op: &str) -> TrainError {
    TrainError::NonFiniteLoss {
        epoch,
        batch: batch_idx,
        detail: format!(
            "utterance {} hit a non-finite value in op '{}'; batch ids [{}]",
            batch.utterance_ids[slot],
            op,
            batch.utterance_ids.join(", ")
        ),
    }
}

/// Train a fresh model. The model config's dropout is replaced by the
/// training config's value; the returned model carries the parameters of
/// the epoch with the lowest validation MAE.
pub fn fit(
    model_config: &StrengthNetConfig,
    train_config: &TrainingConfig,
    train: &CorpusManifest,
    val: &CorpusManifest,
    features: &FeatureStore,
    stats: &NormStats,
    mut options: FitOptions,
) -> TrainResult<FitOutcome> {
    train_config.validate()?;
    let mut config = model_config.clone();
    config.dropout = train_config.dropout;
    config.validate()?;
    if config.num_emotions != MODEL_EMOTIONS.len() {
        return Err(TrainError::BadConfig(format!(
            "model expects {} emotion classes, batches carry {}",
            config.num_emotions,
            MODEL_EMOTIONS.len()
        )));
    }

    let normalized = features.normalized_all(stats);
    let mut val_rows = Vec::new();
    for record in &val.records {
        let (Some(gt), Some(class)) =
            (record.strength, emotion_class_index(&record.emotion))
        else {
            continue;
        };
        let spec = normalized
            .get(&record.utterance_id)
            .ok_or_else(|| DataError::MissingFeature(record.utterance_id.clone()))?;
        val_rows.push(ValRow { spec, gt, class });
    }
    if val_rows.is_empty() {
        return Err(TrainError::NoValidationData);
    }

    let mut net = StrengthNet::init(config.clone(), train_config.seed)?;
    let mut work: Vec<Tensor<f32>> = net.params.tensors().cloned().collect();
    let mut adam = AdamState::new(&work);
    let adam_cfg = AdamConfig {
        lr: train_config.lr as f32,
        beta1: train_config.beta1 as f32,
        beta2: train_config.beta2 as f32,
        epsilon: 1e-8,
    };

    let mut clock: Box<dyn FnMut() -> f64> = match options.clock.take() {
        Some(c) => c,
        None => {
            let start = Instant::now();
            Box::new(move || start.elapsed().as_secs_f64())
        }
    };

    let mut stopper = EarlyStopper::new(train_config.patience);
    let mut best_params = work.clone();
    let mut log = Vec::new();
    let mut stopped_early = false;

    for epoch in 1..=train_config.max_epochs {
        let t0 = clock();
        let batch_seed = mix_seed(&[train_config.seed, epoch as u64, 0xBA7C]);
        let batches = make_batches(train, &normalized, train_config.batch_size, batch_seed)?;

        let mut epoch_components = Vec::new();
        for (batch_idx, batch) in batches.iter().enumerate() {
            let mut acc: Vec<Tensor<f32>> =
                work.iter().map(|t| Tensor::zeros(t.shape().to_vec())).collect();
            let mut comps = Vec::with_capacity(batch.len());
            let slots: Vec<usize> = (0..batch.len()).collect();
            for wave in slots.chunks(GRAD_WAVE) {
                let results: Vec<(usize, DiffResult<(Vec<Tensor<f32>>, LossComponents)>)> = wave
                    .par_iter()
                    .map(|&slot| {
                        let seed = mix_seed(&[
                            train_config.seed,
                            epoch as u64,
                            batch_idx as u64,
                            slot as u64,
                        ]);
                        (slot, utterance_pass(&config, &work, batch, slot, seed))
                    })
                    .collect();
                for (slot, result) in results {
                    let (grads, c) = match result {
                        Ok(pair) => pair,
                        Err(crate::autodiff::DiffError::NonFiniteValue(op)) => {
                            return Err(non_finite_loss(epoch, batch_idx, batch, slot, op));
                        }
                        Err(e) => return Err(e.into()),
                    };
                    for (a, g) in acc.iter_mut().zip(&grads) {
                        for (av, gv) in a.data_mut().iter_mut().zip(g.data()) {
                            *av += gv;
                        }
                    }
                    comps.push(c);
                }
            }
            let scale = 1.0 / batch.len() as f32;
            for a in &mut acc {
                for v in a.data_mut() {
                    *v *= scale;
                }
            }
            adam_step(&mut work, &acc, &mut adam, &adam_cfg)?;
            epoch_components.extend(comps);
        }

        let mean = LossComponents::mean(&epoch_components);
        for (i, tensor) in work.iter().enumerate() {
            *net.params.tensor_mut(i) = tensor.clone();
        }
        let (val_mae, val_acc) = validation_metrics(&net, &val_rows)?;
        let seconds = clock() - t0;
        let record = EpochLog {
            epoch,
            l_f_str: mean.l_f_str,
            l_u_str: mean.l_u_str,
            l_cat: mean.l_cat,
            l_total: mean.l_total,
            val_mae,
            val_acc,
            seconds,
        };
        if let Some(hook) = options.on_epoch.as_mut() {
            hook(&record);
        }
        log.push(record);

        match stopper.observe(epoch, val_mae) {
            StopDecision::Improved => best_params = work.clone(),
            StopDecision::Continue => {}
            StopDecision::Stop => {
                stopped_early = true;
                break;
            }
        }
    }

    for (i, tensor) in best_params.iter().enumerate() {
        *net.params.tensor_mut(i) = tensor.clone();
    }
    Ok(FitOutcome {
        model: net,
        best_epoch: stopper.best_epoch(),
        best_val_mae: stopper.best_mae(),
        log,
        stopped_early,
    })
}
