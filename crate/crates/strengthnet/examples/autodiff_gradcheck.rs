//! Checks reverse-mode gradients against central differences, first for
//! a small hand-built network and then for the full strength model.

use strengthnet::autodiff::{
    gradient_check, random_leaves, DiffResult, GradCheckOptions, LossBuilder, Real, Tape, Tensor,
    Var,
};
use strengthnet::model::{NetLossBuilder, ParameterSet, StrengthNetConfig};

/// Two-layer net with both heads: a scalar regression through sigmoid
/// and a class distribution through softmax. Leaves double as input and
/// parameters so the check covers every gradient path.
struct TinyNet;

impl LossBuilder for TinyNet {
    fn build<T: Real>(&self, tape: &mut Tape<T>, leaves: &[Var]) -> DiffResult<Var> {
        let [x, w1, b1, w2, b2, w3, b3] = leaves[..] else { panic!("expected 7 leaves") };
        let h = tape.dense(x, w1, b1)?;
        let h = tape.tanh(h)?;
        let score = tape.dense(h, w2, b2)?;
        let score = tape.sigmoid(score)?;
        let target = Tensor::new(vec![1], vec![T::from_f64(0.35)]);
        let reg = tape.mae_loss(score, &target, 1)?;
        let logits = tape.dense(h, w3, b3)?;
        let probs = tape.softmax(logits)?;
        let onehot = Tensor::new(vec![4], vec![T::zero(), T::one(), T::zero(), T::zero()]);
        let cls = tape.cross_entropy_loss(probs, &onehot)?;
        tape.add(reg, cls)
    }
}

fn main() {
    let shapes: [&[usize]; 7] =
        [&[8], &[8, 16], &[16], &[16, 1], &[1], &[16, 4], &[4]];
    let leaves = random_leaves(&shapes, 0.5, 3);
    let opts = GradCheckOptions::default();
    let report = gradient_check(&TinyNet, &leaves, &opts).unwrap();
    println!(
        "tiny net: {} coordinates probed, max relative error {:.3e}",
        report.checks.len(),
        report.max_rel_error
    );
    assert!(report.max_rel_error < 1e-4);

    // Full model on a short clip. A narrow config keeps the runtime of
    // the finite-difference sweep reasonable.
    let config = StrengthNetConfig {
        mel_channels: 80,
        conv_block_filters: vec![4, 8],
        layers_per_block: 2,
        block_strides: vec![(1, 1), (1, 3)],
        kernel: (3, 3),
        bilstm_hidden: 8,
        fc_hidden: 8,
        num_emotions: 4,
        dropout: 0.0,
    };
    let params: Vec<Tensor<f32>> = ParameterSet::init(&config, 11).tensors().cloned().collect();
    let frames = 6;
    let input = random_leaves(&[&[frames, config.mel_channels, 1]], 1.0, 12).remove(0);
    let builder = NetLossBuilder {
        config: config.clone(),
        input,
        valid_t: frames,
        gt_strength: 0.6,
        gt_onehot: vec![0.0, 0.0, 1.0, 0.0],
        dropout_seed: None,
    };
    let opts = GradCheckOptions { max_coords_per_tensor: 20, ..GradCheckOptions::default() };
    let report = gradient_check(&builder, &params, &opts).unwrap();
    println!(
        "full model: {} coordinates probed, max relative error {:.3e}",
        report.checks.len(),
        report.max_rel_error
    );
    assert!(report.max_rel_error < 1e-3);
}
