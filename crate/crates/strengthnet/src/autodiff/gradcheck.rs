//! Finite-difference gradient checking.
//!
//! The loss is built twice: once on an `f32` tape whose backward pass
//! produces the analytic gradients under test, and once per probe on an
//! `f64` shadow tape used only for central differences. Builders are
//! generic over the scalar so both passes run the identical graph (and,
//! because dropout masks are drawn in `f32` space, the identical masks).

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::tape::{Tape, Var};
use super::tensor::{Real, Tensor};
use super::DiffResult;

/// Builds the scalar loss under test from tracked leaves, for any scalar
/// type. `leaves[i]` corresponds to the i-th tensor handed to
/// [`gradient_check`].
pub trait LossBuilder {
    fn build<T: Real>(&self, tape: &mut Tape<T>, leaves: &[Var]) -> DiffResult<Var>;
}

#[derive(Debug, Clone, Copy)]
pub struct GradCheckOptions {
    /// Central-difference step.
    pub step: f64,
    /// Coordinates probed per tensor; larger tensors are subsampled.
    pub max_coords_per_tensor: usize,
    /// Seed for coordinate subsampling.
    pub seed: u64,
}

impl Default for GradCheckOptions {
    fn default() -> Self {
        Self { step: 1e-3, max_coords_per_tensor: 200, seed: 0 }
    }
}

/// One probed coordinate: analytic gradient vs central difference.
#[derive(Debug, Clone, Copy)]
pub struct CoordCheck {
    pub tensor: usize,
    pub index: usize,
    pub analytic: f64,
    pub numeric: f64,
}

#[derive(Debug)]
pub struct GradCheckReport {
    pub checks: Vec<CoordCheck>,
    /// Largest analytic gradient magnitude over every coordinate of every
    /// leaf, used to floor relative errors for near-zero coordinates.
    pub scale: f64,
    pub max_rel_error: f64,
}

fn rel_error(analytic: f64, numeric: f64, scale: f64) -> f64 {
    let denom = analytic.abs().max(numeric.abs()).max(1e-3 * scale).max(1e-12);
    (analytic - numeric).abs() / denom
}

/// Worst relative error over a set of checks; separated out so tests can
/// re-score deliberately corrupted gradients.
pub fn max_relative_error(checks: &[CoordCheck], scale: f64) -> f64 {
    checks.iter().map(|c| rel_error(c.analytic, c.numeric, scale)).fold(0.0, f64::max)
}

/// Uniform random leaf tensors in `[-scale, scale]`, for building check
/// inputs from shapes and a seed.
pub fn random_leaves(shapes: &[&[usize]], scale: f32, seed: u64) -> Vec<Tensor<f32>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    shapes
        .iter()
        .map(|s| {
            let n: usize = s.iter().product();
            Tensor::new(s.to_vec(), (0..n).map(|_| rng.gen_range(-scale..=scale)).collect())
        })
        .collect()
}

/// Compare analytic gradients of `builder`'s loss against central finite
/// differences at every (sub)sampled coordinate of every leaf.
pub fn gradient_check(
    builder: &impl LossBuilder,
    leaves: &[Tensor<f32>],
    opts: &GradCheckOptions,
) -> DiffResult<GradCheckReport> {
    // Analytic pass in f32.
    let mut tape = Tape::<f32>::new();
    let vars: Vec<Var> = leaves.iter().map(|t| tape.leaf(t.clone())).collect::<DiffResult<_>>()?;
    let loss = builder.build(&mut tape, &vars)?;
    tape.backward(loss)?;
    let analytic: Vec<Tensor<f32>> = vars.iter().map(|&v| tape.grad(v)).collect();
    drop(tape);

    let scale = analytic
        .iter()
        .flat_map(|g| g.data().iter())
        .map(|&v| (v as f64).abs())
        .fold(0.0, f64::max);

    // Shadow pass per probe in f64.
    let mut shadow: Vec<Tensor<f64>> = leaves.iter().map(Tensor::cast).collect();
    let eval = |shadow: &[Tensor<f64>]| -> DiffResult<f64> {
        let mut tape = Tape::<f64>::new();
        let vars: Vec<Var> =
            shadow.iter().map(|t| tape.leaf(t.clone())).collect::<DiffResult<_>>()?;
        let loss = builder.build(&mut tape, &vars)?;
        Ok(tape.value(loss).item())
    };

    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut checks = Vec::new();
    for ti in 0..leaves.len() {
        let n = leaves[ti].numel();
        let coords: Vec<usize> = if n <= opts.max_coords_per_tensor {
            (0..n).collect()
        } else {
            let mut picked = std::collections::BTreeSet::new();
            while picked.len() < opts.max_coords_per_tensor {
                picked.insert(rng.gen_range(0..n));
            }
            picked.into_iter().collect()
        };
        for idx in coords {
            let orig = shadow[ti].data()[idx];
            shadow[ti].data_mut()[idx] = orig + opts.step;
            let plus = eval(&shadow)?;
            shadow[ti].data_mut()[idx] = orig - opts.step;
            let minus = eval(&shadow)?;
            shadow[ti].data_mut()[idx] = orig;
            checks.push(CoordCheck {
                tensor: ti,
                index: idx,
                analytic: analytic[ti].data()[idx] as f64,
                numeric: (plus - minus) / (2.0 * opts.step),
            });
        }
    }

    let max_rel_error = max_relative_error(&checks, scale);
    Ok(GradCheckReport { checks, scale, max_rel_error })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::autodiff::tape::LstmDirVars;

    /// Every per-op check must beat this bound.
    const TOL: f64 = 1e-4;

    fn constant<T: Real>(tape: &mut Tape<T>, t: &Tensor<f32>) -> Var {
        tape.constant(t.cast()).expect("finite constant")
    }

    struct DenseTanhMae;
    impl LossBuilder for DenseTanhMae {
        fn build<T: Real>(&self, tape: &mut Tape<T>, leaves: &[Var]) -> DiffResult<Var> {
            let y = tape.dense(leaves[0], leaves[1], leaves[2])?;
            let y = tape.tanh(y)?;
            let target = Tensor::new(vec![1], vec![T::from_f32(10.0)]);
            tape.mae_loss(y, &target, tape.value(y).numel())
        }
    }

    #[test]
    fn dense_layer_gradients_match_finite_differences() {
        let leaves = random_leaves(&[&[3, 4], &[4, 2], &[2]], 0.8, 42);
        let report = gradient_check(&DenseTanhMae, &leaves, &GradCheckOptions::default()).unwrap();
        assert!(report.max_rel_error < TOL, "max rel error {}", report.max_rel_error);
    }

    #[test]
    fn corrupting_gradients_by_two_is_flagged() {
        let leaves = random_leaves(&[&[3, 4], &[4, 2], &[2]], 0.8, 42);
        let report = gradient_check(&DenseTanhMae, &leaves, &GradCheckOptions::default()).unwrap();
        let corrupted: Vec<CoordCheck> = report
            .checks
            .iter()
            .map(|c| CoordCheck { analytic: 2.0 * c.analytic, ..*c })
            .collect();
        let err = max_relative_error(&corrupted, report.scale);
        assert!(err > 0.1, "doubled gradients scored only {err}");
    }

    struct ConvChain {
        stride: (usize, usize),
        valid: usize,
        proj: Tensor<f32>,
    }
    impl LossBuilder for ConvChain {
        fn build<T: Real>(&self, tape: &mut Tape<T>, leaves: &[Var]) -> DiffResult<Var> {
            let y = tape.conv2d(leaves[0], leaves[1], leaves[2], self.stride, self.valid)?;
            let flat = tape.flatten_freq(y)?;
            let pooled = tape.avg_pool_time(flat, self.valid)?;
            let w = constant(tape, &self.proj);
            let b = tape.constant(Tensor::new(vec![1], vec![T::zero()]))?;
            tape.dense(pooled, w, b)
        }
    }

    #[test]
    fn conv_gradients_match_finite_differences() {
        for (stride, valid) in [((1usize, 1usize), 4usize), ((1, 3), 5), ((1, 1), 5)] {
            let leaves = random_leaves(&[&[5, 6, 2], &[3, 3, 2, 3], &[3]], 0.7, 7 + valid as u64);
            let f_out = if stride.1 == 3 { 2 } else { 6 };
            let proj = random_leaves(&[&[f_out * 3, 1]], 1.0, 99)[0].clone();
            let builder = ConvChain { stride, valid, proj };
            let report = gradient_check(&builder, &leaves, &GradCheckOptions::default()).unwrap();
            assert!(
                report.max_rel_error < TOL,
                "stride {stride:?} valid {valid}: {}",
                report.max_rel_error
            );
        }
    }

    #[test]
    fn conv_gradients_survive_asymmetric_frequency_padding() {
        // Width 8 at stride 3 gives 3 output columns and one padding
        // column total, split 0 left / 1 right.
        let leaves = random_leaves(&[&[6, 8, 4], &[3, 3, 4, 4], &[4]], 0.7, 202);
        let proj = random_leaves(&[&[3 * 4, 1]], 1.0, 203)[0].clone();
        let builder = ConvChain { stride: (1, 3), valid: 6, proj };
        let report = gradient_check(&builder, &leaves, &GradCheckOptions::default()).unwrap();
        assert!(report.max_rel_error < TOL, "max rel error {}", report.max_rel_error);
    }

    struct SigmoidMae;
    impl LossBuilder for SigmoidMae {
        fn build<T: Real>(&self, tape: &mut Tape<T>, leaves: &[Var]) -> DiffResult<Var> {
            let y = tape.sigmoid(leaves[0])?;
            let target = Tensor::new(vec![1], vec![T::from_f32(2.0)]);
            tape.mae_loss(y, &target, tape.value(y).numel())
        }
    }

    #[test]
    fn sigmoid_gradients_match_finite_differences() {
        let leaves = random_leaves(&[&[9]], 2.0, 3);
        let report = gradient_check(&SigmoidMae, &leaves, &GradCheckOptions::default()).unwrap();
        assert!(report.max_rel_error < TOL, "max rel error {}", report.max_rel_error);
    }

    struct SoftmaxCe;
    impl LossBuilder for SoftmaxCe {
        fn build<T: Real>(&self, tape: &mut Tape<T>, leaves: &[Var]) -> DiffResult<Var> {
            let p = tape.softmax(leaves[0])?;
            let mut onehot = Tensor::zeros(vec![4]);
            onehot.data_mut()[2] = T::one();
            tape.cross_entropy_loss(p, &onehot)
        }
    }

    #[test]
    fn softmax_cross_entropy_gradients_match_finite_differences() {
        let leaves = random_leaves(&[&[4]], 1.5, 5);
        let report = gradient_check(&SoftmaxCe, &leaves, &GradCheckOptions::default()).unwrap();
        assert!(report.max_rel_error < TOL, "max rel error {}", report.max_rel_error);
    }

    struct ReluChain {
        proj: Tensor<f32>,
    }
    impl LossBuilder for ReluChain {
        fn build<T: Real>(&self, tape: &mut Tape<T>, leaves: &[Var]) -> DiffResult<Var> {
            let y = tape.relu(leaves[0])?;
            let w = constant(tape, &self.proj);
            let b = tape.constant(Tensor::new(vec![1], vec![T::zero()]))?;
            tape.dense(y, w, b)
        }
    }

    #[test]
    fn relu_gradients_match_finite_differences() {
        // Keep inputs away from the kink so the finite difference never
        // straddles it.
        let mut leaves = random_leaves(&[&[1, 12]], 1.0, 8);
        for v in leaves[0].data_mut() {
            if v.abs() < 0.05 {
                *v += 0.1_f32.copysign(*v + 0.01);
            }
        }
        let proj = random_leaves(&[&[12, 1]], 1.0, 9)[0].clone();
        let report =
            gradient_check(&ReluChain { proj }, &leaves, &GradCheckOptions::default()).unwrap();
        assert!(report.max_rel_error < TOL, "max rel error {}", report.max_rel_error);
    }

    struct BiLstmChain {
        hidden: usize,
        valid: usize,
        proj: Tensor<f32>,
    }
    impl LossBuilder for BiLstmChain {
        fn build<T: Real>(&self, tape: &mut Tape<T>, leaves: &[Var]) -> DiffResult<Var> {
            let fwd = LstmDirVars { wx: leaves[1], wh: leaves[2], b: leaves[3] };
            let bwd = LstmDirVars { wx: leaves[4], wh: leaves[5], b: leaves[6] };
            let y = tape.bilstm(leaves[0], fwd, bwd, self.hidden, self.valid)?;
            let pooled = tape.avg_pool_time(y, self.valid)?;
            let w = constant(tape, &self.proj);
            let b = tape.constant(Tensor::new(vec![1], vec![T::zero()]))?;
            tape.dense(pooled, w, b)
        }
    }

    #[test]
    fn bilstm_gradients_match_finite_differences() {
        let (h, d, t_len, valid) = (2usize, 3usize, 5usize, 4usize);
        let leaves = random_leaves(
            &[&[t_len, d], &[d, 4 * h], &[h, 4 * h], &[4 * h], &[d, 4 * h], &[h, 4 * h], &[4 * h]],
            0.6,
            21,
        );
        let proj = random_leaves(&[&[2 * h, 1]], 1.0, 22)[0].clone();
        let builder = BiLstmChain { hidden: h, valid, proj };
        let report = gradient_check(&builder, &leaves, &GradCheckOptions::default()).unwrap();
        assert!(report.max_rel_error < TOL, "max rel error {}", report.max_rel_error);
    }

    struct DropoutChain {
        proj: Tensor<f32>,
    }
    impl LossBuilder for DropoutChain {
        fn build<T: Real>(&self, tape: &mut Tape<T>, leaves: &[Var]) -> DiffResult<Var> {
            let y = tape.dropout(leaves[0], 0.3, true, 123)?;
            let pooled = tape.avg_pool_time(y, 3)?;
            let w = constant(tape, &self.proj);
            let b = tape.constant(Tensor::new(vec![1], vec![T::zero()]))?;
            tape.dense(pooled, w, b)
        }
    }

    #[test]
    fn dropout_gradients_match_finite_differences() {
        let leaves = random_leaves(&[&[4, 6]], 1.0, 31);
        let proj = random_leaves(&[&[6, 1]], 1.0, 32)[0].clone();
        let report =
            gradient_check(&DropoutChain { proj }, &leaves, &GradCheckOptions::default()).unwrap();
        assert!(report.max_rel_error < TOL, "max rel error {}", report.max_rel_error);
    }

    struct MaeDirect;
    impl LossBuilder for MaeDirect {
        fn build<T: Real>(&self, tape: &mut Tape<T>, leaves: &[Var]) -> DiffResult<Var> {
            let target = Tensor::new(
                vec![5],
                vec![
                    T::from_f32(3.0),
                    T::from_f32(-3.0),
                    T::from_f32(4.0),
                    T::from_f32(-4.0),
                    T::from_f32(5.0),
                ],
            );
            tape.mae_loss(leaves[0], &target, 4)
        }
    }

    #[test]
    fn mae_gradients_match_finite_differences() {
        let leaves = random_leaves(&[&[5]], 1.0, 77);
        let report = gradient_check(&MaeDirect, &leaves, &GradCheckOptions::default()).unwrap();
        assert!(report.max_rel_error < TOL, "max rel error {}", report.max_rel_error);
        // The masked-out fifth element must have zero analytic gradient.
        let masked = report.checks.iter().find(|c| c.index == 4).unwrap();
        assert_eq!(masked.analytic, 0.0);
    }
}
