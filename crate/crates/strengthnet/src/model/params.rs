//! Named parameter tensors and their initialization.
//!
//! Parameters live in a fixed canonical order so optimizer state, staged
//! tape variables, and checkpoints all index the same way:
//! `enc.b{block}.l{layer}.{w,b}` for the conv stack, then the strength
//! head (`str.lstm.{fwd,bwd}.{wx,wh,b}`, `str.fc1.{w,b}`, `str.fc2.{w,b}`),
//! then the emotion head (`emo.lstm.{fwd,bwd}.{wx,wh,b}`, `emo.out.{w,b}`).

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::config::StrengthNetConfig;
use super::{ModelError, ModelResult};
use crate::autodiff::Tensor;

/// Index arithmetic over the canonical parameter order. Kept in one place
/// so the generator and every consumer cannot drift apart.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Layout {
    pub blocks: usize,
    pub layers: usize,
}

impl Layout {
    pub fn of(config: &StrengthNetConfig) -> Layout {
        Layout { blocks: config.conv_block_filters.len(), layers: config.layers_per_block }
    }
    pub fn conv_w(&self, block: usize, layer: usize) -> usize {
        2 * (block * self.layers + layer)
    }
    pub fn conv_b(&self, block: usize, layer: usize) -> usize {
        self.conv_w(block, layer) + 1
    }
    fn base(&self) -> usize {
        2 * self.blocks * self.layers
    }
    /// First of wx, wh, b for a head's LSTM direction.
    pub fn lstm(&self, head: Head, backward: bool) -> usize {
        let head_base = match head {
            Head::Strength => self.base(),
            Head::Emotion => self.base() + 10,
        };
        head_base + if backward { 3 } else { 0 }
    }
    /// First of w, b for a dense layer.
    pub fn dense(&self, which: DenseLayer) -> usize {
        match which {
            DenseLayer::Fc1 => self.base() + 6,
            DenseLayer::Fc2 => self.base() + 8,
            DenseLayer::EmotionOut => self.base() + 16,
        }
    }
    /// Total number of parameter tensors.
    pub fn count(&self) -> usize {
        self.base() + 18
    }
}

#[derive(Debug, Clone, Copy)]
pub(crate) enum Head {
    Strength,
    Emotion,
}

#[derive(Debug, Clone, Copy)]
pub(crate) enum DenseLayer {
    Fc1,
    Fc2,
    EmotionOut,
}

/// All learnable tensors in canonical order.
#[derive(Debug, Clone, PartialEq)]
pub struct ParameterSet {
    entries: Vec<(String, Tensor<f32>)>,
}

/// Name and shape of every tensor, in canonical order.
fn canonical_shapes(config: &StrengthNetConfig) -> Vec<(String, Vec<usize>)> {
    let (kh, kw) = config.kernel;
    let mut out = Vec::new();
    let mut c_in = 1;
    for (bi, &c_out) in config.conv_block_filters.iter().enumerate() {
        for li in 0..config.layers_per_block {
            out.push((format!("enc.b{bi}.l{li}.w"), vec![kh, kw, c_in, c_out]));
            out.push((format!("enc.b{bi}.l{li}.b"), vec![c_out]));
            c_in = c_out;
        }
    }
    let d = config.encoder_out_dim();
    let h = config.bilstm_hidden;
    for head in ["str", "emo"] {
        for dir in ["fwd", "bwd"] {
            out.push((format!("{head}.lstm.{dir}.wx"), vec![d, 4 * h]));
            out.push((format!("{head}.lstm.{dir}.wh"), vec![h, 4 * h]));
            out.push((format!("{head}.lstm.{dir}.b"), vec![4 * h]));
        }
        if head == "str" {
            out.push(("str.fc1.w".into(), vec![2 * h, config.fc_hidden]));
            out.push(("str.fc1.b".into(), vec![config.fc_hidden]));
            out.push(("str.fc2.w".into(), vec![config.fc_hidden, 1]));
            out.push(("str.fc2.b".into(), vec![1]));
        } else {
            out.push(("emo.out.w".into(), vec![2 * h, config.num_emotions]));
            out.push(("emo.out.b".into(), vec![config.num_emotions]));
        }
    }
    out
}

impl ParameterSet {
    /// Random initialization: He-uniform for ReLU layers (conv stack and
    /// FC1), Xavier-uniform for the sigmoid/softmax output layers,
    /// uniform +-1/sqrt(hidden) for LSTM weights. Biases start at zero
    /// except the LSTM forget gate, which starts at one so memory flows
    /// early in training. Gate order within LSTM weights is (i, f, g, o).
    pub fn init(config: &StrengthNetConfig, seed: u64) -> ParameterSet {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let h = config.bilstm_hidden;
        let entries = canonical_shapes(config)
            .into_iter()
            .map(|(name, shape)| {
                let numel: usize = shape.iter().product();
                let data = if name.ends_with(".wx") || name.ends_with(".wh") {
                    let limit = 1.0 / (h as f32).sqrt();
                    (0..numel).map(|_| rng.gen_range(-limit..limit)).collect()
                } else if name.ends_with(".w") {
                    let fan_in = shape[..shape.len() - 1].iter().product::<usize>() as f32;
                    let fan_out = *shape.last().unwrap() as f32;
                    let limit = if name.starts_with("str.fc2") || name.starts_with("emo.out") {
                        (6.0 / (fan_in + fan_out)).sqrt()
                    } else {
                        (6.0 / fan_in).sqrt()
                    };
                    (0..numel).map(|_| rng.gen_range(-limit..limit)).collect()
                } else if name.contains(".lstm.") {
                    let mut b = vec![0.0f32; numel];
                    b[h..2 * h].fill(1.0);
                    b
                } else {
                    vec![0.0f32; numel]
                };
                (name, Tensor::new(shape, data))
            })
            .collect::<Vec<_>>();
        debug_assert_eq!(entries.len(), Layout::of(config).count());
        ParameterSet { entries }
    }

    /// Rebuild from checkpoint tensors; order and shapes are validated by
    /// the caller via [`ParameterSet::validate_against`].
    pub fn from_entries(entries: Vec<(String, Tensor<f32>)>) -> ParameterSet {
        ParameterSet { entries }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.entries.iter().map(|(n, _)| n.as_str())
    }

    pub fn tensors(&self) -> impl Iterator<Item = &Tensor<f32>> {
        self.entries.iter().map(|(_, t)| t)
    }

    pub fn tensor(&self, index: usize) -> &Tensor<f32> {
        &self.entries[index].1
    }

    pub fn tensor_mut(&mut self, index: usize) -> &mut Tensor<f32> {
        &mut self.entries[index].1
    }

    pub fn get(&self, name: &str) -> Option<&Tensor<f32>> {
        self.entries.iter().find(|(n, _)| n == name).map(|(_, t)| t)
    }

    pub fn get_mut(&mut self, name: &str) -> Option<&mut Tensor<f32>> {
        self.entries.iter_mut().find(|(n, _)| n == name).map(|(_, t)| t)
    }

    pub fn entries(&self) -> &[(String, Tensor<f32>)] {
        &self.entries
    }

    /// Check names, order, shapes, and finiteness against a config.
    pub fn validate_against(&self, config: &StrengthNetConfig) -> ModelResult<()> {
        let expected = canonical_shapes(config);
        if expected.len() != self.entries.len() {
            return Err(ModelError::ShapeMismatch(format!(
                "{} tensors, config expects {}",
                self.entries.len(),
                expected.len()
            )));
        }
        for ((name, tensor), (want_name, want_shape)) in self.entries.iter().zip(&expected) {
            if name != want_name {
                return Err(ModelError::ShapeMismatch(format!(
                    "tensor '{name}' where '{want_name}' expected"
                )));
            }
            if tensor.shape() != &want_shape[..] {
                return Err(ModelError::ShapeMismatch(format!(
                    "tensor '{name}' has shape {:?}, config expects {:?}",
                    tensor.shape(),
                    want_shape
                )));
            }
            if !tensor.is_finite() {
                return Err(ModelError::ShapeMismatch(format!(
                    "tensor '{name}' contains non-finite values"
                )));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn canonical_order_matches_layout_arithmetic() {
        let config = StrengthNetConfig::default();
        let params = ParameterSet::init(&config, 0);
        let layout = Layout::of(&config);
        assert_eq!(params.len(), 42);
        assert_eq!(layout.count(), 42);
        let names: Vec<&str> = params.names().collect();
        assert_eq!(names[layout.conv_w(0, 0)], "enc.b0.l0.w");
        assert_eq!(names[layout.conv_b(3, 2)], "enc.b3.l2.b");
        assert_eq!(names[layout.lstm(Head::Strength, false)], "str.lstm.fwd.wx");
        assert_eq!(names[layout.lstm(Head::Strength, true) + 2], "str.lstm.bwd.b");
        assert_eq!(names[layout.dense(DenseLayer::Fc1)], "str.fc1.w");
        assert_eq!(names[layout.dense(DenseLayer::Fc2) + 1], "str.fc2.b");
        assert_eq!(names[layout.lstm(Head::Emotion, false)], "emo.lstm.fwd.wx");
        assert_eq!(names[layout.dense(DenseLayer::EmotionOut)], "emo.out.w");
        let unique: std::collections::BTreeSet<_> = names.iter().collect();
        assert_eq!(unique.len(), names.len());
    }

    #[test]
    fn initialization_is_deterministic_and_valid() {
        let config = StrengthNetConfig::default();
        let a = ParameterSet::init(&config, 7);
        let b = ParameterSet::init(&config, 7);
        assert_eq!(a, b);
        for (x, y) in a.tensors().zip(b.tensors()) {
            for (p, q) in x.data().iter().zip(y.data()) {
                assert_eq!(p.to_bits(), q.to_bits());
            }
        }
        a.validate_against(&config).unwrap();
        let c = ParameterSet::init(&config, 8);
        assert_ne!(a, c);
    }

    #[test]
    fn lstm_biases_open_the_forget_gate() {
        let config = StrengthNetConfig::default();
        let params = ParameterSet::init(&config, 3);
        let h = config.bilstm_hidden;
        for name in ["str.lstm.fwd.b", "str.lstm.bwd.b", "emo.lstm.fwd.b", "emo.lstm.bwd.b"] {
            let b = params.get(name).unwrap().data();
            assert!(b[..h].iter().all(|&v| v == 0.0));
            assert!(b[h..2 * h].iter().all(|&v| v == 1.0));
            assert!(b[2 * h..].iter().all(|&v| v == 0.0));
        }
    }

    #[test]
    fn conv_shapes_chain_channels() {
        let config = StrengthNetConfig::default();
        let params = ParameterSet::init(&config, 0);
        assert_eq!(params.get("enc.b0.l0.w").unwrap().shape(), &[3, 3, 1, 16]);
        assert_eq!(params.get("enc.b0.l1.w").unwrap().shape(), &[3, 3, 16, 16]);
        assert_eq!(params.get("enc.b1.l0.w").unwrap().shape(), &[3, 3, 16, 32]);
        assert_eq!(params.get("enc.b3.l2.w").unwrap().shape(), &[3, 3, 128, 128]);
        assert_eq!(params.get("str.lstm.fwd.wx").unwrap().shape(), &[128, 512]);
        assert_eq!(params.get("emo.out.w").unwrap().shape(), &[256, 4]);
    }

    #[test]
    fn shape_tampering_is_detected() {
        let config = StrengthNetConfig::default();
        let mut params = ParameterSet::init(&config, 0);
        *params.get_mut("str.fc2.b").unwrap() = Tensor::new(vec![2], vec![0.0, 0.0]);
        assert!(matches!(
            params.validate_against(&config),
            Err(ModelError::ShapeMismatch(_))
        ));
    }
}
