//! The recording tape: forward ops append nodes, `backward` walks them in
//! reverse and accumulates gradients into every tracked leaf.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::conv::{conv2d_backward, conv2d_forward, ConvDims};
use super::linalg::{matmul_a_bt_acc, matmul_acc, matmul_at_b_acc};
use super::lstm::{lstm_backward, lstm_forward, LstmTrace};
use super::tensor::{Real, Tensor};
use super::{DiffError, DiffResult};

/// Handle to a value recorded on a [`Tape`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Var(pub(crate) usize);

/// Weight handles for one LSTM direction: input projection `[d, 4h]`,
/// recurrent projection `[h, 4h]`, bias `[4h]`, gate order (i, f, g, o).
#[derive(Debug, Clone, Copy)]
pub struct LstmDirVars {
    pub wx: Var,
    pub wh: Var,
    pub b: Var,
}

/// Probability clamp applied inside the cross-entropy loss.
pub const PROB_CLAMP: f64 = 1e-7;

enum Op<T> {
    Leaf,
    Constant,
    Conv2d {
        x: usize,
        w: usize,
        b: usize,
        dims: ConvDims,
    },
    Relu {
        x: usize,
    },
    Sigmoid {
        x: usize,
    },
    Tanh {
        x: usize,
    },
    Softmax {
        x: usize,
        row: usize,
    },
    Dense {
        x: usize,
        w: usize,
        b: usize,
        n: usize,
        d: usize,
        m: usize,
    },
    BiLstm {
        x: usize,
        fwd: LstmDirVars,
        bwd: LstmDirVars,
        hidden: usize,
        t_len: usize,
        d: usize,
        valid: usize,
        fwd_trace: LstmTrace<T>,
        bwd_trace: LstmTrace<T>,
    },
    AvgPoolTime {
        x: usize,
        t_len: usize,
        d: usize,
        valid: usize,
    },
    Dropout {
        x: usize,
        mask: Vec<T>,
    },
    MaeLoss {
        pred: usize,
        target: Vec<T>,
        valid: usize,
    },
    CrossEntropy {
        probs: usize,
        onehot: Vec<T>,
    },
    Add {
        a: usize,
        b: usize,
    },
    FlattenFreq {
        x: usize,
        t: usize,
        f: usize,
        c: usize,
    },
}

struct Node<T> {
    value: Tensor<T>,
    op: Op<T>,
    requires_grad: bool,
}

/// Records one forward computation for reverse-mode differentiation.
/// Build, call [`Tape::backward`] once on a scalar loss, read gradients,
/// drop. A tape is single-threaded.
pub struct Tape<T: Real = f32> {
    nodes: Vec<Node<T>>,
    grads: Vec<Option<Vec<T>>>,
}

impl<T: Real> Default for Tape<T> {
    fn default() -> Self {
        Self::new()
    }
}

impl<T: Real> Tape<T> {
    pub fn new() -> Self {
        Self { nodes: Vec::new(), grads: Vec::new() }
    }

    fn push(&mut self, op_name: &'static str, value: Tensor<T>, op: Op<T>, requires_grad: bool) -> DiffResult<Var> {
        if !value.is_finite() {
            return Err(DiffError::NonFiniteValue(op_name));
        }
        self.nodes.push(Node { value, op, requires_grad });
        Ok(Var(self.nodes.len() - 1))
    }

    /// Tracked input or parameter; receives a gradient from `backward`.
    pub fn leaf(&mut self, value: Tensor<T>) -> DiffResult<Var> {
        self.push("leaf", value, Op::Leaf, true)
    }

    /// Untracked value; never receives a gradient.
    pub fn constant(&mut self, value: Tensor<T>) -> DiffResult<Var> {
        self.push("constant", value, Op::Constant, false)
    }

    pub fn value(&self, v: Var) -> &Tensor<T> {
        &self.nodes[v.0].value
    }

    fn any_grad(&self, vars: &[usize]) -> bool {
        vars.iter().any(|&i| self.nodes[i].requires_grad)
    }

    fn shape_err(op: &'static str, detail: String) -> DiffError {
        DiffError::ShapeMismatch { op, detail }
    }

    /// 2-D convolution, "same" padding, kernel `[kh, kw, c_in, c_out]`.
    /// `valid_t` frames of `x` are real; the rest are masked padding.
    pub fn conv2d(
        &mut self,
        x: Var,
        w: Var,
        b: Var,
        stride: (usize, usize),
        valid_t: usize,
    ) -> DiffResult<Var> {
        let xs = self.value(x).shape().to_vec();
        let ws = self.value(w).shape().to_vec();
        let bs = self.value(b).shape().to_vec();
        if xs.len() != 3 || ws.len() != 4 || bs.len() != 1 {
            return Err(Self::shape_err("conv2d", format!("x {xs:?}, w {ws:?}, b {bs:?}")));
        }
        if ws[2] != xs[2] || bs[0] != ws[3] {
            return Err(Self::shape_err(
                "conv2d",
                format!("input channels {} vs kernel {}, bias {} vs filters {}", xs[2], ws[2], bs[0], ws[3]),
            ));
        }
        if valid_t == 0 || valid_t > xs[0] || stride.0 == 0 || stride.1 == 0 {
            return Err(Self::shape_err(
                "conv2d",
                format!("valid_t {valid_t} of {} frames, stride {stride:?}", xs[0]),
            ));
        }
        let dims = ConvDims {
            t_in: xs[0],
            f_in: xs[1],
            c_in: xs[2],
            kh: ws[0],
            kw: ws[1],
            c_out: ws[3],
            stride,
            valid_t,
        };
        let out = conv2d_forward(
            self.value(x).data(),
            self.value(w).data(),
            self.value(b).data(),
            &dims,
        );
        let rg = self.any_grad(&[x.0, w.0, b.0]);
        self.push("conv2d", out, Op::Conv2d { x: x.0, w: w.0, b: b.0, dims }, rg)
    }

    pub fn relu(&mut self, x: Var) -> DiffResult<Var> {
        let v = self.value(x);
        let out = Tensor::new(
            v.shape().to_vec(),
            v.data().iter().map(|&a| if a > T::zero() { a } else { T::zero() }).collect(),
        );
        let rg = self.nodes[x.0].requires_grad;
        self.push("relu", out, Op::Relu { x: x.0 }, rg)
    }

    pub fn sigmoid(&mut self, x: Var) -> DiffResult<Var> {
        let v = self.value(x);
        let out = Tensor::new(
            v.shape().to_vec(),
            v.data()
                .iter()
                .map(|&a| {
                    if a >= T::zero() {
                        T::one() / (T::one() + (-a).exp())
                    } else {
                        let e = a.exp();
                        e / (T::one() + e)
                    }
                })
                .collect(),
        );
        let rg = self.nodes[x.0].requires_grad;
        self.push("sigmoid", out, Op::Sigmoid { x: x.0 }, rg)
    }

    pub fn tanh(&mut self, x: Var) -> DiffResult<Var> {
        let v = self.value(x);
        let out = Tensor::new(v.shape().to_vec(), v.data().iter().map(|&a| a.tanh()).collect());
        let rg = self.nodes[x.0].requires_grad;
        self.push("tanh", out, Op::Tanh { x: x.0 }, rg)
    }

    /// Softmax over the last axis.
    pub fn softmax(&mut self, x: Var) -> DiffResult<Var> {
        let v = self.value(x);
        let row = *v.shape().last().unwrap_or(&0);
        if row == 0 {
            return Err(Self::shape_err("softmax", format!("shape {:?}", v.shape())));
        }
        let mut data = v.data().to_vec();
        for r in data.chunks_mut(row) {
            let max = r.iter().cloned().fold(T::neg_infinity(), T::max);
            let mut sum = T::zero();
            for a in r.iter_mut() {
                *a = (*a - max).exp();
                sum += *a;
            }
            for a in r.iter_mut() {
                *a /= sum;
            }
        }
        let out = Tensor::new(v.shape().to_vec(), data);
        let rg = self.nodes[x.0].requires_grad;
        self.push("softmax", out, Op::Softmax { x: x.0, row }, rg)
    }

    /// `x (n×d) · w (d×m) + b (m)`. A rank-1 `x` acts as one row and
    /// yields a rank-1 result.
    pub fn dense(&mut self, x: Var, w: Var, b: Var) -> DiffResult<Var> {
        let xs = self.value(x).shape().to_vec();
        let ws = self.value(w).shape().to_vec();
        let bs = self.value(b).shape().to_vec();
        if ws.len() != 2 || bs.len() != 1 || ws[1] != bs[0] {
            return Err(Self::shape_err("dense", format!("w {ws:?}, b {bs:?}")));
        }
        let (n, d) = match xs.len() {
            1 => (1, xs[0]),
            2 => (xs[0], xs[1]),
            _ => return Err(Self::shape_err("dense", format!("x {xs:?}"))),
        };
        if d != ws[0] {
            return Err(Self::shape_err("dense", format!("x inner {d} vs w rows {}", ws[0])));
        }
        let m = ws[1];
        let mut data = vec![T::zero(); n * m];
        matmul_acc(self.value(x).data(), self.value(w).data(), &mut data, n, d, m);
        let bias = self.value(b).data();
        for r in data.chunks_mut(m) {
            for (v, &bv) in r.iter_mut().zip(bias) {
                *v += bv;
            }
        }
        let shape = if xs.len() == 1 { vec![m] } else { vec![n, m] };
        let rg = self.any_grad(&[x.0, w.0, b.0]);
        self.push("dense", Tensor::new(shape, data), Op::Dense { x: x.0, w: w.0, b: b.0, n, d, m }, rg)
    }

    /// Bidirectional LSTM over `x (t×d)`: output `t×2h`, forward states in
    /// columns `0..h`, backward states in `h..2h`. Only the first `valid`
    /// frames are processed; later rows are zero.
    pub fn bilstm(
        &mut self,
        x: Var,
        fwd: LstmDirVars,
        bwd: LstmDirVars,
        hidden: usize,
        valid: usize,
    ) -> DiffResult<Var> {
        let xs = self.value(x).shape().to_vec();
        if xs.len() != 2 {
            return Err(Self::shape_err("bilstm", format!("x {xs:?}")));
        }
        let (t_len, d) = (xs[0], xs[1]);
        if valid == 0 || valid > t_len {
            return Err(Self::shape_err("bilstm", format!("valid {valid} of {t_len} frames")));
        }
        let g4 = 4 * hidden;
        for (dir, name) in [(&fwd, "forward"), (&bwd, "backward")] {
            let wx = self.value(dir.wx).shape();
            let wh = self.value(dir.wh).shape();
            let b = self.value(dir.b).shape();
            if wx != [d, g4] || wh != [hidden, g4] || b != [g4] {
                return Err(Self::shape_err(
                    "bilstm",
                    format!("{name} weights wx {wx:?} wh {wh:?} b {b:?} for d={d}, hidden={hidden}"),
                ));
            }
        }
        let mut out = vec![T::zero(); t_len * 2 * hidden];
        let fwd_trace = lstm_forward(
            self.value(x).data(),
            d,
            t_len,
            valid,
            self.value(fwd.wx).data(),
            self.value(fwd.wh).data(),
            self.value(fwd.b).data(),
            hidden,
            false,
            &mut out,
            2 * hidden,
            0,
        );
        let bwd_trace = lstm_forward(
            self.value(x).data(),
            d,
            t_len,
            valid,
            self.value(bwd.wx).data(),
            self.value(bwd.wh).data(),
            self.value(bwd.b).data(),
            hidden,
            true,
            &mut out,
            2 * hidden,
            hidden,
        );
        let rg = self.any_grad(&[x.0, fwd.wx.0, fwd.wh.0, fwd.b.0, bwd.wx.0, bwd.wh.0, bwd.b.0]);
        self.push(
            "bilstm",
            Tensor::new(vec![t_len, 2 * hidden], out),
            Op::BiLstm { x: x.0, fwd, bwd, hidden, t_len, d, valid, fwd_trace, bwd_trace },
            rg,
        )
    }

    /// Mean over the first `valid` rows of `x (t×d)`, yielding a `d` vector.
    pub fn avg_pool_time(&mut self, x: Var, valid: usize) -> DiffResult<Var> {
        let xs = self.value(x).shape().to_vec();
        if xs.len() != 2 {
            return Err(Self::shape_err("avg_pool_time", format!("x {xs:?}")));
        }
        let (t_len, d) = (xs[0], xs[1]);
        if valid == 0 || valid > t_len {
            return Err(Self::shape_err("avg_pool_time", format!("valid {valid} of {t_len} frames")));
        }
        let data = self.value(x).data();
        let inv = T::one() / T::from_f64(valid as f64);
        let mut out = vec![T::zero(); d];
        for t in 0..valid {
            for (o, &v) in out.iter_mut().zip(&data[t * d..(t + 1) * d]) {
                *o += v;
            }
        }
        for o in out.iter_mut() {
            *o *= inv;
        }
        let rg = self.nodes[x.0].requires_grad;
        self.push(
            "avg_pool_time",
            Tensor::new(vec![d], out),
            Op::AvgPoolTime { x: x.0, t_len, d, valid },
            rg,
        )
    }

    /// Inverted dropout with a deterministic ChaCha-seeded mask. With
    /// `rate == 0` or `train == false` this returns `x` itself.
    pub fn dropout(&mut self, x: Var, rate: f64, train: bool, seed: u64) -> DiffResult<Var> {
        debug_assert!((0.0..1.0).contains(&rate), "dropout rate {rate} outside [0,1)");
        if !train || rate == 0.0 {
            return Ok(x);
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        // Mask decisions and scale are made in f32 so the f64 shadow pass
        // of the gradient checker sees the exact same mask.
        let scale = T::from_f32(1.0 / (1.0 - rate as f32));
        let rate32 = rate as f32;
        let v = self.value(x);
        let mask: Vec<T> = (0..v.numel())
            .map(|_| if rng.gen::<f32>() < rate32 { T::zero() } else { scale })
            .collect();
        let out = Tensor::new(
            v.shape().to_vec(),
            v.data().iter().zip(&mask).map(|(&a, &m)| a * m).collect(),
        );
        let rg = self.nodes[x.0].requires_grad;
        self.push("dropout", out, Op::Dropout { x: x.0, mask }, rg)
    }

    /// Mean absolute error over the first `valid` elements of `pred`.
    /// `target` holds either one broadcast value or one value per element.
    pub fn mae_loss(&mut self, pred: Var, target: &Tensor<T>, valid: usize) -> DiffResult<Var> {
        let n = self.value(pred).numel();
        if valid == 0 || valid > n {
            return Err(Self::shape_err("mae_loss", format!("valid {valid} of {n} elements")));
        }
        if target.numel() != 1 && target.numel() != n {
            return Err(Self::shape_err(
                "mae_loss",
                format!("target has {} elements for pred of {n}", target.numel()),
            ));
        }
        let p = self.value(pred).data();
        let tdata = target.data();
        let mut sum = T::zero();
        for i in 0..valid {
            let g = if tdata.len() == 1 { tdata[0] } else { tdata[i] };
            sum += (p[i] - g).abs();
        }
        let loss = sum / T::from_f64(valid as f64);
        let rg = self.nodes[pred.0].requires_grad;
        self.push(
            "mae_loss",
            Tensor::scalar(loss),
            Op::MaeLoss { pred: pred.0, target: tdata.to_vec(), valid },
            rg,
        )
    }

    /// `−Σ onehot·log(probs)` with probabilities floored away from 0, so
    /// a certain correct prediction costs exactly zero.
    pub fn cross_entropy_loss(&mut self, probs: Var, onehot: &Tensor<T>) -> DiffResult<Var> {
        let n = self.value(probs).numel();
        if onehot.numel() != n {
            return Err(Self::shape_err(
                "cross_entropy_loss",
                format!("onehot has {} elements for probs of {n}", onehot.numel()),
            ));
        }
        let lo = T::from_f64(PROB_CLAMP);
        let p = self.value(probs).data();
        let mut loss = T::zero();
        for (&pv, &yv) in p.iter().zip(onehot.data()) {
            if yv != T::zero() {
                loss -= yv * pv.max(lo).ln();
            }
        }
        let rg = self.nodes[probs.0].requires_grad;
        self.push(
            "cross_entropy_loss",
            Tensor::scalar(loss),
            Op::CrossEntropy { probs: probs.0, onehot: onehot.data().to_vec() },
            rg,
        )
    }

    pub fn add(&mut self, a: Var, b: Var) -> DiffResult<Var> {
        let (va, vb) = (self.value(a), self.value(b));
        if va.shape() != vb.shape() {
            return Err(Self::shape_err("add", format!("{:?} vs {:?}", va.shape(), vb.shape())));
        }
        let out = Tensor::new(
            va.shape().to_vec(),
            va.data().iter().zip(vb.data()).map(|(&x, &y)| x + y).collect(),
        );
        let rg = self.any_grad(&[a.0, b.0]);
        self.push("add", out, Op::Add { a: a.0, b: b.0 }, rg)
    }

    /// `t×f×c` to `t×(f·c)` with channel-major ordering: output column
    /// `ch·f + fr`. With `f == 1` this is a pure reshape.
    pub fn flatten_freq(&mut self, x: Var) -> DiffResult<Var> {
        let xs = self.value(x).shape().to_vec();
        if xs.len() != 3 {
            return Err(Self::shape_err("flatten_freq", format!("x {xs:?}")));
        }
        let (t, f, c) = (xs[0], xs[1], xs[2]);
        let src = self.value(x).data();
        let mut data = vec![T::zero(); t * f * c];
        for ti in 0..t {
            let row = &src[ti * f * c..(ti + 1) * f * c];
            let out_row = &mut data[ti * f * c..(ti + 1) * f * c];
            for fi in 0..f {
                for ci in 0..c {
                    out_row[ci * f + fi] = row[fi * c + ci];
                }
            }
        }
        let rg = self.nodes[x.0].requires_grad;
        self.push(
            "flatten_freq",
            Tensor::new(vec![t, f * c], data),
            Op::FlattenFreq { x: x.0, t, f, c },
            rg,
        )
    }

    /// Reverse pass from a scalar loss. Populates gradients for every
    /// tracked node on a path to the loss; untouched tracked leaves read
    /// back as zero through [`Tape::grad`].
    pub fn backward(&mut self, loss: Var) -> DiffResult<()> {
        let numel = self.value(loss).numel();
        if numel != 1 {
            return Err(DiffError::NotScalarLoss(numel));
        }
        self.grads = (0..self.nodes.len()).map(|_| None).collect();
        self.grads[loss.0] = Some(vec![T::one()]);

        for i in (0..=loss.0).rev() {
            if self.grads[i].is_none() || !self.nodes[i].requires_grad {
                continue;
            }
            let dy = self.grads[i].take().unwrap();
            self.backward_op(i, &dy)?;
            self.grads[i] = Some(dy);
        }
        Ok(())
    }

    fn acc(&mut self, idx: usize, contribution: &[T]) {
        if !self.nodes[idx].requires_grad {
            return;
        }
        let slot = self.grads[idx].get_or_insert_with(|| vec![T::zero(); contribution.len()]);
        for (g, &c) in slot.iter_mut().zip(contribution) {
            *g += c;
        }
    }

    fn backward_op(&mut self, i: usize, dy: &[T]) -> DiffResult<()> {
        match &self.nodes[i].op {
            Op::Leaf | Op::Constant => {}
            Op::Conv2d { x, w, b, dims } => {
                let (x, w, b, dims) = (*x, *w, *b, *dims);
                let (dx, dw, db) = conv2d_backward(
                    self.nodes[x].value.data(),
                    self.nodes[w].value.data(),
                    dy,
                    &dims,
                );
                self.acc(x, &dx);
                self.acc(w, &dw);
                self.acc(b, &db);
            }
            Op::Relu { x } => {
                let x = *x;
                let dx: Vec<T> = self.nodes[x]
                    .value
                    .data()
                    .iter()
                    .zip(dy)
                    .map(|(&xv, &g)| if xv > T::zero() { g } else { T::zero() })
                    .collect();
                self.acc(x, &dx);
            }
            Op::Sigmoid { x } => {
                let x = *x;
                let dx: Vec<T> = self.nodes[i]
                    .value
                    .data()
                    .iter()
                    .zip(dy)
                    .map(|(&s, &g)| g * s * (T::one() - s))
                    .collect();
                self.acc(x, &dx);
            }
            Op::Tanh { x } => {
                let x = *x;
                let dx: Vec<T> = self.nodes[i]
                    .value
                    .data()
                    .iter()
                    .zip(dy)
                    .map(|(&t, &g)| g * (T::one() - t * t))
                    .collect();
                self.acc(x, &dx);
            }
            Op::Softmax { x, row } => {
                let (x, row) = (*x, *row);
                let p = self.nodes[i].value.data();
                let mut dx = vec![T::zero(); p.len()];
                for (r, (p_row, dy_row)) in p.chunks(row).zip(dy.chunks(row)).enumerate() {
                    let dot: T = p_row.iter().zip(dy_row).map(|(&pv, &gv)| pv * gv).fold(T::zero(), |a, v| a + v);
                    for (k, d) in dx[r * row..(r + 1) * row].iter_mut().enumerate() {
                        *d = p_row[k] * (dy_row[k] - dot);
                    }
                }
                self.acc(x, &dx);
            }
            Op::Dense { x, w, b, n, d, m } => {
                let (x, w, b, n, d, m) = (*x, *w, *b, *n, *d, *m);
                if self.nodes[x].requires_grad {
                    let mut dx = vec![T::zero(); n * d];
                    matmul_a_bt_acc(dy, self.nodes[w].value.data(), &mut dx, n, m, d);
                    self.acc(x, &dx);
                }
                if self.nodes[w].requires_grad {
                    let mut dw = vec![T::zero(); d * m];
                    matmul_at_b_acc(self.nodes[x].value.data(), dy, &mut dw, n, d, m);
                    self.acc(w, &dw);
                }
                if self.nodes[b].requires_grad {
                    let mut db = vec![T::zero(); m];
                    for r in dy.chunks(m) {
                        for (g, &v) in db.iter_mut().zip(r) {
                            *g += v;
                        }
                    }
                    self.acc(b, &db);
                }
            }
            Op::BiLstm { x, fwd, bwd, hidden, t_len, d, valid, fwd_trace, bwd_trace } => {
                let (x, fwd, bwd) = (*x, *fwd, *bwd);
                let (hidden, t_len, d, valid) = (*hidden, *t_len, *d, *valid);
                let gf = lstm_backward(
                    self.nodes[x].value.data(),
                    d,
                    t_len,
                    valid,
                    self.nodes[fwd.wx.0].value.data(),
                    self.nodes[fwd.wh.0].value.data(),
                    hidden,
                    false,
                    fwd_trace,
                    dy,
                    2 * hidden,
                    0,
                );
                let gb = lstm_backward(
                    self.nodes[x].value.data(),
                    d,
                    t_len,
                    valid,
                    self.nodes[bwd.wx.0].value.data(),
                    self.nodes[bwd.wh.0].value.data(),
                    hidden,
                    true,
                    bwd_trace,
                    dy,
                    2 * hidden,
                    hidden,
                );
                let dx: Vec<T> = gf.dx.iter().zip(&gb.dx).map(|(&a, &b)| a + b).collect();
                self.acc(x, &dx);
                self.acc(fwd.wx.0, &gf.dwx);
                self.acc(fwd.wh.0, &gf.dwh);
                self.acc(fwd.b.0, &gf.db);
                self.acc(bwd.wx.0, &gb.dwx);
                self.acc(bwd.wh.0, &gb.dwh);
                self.acc(bwd.b.0, &gb.db);
            }
            Op::AvgPoolTime { x, t_len, d, valid } => {
                let (x, t_len, d, valid) = (*x, *t_len, *d, *valid);
                let inv = T::one() / T::from_f64(valid as f64);
                let mut dx = vec![T::zero(); t_len * d];
                for t in 0..valid {
                    for (g, &v) in dx[t * d..(t + 1) * d].iter_mut().zip(dy) {
                        *g = v * inv;
                    }
                }
                self.acc(x, &dx);
            }
            Op::Dropout { x, mask } => {
                let x = *x;
                let dx: Vec<T> = mask.iter().zip(dy).map(|(&m, &g)| m * g).collect();
                self.acc(x, &dx);
            }
            Op::MaeLoss { pred, target, valid } => {
                let (pred, valid) = (*pred, *valid);
                let g = dy[0];
                let inv = T::one() / T::from_f64(valid as f64);
                let p = self.nodes[pred].value.data();
                let mut dp = vec![T::zero(); p.len()];
                for i in 0..valid {
                    let t = if target.len() == 1 { target[0] } else { target[i] };
                    let diff = p[i] - t;
                    // Subgradient at equality is zero.
                    let s = if diff > T::zero() {
                        T::one()
                    } else if diff < T::zero() {
                        -T::one()
                    } else {
                        T::zero()
                    };
                    dp[i] = g * s * inv;
                }
                self.acc(pred, &dp);
            }
            Op::CrossEntropy { probs, onehot } => {
                let probs = *probs;
                let g = dy[0];
                let lo = T::from_f64(PROB_CLAMP);
                let p = self.nodes[probs].value.data();
                let mut dp = vec![T::zero(); p.len()];
                for ((d, &pv), &yv) in dp.iter_mut().zip(p).zip(onehot) {
                    // The floor is flat below lo; no gradient there.
                    if yv != T::zero() && pv > lo {
                        *d = -g * yv / pv;
                    }
                }
                self.acc(probs, &dp);
            }
            Op::Add { a, b } => {
                let (a, b) = (*a, *b);
                self.acc(a, dy);
                self.acc(b, dy);
            }
            Op::FlattenFreq { x, t, f, c } => {
                let (x, t, f, c) = (*x, *t, *f, *c);
                let mut dx = vec![T::zero(); t * f * c];
                for ti in 0..t {
                    let dy_row = &dy[ti * f * c..(ti + 1) * f * c];
                    let dx_row = &mut dx[ti * f * c..(ti + 1) * f * c];
                    for fi in 0..f {
                        for ci in 0..c {
                            dx_row[fi * c + ci] = dy_row[ci * f + fi];
                        }
                    }
                }
                self.acc(x, &dx);
            }
        }
        Ok(())
    }

    /// Gradient of the last `backward` loss with respect to `v`. Tracked
    /// nodes on no path to the loss read as zeros.
    pub fn grad(&self, v: Var) -> Tensor<T> {
        let shape = self.nodes[v.0].value.shape().to_vec();
        match &self.grads.get(v.0) {
            Some(Some(g)) => Tensor::new(shape, g.clone()),
            _ => Tensor::zeros(shape),
        }
    }
}
