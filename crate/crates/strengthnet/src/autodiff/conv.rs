//! 2-D convolution over (time, frequency) via im2col + GEMM.
//!
//! Inputs are `[t, f, c_in]` row-major, kernels `[kh, kw, c_in, c_out]`,
//! outputs `[ceil(t/s_t), ceil(f/s_f), c_out]` ("same" padding). When the
//! extra padding is odd the trailing edge receives one more zero than the
//! leading edge.
//!
//! `valid_t` marks how many leading time frames are real; frames at or
//! beyond it are read as zeros and their output rows are forced to zero.
//! With time stride 1 this makes a padded input produce bit-identical
//! valid rows to the cropped input, which is what lets batches pad
//! utterances without changing their losses.

use super::linalg::{matmul_a_bt_acc, matmul_acc, matmul_at_b_acc};
use super::tensor::{Real, Tensor};

#[derive(Debug, Clone, Copy)]
pub struct ConvDims {
    pub t_in: usize,
    pub f_in: usize,
    pub c_in: usize,
    pub kh: usize,
    pub kw: usize,
    pub c_out: usize,
    pub stride: (usize, usize),
    /// Real (unpadded) time frames in the input.
    pub valid_t: usize,
}

impl ConvDims {
    pub fn t_out(&self) -> usize {
        ceil_div(self.t_in, self.stride.0)
    }

    pub fn f_out(&self) -> usize {
        ceil_div(self.f_in, self.stride.1)
    }

    pub fn valid_t_out(&self) -> usize {
        ceil_div(self.valid_t, self.stride.0)
    }

    fn pad_begin(in_len: usize, stride: usize, k: usize) -> isize {
        let out = ceil_div(in_len, stride);
        let total = ((out - 1) * stride + k).saturating_sub(in_len);
        (total / 2) as isize
    }

    fn pad_t(&self) -> isize {
        Self::pad_begin(self.t_in, self.stride.0, self.kh)
    }

    fn pad_f(&self) -> isize {
        Self::pad_begin(self.f_in, self.stride.1, self.kw)
    }
}

fn ceil_div(a: usize, b: usize) -> usize {
    a.div_ceil(b)
}

/// Gather the valid-row patch matrix: `[valid_t_out * f_out, kh*kw*c_in]`.
fn im2col<T: Real>(x: &[T], d: &ConvDims) -> Vec<T> {
    let (kh, kw, c_in) = (d.kh, d.kw, d.c_in);
    let f_out = d.f_out();
    let patch = kh * kw * c_in;
    let rows = d.valid_t_out() * f_out;
    let (pad_t, pad_f) = (d.pad_t(), d.pad_f());
    let mut cols = vec![T::zero(); rows * patch];
    for to in 0..d.valid_t_out() {
        for fo in 0..f_out {
            let row = &mut cols[(to * f_out + fo) * patch..(to * f_out + fo + 1) * patch];
            for kt in 0..kh {
                let ti = (to * d.stride.0 + kt) as isize - pad_t;
                if ti < 0 || ti as usize >= d.valid_t {
                    continue;
                }
                let ti = ti as usize;
                for kf in 0..kw {
                    let fi = (fo * d.stride.1 + kf) as isize - pad_f;
                    if fi < 0 || fi as usize >= d.f_in {
                        continue;
                    }
                    let fi = fi as usize;
                    let src = (ti * d.f_in + fi) * c_in;
                    let dst = (kt * kw + kf) * c_in;
                    row[dst..dst + c_in].copy_from_slice(&x[src..src + c_in]);
                }
            }
        }
    }
    cols
}

/// Forward convolution. `w` is `[kh*kw*c_in, c_out]` flattened row-major,
/// `b` is `[c_out]`. Output rows past the valid region are zero.
pub fn conv2d_forward<T: Real>(x: &[T], w: &[T], b: &[T], d: &ConvDims) -> Tensor<T> {
    debug_assert!(d.stride.0 == 1 || d.valid_t == d.t_in, "masked conv needs time stride 1");
    let f_out = d.f_out();
    let patch = d.kh * d.kw * d.c_in;
    let rows = d.valid_t_out() * f_out;
    let cols = im2col(x, d);
    let mut out = Tensor::zeros(vec![d.t_out(), f_out, d.c_out]);
    matmul_acc(&cols, w, &mut out.data_mut()[..rows * d.c_out], rows, patch, d.c_out);
    for r in 0..rows {
        let o = &mut out.data_mut()[r * d.c_out..(r + 1) * d.c_out];
        for (v, &bias) in o.iter_mut().zip(b) {
            *v += bias;
        }
    }
    out
}

/// Backward convolution: gradients for input, kernel, and bias. Gradient
/// flowing into zeroed pad rows of the output is discarded because those
/// rows are constants by definition.
pub fn conv2d_backward<T: Real>(
    x: &[T],
    w: &[T],
    dy: &[T],
    d: &ConvDims,
) -> (Vec<T>, Vec<T>, Vec<T>) {
    let f_out = d.f_out();
    let patch = d.kh * d.kw * d.c_in;
    let rows = d.valid_t_out() * f_out;
    let dy_v = &dy[..rows * d.c_out];

    let mut db = vec![T::zero(); d.c_out];
    for r in 0..rows {
        for (g, &v) in db.iter_mut().zip(&dy_v[r * d.c_out..(r + 1) * d.c_out]) {
            *g += v;
        }
    }

    let cols = im2col(x, d);
    let mut dw = vec![T::zero(); patch * d.c_out];
    matmul_at_b_acc(&cols, dy_v, &mut dw, rows, patch, d.c_out);

    let mut dcols = vec![T::zero(); rows * patch];
    matmul_a_bt_acc(dy_v, w, &mut dcols, rows, d.c_out, patch);

    // col2im: scatter patch gradients back to input positions.
    let (pad_t, pad_f) = (d.pad_t(), d.pad_f());
    let mut dx = vec![T::zero(); d.t_in * d.f_in * d.c_in];
    for to in 0..d.valid_t_out() {
        for fo in 0..f_out {
            let row = &dcols[(to * f_out + fo) * patch..(to * f_out + fo + 1) * patch];
            for kt in 0..d.kh {
                let ti = (to * d.stride.0 + kt) as isize - pad_t;
                if ti < 0 || ti as usize >= d.valid_t {
                    continue;
                }
                let ti = ti as usize;
                for kf in 0..d.kw {
                    let fi = (fo * d.stride.1 + kf) as isize - pad_f;
                    if fi < 0 || fi as usize >= d.f_in {
                        continue;
                    }
                    let fi = fi as usize;
                    let dst = (ti * d.f_in + fi) * d.c_in;
                    let src = (kt * d.kw + kf) * d.c_in;
                    for (g, &v) in dx[dst..dst + d.c_in].iter_mut().zip(&row[src..src + d.c_in]) {
                        *g += v;
                    }
                }
            }
        }
    }
    (dx, dw, db)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dims(t: usize, f: usize, c_in: usize, c_out: usize, stride: (usize, usize)) -> ConvDims {
        ConvDims { t_in: t, f_in: f, c_in, kh: 3, kw: 3, c_out, stride, valid_t: t }
    }

    #[test]
    fn same_padding_output_lengths_follow_ceil_division() {
        for (f_in, f_out) in [(80usize, 27usize), (27, 9), (9, 3), (3, 1)] {
            let d = dims(5, f_in, 1, 1, (1, 3));
            assert_eq!(d.f_out(), f_out);
        }
        assert_eq!(dims(7, 80, 1, 1, (1, 1)).t_out(), 7);
    }

    #[test]
    fn identity_kernel_reproduces_input() {
        let (t, f, c) = (4, 5, 3);
        let x: Vec<f32> = (0..t * f * c).map(|i| (i as f32) * 0.1 - 2.0).collect();
        // Center tap 1 on the matching channel, zero elsewhere.
        let mut w = vec![0.0f32; 9 * c * c];
        for ch in 0..c {
            w[((1 * 3 + 1) * c + ch) * c + ch] = 1.0;
        }
        let b = vec![0.0f32; c];
        let d = dims(t, f, c, c, (1, 1));
        let y = conv2d_forward(&x, &w, &b, &d);
        assert_eq!(y.data(), &x[..]);
    }

    #[test]
    fn masked_rows_match_cropped_input_exactly() {
        let (t_pad, valid, f, c) = (7, 4, 6, 2);
        let mut x = vec![0.0f32; t_pad * f * c];
        for (i, v) in x.iter_mut().enumerate().take(valid * f * c) {
            *v = (i as f32 * 0.37).sin();
        }
        let w: Vec<f32> = (0..9 * c * 3).map(|i| ((i * 7 % 11) as f32 - 5.0) * 0.1).collect();
        let b = vec![0.3f32, -0.2, 0.05];

        let mut dp = dims(t_pad, f, c, 3, (1, 3));
        dp.valid_t = valid;
        let padded = conv2d_forward(&x, &w, &b, &dp);

        let dc = dims(valid, f, c, 3, (1, 3));
        let cropped = conv2d_forward(&x[..valid * f * c], &w, &b, &dc);

        let f_out = dp.f_out();
        assert_eq!(&padded.data()[..valid * f_out * 3], cropped.data());
        assert!(padded.data()[valid * f_out * 3..].iter().all(|&v| v == 0.0));
    }

    /// Exhaustive finite-difference check of the raw kernels in f64.
    #[test]
    fn gradients_match_finite_differences() {
        for stride in [(1usize, 1usize), (1, 3)] {
            let mut d = dims(4, 5, 2, 3, stride);
            if stride.0 == 1 {
                d.valid_t = 3;
            }
            let n_x = d.t_in * d.f_in * d.c_in;
            let n_w = 9 * d.c_in * d.c_out;
            let x: Vec<f64> = (0..n_x).map(|i| ((i * 13 % 17) as f64 - 8.0) * 0.11).collect();
            let w: Vec<f64> = (0..n_w).map(|i| ((i * 5 % 13) as f64 - 6.0) * 0.07).collect();
            let b: Vec<f64> = (0..d.c_out).map(|i| i as f64 * 0.2 - 0.1).collect();
            let proj: Vec<f64> = (0..d.t_out() * d.f_out() * d.c_out)
                .map(|i| ((i * 3 % 7) as f64 - 3.0) * 0.15)
                .collect();
            let loss = |x: &[f64], w: &[f64], b: &[f64]| -> f64 {
                conv2d_forward(x, w, b, &d)
                    .data()
                    .iter()
                    .zip(&proj)
                    .map(|(&y, &p)| y * p)
                    .sum()
            };
            let (dx, dw, db) = conv2d_backward(&x, &w, &proj, &d);

            let h = 1e-5;
            let check = |name: &str, vals: &[f64], grad: &[f64], which: usize| {
                for i in 0..vals.len() {
                    let mut plus = vals.to_vec();
                    plus[i] += h;
                    let mut minus = vals.to_vec();
                    minus[i] -= h;
                    let (lp, lm) = match which {
                        0 => (loss(&plus, &w, &b), loss(&minus, &w, &b)),
                        1 => (loss(&x, &plus, &b), loss(&x, &minus, &b)),
                        _ => (loss(&x, &w, &plus), loss(&x, &w, &minus)),
                    };
                    let fd = (lp - lm) / (2.0 * h);
                    assert!(
                        (fd - grad[i]).abs() < 1e-6 * (1.0 + fd.abs()),
                        "{name}[{i}] stride {stride:?}: analytic {} vs fd {fd}",
                        grad[i]
                    );
                }
            };
            check("dx", &x, &dx, 0);
            check("dw", &w, &dw, 1);
            check("db", &b, &db, 2);
        }
    }
}
