//! Single-direction LSTM forward and backward-through-time kernels.
//!
//! Gate order inside every 4H-wide tensor is (input, forget, cell, output).
//! The input projection for all valid steps is one GEMM; the recurrent
//! term is a per-step vector-matrix product. Weight gradients are again
//! batched GEMMs over the collected per-step gate gradients.
//!
//! `reverse = true` runs the same recurrence over the valid frames in
//! reversed order while keeping outputs addressed by original frame index;
//! the bidirectional wrapper in the tape calls this kernel twice.

use super::linalg::{matmul, matmul_a_bt_acc, matmul_at_b_acc};
use super::tensor::Real;

/// Per-step values kept for backward.
pub struct LstmTrace<T> {
    /// Activated gates, `[valid, 4H]`, step-ordered (processing order).
    pub gates: Vec<T>,
    /// Cell states, `[valid, H]`, step-ordered.
    pub c: Vec<T>,
    /// tanh of cell states, `[valid, H]`, step-ordered.
    pub tanh_c: Vec<T>,
    /// Hidden states, `[valid, H]`, step-ordered.
    pub h: Vec<T>,
}

fn sigmoid<T: Real>(x: T) -> T {
    if x >= T::zero() {
        T::one() / (T::one() + (-x).exp())
    } else {
        let e = x.exp();
        e / (T::one() + e)
    }
}

/// Run the recurrence over the first `valid` rows of `x` (`[t_len, d]`).
/// `wx` is `[d, 4H]`, `wh` `[h, 4H]`, `b` `[4H]`. Writes hidden states into
/// `out` (`[t_len, out_stride]` row-major) at column `out_col`, leaving
/// rows at or past `valid` untouched.
pub fn lstm_forward<T: Real>(
    x: &[T],
    d: usize,
    t_len: usize,
    valid: usize,
    wx: &[T],
    wh: &[T],
    b: &[T],
    hidden: usize,
    reverse: bool,
    out: &mut [T],
    out_stride: usize,
    out_col: usize,
) -> LstmTrace<T> {
    let g4 = 4 * hidden;
    debug_assert_eq!(x.len(), t_len * d);
    debug_assert_eq!(wx.len(), d * g4);
    debug_assert_eq!(wh.len(), hidden * g4);
    debug_assert_eq!(b.len(), g4);

    // Input projection for every valid frame at once, in frame order.
    let mut z_in = matmul(&x[..valid * d], wx, valid, d, g4);
    for step in 0..valid {
        let row = &mut z_in[step * g4..(step + 1) * g4];
        for (z, &bias) in row.iter_mut().zip(b) {
            *z += bias;
        }
    }

    let mut trace = LstmTrace {
        gates: vec![T::zero(); valid * g4],
        c: vec![T::zero(); valid * hidden],
        tanh_c: vec![T::zero(); valid * hidden],
        h: vec![T::zero(); valid * hidden],
    };
    let mut h_prev = vec![T::zero(); hidden];
    let mut c_prev = vec![T::zero(); hidden];
    let mut z = vec![T::zero(); g4];

    for step in 0..valid {
        let t = if reverse { valid - 1 - step } else { step };
        z.copy_from_slice(&z_in[t * g4..(t + 1) * g4]);
        // z += h_prev * wh
        for (j, &hv) in h_prev.iter().enumerate() {
            if hv == T::zero() {
                continue;
            }
            let w_row = &wh[j * g4..(j + 1) * g4];
            for (zv, &wv) in z.iter_mut().zip(w_row) {
                *zv += hv * wv;
            }
        }
        let gates = &mut trace.gates[step * g4..(step + 1) * g4];
        for k in 0..hidden {
            gates[k] = sigmoid(z[k]);
            gates[hidden + k] = sigmoid(z[hidden + k]);
            gates[2 * hidden + k] = z[2 * hidden + k].tanh();
            gates[3 * hidden + k] = sigmoid(z[3 * hidden + k]);
        }
        let c_row = &mut trace.c[step * hidden..(step + 1) * hidden];
        let tc_row = &mut trace.tanh_c[step * hidden..(step + 1) * hidden];
        let h_row = &mut trace.h[step * hidden..(step + 1) * hidden];
        for k in 0..hidden {
            let c = gates[hidden + k] * c_prev[k] + gates[k] * gates[2 * hidden + k];
            c_row[k] = c;
            let tc = c.tanh();
            tc_row[k] = tc;
            h_row[k] = gates[3 * hidden + k] * tc;
        }
        c_prev.copy_from_slice(c_row);
        h_prev.copy_from_slice(h_row);
        out[t * out_stride + out_col..t * out_stride + out_col + hidden].copy_from_slice(h_row);
    }
    trace
}

/// Gradients produced by one direction's backward pass.
pub struct LstmGrads<T> {
    pub dx: Vec<T>,
    pub dwx: Vec<T>,
    pub dwh: Vec<T>,
    pub db: Vec<T>,
}

/// Backward through time. `dout` is the gradient on the full output
/// (`[t_len, out_stride]`); only the `hidden` columns starting at
/// `out_col` and rows below `valid` belong to this direction.
#[allow(clippy::too_many_arguments)]
pub fn lstm_backward<T: Real>(
    x: &[T],
    d: usize,
    t_len: usize,
    valid: usize,
    wx: &[T],
    wh: &[T],
    hidden: usize,
    reverse: bool,
    trace: &LstmTrace<T>,
    dout: &[T],
    out_stride: usize,
    out_col: usize,
) -> LstmGrads<T> {
    let g4 = 4 * hidden;
    let mut dz_all = vec![T::zero(); valid * g4];
    let mut dh = vec![T::zero(); hidden];
    let mut dc = vec![T::zero(); hidden];

    // Walk processing order backwards: last computed step first.
    for step in (0..valid).rev() {
        let t = if reverse { valid - 1 - step } else { step };
        let out_row = &dout[t * out_stride + out_col..t * out_stride + out_col + hidden];
        for (g, &v) in dh.iter_mut().zip(out_row) {
            *g += v;
        }
        let gates = &trace.gates[step * g4..(step + 1) * g4];
        let tc = &trace.tanh_c[step * hidden..(step + 1) * hidden];
        let c_prev_row = if step == 0 { None } else { Some(&trace.c[(step - 1) * hidden..step * hidden]) };
        let dz = &mut dz_all[step * g4..(step + 1) * g4];
        for k in 0..hidden {
            let (ig, fg, gg, og) = (gates[k], gates[hidden + k], gates[2 * hidden + k], gates[3 * hidden + k]);
            let d_o = dh[k] * tc[k];
            let dck = dc[k] + dh[k] * og * (T::one() - tc[k] * tc[k]);
            let d_i = dck * gg;
            let d_g = dck * ig;
            let c_prev = c_prev_row.map_or(T::zero(), |r| r[k]);
            let d_f = dck * c_prev;
            dc[k] = dck * fg;
            dz[k] = d_i * ig * (T::one() - ig);
            dz[hidden + k] = d_f * fg * (T::one() - fg);
            dz[2 * hidden + k] = d_g * (T::one() - gg * gg);
            dz[3 * hidden + k] = d_o * og * (T::one() - og);
        }
        // dh_prev = dz * wh^T
        for g in dh.iter_mut() {
            *g = T::zero();
        }
        matmul_a_bt_acc(dz, wh, &mut dh, 1, g4, hidden);
    }

    // Weight gradients as batched GEMMs over all steps.
    let mut dwx = vec![T::zero(); d * g4];
    let mut dx = vec![T::zero(); t_len * d];
    {
        // Valid frames of x in processing order.
        let mut x_steps = vec![T::zero(); valid * d];
        for step in 0..valid {
            let t = if reverse { valid - 1 - step } else { step };
            x_steps[step * d..(step + 1) * d].copy_from_slice(&x[t * d..(t + 1) * d]);
        }
        matmul_at_b_acc(&x_steps, &dz_all, &mut dwx, valid, d, g4);
        let mut dx_steps = vec![T::zero(); valid * d];
        matmul_a_bt_acc(&dz_all, wx, &mut dx_steps, valid, g4, d);
        for step in 0..valid {
            let t = if reverse { valid - 1 - step } else { step };
            dx[t * d..(t + 1) * d].copy_from_slice(&dx_steps[step * d..(step + 1) * d]);
        }
    }

    let mut dwh = vec![T::zero(); hidden * g4];
    if valid > 1 {
        // h_prev rows: h at steps 0..valid-1 feed gates at steps 1..valid.
        matmul_at_b_acc(
            &trace.h[..(valid - 1) * hidden],
            &dz_all[g4..],
            &mut dwh,
            valid - 1,
            hidden,
            g4,
        );
    }

    let mut db = vec![T::zero(); g4];
    for step in 0..valid {
        for (g, &v) in db.iter_mut().zip(&dz_all[step * g4..(step + 1) * g4]) {
            *g += v;
        }
    }

    LstmGrads { dx, dwx, dwh, db }
}
