//! Small dense GEMM kernels shared by conv and LSTM code.
//!
//! The ikj loop order keeps the inner loop a contiguous axpy so the
//! compiler can vectorize it; that is what makes opt-level builds of the
//! training loop fast enough without an external BLAS.

use super::tensor::Real;

/// c += a(m x k) * b(k x n), all row-major.
pub fn matmul_acc<T: Real>(a: &[T], b: &[T], c: &mut [T], m: usize, k: usize, n: usize) {
    debug_assert_eq!(a.len(), m * k);
    debug_assert_eq!(b.len(), k * n);
    debug_assert_eq!(c.len(), m * n);
    for i in 0..m {
        let a_row = &a[i * k..(i + 1) * k];
        let c_row = &mut c[i * n..(i + 1) * n];
        for (p, &a_ip) in a_row.iter().enumerate() {
            if a_ip == T::zero() {
                continue;
            }
            let b_row = &b[p * n..(p + 1) * n];
            for (c_v, &b_v) in c_row.iter_mut().zip(b_row) {
                *c_v += a_ip * b_v;
            }
        }
    }
}

/// c = a(m x k) * b(k x n), row-major.
pub fn matmul<T: Real>(a: &[T], b: &[T], m: usize, k: usize, n: usize) -> Vec<T> {
    let mut c = vec![T::zero(); m * n];
    matmul_acc(a, b, &mut c, m, k, n);
    c
}

/// c += a^T(k x m -> m x k view) * b(k x n): treats `a` as k x m row-major
/// and multiplies its transpose. Used for weight gradients dW = X^T dZ.
pub fn matmul_at_b_acc<T: Real>(a: &[T], b: &[T], c: &mut [T], k: usize, m: usize, n: usize) {
    debug_assert_eq!(a.len(), k * m);
    debug_assert_eq!(b.len(), k * n);
    debug_assert_eq!(c.len(), m * n);
    for p in 0..k {
        let a_row = &a[p * m..(p + 1) * m];
        let b_row = &b[p * n..(p + 1) * n];
        for (i, &a_pi) in a_row.iter().enumerate() {
            if a_pi == T::zero() {
                continue;
            }
            let c_row = &mut c[i * n..(i + 1) * n];
            for (c_v, &b_v) in c_row.iter_mut().zip(b_row) {
                *c_v += a_pi * b_v;
            }
        }
    }
}

/// c += a(m x k) * b^T(n x k row-major): multiplies by the transpose of
/// `b`. Used for input gradients dX = dZ W^T.
pub fn matmul_a_bt_acc<T: Real>(a: &[T], b: &[T], c: &mut [T], m: usize, k: usize, n: usize) {
    debug_assert_eq!(a.len(), m * k);
    debug_assert_eq!(b.len(), n * k);
    debug_assert_eq!(c.len(), m * n);
    for i in 0..m {
        let a_row = &a[i * k..(i + 1) * k];
        let c_row = &mut c[i * n..(i + 1) * n];
        for (j, c_v) in c_row.iter_mut().enumerate() {
            let b_row = &b[j * k..(j + 1) * k];
            let mut acc = T::zero();
            for (&a_v, &b_v) in a_row.iter().zip(b_row) {
                acc += a_v * b_v;
            }
            *c_v += acc;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matmul_matches_manual_example() {
        // [1 2; 3 4] * [5 6; 7 8] = [19 22; 43 50]
        let a = [1.0f32, 2.0, 3.0, 4.0];
        let b = [5.0f32, 6.0, 7.0, 8.0];
        let c = matmul(&a, &b, 2, 2, 2);
        assert_eq!(c, vec![19.0, 22.0, 43.0, 50.0]);
    }

    #[test]
    fn transpose_variants_agree_with_explicit_transpose() {
        let a = [1.0f32, 2.0, 3.0, 4.0, 5.0, 6.0]; // 2x3
        let b = [1.0f32, 0.5, -1.0, 2.0, 0.0, 3.0]; // 2x3
        // a^T (3x2) * b (2x3) -> 3x3
        let mut c1 = vec![0.0f32; 9];
        matmul_at_b_acc(&a, &b, &mut c1, 2, 3, 3);
        let at = [1.0f32, 4.0, 2.0, 5.0, 3.0, 6.0]; // 3x2
        let c2 = matmul(&at, &b, 3, 2, 3);
        assert_eq!(c1, c2);

        // a (2x3) * b^T (3x2) -> 2x2
        let mut c3 = vec![0.0f32; 4];
        matmul_a_bt_acc(&a, &b, &mut c3, 2, 3, 2);
        let bt = [1.0f32, 2.0, 0.5, 0.0, -1.0, 3.0]; // 3x2
        let c4 = matmul(&a, &bt, 2, 3, 2);
        assert_eq!(c3, c4);
    }
}
