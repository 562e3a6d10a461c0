//! Shared oracles for the integration suite.

use lccs::model::{Mat7, StateVector};

pub type Mat8 = [[f64; 8]; 8];

fn mat_mul(a: &Mat8, b: &Mat8) -> Mat8 {
    let mut c = [[0.0; 8]; 8];
    for (i, row) in a.iter().enumerate() {
        for k in 0..8 {
            let aik = row[k];
            if aik == 0.0 {
                continue;
            }
            for j in 0..8 {
                c[i][j] += aik * b[k][j];
            }
        }
    }
    c
}

fn identity() -> Mat8 {
    let mut m = [[0.0; 8]; 8];
    for (i, row) in m.iter_mut().enumerate() {
        row[i] = 1.0;
    }
    m
}

fn one_norm(m: &Mat8) -> f64 {
    (0..8)
        .map(|j| m.iter().map(|row| row[j].abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Matrix exponential by scaling and squaring with a Taylor series on the
/// scaled matrix. The scaled norm is held below 1/2, where 25 Taylor terms
/// reach full f64 precision.
pub fn expm8(m: &Mat8) -> Mat8 {
    let norm = one_norm(m);
    let s = if norm > 0.5 {
        (norm / 0.5).log2().ceil() as u32
    } else {
        0
    };
    let scale = 1.0 / f64::powi(2.0, s as i32);
    let mut ms = [[0.0; 8]; 8];
    for i in 0..8 {
        for j in 0..8 {
            ms[i][j] = m[i][j] * scale;
        }
    }
    let mut result = identity();
    let mut term = identity();
    for k in 1..=25 {
        term = mat_mul(&term, &ms);
        let inv_k = 1.0 / k as f64;
        for i in 0..8 {
            for j in 0..8 {
                term[i][j] *= inv_k;
                result[i][j] += term[i][j];
            }
        }
    }
    for _ in 0..s {
        result = mat_mul(&result, &result);
    }
    result
}

/// Exact solution of `x' = A x + b` after time `t` via the augmented
/// homogeneous system `[[A, b], [0, 0]]` acting on `[x; 1]`.
pub fn exact_hold_solution(a: &Mat7, b: &StateVector, x0: &StateVector, t: f64) -> StateVector {
    let mut m: Mat8 = [[0.0; 8]; 8];
    for i in 0..7 {
        for j in 0..7 {
            m[i][j] = a[i][j] * t;
        }
        m[i][7] = b[i] * t;
    }
    let e = expm8(&m);
    let mut aug = [0.0; 8];
    let mut v = [0.0; 8];
    v[..7].copy_from_slice(x0);
    v[7] = 1.0;
    for (i, row) in e.iter().enumerate() {
        aug[i] = row.iter().zip(&v).map(|(a, b)| a * b).sum();
    }
    let mut out = [0.0; 7];
    out.copy_from_slice(&aug[..7]);
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn expm_of_zero_is_identity() {
        let e = expm8(&[[0.0; 8]; 8]);
        for (i, row) in e.iter().enumerate() {
            for (j, v) in row.iter().enumerate() {
                assert_eq!(*v, if i == j { 1.0 } else { 0.0 });
            }
        }
    }

    #[test]
    fn expm_diagonal() {
        let mut m = [[0.0; 8]; 8];
        m[0][0] = 1.0;
        m[1][1] = -2.0;
        m[2][2] = 10.0; // forces scaling
        let e = expm8(&m);
        assert!((e[0][0] - 1f64.exp()).abs() < 1e-12);
        assert!((e[1][1] - (-2f64).exp()).abs() < 1e-11);
        assert!((e[2][2] - 10f64.exp()).abs() < 1e-7 * 10f64.exp());
    }

    #[test]
    fn affine_scalar_solution() {
        // x' = -x + 1 from x0 = 0: x(t) = 1 - e^{-t}.
        let mut a: Mat7 = [[0.0; 7]; 7];
        a[0][0] = -1.0;
        let mut b: StateVector = [0.0; 7];
        b[0] = 1.0;
        let x = exact_hold_solution(&a, &b, &[0.0; 7], 0.7);
        assert!((x[0] - (1.0 - (-0.7f64).exp())).abs() < 1e-13);
    }

    #[test]
    fn rotation_block() {
        // x' = [[0, -w], [w, 0]] x rotates; check period/4.
        let w = 3.0;
        let mut a: Mat7 = [[0.0; 7]; 7];
        a[0][1] = -w;
        a[1][0] = w;
        let t = std::f64::consts::FRAC_PI_2 / w;
        let mut x0: StateVector = [0.0; 7];
        x0[0] = 1.0;
        let x = exact_hold_solution(&a, &[0.0; 7], &x0, t);
        assert!(x[0].abs() < 1e-12);
        assert!((x[1] - 1.0).abs() < 1e-12);
    }
}
