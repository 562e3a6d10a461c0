//! Fixed-step RK4 for the held-mode affine dynamics.

use crate::model::{Mat7, StateVector, NSTATE};

/// Default magnitude bound signalling instability or a bad step size.
pub const DEFAULT_BLOWUP_BOUND: f64 = 1e9;

#[inline]
fn axpb(a: &Mat7, b: &StateVector, x: &StateVector) -> StateVector {
    let mut out = *b;
    for r in 0..NSTATE {
        let row = &a[r];
        let mut acc = 0.0;
        for c in 0..NSTATE {
            acc += row[c] * x[c];
        }
        out[r] += acc;
    }
    out
}

/// One classical RK4 step of `x' = A x + b` with the mode held fixed.
#[inline]
pub fn rk4_step(a: &Mat7, b: &StateVector, x: &StateVector, dt: f64) -> StateVector {
    let k1 = axpb(a, b, x);
    let mut xt = *x;
    for i in 0..NSTATE {
        xt[i] = x[i] + 0.5 * dt * k1[i];
    }
    let k2 = axpb(a, b, &xt);
    for i in 0..NSTATE {
        xt[i] = x[i] + 0.5 * dt * k2[i];
    }
    let k3 = axpb(a, b, &xt);
    for i in 0..NSTATE {
        xt[i] = x[i] + dt * k3[i];
    }
    let k4 = axpb(a, b, &xt);
    let mut out = *x;
    for i in 0..NSTATE {
        out[i] = x[i] + dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }
    out
}

/// True when any component exceeds the magnitude bound or is non-finite.
#[inline]
pub fn blown_up(x: &StateVector, bound: f64) -> bool {
    x.iter().any(|v| !v.is_finite() || v.abs() > bound)
}
