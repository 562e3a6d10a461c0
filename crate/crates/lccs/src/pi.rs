//! PI output-voltage regulator acting on the switching frequency.
//!
//! Gains are expressed in kHz per volt (and kHz per volt-second): the
//! published operating gains only regulate on the experiment's timescale
//! under that scaling, and the tuned gain magnitudes (1e-2 .. 1e1) match it.
//! The command is saturated to the WPT band and the integrator is held
//! whenever the command saturates and the error would push it further out.

use serde::{Deserialize, Serialize};

/// Hz per unit of (kp * e), i.e. gains act in kHz.
pub const GAIN_SCALE_HZ: f64 = 1e3;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PiController {
    /// Proportional gain (kHz/V).
    pub kp: f64,
    /// Integral gain (kHz/(V*s)).
    pub ki: f64,
    /// Integrator state, the running integral of the error (V*s). Shared
    /// with the agent observation.
    pub integ: f64,
    /// Center frequency (Hz).
    pub f_base: f64,
    /// Saturation band (Hz).
    pub f_min: f64,
    pub f_max: f64,
    /// Loop polarity, set from the commissioned gain-curve slope.
    pub sign: f64,
}

impl PiController {
    pub fn new(kp: f64, ki: f64) -> Self {
        Self {
            kp,
            ki,
            integ: 0.0,
            f_base: 85e3,
            f_min: 79e3,
            f_max: 90e3,
            // Commissioned from the open-loop gain curve: steady Vout rises
            // with frequency across the whole 79-90 kHz band, so a positive
            // error must raise the commanded frequency.
            sign: 1.0,
        }
    }

    /// The gain pair the training converged to in print.
    pub fn published() -> Self {
        Self::new(0.0553, 12.9637)
    }

    /// The untuned starting gains.
    pub fn initial() -> Self {
        Self::new(5.28, 0.05)
    }

    /// One control update. `e = Vref - Vout`, `dt` is the control period.
    pub fn pi_step(&mut self, e: f64, dt: f64) -> f64 {
        debug_assert!(dt > 0.0);
        let integ_next = self.integ + e * dt;
        let u = self.f_base + GAIN_SCALE_HZ * self.sign * (self.kp * e + self.ki * integ_next);
        if u > self.f_max {
            // Hold the integrator if the error keeps pushing upward.
            if self.sign * self.ki * e <= 0.0 {
                self.integ = integ_next;
            }
            self.f_max
        } else if u < self.f_min {
            if self.sign * self.ki * e >= 0.0 {
                self.integ = integ_next;
            }
            self.f_min
        } else {
            self.integ = integ_next;
            u
        }
    }

    pub fn reset(&mut self) {
        self.integ = 0.0;
    }
}
