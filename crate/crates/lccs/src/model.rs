//! Six-mode switched-affine model of the LCC-S resonant converter.
//!
//! The converter state is seven-dimensional:
//!
//! - `x1` tank inductor current (A)
//! - `x2` voltage of the parallel primary tank capacitor C1 (V)
//! - `x3` voltage of the series primary tank capacitor Cs1 (V)
//! - `x4` transformer input current (A)
//! - `x5` transformer output current (A)
//! - `x6` secondary series capacitor voltage (V)
//! - `x7` output voltage (V)
//!
//! Each of the six operating modes (bridge polarity `s` in {-1, +1} crossed
//! with the rectifier conduction state) is an affine subsystem
//! `x' = A_i x + b_i`. Two matrix variants are provided: the published table
//! as printed (`Verbatim`) and a circuit-derived set (`Corrected`) that
//! passes the passivity screen; see [`build_subsystems`].

use crate::error::{Error, Result};
use crate::params::{ConverterParams, DerivedParams};
use serde::{Deserialize, Serialize};

pub const NSTATE: usize = 7;

pub type StateVector = [f64; NSTATE];
pub type Mat7 = [[f64; NSTATE]; NSTATE];

/// Output selector row: `y = x7`.
pub const C_OUT_ROW: StateVector = [0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 1.0];

/// Hyperplane `K*x + m = 0` that drives the bridge polarity in the
/// state-based (DPWA) switching scheme.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SwitchingSurface {
    pub k: StateVector,
    pub m: f64,
}

impl SwitchingSurface {
    /// The published 85 kHz operating point. Only six surface coefficients
    /// are given in print; the seventh is taken as zero.
    pub fn preset_85khz_k7_zero() -> Self {
        Self {
            k: [5413.4, 265.6, 463.1, 1445.4, 370.1, -1.0, 0.0],
            m: 2208.7,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.k.iter().any(|v| !v.is_finite()) || !self.m.is_finite() {
            return Err(Error::InvalidParameter("switching surface must be finite".into()));
        }
        if self.k.iter().all(|&v| v == 0.0) && self.m == 0.0 {
            return Err(Error::InvalidParameter(
                "switching surface must not be identically zero".into(),
            ));
        }
        Ok(())
    }
}

/// Bridge polarity from the switching surface: `+1` iff `K*x + m >= 0`.
/// The boundary itself maps to `+1`.
pub fn switch_state(surface: &SwitchingSurface, x: &StateVector) -> i8 {
    let mut acc = surface.m;
    for i in 0..NSTATE {
        acc += surface.k[i] * x[i];
    }
    if acc >= 0.0 {
        1
    } else {
        -1
    }
}

/// Operating mode index, 1..=6.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Mode(u8);

impl Mode {
    pub fn new(index: u8) -> Result<Self> {
        if (1..=6).contains(&index) {
            Ok(Mode(index))
        } else {
            Err(Error::InvalidParameter(format!("mode index {index} outside 1..=6")))
        }
    }

    pub fn index(self) -> u8 {
        self.0
    }

    /// Zero-based index into a [`SubsystemSet`].
    pub fn slot(self) -> usize {
        (self.0 - 1) as usize
    }

    /// Bridge polarity this mode belongs to.
    pub fn polarity(self) -> i8 {
        if self.0 <= 3 {
            1
        } else {
            -1
        }
    }

    /// Rectifier-off modes hold the secondary current states frozen.
    pub fn rectifier_off(self) -> bool {
        self.0 == 2 || self.0 == 5
    }

    /// Sign of the rectifier conduction path: +1 for modes 1/6 (the
    /// `x5 > x4` branches), -1 for modes 3/4, 0 when the rectifier is off.
    pub fn rectifier_sign(self) -> i8 {
        match self.0 {
            1 | 6 => 1,
            3 | 4 => -1,
            _ => 0,
        }
    }

    /// Conducting mode for a bridge polarity `s` and rectifier sign `rect`.
    pub fn conducting(s: i8, rect: i8) -> Self {
        match (s, rect) {
            (1, 1) => Mode(1),
            (1, _) => Mode(3),
            (_, 1) => Mode(6),
            _ => Mode(4),
        }
    }

    /// Rectifier-off mode for a bridge polarity `s`.
    pub fn blocking(s: i8) -> Self {
        if s == 1 {
            Mode(2)
        } else {
            Mode(5)
        }
    }
}

/// Rectifier input voltage
/// `v_pr = M/(Lp'+M) * (x2 + x3 - rp*x4) - rs*x5 - x6`.
pub fn rectifier_voltage(x: &StateVector, p: &ConverterParams, d: &DerivedParams) -> f64 {
    d.m / (d.lp_prime + d.m) * (x[1] + x[2] - p.rp * x[3]) - p.rs * x[4] - x[5]
}

/// Mode condition function.
///
/// Guard precedence: the rectifier-off test `|v_pr| < x7` is evaluated
/// first (modes 2/5), then the current comparison `x5` vs `x4` selects the
/// conducting mode. An exact tie `x5 == x4` retains `prev` when `prev` is a
/// conducting mode of the same polarity, otherwise the lower index wins.
pub fn classify_mode(
    s: i8,
    x: &StateVector,
    p: &ConverterParams,
    d: &DerivedParams,
    prev: Mode,
) -> Mode {
    debug_assert!(s == 1 || s == -1);
    let v_pr = rectifier_voltage(x, p, d);
    if v_pr.abs() < x[6] {
        return Mode(if s == 1 { 2 } else { 5 });
    }
    let (hi, lo) = if s == 1 { (1u8, 3u8) } else { (6u8, 4u8) };
    if x[4] > x[3] {
        Mode(hi)
    } else if x[4] < x[3] {
        Mode(lo)
    } else if prev.polarity() == s && !prev.rectifier_off() {
        prev
    } else {
        Mode(hi.min(lo))
    }
}

/// Which matrix set to build.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum MatrixVariant {
    /// Circuit-derived (KVL/KCL) matrices; these pass the passivity screen.
    Corrected,
    /// The published table as printed, kept for comparison. Several of its
    /// sign patterns fail the passivity screen.
    Verbatim,
}

/// The six affine subsystems plus the output row.
#[derive(Clone, Debug, PartialEq)]
pub struct SubsystemSet {
    pub a: [Mat7; 6],
    pub b: [StateVector; 6],
    pub c_out_row: StateVector,
    pub variant: MatrixVariant,
}

impl SubsystemSet {
    pub fn a_of(&self, mode: Mode) -> &Mat7 {
        &self.a[mode.slot()]
    }

    pub fn b_of(&self, mode: Mode) -> &StateVector {
        &self.b[mode.slot()]
    }
}

/// `A_mode * x + b_mode`.
pub fn derivative(mode: Mode, x: &StateVector, set: &SubsystemSet) -> StateVector {
    let a = set.a_of(mode);
    let b = set.b_of(mode);
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

pub fn build_subsystems(
    p: &ConverterParams,
    d: &DerivedParams,
    variant: MatrixVariant,
) -> Result<SubsystemSet> {
    p.validate()?;
    let mut a = [[[0.0; NSTATE]; NSTATE]; 6];
    let mut b = [[0.0; NSTATE]; 6];
    for mode in 1..=6u8 {
        let slot = (mode - 1) as usize;
        match variant {
            MatrixVariant::Corrected => fill_corrected(p, d, mode, &mut a[slot], &mut b[slot]),
            MatrixVariant::Verbatim => fill_verbatim(p, d, mode, &mut a[slot], &mut b[slot]),
        }
    }
    Ok(SubsystemSet {
        a,
        b,
        c_out_row: C_OUT_ROW,
        variant,
    })
}

/// Rows shared by every mode: tank inductor, tank capacitors.
fn fill_common(p: &ConverterParams, s: f64, a: &mut Mat7, b: &mut StateVector) {
    a[0][0] = -p.r1_series / p.l1;
    a[0][1] = -1.0 / p.l1;
    b[0] = s * p.vin / p.l1;
    a[1][0] = 1.0 / p.c1;
    a[1][3] = -1.0 / p.c1;
    a[2][3] = -1.0 / p.cs1;
}

/// Circuit-derived matrices.
///
/// The state orientation is the one fixed by the rectifier-voltage formula:
/// the coupled-coil fluxes are `lam_p = Lp x4 - M x5`, `lam_s = -M x4 + Ls x5`
/// (so the open-circuit secondary voltage is `M/Lp * (x2 + x3 - rp x4)`,
/// matching [`rectifier_voltage`]). Conducting modes solve
///
/// `[[Lp, -M], [-M, Ls]] [x4'; x5'] = [x2 + x3 - rp x4;
///                                     -(rs x5 + x6 + pol*(x7 + 2 VF))]`
///
/// with `pol` the rectifier conduction polarity, and feed `pol*x5` into the
/// output filter. Rectifier-off modes freeze `x5`/`x6` and leave the primary
/// coil uncoupled. This reproduces the published subsystem 1 exactly and
/// fixes the handful of entries whose printed signs fail the passivity
/// screen.
fn fill_corrected(p: &ConverterParams, d: &DerivedParams, mode: u8, a: &mut Mat7, b: &mut StateVector) {
    let s = if mode <= 3 { 1.0 } else { -1.0 };
    fill_common(p, s, a, b);
    let lp = d.lp_prime + d.m;
    let ls = d.ls_prime + d.m;
    let leq = d.l_eq;
    match mode {
        2 | 5 => {
            a[3][1] = 1.0 / lp;
            a[3][2] = 1.0 / lp;
            a[3][3] = -p.rp / lp;
            a[6][6] = -1.0 / (p.r_load * p.c_out);
        }
        _ => {
            // Conduction polarity: modes 1 and 6 (x5 > x4 branches) pass the
            // secondary current straight through, modes 3 and 4 inverted.
            let pol = if mode == 1 || mode == 6 { 1.0 } else { -1.0 };
            a[3][1] = ls / leq;
            a[3][2] = ls / leq;
            a[3][3] = -p.rp * ls / leq;
            a[3][4] = -p.rs * d.m / leq;
            a[3][5] = -d.m / leq;
            a[3][6] = -pol * d.m / leq;
            b[3] = -2.0 * pol * d.m * p.vf / leq;

            a[4][1] = d.m / leq;
            a[4][2] = d.m / leq;
            a[4][3] = -p.rp * d.m / leq;
            a[4][4] = -p.rs * lp / leq;
            a[4][5] = -lp / leq;
            a[4][6] = -pol * lp / leq;
            b[4] = -2.0 * pol * lp * p.vf / leq;

            a[5][4] = 1.0 / p.cs2;

            a[6][4] = pol / p.c_out;
            a[6][6] = -1.0 / (p.r_load * p.c_out);
        }
    }
}

/// The published table transcribed entry for entry, except that the output
/// filter row uses `Cout`/`Rload` in place of the printed `C1`/`R1` (the
/// printed entries would make the output filter behave as a nanofarad tank
/// capacitor).
fn fill_verbatim(p: &ConverterParams, d: &DerivedParams, mode: u8, a: &mut Mat7, b: &mut StateVector) {
    let lp = d.lp_prime + d.m;
    let ls = d.ls_prime + d.m;
    let leq = d.l_eq;
    let m = d.m;

    // Row 1/2 signs vary between printed subsystems.
    a[0][0] = -p.r1_series / p.l1;
    a[2][3] = -1.0 / p.cs1;
    a[1][0] = 1.0 / p.c1;
    match mode {
        1 => {
            a[0][1] = -1.0 / p.l1;
            a[1][3] = -1.0 / p.c1;
            b[0] = p.vin / p.l1;
        }
        2 => {
            a[0][1] = 1.0 / p.l1;
            a[1][3] = 1.0 / p.c1;
            b[0] = p.vin / p.l1;
        }
        3 => {
            a[0][1] = 1.0 / p.l1;
            a[1][3] = 1.0 / p.c1;
            b[0] = -p.vin / p.l1;
        }
        4 => {
            a[0][1] = -1.0 / p.l1;
            a[1][3] = -1.0 / p.c1;
            b[0] = -p.vin / p.l1;
        }
        5 => {
            a[0][1] = -1.0 / p.l1;
            a[1][3] = -1.0 / p.c1;
            b[0] = -p.vin / p.l1;
        }
        6 => {
            a[0][1] = -1.0 / p.l1;
            a[1][3] = 1.0 / p.c1;
            b[0] = p.vin / p.l1;
        }
        _ => unreachable!(),
    }

    match mode {
        2 | 5 => {
            a[3][1] = 1.0 / lp;
            a[3][2] = 1.0 / lp;
            a[3][3] = -p.rp / lp;
            a[6][6] = -1.0 / (p.r_load * p.c_out);
        }
        1 | 4 => {
            a[3][1] = ls / leq;
            a[3][2] = ls / leq;
            a[3][3] = -p.rp * ls / leq;
            a[3][4] = -p.rs * m / leq;
            a[3][5] = -m / leq;
            a[3][6] = -m / leq;
            a[4][1] = m / leq;
            a[4][2] = m / leq;
            a[4][3] = -p.rp * m / leq;
            a[4][4] = -p.rs * lp / leq;
            a[4][5] = -lp / leq;
            a[4][6] = -lp / leq;
            a[5][4] = if mode == 1 { -1.0 } else { 1.0 } / p.cs2;
            a[6][4] = 1.0 / p.c_out;
            a[6][6] = -1.0 / (p.r_load * p.c_out);
            b[3] = -2.0 * m * p.vf / leq;
            b[4] = -2.0 * lp * p.vf / leq;
        }
        3 | 6 => {
            a[3][1] = ls / leq;
            a[3][2] = -ls / leq;
            a[3][3] = -p.rp * ls / leq;
            a[3][4] = p.rs * m / leq;
            a[3][5] = m / leq;
            a[3][6] = m / leq;
            a[4][1] = -m / leq;
            a[4][2] = -m / leq;
            a[4][3] = p.rp * m / leq;
            a[4][4] = -p.rs * lp / leq;
            a[4][5] = -lp / leq;
            a[4][6] = -lp / leq;
            a[5][4] = 1.0 / p.cs2;
            a[6][4] = 1.0 / p.c_out;
            a[6][6] = -1.0 / (p.r_load * p.c_out);
            b[3] = 2.0 * m * p.vf / leq;
            b[4] = -2.0 * lp * p.vf / leq;
        }
        _ => unreachable!(),
    }
}

/// Stored circuit energy
/// `E = 1/2 L1 x1^2 + 1/2 C1 x2^2 + 1/2 Cs1 x3^2 + 1/2 i' L i
///    + 1/2 Cs2 x6^2 + 1/2 Cout x7^2`
/// with `i = (x4, x5)` and `L = [[Lp'+M, -M], [-M, Ls'+M]]`.
///
/// The negative cross term follows the state orientation fixed by
/// [`rectifier_voltage`]: with `x4` and `x5` both taken as the currents
/// flowing out of their respective tanks, the mutual flux subtracts.
pub fn stored_energy(x: &StateVector, p: &ConverterParams, d: &DerivedParams) -> f64 {
    let lp = d.lp_prime + d.m;
    let ls = d.ls_prime + d.m;
    0.5 * p.l1 * x[0] * x[0]
        + 0.5 * p.c1 * x[1] * x[1]
        + 0.5 * p.cs1 * x[2] * x[2]
        + 0.5 * (lp * x[3] * x[3] - 2.0 * d.m * x[3] * x[4] + ls * x[4] * x[4])
        + 0.5 * p.cs2 * x[5] * x[5]
        + 0.5 * p.c_out * x[6] * x[6]
}

/// Gradient of [`stored_energy`].
pub fn energy_gradient(x: &StateVector, p: &ConverterParams, d: &DerivedParams) -> StateVector {
    let lp = d.lp_prime + d.m;
    let ls = d.ls_prime + d.m;
    [
        p.l1 * x[0],
        p.c1 * x[1],
        p.cs1 * x[2],
        lp * x[3] - d.m * x[4],
        -d.m * x[3] + ls * x[4],
        p.cs2 * x[5],
        p.c_out * x[6],
    ]
}
