//! Converter component values and quantities derived from them.
//!
//! Raw values mirror the component table of the LCC-S converter: the primary
//! LCC tank (`L1`, `C1`, `Cs1`), the coupled coils (`Lp`, `Ls`, `k`), the
//! secondary series capacitor `Cs2`, parasitic resistances, the diode drop,
//! and the output filter. Everything is stored in SI base units.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConverterParams {
    /// Series primary tank inductance (H).
    pub l1: f64,
    /// Parallel primary tank capacitance (F).
    pub c1: f64,
    /// Series primary tank capacitance (F).
    pub cs1: f64,
    /// Series secondary capacitance (F).
    pub cs2: f64,
    /// Series resistance of the tank inductor (Ω).
    pub r1_series: f64,
    /// Series resistance of the primary coil (Ω).
    pub rp: f64,
    /// Series resistance of the secondary coil (Ω).
    pub rs: f64,
    /// DC input voltage of the full bridge (V).
    pub vin: f64,
    /// Primary coil self inductance (H).
    pub lp: f64,
    /// Secondary coil self inductance (H).
    pub ls: f64,
    /// Coupling coefficient (dimensionless).
    pub k: f64,
    /// Diode forward drop (V).
    pub vf: f64,
    /// Output filter capacitance (F).
    pub c_out: f64,
    /// Load resistance (Ω).
    pub r_load: f64,
}

impl Default for ConverterParams {
    fn default() -> Self {
        ConverterParams::table2()
    }
}

impl ConverterParams {
    /// Component values of the bench converter (85 kHz design).
    pub fn table2() -> Self {
        Self {
            l1: 73.4e-6,
            c1: 46.7e-9,
            cs1: 15.5e-9,
            cs2: 11.7e-9,
            r1_series: 50e-3,
            rp: 382e-3,
            rs: 394e-3,
            vin: 200.0,
            lp: 281.3e-6,
            ls: 278.3e-6,
            k: 0.3,
            vf: 0.7,
            c_out: 300e-6,
            r_load: 44.77,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("L1", self.l1),
            ("C1", self.c1),
            ("Cs1", self.cs1),
            ("Cs2", self.cs2),
            ("Lp", self.lp),
            ("Ls", self.ls),
            ("Cout", self.c_out),
            ("Rload", self.r_load),
        ];
        for (name, v) in positive {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::InvalidParameter(format!(
                    "{name} must be strictly positive, got {v}"
                )));
            }
        }
        let nonneg = [
            ("Vin", self.vin),
            ("R1", self.r1_series),
            ("rp", self.rp),
            ("rs", self.rs),
            ("VF", self.vf),
        ];
        for (name, v) in nonneg {
            if !(v >= 0.0) || !v.is_finite() {
                return Err(Error::InvalidParameter(format!(
                    "{name} must be non-negative, got {v}"
                )));
            }
        }
        if !(0.0..1.0).contains(&self.k) {
            return Err(Error::InvalidParameter(format!(
                "coupling coefficient must satisfy 0 <= k < 1, got {}",
                self.k
            )));
        }
        Ok(())
    }
}

/// Coupling quantities derived from the raw components via the two-winding
/// T-model: `M = k*sqrt(Lp*Ls)`, leakage inductances `Lp' = Lp - M`,
/// `Ls' = Ls - M`, and `Leq = Lp'*Ls' + M*(Lp' + Ls')`, the determinant of
/// the inductance matrix `[[Lp'+M, M], [M, Ls'+M]]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DerivedParams {
    pub m: f64,
    pub lp_prime: f64,
    pub ls_prime: f64,
    pub l_eq: f64,
}

pub fn derive_params(raw: &ConverterParams) -> Result<DerivedParams> {
    raw.validate()?;
    let m = raw.k * (raw.lp * raw.ls).sqrt();
    let lp_prime = raw.lp - m;
    let ls_prime = raw.ls - m;
    let l_eq = lp_prime * ls_prime + m * (lp_prime + ls_prime);
    if raw.k > 0.0 && (lp_prime <= 0.0 || ls_prime <= 0.0 || l_eq <= 0.0) {
        return Err(Error::NonPhysicalCoupling(format!(
            "M = {m:.4e} H yields Lp' = {lp_prime:.4e}, Ls' = {ls_prime:.4e}, Leq = {l_eq:.4e}"
        )));
    }
    if l_eq <= 0.0 {
        return Err(Error::NonPhysicalCoupling(format!("Leq = {l_eq:.4e} <= 0")));
    }
    Ok(DerivedParams {
        m,
        lp_prime,
        ls_prime,
        l_eq,
    })
}
