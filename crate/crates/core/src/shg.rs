//! Normalized second-harmonic conversion efficiency of a QPM waveguide.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectra::sinc;
use crate::units::{C_M_PER_S, EPSILON_0};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ShgModelInput {
    pub d33_pm_per_v: f64,
    pub n_omega: f64,
    pub n_2omega: f64,
    pub lambda_2omega_nm: f64,
    pub a_eff_um2: f64,
    pub zeta: f64,
    /// rad/m
    #[serde(default)]
    pub delta_k_per_m: f64,
    pub length_cm: f64,
}

impl ShgModelInput {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("d33", self.d33_pm_per_v),
            ("n_omega", self.n_omega),
            ("n_2omega", self.n_2omega),
            ("lambda_2omega", self.lambda_2omega_nm),
            ("a_eff", self.a_eff_um2),
            ("zeta", self.zeta),
            ("length", self.length_cm),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidInput(format!("{name} must be positive, got {v}")));
            }
        }
        if self.zeta > 1.0 {
            return Err(Error::InvalidInput(format!("overlap factor must not exceed 1, got {}", self.zeta)));
        }
        if !self.delta_k_per_m.is_finite() {
            return Err(Error::InvalidInput("phase mismatch must be finite".into()));
        }
        Ok(())
    }

    /// Prefactor at Δk = 0 in %/W/cm².
    pub fn peak_efficiency(&self) -> f64 {
        let d = self.d33_pm_per_v * 1e-12;
        let lam = self.lambda_2omega_nm * 1e-9;
        let area = self.a_eff_um2 * 1e-12;
        let per_w_m2 = 8.0 * d * d / (EPSILON_0 * C_M_PER_S * self.n_omega.powi(2) * self.n_2omega * lam * lam)
            * self.zeta.powi(2)
            / area;
        per_w_m2 * 1e-4 * 100.0
    }
}

/// η in %/W/cm², including the sinc² phase-mismatch penalty.
pub fn shg_efficiency(input: &ShgModelInput) -> Result<f64> {
    input.validate()?;
    let half = 0.5 * input.delta_k_per_m * input.length_cm * 1e-2;
    let s = sinc(half);
    Ok(input.peak_efficiency() * s * s)
}

/// η = P_2ω / (L² P_ω²) in %/W/cm².
pub fn shg_efficiency_from_power(p_omega_w: f64, p_2omega_w: f64, length_cm: f64) -> Result<f64> {
    if !(p_omega_w > 0.0 && length_cm > 0.0 && p_2omega_w >= 0.0) {
        return Err(Error::InvalidInput(format!(
            "need positive pump power and length and non-negative SH power, got {p_omega_w} W, {p_2omega_w} W, {length_cm} cm"
        )));
    }
    Ok(p_2omega_w / (length_cm * length_cm * p_omega_w * p_omega_w) * 100.0)
}
