//! Quasi-phase-matching design for type-0 SPDC.
//!
//! Sign convention: Δk = k_p − k_s − k_i − 2πm/Λ. Spectral arguments are
//! angular frequencies in rad/fs; propagation constants are in rad/µm.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::dispersion::DispersionCurve;
use crate::error::{Error, Result};
use crate::units::{nm_from_omega, omega_from_nm, thz_from_omega};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QpmDesign {
    pub period_um: f64,
    pub order: u32,
    pub length_mm: f64,
    pub duty: f64,
    pub pump_nm: f64,
}

impl QpmDesign {
    pub fn validate(&self) -> Result<()> {
        if !(self.period_um > 0.0 && self.period_um.is_finite()) {
            return Err(Error::InvalidInput(format!("poling period must be positive, got {}", self.period_um)));
        }
        if self.order == 0 {
            return Err(Error::InvalidInput("QPM order must be at least 1".into()));
        }
        if !(self.length_mm > 0.0 && self.length_mm.is_finite()) {
            return Err(Error::InvalidInput(format!("device length must be positive, got {}", self.length_mm)));
        }
        if !(self.duty > 0.0 && self.duty < 1.0) {
            return Err(Error::InvalidInput(format!("duty cycle must lie in (0, 1), got {}", self.duty)));
        }
        if !(self.pump_nm > 0.0 && self.pump_nm.is_finite()) {
            return Err(Error::InvalidInput(format!("pump wavelength must be positive, got {}", self.pump_nm)));
        }
        Ok(())
    }

    /// Grating vector 2πm/Λ in rad/µm.
    pub fn grating_k(&self) -> f64 {
        2.0 * PI * self.order as f64 / self.period_um
    }

    pub fn length_um(&self) -> f64 {
        self.length_mm * 1e3
    }

    pub fn pump_omega(&self) -> f64 {
        omega_from_nm(self.pump_nm)
    }
}

/// Dispersion of the three interacting modes. For type-0 degenerate
/// designs signal and idler share one curve.
#[derive(Debug, Clone, Copy)]
pub struct QpmCurves<'a> {
    pub pump: &'a DispersionCurve,
    pub signal: &'a DispersionCurve,
    pub idler: &'a DispersionCurve,
}

impl<'a> QpmCurves<'a> {
    /// Pump and a shared signal/idler curve.
    pub fn type0(pump: &'a DispersionCurve, signal_idler: &'a DispersionCurve) -> Self {
        Self {
            pump,
            signal: signal_idler,
            idler: signal_idler,
        }
    }

    /// One curve for all three modes.
    pub fn single(curve: &'a DispersionCurve) -> Self {
        Self::type0(curve, curve)
    }

    /// k_p(ω_s + ω_i) − k_s(ω_s) − k_i(ω_i) in rad/µm, before the grating.
    pub fn material_mismatch(&self, omega_s: f64, omega_i: f64) -> Result<f64> {
        let kp = self.pump.k_at_omega(omega_s + omega_i)?;
        let ks = self.signal.k_at_omega(omega_s)?;
        let ki = self.idler.k_at_omega(omega_i)?;
        Ok(kp - (ks + ki))
    }
}

/// Idler wavelength fixed by energy conservation, nm.
pub fn idler_wavelength_nm(pump_nm: f64, signal_nm: f64) -> Result<f64> {
    let inv = 1.0 / pump_nm - 1.0 / signal_nm;
    if !(pump_nm > 0.0 && signal_nm > pump_nm && inv > 0.0) {
        return Err(Error::InvalidInput(format!(
            "signal {signal_nm} nm must be longer than pump {pump_nm} nm"
        )));
    }
    Ok(1.0 / inv)
}

/// Poling period Λ = 2πm / (k_p − k_s − k_i) in µm.
pub fn solve_poling_period(curves: &QpmCurves<'_>, pump_nm: f64, signal_nm: f64, order: u32) -> Result<f64> {
    if order == 0 {
        return Err(Error::InvalidInput("QPM order must be at least 1".into()));
    }
    idler_wavelength_nm(pump_nm, signal_nm)?;
    let wp = omega_from_nm(pump_nm);
    let ws = omega_from_nm(signal_nm);
    let denominator = curves.material_mismatch(ws, wp - ws)?;
    if !(denominator > 0.0) {
        return Err(Error::NonPositiveMismatch { denominator });
    }
    Ok(order as f64 * (2.0 * PI / denominator))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhaseMismatch {
    pub signal_nm: f64,
    pub idler_nm: f64,
    /// rad/m
    pub delta_k: f64,
    /// ΔkL/2π
    pub normalized: f64,
}

/// Δk at a given signal frequency, idler from energy conservation.
pub fn phase_mismatch_omega(design: &QpmDesign, curves: &QpmCurves<'_>, omega_s: f64) -> Result<f64> {
    let wp = design.pump_omega();
    if std::ptr::eq(curves.signal, curves.idler) {
        return phase_mismatch_detuning(design, curves, omega_s - 0.5 * wp);
    }
    Ok(curves.material_mismatch(omega_s, wp - omega_s)? - design.grating_k())
}

/// Δk at signal detuning Ω from ω_p/2. With a shared signal/idler curve the
/// result depends on |Ω| only, so exchanging signal and idler is exact.
pub fn phase_mismatch_detuning(design: &QpmDesign, curves: &QpmCurves<'_>, detuning: f64) -> Result<f64> {
    let centre = 0.5 * design.pump_omega();
    let (ws, wi) = if std::ptr::eq(curves.signal, curves.idler) {
        let d = detuning.abs();
        (centre + d, centre - d)
    } else {
        (centre + detuning, centre - detuning)
    };
    Ok(curves.material_mismatch(ws, wi)? - design.grating_k())
}

pub fn phase_mismatch(design: &QpmDesign, curves: &QpmCurves<'_>, signal_nm: f64) -> Result<PhaseMismatch> {
    design.validate()?;
    let idler_nm = idler_wavelength_nm(design.pump_nm, signal_nm)?;
    let dk = phase_mismatch_omega(design, curves, omega_from_nm(signal_nm))?;
    Ok(PhaseMismatch {
        signal_nm,
        idler_nm,
        delta_k: dk * 1e6,
        normalized: dk * design.length_um() / (2.0 * PI),
    })
}

/// Span between the first sinc nulls on either side of degeneracy.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhaseMatchingBandwidth {
    /// Signal wavelengths of the two nulls, short then long.
    pub null_short_nm: f64,
    pub null_long_nm: f64,
    pub width_thz: f64,
    pub width_nm: f64,
    /// ΔkL/2π at degeneracy.
    pub center_normalized: f64,
}

/// Scans signal detuning outward from degeneracy until |ΔkL/2π| reaches 1
/// on each side, then refines by bisection.
pub fn phase_matching_bandwidth(design: &QpmDesign, curves: &QpmCurves<'_>) -> Result<PhaseMatchingBandwidth> {
    design.validate()?;
    let wp = design.pump_omega();
    let centre = 0.5 * wp;
    let norm = |detune: f64| -> Result<f64> {
        Ok(phase_mismatch_detuning(design, curves, detune)? * design.length_um() / (2.0 * PI))
    };
    let x0 = norm(0.0)?;
    if x0.abs() >= 1.0 {
        return Err(Error::InvalidInput(format!(
            "degeneracy lies outside the main phase-matching lobe (ΔkL/2π = {x0:.3})"
        )));
    }
    let limit = detuning_limit(curves, wp);
    let step = 1e-4;
    let mut nulls = [0.0; 2];
    for (slot, sign) in [-1.0f64, 1.0].into_iter().enumerate() {
        let mut lo = 0.0;
        let mut hi = step;
        loop {
            if hi > limit {
                return Err(Error::InvalidInput(
                    "no sinc null within the dispersion curve range; widen the curve".into(),
                ));
            }
            if norm(sign * hi)?.abs() >= 1.0 {
                break;
            }
            lo = hi;
            hi += step;
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if hi - lo <= 1e-15 * centre {
                break;
            }
            if norm(sign * mid)?.abs() >= 1.0 {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        nulls[slot] = sign * 0.5 * (lo + hi);
    }
    let (w_lo, w_hi) = (centre + nulls[0], centre + nulls[1]);
    let null_long_nm = nm_from_omega(w_lo);
    let null_short_nm = nm_from_omega(w_hi);
    Ok(PhaseMatchingBandwidth {
        null_short_nm,
        null_long_nm,
        width_thz: thz_from_omega(w_hi - w_lo),
        width_nm: null_long_nm - null_short_nm,
        center_normalized: x0,
    })
}

/// Largest detuning keeping signal, idler and pump inside their curves.
fn detuning_limit(curves: &QpmCurves<'_>, wp: f64) -> f64 {
    let centre = 0.5 * wp;
    let mut limit = f64::INFINITY;
    for c in [curves.signal, curves.idler] {
        let (lo, hi) = c.omega_range();
        limit = limit.min(centre - lo).min(hi - centre);
    }
    limit.max(0.0)
}

/// First-order Fourier weight of a rectangular poling pattern,
/// |sin(mπD)|; equals 1 at D = 0.5, m = 1.
pub fn qpm_efficiency_factor(duty: f64, order: u32) -> Result<f64> {
    if !(duty > 0.0 && duty < 1.0) {
        return Err(Error::InvalidInput(format!("duty cycle must lie in (0, 1), got {duty}")));
    }
    if order == 0 {
        return Err(Error::InvalidInput("QPM order must be at least 1".into()));
    }
    Ok((order as f64 * PI * duty).sin().abs())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn synthetic() -> DispersionCurve {
        // Normal dispersion with a little curvature, loosely LN-like.
        DispersionCurve::from_fn(0.7, 2.0, 131, |l| 1.85 + 0.05 / (l * l) + 0.01 * l).unwrap()
    }

    #[test]
    fn idler_from_energy_conservation() {
        assert!((idler_wavelength_nm(810.0, 1620.0).unwrap() - 1620.0).abs() < 1e-9);
        assert!((idler_wavelength_nm(810.0, 1500.0).unwrap() - 1.0 / (1.0 / 810.0 - 1.0 / 1500.0)).abs() < 1e-9);
        assert!(idler_wavelength_nm(810.0, 800.0).is_err());
    }

    #[test]
    fn dispersionless_needs_no_grating() {
        let flat = DispersionCurve::from_fn(0.7, 2.0, 20, |_| 2.0).unwrap();
        let c = QpmCurves::single(&flat);
        let err = solve_poling_period(&c, 810.0, 1620.0, 1).unwrap_err();
        assert!(matches!(err, Error::NonPositiveMismatch { .. }));
    }

    #[test]
    fn period_scales_with_order() {
        let s = synthetic();
        let c = QpmCurves::single(&s);
        let p1 = solve_poling_period(&c, 810.0, 1620.0, 1).unwrap();
        let p3 = solve_poling_period(&c, 810.0, 1620.0, 3).unwrap();
        assert_eq!(p3, 3.0 * p1);
    }

    #[test]
    fn designed_period_phase_matches() {
        let s = synthetic();
        let c = QpmCurves::single(&s);
        let period = solve_poling_period(&c, 810.0, 1620.0, 1).unwrap();
        let d = QpmDesign { period_um: period, order: 1, length_mm: 5.7, duty: 0.5, pump_nm: 810.0 };
        assert!(phase_mismatch(&d, &c, 1620.0).unwrap().normalized.abs() < 1e-9);
    }

    #[test]
    fn duty_factor() {
        assert!((qpm_efficiency_factor(0.5, 1).unwrap() - 1.0).abs() < 1e-15);
        assert!(qpm_efficiency_factor(1e-9, 1).unwrap() < 1e-8);
        let a = qpm_efficiency_factor(0.38, 1).unwrap();
        let b = qpm_efficiency_factor(0.62, 1).unwrap();
        assert!((a - b).abs() < 1e-15);
        assert!(qpm_efficiency_factor(0.0, 1).is_err());
        assert!(qpm_efficiency_factor(0.5, 2).unwrap() < 1e-15);
    }

    #[test]
    fn nulls_sit_at_unit_normalized_mismatch() {
        let s = synthetic();
        let c = QpmCurves::single(&s);
        let period = solve_poling_period(&c, 810.0, 1620.0, 1).unwrap();
        let d = QpmDesign { period_um: period, order: 1, length_mm: 5.7, duty: 0.5, pump_nm: 810.0 };
        let bw = phase_matching_bandwidth(&d, &c).unwrap();
        for l in [bw.null_short_nm, bw.null_long_nm] {
            let x = phase_mismatch(&d, &c, l).unwrap().normalized;
            assert!((x.abs() - 1.0).abs() < 1e-6, "{x}");
        }
        assert!(bw.width_thz > 0.0 && bw.null_short_nm < 1620.0 && bw.null_long_nm > 1620.0);
    }
}
