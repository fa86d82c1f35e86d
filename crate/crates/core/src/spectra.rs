//! Two-photon spectra of degenerate type-0 SPDC: joint spectral intensity,
//! marginal signal spectrum and their −3 dB bandwidths.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::qpm::{phase_matching_bandwidth, QpmCurves, QpmDesign};
use crate::units::{nm_from_omega, omega_from_nm, omega_from_thz, thz_from_omega};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum PumpShape {
    #[default]
    Gaussian,
    Lorentzian,
}

/// Pump power spectrum; `fwhm_nm` is the intensity full width.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PumpEnvelope {
    pub center_nm: f64,
    pub fwhm_nm: f64,
    #[serde(default)]
    pub shape: PumpShape,
}

impl PumpEnvelope {
    pub fn validate(&self) -> Result<()> {
        if !(self.center_nm > 0.0 && self.fwhm_nm > 0.0 && self.fwhm_nm < self.center_nm) {
            return Err(Error::InvalidInput(format!(
                "pump needs a positive centre and bandwidth, got {} nm / {} nm",
                self.center_nm, self.fwhm_nm
            )));
        }
        Ok(())
    }

    pub fn center_omega(&self) -> f64 {
        omega_from_nm(self.center_nm)
    }

    /// FWHM in rad/fs.
    pub fn fwhm_omega(&self) -> f64 {
        omega_from_nm(self.center_nm - 0.5 * self.fwhm_nm) - omega_from_nm(self.center_nm + 0.5 * self.fwhm_nm)
    }

    /// Unit-peak spectral intensity at angular frequency `omega`.
    pub fn intensity(&self, omega: f64) -> f64 {
        let x = (omega - self.center_omega()) / self.fwhm_omega();
        match self.shape {
            PumpShape::Gaussian => (-4.0 * std::f64::consts::LN_2 * x * x).exp(),
            PumpShape::Lorentzian => 1.0 / (1.0 + 4.0 * x * x),
        }
    }
}

/// Square frequency grid centred on degeneracy.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JsiGridSpec {
    /// Points per axis.
    pub points: usize,
    /// Half span of each axis around ω_p/2, THz. `None` picks 1.5× the
    /// sinc-null half width.
    #[serde(default)]
    pub half_span_thz: Option<f64>,
}

impl Default for JsiGridSpec {
    fn default() -> Self {
        Self {
            points: 401,
            half_span_thz: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JsiGrid {
    /// Shared by signal and idler, THz, ascending.
    pub frequency_thz: Vec<f64>,
    /// Row-major, row = signal, column = idler; unit peak.
    pub intensity: Vec<f64>,
    pub design: QpmDesign,
    pub pump: PumpEnvelope,
}

impl JsiGrid {
    pub fn len(&self) -> usize {
        self.frequency_thz.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frequency_thz.is_empty()
    }

    pub fn at(&self, signal: usize, idler: usize) -> f64 {
        self.intensity[signal * self.len() + idler]
    }

    /// Largest intensity in each signal row: the profile along the
    /// energy-conserving ridge.
    pub fn ridge_profile(&self) -> Vec<f64> {
        self.intensity
            .chunks(self.len())
            .map(|row| row.iter().copied().fold(0.0, f64::max))
            .collect()
    }

    /// −3 dB extent of the ridge in signal frequency, THz.
    pub fn bandwidth_thz(&self) -> Result<f64> {
        let (lo, hi) = half_max_points(&self.frequency_thz, &self.ridge_profile())?;
        Ok(hi - lo)
    }
}

/// sin(x)/x with the removable singularity filled in.
pub fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-8 {
        1.0 - x * x / 6.0
    } else {
        x.sin() / x
    }
}

/// Joint spectral intensity |α(ω_s + ω_i)|² sinc²(ΔkL/2), unit peak.
pub fn jsi(design: &QpmDesign, curves: &QpmCurves<'_>, pump: &PumpEnvelope, grid: &JsiGridSpec) -> Result<JsiGrid> {
    design.validate()?;
    pump.validate()?;
    if grid.points < 3 {
        return Err(Error::InvalidInput("JSI grid needs at least 3 points per axis".into()));
    }
    let centre = 0.5 * pump.center_omega();
    let half_span = match grid.half_span_thz {
        Some(v) if v > 0.0 => omega_from_thz(v),
        Some(v) => return Err(Error::InvalidInput(format!("JSI half span must be positive, got {v}"))),
        None => {
            let mut d = *design;
            d.pump_nm = pump.center_nm;
            1.5 * omega_from_thz(0.5 * phase_matching_bandwidth(&d, curves)?.width_thz)
        }
    };
    for c in [curves.signal, curves.idler] {
        let (lo, hi) = c.omega_range();
        if centre - half_span < lo || centre + half_span > hi {
            return Err(Error::InvalidInput(format!(
                "JSI grid {:.1}–{:.1} nm leaves the dispersion curve range",
                nm_from_omega(centre + half_span),
                nm_from_omega(centre - half_span)
            )));
        }
    }
    let n = grid.points;
    let omega: Vec<f64> = (0..n)
        .map(|k| centre - half_span + 2.0 * half_span * k as f64 / (n - 1) as f64)
        .collect();
    let half_l = 0.5 * design.length_um();
    let kg = design.grating_k();
    let rows: Vec<Vec<f64>> = omega
        .par_iter()
        .map(|&ws| {
            omega
                .iter()
                .map(|&wi| {
                    let dk = curves.material_mismatch(ws, wi)? - kg;
                    let s = sinc(dk * half_l);
                    Ok(pump.intensity(ws + wi) * s * s)
                })
                .collect::<Result<Vec<f64>>>()
        })
        .collect::<Result<_>>()?;
    let mut intensity: Vec<f64> = rows.into_iter().flatten().collect();
    let peak = intensity.iter().copied().fold(0.0, f64::max);
    if !(peak > 0.0) {
        return Err(Error::Numerical("JSI vanishes on the whole grid".into()));
    }
    intensity.iter_mut().for_each(|v| *v /= peak);
    Ok(JsiGrid {
        frequency_thz: omega.iter().map(|&w| thz_from_omega(w)).collect(),
        intensity,
        design: *design,
        pump: *pump,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarginalSpectrum {
    pub frequency_thz: Vec<f64>,
    pub wavelength_nm: Vec<f64>,
    /// Unit peak.
    pub intensity: Vec<f64>,
    /// Full −3 dB width, THz.
    pub fwhm_thz: f64,
    pub half_bandwidth_thz: f64,
    pub half_bandwidth_nm: f64,
}

/// Signal spectrum: the JSI summed over the idler axis.
pub fn marginal_signal_spectrum(jsi: &JsiGrid) -> Result<MarginalSpectrum> {
    let n = jsi.len();
    if n == 0 || jsi.intensity.len() != n * n {
        return Err(Error::InvalidInput("malformed JSI grid".into()));
    }
    let mut intensity: Vec<f64> = jsi.intensity.chunks(n).map(|r| r.iter().sum()).collect();
    let peak = intensity.iter().copied().fold(0.0, f64::max);
    if !(peak > 0.0) {
        return Err(Error::DegenerateField);
    }
    intensity.iter_mut().for_each(|v| *v /= peak);
    let (lo, hi) = half_max_points(&jsi.frequency_thz, &intensity)?;
    let to_nm = |thz: f64| nm_from_omega(omega_from_thz(thz));
    Ok(MarginalSpectrum {
        wavelength_nm: jsi.frequency_thz.iter().map(|&f| to_nm(f)).collect(),
        frequency_thz: jsi.frequency_thz.clone(),
        intensity,
        fwhm_thz: hi - lo,
        half_bandwidth_thz: 0.5 * (hi - lo),
        half_bandwidth_nm: 0.5 * (to_nm(lo) - to_nm(hi)),
    })
}

/// Two-photon bandwidth from the signal-side half bandwidth.
pub fn spdc_total_bandwidth(signal_half_bandwidth_thz: f64) -> Result<f64> {
    if !(signal_half_bandwidth_thz >= 0.0) {
        return Err(Error::InvalidInput(format!(
            "bandwidth must be non-negative, got {signal_half_bandwidth_thz}"
        )));
    }
    Ok(2.0 * signal_half_bandwidth_thz)
}

/// Outermost −3 dB crossings around the peak of a unit-peak profile,
/// linearly interpolated.
fn half_max_points(x: &[f64], y: &[f64]) -> Result<(f64, f64)> {
    let level = 0.5;
    let peak = y
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1).then(b.0.cmp(&a.0)))
        .map(|(i, _)| i)
        .ok_or_else(|| Error::InvalidInput("empty profile".into()))?;
    let top = y[peak];
    let target = level * top;
    let mut left = None;
    for i in (0..peak).rev() {
        if y[i] < target {
            left = Some(x[i] + (target - y[i]) / (y[i + 1] - y[i]) * (x[i + 1] - x[i]));
            break;
        }
    }
    let mut right = None;
    for i in peak + 1..y.len() {
        if y[i] < target {
            right = Some(x[i - 1] + (y[i - 1] - target) / (y[i - 1] - y[i]) * (x[i] - x[i - 1]));
            break;
        }
    }
    match (left, right) {
        (Some(l), Some(r)) => Ok((l, r)),
        _ => Err(Error::InvalidInput(
            "spectrum does not fall below −3 dB inside the grid; widen the span".into(),
        )),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn envelope_is_unit_peak_with_stated_width() {
        for shape in [PumpShape::Gaussian, PumpShape::Lorentzian] {
            let p = PumpEnvelope { center_nm: 810.6, fwhm_nm: 1.1, shape };
            let w0 = p.center_omega();
            assert!((p.intensity(w0) - 1.0).abs() < 1e-15);
            let half = 0.5 * p.fwhm_omega();
            assert!((p.intensity(w0 + half) - 0.5).abs() < 1e-12);
            assert!((p.intensity(w0 - half) - 0.5).abs() < 1e-12);
        }
    }

    #[test]
    fn half_max_of_triangle() {
        let x: Vec<f64> = (0..=20).map(|k| k as f64).collect();
        let y: Vec<f64> = x.iter().map(|v| 1.0 - (v - 10.0).abs() / 10.0).collect();
        let (l, r) = half_max_points(&x, &y).unwrap();
        assert!((l - 5.0).abs() < 1e-12 && (r - 15.0).abs() < 1e-12);
    }

    #[test]
    fn half_max_needs_both_edges() {
        let x = [0.0, 1.0, 2.0];
        assert!(half_max_points(&x, &[1.0, 0.9, 0.8]).is_err());
    }

    #[test]
    fn total_bandwidth_doubles() {
        assert_eq!(spdc_total_bandwidth(11.0).unwrap(), 22.0);
        assert_eq!(spdc_total_bandwidth(0.0).unwrap(), 0.0);
        assert_eq!(spdc_total_bandwidth(17.0).unwrap(), 34.0);
        assert!(spdc_total_bandwidth(-1.0).is_err());
    }

    #[test]
    fn sinc_values() {
        assert_eq!(sinc(0.0), 1.0);
        assert!(sinc(std::f64::consts::PI).abs() < 1e-15);
    }
}
