//! Run configuration: a TOML document with one table per pipeline stage.
//! Unknown keys are rejected everywhere so that typos never fall back to
//! defaults silently.

use std::path::{Path, PathBuf};

use lnspdc::coincidence::{AnalysisOptions, CarOptions, G2Convention, G2Options};
use lnspdc::dispersion::GvdMapSpec;
use lnspdc::qpm::QpmDesign;
use lnspdc::spectra::{JsiGridSpec, PumpEnvelope};
use lnspdc::tags::SourceConfig;
use lnspdc::{GridSpec, LayerMaterials, MaterialCatalog, ShgModelInput, WaveguideGeometry};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{CliError, CliResult};

/// Reference configuration matching the published device.
pub const PAPER_CONFIG: &str = include_str!("../paper.cfg");

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    /// Materials catalog, relative to the config file; bundled when absent.
    pub materials: Option<PathBuf>,
    pub geometry: Option<WaveguideGeometry>,
    pub grid: Option<GridSpec>,
    pub modes: Option<ModesSection>,
    pub curve: Option<CurveSection>,
    pub gvd: Option<GvdSection>,
    pub qpm: Option<QpmSection>,
    pub pump: Option<PumpEnvelope>,
    pub jsi: Option<JsiSection>,
    pub shg: Option<ShgSection>,
    pub source: Option<SourceConfig>,
    pub analysis: Option<AnalysisSection>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ModesSection {
    pub wavelengths_um: Vec<f64>,
    pub count: usize,
}

impl Default for ModesSection {
    fn default() -> Self {
        Self {
            wavelengths_um: vec![0.81, 1.62],
            count: 2,
        }
    }
}

/// Wavelength sampling of the TE dispersion curve feeding GVD, QPM, JSI
/// and SHG.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CurveSection {
    pub lambda_min_um: f64,
    pub lambda_max_um: f64,
    pub step_nm: f64,
    /// Solver grid for the curve; the top-level grid when absent.
    pub grid: Option<GridSpec>,
}

impl Default for CurveSection {
    fn default() -> Self {
        Self {
            lambda_min_um: 0.7,
            lambda_max_um: 2.0,
            step_nm: 10.0,
            grid: None,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GvdSection {
    pub wavelength_um: f64,
    /// [first, last, step] in nm.
    pub widths_nm: [f64; 3],
    /// [first, last, step] in nm.
    pub etch_depths_nm: [f64; 3],
    pub sample_step_nm: f64,
    pub half_samples: usize,
    /// Solver grid for the map cells.
    pub grid: GridSpec,
    /// k″ versus wavelength is tabulated over this range from the TE curve.
    pub profile_um: [f64; 2],
    pub profile_step_nm: f64,
}

impl Default for GvdSection {
    fn default() -> Self {
        Self {
            wavelength_um: 1.62,
            widths_nm: [1200.0, 2400.0, 25.0],
            etch_depths_nm: [100.0, 250.0, 5.0],
            sample_step_nm: 10.0,
            half_samples: 3,
            grid: GridSpec::with_core_step(40.0),
            profile_um: [1.2, 1.8],
            profile_step_nm: 10.0,
        }
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct QpmSection {
    pub pump_nm: f64,
    pub signal_nm: f64,
    pub order: u32,
    pub length_mm: f64,
    pub duty: f64,
    /// Fixed poling period; solved from the curves when absent.
    pub period_um: Option<f64>,
    /// Signal range of the tabulated phase mismatch; points whose idler
    /// leaves the curve are skipped.
    pub mismatch_range_nm: [f64; 2],
    pub mismatch_step_nm: f64,
}

impl Default for QpmSection {
    fn default() -> Self {
        Self {
            pump_nm: 810.0,
            signal_nm: 1620.0,
            order: 1,
            length_mm: 5.7,
            duty: 0.5,
            period_um: None,
            mismatch_range_nm: [1300.0, 2100.0],
            mismatch_step_nm: 2.0,
        }
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct JsiSection {
    pub points: usize,
    pub half_span_thz: Option<f64>,
    /// Pump wavelength at which the period is solved; the pump centre when
    /// absent. Ignored if the period is fixed.
    pub design_pump_nm: Option<f64>,
}

impl Default for JsiSection {
    fn default() -> Self {
        let g = JsiGridSpec::default();
        Self {
            points: g.points,
            half_span_thz: g.half_span_thz,
            design_pump_nm: None,
        }
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ShgSection {
    pub d33_pm_per_v: f64,
    pub n_omega: f64,
    pub n_2omega: f64,
    pub lambda_2omega_nm: f64,
    pub a_eff_um2: f64,
    pub zeta: f64,
    pub length_cm: f64,
    #[serde(default)]
    pub delta_k_per_m: f64,
    /// Measured fundamental and second-harmonic powers, in W.
    #[serde(default)]
    pub measured_powers_w: Option<[f64; 2]>,
    /// Half span of the tabulated sinc² response around the fundamental.
    #[serde(default = "default_sinc_half_span")]
    pub sinc_half_span_nm: f64,
    #[serde(default = "default_sinc_step")]
    pub sinc_step_nm: f64,
}

fn default_sinc_half_span() -> f64 {
    20.0
}

fn default_sinc_step() -> f64 {
    0.05
}

impl ShgSection {
    pub fn model(&self) -> ShgModelInput {
        ShgModelInput {
            d33_pm_per_v: self.d33_pm_per_v,
            n_omega: self.n_omega,
            n_2omega: self.n_2omega,
            lambda_2omega_nm: self.lambda_2omega_nm,
            a_eff_um2: self.a_eff_um2,
            zeta: self.zeta,
            delta_k_per_m: self.delta_k_per_m,
            length_cm: self.length_cm,
        }
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AnalysisSection {
    pub duration_s: Option<f64>,
    pub bin_ps: u64,
    pub span_ps: u64,
    pub window_ps: u64,
    pub floor_min_ps: u64,
    pub g2_window_ps: u64,
    pub g2_convention: G2Convention,
    pub resamples: usize,
    pub seed: u64,
    /// Pump power in the input fibre, for brightness.
    pub pump_power_mw: Option<f64>,
    /// Total fibre-chip-fibre loss; half is charged to the input facet.
    pub coupling_loss_db: Option<f64>,
}

impl Default for AnalysisSection {
    fn default() -> Self {
        let a = AnalysisOptions::default();
        Self {
            duration_s: a.duration_s,
            bin_ps: a.bin_ps,
            span_ps: a.span_ps,
            window_ps: a.car.window_ps,
            floor_min_ps: a.car.floor_min_ps,
            g2_window_ps: a.g2.window_ps,
            g2_convention: a.g2.convention,
            resamples: a.g2.resamples,
            seed: a.g2.seed,
            pump_power_mw: None,
            coupling_loss_db: None,
        }
    }
}

impl AnalysisSection {
    pub fn options(&self) -> AnalysisOptions {
        AnalysisOptions {
            duration_s: self.duration_s,
            bin_ps: self.bin_ps,
            span_ps: self.span_ps,
            car: CarOptions {
                window_ps: self.window_ps,
                floor_min_ps: self.floor_min_ps,
            },
            g2: G2Options {
                window_ps: self.g2_window_ps,
                convention: self.g2_convention,
                resamples: self.resamples,
                seed: self.seed,
            },
        }
    }
}

/// A parsed config together with where it came from.
#[derive(Debug, Clone)]
pub struct LoadedConfig {
    pub config: Config,
    /// Directory that relative paths inside the config resolve against.
    pub base_dir: PathBuf,
    /// SHA-256 of the canonical form, independent of key order, comments
    /// and formatting.
    pub hash: String,
    pub origin: String,
}

impl LoadedConfig {
    pub fn parse(text: &str, base_dir: PathBuf, origin: String) -> CliResult<Self> {
        let config: Config = toml::from_str(text).map_err(|e| CliError::Config(format!("{origin}: {e}")))?;
        Ok(Self {
            config,
            base_dir,
            hash: canonical_hash(text)?,
            origin,
        })
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Self::parse(&text, base, path.display().to_string())
    }

    pub fn bundled() -> Self {
        Self::parse(PAPER_CONFIG, PathBuf::from("."), "<bundled paper.cfg>".into())
            .expect("bundled config is valid")
    }

    pub fn materials(&self, override_path: Option<&Path>) -> CliResult<LayerMaterials> {
        let path = match (override_path, &self.config.materials) {
            (Some(p), _) => Some(p.to_path_buf()),
            (None, Some(p)) => Some(self.base_dir.join(p)),
            (None, None) => None,
        };
        let catalog = match path {
            Some(p) => MaterialCatalog::load(&p).map_err(|e| CliError::Config(format!("{}: {e}", p.display())))?,
            None => MaterialCatalog::bundled(),
        };
        Ok(catalog.stack()?)
    }

    pub fn geometry(&self) -> CliResult<WaveguideGeometry> {
        let g = self.require(self.config.geometry, "geometry")?;
        g.validate()?;
        Ok(g)
    }

    pub fn grid(&self) -> GridSpec {
        self.config.grid.unwrap_or_default()
    }

    pub fn curve(&self) -> CurveSection {
        self.config.curve.unwrap_or_default()
    }

    pub fn curve_grid(&self) -> GridSpec {
        self.curve().grid.unwrap_or_else(|| self.grid())
    }

    pub fn qpm(&self) -> QpmSection {
        self.config.qpm.unwrap_or_default()
    }

    pub fn pump(&self) -> CliResult<PumpEnvelope> {
        self.require(self.config.pump, "pump")
    }

    pub fn shg(&self) -> CliResult<ShgSection> {
        self.require(self.config.shg, "shg")
    }

    pub fn source(&self) -> CliResult<SourceConfig> {
        self.require(self.config.source, "source")
    }

    pub fn analysis(&self) -> AnalysisSection {
        self.config.analysis.unwrap_or_default()
    }

    pub fn gvd_spec(&self) -> CliResult<GvdMapSpec> {
        let s = self.config.gvd.clone().unwrap_or_default();
        let spec = GvdMapSpec::from_ranges(
            self.geometry()?,
            (s.widths_nm[0], s.widths_nm[1], s.widths_nm[2]),
            (s.etch_depths_nm[0], s.etch_depths_nm[1], s.etch_depths_nm[2]),
            s.wavelength_um,
        )?;
        Ok(GvdMapSpec {
            sample_step_nm: s.sample_step_nm,
            half_samples: s.half_samples,
            grid: s.grid,
            ..spec
        })
    }

    /// The QPM design with a known period.
    pub fn design(&self, period_um: f64) -> QpmDesign {
        let q = self.qpm();
        QpmDesign {
            period_um,
            order: q.order,
            length_mm: q.length_mm,
            duty: q.duty,
            pump_nm: q.pump_nm,
        }
    }

    fn require<T: Copy>(&self, v: Option<T>, section: &str) -> CliResult<T> {
        v.ok_or_else(|| CliError::Config(format!("{}: missing [{section}] section", self.origin)))
    }
}

/// Hash of the document re-serialized with sorted keys.
pub fn canonical_hash(text: &str) -> CliResult<String> {
    let value: toml::Value = toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
    let json = serde_json::to_string(&value)?;
    Ok(hex::encode(Sha256::digest(json.as_bytes())))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bundled_config_has_every_section() {
        let c = LoadedConfig::bundled();
        assert!(c.geometry().is_ok());
        assert!(c.pump().is_ok() && c.shg().is_ok() && c.source().is_ok());
        assert!(c.gvd_spec().is_ok());
    }

    #[test]
    fn hash_ignores_key_order_and_comments() {
        let a = "# x\n[pump]\ncenter_nm = 810.6\nfwhm_nm = 1.1\n";
        let b = "[pump]\nfwhm_nm = 1.1   # width\ncenter_nm = 810.6\n";
        assert_eq!(canonical_hash(a).unwrap(), canonical_hash(b).unwrap());
        let c = "[pump]\nfwhm_nm = 1.2\ncenter_nm = 810.6\n";
        assert_ne!(canonical_hash(a).unwrap(), canonical_hash(c).unwrap());
    }

    #[test]
    fn unknown_keys_are_rejected() {
        for text in [
            "[pump]\ncenter_nm = 810.6\nfwhm_nm = 1.1\nshape = \"gaussian\"\nwidht = 3\n",
            "[qpm]\nperiod = 4.5\n",
            "[unknown]\n",
            "[gvd.grid]\ncore_stp_nm = 20\n",
        ] {
            let e = LoadedConfig::parse(text, PathBuf::new(), "t".into()).unwrap_err();
            assert!(matches!(e, CliError::Config(_)), "{text}");
        }
    }
}
