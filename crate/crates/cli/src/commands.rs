//! Pipeline stages. Each stage stages its data files under a sub-directory
//! of the output and returns a JSON summary that is also written as a file.

use std::cell::OnceCell;
use std::path::{Path, PathBuf};

use lnspdc::coincidence::{analyze, CoincidenceReport};
use lnspdc::dispersion::{gvd, gvd_map, te_curve, DispersionCurve};
use lnspdc::mode::{leakage_margin_with, mode_overlap, solve_modes_with, ModeSolution, ModeSolver};
use lnspdc::qpm::{
    idler_wavelength_nm, phase_matching_bandwidth, phase_mismatch, qpm_efficiency_factor, solve_poling_period,
    QpmCurves, QpmDesign,
};
use lnspdc::shg::{shg_efficiency, shg_efficiency_from_power, ShgModelInput};
use lnspdc::spectra::{jsi, marginal_signal_spectrum, spdc_total_bandwidth, JsiGridSpec};
use lnspdc::tags::{simulate_tags, SourceConfig, TagStream};
use lnspdc::{GridSpec, LayerMaterials};
use serde::Serialize;
use serde_json::{json, Value};

use crate::artifacts::Artifacts;
use crate::config::LoadedConfig;
use crate::error::{CliError, CliResult};

fn num(v: f64) -> String {
    v.to_string()
}

/// Config plus lazily built shared inputs.
pub struct Session {
    pub config: LoadedConfig,
    pub materials: LayerMaterials,
    curve: OnceCell<DispersionCurve>,
}

impl Session {
    pub fn new(config: LoadedConfig, materials_override: Option<&Path>) -> CliResult<Self> {
        let materials = config.materials(materials_override)?;
        Ok(Self {
            config,
            materials,
            curve: OnceCell::new(),
        })
    }

    /// Fundamental TE dispersion of the configured cross-section.
    pub fn curve(&self) -> CliResult<&DispersionCurve> {
        if let Some(c) = self.curve.get() {
            return Ok(c);
        }
        let s = self.config.curve();
        let c = te_curve(
            &self.config.geometry()?,
            &self.materials,
            &self.config.curve_grid(),
            s.lambda_min_um,
            s.lambda_max_um,
            s.step_nm,
        )?;
        Ok(self.curve.get_or_init(|| c))
    }

    /// Configured period, or the one solved at `pump_nm`.
    fn period(&self, pump_nm: f64) -> CliResult<(f64, bool)> {
        let q = self.config.qpm();
        match q.period_um {
            Some(p) => Ok((p, true)),
            None => {
                let curves = QpmCurves::single(self.curve()?);
                let signal = q.signal_nm * pump_nm / q.pump_nm;
                Ok((solve_poling_period(&curves, pump_nm, signal, q.order)?, false))
            }
        }
    }
}

#[derive(Debug, Clone, Serialize)]
struct ModeRecord {
    wavelength_um: f64,
    index: usize,
    n_eff: f64,
    polarization: lnspdc::Polarization,
    te_fraction: f64,
    a_eff_um2: f64,
    guided: bool,
    edge_ratio: f64,
    field_csv: String,
    nx: usize,
    ny: usize,
    min_step_um: f64,
}

fn field_rows(m: &ModeSolution) -> impl Iterator<Item = [String; 3]> + '_ {
    let g = &m.field.grid;
    (0..g.ny()).flat_map(move |j| {
        (0..g.nx()).map(move |i| [num(g.x_um[i]), num(g.y_um[j]), num(m.field.values[g.idx(i, j)])])
    })
}

fn min_step(v: &[f64]) -> f64 {
    v.windows(2).map(|w| w[1] - w[0]).fold(f64::INFINITY, f64::min)
}

/// Eigenmodes at each configured wavelength on one shared grid, with
/// overlap and leakage diagnostics.
pub fn modes(
    s: &Session,
    out: &mut Artifacts,
    wavelengths_um: Option<Vec<f64>>,
    grid_nm: Option<f64>,
) -> CliResult<Value> {
    let section = s.config.config.modes.clone().unwrap_or_default();
    let wavelengths = wavelengths_um.unwrap_or(section.wavelengths_um);
    if wavelengths.is_empty() {
        return Err(CliError::Config("no wavelengths to solve".into()));
    }
    let grid = grid_nm.map(GridSpec::with_core_step).unwrap_or_else(|| s.config.grid());
    let geometry = s.config.geometry()?;
    let longest = wavelengths.iter().copied().fold(f64::MIN, f64::max);
    let solver = ModeSolver::new(&geometry, &s.materials, &grid, longest)?;
    let mut records = Vec::new();
    let mut diagnostics = Vec::new();
    let mut fundamentals = Vec::new();
    for &l in &wavelengths {
        let search = solve_modes_with(&solver, l, section.count.max(1))?;
        if let Some(d) = &search.diagnostic {
            diagnostics.push(d.clone());
        }
        let tag = format!("{:.0}nm", l * 1e3);
        for (k, m) in search.modes.iter().enumerate() {
            let name = format!("modes/field_{tag}_{k}.csv");
            out.add_csv(&name, &["x_um", "y_um", "field"], field_rows(m))?;
            records.push(ModeRecord {
                wavelength_um: l,
                index: k,
                n_eff: m.n_eff,
                polarization: m.polarization,
                te_fraction: m.te_fraction,
                a_eff_um2: m.a_eff_um2,
                guided: m.guided,
                edge_ratio: m.edge_ratio,
                field_csv: name,
                nx: m.field.grid.nx(),
                ny: m.field.grid.ny(),
                min_step_um: min_step(&m.field.grid.x_um).min(min_step(&m.field.grid.y_um)),
            });
        }
        fundamentals.push(search.fundamental_te().cloned());
    }
    let overlap = match (fundamentals.first(), fundamentals.get(1)) {
        (Some(Some(a)), Some(Some(b))) => Some(mode_overlap(a, b)?),
        _ => None,
    };
    let shortest = wavelengths.iter().copied().fold(f64::MAX, f64::min);
    let leakage = leakage_margin_with(&solver, shortest)?;
    let summary = json!({
        "geometry": geometry,
        "grid": grid,
        "modes": records,
        "overlap_first_two_te": overlap,
        "leakage": leakage,
        "diagnostics": diagnostics,
    });
    out.add_json("modes/summary.json", &summary)?;
    Ok(summary)
}

/// k″(w, h1) map with its zero contour, and k″(λ) along the TE curve.
pub fn sweep_gvd(s: &Session, out: &mut Artifacts) -> CliResult<Value> {
    let spec = s.config.gvd_spec()?;
    let map = gvd_map(&spec, &s.materials)?;
    let mut rows = Vec::new();
    for (r, &h) in map.etch_depths_nm.iter().enumerate() {
        for (c, &w) in map.widths_nm.iter().enumerate() {
            rows.push([num(w), num(h), map.get(r, c).map(num).unwrap_or_default()]);
        }
    }
    out.add_csv("gvd/gvd_map.csv", &["width_nm", "etch_depth_nm", "k2_fs2_per_mm"], rows)?;
    let crossings: Vec<Value> = map
        .etch_depths_nm
        .iter()
        .enumerate()
        .map(|(r, &h)| json!({ "etch_depth_nm": h, "zero_widths_nm": map.zero_crossings_in_row(r) }))
        .collect();
    let missing = map.values.iter().filter(|v| v.is_none()).count();
    out.add_json(
        "gvd/zero_contour.json",
        &json!({
            "wavelength_um": map.wavelength_um,
            "polylines_width_etch_nm": map.contour,
            "row_crossings": crossings,
        }),
    )?;

    let section = s.config.config.gvd.clone().unwrap_or_default();
    let curve = s.curve()?;
    let n = ((section.profile_um[1] - section.profile_um[0]) * 1e3 / section.profile_step_nm).round() as usize;
    let mut profile = Vec::with_capacity(n + 1);
    for k in 0..=n {
        let l = section.profile_um[0] + k as f64 * section.profile_step_nm * 1e-3;
        profile.push((l, gvd(curve, l)?));
    }
    out.add_csv(
        "gvd/gvd_vs_wavelength.csv",
        &["wavelength_um", "k2_fs2_per_mm"],
        profile.iter().map(|(l, v)| [num(*l), num(*v)]),
    )?;
    let max_abs = profile.iter().map(|p| p.1.abs()).fold(0.0, f64::max);
    let summary = json!({
        "wavelength_um": map.wavelength_um,
        "cells": map.values.len(),
        "missing_cells": missing,
        "contour_polylines": map.contour.len(),
        "row_crossings": crossings,
        "profile_range_um": section.profile_um,
        "profile_max_abs_k2_fs2_per_mm": max_abs,
        "k2_at_map_wavelength_fs2_per_mm": gvd(curve, map.wavelength_um)?,
    });
    out.add_json("gvd/summary.json", &summary)?;
    Ok(summary)
}

/// Poling period, phase-matching bandwidth and ΔkL/2π across the signal band.
pub fn qpm(s: &Session, out: &mut Artifacts) -> CliResult<Value> {
    let q = s.config.qpm();
    let curve = s.curve()?;
    let curves = QpmCurves::single(curve);
    let solved = solve_poling_period(&curves, q.pump_nm, q.signal_nm, q.order)?;
    let (period, fixed) = s.period(q.pump_nm)?;
    let design = s.config.design(period);
    design.validate()?;
    let bw = phase_matching_bandwidth(&design, &curves)?;
    let mut rows = Vec::new();
    let steps = ((q.mismatch_range_nm[1] - q.mismatch_range_nm[0]) / q.mismatch_step_nm).round() as usize;
    for k in 0..=steps {
        let ls = q.mismatch_range_nm[0] + k as f64 * q.mismatch_step_nm;
        match phase_mismatch(&design, &curves, ls) {
            Ok(p) => {
                let x = std::f64::consts::PI * p.normalized;
                let sinc = lnspdc::spectra::sinc(x);
                rows.push([num(p.signal_nm), num(p.idler_nm), num(p.delta_k), num(p.normalized), num(sinc * sinc)]);
            }
            Err(lnspdc::Error::OutOfRange { .. }) => {}
            Err(e) => return Err(e.into()),
        }
    }
    out.add_csv(
        "qpm/phase_mismatch.csv",
        &["signal_nm", "idler_nm", "delta_k_per_m", "delta_k_l_over_2pi", "sinc2"],
        rows,
    )?;
    let summary = json!({
        "design": design,
        "period_fixed_in_config": fixed,
        "solved_period_um": solved,
        "signal_nm": q.signal_nm,
        "idler_nm": idler_wavelength_nm(q.pump_nm, q.signal_nm)?,
        "efficiency_factor": qpm_efficiency_factor(design.duty, design.order)?,
        "bandwidth": bw,
        "k2_signal_fs2_per_mm": gvd(curve, q.signal_nm * 1e-3)?,
    });
    out.add_json("qpm/design.json", &summary)?;
    Ok(summary)
}

/// Joint spectral intensity, marginal signal spectrum and bandwidths.
pub fn jsi_stage(s: &Session, out: &mut Artifacts) -> CliResult<Value> {
    let pump = s.config.pump()?;
    let section = s.config.config.jsi.unwrap_or_default();
    let design_pump = section.design_pump_nm.unwrap_or(pump.center_nm);
    let (period, _) = s.period(design_pump)?;
    let design = QpmDesign {
        pump_nm: design_pump,
        ..s.config.design(period)
    };
    let curves = QpmCurves::single(s.curve()?);
    let grid = jsi(
        &design,
        &curves,
        &pump,
        &JsiGridSpec {
            points: section.points,
            half_span_thz: section.half_span_thz,
        },
    )?;
    let f = &grid.frequency_thz;
    let n = grid.len();
    out.add_csv(
        "jsi/jsi.csv",
        &["signal_thz", "idler_thz", "intensity"],
        (0..n).flat_map(|a| (0..n).map(move |b| (a, b))).map(|(a, b)| [num(f[a]), num(f[b]), num(grid.at(a, b))]),
    )?;
    let marginal = marginal_signal_spectrum(&grid)?;
    out.add_csv(
        "jsi/marginal_signal.csv",
        &["frequency_thz", "wavelength_nm", "intensity"],
        (0..n).map(|k| [num(f[k]), num(marginal.wavelength_nm[k]), num(marginal.intensity[k])]),
    )?;
    let summary = json!({
        "design": design,
        "pump": pump,
        "points": n,
        "half_span_thz": 0.5 * (f[n - 1] - f[0]),
        "peak": grid.intensity.iter().copied().fold(0.0, f64::max),
        "two_photon_bandwidth_thz": grid.bandwidth_thz()?,
        "marginal_fwhm_thz": marginal.fwhm_thz,
        "signal_half_bandwidth_thz": marginal.half_bandwidth_thz,
        "signal_half_bandwidth_nm": marginal.half_bandwidth_nm,
        "total_from_half_bandwidth_thz": spdc_total_bandwidth(marginal.half_bandwidth_thz)?,
    });
    out.add_json("jsi/summary.json", &summary)?;
    Ok(summary)
}

/// Normalized SHG efficiency and its sinc² response around the design.
pub fn shg(s: &Session, out: &mut Artifacts) -> CliResult<Value> {
    let sec = s.config.shg()?;
    let model = sec.model();
    let eta = shg_efficiency(&model)?;
    let measured = match sec.measured_powers_w {
        Some([p1, p2]) => Some(shg_efficiency_from_power(p1, p2, model.length_cm)?),
        None => None,
    };
    // Δk(λ) = k(λ/2) − 2k(λ), offset so the design wavelength is matched.
    let curve = s.curve()?;
    let center = 2.0 * model.lambda_2omega_nm;
    let mismatch = |l_nm: f64| -> lnspdc::Result<f64> {
        let l = l_nm * 1e-3;
        Ok((curve.k_at(0.5 * l)? - 2.0 * curve.k_at(l)?) * 1e6)
    };
    let k0 = mismatch(center)?;
    let steps = (2.0 * sec.sinc_half_span_nm / sec.sinc_step_nm).round() as usize;
    let mut rows = Vec::with_capacity(steps + 1);
    for k in 0..=steps {
        let l = center - sec.sinc_half_span_nm + k as f64 * sec.sinc_step_nm;
        let dk = mismatch(l)? - k0 + model.delta_k_per_m;
        let e = shg_efficiency(&ShgModelInput {
            delta_k_per_m: dk,
            ..model
        })?;
        rows.push([num(l), num(dk), num(e)]);
    }
    out.add_csv("shg/sinc.csv", &["fundamental_nm", "delta_k_per_m", "eta_pct_per_w_cm2"], rows)?;
    let summary = json!({
        "input": model,
        "eta_theory_pct_per_w_cm2": eta,
        "eta_peak_pct_per_w_cm2": model.peak_efficiency(),
        "eta_measured_pct_per_w_cm2": measured,
    });
    out.add_json("shg/shg.json", &summary)?;
    Ok(summary)
}

fn stream_summary(cfg: &SourceConfig, stream: &TagStream) -> Value {
    json!({
        "source": cfg,
        "records": stream.len(),
        "counts_per_channel": stream.counts_per_channel(),
    })
}

/// Synthetic tag file.
pub fn tags_simulate(cfg: &SourceConfig, out: &mut Artifacts, path: &Path) -> CliResult<(TagStream, Value)> {
    let stream = simulate_tags(cfg)?;
    out.add_with(path, |w| Ok(stream.write_to(w)?))?;
    let summary = stream_summary(cfg, &stream);
    let mut sidecar = path.as_os_str().to_owned();
    sidecar.push(".json");
    out.add_json(PathBuf::from(sidecar), &summary)?;
    Ok((stream, summary))
}

#[derive(Debug, Clone, Serialize)]
pub struct AnalysisReport {
    #[serde(flatten)]
    pub report: CoincidenceReport,
    /// PCR per mW of pump measured in the input fibre.
    pub brightness_fibre_hz_per_mw: Option<f64>,
    /// PCR per mW on chip, charging half the fibre-chip-fibre loss to the
    /// input facet.
    pub brightness_chip_hz_per_mw: Option<f64>,
}

/// Singles, CAR, PCR, g⁽²⁾ and brightness of a tag stream.
pub fn tags_analyze(
    s: Option<&Session>,
    stream: &TagStream,
    window_ps: Option<u64>,
    out: &mut Artifacts,
    report_path: &Path,
) -> CliResult<AnalysisReport> {
    let section = s.map(|s| s.config.analysis()).unwrap_or_default();
    let mut opts = section.options();
    if let Some(w) = window_ps {
        opts.car.window_ps = w;
    }
    let report = analyze(stream, &opts)?;
    let fibre = section.pump_power_mw.filter(|p| *p > 0.0).map(|p| report.pcr_hz / p);
    let chip = match (section.pump_power_mw, section.coupling_loss_db) {
        (Some(p), Some(db)) if p > 0.0 => Some(report.pcr_hz / (p * 10f64.powf(-0.5 * db / 10.0))),
        _ => None,
    };
    let h = &report.histogram;
    let mut hist = report_path.as_os_str().to_owned();
    hist.push(".histogram.csv");
    out.add_csv(
        PathBuf::from(hist),
        &["delay_ps", "counts"],
        h.bin_centers_ps().iter().zip(&h.counts).map(|(t, c)| [num(*t), c.to_string()]),
    )?;
    let full = AnalysisReport {
        report,
        brightness_fibre_hz_per_mw: fibre,
        brightness_chip_hz_per_mw: chip,
    };
    out.add_json(report_path, &full)?;
    Ok(full)
}

/// Every stage in sequence from the bundled or given config.
pub fn reproduce(s: &Session, out: &mut Artifacts, seed: Option<u64>) -> CliResult<Value> {
    let modes = modes(s, out, None, None)?;
    let gvd_summary = sweep_gvd(s, out)?;
    let qpm_summary = qpm(s, out)?;
    let jsi_summary = jsi_stage(s, out)?;
    let shg_summary = shg(s, out)?;
    let mut source = s.config.source()?;
    if let Some(seed) = seed {
        source.seed = seed;
    }
    let (stream, _) = tags_simulate(&source, out, Path::new("tags/stream.ttag"))?;
    let report = tags_analyze(Some(s), &stream, None, out, Path::new("tags/report.json"))?;
    let r = &report.report;
    let summary = json!({
        "n_eff": modes["modes"],
        "overlap": modes["overlap_first_two_te"],
        "leakage_margin": modes["leakage"]["margin"],
        "gvd": {
            "k2_at_1620_fs2_per_mm": gvd_summary["k2_at_map_wavelength_fs2_per_mm"],
            "profile_max_abs_k2_fs2_per_mm": gvd_summary["profile_max_abs_k2_fs2_per_mm"],
        },
        "period_um": qpm_summary["design"]["period_um"],
        "phase_matching_bandwidth_thz": qpm_summary["bandwidth"]["width_thz"],
        "two_photon_bandwidth_thz": jsi_summary["two_photon_bandwidth_thz"],
        "signal_half_bandwidth_thz": jsi_summary["signal_half_bandwidth_thz"],
        "shg_eta_pct_per_w_cm2": shg_summary["eta_theory_pct_per_w_cm2"],
        "pcr_hz": r.pcr_hz,
        "car": r.car.car,
        "car_sigma": r.car.sigma,
        "car_times_pcr_hz": r.car.car * r.pcr_hz,
        "g2": r.g2.map(|g| g.g2),
        "brightness_fibre_hz_per_mw": report.brightness_fibre_hz_per_mw,
        "brightness_chip_hz_per_mw": report.brightness_chip_hz_per_mw,
    });
    out.add_json("summary.json", &summary)?;
    Ok(summary)
}
