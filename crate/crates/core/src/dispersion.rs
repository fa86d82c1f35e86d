//! Dispersion curves n_eff(λ) of the fundamental TE mode and the group
//! velocity dispersion k″ derived from them.
//!
//! Samples are interpolated by a not-a-knot cubic spline in angular
//! frequency; all derivatives come from the spline.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{GridSpec, WaveguideGeometry};
use crate::material::LayerMaterials;
use crate::mode::ModeSolver;
use crate::spline::CubicSpline;
use crate::units::{omega_from_um, um_from_omega, C_UM_PER_FS};
use crate::Polarization;

/// Fewest samples a curve may hold.
pub const MIN_SAMPLES: usize = 7;

#[derive(Debug, Clone, PartialEq)]
pub struct DispersionCurve {
    wavelengths_um: Vec<f64>,
    n_eff: Vec<f64>,
    /// n_eff as a function of ω (rad/fs), knots ascending in ω.
    spline: CubicSpline,
}

impl DispersionCurve {
    /// `wavelengths_um` strictly increasing.
    pub fn new(wavelengths_um: Vec<f64>, n_eff: Vec<f64>) -> Result<Self> {
        if wavelengths_um.len() != n_eff.len() {
            return Err(Error::InvalidInput("wavelength and index sample counts differ".into()));
        }
        if wavelengths_um.len() < MIN_SAMPLES {
            return Err(Error::InvalidInput(format!(
                "a dispersion curve needs at least {MIN_SAMPLES} samples, got {}",
                wavelengths_um.len()
            )));
        }
        if wavelengths_um.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidInput("curve wavelengths must be strictly increasing".into()));
        }
        let omega: Vec<f64> = wavelengths_um.iter().rev().map(|&l| omega_from_um(l)).collect();
        let n_rev: Vec<f64> = n_eff.iter().rev().copied().collect();
        let spline = CubicSpline::not_a_knot(omega, n_rev)?;
        Ok(Self {
            wavelengths_um,
            n_eff,
            spline,
        })
    }

    /// Samples a closure on an even wavelength grid.
    pub fn from_fn(lo_um: f64, hi_um: f64, samples: usize, f: impl Fn(f64) -> f64) -> Result<Self> {
        let samples = samples.max(2);
        let l: Vec<f64> = (0..samples)
            .map(|k| lo_um + (hi_um - lo_um) * k as f64 / (samples - 1) as f64)
            .collect();
        let n = l.iter().map(|&v| f(v)).collect();
        Self::new(l, n)
    }

    pub fn wavelengths_um(&self) -> &[f64] {
        &self.wavelengths_um
    }

    pub fn n_eff_samples(&self) -> &[f64] {
        &self.n_eff
    }

    pub fn range_um(&self) -> (f64, f64) {
        (self.wavelengths_um[0], self.wavelengths_um[self.wavelengths_um.len() - 1])
    }

    /// ω range (rad/fs), ascending.
    pub fn omega_range(&self) -> (f64, f64) {
        self.spline.domain()
    }

    fn check_omega(&self, omega: f64) -> Result<()> {
        let (lo, hi) = self.omega_range();
        // Round-off from λ↔ω conversion at the end knots is tolerated.
        let tol = 1e-12 * hi;
        if omega < lo - tol || omega > hi + tol || !omega.is_finite() {
            let (a, b) = self.range_um();
            return Err(Error::OutOfRange {
                model: "dispersion curve".into(),
                wavelength_um: um_from_omega(omega),
                min_um: a,
                max_um: b,
            });
        }
        Ok(())
    }

    pub fn n_eff_at_omega(&self, omega: f64) -> Result<f64> {
        self.check_omega(omega)?;
        Ok(self.spline.eval(omega))
    }

    pub fn n_eff_at(&self, wavelength_um: f64) -> Result<f64> {
        self.n_eff_at_omega(omega_from_um(wavelength_um))
    }

    /// Propagation constant k = ω n/c in rad/µm.
    pub fn k_at_omega(&self, omega: f64) -> Result<f64> {
        Ok(omega * self.n_eff_at_omega(omega)? / C_UM_PER_FS)
    }

    pub fn k_at(&self, wavelength_um: f64) -> Result<f64> {
        self.k_at_omega(omega_from_um(wavelength_um))
    }

    /// k′ = dk/dω in fs/mm (inverse group velocity).
    pub fn k1_at_omega(&self, omega: f64) -> Result<f64> {
        self.check_omega(omega)?;
        let (n, dn, _) = self.spline.eval_derivs(omega);
        Ok((n + omega * dn) / C_UM_PER_FS * 1e3)
    }

    /// k″ = d²k/dω² in fs²/mm, without the edge-margin check of [`gvd`].
    pub fn k2_at_omega(&self, omega: f64) -> Result<f64> {
        self.check_omega(omega)?;
        let (_, dn, d2n) = self.spline.eval_derivs(omega);
        Ok((2.0 * dn + omega * d2n) / C_UM_PER_FS * 1e3)
    }
}

/// Group velocity dispersion k″ in fs²/mm at `wavelength_um`, which must
/// have at least two samples on either side.
pub fn gvd(curve: &DispersionCurve, wavelength_um: f64) -> Result<f64> {
    let l = curve.wavelengths_um();
    let n = l.len();
    let (lo, hi) = (l[2], l[n - 3]);
    if !(wavelength_um >= lo && wavelength_um <= hi) {
        return Err(Error::NearRangeEdge {
            wavelength_um,
            min_um: l[0],
            max_um: l[n - 1],
        });
    }
    curve.k2_at_omega(omega_from_um(wavelength_um))
}

/// Evenly spaced wavelengths from `lo_um` to `hi_um` inclusive with roughly
/// `step_nm` spacing.
pub fn wavelength_samples(lo_um: f64, hi_um: f64, step_nm: f64) -> Result<Vec<f64>> {
    if !(hi_um > lo_um && step_nm > 0.0) {
        return Err(Error::InvalidInput(format!(
            "bad sampling [{lo_um}, {hi_um}] µm step {step_nm} nm"
        )));
    }
    let count = ((hi_um - lo_um) / (step_nm * 1e-3)).round().max(1.0) as usize;
    Ok((0..=count)
        .map(|k| lo_um + (hi_um - lo_um) * k as f64 / count as f64)
        .collect())
}

/// Fundamental TE dispersion of one cross-section, solved on a single grid
/// sized for the longest wavelength so the samples vary smoothly.
pub fn sample_te_curve(solver: &ModeSolver, wavelengths_um: &[f64]) -> Result<DispersionCurve> {
    let mut n = Vec::with_capacity(wavelengths_um.len());
    // Walk from long to short wavelength, seeding each solve with the last
    // eigenvector.
    let mut seed: Option<Vec<f64>> = None;
    for &l in wavelengths_um.iter().rev() {
        let mut raw = solver.solve_family(l, Polarization::Te, 1, seed.as_deref())?;
        let mode = raw.remove(0);
        n.push(mode.n_eff);
        seed = Some(mode.interior);
    }
    n.reverse();
    DispersionCurve::new(wavelengths_um.to_vec(), n)
}

/// Builds the grid and samples the fundamental TE curve over
/// [`lo_um`, `hi_um`].
pub fn te_curve(
    geometry: &WaveguideGeometry,
    materials: &LayerMaterials,
    grid: &GridSpec,
    lo_um: f64,
    hi_um: f64,
    step_nm: f64,
) -> Result<DispersionCurve> {
    let l = wavelength_samples(lo_um, hi_um, step_nm)?;
    let solver = ModeSolver::new(geometry, materials, grid, hi_um)?;
    sample_te_curve(&solver, &l)
}

/// Sweep definition for a k″(w, h1) map at one wavelength.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GvdMapSpec {
    pub template: WaveguideGeometry,
    pub widths_nm: Vec<f64>,
    pub etch_depths_nm: Vec<f64>,
    pub wavelength_um: f64,
    /// Spacing of the local dispersion samples around `wavelength_um`.
    pub sample_step_nm: f64,
    /// Samples on each side of `wavelength_um`; the curve holds 2·n+1.
    pub half_samples: usize,
    pub grid: GridSpec,
}

impl GvdMapSpec {
    /// Inclusive ranges stepped by the given increments.
    pub fn from_ranges(
        template: WaveguideGeometry,
        width_nm: (f64, f64, f64),
        etch_nm: (f64, f64, f64),
        wavelength_um: f64,
    ) -> Result<Self> {
        Ok(Self {
            template,
            widths_nm: stepped(width_nm)?,
            etch_depths_nm: stepped(etch_nm)?,
            wavelength_um,
            sample_step_nm: 10.0,
            half_samples: 3,
            grid: GridSpec::default(),
        })
    }
}

fn stepped((lo, hi, step): (f64, f64, f64)) -> Result<Vec<f64>> {
    if !(step > 0.0 && hi >= lo) {
        return Err(Error::InvalidInput(format!("bad sweep range ({lo}, {hi}, {step})")));
    }
    let n = ((hi - lo) / step + 1e-9).floor() as usize;
    Ok((0..=n).map(|k| lo + k as f64 * step).collect())
}

/// k″ over (etch depth, width) with its zero contour.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GvdMap {
    pub widths_nm: Vec<f64>,
    pub etch_depths_nm: Vec<f64>,
    pub wavelength_um: f64,
    /// Row-major: one row per etch depth, one column per width. `None`
    /// marks a cell whose solve failed.
    pub values: Vec<Option<f64>>,
    /// k″ = 0 polylines as (width nm, etch depth nm) points.
    pub contour: Vec<Vec<(f64, f64)>>,
}

impl GvdMap {
    pub fn get(&self, etch_index: usize, width_index: usize) -> Option<f64> {
        self.values[etch_index * self.widths_nm.len() + width_index]
    }

    /// Widths where k″ changes sign along one etch-depth row, linearly
    /// interpolated.
    pub fn zero_crossings_in_row(&self, etch_index: usize) -> Vec<f64> {
        let nw = self.widths_nm.len();
        let mut out = Vec::new();
        for c in 0..nw.saturating_sub(1) {
            if let (Some(a), Some(b)) = (self.get(etch_index, c), self.get(etch_index, c + 1)) {
                if let Some(t) = crossing(a, b) {
                    out.push(self.widths_nm[c] + t * (self.widths_nm[c + 1] - self.widths_nm[c]));
                }
            }
        }
        out
    }
}

/// Fraction along a→b where a linear interpolant hits zero.
fn crossing(a: f64, b: f64) -> Option<f64> {
    if a == 0.0 {
        return Some(0.0);
    }
    // A zero at b is reported by the next segment.
    if b != 0.0 && (a < 0.0) != (b < 0.0) {
        Some(a / (a - b))
    } else {
        None
    }
}

/// k″ at the spec wavelength for one cross-section.
pub fn gvd_at(
    geometry: &WaveguideGeometry,
    materials: &LayerMaterials,
    grid: &GridSpec,
    wavelength_um: f64,
    sample_step_nm: f64,
    half_samples: usize,
) -> Result<f64> {
    let half = half_samples.max(MIN_SAMPLES / 2);
    let step = sample_step_nm * 1e-3;
    let l: Vec<f64> = (0..=2 * half)
        .map(|k| wavelength_um + (k as f64 - half as f64) * step)
        .collect();
    let solver = ModeSolver::new(geometry, materials, grid, l[l.len() - 1])?;
    let curve = sample_te_curve(&solver, &l)?;
    gvd(&curve, wavelength_um)
}

/// Fills the k″ map cell by cell in parallel; results are assembled by cell
/// index so the output does not depend on scheduling.
pub fn gvd_map(spec: &GvdMapSpec, materials: &LayerMaterials) -> Result<GvdMap> {
    if spec.widths_nm.is_empty() || spec.etch_depths_nm.is_empty() {
        return Err(Error::InvalidInput("empty sweep".into()));
    }
    let nw = spec.widths_nm.len();
    let cells: Vec<(usize, usize)> = (0..spec.etch_depths_nm.len())
        .flat_map(|r| (0..nw).map(move |c| (r, c)))
        .collect();
    let values: Vec<Option<f64>> = cells
        .par_iter()
        .map(|&(r, c)| {
            let mut g = spec.template;
            g.top_width_nm = spec.widths_nm[c];
            g.etch_depth_nm = spec.etch_depths_nm[r];
            gvd_at(&g, materials, &spec.grid, spec.wavelength_um, spec.sample_step_nm, spec.half_samples).ok()
        })
        .collect();
    let mut map = GvdMap {
        widths_nm: spec.widths_nm.clone(),
        etch_depths_nm: spec.etch_depths_nm.clone(),
        wavelength_um: spec.wavelength_um,
        values,
        contour: Vec::new(),
    };
    map.contour = zero_contour(&map);
    Ok(map)
}

/// Marching squares on the k″ map, segments chained into polylines.
pub fn zero_contour(map: &GvdMap) -> Vec<Vec<(f64, f64)>> {
    let nw = map.widths_nm.len();
    let nh = map.etch_depths_nm.len();
    if nw < 2 || nh < 2 {
        return Vec::new();
    }
    // Edge keys: (0, r, c) horizontal edge (r,c)-(r,c+1); (1, r, c) vertical
    // edge (r,c)-(r+1,c).
    type Edge = (u8, usize, usize);
    let point = |e: Edge| -> Option<(f64, f64)> {
        let (kind, r, c) = e;
        let (r2, c2) = if kind == 0 { (r, c + 1) } else { (r + 1, c) };
        let a = map.get(r, c)?;
        let b = map.get(r2, c2)?;
        let t = crossing(a, b)?;
        let w = map.widths_nm[c] + t * (map.widths_nm[c2] - map.widths_nm[c]);
        let h = map.etch_depths_nm[r] + t * (map.etch_depths_nm[r2] - map.etch_depths_nm[r]);
        Some((w, h))
    };
    let mut segments: Vec<(Edge, Edge)> = Vec::new();
    for r in 0..nh - 1 {
        for c in 0..nw - 1 {
            let corners = [map.get(r, c), map.get(r, c + 1), map.get(r + 1, c + 1), map.get(r + 1, c)];
            if corners.iter().any(Option::is_none) {
                continue;
            }
            let edges: [Edge; 4] = [(0, r, c), (1, r, c + 1), (0, r + 1, c), (1, r, c)];
            let hits: Vec<Edge> = edges.iter().copied().filter(|&e| point(e).is_some()).collect();
            match hits.len() {
                2 => segments.push((hits[0], hits[1])),
                4 => {
                    let centre: f64 = corners.iter().map(|v| v.unwrap()).sum::<f64>() / 4.0;
                    let first_positive = corners[0].unwrap() >= 0.0;
                    if (centre >= 0.0) == first_positive {
                        segments.push((edges[0], edges[1]));
                        segments.push((edges[2], edges[3]));
                    } else {
                        segments.push((edges[3], edges[0]));
                        segments.push((edges[1], edges[2]));
                    }
                }
                _ => {}
            }
        }
    }
    // Chain segments sharing an edge crossing.
    let mut used = vec![false; segments.len()];
    let mut lines = Vec::new();
    for start in 0..segments.len() {
        if used[start] {
            continue;
        }
        used[start] = true;
        let mut chain: std::collections::VecDeque<Edge> = [segments[start].0, segments[start].1].into();
        loop {
            let mut grew = false;
            for (k, seg) in segments.iter().enumerate() {
                if used[k] {
                    continue;
                }
                let back = *chain.back().unwrap();
                let front = *chain.front().unwrap();
                if seg.0 == back {
                    chain.push_back(seg.1);
                } else if seg.1 == back {
                    chain.push_back(seg.0);
                } else if seg.1 == front {
                    chain.push_front(seg.0);
                } else if seg.0 == front {
                    chain.push_front(seg.1);
                } else {
                    continue;
                }
                used[k] = true;
                grew = true;
            }
            if !grew {
                break;
            }
        }
        lines.push(chain.into_iter().filter_map(point).collect());
    }
    lines
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::units::C_UM_PER_FS;

    #[test]
    fn constant_index_has_zero_gvd() {
        let c = DispersionCurve::from_fn(1.2, 2.0, 41, |_| 1.9).unwrap();
        for l in [1.3, 1.62, 1.9] {
            assert!(gvd(&c, l).unwrap().abs() < 1e-9);
        }
    }

    #[test]
    fn quadratic_in_omega_matches_hand_derivative() {
        // n(ω) = a + bω + cω²  ⇒  k = (aω + bω² + cω³)/c₀,
        // k″ = (2b + 6cω)/c₀.
        let (a, b, cq) = (1.8, 0.05, 0.02);
        let curve = DispersionCurve::from_fn(1.0, 2.2, 61, |l| {
            let w = omega_from_um(l);
            a + b * w + cq * w * w
        })
        .unwrap();
        for l in [1.2, 1.62, 2.0] {
            let w = omega_from_um(l);
            let expected = (2.0 * b + 6.0 * cq * w) / C_UM_PER_FS * 1e3;
            let got = gvd(&curve, l).unwrap();
            assert!((got - expected).abs() < 1e-6 * expected.abs(), "{got} vs {expected}");
        }
    }

    #[test]
    fn edge_queries_refused() {
        let c = DispersionCurve::from_fn(1.5, 1.7, 21, |l| 2.0 - 0.01 * l).unwrap();
        assert!(matches!(gvd(&c, 1.505), Err(Error::NearRangeEdge { .. })));
        assert!(matches!(gvd(&c, 1.8), Err(Error::NearRangeEdge { .. })));
        assert!(gvd(&c, 1.52).is_ok());
    }

    #[test]
    fn too_few_samples_rejected() {
        assert!(DispersionCurve::from_fn(1.5, 1.7, 6, |_| 2.0).is_err());
    }

    #[test]
    fn out_of_range_index_lookup_fails() {
        let c = DispersionCurve::from_fn(1.5, 1.7, 11, |_| 2.0).unwrap();
        assert!(matches!(c.n_eff_at(1.8), Err(Error::OutOfRange { .. })));
    }

    #[test]
    fn contour_of_planar_field() {
        // k″ = w − 1800 − 2(h − 165): zero line through (1800, 165).
        let widths: Vec<f64> = (0..9).map(|k| 1600.0 + 50.0 * k as f64).collect();
        let etches: Vec<f64> = (0..5).map(|k| 155.0 + 5.0 * k as f64).collect();
        let mut values = Vec::new();
        for &h in &etches {
            for &w in &widths {
                values.push(Some(w - 1800.0 - 2.0 * (h - 165.0) + 0.5));
            }
        }
        let mut map = GvdMap {
            widths_nm: widths,
            etch_depths_nm: etches,
            wavelength_um: 1.62,
            values,
            contour: vec![],
        };
        map.contour = zero_contour(&map);
        assert_eq!(map.contour.len(), 1);
        for &(w, h) in &map.contour[0] {
            assert!((w - 1800.0 - 2.0 * (h - 165.0) + 0.5).abs() < 1e-9);
        }
        // Five row crossings plus one where the line passes the w = 1800 column.
        assert_eq!(map.contour[0].len(), 6);
        let h: Vec<f64> = map.contour[0].iter().map(|p| p.1).collect();
        assert!(h.windows(2).all(|w| w[1] > w[0]) || h.windows(2).all(|w| w[1] < w[0]));
        let row = map.zero_crossings_in_row(2);
        assert_eq!(row.len(), 1);
        assert!((row[0] - 1799.5).abs() < 1e-9);
    }

    #[test]
    fn missing_cells_break_the_contour() {
        let mut map = GvdMap {
            widths_nm: vec![1.0, 2.0, 3.0],
            etch_depths_nm: vec![1.0, 2.0],
            wavelength_um: 1.62,
            values: vec![Some(-1.0), None, Some(1.0), Some(-1.0), Some(1.0), Some(1.0)],
            contour: vec![],
        };
        map.contour = zero_contour(&map);
        assert!(map.contour.is_empty());
        assert!(map.zero_crossings_in_row(0).is_empty());
        assert_eq!(map.zero_crossings_in_row(1), vec![1.5]);
    }
}
