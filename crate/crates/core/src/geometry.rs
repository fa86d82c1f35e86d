//! Ridge cross-section, the nonuniform computational grid, and rasterization
//! of the layer stack onto that grid.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::material::{LayerMaterials, LayerPermittivity};
use crate::slab::slab_mode_index;
use crate::Polarization;

/// Trapezoidal ridge etched into a film on buried oxide, air cladding.
///
/// Coordinates: x lateral, centred on the ridge; y vertical, zero at the
/// oxide/film interface. The unetched slab beside the ridge is
/// `film_thickness − etch_depth` thick.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WaveguideGeometry {
    pub top_width_nm: f64,
    pub etch_depth_nm: f64,
    pub film_thickness_nm: f64,
    /// Measured from the horizontal; 90° is a vertical wall.
    pub sidewall_angle_deg: f64,
    pub oxide_thickness_nm: f64,
}

impl WaveguideGeometry {
    /// 600 nm x-cut film, 165 nm shallow etch, 1800 nm top width, 60° walls,
    /// 2 µm buried oxide.
    pub const REFERENCE: WaveguideGeometry = WaveguideGeometry {
        top_width_nm: 1800.0,
        etch_depth_nm: 165.0,
        film_thickness_nm: 600.0,
        sidewall_angle_deg: 60.0,
        oxide_thickness_nm: 2000.0,
    };

    pub fn validate(&self) -> Result<()> {
        let ok = self.top_width_nm > 0.0
            && self.etch_depth_nm > 0.0
            && self.etch_depth_nm <= self.film_thickness_nm
            && self.sidewall_angle_deg > 0.0
            && self.sidewall_angle_deg <= 90.0
            && self.oxide_thickness_nm > 0.0
            && [
                self.top_width_nm,
                self.etch_depth_nm,
                self.film_thickness_nm,
                self.sidewall_angle_deg,
                self.oxide_thickness_nm,
            ]
            .iter()
            .all(|v| v.is_finite());
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidInput(format!(
                "geometry must satisfy w > 0, 0 < h1 <= h2, 0 < θ <= 90°, oxide > 0: {self:?}"
            )))
        }
    }

    pub fn film_um(&self) -> f64 {
        self.film_thickness_nm * 1e-3
    }

    pub fn etch_um(&self) -> f64 {
        self.etch_depth_nm * 1e-3
    }

    pub fn slab_um(&self) -> f64 {
        ((self.film_thickness_nm - self.etch_depth_nm) * 1e-3).max(0.0)
    }

    pub fn top_width_um(&self) -> f64 {
        self.top_width_nm * 1e-3
    }

    /// Width at the foot of the etched wall.
    pub fn bottom_width_um(&self) -> f64 {
        let run = if self.sidewall_angle_deg >= 90.0 {
            0.0
        } else {
            self.etch_um() / self.sidewall_angle_deg.to_radians().tan()
        };
        self.top_width_um() + 2.0 * run
    }

    /// Film cross-section as a polygon (counter-clockwise), with the slab
    /// extended to `±half_extent`.
    pub fn film_polygon(&self, half_extent: f64) -> Vec<(f64, f64)> {
        let hs = self.slab_um();
        let h2 = self.film_um();
        let wt = 0.5 * self.top_width_um();
        let wb = 0.5 * self.bottom_width_um();
        let x = half_extent.max(wb);
        vec![
            (-x, 0.0),
            (x, 0.0),
            (x, hs),
            (wb, hs),
            (wt, h2),
            (-wt, h2),
            (-wb, hs),
            (-x, hs),
        ]
    }
}

/// How the solver grid is laid out.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridSpec {
    /// Uniform spacing over the film and around the ridge.
    pub core_step_nm: f64,
    /// Largest spacing far from the ridge.
    pub max_step_nm: f64,
    /// Ratio between neighbouring spacings outside the core region.
    pub growth: f64,
    /// Target |E| at the window edge relative to peak, used to size the
    /// window from the evanescent decay lengths.
    pub edge_decay: f64,
    /// Fixed window half-width, overriding the automatic choice.
    pub half_width_um: Option<f64>,
    /// Fixed air thickness above the film.
    pub above_um: Option<f64>,
    /// Fixed oxide thickness included below the film.
    pub below_um: Option<f64>,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self {
            core_step_nm: 20.0,
            max_step_nm: 120.0,
            growth: 1.12,
            edge_decay: 1e-4,
            half_width_um: None,
            above_um: None,
            below_um: None,
        }
    }
}

impl GridSpec {
    pub fn with_core_step(core_step_nm: f64) -> Self {
        Self {
            core_step_nm,
            max_step_nm: (6.0 * core_step_nm).max(GridSpec::default().max_step_nm),
            ..Self::default()
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.core_step_nm > 0.0
            && self.max_step_nm >= self.core_step_nm
            && self.growth >= 1.0
            && self.edge_decay > 0.0
            && self.edge_decay < 1.0)
        {
            return Err(Error::InvalidInput(format!("bad grid spec {self:?}")));
        }
        Ok(())
    }
}

/// Rectilinear node grid. The first and last node on each axis sit on the
/// zero-field walls; the unknowns are the interior nodes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub x_um: Vec<f64>,
    pub y_um: Vec<f64>,
}

impl Grid {
    pub fn nx(&self) -> usize {
        self.x_um.len()
    }

    pub fn ny(&self) -> usize {
        self.y_um.len()
    }

    pub fn len(&self) -> usize {
        self.nx() * self.ny()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Row-major index, x fastest.
    pub fn idx(&self, i: usize, j: usize) -> usize {
        j * self.nx() + i
    }

    /// Dual-cell widths: half the distance between the neighbours.
    pub fn x_weights(&self) -> Vec<f64> {
        dual_widths(&self.x_um)
    }

    pub fn y_weights(&self) -> Vec<f64> {
        dual_widths(&self.y_um)
    }

    /// Integration weight of every node (dual-cell area, µm²).
    pub fn cell_areas(&self) -> Vec<f64> {
        let wx = self.x_weights();
        let wy = self.y_weights();
        let mut out = Vec::with_capacity(self.len());
        for &b in &wy {
            for &a in &wx {
                out.push(a * b);
            }
        }
        out
    }

    /// Grid for `geometry`, windowed for the longest wavelength it will be
    /// used at.
    pub fn for_geometry(
        geometry: &WaveguideGeometry,
        materials: &LayerMaterials,
        max_wavelength_um: f64,
        spec: &GridSpec,
    ) -> Result<Grid> {
        geometry.validate()?;
        spec.validate()?;
        let window = Window::auto(geometry, materials, max_wavelength_um, spec)?;
        let step = spec.core_step_nm * 1e-3;
        let max_step = spec.max_step_nm * 1e-3;
        let h2 = geometry.film_um();
        let wb = 0.5 * geometry.bottom_width_um();

        let fine_x = (wb + 0.4).min(window.half_width);
        let x_pos = graded_half_axis(fine_x, window.half_width, step, max_step, spec.growth);
        let mut x: Vec<f64> = x_pos.iter().rev().map(|v| -v).collect();
        x.extend_from_slice(&x_pos[1..]);

        let margin: f64 = 0.2;
        let fine_lo = -margin.min(window.below);
        let fine_hi = h2 + margin.min(window.above);
        let y = graded_axis(
            fine_lo,
            fine_hi,
            -window.below,
            h2 + window.above,
            step,
            max_step,
            spec.growth,
        );
        let grid = Grid { x_um: x, y_um: y };
        if grid.nx() < 5 || grid.ny() < 5 {
            return Err(Error::InvalidInput("grid too coarse".into()));
        }
        let across = grid
            .x_um
            .iter()
            .filter(|&&v| v.abs() <= 0.5 * geometry.top_width_um())
            .count();
        if across < 10 {
            return Err(Error::InvalidInput(format!(
                "only {across} grid points across the ridge top; need at least 10"
            )));
        }
        Ok(grid)
    }
}

fn dual_widths(v: &[f64]) -> Vec<f64> {
    let n = v.len();
    (0..n)
        .map(|i| {
            let lo = if i == 0 { v[0] } else { 0.5 * (v[i - 1] + v[i]) };
            let hi = if i + 1 == n { v[n - 1] } else { 0.5 * (v[i] + v[i + 1]) };
            hi - lo
        })
        .collect()
}

/// Nodes from 0 to `wall`: uniform up to `fine`, then geometrically graded.
fn graded_half_axis(fine: f64, wall: f64, step: f64, max_step: f64, growth: f64) -> Vec<f64> {
    let n = (fine / step).ceil().max(1.0) as usize;
    let h0 = fine / n as f64;
    let mut out: Vec<f64> = (0..=n).map(|k| k as f64 * h0).collect();
    extend_graded(&mut out, wall, h0, max_step, growth);
    out
}

fn extend_graded(out: &mut Vec<f64>, wall: f64, h0: f64, max_step: f64, growth: f64) {
    let mut h = h0;
    let mut pos = *out.last().unwrap();
    while wall - pos > 1e-12 {
        h = (h * growth).min(max_step);
        if pos + h >= wall || wall - (pos + h) < 0.5 * h {
            pos = wall;
        } else {
            pos += h;
        }
        out.push(pos);
    }
}

fn graded_axis(
    fine_lo: f64,
    fine_hi: f64,
    wall_lo: f64,
    wall_hi: f64,
    step: f64,
    max_step: f64,
    growth: f64,
) -> Vec<f64> {
    let n = ((fine_hi - fine_lo) / step).ceil().max(1.0) as usize;
    let h0 = (fine_hi - fine_lo) / n as f64;
    let mut up: Vec<f64> = (0..=n).map(|k| fine_lo + k as f64 * h0).collect();
    extend_graded(&mut up, wall_hi, h0, max_step, growth);
    let mut down = vec![-fine_lo];
    extend_graded(&mut down, -wall_lo, h0, max_step, growth);
    let mut out: Vec<f64> = down[1..].iter().rev().map(|v| -v).collect();
    out.extend(up);
    out
}

/// Extent of the computational window around the film, in µm.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Window {
    pub half_width: f64,
    pub above: f64,
    pub below: f64,
}

impl Window {
    /// Never smaller than 3× the ridge width across and 3× the film thickness
    /// in height; widened until the estimated evanescent tails reach
    /// `edge_decay` of the field at the ridge.
    pub fn auto(
        geometry: &WaveguideGeometry,
        materials: &LayerMaterials,
        wavelength_um: f64,
        spec: &GridSpec,
    ) -> Result<Window> {
        let est = effective_index_estimate(geometry, materials, wavelength_um)?;
        let k0 = 2.0 * std::f64::consts::PI / wavelength_um;
        let tail = (1.0 / spec.edge_decay).ln();
        // The estimate overshoots n_eff; pad the decay lengths.
        let pad = 1.3;
        let decay = |eps_out: f64| {
            let g = k0 * (est.n_eff * est.n_eff - eps_out).max(1e-6).sqrt();
            pad * tail / g
        };
        let wb = geometry.bottom_width_um();
        let h2 = geometry.film_um();
        let lateral = if est.n_eff > est.n_side {
            pad * tail / (k0 * (est.n_eff * est.n_eff - est.n_side * est.n_side).sqrt())
        } else {
            2.0 * wb
        };
        let half_width = spec
            .half_width_um
            .unwrap_or_else(|| (0.5 * wb + lateral).max(1.5 * geometry.top_width_um()).min(0.5 * wb + 25.0));
        let above = spec.above_um.unwrap_or_else(|| decay(est.eps.cladding).max(h2));
        let below = spec.below_um.unwrap_or_else(|| decay(est.eps.substrate).max(h2));
        if !(half_width > 0.5 * wb && above > 0.0 && below > 0.0) {
            return Err(Error::InvalidInput(format!(
                "window ({half_width}, {above}, {below}) µm does not contain the ridge"
            )));
        }
        Ok(Window { half_width, above, below })
    }
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct IndexEstimate {
    pub n_eff: f64,
    pub n_side: f64,
    pub eps: LayerPermittivity,
}

/// Effective-index-method estimate of the fundamental TE index; used only to
/// size windows and seed the eigensolver.
pub(crate) fn effective_index_estimate(
    geometry: &WaveguideGeometry,
    materials: &LayerMaterials,
    wavelength_um: f64,
) -> Result<IndexEstimate> {
    let eps = materials.permittivities(Polarization::Te, wavelength_um)?;
    let floor = eps.substrate.max(eps.cladding).sqrt();
    let n_core = slab_mode_index(eps, geometry.film_um(), wavelength_um, Polarization::Te, 0)
        .unwrap_or(floor);
    let n_side = slab_mode_index(eps, geometry.slab_um(), wavelength_um, Polarization::Te, 0)
        .unwrap_or(floor);
    let lateral = LayerPermittivity {
        film: n_core * n_core,
        substrate: n_side * n_side,
        cladding: n_side * n_side,
    };
    let w_mid = 0.5 * (geometry.top_width_um() + geometry.bottom_width_um());
    // In-plane field is normal to the side walls: TM-like lateral problem.
    let n_eff = slab_mode_index(lateral, w_mid, wavelength_um, Polarization::Tm, 0).unwrap_or(n_side);
    Ok(IndexEstimate { n_eff, n_side, eps })
}

/// Per-node material fractions; independent of wavelength.
#[derive(Debug, Clone, PartialEq)]
pub struct Raster {
    pub film: Vec<f64>,
    pub substrate: Vec<f64>,
}

impl Raster {
    /// Area-weighted fractions of each node's dual cell covered by film and
    /// by substrate; the rest is cladding.
    pub fn new(geometry: &WaveguideGeometry, grid: &Grid) -> Raster {
        let nx = grid.nx();
        let ny = grid.ny();
        let xe = cell_edges(&grid.x_um);
        let ye = cell_edges(&grid.y_um);
        let extent = grid.x_um[0].abs().max(grid.x_um[nx - 1].abs()) + 1.0;
        let poly = geometry.film_polygon(extent);
        let h2 = geometry.film_um();
        let mut film = vec![0.0; nx * ny];
        let mut substrate = vec![0.0; nx * ny];
        for j in 0..ny {
            let (y0, y1) = (ye[j], ye[j + 1]);
            let dy = y1 - y0;
            let sub = if y1 <= 0.0 {
                1.0
            } else if y0 >= 0.0 {
                0.0
            } else {
                -y0 / dy
            };
            for i in 0..nx {
                let (x0, x1) = (xe[i], xe[i + 1]);
                let k = j * nx + i;
                substrate[k] = sub;
                if y1 <= 0.0 || y0 >= h2 {
                    continue;
                }
                let area = clip_area(&poly, x0, x1, y0, y1);
                film[k] = (area / ((x1 - x0) * dy)).clamp(0.0, 1.0);
            }
        }
        Raster { film, substrate }
    }

    /// Node permittivities for the given layer values.
    pub fn permittivity(&self, eps: LayerPermittivity) -> Vec<f64> {
        self.film
            .iter()
            .zip(&self.substrate)
            .map(|(&f, &s)| f * eps.film + s * eps.substrate + (1.0 - f - s).max(0.0) * eps.cladding)
            .collect()
    }
}

fn cell_edges(v: &[f64]) -> Vec<f64> {
    let n = v.len();
    let mut e = Vec::with_capacity(n + 1);
    e.push(v[0] - 0.5 * (v[1] - v[0]));
    for i in 0..n - 1 {
        e.push(0.5 * (v[i] + v[i + 1]));
    }
    e.push(v[n - 1] + 0.5 * (v[n - 1] - v[n - 2]));
    e
}

/// Area of `poly` inside the axis-aligned box, by Sutherland-Hodgman
/// clipping against the four box edges.
fn clip_area(poly: &[(f64, f64)], x0: f64, x1: f64, y0: f64, y1: f64) -> f64 {
    let mut pts = poly.to_vec();
    let planes: [(usize, f64, bool); 4] = [(0, x0, true), (0, x1, false), (1, y0, true), (1, y1, false)];
    for (axis, bound, keep_above) in planes {
        if pts.is_empty() {
            return 0.0;
        }
        let inside = |p: &(f64, f64)| {
            let c = if axis == 0 { p.0 } else { p.1 };
            if keep_above { c >= bound } else { c <= bound }
        };
        let mut out = Vec::with_capacity(pts.len() + 4);
        for k in 0..pts.len() {
            let cur = pts[k];
            let prev = pts[(k + pts.len() - 1) % pts.len()];
            let (ci, pi) = (inside(&cur), inside(&prev));
            if ci != pi {
                let (pc, cc) = if axis == 0 { (prev.0, cur.0) } else { (prev.1, cur.1) };
                let t = (bound - pc) / (cc - pc);
                out.push((prev.0 + t * (cur.0 - prev.0), prev.1 + t * (cur.1 - prev.1)));
            }
            if ci {
                out.push(cur);
            }
        }
        pts = out;
    }
    let n = pts.len();
    if n < 3 {
        return 0.0;
    }
    let twice: f64 = (0..n)
        .map(|k| {
            let (a, b) = (pts[k], pts[(k + 1) % n]);
            a.0 * b.1 - b.0 * a.1
        })
        .sum();
    0.5 * twice.abs()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reference_geometry_dimensions() {
        let g = WaveguideGeometry::REFERENCE;
        g.validate().unwrap();
        assert!((g.slab_um() - 0.435).abs() < 1e-12);
        let expected = 1.8 + 2.0 * 0.165 / 60f64.to_radians().tan();
        assert!((g.bottom_width_um() - expected).abs() < 1e-12);
    }

    #[test]
    fn rejects_invalid_geometry() {
        let mut g = WaveguideGeometry::REFERENCE;
        g.etch_depth_nm = 700.0;
        assert!(g.validate().is_err());
        let mut g = WaveguideGeometry::REFERENCE;
        g.sidewall_angle_deg = 95.0;
        assert!(g.validate().is_err());
        let mut g = WaveguideGeometry::REFERENCE;
        g.top_width_nm = 0.0;
        assert!(g.validate().is_err());
    }

    #[test]
    fn clip_area_of_unit_square() {
        let sq = vec![(0.0, 0.0), (1.0, 0.0), (1.0, 1.0), (0.0, 1.0)];
        assert!((clip_area(&sq, -1.0, 2.0, -1.0, 2.0) - 1.0).abs() < 1e-15);
        assert!((clip_area(&sq, 0.5, 2.0, 0.25, 0.75) - 0.25).abs() < 1e-15);
        assert_eq!(clip_area(&sq, 2.0, 3.0, 0.0, 1.0), 0.0);
    }

    #[test]
    fn raster_recovers_film_area() {
        let g = WaveguideGeometry::REFERENCE;
        let grid = Grid::for_geometry(&g, &LayerMaterials::default(), 1.62, &GridSpec::default()).unwrap();
        let r = Raster::new(&g, &grid);
        let xe = cell_edges(&grid.x_um);
        let ye = cell_edges(&grid.y_um);
        let mut got = 0.0;
        for j in 0..grid.ny() {
            for i in 0..grid.nx() {
                got += r.film[grid.idx(i, j)] * (xe[i + 1] - xe[i]) * (ye[j + 1] - ye[j]);
            }
        }
        let ridge = 0.5 * (g.top_width_um() + g.bottom_width_um()) * g.etch_um();
        let expected = ridge + (xe[grid.nx()] - xe[0]) * g.slab_um();
        assert!((got - expected).abs() < 1e-9, "{got} vs {expected}");
    }

    #[test]
    fn grid_is_monotone_and_spans_window() {
        let g = WaveguideGeometry::REFERENCE;
        let grid = Grid::for_geometry(&g, &LayerMaterials::default(), 1.62, &GridSpec::default()).unwrap();
        for axis in [&grid.x_um, &grid.y_um] {
            assert!(axis.windows(2).all(|w| w[1] > w[0]));
        }
        assert!(grid.y_um[0] < 0.0 && *grid.y_um.last().unwrap() > g.film_um());
        assert!(grid.x_um[grid.nx() - 1] >= 1.5 * g.top_width_um());
    }

    #[test]
    fn too_coarse_grid_rejected() {
        let g = WaveguideGeometry::REFERENCE;
        let err = Grid::for_geometry(&g, &LayerMaterials::default(), 1.62, &GridSpec::with_core_step(250.0));
        assert!(err.is_err());
    }
}
