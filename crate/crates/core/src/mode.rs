//! Semi-vectorial finite-difference eigenmodes of the ridge cross-section.
//!
//! The quasi-TE family solves for the dominant E_x with the operator
//! `∂x[(1/ε)∂x(εE)] + ∂y²E + k₀²εE = β²E`; the quasi-TM family swaps the
//! roles of x and y. The ε-weighted derivative carries the normal-field jump
//! at material interfaces, which a scalar Laplacian would miss. Layer
//! permittivities follow the x-cut convention of
//! [`LayerMaterials`](crate::material::LayerMaterials): TE sees n_e, TM sees
//! n_o.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::eigen::{shift_invert, CsrMatrix, EigenOptions};
use crate::error::{Error, Result};
use crate::geometry::{effective_index_estimate, Grid, GridSpec, Raster, WaveguideGeometry};
use crate::material::{LayerMaterials, LayerPermittivity};
use crate::slab::slab_mode_index;
use crate::Polarization;

const START_SEED: u64 = 0x51ab_0de5;
const GUARD_VECTORS: usize = 3;
/// Shift position between the full-film slab index and the bulk film index.
const SHIFT_FRACTION: f64 = 0.02;

/// Sampled field on a [`Grid`], row-major with x fastest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FieldGrid {
    pub grid: Grid,
    pub values: Vec<f64>,
}

impl FieldGrid {
    pub fn new(grid: Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::InvalidInput(format!(
                "field has {} samples for a {}x{} grid",
                values.len(),
                grid.nx(),
                grid.ny()
            )));
        }
        Ok(Self { grid, values })
    }

    /// ∫|E|² dA on the dual-cell quadrature.
    pub fn power(&self) -> f64 {
        self.grid
            .cell_areas()
            .iter()
            .zip(&self.values)
            .map(|(a, e)| a * e * e)
            .sum()
    }

    /// (∫|E|²dA)² / ∫|E|⁴dA.
    pub fn effective_area(&self) -> Result<f64> {
        let areas = self.grid.cell_areas();
        let (mut p2, mut p4) = (0.0, 0.0);
        for (a, e) in areas.iter().zip(&self.values) {
            let i = e * e;
            p2 += a * i;
            p4 += a * i * i;
        }
        if p4 <= 0.0 || !p4.is_finite() {
            return Err(Error::DegenerateField);
        }
        Ok(p2 * p2 / p4)
    }

    pub fn peak_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Largest |E| on the ring of nodes next to the walls, relative to the
    /// peak.
    pub fn edge_ratio(&self) -> f64 {
        let (nx, ny) = (self.grid.nx(), self.grid.ny());
        let peak = self.peak_abs();
        if peak == 0.0 || nx < 3 || ny < 3 {
            return 0.0;
        }
        let mut m: f64 = 0.0;
        for i in 1..nx - 1 {
            m = m.max(self.values[self.grid.idx(i, 1)].abs());
            m = m.max(self.values[self.grid.idx(i, ny - 2)].abs());
        }
        for j in 1..ny - 1 {
            m = m.max(self.values[self.grid.idx(1, j)].abs());
            m = m.max(self.values[self.grid.idx(nx - 2, j)].abs());
        }
        m / peak
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModeSolution {
    pub wavelength_um: f64,
    pub n_eff: f64,
    pub polarization: Polarization,
    /// Share of the transverse field in the in-plane (TE) component. The
    /// semi-vectorial families are pure, so this is 1 or 0.
    pub te_fraction: f64,
    /// Dominant transverse component, ∫|E|²dA = 1.
    pub field: FieldGrid,
    pub a_eff_um2: f64,
    /// max(slab TE, slab TM, substrate) < n_eff < n_core.
    pub guided: bool,
    /// |E| next to the window walls relative to the peak.
    pub edge_ratio: f64,
}

/// Result of [`solve_modes`]: guided modes by descending n_eff, with a note
/// when nothing guided was found.
#[derive(Debug, Clone)]
pub struct ModeSearch {
    pub modes: Vec<ModeSolution>,
    pub diagnostic: Option<String>,
}

impl ModeSearch {
    /// Highest-index mode with TE fraction above one half.
    pub fn fundamental_te(&self) -> Option<&ModeSolution> {
        self.modes
            .iter()
            .find(|m| classify_polarization(m.te_fraction) == Polarization::Te)
    }
}

/// Larger integrated component wins; an exact tie counts as TE.
pub fn classify_polarization(te_fraction: f64) -> Polarization {
    if te_fraction >= 0.5 {
        Polarization::Te
    } else {
        Polarization::Tm
    }
}

/// A cross-section discretized once and reusable across wavelengths.
#[derive(Debug, Clone)]
pub struct ModeSolver {
    geometry: WaveguideGeometry,
    materials: LayerMaterials,
    grid: Grid,
    raster: Raster,
}

/// One eigenpair before classification.
#[derive(Debug, Clone)]
pub struct RawMode {
    pub n_eff: f64,
    pub polarization: Polarization,
    /// Interior-node eigenvector, unit 2-norm.
    pub interior: Vec<f64>,
}

impl ModeSolver {
    /// Discretizes `geometry` on a grid sized for `max_wavelength_um`.
    pub fn new(
        geometry: &WaveguideGeometry,
        materials: &LayerMaterials,
        spec: &GridSpec,
        max_wavelength_um: f64,
    ) -> Result<Self> {
        let grid = Grid::for_geometry(geometry, materials, max_wavelength_um, spec)?;
        Ok(Self::with_grid(geometry, materials, grid))
    }

    pub fn with_grid(geometry: &WaveguideGeometry, materials: &LayerMaterials, grid: Grid) -> Self {
        let raster = Raster::new(geometry, &grid);
        Self {
            geometry: *geometry,
            materials: materials.clone(),
            grid,
            raster,
        }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn geometry(&self) -> &WaveguideGeometry {
        &self.geometry
    }

    pub fn materials(&self) -> &LayerMaterials {
        &self.materials
    }

    fn interior_dims(&self) -> (usize, usize) {
        (self.grid.nx() - 2, self.grid.ny() - 2)
    }

    fn operator(&self, pol: Polarization, wavelength_um: f64) -> Result<(CsrMatrix, LayerPermittivity)> {
        let layers = self.materials.permittivities(pol, wavelength_um)?;
        let eps = self.raster.permittivity(layers);
        let k0sq = (2.0 * PI / wavelength_um).powi(2);
        let (x, y) = (&self.grid.x_um, &self.grid.y_um);
        let (nx, ny) = (self.grid.nx(), self.grid.ny());
        let (mx, my) = self.interior_dims();
        let n = mx * my;
        let unknown = |i: usize, j: usize| (j - 1) * mx + (i - 1);
        let weighted_x = pol == Polarization::Te;

        let rows = (1..ny - 1).flat_map(|j| (1..nx - 1).map(move |i| (i, j))).map(|(i, j)| {
            let k = j * nx + i;
            let e0 = eps[k];
            let mut diag = k0sq * e0;
            let mut row: Vec<(usize, f64)> = Vec::with_capacity(5);

            // (coefficient, neighbour node, neighbour ε, is-weighted-axis)
            let hxp = x[i + 1] - x[i];
            let hxm = x[i] - x[i - 1];
            let hyp = y[j + 1] - y[j];
            let hym = y[j] - y[j - 1];
            let cx = 2.0 / (hxp + hxm);
            let cy = 2.0 / (hyp + hym);
            let neighbours = [
                (cy / hym, i, j - 1, !weighted_x),
                (cx / hxm, i - 1, j, weighted_x),
                (cx / hxp, i + 1, j, weighted_x),
                (cy / hyp, i, j + 1, !weighted_x),
            ];
            let mut entries = [(0usize, 0.0f64); 4];
            let mut used = 0;
            for (c, ni, nj, weighted) in neighbours {
                let en = eps[nj * nx + ni];
                let (off, d) = if weighted {
                    let t = 2.0 / (e0 + en);
                    (c * t * en, c * t * e0)
                } else {
                    (c, c)
                };
                diag -= d;
                let interior = ni >= 1 && ni < nx - 1 && nj >= 1 && nj < ny - 1;
                if interior {
                    entries[used] = (unknown(ni, nj), off);
                    used += 1;
                }
            }
            let me = unknown(i, j);
            // Keep column order sorted: S, W, self, E, N.
            let mut placed_self = false;
            for &(c, v) in &entries[..used] {
                if !placed_self && c > me {
                    row.push((me, diag));
                    placed_self = true;
                }
                row.push((c, v));
            }
            if !placed_self {
                row.push((me, diag));
            }
            row
        });
        Ok((CsrMatrix::from_rows(n, rows), layers))
    }

    fn start_vectors(&self, count: usize, seed_vector: Option<&[f64]>) -> Vec<Vec<f64>> {
        let (mx, my) = self.interior_dims();
        let wt = 0.5 * self.geometry.top_width_um();
        let h2 = self.geometry.film_um();
        let yc = h2 - 0.5 * self.geometry.etch_um().min(h2);
        let sy = 0.5 * h2;
        let mut rng = ChaCha8Rng::seed_from_u64(START_SEED);
        let mut cols = Vec::with_capacity(count);
        if let Some(v) = seed_vector {
            if v.len() == mx * my {
                cols.push(v.to_vec());
            }
        }
        let mut order = 0usize;
        while cols.len() < count {
            let mut v = Vec::with_capacity(mx * my);
            for j in 1..=my {
                let yy = (self.grid.y_um[j] - yc) / sy;
                for i in 1..=mx {
                    let xx = self.grid.x_um[i] / wt;
                    let bump = (-(xx * xx) - yy * yy).exp();
                    let shape = match order {
                        0 => 1.0,
                        1 => xx,
                        2 => xx * xx - 0.5,
                        3 => yy,
                        4 => xx * yy,
                        k => xx.powi(k as i32 - 2),
                    };
                    v.push(bump * shape + 1e-3 * (rng.random::<f64>() - 0.5));
                }
            }
            cols.push(v);
            order += 1;
        }
        cols
    }

    /// The `count` highest-index modes of one polarization family.
    pub fn solve_family(
        &self,
        wavelength_um: f64,
        pol: Polarization,
        count: usize,
        seed_vector: Option<&[f64]>,
    ) -> Result<Vec<RawMode>> {
        if count == 0 {
            return Ok(Vec::new());
        }
        let (a, layers) = self.operator(pol, wavelength_um)?;
        let k0 = 2.0 * PI / wavelength_um;
        let top = slab_mode_index(layers, self.geometry.film_um(), wavelength_um, pol, 0)
            .unwrap_or_else(|| layers.substrate.max(layers.cladding).sqrt());
        // Above every ridge mode: the unetched film bounds them from above.
        let n_shift = top + SHIFT_FRACTION * (layers.film.sqrt() - top);
        let sigma = (k0 * n_shift).powi(2);
        let start = self.start_vectors(count + GUARD_VECTORS, seed_vector);
        let pairs = shift_invert(
            &a,
            sigma,
            start,
            EigenOptions {
                wanted: count,
                ..EigenOptions::default()
            },
        )?;
        Ok(pairs
            .into_iter()
            .map(|p| RawMode {
                n_eff: p.value.max(0.0).sqrt() / k0,
                polarization: pol,
                interior: p.vector,
            })
            .collect())
    }

    /// Upper index bound for guidance and the slab indices beside the ridge.
    pub fn guidance_bounds(&self, wavelength_um: f64, pol: Polarization) -> Result<(f64, f64)> {
        let te = self.materials.permittivities(Polarization::Te, wavelength_um)?;
        let tm = self.materials.permittivities(Polarization::Tm, wavelength_um)?;
        let hs = self.geometry.slab_um();
        let mut floor = te.substrate.max(te.cladding).sqrt();
        for (eps, p) in [(te, Polarization::Te), (tm, Polarization::Tm)] {
            if let Some(n) = slab_mode_index(eps, hs, wavelength_um, p, 0) {
                floor = floor.max(n);
            }
        }
        let core = self.materials.film(pol).index(wavelength_um)?;
        Ok((floor, core))
    }

    /// Expands an interior eigenvector into a normalized [`ModeSolution`].
    pub fn finish(&self, raw: &RawMode, wavelength_um: f64) -> Result<ModeSolution> {
        let (mx, my) = self.interior_dims();
        let nx = self.grid.nx();
        let mut values = vec![0.0; self.grid.len()];
        for j in 0..my {
            for i in 0..mx {
                values[(j + 1) * nx + (i + 1)] = raw.interior[j * mx + i];
            }
        }
        let mut field = FieldGrid::new(self.grid.clone(), values)?;
        let p = field.power();
        if !(p > 0.0) {
            return Err(Error::DegenerateField);
        }
        let peak = field
            .values
            .iter()
            .copied()
            .fold(0.0f64, |m, v| if v.abs() > m.abs() { v } else { m });
        let scale = peak.signum() / p.sqrt();
        field.values.iter_mut().for_each(|v| *v *= scale);
        let a_eff = field.effective_area()?;
        let (floor, core) = self.guidance_bounds(wavelength_um, raw.polarization)?;
        let edge_ratio = field.edge_ratio();
        Ok(ModeSolution {
            wavelength_um,
            n_eff: raw.n_eff,
            polarization: raw.polarization,
            te_fraction: match raw.polarization {
                Polarization::Te => 1.0,
                Polarization::Tm => 0.0,
            },
            field,
            a_eff_um2: a_eff,
            guided: raw.n_eff > floor && raw.n_eff < core,
            edge_ratio,
        })
    }

    /// Fundamental TE mode, guided or not.
    pub fn fundamental_te(&self, wavelength_um: f64) -> Result<ModeSolution> {
        let raw = self.solve_family(wavelength_um, Polarization::Te, 1, None)?;
        self.finish(&raw[0], wavelength_um)
    }
}

/// Up to `n_modes` guided modes of each polarization family, sorted by
/// descending n_eff.
pub fn solve_modes(
    geometry: &WaveguideGeometry,
    wavelength_um: f64,
    n_modes: usize,
    spec: &GridSpec,
    materials: &LayerMaterials,
) -> Result<ModeSearch> {
    let solver = ModeSolver::new(geometry, materials, spec, wavelength_um)?;
    solve_modes_with(&solver, wavelength_um, n_modes)
}

/// [`solve_modes`] on an already-discretized cross-section, so modes at
/// different wavelengths share one grid.
pub fn solve_modes_with(solver: &ModeSolver, wavelength_um: f64, n_modes: usize) -> Result<ModeSearch> {
    let mut modes = Vec::new();
    let mut rejected = Vec::new();
    for pol in [Polarization::Te, Polarization::Tm] {
        for raw in solver.solve_family(wavelength_um, pol, n_modes, None)? {
            let m = solver.finish(&raw, wavelength_um)?;
            if m.guided {
                modes.push(m);
            } else {
                rejected.push(format!("{:?} n_eff={:.5}", pol, m.n_eff));
            }
        }
    }
    modes.sort_by(|a, b| b.n_eff.total_cmp(&a.n_eff));
    let diagnostic = if modes.is_empty() {
        let (floor, _) = solver.guidance_bounds(wavelength_um, Polarization::Te)?;
        Some(format!(
            "no guided mode at {wavelength_um} µm: every solution lies at or below the slab/substrate bound {floor:.5} ({})",
            rejected.join(", ")
        ))
    } else {
        None
    };
    Ok(ModeSearch { modes, diagnostic })
}

/// Effective area of a guided mode, µm².
pub fn effective_area(mode: &ModeSolution) -> Result<f64> {
    if !mode.guided {
        return Err(Error::InvalidInput(format!(
            "mode at {} µm with n_eff {:.5} is not guided",
            mode.wavelength_um, mode.n_eff
        )));
    }
    mode.field.effective_area()
}

/// Power-coupling overlap of the two intensity profiles,
/// (∫√(I_a I_b) dA)² / (∫I_a dA ∫I_b dA).
pub fn mode_overlap(a: &ModeSolution, b: &ModeSolution) -> Result<f64> {
    for m in [a, b] {
        if !m.guided {
            return Err(Error::InvalidInput(format!(
                "mode at {} µm is not guided",
                m.wavelength_um
            )));
        }
    }
    intensity_overlap(&a.field, &b.field)
}

pub fn intensity_overlap(a: &FieldGrid, b: &FieldGrid) -> Result<f64> {
    if a.grid != b.grid {
        return Err(Error::GridMismatch);
    }
    let areas = a.grid.cell_areas();
    let (mut ab, mut aa, mut bb) = (0.0, 0.0, 0.0);
    for ((w, ea), eb) in areas.iter().zip(&a.values).zip(&b.values) {
        ab += w * (ea * eb).abs();
        aa += w * ea * ea;
        bb += w * eb * eb;
    }
    if aa <= 0.0 || bb <= 0.0 {
        return Err(Error::DegenerateField);
    }
    Ok((ab * ab / (aa * bb)).clamp(0.0, 1.0))
}

/// Lateral-leakage check: fundamental TE ridge mode against the TM mode of
/// the etched slab beside the ridge.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LeakageMargin {
    pub wavelength_um: f64,
    /// n_eff(TE ridge) − reference; positive means no leakage channel.
    pub margin: f64,
    pub te_ridge: f64,
    /// TM slab index at the etched-slab thickness h2 − h1.
    pub tm_slab_etched: Option<f64>,
    /// TM slab index at the full film thickness h2, for comparison.
    pub tm_slab_full: Option<f64>,
    /// Set when the etched slab guides no TM mode and the margin is taken
    /// against the highest cladding index instead.
    pub against_cutoff: bool,
}

pub fn leakage_margin(
    geometry: &WaveguideGeometry,
    wavelength_um: f64,
    spec: &GridSpec,
    materials: &LayerMaterials,
) -> Result<LeakageMargin> {
    let solver = ModeSolver::new(geometry, materials, spec, wavelength_um)?;
    leakage_margin_with(&solver, wavelength_um)
}

pub fn leakage_margin_with(solver: &ModeSolver, wavelength_um: f64) -> Result<LeakageMargin> {
    let te = solver.solve_family(wavelength_um, Polarization::Te, 1, None)?[0].n_eff;
    let g = solver.geometry();
    let eps_tm = solver.materials().permittivities(Polarization::Tm, wavelength_um)?;
    let etched = slab_mode_index(eps_tm, g.slab_um(), wavelength_um, Polarization::Tm, 0);
    let full = slab_mode_index(eps_tm, g.film_um(), wavelength_um, Polarization::Tm, 0);
    let (reference, against_cutoff) = match etched {
        Some(n) => (n, false),
        None => (eps_tm.substrate.max(eps_tm.cladding).sqrt(), true),
    };
    Ok(LeakageMargin {
        wavelength_um,
        margin: te - reference,
        te_ridge: te,
        tm_slab_etched: etched,
        tm_slab_full: full,
        against_cutoff,
    })
}

/// Quick estimate of the fundamental TE index without solving; exposed for
/// diagnostics.
pub fn estimate_te_index(
    geometry: &WaveguideGeometry,
    materials: &LayerMaterials,
    wavelength_um: f64,
) -> Result<f64> {
    Ok(effective_index_estimate(geometry, materials, wavelength_um)?.n_eff)
}
