//! Design and analysis toolkit for thin-film lithium-niobate photon-pair
//! sources: bulk material dispersion, ridge-waveguide eigenmodes, group
//! velocity dispersion, quasi-phase-matching design, SPDC and SHG spectral
//! models, and time-tag coincidence statistics.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod eigen;
pub mod error;
pub mod geometry;
pub mod material;
pub mod mode;
pub mod slab;
pub mod spline;
pub mod units;
pub mod dispersion;
pub mod qpm;
pub mod shg;
pub mod spectra;
pub mod tags;
pub mod coincidence;

pub use error::{Error, Result};
pub use geometry::{Grid, GridSpec, WaveguideGeometry};
pub use material::{list_materials, LayerMaterials, MaterialCatalog, SellmeierModel};
pub use mode::{effective_area, leakage_margin, mode_overlap, solve_modes, ModeSearch, ModeSolution, ModeSolver};
pub use dispersion::{gvd, gvd_map, DispersionCurve, GvdMap, GvdMapSpec};
pub use qpm::{phase_matching_bandwidth, phase_mismatch, qpm_efficiency_factor, solve_poling_period, QpmCurves, QpmDesign};
pub use spectra::{jsi, marginal_signal_spectrum, spdc_total_bandwidth, JsiGrid, JsiGridSpec, PumpEnvelope, PumpShape};
pub use shg::{shg_efficiency, shg_efficiency_from_power, ShgModelInput};
pub use tags::{simulate_tags, SourceConfig, TagRecord, TagStream};
pub use coincidence::{analyze, car, coincidence_histogram, heralded_g2, pcr, AnalysisOptions, CoincidenceReport};

use serde::{Deserialize, Serialize};

/// Transverse polarization family of a guided mode.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Polarization {
    /// Dominant field in the film plane.
    Te,
    /// Dominant field normal to the film.
    Tm,
}
