//! Bulk refractive-index models for the layer materials.
//!
//! Models are three-term (or shorter) Sellmeier expansions
//! `n²(λ) = 1 + Σ B_k λ² / (λ² − C_k)` with λ in µm. A bundled data file
//! holds congruent LiNbO₃ (extraordinary and ordinary), fused silica and
//! air; alternates can be loaded from any file in the same format.

use std::collections::BTreeMap;
use std::path::Path;

use serde::Deserialize;

use crate::error::{Error, Result};

/// Contents of the bundled materials file.
pub const BUNDLED_MATERIALS: &str = include_str!("../data/materials.toml");

pub const LN_EXTRAORDINARY: &str = "LN_extraordinary";
pub const LN_ORDINARY: &str = "LN_ordinary";
pub const SIO2: &str = "SiO2";
pub const AIR: &str = "air";

#[derive(Debug, Clone, PartialEq)]
pub struct SellmeierModel {
    pub name: String,
    /// Flat `[B1, C1, B2, C2, ...]`, C in µm².
    pub coefficients: Vec<f64>,
    /// Inclusive (λ_min, λ_max) in µm.
    pub valid_range: (f64, f64),
    pub temperature_deg_c: f64,
}

impl SellmeierModel {
    pub fn new(
        name: impl Into<String>,
        coefficients: Vec<f64>,
        valid_range: (f64, f64),
        temperature_deg_c: f64,
    ) -> Result<Self> {
        let name = name.into();
        if !coefficients.len().is_multiple_of(2) {
            return Err(Error::MaterialData(format!(
                "`{name}`: coefficient list must hold (B, C) pairs, got {} values",
                coefficients.len()
            )));
        }
        if coefficients.iter().any(|c| !c.is_finite()) {
            return Err(Error::MaterialData(format!("`{name}`: non-finite coefficient")));
        }
        let (lo, hi) = valid_range;
        if !(lo > 0.0 && hi > lo) {
            return Err(Error::MaterialData(format!(
                "`{name}`: invalid range [{lo}, {hi}] µm"
            )));
        }
        // A resonance inside the range would make n² blow up.
        for pair in coefficients.chunks(2) {
            let c = pair[1];
            if pair[0] != 0.0 && c >= lo * lo && c <= hi * hi {
                return Err(Error::MaterialData(format!(
                    "`{name}`: resonance at {} µm lies inside the valid range",
                    c.sqrt()
                )));
            }
        }
        Ok(Self {
            name,
            coefficients,
            valid_range,
            temperature_deg_c,
        })
    }

    /// A model with n ≡ 1.
    pub fn vacuum(valid_range: (f64, f64)) -> Self {
        Self {
            name: "vacuum".into(),
            coefficients: vec![0.0, 0.0],
            valid_range,
            temperature_deg_c: 23.0,
        }
    }

    pub fn contains(&self, wavelength_um: f64) -> bool {
        wavelength_um >= self.valid_range.0 && wavelength_um <= self.valid_range.1
    }

    /// Refractive index at `wavelength_um`.
    pub fn index(&self, wavelength_um: f64) -> Result<f64> {
        Ok(self.permittivity(wavelength_um)?.sqrt())
    }

    /// n² at `wavelength_um`.
    pub fn permittivity(&self, wavelength_um: f64) -> Result<f64> {
        if !self.contains(wavelength_um) {
            return Err(Error::OutOfRange {
                model: self.name.clone(),
                wavelength_um,
                min_um: self.valid_range.0,
                max_um: self.valid_range.1,
            });
        }
        let l2 = wavelength_um * wavelength_um;
        let sum: f64 = self
            .coefficients
            .chunks(2)
            .map(|p| p[0] * l2 / (l2 - p[1]))
            .sum();
        Ok(1.0 + sum)
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct MaterialEntry {
    coefficients: Vec<f64>,
    valid_range_um: [f64; 2],
    temperature_deg_c: f64,
}

/// Named collection of models, ordered by name.
#[derive(Debug, Clone, PartialEq)]
pub struct MaterialCatalog {
    models: BTreeMap<String, SellmeierModel>,
}

impl MaterialCatalog {
    /// Parses the sectioned key-value materials format.
    pub fn parse(text: &str) -> Result<Self> {
        let raw: BTreeMap<String, MaterialEntry> =
            toml::from_str(text).map_err(|e| Error::MaterialData(e.to_string()))?;
        let mut models = BTreeMap::new();
        for (name, entry) in raw {
            let model = SellmeierModel::new(
                name.clone(),
                entry.coefficients,
                (entry.valid_range_um[0], entry.valid_range_um[1]),
                entry.temperature_deg_c,
            )?;
            models.insert(name, model);
        }
        Ok(Self { models })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::parse(&text)
    }

    pub fn bundled() -> Self {
        Self::parse(BUNDLED_MATERIALS).expect("bundled materials file is valid")
    }

    pub fn get(&self, name: &str) -> Result<&SellmeierModel> {
        self.models
            .get(name)
            .ok_or_else(|| Error::UnknownMaterial(name.to_string()))
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.models.keys().map(String::as_str)
    }

    pub fn models(&self) -> impl Iterator<Item = &SellmeierModel> {
        self.models.values()
    }

    /// The layer models a thin-film LN stack needs, resolved once.
    pub fn stack(&self) -> Result<LayerMaterials> {
        Ok(LayerMaterials {
            film_te: self.get(LN_EXTRAORDINARY)?.clone(),
            film_tm: self.get(LN_ORDINARY)?.clone(),
            substrate: self.get(SIO2)?.clone(),
            cladding: self.get(AIR)?.clone(),
        })
    }
}

impl Default for MaterialCatalog {
    fn default() -> Self {
        Self::bundled()
    }
}

/// Every model in the bundled catalog.
pub fn list_materials() -> Vec<SellmeierModel> {
    MaterialCatalog::bundled().models().cloned().collect()
}

/// Materials of an x-cut film stack.
///
/// In x-cut LN the in-plane transverse field (TE) runs along the crystal z
/// axis and sees the extraordinary index; the out-of-plane field (TM) runs
/// along crystal x and sees the ordinary index.
#[derive(Debug, Clone, PartialEq)]
pub struct LayerMaterials {
    pub film_te: SellmeierModel,
    pub film_tm: SellmeierModel,
    pub substrate: SellmeierModel,
    pub cladding: SellmeierModel,
}

impl LayerMaterials {
    pub fn film(&self, pol: crate::Polarization) -> &SellmeierModel {
        match pol {
            crate::Polarization::Te => &self.film_te,
            crate::Polarization::Tm => &self.film_tm,
        }
    }

    /// Layer permittivities at one wavelength for one polarization.
    pub fn permittivities(&self, pol: crate::Polarization, wavelength_um: f64) -> Result<LayerPermittivity> {
        Ok(LayerPermittivity {
            film: self.film(pol).permittivity(wavelength_um)?,
            substrate: self.substrate.permittivity(wavelength_um)?,
            cladding: self.cladding.permittivity(wavelength_um)?,
        })
    }
}

impl Default for LayerMaterials {
    fn default() -> Self {
        MaterialCatalog::bundled().stack().expect("bundled catalog has the stack materials")
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LayerPermittivity {
    pub film: f64,
    pub substrate: f64,
    pub cladding: f64,
}
