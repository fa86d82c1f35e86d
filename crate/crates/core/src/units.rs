//! Unit conversions. Spectral quantities are carried as angular frequency in
//! rad/fs; wavelengths appear only at the edges, in µm or nm.

use std::f64::consts::PI;

/// Speed of light in µm/fs.
pub const C_UM_PER_FS: f64 = 0.299_792_458;
/// Speed of light in m/s.
pub const C_M_PER_S: f64 = 299_792_458.0;
/// Vacuum permittivity, F/m.
pub const EPSILON_0: f64 = 8.854_187_812_8e-12;

pub fn omega_from_um(wavelength_um: f64) -> f64 {
    2.0 * PI * C_UM_PER_FS / wavelength_um
}

pub fn um_from_omega(omega: f64) -> f64 {
    2.0 * PI * C_UM_PER_FS / omega
}

pub fn omega_from_nm(wavelength_nm: f64) -> f64 {
    omega_from_um(wavelength_nm * 1e-3)
}

pub fn nm_from_omega(omega: f64) -> f64 {
    um_from_omega(omega) * 1e3
}

/// rad/fs → THz (cycles).
pub fn thz_from_omega(omega: f64) -> f64 {
    omega * 1e3 / (2.0 * PI)
}

pub fn omega_from_thz(thz: f64) -> f64 {
    thz * 2.0 * PI * 1e-3
}

/// Frequency width of a small wavelength interval centred at `center_nm`.
pub fn thz_width_from_nm(center_nm: f64, width_nm: f64) -> f64 {
    let lo = center_nm - 0.5 * width_nm;
    let hi = center_nm + 0.5 * width_nm;
    thz_from_omega(omega_from_nm(lo) - omega_from_nm(hi))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trips() {
        for l in [0.81, 1.62, 2.0] {
            assert!((um_from_omega(omega_from_um(l)) - l).abs() < 1e-14);
        }
        assert!((thz_from_omega(omega_from_thz(28.0)) - 28.0).abs() < 1e-12);
    }

    #[test]
    fn telecom_frequency() {
        // 1620 nm ↔ 185.06 THz
        let f = thz_from_omega(omega_from_nm(1620.0));
        assert!((f - 299_792.458 / 1620.0).abs() < 1e-9);
    }

    #[test]
    fn pump_linewidth_in_thz() {
        // 1.1 nm at 810.6 nm is about half a terahertz.
        let w = thz_width_from_nm(810.6, 1.1);
        assert!((w - 299_792.458 * 1.1 / (810.6f64.powi(2) - 0.25 * 1.21)).abs() < 1e-9);
    }
}
