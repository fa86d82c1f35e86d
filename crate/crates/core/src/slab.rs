//! Guided modes of a three-layer planar slab (cladding / film / substrate).

use std::f64::consts::PI;

use crate::material::LayerPermittivity;
use crate::Polarization;

/// Effective index of the order-`order` guided slab mode, or `None` below
/// cutoff (including zero thickness).
///
/// The mode condition is written in its phase form,
/// `κt = mπ + atan(ρ_c γ_c/κ) + atan(ρ_s γ_s/κ)`, where ρ = 1 for TE and
/// ε_film/ε_layer for TM. Its left minus right side falls monotonically in
/// n_eff, so bisection over (n_clad_max, n_film) is exact to round-off.
pub fn slab_mode_index(
    eps: LayerPermittivity,
    thickness_um: f64,
    wavelength_um: f64,
    pol: Polarization,
    order: usize,
) -> Option<f64> {
    if thickness_um <= 0.0 {
        return None;
    }
    let k0 = 2.0 * PI / wavelength_um;
    let eps_out = eps.cladding.max(eps.substrate);
    if eps.film <= eps_out {
        return None;
    }
    let (rho_c, rho_s) = match pol {
        Polarization::Te => (1.0, 1.0),
        Polarization::Tm => (eps.film / eps.cladding, eps.film / eps.substrate),
    };
    let phase = |n: f64| {
        let n2 = n * n;
        let kappa = k0 * (eps.film - n2).max(0.0).sqrt();
        let gc = k0 * (n2 - eps.cladding).max(0.0).sqrt();
        let gs = k0 * (n2 - eps.substrate).max(0.0).sqrt();
        kappa * thickness_um
            - (rho_c * gc).atan2(kappa)
            - (rho_s * gs).atan2(kappa)
            - order as f64 * PI
    };
    let mut lo = eps_out.sqrt();
    let mut hi = eps.film.sqrt();
    if phase(lo) <= 0.0 {
        return None;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if phase(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Some(0.5 * (lo + hi))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn stack() -> LayerPermittivity {
        LayerPermittivity {
            film: 2.2f64.powi(2),
            substrate: 1.45f64.powi(2),
            cladding: 1.0,
        }
    }

    #[test]
    fn bracketed_between_cladding_and_film() {
        for pol in [Polarization::Te, Polarization::Tm] {
            let n = slab_mode_index(stack(), 0.6, 1.55, pol, 0).unwrap();
            assert!(n > 1.45 && n < 2.2, "{n}");
        }
    }

    #[test]
    fn te_above_tm() {
        let te = slab_mode_index(stack(), 0.4, 1.55, Polarization::Te, 0).unwrap();
        let tm = slab_mode_index(stack(), 0.4, 1.55, Polarization::Tm, 0).unwrap();
        assert!(te > tm);
    }

    #[test]
    fn zero_thickness_has_no_mode() {
        assert!(slab_mode_index(stack(), 0.0, 1.55, Polarization::Te, 0).is_none());
    }

    #[test]
    fn thin_asymmetric_slab_cuts_off() {
        assert!(slab_mode_index(stack(), 0.02, 1.55, Polarization::Te, 0).is_none());
        assert!(slab_mode_index(stack(), 0.6, 1.55, Polarization::Te, 3).is_none());
    }

    #[test]
    fn thicker_slab_has_higher_index() {
        let mut prev = 0.0;
        for t in [0.2, 0.3, 0.45, 0.6, 1.0] {
            let n = slab_mode_index(stack(), t, 1.55, Polarization::Te, 0).unwrap();
            assert!(n > prev);
            prev = n;
        }
    }

    #[test]
    fn symmetric_slab_satisfies_even_mode_equation() {
        // Symmetric TE: tan(κ t/2) = γ/κ.
        let eps = LayerPermittivity { film: 3.0, substrate: 2.0, cladding: 2.0 };
        let (t, l) = (0.8, 1.3);
        let n = slab_mode_index(eps, t, l, Polarization::Te, 0).unwrap();
        let k0 = 2.0 * PI / l;
        let kappa = k0 * (3.0 - n * n).sqrt();
        let gamma = k0 * (n * n - 2.0).sqrt();
        assert!(((kappa * t / 2.0).tan() - gamma / kappa).abs() < 1e-9);
    }
}
