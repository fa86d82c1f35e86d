use lnspdc::dispersion::DispersionCurve;
use lnspdc::qpm::{solve_poling_period, QpmCurves, QpmDesign};
use lnspdc::shg::{shg_efficiency, shg_efficiency_from_power, ShgModelInput};
use lnspdc::spectra::{jsi, marginal_signal_spectrum, JsiGrid, JsiGridSpec, PumpEnvelope, PumpShape};
use lnspdc::LayerMaterials;

/// Bulk-LN dispersion with a waveguide-like offset, cheap to build.
fn curve() -> DispersionCurve {
    let m = LayerMaterials::default();
    DispersionCurve::from_fn(0.7, 2.0, 131, |l| m.film_te.index(l).unwrap() - 0.2).unwrap()
}

fn design(c: &DispersionCurve, pump_nm: f64) -> QpmDesign {
    let q = QpmCurves::single(c);
    QpmDesign {
        period_um: solve_poling_period(&q, pump_nm, 2.0 * pump_nm, 1).unwrap(),
        order: 1,
        length_mm: 5.7,
        duty: 0.5,
        pump_nm,
    }
}

fn pump(fwhm_nm: f64) -> PumpEnvelope {
    PumpEnvelope {
        center_nm: 810.6,
        fwhm_nm,
        shape: PumpShape::Gaussian,
    }
}

fn grid(points: usize, half_span_thz: f64) -> JsiGridSpec {
    JsiGridSpec {
        points,
        half_span_thz: Some(half_span_thz),
    }
}

#[test]
fn jsi_is_symmetric_and_peaks_at_degeneracy() {
    let c = curve();
    let d = design(&c, 810.6);
    let j = jsi(&d, &QpmCurves::single(&c), &pump(1.1), &JsiGridSpec::default()).unwrap();
    let n = j.len();
    for s in 0..n {
        for i in 0..n {
            assert_eq!(j.at(s, i), j.at(i, s));
            assert!((0.0..=1.0).contains(&j.at(s, i)));
        }
    }
    let (mut best, mut arg) = (0.0, (0, 0));
    for s in 0..n {
        for i in 0..n {
            if j.at(s, i) > best {
                best = j.at(s, i);
                arg = (s, i);
            }
        }
    }
    assert_eq!(best, 1.0);
    assert!((arg.0 + arg.1).abs_diff(n - 1) <= 1, "{arg:?}");
    assert!((j.at(n / 2, n / 2) - 1.0).abs() < 1e-12);
}

#[test]
fn monochromatic_pump_collapses_onto_antidiagonal() {
    let c = curve();
    let d = design(&c, 810.6);
    let j = jsi(&d, &QpmCurves::single(&c), &pump(1e-4), &grid(101, 20.0)).unwrap();
    let n = j.len();
    for s in 0..n {
        for i in 0..n {
            if s + i != n - 1 {
                assert!(j.at(s, i) < 1e-6, "({s}, {i}) = {}", j.at(s, i));
            }
        }
    }
}

/// −3 dB thickness across the ridge: profile along the main diagonal.
fn ridge_thickness(j: &JsiGrid) -> f64 {
    let n = j.len();
    let diag: Vec<f64> = (0..n).map(|k| j.at(k, k)).collect();
    let peak = diag.iter().copied().fold(0.0, f64::max);
    let above = diag.iter().filter(|&&v| v >= 0.5 * peak).count();
    above as f64 * (j.frequency_thz[1] - j.frequency_thz[0])
}

#[test]
fn wider_pump_never_thins_the_ridge() {
    let c = curve();
    let d = design(&c, 810.6);
    let q = QpmCurves::single(&c);
    let mut last = 0.0;
    for fwhm in [0.5, 1.1, 2.0] {
        let t = ridge_thickness(&jsi(&d, &q, &pump(fwhm), &grid(241, 3.0)).unwrap());
        assert!(t >= last, "{fwhm} nm: {t} < {last}");
        last = t;
    }
}

#[test]
fn marginal_of_separable_jsi_is_its_signal_factor() {
    let f: Vec<f64> = (0..21).map(|k| (-((k as f64 - 10.0) / 4.0).powi(2)).exp()).collect();
    let g: Vec<f64> = (0..21).map(|k| 0.2 + (k as f64 * 0.3).sin().powi(2)).collect();
    let mut intensity = Vec::new();
    for a in &f {
        for b in &g {
            intensity.push(a * b);
        }
    }
    let peak = intensity.iter().copied().fold(0.0, f64::max);
    intensity.iter_mut().for_each(|v| *v /= peak);
    let c = curve();
    let j = JsiGrid {
        frequency_thz: (0..21).map(|k| 180.0 + k as f64).collect(),
        intensity,
        design: design(&c, 810.0),
        pump: pump(1.1),
    };
    let m = marginal_signal_spectrum(&j).unwrap();
    for (a, b) in m.intensity.iter().zip(&f) {
        assert!((a - b).abs() < 1e-12);
    }
}

#[test]
fn marginal_is_symmetric_about_degeneracy() {
    let c = curve();
    let d = design(&c, 810.6);
    let q = QpmCurves::single(&c);
    // Exact mirror symmetry needs a monochromatic pump; a finite pump width
    // samples k_p off centre and tilts the tails slightly.
    let mono = marginal_signal_spectrum(&jsi(&d, &q, &pump(1e-4), &JsiGridSpec::default()).unwrap()).unwrap();
    let n = mono.intensity.len();
    for k in 0..n {
        assert!((mono.intensity[k] - mono.intensity[n - 1 - k]).abs() < 1e-9, "{k}");
    }
    assert!((mono.wavelength_nm[n / 2] - 1621.2).abs() < 1e-6);
    let broad = marginal_signal_spectrum(&jsi(&d, &q, &pump(1.1), &JsiGridSpec::default()).unwrap()).unwrap();
    let total: f64 = broad.intensity.iter().sum();
    let centroid: f64 = broad.frequency_thz.iter().zip(&broad.intensity).map(|(f, v)| f * v).sum::<f64>() / total;
    assert!((centroid - broad.frequency_thz[n / 2]).abs() < 0.02 * broad.fwhm_thz, "{centroid}");
    assert!(broad.half_bandwidth_thz > 0.0 && broad.half_bandwidth_nm > 0.0);
}

#[test]
fn narrow_grid_is_rejected() {
    let c = curve();
    let d = design(&c, 810.6);
    let q = QpmCurves::single(&c);
    let j = jsi(&d, &q, &pump(1.1), &grid(41, 2.0)).unwrap();
    assert!(j.bandwidth_thz().is_err());
    assert!(jsi(&d, &q, &pump(1.1), &grid(41, 200.0)).is_err());
}

fn reference_shg() -> ShgModelInput {
    ShgModelInput {
        d33_pm_per_v: 27.0,
        n_omega: 1.92,
        n_2omega: 2.099,
        lambda_2omega_nm: 810.0,
        a_eff_um2: 1.106,
        zeta: 0.93,
        delta_k_per_m: 0.0,
        length_cm: 0.57,
    }
}

#[test]
fn shg_matches_hand_evaluation() {
    // 8 d²/(ε0 c n_ω² n_2ω λ²) ζ²/A, evaluated separately in SI units.
    let hand = 3384.33946951241;
    let eta = shg_efficiency(&reference_shg()).unwrap();
    assert!((eta - hand).abs() < 1e-9 * hand);
    assert!((eta - 3364.0).abs() < 0.02 * 3364.0);
    assert_eq!(eta, reference_shg().peak_efficiency());
}

#[test]
fn shg_from_measured_powers() {
    let (p1, l) = (1e-3, 0.57);
    let p2 = 9.75 * l * l * p1 * p1;
    assert!((shg_efficiency_from_power(p1, p2, l).unwrap() - 975.0).abs() < 1e-9);
}

#[test]
fn shg_sinc_null_and_area_scaling() {
    let base = reference_shg();
    let peak = shg_efficiency(&base).unwrap();
    // ΔkL/2 = π
    let null = ShgModelInput {
        delta_k_per_m: 2.0 * std::f64::consts::PI / (base.length_cm * 1e-2),
        ..base
    };
    assert!(shg_efficiency(&null).unwrap() < 1e-10 * peak);
    let wide = ShgModelInput {
        a_eff_um2: 2.0 * base.a_eff_um2,
        ..base
    };
    assert!((shg_efficiency(&wide).unwrap() - 0.5 * peak).abs() < 1e-12 * peak);
}

#[test]
fn shg_power_form_limits() {
    assert_eq!(shg_efficiency_from_power(1e-3, 0.0, 0.57).unwrap(), 0.0);
    let a = shg_efficiency_from_power(1e-3, 1e-7, 0.57).unwrap();
    let b = shg_efficiency_from_power(2e-3, 1e-7, 0.57).unwrap();
    assert!((a / b - 4.0).abs() < 1e-12);
}
