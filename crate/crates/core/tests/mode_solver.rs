use std::f64::consts::PI;

use lnspdc::material::{MaterialCatalog, SIO2};
use lnspdc::mode::{leakage_margin, mode_overlap, solve_modes, ModeSolver};
use lnspdc::{GridSpec, LayerMaterials, Polarization, WaveguideGeometry};

/// Fundamental mode of a three-layer slab from the transverse resonance
/// condition κh = atan(r_c γ_c/κ) + atan(r_s γ_s/κ), found by scanning and
/// bisection. r = 1 for TE, (n_f/n)² for TM.
fn slab_oracle(n_f: f64, n_s: f64, n_c: f64, h: f64, lambda: f64, tm: bool) -> Option<f64> {
    let k0 = 2.0 * PI / lambda;
    let g = |n: f64| {
        let kappa = k0 * (n_f * n_f - n * n).sqrt();
        let gs = k0 * (n * n - n_s * n_s).sqrt();
        let gc = k0 * (n * n - n_c * n_c).sqrt();
        let (rs, rc) = if tm {
            ((n_f / n_s).powi(2), (n_f / n_c).powi(2))
        } else {
            (1.0, 1.0)
        };
        kappa * h - (rs * gs / kappa).atan() - (rc * gc / kappa).atan()
    };
    let lo = n_s.max(n_c) + 1e-12;
    let hi = n_f - 1e-12;
    // g decreases with n; a root exists only if g(lo) > 0.
    if g(lo) <= 0.0 {
        return None;
    }
    let (mut a, mut b) = (lo, hi);
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        if g(m) > 0.0 {
            a = m;
        } else {
            b = m;
        }
    }
    Some(0.5 * (a + b))
}

fn fundamental_te(g: &WaveguideGeometry, lambda: f64, spec: &GridSpec) -> f64 {
    let s = ModeSolver::new(g, &LayerMaterials::default(), spec, lambda).unwrap();
    s.fundamental_te(lambda).unwrap().n_eff
}

#[test]
fn wide_full_etch_ridge_approaches_symmetric_slab() {
    let m = LayerMaterials {
        cladding: MaterialCatalog::bundled().get(SIO2).unwrap().clone(),
        ..LayerMaterials::default()
    };
    let lambda = 1.55;
    let g = WaveguideGeometry {
        top_width_nm: 50_000.0,
        etch_depth_nm: 600.0,
        film_thickness_nm: 600.0,
        sidewall_angle_deg: 60.0,
        oxide_thickness_nm: 2000.0,
    };
    let n_f = m.film_te.index(lambda).unwrap();
    let n_s = m.substrate.index(lambda).unwrap();
    let oracle = slab_oracle(n_f, n_s, n_s, 0.6, lambda, false).unwrap();
    let search = solve_modes(&g, lambda, 1, &GridSpec::with_core_step(40.0), &m).unwrap();
    let te = search.fundamental_te().unwrap();
    assert!((te.n_eff - oracle).abs() < 1.5e-3, "{} vs {}", te.n_eff, oracle);
}

#[test]
fn reference_indices_and_areas() {
    let g = WaveguideGeometry::REFERENCE;
    let m = LayerMaterials::default();
    let solver = ModeSolver::new(&g, &m, &GridSpec::default(), 1.62).unwrap();
    let p = solver.fundamental_te(0.81).unwrap();
    let s = solver.fundamental_te(1.62).unwrap();
    assert!(p.guided && s.guided);
    assert!((p.n_eff - 2.099).abs() < 0.03, "{}", p.n_eff);
    assert!((s.n_eff - 1.92).abs() < 0.03, "{}", s.n_eff);
    assert!((p.a_eff_um2 - 0.8).abs() < 0.15, "{}", p.a_eff_um2);
    assert!((s.a_eff_um2 - 1.3).abs() < 0.2, "{}", s.a_eff_um2);
    let ov = mode_overlap(&p, &s).unwrap();
    assert_eq!(ov, mode_overlap(&s, &p).unwrap());
    assert!((ov - 0.93).abs() < 0.04, "{ov}");
    assert!(s.edge_ratio < 1e-4, "{}", s.edge_ratio);
}

#[test]
fn guided_modes_are_bracketed() {
    let g = WaveguideGeometry::REFERENCE;
    let m = LayerMaterials::default();
    for lambda in [0.81, 1.62] {
        let search = solve_modes(&g, lambda, 3, &GridSpec::with_core_step(40.0), &m).unwrap();
        assert!(!search.modes.is_empty());
        assert!(search.modes.windows(2).all(|w| w[0].n_eff >= w[1].n_eff));
        for mode in &search.modes {
            let eps = m.permittivities(mode.polarization, lambda).unwrap();
            let slab = slab_oracle(
                eps.film.sqrt(),
                eps.substrate.sqrt(),
                eps.cladding.sqrt(),
                g.slab_um(),
                lambda,
                mode.polarization == Polarization::Tm,
            )
            .unwrap_or(eps.substrate.sqrt());
            assert!(mode.n_eff > slab && mode.n_eff < eps.film.sqrt());
            let norm: f64 = mode
                .field
                .values
                .iter()
                .zip(mode.field.grid.cell_areas())
                .map(|(v, a)| v * v * a)
                .sum();
            assert!((norm - 1.0).abs() < 1e-9);
        }
    }
}

#[test]
fn no_guided_mode_gives_empty_list_with_diagnostic() {
    // A narrow, barely etched ridge at long wavelength sits below the slab.
    let g = WaveguideGeometry {
        top_width_nm: 400.0,
        etch_depth_nm: 20.0,
        ..WaveguideGeometry::REFERENCE
    };
    let search = solve_modes(&g, 1.62, 1, &GridSpec::with_core_step(20.0), &LayerMaterials::default()).unwrap();
    assert!(search.modes.is_empty());
    assert!(search.diagnostic.unwrap().contains("no guided mode"));
}

#[test]
fn grid_refinement_converges() {
    let g = WaveguideGeometry::REFERENCE;
    let n: Vec<f64> = [40.0, 20.0, 10.0]
        .iter()
        .map(|&s| fundamental_te(&g, 1.62, &GridSpec::with_core_step(s)))
        .collect();
    let d1 = (n[1] - n[0]).abs();
    let d2 = (n[2] - n[1]).abs();
    assert!(d2 < d1, "{n:?}");
    // Second-order Richardson estimates from both pairs agree.
    let r1 = n[1] + (n[1] - n[0]) / 3.0;
    let r2 = n[2] + (n[2] - n[1]) / 3.0;
    assert!((r1 - r2).abs() < 1e-4, "{r1} {r2}");
}

#[test]
fn wider_ridges_never_lower_the_index() {
    let spec = GridSpec::with_core_step(40.0);
    let mut last = 0.0;
    for w in [1200.0, 1500.0, 1800.0, 2100.0, 2400.0] {
        let g = WaveguideGeometry {
            top_width_nm: w,
            ..WaveguideGeometry::REFERENCE
        };
        let n = fundamental_te(&g, 1.62, &spec);
        assert!(n >= last, "w = {w}: {n} < {last}");
        last = n;
    }
}

#[test]
fn leakage_margin_reference_and_limits() {
    let m = LayerMaterials::default();
    let spec = GridSpec::default();
    let lm = leakage_margin(&WaveguideGeometry::REFERENCE, 0.81, &spec, &m).unwrap();
    assert!(lm.margin > 0.0);
    assert!((lm.te_ridge - 2.099).abs() < 0.01);
    assert!((lm.tm_slab_etched.unwrap() - 2.091).abs() < 0.01);
    assert!(lm.tm_slab_full.unwrap() > lm.tm_slab_etched.unwrap());

    let full = WaveguideGeometry {
        etch_depth_nm: 600.0,
        ..WaveguideGeometry::REFERENCE
    };
    let lf = leakage_margin(&full, 0.81, &GridSpec::with_core_step(40.0), &m).unwrap();
    assert!(lf.against_cutoff && lf.margin > 0.5);

    // Vanishing etch: ridge → slab of full thickness on both sides.
    let shallow = WaveguideGeometry {
        etch_depth_nm: 2.0,
        ..WaveguideGeometry::REFERENCE
    };
    let ls = leakage_margin(&shallow, 0.81, &GridSpec::with_core_step(20.0), &m).unwrap();
    let te = m.permittivities(Polarization::Te, 0.81).unwrap();
    let tm = m.permittivities(Polarization::Tm, 0.81).unwrap();
    let n_te = slab_oracle(te.film.sqrt(), te.substrate.sqrt(), te.cladding.sqrt(), 0.6, 0.81, false).unwrap();
    let n_tm = slab_oracle(tm.film.sqrt(), tm.substrate.sqrt(), tm.cladding.sqrt(), 0.598, 0.81, true).unwrap();
    assert!((ls.margin - (n_te - n_tm)).abs() < 3e-3, "{} vs {}", ls.margin, n_te - n_tm);
    assert!(ls.margin < lm.margin);
}
