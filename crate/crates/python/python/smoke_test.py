"""Smoke test for the lnspdc extension module.

Build and install first:  maturin develop -m crates/python/Cargo.toml
"""

import math

import lnspdc


def main():
    geometry = lnspdc.reference_geometry()
    materials = lnspdc.Materials()
    assert 2.1 < materials.film_te(1.55) < 2.2

    solver = lnspdc.ModeSolver(geometry, materials, 1.62, core_step_nm=40.0)
    te = solver.fundamental_te(1.62)
    assert te["polarization"] == "te" and te["guided"]
    assert abs(te["n_eff"] - 1.92) < 0.03, te
    print(f"n_eff(1620) = {te['n_eff']:.4f}, A_eff = {te['a_eff_um2']:.3f} um^2")

    curve = lnspdc.DispersionCurve.solve(geometry, materials, 0.75, 1.9, step_nm=20.0, core_step_nm=40.0)
    period = curve.poling_period(810.0, 1620.0)
    assert 4.2 < period < 4.8, period
    design = {"period_um": period, "order": 1, "length_mm": 5.7, "duty": 0.5, "pump_nm": 810.0}
    bw = curve.phase_matching_bandwidth(design)
    print(f"period = {period:.4f} um, sinc-null bandwidth = {bw['width_thz']:.1f} THz")

    eta = lnspdc.shg_eta({
        "d33_pm_per_v": 27.0, "n_omega": 1.92, "n_2omega": 2.099, "lambda_2omega_nm": 810.0,
        "a_eff_um2": 1.106, "zeta": 0.93, "length_cm": 0.57, "delta_k_per_m": 0.0,
    })
    assert abs(eta / 3364.0 - 1.0) < 0.02, eta

    source = {
        "pair_rate_hz": 1e5, "duration_s": 1.0, "eta_s": 0.1, "eta_i": 0.1,
        "dark_s_hz": 100.0, "dark_i_hz": 100.0, "jitter_sigma_ps": 40.0,
        "splitter": True, "seed": 5,
    }
    stream = lnspdc.TagStream.simulate(source)
    again = lnspdc.TagStream.from_bytes(stream.to_bytes())
    assert len(again) == len(stream) and again.counts_per_channel() == stream.counts_per_channel()
    report = stream.analyze()
    assert abs(report["pcr_hz"] - 1e5) < 3 * report["pcr_sigma_hz"] + 0.05e5, report["pcr_hz"]
    assert report["g2"]["g2"] < 0.1
    assert math.isfinite(lnspdc.car_closed_form(1e5, 0.1, 0.1, 1e4, 1e4, 1000.0))
    print(f"PCR = {report['pcr_hz']:.0f} Hz, CAR = {report['car']['car']:.0f}, g2 = {report['g2']['g2']:.4f}")
    print("smoke test passed")


if __name__ == "__main__":
    main()
