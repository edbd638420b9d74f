#!/usr/bin/env python3
"""Smoke test for the `gatom` extension module.

Builds nothing itself: run `cargo build -p gatom-py` (or `--release`) first,
then `python3 python/smoke_test.py`. The script copies the compiled cdylib
next to a temp directory under the name Python expects and imports it.
"""

import math
import shutil
import sys
import tempfile
from pathlib import Path

REPO = Path(__file__).resolve().parent.parent


def load_module():
    candidates = [
        REPO / "target" / "release" / "libgatom.so",
        REPO / "target" / "debug" / "libgatom.so",
    ]
    built = [p for p in candidates if p.exists()]
    if not built:
        sys.exit("libgatom.so not found; run `cargo build -p gatom-py` first")
    newest = max(built, key=lambda p: p.stat().st_mtime)
    staging = Path(tempfile.mkdtemp(prefix="gatom-py-"))
    shutil.copy2(newest, staging / "gatom.so")
    sys.path.insert(0, str(staging))
    import gatom

    return gatom


def approx(a, b, tol):
    return abs(a - b) <= tol


def main():
    gatom = load_module()
    checks = 0

    params = gatom.SystemParams()  # resonant set, N = 4
    assert params.n == 4 and params.lam == 0.2 and params.g == 0.5
    checks += 1

    # dispersion round trip at band center
    e = gatom.dispersion(params, math.pi / 2)
    assert approx(e, 20.0, 1e-12)
    assert approx(gatom.wavevector_of_energy(params, e), math.pi / 2, 1e-12)
    checks += 1

    # phonon-induced transparency at resonance
    assert gatom.reflection_analytic(params, 0.0) <= 1e-12
    assert gatom.reflection_exact(params, 0.0) <= 1e-12
    checks += 1

    # solver agrees with the closed form away from resonance
    for delta in (-0.73, -0.2, 0.11, 0.5, 1.4):
        r_closed = gatom.reflection_analytic(params, delta)
        r_solved = gatom.reflection_exact(params, delta)
        assert approx(r_closed, r_solved, 1e-10), (delta, r_closed, r_solved)
    checks += 1

    # amplitudes conserve flux
    amps = gatom.scattering_amplitudes(params, 0.37)
    assert amps["unitarity_residual"] <= 1e-10
    assert approx(amps["reflection"] + amps["transmission"], 1.0, 1e-10)
    checks += 1

    # spectrum sweep and features: two Rabi peaks at resonance
    deltas, values, skipped = gatom.sweep(params, "exact", -1.0, 1.0, 1001)
    assert len(deltas) == len(values) == 1001 and not skipped
    assert all(-1e-12 <= v <= 1.0 + 1e-12 for v in values)
    features = gatom.spectrum_features(params)
    assert features["n_peaks"] == 2
    assert features["central_dip_fwhm"] is not None
    checks += 1

    # dispersive regime: shifts, effective spectrum, projection oracle
    detuned = gatom.SystemParams(omega_0=18.0)
    sw = gatom.sw_model(detuned)
    assert approx(sw["delta_c"], -2.0, 1e-14)
    assert approx(sw["phonon_wg_coupling"], -0.05, 1e-14)
    assert gatom.sw_compare(detuned) <= 0.02
    assert gatom.verify_sw_projection(detuned) <= 1e-12
    r_eff = gatom.reflection_effective(detuned, 0.3)
    r_exact = gatom.reflection_exact(detuned, 0.3)
    assert approx(r_eff, r_exact, 0.02)
    checks += 1

    # resonance guard surfaces as ValueError
    try:
        gatom.sw_model(params)
    except ValueError:
        pass
    else:
        raise AssertionError("sw_model should refuse resonant parameters")
    checks += 1

    # quick time-domain run against the steady-state rate
    out = gatom.propagate_wavepacket(
        params, delta=0.5, chain_length=1600, sigma_x=25.0, x0=-160, max_time=1000.0
    )
    assert approx(out["R_wp"] + out["T_wp"] + out["leak"], 1.0, 1e-8)
    assert out["norm_drift"] <= 1e-10
    assert approx(out["R_wp"], gatom.reflection_analytic(params, 0.5), 0.02)
    checks += 1

    print(f"smoke test OK ({checks} check groups)")


if __name__ == "__main__":
    main()
