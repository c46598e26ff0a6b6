#!/usr/bin/env python3
"""Smoke test for the slowlight Python module.

Builds nothing itself: run `cargo build -p slowlight-py` first, then
`python3 python/smoke_test.py`. The script copies the freshest cdylib into
a temporary directory under the importable name and drives the bindings
end to end.
"""

import math
import shutil
import sys
import tempfile
from pathlib import Path

REPO = Path(__file__).resolve().parent.parent


def import_slowlight(staging: Path):
    candidates = [
        REPO / "target" / profile / "libslowlight.so"
        for profile in ("debug", "release")
    ]
    built = [p for p in candidates if p.exists()]
    if not built:
        sys.exit("no libslowlight.so found; run `cargo build -p slowlight-py` first")
    freshest = max(built, key=lambda p: p.stat().st_mtime)
    shutil.copy2(freshest, staging / "slowlight.so")
    sys.path.insert(0, str(staging))
    import slowlight

    return slowlight


def check_params(sl):
    params = sl.Params()
    assert params.nu0 == 4.5, params.nu0
    assert params.eps0 == 3.0
    assert params.omega0 == 3.0
    assert params.k == 0.0625, params.k
    assert params.k_constrained

    spelled = sl.Params(omega0=3.0)
    assert spelled.nu0 == 4.5

    try:
        sl.Params(nu0=4.5, omega0=2.0)
    except ValueError:
        pass
    else:
        raise AssertionError("conflicting coupling spellings must raise ValueError")

    override = sl.Params(k=0.125)
    assert override.k == 0.125 and not override.k_constrained
    print("params: ok")


def check_soliton(sl):
    params = sl.Params()
    flat = sl.Profile.constant(-1.0)
    assert flat.m(0.7) == -1.0 and flat.slope(0.7) == 0.0
    assert abs(flat.control(3.0, 0.0) - 3.0) < 1e-12

    sol = sl.Soliton(params, flat, phi0=0.75)
    assert abs(sol.group_velocity(0.5) - 2.0) < 1e-12
    assert "/" in sol.convention

    # The envelope center rides zeta = 2*tau + 1; at the center the probe
    # peaks at 2*eps0/sqrt(m^2 + 1).
    omega_a, omega_b = sol.fields(1.0, 0.0)
    assert abs(abs(omega_a) - 6.0 / math.sqrt(2.0)) < 1e-12, omega_a
    assert omega_a.imag == 0.0 and omega_b.imag == 0.0

    psi1, psi2, psi3 = sol.atoms(1.0, 0.0)
    norm = abs(psi1) ** 2 + abs(psi2) ** 2 + abs(psi3) ** 2
    assert abs(norm - 1.0) < 1e-12, norm
    lock = params.nu0 * abs(psi3) ** 2 - 2.0 * params.k * abs(omega_a) ** 2
    assert abs(lock) < 1e-12, lock

    amps = sol.probe_amplitude_grid(-1.0, 1.0, 21, 4.0, 9)
    assert len(amps) == 9 and len(amps[0]) == 21
    peak = max(max(row) for row in amps)
    assert abs(peak - 6.0 / math.sqrt(2.0)) < 1e-6, peak
    print("soliton: ok")


def check_stopping(sl):
    params = sl.Params()
    ramp = sl.Profile.exponential(1.0)
    report = sl.Soliton(params, ramp, phi0=0.75).stopping_distance()
    assert abs(report["zeta_stop"] - 2.0 * math.log(2.0)) < 1e-9, report
    assert not report["truncated"]
    print("stopping: ok")


def check_matching(sl):
    roots = sl.match_constant_control(0.3, 3.0)
    assert roots["kind"] == "pair"
    assert abs(roots["eit"] * roots["other"] - 1.0) < 1e-9
    assert abs(roots["eit"] + 10.0 + math.sqrt(99.0)) < 1e-9, roots

    params = sl.Params()
    v = 1.0 / (4.0 * params.k * (roots["eit"] ** 2 + 1.0))
    assert abs(v - 0.01) / 0.01 < 0.003, v

    profile = sl.Profile.constant_control(0.3, 3.0, branch="eit")
    assert abs(profile.m(0.0) - roots["eit"]) < 1e-12
    print("matching: ok")


def check_reconstruction(sl):
    taus = [-1.0 + 0.1 * i for i in range(41)]
    omegas = [2.4 - 0.05 * (t + 1.0) for t in taus]
    profile = sl.Profile.from_control_samples(-1.0, 0.1, omegas, -2.0, 3.0)
    for tau in (0.0, 1.5, 2.9):
        drive = profile.control(3.0, tau)
        target = 2.4 - 0.05 * (tau + 1.0)
        assert abs(drive - target) < 1e-4, (tau, drive, target)
    print("reconstruction: ok")


def check_run(sl, staging: Path):
    config = "\n".join(
        [
            'mode = "analytic"',
            'label = "python-smoke"',
            "[profile]",
            'kind = "exponential"',
            "alpha = 1.0",
            "[soliton]",
            "phi0 = 2.0",
            "[grid]",
            "tau-min = -3.0",
            "tau-max = 3.0",
            "n-tau = 81",
            "zeta-max = 4.0",
            "n-zeta = 61",
            "",
        ]
    )
    canonical = sl.canonical_config(config)
    assert sl.canonical_config(canonical) == canonical

    out_dir = staging / "run"
    summary = sl.run(config, str(out_dir))
    assert summary["mode"] == "analytic"
    assert summary["label"] == "python-smoke"
    assert summary["metrics"]["k"] == 0.0625
    listed = sorted(summary["files"])
    on_disk = sorted(p.name for p in out_dir.iterdir())
    assert listed == on_disk, (listed, on_disk)
    assert "manifest.txt" in listed and "omega_a.bin" in listed

    try:
        sl.run("mode = \"analytic\"\nbogus = 1\n", str(staging / "never"))
    except ValueError as e:
        assert "bogus" in str(e)
    else:
        raise AssertionError("unknown config keys must raise ValueError")
    assert not (staging / "never").exists()
    print("run: ok")


def main():
    with tempfile.TemporaryDirectory() as tmp:
        staging = Path(tmp)
        sl = import_slowlight(staging)
        check_params(sl)
        check_soliton(sl)
        check_stopping(sl)
        check_matching(sl)
        check_reconstruction(sl)
        check_run(sl, staging)
    print("smoke test passed")


if __name__ == "__main__":
    main()
