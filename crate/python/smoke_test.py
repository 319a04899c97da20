#!/usr/bin/env python3
"""Smoke test for the ptlms_py extension module.

Builds are expected from cargo:

    cargo build -p ptlms-python --release

The script locates the compiled cdylib, stages it under the importable name
ptlms_py.so, and exercises the main types and operations end to end.
"""

import math
import shutil
import sys
import tempfile
from pathlib import Path

REPO = Path(__file__).resolve().parent.parent


def stage_module() -> None:
    candidates = [
        REPO / "target" / "release" / "libptlms_py.so",
        REPO / "target" / "debug" / "libptlms_py.so",
    ]
    built = next((p for p in candidates if p.exists()), None)
    if built is None:
        sys.exit(
            "ptlms_py cdylib not found; run `cargo build -p ptlms-python --release` first"
        )
    stage = Path(tempfile.mkdtemp(prefix="ptlms_py_"))
    shutil.copy2(built, stage / "ptlms_py.so")
    sys.path.insert(0, str(stage))


def close(a: float, b: float, tol: float) -> bool:
    return abs(a - b) <= tol


def main() -> None:
    stage_module()
    import ptlms_py as pt

    # Gain rules: normalization and the activation table.
    plms = pt.GainRule.plms(rho=0.01, delta=0.01)
    g = pt.gain_vector([1.0, 0.0, 0.0, 0.0], plms)
    assert close(sum(g), 4.0, 1e-10), f"PLMS gains must sum to L, got {sum(g)}"
    assert close(g[0], 3.88350, 1e-4), f"unexpected active-tap gain {g[0]}"
    assert all(x > 0 for x in g)
    print(f"ok gain_vector: plms gains {['%.4f' % x for x in g]} sum to L")

    lms = pt.GainRule.lms()
    assert pt.gain_vector([3.0, -2.0], lms) == [1.0, 1.0]
    assert pt.activation(0.5, plms) == 0.5
    mulaw = pt.GainRule.mu_law(epsilon=1000.0)
    assert pt.activation(0.0, mulaw) == 0.0
    assert close(pt.activation(1.0, mulaw), 1.0, 1e-12)
    iplms = pt.GainRule.iplms(alpha=0.0, delta_i=0.01)
    gi = pt.gain_vector([0.0, 0.0], iplms)
    assert gi == [0.25, 0.25], f"IPLMS zero-weight gains {gi}"
    print("ok activation/iplms: table values match")

    # Filter state: a few steps identify a one-tap system.
    state = pt.FilterState(2, 0.2, lms)
    for n in range(200):
        u = [math.sin(0.7 * n) + 0.3, math.cos(1.3 * n)]
        d = 2.0 * u[0] - 0.5 * u[1]
        state.step(u, d)
    w = state.weights
    assert close(w[0], 2.0, 0.05) and close(w[1], -0.5, 0.05), f"weights {w}"
    assert state.iteration == 200
    print(f"ok FilterState: converged to {['%.3f' % x for x in w]}")

    # Seeded runs are deterministic.
    w_opt = pt.generate_sparse_system(32, 2, seed=7)
    assert sum(1 for x in w_opt if x == 0.0) == 30
    dev_a = pt.run_identification(w_opt, plms, 0.01, 500, seed=11)
    dev_b = pt.run_identification(w_opt, plms, 0.01, 500, seed=11)
    assert dev_a == dev_b
    norm2 = sum(x * x for x in w_opt)
    assert close(dev_a[0], norm2, 1e-12)
    print("ok run_identification: deterministic under a fixed seed")

    # Theory vs simulation, small but end to end.
    mu = 0.005
    model = pt.TheoryModel(w_opt, plms, mu, sigma_u2=1.0, sigma_v2=0.01)
    mu_max, cd, h = model.ms_stability_range()
    assert 0.0 < mu < mu_max, f"mu {mu} outside predicted stable range {mu_max}"
    rho_f = model.spectral_radius_f()
    assert rho_f < 1.0
    theory_db = model.steady_state_msd_db()
    msd_db, averaged, diverged = pt.run_ensemble(
        w_opt, plms, mu, n_iters=20_000, n_runs=50, seed=3, regressor="independent"
    )
    assert averaged == 50 and diverged == 0
    sim_db = pt.empirical_steady_state_msd(msd_db, tail_fraction=0.1)
    assert close(sim_db, theory_db, 1.5), (
        f"steady-state mismatch: sim {sim_db:.2f} dB vs theory {theory_db:.2f} dB"
    )
    print(
        f"ok theory vs simulation: {sim_db:.2f} dB vs {theory_db:.2f} dB "
        f"(rho(F)={rho_f:.4f}, mu_max={mu_max:.4f})"
    )

    # Scalar sanity: L = 1 standard LMS has the classical 2/3 bound at unit
    # input variance.
    scalar = pt.TheoryModel([1.0], lms, 0.1, sigma_u2=1.0, sigma_v2=0.01)
    mu_max, cd, h = scalar.ms_stability_range()
    assert close(mu_max, 2.0 / 3.0, 1e-9), f"scalar bound {mu_max}"
    assert math.isinf(h)
    mean_bound, mean_sharp = scalar.mean_stability_bound()
    assert close(mean_bound, 2.0, 1e-12)
    print(f"ok scalar theory: ms bound {mu_max:.6f}, mean bound {mean_bound:.1f}")

    # Transient prediction plateaus at the closed-form steady state.
    curve = model.transient_curve(w_opt, 8000)
    plateau = curve[-1]
    target = model.steady_state_msd()
    assert close(plateau, target, 0.01 * target)
    print("ok transient_curve: plateau equals the closed-form fixed point")

    print("smoke test passed")


if __name__ == "__main__":
    main()
