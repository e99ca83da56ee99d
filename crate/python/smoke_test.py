#!/usr/bin/env python3
"""Smoke test for the tip_py extension module.

Builds the extension with cargo if needed, copies the shared library
next to this script, imports it, and exercises the main surface.

Usage: python3 python/smoke_test.py
"""

import math
import os
import shutil
import subprocess
import sys
import tempfile

HERE = os.path.dirname(os.path.abspath(__file__))
ROOT = os.path.dirname(HERE)

PASSED = 0


def check(name, ok, detail=""):
    global PASSED
    status = "ok" if ok else "FAIL"
    print(f"  {status}: {name}" + (f" ({detail})" if detail else ""))
    if not ok:
        sys.exit(f"smoke test failed at: {name}")
    PASSED += 1


def ensure_module():
    target = os.path.join(HERE, "tip_py.so")
    lib = os.path.join(ROOT, "target", "release", "libtip_py.so")
    if not os.path.exists(lib) or not os.path.exists(target):
        print("building tip-python (cargo build --release -p tip-python)...")
        subprocess.run(
            ["cargo", "build", "--release", "-p", "tip-python"],
            cwd=ROOT,
            check=True,
        )
        shutil.copyfile(lib, target)
    sys.path.insert(0, HERE)


def main():
    ensure_module()
    import tip_py

    print("special functions")
    check("log_gamma(5) = ln 24", abs(tip_py.log_gamma(5.0) - math.log(24.0)) < 1e-10)
    check("log_gamma(0.5) = ln sqrt(pi)", abs(tip_py.log_gamma(0.5) - 0.5723649429247001) < 1e-10)
    check("digamma(1) = -gamma", abs(tip_py.digamma(1.0) + 0.5772156649015329) < 1e-10)
    check("uniform log-density is zero", abs(tip_py.log_beta_pdf(0.3, 1.0, 1.0)) < 1e-12)
    try:
        tip_py.log_gamma(-1.0)
        check("log_gamma rejects negatives", False)
    except ValueError:
        check("log_gamma rejects negatives", True)

    print("trust updates")
    params = tip_py.TrustParams(alpha0=1.0, beta0=1.0, s=2.0, f=3.0, s_hat=2.0, f_hat=4.0)
    e = tip_py.ExperiencePair(1.0, 1.0)
    d = e.direct_update(params, 0.9)
    check("direct update", abs(d.alpha - 2.8) < 1e-12 and abs(d.beta - 1.3) < 1e-12,
          f"alpha={d.alpha}, beta={d.beta}")
    i = e.indirect_update(params, own_prev_trust=0.5, peer_trust=0.8, trust_in_peer=0.5)
    check("indirect update feeds alpha", abs(i.alpha - 1.3) < 1e-12 and i.beta == 1.0)
    i = e.indirect_update(params, own_prev_trust=0.5, peer_trust=0.2, trust_in_peer=0.5)
    check("indirect update feeds beta", i.alpha == 1.0 and abs(i.beta - 1.6) < 1e-12)
    check("expected trust", abs(tip_py.expected_trust(3.0, 1.0) - 0.75) < 1e-12)

    print("sampling")
    draws = tip_py.sample_beta(9.0, 1.0, seed=7, n=20000)
    mean = sum(draws) / len(draws)
    check("Beta(9,1) sample mean near 0.9", abs(mean - 0.9) < 0.01, f"mean={mean:.4f}")
    check("seeded sampling is deterministic",
          tip_py.sample_beta(2.0, 3.0, seed=11, n=5) == tip_py.sample_beta(2.0, 3.0, seed=11, n=5))

    print("equilibrium")
    ones = tip_py.TrustParams()
    eq = tip_py.solve_equilibrium(ones, ones, m=1, n=1, reliability=0.7)
    check("symmetric equilibrium at reliability", abs(eq["t_x"] - 0.7) < 1e-8 and abs(eq["t_y"] - 0.7) < 1e-8,
          f"t_x={eq['t_x']:.9f}")
    check("equilibrium residual tiny", eq["residual"] < 1e-10)
    grid = tip_py.solve_equilibrium(ones, ones, m=2, n=3, reliability=0.8, method="grid")
    newton = tip_py.solve_equilibrium(ones, ones, m=2, n=3, reliability=0.8, method="newton")
    check("newton and grid agree", abs(grid["t_x"] - newton["t_x"]) < 1e-5
          and abs(grid["t_y"] - newton["t_y"]) < 1e-5)

    print("simulation")
    summary = tip_py.simulate_summary(ones, ones, m=1, n=0, reliability=0.5,
                                      turns=4000, replicas=10, seed=1)
    check("degenerate schedule settles near closed form",
          abs(summary["mean_final_x"] - 0.5) < 0.03, f"mean={summary['mean_final_x']:.4f}")

    print("dataset and fitting")
    with tempfile.TemporaryDirectory() as tmp:
        path = os.path.join(tmp, "data.csv")
        tip_py.generate_synthetic_csv(path, sessions=15, seed=3)
        with open(path) as fh:
            header = fh.readline().strip()
        check("dataset header",
              header == "session,robot_x,robot_y,correct_A,correct_B,t_x_A,t_x_B,t_y_A,t_y_B,t_x_y,t_y_x")
        fit = tip_py.fit_csv(path, agent="x", robot="A", model="tip")
        check("fit returns six parameters", set(fit["theta_star"]) ==
              {"alpha0", "beta0", "s", "f", "s_hat", "f_hat"})
        check("fit expected-trust series covers all sessions", len(fit["expected_trust"]) == 16)
        errs = None
        direct = tip_py.fit_csv(path, agent="x", robot="A", model="direct")
        check("ablation keeps frozen gains at zero",
              direct["theta_star"]["s_hat"] == 0.0 and direct["theta_star"]["f_hat"] == 0.0)
        check("full model log-likelihood dominates ablation",
              fit["final_loglik"] >= direct["final_loglik"] - 1e-6,
              f"tip={fit['final_loglik']:.4f}, direct={direct['final_loglik']:.4f}")

    print(f"smoke test passed ({PASSED} checks)")


if __name__ == "__main__":
    main()
