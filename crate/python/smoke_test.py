#!/usr/bin/env python3
"""Smoke test for the jointdisp_py extension module.

Builds the cdylib with cargo, copies it next to this script under the
importable name, then exercises the main types and operations end to end:
basis evaluation, quadrature, simulation, a short fit, WAIC, summaries,
curves and chain persistence.

Usage: python3 python/smoke_test.py [--release]
"""

import math
import shutil
import subprocess
import sys
import tempfile
from pathlib import Path

ROOT = Path(__file__).resolve().parent.parent


def build_extension(release: bool) -> Path:
    profile = "release" if release else "dev"
    target_dir = "release" if release else "debug"
    cmd = ["cargo", "build", "-p", "jointdisp-py"]
    if release:
        cmd.append("--release")
    subprocess.run(cmd, cwd=ROOT, check=True)
    built = ROOT / "target" / target_dir / "libjointdisp_py.so"
    if not built.exists():  # macOS fallback
        built = ROOT / "target" / target_dir / "libjointdisp_py.dylib"
    dest = Path(__file__).resolve().parent / "jointdisp_py.so"
    shutil.copyfile(built, dest)
    print(f"built {built} ({profile}) -> {dest}")
    return dest


def approx(a, b, tol):
    assert abs(a - b) < tol, f"{a} != {b} (tol {tol})"


def main() -> None:
    release = "--release" in sys.argv
    build_extension(release)
    sys.path.insert(0, str(Path(__file__).resolve().parent))
    import jointdisp_py as jd

    print(f"jointdisp_py {jd.__version__}")

    # spline basis: partition of unity, Q = s + 3
    vals = jd.eval_basis(0.0, 5.0, 20, 1.23)
    assert len(vals) == 23
    approx(sum(vals), 1.0, 1e-12)
    assert sum(1 for v in vals if v != 0.0) <= 4

    # quadrature against a closed form
    approx(jd.gk15_integrate(math.exp, 0.0, 2.0), math.exp(2.0) - 1.0, 1e-10)

    # WAIC hand example
    waic, lppd, p_waic = jd.waic_from_matrix([[0.0], [-2.0]])
    approx(lppd, math.log((1.0 + math.exp(-2.0)) / 2.0), 1e-12)
    approx(p_waic, 2.0, 1e-12)
    approx(waic, 5.132438, 1e-5)

    # the model grid has exactly 33 admissible cells
    spec = jd.ModelSpec.selected()
    grid = spec.grid()
    assert len(grid) == 33
    assert all(not s.validate() for s in grid)
    bad = jd.ModelSpec("COMMON", "SHARED_B2", "WEIBULL")
    assert bad.validate(), "infeasible cell must report violations"

    # simulate a small cohort and fit a quick chain
    fit_spec = jd.ModelSpec("COMMON", "CONSTANT_TRADITIONAL", "WEIBULL")
    data, truth = jd.simulate(fit_spec, n_subjects=30, seed=7, censor_time=5.0)
    print(data)
    assert data.n_subjects == 30
    assert truth["beta1_0"] == 17.0

    config = jd.SamplerConfig(iterations=1500, burn_in=500, thin=5, seed=3)
    chain = jd.fit(data, fit_spec, config)
    print(chain)
    assert chain.n_draws == config.retained
    beta0 = chain.series("beta1_0")
    assert len(beta0) == chain.n_draws
    post_mean = sum(beta0) / len(beta0)
    assert 10.0 < post_mean < 25.0, f"beta1_0 posterior mean {post_mean}"

    waic, _, _ = chain.waic()
    assert math.isfinite(waic)
    summary = chain.summary()
    assert any(name == "sigma_b_1_1" for name, *_ in summary)
    curves = chain.curves([0.0, 2.5, 5.0])
    assert any(label == "link_intercept_effect" for _, label, *_ in curves)

    # determinism and persistence round trip
    chain2 = jd.fit(data, fit_spec, config)
    assert chain.series("beta1_0") == chain2.series("beta1_0")
    with tempfile.TemporaryDirectory() as tmp:
        chain.save(Path(tmp) / "chain")
        back = jd.Chain.load(Path(tmp) / "chain")
        assert back.series("beta1_0") == chain.series("beta1_0")

    # prior-only sampling stays centered on the prior
    prior_chain = jd.sample_prior(jd.ModelSpec.selected(), jd.SamplerConfig(4000, 1000, 3, 11), 2)
    series = prior_chain.series("beta1_0")
    mean = sum(series) / len(series)
    assert abs(mean) < 30.0

    print("smoke test: all checks passed")


if __name__ == "__main__":
    main()
