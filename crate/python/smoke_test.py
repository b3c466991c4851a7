"""Smoke test for the ipmbalance Python extension.

Build first with either
    maturin develop -m crates/python/Cargo.toml
or
    cargo build --release -p ipmbalance-python --features extension-module
The script imports an installed module if present, otherwise it loads the
freshly built shared library from target/.
"""

import importlib.util
import math
import pathlib
import sys

ROOT = pathlib.Path(__file__).resolve().parents[1]


def load():
    try:
        import ipmbalance

        return ipmbalance
    except ImportError:
        pass
    for profile in ("release", "debug"):
        for name in ("libipmbalance_py.so", "libipmbalance_py.dylib", "ipmbalance_py.dll"):
            lib = ROOT / "target" / profile / name
            if lib.exists():
                spec = importlib.util.spec_from_file_location("ipmbalance", lib)
                module = importlib.util.module_from_spec(spec)
                spec.loader.exec_module(module)
                return module
    sys.exit("ipmbalance extension not found; build it first")


def main():
    ib = load()

    expected = 0.03125 * 200 * math.exp(-12.5)
    got = ib.bound(0.5, 1.0, 2.0, 100, 100)
    assert abs(got - expected) <= 1e-15 * expected, got
    assert ib.vc_to_covering_exponent(3) == 4.0
    inv = ib.invert_bound(0.05, 1.0, 2.0, 100, 100)
    assert ib.bound(inv["delta"], 1.0, 2.0, 100, 100) <= 0.05

    data = ib.Dataset.from_csv("y,t,z1\n1,0,0.1\n2,0,0.2\n3,0,0.3\n5,1,0.4\n4,0,0.6\n6,1,0.7\n7,1,0.8\n")
    assert (data.n0, data.n1, data.p) == (4, 3, 1)
    delta = ib.cem_delta(data, [[0.5]])
    # weighted control mean (1/3)(0.2) + (2/3)(0.6) minus treated mean 1.9/3
    assert abs(delta[0] + 1 / 6) < 1e-12, delta
    matched = ib.cem_match(data, [[0.5]])
    assert len(matched["strata"]) == 2

    report = ib.run_balance(data, {"method": "cem", "cuts": [[0.5]], "delta_grid": [0.5, 1.0]})
    assert report["method"] == "cem" and len(report["bounds"]) > 0

    rm = ib.ratio_match([0.8, 0.85, 0.95, 0.1], [0.9], 1)
    assert rm["assignments"] == [[1]], rm

    g0 = [[0.1 * i, 0.05 * i] for i in range(10)]
    g1 = [[0.1 * i + 0.02, 0.05 * i] for i in range(10)]
    both = ib.Dataset.from_groups(g0, g1)
    model = ib.lda_fit(both, ridge=1e-3)
    assert len(model.w) == 2
    pd = ib.propensity_delta(both, 1, ridge=1e-3)
    assert abs(pd["delta"] - pd["telescoped"]) < 1e-9

    same = ib.gamma_mmd(g0, g0)
    assert same < 1e-6
    assert abs(ib.kernel_delta(both) - ib.gamma_mmd(g0, g1)) < 1e-12

    assert ib.shatter_check("hyperplane", 2, [[0, 0], [1, 0], [0, 1]])
    assert not ib.shatter_check("hyperplane", 2, [[0, 0], [1, 0], [0, 1], [1, 1]])

    scenario = {
        "name": "smoke",
        "generator": {"kind": "ideal_balance_clone", "base": {
            "kind": "gaussian_shared", "mu0": [0.0, 0.0], "mu1": [0.0, 0.0],
            "cov": [[1.0, 0.5], [0.5, 1.0]]}},
        "n0": 100, "n1": 100,
        "method": {"kind": "cem", "cuts": [[0.5], [0.5]]},
        "D": 1.0, "trials": 200, "seed": 42,
        "delta_grid": [0.2, 0.3, 0.4],
    }
    curve = ib.run_experiment(scenario)
    assert curve["dominance_holds"], curve["csv"]
    assert curve == ib.run_experiment(scenario)

    try:
        ib.Dataset.from_csv("y,t,z1\n1,2,0.5\n")
    except ValueError as e:
        assert "line 2" in str(e)
    else:
        raise AssertionError("bad treatment value accepted")

    print("python smoke test: ok")


if __name__ == "__main__":
    main()
