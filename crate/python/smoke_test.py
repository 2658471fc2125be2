"""Smoke test for the `rectpoincare` extension module.

Uses an installed module when available; otherwise loads the library built by
`cargo build -p rectpoincare-py --features extension-module`.
"""

import importlib.util
import math
import pathlib
import shutil
import sys
import tempfile


def load():
    try:
        import rectpoincare

        return rectpoincare
    except ImportError:
        pass
    root = pathlib.Path(__file__).resolve().parent.parent
    for profile in ("release", "debug"):
        for name in ("librectpoincare.so", "librectpoincare.dylib", "rectpoincare.dll"):
            built = root / "target" / profile / name
            if built.exists():
                suffix = ".pyd" if name.endswith(".dll") else ".so"
                target = pathlib.Path(tempfile.mkdtemp()) / ("rectpoincare" + suffix)
                shutil.copy(built, target)
                spec = importlib.util.spec_from_file_location("rectpoincare", target)
                module = importlib.util.module_from_spec(spec)
                spec.loader.exec_module(module)
                return module
    sys.exit("rectpoincare is neither installed nor built; run "
             "`cargo build -p rectpoincare-py --features extension-module` first")


def main():
    rp = load()

    ids = rp.check_ids()
    assert len(ids) == 26 and ids[0] == "P1", ids
    assert {entry["id"] for entry in rp.catalog()} == set(ids)

    rect = rp.Rect([0.0, 0.0], [1.0, 2.0])
    assert math.isclose(rect.eccentricity, math.sqrt(2 / 5))
    assert all(math.isclose(c.eccentricity, rect.eccentricity) for c in rect.children())
    assert rect.block_eccentricity is None
    cubes = rp.Rect([0.0, 0.0], [1.0, 2.0], blocks=[1, 1])
    assert math.isclose(cubes.block_eccentricity, 2.0)

    report = rp.run_check("P1", functions=["x1"], params={"depth": 0}, resolution=512)
    assert report["pass"], report
    assert math.isclose(report["ratio"], 0.5, rel_tol=1e-12)

    failing = rp.run_check("P1", functions=["x1"], params={"depth": 0, "constant": 0.1})
    assert not failing["pass"] and "constant 0.1" in failing["failure"]

    sweep = rp.sweep("F3", "delta", [0.5, 0.9], functions=["x1"], params={"depth": 0}, resolution=2048)
    for delta, r in zip([0.5, 0.9], sweep):
        assert math.isclose(r["empirical_constant"], (2 - delta) / 8, rel_tol=0.01), r

    assert rp.sobolev("weighted", 2.0, 2, q=1.0, weight_constant=math.e) == 4.0
    assert rp.sobolev("classic", 1.0, 2) == 2.0
    m, b = rp.exponent_constants(math.e, 1.0)
    assert math.isclose(m, 2.0)

    constants = rp.weight_constants("constant", resolution=16)
    assert math.isclose(constants["ainf"], 1.0)

    bound = rp.riesz_potential_bound([0.0], [1.0], 1024, list(range(1024)), 512, 0.5)
    assert bound["pass"]
    assert math.isclose(bound["lhs"] + bound["self_cell"], 2 * math.sqrt(2), rel_tol=0.02)

    assert rp.parse_expression("x1 + x2", 2)
    for bad in (lambda: rp.parse_expression("x3", 2), lambda: rp.run_check("P1", params={"nope": 1.0})):
        try:
            bad()
        except ValueError:
            pass
        else:
            raise AssertionError("expected ValueError")
    try:
        rp.run_check("P99")
    except KeyError:
        pass
    else:
        raise AssertionError("expected KeyError")

    print("python smoke test passed")


if __name__ == "__main__":
    main()
