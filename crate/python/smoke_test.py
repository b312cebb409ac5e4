#!/usr/bin/env python3
"""Smoke test for the qdual_py extension module.

Builds expectations against a handful of known values: the D3 mutation at
node 3, fixed-point counts, the degree-one Grassmannian coefficient, and a
tiny building-block identity check.

Run after `cargo build -p qdual-py --release` (or debug); the script locates
the compiled cdylib in ../target and imports it in place.
"""

import json
import pathlib
import shutil
import sys
import tempfile

ROOT = pathlib.Path(__file__).resolve().parent.parent


def load_module():
    candidates = [
        ROOT / "target" / "release" / "libqdual_py.so",
        ROOT / "target" / "debug" / "libqdual_py.so",
        ROOT / "target" / "release" / "libqdual_py.dylib",
        ROOT / "target" / "debug" / "libqdual_py.dylib",
    ]
    src = next((p for p in candidates if p.exists()), None)
    if src is None:
        sys.exit("build the extension first: cargo build -p qdual-py")
    tmp = tempfile.mkdtemp(prefix="qdual_py_")
    dest = pathlib.Path(tmp) / ("qdual_py" + (".so" if src.suffix == ".so" else ".so"))
    shutil.copy2(src, dest)
    sys.path.insert(0, tmp)
    import qdual_py

    return qdual_py


def main():
    q = load_module()

    # scalar primitive
    assert q.sfr("0", 2) == "2", q.sfr("0", 2)
    assert q.sfr("1/2", -1) == "2"

    # D3 quiver and its mutation at node 3
    d3 = q.family_quiver("x0", [2, 2, 3, 4])
    res = json.loads(q.mutate(d3, 3))
    ranks = [n["rank"] for n in res["quiver"]["nodes"]]
    assert ranks == [2, 2, 1, 4], ranks
    assert res["case"] == "OutEqIn"
    maps = [im["display"] for im in res["proved_map"]["images"]]
    assert maps == ["q1*(1-q3)", "q2*(1-q3)", "q3^-1"], maps

    # fixed points
    assert q.fixed_point_count("x0", [2, 2, 3, 4]) == 36
    pts = json.loads(q.fixed_points("grblock", [1, 2, 0]))
    assert pts == [[[1]], [[2]]], pts

    # degree-zero coefficient of any restricted I-function is 1
    series = json.loads(q.ifun("x0", [2, 2, 3, 4], 0, 1, 7))["series"]
    const = [t for t in series["terms"] if t["e"] == [0, 0, 0]]
    assert const and const[0]["c"] == "1", const

    # a small identity check end to end
    report = json.loads(q.check_building_block(1, 2, 0, 3, 1, 5))
    assert report["verdict"] == "PASS", report

    print("qdual_py smoke test: OK")


if __name__ == "__main__":
    main()
