#!/usr/bin/env python3
"""Smoke test for the sospack_py extension module.

Build the module first, then run this script from anywhere:

    cargo build -p sospack-py
    python3 python/smoke_test.py
"""

import json
import math
import shutil
import sys
import tempfile
from pathlib import Path


def import_module():
    root = Path(__file__).resolve().parents[1]
    candidates = [
        root / "target" / profile / name
        for profile in ("debug", "release")
        for name in ("libsospack_py.so", "libsospack_py.dylib", "sospack_py.dll")
    ]
    built = next((p for p in candidates if p.exists()), None)
    if built is None:
        sys.exit("extension not found; run `cargo build -p sospack-py` first")
    staging = Path(tempfile.mkdtemp(prefix="sospack-py-"))
    target = staging / ("sospack_py" + (".pyd" if built.suffix == ".dll" else ".so"))
    shutil.copyfile(built, target)
    sys.path.insert(0, str(staging))
    import sospack_py

    return sospack_py


def torus(sp):
    x, y, z = (sp.Polynomial.variable(3, i) for i in range(3))
    one = sp.Polynomial.constant(3, 1.0)
    norm_sq = x * x + y * y + z * z
    shifted = norm_sq + one
    return shifted * shifted * shifted - 10.0 * ((x * x + y * y) * (z * z + one))


def disk(sp, cx, cy, r):
    x, y = (sp.Polynomial.variable(2, i) for i in range(2))
    dx = x - sp.Polynomial.constant(2, cx)
    dy = y - sp.Polynomial.constant(2, cy)
    return dx * dx + dy * dy - sp.Polynomial.constant(2, r * r)


def disk_scene(sp, centers, r):
    identity = {"linear": [[1.0, 0.0], [0.0, 1.0]], "offset": [0.0, 0.0], "rigid": True}
    return json.dumps(
        {
            "dim": 2,
            "container": {"c": json.loads(disk(sp, 0.0, 0.0, 1.0).to_json()), "f0": None},
            "objects": [
                {
                    "label": f"disk{i}",
                    "p": json.loads(disk(sp, cx, cy, r).to_json()),
                    "f": None,
                    "transform": identity,
                }
                for i, (cx, cy) in enumerate(centers)
            ],
            "degree": 4,
            "gamma_cap": 1.0,
            "ground_truth": None,
        }
    )


def main():
    sp = import_module()

    c = torus(sp)
    assert c.dim == 3 and c.degree == 6
    assert c.evaluate([0.0, 0.0, 0.0]) == 1.0
    assert c.evaluate([1.0, 0.0, 0.0]) == -2.0
    assert c.evaluate([1.0, 1.0, 0.0]) == 7.0

    round_tripped = sp.Polynomial.from_json(c.to_json())
    assert sorted(round_tripped.terms()) == sorted(c.terms())

    # Composing with x -> 3(x - center) moves and shrinks a unit ball.
    x, y, z = (sp.Polynomial.variable(3, i) for i in range(3))
    ball = x * x + y * y + z * z - sp.Polynomial.constant(3, 1.0)
    placed = ball.compose(
        [[3.0, 0.0, 0.0], [0.0, 3.0, 0.0], [0.0, 0.0, 3.0]], [0.8, 0.0, 0.0], False
    )
    assert abs(placed.evaluate([0.8, 0.0, 0.0]) + 1.0) < 1e-12
    assert abs(placed.evaluate([0.8 + 1.0 / 3.0, 0.0, 0.0])) < 1e-9

    volume = sp.Polynomial.constant(2, 1.0).integrate_box([-1.0, -1.0], [1.0, 1.0])
    assert abs(volume - 4.0) < 1e-12
    assert len(sp.monomial_basis(2, 2)) == 6

    report = json.loads(
        sp.certify_scene(disk_scene(sp, [(-0.5, 0.0), (0.5, 0.0)], 0.3))
    )
    assert report["verdict"] == "certified", report["verdict"]
    assert all(c["verified"] for c in report["containment"])

    bad = disk_scene(sp, [(0.1, 0.0), (0.4, 0.0)], 0.2)
    violations = json.loads(sp.oracle_check(bad))
    assert violations and violations[0]["constraint"] == "non_overlap:0:1"
    witness = violations[0]["witness"]
    assert math.hypot(witness[0] - 0.25, witness[1]) < 0.05
    assert json.loads(sp.certify_scene(bad))["verdict"] == "refuted"

    points = [
        [math.cos(2.0 * math.pi * k / 64), math.sin(2.0 * math.pi * k / 64)]
        for k in range(64)
    ]
    model = sp.learn_shape(points, 4, [-1.5, -1.5], [1.5, 1.5])
    assert model.verified
    j = model.polynomial
    assert all(j.evaluate(p) <= -1e-4 for p in points)
    boundary = sp.sample_boundary(model, 180)
    assert len(boundary) == 180
    assert all(abs(math.hypot(*p) - 1.0) < 0.1 for p in boundary)

    saved = sp.ShapeModel.from_json(model.to_json())
    assert saved.radius == model.radius

    print("smoke test passed")


if __name__ == "__main__":
    main()
