"""Smoke test for the pysaddle extension.

Build and install first:  pip install --no-build-isolation -e crates/py
"""

import json
import math
import tempfile
from pathlib import Path

import pysaddle


def main():
    assert "bilinear" in pysaddle.list_problems()
    assert "amsgrad_eg" in pysaddle.list_optimizers()

    p = pysaddle.Problem("bilinear")
    assert (p.n1, p.n2) == (1, 1)
    # phi = xy: V = (-y, x)
    assert p.field([2.0, 3.0]) == [-3.0, 2.0]
    assert p.fd_check([0.3, -1.2])["pass"]
    total, vx, vy = p.mvi_probe([1.0, 0.5], [0.0, 0.0])
    assert abs(total) < 1e-15 and abs(vx - 0.5) < 1e-15

    # SEG contracts by ((1 - eta^2)^2 + eta^2) per step in squared norm.
    r = pysaddle.run(p, "seg", [1.0, 0.0], 100, eta=0.1)
    expected = math.sqrt(0.9901 ** 100)
    assert abs(math.hypot(*r.last) / expected - 1) < 1e-9, r.last
    assert len(r) == 100 and len(r.trace()) == 100
    assert r.trace()[0]["iter"] == 0

    r = pysaddle.run(pysaddle.Problem("dirac_gan"), "amsgrad_eg", [0.5, 0.5], 200,
                     eta=0.05, seed=3, sigma=0.1, record_trajectory=True)
    assert len(r.trajectory) == 200 and r.monotonicity_violations == 0

    slope, _, r2 = pysaddle.rate_fit([(n, 3.0 / n) for n in (10, 100, 1000)])
    assert abs(slope + 1) < 1e-12 and r2 > 0.999999

    cfg = json.dumps({"problem": "bilinear", "optimizer": "seg", "eta": 0.1,
                      "z0": [1.0, 0.0], "N": 50, "seeds": [0, 1]})
    canonical, digest = pysaddle.parse_config(cfg)
    assert canonical["n_iters"] == 50 and len(digest) == 64
    with tempfile.TemporaryDirectory() as out:
        summary = pysaddle.execute(cfg, out_dir=out, format="jsonl", plot="grad_norms")
        assert len(summary["runs"]) == 2
        assert (Path(out) / "trace_seed0.jsonl").exists()
        assert (Path(out) / "plot_grad_norms.svg").exists()

    try:
        pysaddle.parse_config('{"problme": "bilinear"}')
    except ValueError as e:
        assert "problme" in str(e)
    else:
        raise AssertionError("unknown key accepted")

    print("pysaddle smoke test ok")


if __name__ == "__main__":
    main()
