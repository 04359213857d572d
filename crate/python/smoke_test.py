"""Smoke test for the `ctucker` extension module.

Build the extension and put it on the path first, e.g.

    cargo build --release -p compressed-tucker-python
    cp target/release/libctucker.so python/ctucker.so
    python3 python/smoke_test.py
"""

import math
import os
import sys
import tempfile

sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))

import ctucker  # noqa: E402


def close(a, b, tol):
    return abs(a - b) <= tol * max(1.0, abs(b))


def main():
    # Unfoldings of the 2x2x2 cube holding 1..8.
    cube = ctucker.Tensor([2, 2, 2], [float(v) for v in range(1, 9)])
    assert cube.shape == [2, 2, 2]
    assert ctucker.matricize(cube, 0) == [[1, 3, 5, 7], [2, 4, 6, 8]]
    assert cube.matricize(1) == [[1, 2, 5, 6], [3, 4, 7, 8]]
    scaled = ctucker.mode_multiply(cube, [[1.0, 0.0], [0.0, 2.0]], 0)
    assert scaled.data() == [1, 4, 3, 8, 5, 12, 7, 16]
    assert cube.inner(cube) == 204.0

    x = ctucker.synth([20, 18, 16], [3, 3, 3], noise=0.0, seed=4)
    results = {}
    for method in ctucker.METHODS:
        t, report = ctucker.decompose(x, [3, 3, 3], method=method, dr=0.6, seed=1)
        assert t.ranks == [3, 3, 3] and t.dims == [20, 18, 16]
        assert report["method"] == method
        err = ctucker.relative_error(x, t)
        assert close(err * x.norm(), report["final_error"], 1e-9)
        results[method] = err
        print(f"{method:<13} iterations {report['iterations']:>3}  relative error {err:.3e}")
    assert all(e <= 1e-6 for e in results.values()), results

    t, _ = ctucker.decompose(x, [3, 3, 3], method="hooi")
    with tempfile.TemporaryDirectory() as d:
        tp, dp = os.path.join(d, "x.tkr"), os.path.join(d, "t.tkd")
        x.save(tp)
        t.save(dp)
        assert ctucker.Tensor.load(tp).data() == x.data()
        back = ctucker.Tucker.load(dp)
        assert back.factors == t.factors and back.core.data() == t.core.data()
    # Orthonormal factors have mutually orthogonal columns.
    assert all(c <= 1e-10 for c in t.coherence())

    report = ctucker.verify("lemma21", trials=20)
    assert report["passed"], report
    assert report["extras"]["max_identity_error"] <= 1e-10

    for bad in (lambda: ctucker.Tensor([2, 2], [1.0]),
                lambda: ctucker.decompose(x, [3, 3, 3], method="nope"),
                lambda: cube.matricize(5)):
        try:
            bad()
        except ValueError:
            pass
        else:
            raise AssertionError("expected ValueError")
    try:
        ctucker.Tensor.load("/nonexistent/x.tkr")
    except OSError:
        pass
    else:
        raise AssertionError("expected OSError")

    assert not math.isnan(x.norm())
    print("smoke test passed")


if __name__ == "__main__":
    main()
