import contextlib
import time

import numpy as np

# tag -> (passed, detail); printed in the terminal summary
ACCEPTANCE = {}


def bump(r, radius=1.0):
    """Smooth bump exp(1 - 1/(1 - x^2)) supported in r < radius."""
    x = np.asarray(r, dtype=float) / radius
    out = np.zeros_like(x)
    inside = x < 1.0
    out[inside] = np.exp(1.0 - 1.0 / (1.0 - x[inside] ** 2))
    return out


def rel(a, b):
    return abs(a - b) / abs(b)


class _Criterion:
    def __init__(self, tag, budget):
        self.tag, self.budget = tag, budget
        self.ok, self.notes = True, []

    def check(self, cond, note):
        self.ok &= bool(cond)
        self.notes.append(f"{note} [{'ok' if cond else 'no'}]")


@contextlib.contextmanager
def criterion(tag, budget):
    """Collect the checks of one acceptance criterion, print and assert its verdict."""
    c = _Criterion(tag, budget)
    t0 = time.perf_counter()
    try:
        yield c
    except Exception as exc:
        c.check(False, f"raised {type(exc).__name__}: {exc}")
    wall = time.perf_counter() - t0
    if budget is not None:
        c.check(wall < budget, f"runtime {wall:.1f}s < {budget:g}s")
    detail = "; ".join(c.notes)
    ACCEPTANCE[tag] = (c.ok, detail)
    print(f"{tag}: {'PASS' if c.ok else 'FAIL'}  {detail}")
    assert c.ok, f"{tag} failed: {detail}"
