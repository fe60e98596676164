import math

import pytest
from hypothesis import HealthCheck, settings

settings.register_profile("repo", deadline=None, max_examples=50,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("repo")

# filled by tests/test_acceptance.py, printed at the end of the session
ACCEPTANCE = {}


def record(name, passed, detail):
    ACCEPTANCE[name] = (bool(passed), detail)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for name, (passed, detail) in ACCEPTANCE.items():
        tr.write_line(f"{'PASS' if passed else 'FAIL'}  {name}: {detail}")


def quotient_distance(a, b):
    """Distance of two lines ``(phi, s)`` under ``(phi, s) ~ (phi + pi, -s)``."""
    (p1, s1), (p2, s2) = a, b
    d = abs(p1 - p2)
    return min(d + abs(s1 - s2), abs(d - math.pi) + abs(s1 + s2))


@pytest.fixture(scope="session")
def fig1():
    from streakct import shapes
    return shapes.figure1_domain()


CUSP_EPS = 0.08
CUSP_N = 8192
REFINE_WINDOW = (20.0, 100.0)
CONTROL_EPS = 2.0


class CuspRuns:
    """8192-grid cusp runs, computed once per rho; only scalars and reports are kept."""

    def __init__(self):
        self._cache = {}

    def get(self, rho, n=CUSP_N):
        key = (rho, n)
        if key not in self._cache:
            self._cache[key] = self._run(rho, n)
        return self._cache[key]

    @staticmethod
    def _run(rho, n):
        import gc
        import time

        import numpy as np

        from streakct import cuspwave as cw

        t0 = time.perf_counter()
        sym = cw.CuspSymbol(rho=rho)
        v = cw.synth_cusp_conormal(sym, n)
        out = {"sup": float(np.max(np.abs(v.values)))}
        if n >= 8192:
            out["wavefront"] = cw.cusp_point_wavefront_check(v, CUSP_EPS, rho=rho,
                                                             support_radius=sym.support_radius())
        F2 = cw.squared_spectrum(v)
        del v
        gc.collect()
        if n >= 8192:
            out["decay"] = cw.decay_slope(F2, CUSP_EPS, cw.DEFAULT_WINDOW, rho)
            out["control"] = cw.decay_slope(F2, CONTROL_EPS, cw.DEFAULT_WINDOW, rho)
        out["refine"] = cw.decay_slope(F2, CUSP_EPS, REFINE_WINDOW, rho)
        del F2
        gc.collect()
        out["seconds"] = time.perf_counter() - t0
        return out


@pytest.fixture(scope="session")
def cusp_runs():
    return CuspRuns()
