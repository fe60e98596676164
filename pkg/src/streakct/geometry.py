"""Boundary curves, curvature, dual curves and the tangent-line catalog.

Two curve flavours are supported:

* :class:`ParamCurve` -- a closed curve given by a truncated Fourier series,
  smooth and periodic by construction.
* :class:`GraphCurve` -- an open polynomial graph ``x2 = p(x1)`` used as a
  local model near a flat point (``x2 = t**3``, ``t**4``, ...).

Lines are stored as ``(phi, s)`` meaning ``{x : x . theta(phi) = s}`` with
``theta(phi) = (cos phi, sin phi)``.  Since ``(s, phi)`` and
``(-s, phi + pi)`` are the same line, every public function returns the
representative with ``phi`` in ``[0, pi)``.
"""

from __future__ import annotations

import csv
import io
import logging
import math
from dataclasses import dataclass, field

import numpy as np
from numpy.polynomial import polynomial as P
from scipy import optimize

logger = logging.getLogger(__name__)

TWO_PI = 2.0 * math.pi

# relative zero threshold for curvature and the zero-run fraction for A1
KAPPA_ZERO_REL = 1e-8
ZERO_RUN_FRACTION = 0.01


class GeometryError(Exception):
    """Base class for geometry failures."""


class DegenerateVelocityError(GeometryError):
    pass


class A1ViolationError(GeometryError):
    """Curvature vanishes on an interval."""


class A2ViolationError(GeometryError):
    """A tangent line touches the boundary in a forbidden configuration."""


class InsufficientSamplesError(GeometryError):
    pass


class CurveFormatError(GeometryError):
    def __init__(self, msg, lineno=None):
        self.lineno = lineno
        if lineno is not None:
            msg = f"line {lineno}: {msg}"
        super().__init__(msg)


# ---------------------------------------------------------------------------
# curves
# ---------------------------------------------------------------------------


class Curve:
    """Common interface; subclasses implement :meth:`evaluate`."""

    closed = True
    t_min = 0.0
    t_max = TWO_PI

    def evaluate(self, t, deriv_order=0):
        raise NotImplementedError

    @property
    def length(self):
        return self.t_max - self.t_min

    def sample_params(self, n):
        if self.closed:
            return self.t_min + self.length * np.arange(n) / n
        return np.linspace(self.t_min, self.t_max, n)

    def param_distance(self, t1, t2):
        d = np.abs(np.asarray(t1) - np.asarray(t2))
        if self.closed:
            d = np.minimum(d, self.length - d % self.length)
        return d

    def default_samples(self):
        return 4096


@dataclass(frozen=True, eq=False)
class ParamCurve(Curve):
    """Closed curve ``x_j(t) = sum_k a_jk cos(kt) + b_jk sin(kt)``, t in [0, 2pi)."""

    cos_coeffs_x: np.ndarray
    sin_coeffs_x: np.ndarray
    cos_coeffs_y: np.ndarray
    sin_coeffs_y: np.ndarray

    def __post_init__(self):
        arrs = [np.atleast_1d(np.asarray(a, dtype=float)) for a in
                (self.cos_coeffs_x, self.sin_coeffs_x, self.cos_coeffs_y, self.sin_coeffs_y)]
        n = max(len(a) for a in arrs)
        arrs = [np.pad(a, (0, n - len(a))) for a in arrs]
        for name, a in zip(("cos_coeffs_x", "sin_coeffs_x", "cos_coeffs_y", "sin_coeffs_y"), arrs):
            if not np.all(np.isfinite(a)):
                raise ValueError(f"{name} contains non-finite values")
            a.setflags(write=False)
            object.__setattr__(self, name, a)

    @property
    def max_harmonic(self):
        return len(self.cos_coeffs_x) - 1

    def default_samples(self):
        return max(4096, 64 * self.max_harmonic)

    def evaluate(self, t, deriv_order=0):
        """Point or derivative of order 0..3; returns shape ``t.shape + (2,)``."""
        if not 0 <= deriv_order <= 3:
            raise ValueError("deriv_order must be in 0..3")
        t = np.asarray(t, dtype=float)
        k = np.arange(self.max_harmonic + 1, dtype=float)
        arg = np.multiply.outer(t, k) + deriv_order * math.pi / 2
        scale = k ** deriv_order
        c, s = np.cos(arg) * scale, np.sin(arg) * scale
        x = c @ self.cos_coeffs_x + s @ self.sin_coeffs_x
        y = c @ self.cos_coeffs_y + s @ self.sin_coeffs_y
        return np.stack([x, y], axis=-1)

    @classmethod
    def from_functions(cls, fx, fy, max_harmonic, n=None):
        """Project two 2pi-periodic callables onto harmonics 0..max_harmonic.

        Exact (up to rounding) when the inputs are trigonometric polynomials
        of degree <= max_harmonic.
        """
        n = n or max(64, 4 * (max_harmonic + 1))
        t = TWO_PI * np.arange(n) / n
        coeffs = []
        for f in (fx, fy):
            F = np.fft.rfft(np.asarray(f(t), dtype=float)) / n
            a = 2 * F.real[: max_harmonic + 1]
            b = -2 * F.imag[: max_harmonic + 1]
            a[0] /= 2
            b[0] = 0.0
            coeffs += [a, b]
        return cls(coeffs[0], coeffs[1], coeffs[2], coeffs[3])

    def transformed(self, scale=1.0, shift=(0.0, 0.0)):
        cx = self.cos_coeffs_x * scale
        cy = self.cos_coeffs_y * scale
        cx = cx.copy()
        cy = cy.copy()
        cx[0] += shift[0]
        cy[0] += shift[1]
        return ParamCurve(cx, self.sin_coeffs_x * scale, cy, self.sin_coeffs_y * scale)

    # -- text format ---------------------------------------------------
    def to_text(self):
        lines = ["# harmonic k: ax_cos ax_sin ay_cos ay_sin"]
        for k in range(self.max_harmonic + 1):
            vals = (self.cos_coeffs_x[k], self.sin_coeffs_x[k],
                    self.cos_coeffs_y[k], self.sin_coeffs_y[k])
            lines.append(f"harmonic {k}: " + " ".join(repr(float(v)) for v in vals))
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text):
        rows = {}
        for lineno, raw in enumerate(text.splitlines(), start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            head, sep, rest = line.partition(":")
            parts = head.split()
            if not sep or len(parts) != 2 or parts[0] != "harmonic":
                raise CurveFormatError(f"expected 'harmonic k: ...', got {raw!r}", lineno)
            try:
                k = int(parts[1])
            except ValueError:
                raise CurveFormatError(f"bad harmonic index {parts[1]!r}", lineno) from None
            if k < 0:
                raise CurveFormatError("harmonic index must be >= 0", lineno)
            if k in rows:
                raise CurveFormatError(f"duplicate harmonic {k}", lineno)
            try:
                vals = [float(v) for v in rest.split()]
            except ValueError:
                raise CurveFormatError(f"non-numeric coefficient in {rest.strip()!r}", lineno) from None
            if len(vals) != 4 or not all(math.isfinite(v) for v in vals):
                raise CurveFormatError("expected 4 finite coefficients", lineno)
            rows[k] = vals
        if not rows:
            raise CurveFormatError("no harmonics found")
        K = max(rows)
        table = np.zeros((K + 1, 4))
        for k, vals in rows.items():
            table[k] = vals
        return cls(*table.T)

    @classmethod
    def load(cls, path):
        with open(path, encoding="utf-8") as fh:
            return cls.from_text(fh.read())

    def save(self, path):
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(self.to_text())


@dataclass(frozen=True)
class GraphCurve(Curve):
    """Open graph ``(t, p(t))`` for t in ``[t_min, t_max]``.

    ``coeffs`` are polynomial coefficients in increasing degree, so
    ``GraphCurve([0, 0, 0, 1])`` is the cubic ``x2 = t**3``.
    """

    coeffs: tuple
    t_min: float = -1.0
    t_max: float = 1.0
    closed = False

    def __post_init__(self):
        object.__setattr__(self, "coeffs", tuple(float(c) for c in self.coeffs))

    def default_samples(self):
        return 4001

    def evaluate(self, t, deriv_order=0):
        if not 0 <= deriv_order <= 3:
            raise ValueError("deriv_order must be in 0..3")
        t = np.asarray(t, dtype=float)
        c = P.polyder(self.coeffs, deriv_order) if deriv_order else np.asarray(self.coeffs)
        x2 = P.polyval(t, c)
        x1 = {0: t, 1: np.ones_like(t)}.get(deriv_order, np.zeros_like(t))
        return np.stack([x1, x2], axis=-1)


def evaluate(curve, t, deriv_order=0):
    return curve.evaluate(t, deriv_order)


def monomial_graph(power, half_width=1.0, coeff=1.0):
    """Local model ``x2 = coeff * t**power`` on ``[-half_width, half_width]``."""
    c = [0.0] * power + [coeff]
    return GraphCurve(tuple(c), -half_width, half_width)


# ---------------------------------------------------------------------------
# curvature and flat points
# ---------------------------------------------------------------------------


def _speed_tol(curve):
    return 1e-12


def curvature(curve, t):
    """Signed curvature ``(x1' x2'' - x2' x1'') / |x'|**3``."""
    d1 = curve.evaluate(t, 1)
    d2 = curve.evaluate(t, 2)
    speed = np.hypot(d1[..., 0], d1[..., 1])
    if np.any(speed < _speed_tol(curve)):
        raise DegenerateVelocityError("curve velocity vanishes")
    k = (d1[..., 0] * d2[..., 1] - d1[..., 1] * d2[..., 0]) / speed ** 3
    return float(k) if np.ndim(k) == 0 else k


def _turning_rate(curve, t):
    """d(phi)/dt = kappa * |gamma'|; the arc-length rate is kappa itself."""
    d1 = curve.evaluate(t, 1)
    d2 = curve.evaluate(t, 2)
    return (d1[..., 0] * d2[..., 1] - d1[..., 1] * d2[..., 0]) / (d1[..., 0] ** 2 + d1[..., 1] ** 2)


@dataclass(frozen=True)
class FlatPoint:
    t: float
    order: int
    kind: str  # "inflection" or "flat"
    location: tuple
    tangent_line: tuple  # (phi, s)

    @property
    def is_inflection(self):
        return self.kind == "inflection"


def _zero_runs(mask, closed):
    """Lengths of maximal runs of True (wrapping if closed)."""
    if mask.all():
        return [len(mask)]
    if closed:
        # rotate so the array starts on a False entry
        start = int(np.argmin(mask))
        mask = np.roll(mask, -start)
    runs, cur = [], 0
    for m in mask:
        if m:
            cur += 1
        elif cur:
            runs.append(cur)
            cur = 0
    if cur:
        runs.append(cur)
    return runs


def _estimate_order(curve, t0, half_width):
    # degree-5 fit of kappa over 32 samples, in normalised offset h/half_width
    h = np.linspace(-1.0, 1.0, 32)
    tt = t0 + h * half_width
    if not curve.closed:
        tt = np.clip(tt, curve.t_min, curve.t_max)
        h = (tt - t0) / half_width
    k = curvature(curve, tt)
    c = P.polyfit(h, k, 5)
    mags = np.abs(c[1:])
    if mags.max() == 0:
        return 0
    order = int(np.argmax(mags >= 1e-3 * mags.max())) + 1
    return order


def find_flat_points(curve, tol=1e-12, n_samples=None):
    """All zeros of curvature, with their order and kind.

    Raises :class:`A1ViolationError` if curvature is numerically zero on a
    run of at least 1% of the samples.
    """
    n = n_samples or curve.default_samples()
    t = curve.sample_params(n)
    k = curvature(curve, t)
    kmax = float(np.max(np.abs(k)))
    if kmax == 0.0:
        raise A1ViolationError("curvature vanishes identically")
    ktol = KAPPA_ZERO_REL * kmax
    small = np.abs(k) < ktol
    runs = _zero_runs(small, curve.closed)
    longest = max(runs) if runs else 0
    if longest >= max(3, int(math.ceil(ZERO_RUN_FRACTION * n))):
        raise A1ViolationError(
            f"curvature below {ktol:.3g} on {longest} consecutive samples ({100 * longest / n:.2f}%)")

    idx = np.arange(n)
    nxt = (idx + 1) % n if curve.closed else np.minimum(idx + 1, n - 1)
    prv = (idx - 1) % n if curve.closed else np.maximum(idx - 1, 0)
    step = curve.length / n if curve.closed else (t[1] - t[0])

    def kappa(x):
        return curvature(curve, x)

    roots = []
    # sign changes between neighbouring samples
    for i in np.nonzero(k * k[nxt] < 0)[0]:
        if not curve.closed and i == n - 1:
            continue
        a = t[i]
        b = a + step
        r = optimize.brentq(kappa, a, b, xtol=tol, rtol=4 * np.finfo(float).eps, maxiter=200)
        roots.append(r % curve.length if curve.closed else r)
    # exact zeros on samples, and local minima of |kappa| without sign change
    absk = np.abs(k)
    for i in range(n):
        if not curve.closed and (i == 0 or i == n - 1):
            continue
        if absk[i] > absk[prv[i]] or absk[i] > absk[nxt[i]]:
            continue
        if k[i] == 0.0:
            roots.append(float(t[i]))
            continue
        if not (np.sign(k[prv[i]]) == np.sign(k[i]) == np.sign(k[nxt[i]])):
            continue
        sgn = np.sign(k[i])
        res = optimize.minimize_scalar(lambda x: sgn * kappa(x), bounds=(t[i] - step, t[i] + step),
                                       method="bounded", options={"xatol": tol})
        if abs(kappa(res.x)) < ktol:
            roots.append(float(res.x) % curve.length if curve.closed else float(res.x))

    roots = sorted(roots)
    uniq = []
    for r in roots:
        if not uniq or curve.param_distance(r, uniq[-1]) > max(10 * tol, 1e-9):
            uniq.append(r)
    if curve.closed and len(uniq) > 1 and curve.param_distance(uniq[0], uniq[-1]) <= max(10 * tol, 1e-9):
        uniq.pop()

    out = []
    half = 16 * step
    for r in uniq:
        order = _estimate_order(curve, r, half)
        kl, kr = kappa(r - half / 4), kappa(r + half / 4)
        sign_change = kl * kr < 0
        if order % 2 == 1 and not sign_change:
            logger.warning("odd order %d at t=%g without sign change", order, r)
        kind = "inflection" if sign_change else "flat"
        loc = tuple(float(v) for v in curve.evaluate(r))
        out.append(FlatPoint(float(r), order, kind, loc, dual_point(curve, r)))
    return out


def inflection_count_by_sampling(curve, n=20000):
    """Number of sign changes of sampled curvature (an oracle, not a locator)."""
    k = curvature(curve, curve.sample_params(n))
    k = k[k != 0]
    if curve.closed:
        return int(np.sum(np.sign(k) != np.sign(np.roll(k, 1))))
    return int(np.sum(np.sign(k[1:]) != np.sign(k[:-1])))


# ---------------------------------------------------------------------------
# lines and the dual curve
# ---------------------------------------------------------------------------


def normalize_line(phi, s):
    """Map ``(phi, s)`` to the representative with phi in [0, pi)."""
    phi = np.mod(np.asarray(phi, dtype=float), TWO_PI)
    s = np.asarray(s, dtype=float)
    flip = phi >= math.pi
    phi = np.where(flip, phi - math.pi, phi)
    s = np.where(flip, -s, s)
    # phi - pi can round up to pi
    wrap = phi >= math.pi
    phi = np.where(wrap, 0.0, phi)
    s = np.where(wrap, -s, s)
    if phi.ndim == 0:
        return float(phi), float(s)
    return phi, s


def line_distance(l1, l2):
    """Distance between two lines in (phi, s) respecting the identification."""
    p1, s1 = normalize_line(*l1)
    p2, s2 = normalize_line(*l2)
    d = abs(p1 - p2) + abs(s1 - s2)
    d_seam = abs(abs(p1 - p2) - math.pi) + abs(s1 + s2)
    return min(d, d_seam)


def _raw_normal_angle(curve, t):
    d1 = curve.evaluate(t, 1)
    speed = np.hypot(d1[..., 0], d1[..., 1])
    if np.any(speed < _speed_tol(curve)):
        raise DegenerateVelocityError("curve velocity vanishes")
    return np.arctan2(-d1[..., 0], d1[..., 1])


def _raw_line(curve, t):
    phi = _raw_normal_angle(curve, t)
    g = curve.evaluate(t)
    s = g[..., 0] * np.cos(phi) + g[..., 1] * np.sin(phi)
    return phi, s


def dual_point(curve, t):
    """Tangent line at ``gamma(t)`` as normalized ``(phi, s)``."""
    return normalize_line(*_raw_line(curve, t))


@dataclass
class DualCurve:
    t: np.ndarray
    s: np.ndarray
    phi: np.ndarray
    kappa: np.ndarray
    curve: Curve = field(repr=False)

    def __len__(self):
        return len(self.t)

    def tangency_residuals(self):
        g = self.curve.evaluate(self.t)
        d1 = self.curve.evaluate(self.t, 1)
        c, s = np.cos(self.phi), np.sin(self.phi)
        r_point = np.abs(g[:, 0] * c + g[:, 1] * s - self.s)
        r_tan = np.abs(d1[:, 0] * c + d1[:, 1] * s) / np.hypot(d1[:, 0], d1[:, 1])
        return r_point, r_tan

    def cusp_indices(self):
        """Sample indices where phi (in the covering space) reverses direction."""
        phi_raw = _raw_normal_angle(self.curve, self.t)
        dphi = np.angle(np.exp(1j * np.diff(phi_raw)))
        if self.curve.closed:
            last = np.angle(np.exp(1j * (phi_raw[0] - phi_raw[-1])))
            dphi = np.append(dphi, last)
            rev = np.nonzero(np.sign(dphi) != np.sign(np.roll(dphi, 1)))[0]
        else:
            rev = np.nonzero(np.sign(dphi[1:]) != np.sign(dphi[:-1]))[0] + 1
        return rev


def dual_curve(curve, n_samples=None):
    n = n_samples or curve.default_samples()
    if isinstance(curve, ParamCurve) and n < 16 * curve.max_harmonic:
        raise ValueError("n_samples must be >= 16 * max_harmonic")
    t = curve.sample_params(n)
    phi, s = dual_point(curve, t)
    return DualCurve(t, s, phi, curvature(curve, t), curve)


# ---------------------------------------------------------------------------
# line catalog
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Line:
    phi: float
    s: float
    kind: str  # "bitangent" or "inflection-tangent"
    tangency_params: tuple

    @property
    def theta(self):
        return np.array([math.cos(self.phi), math.sin(self.phi)])


@dataclass
class LineSet:
    lines: list = field(default_factory=list)

    def __len__(self):
        return len(self.lines)

    def __iter__(self):
        return iter(self.lines)

    def __getitem__(self, i):
        return self.lines[i]

    def of_kind(self, kind):
        return LineSet([ln for ln in self.lines if ln.kind == kind])

    def without(self, index):
        return LineSet([ln for i, ln in enumerate(self.lines) if i != index])

    def merged(self, other, tol=1e-8):
        out = list(self.lines)
        for ln in other:
            if all(line_distance((ln.phi, ln.s), (m.phi, m.s)) > tol for m in out):
                out.append(ln)
        return LineSet(out)

    def to_csv(self):
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["phi", "s", "kind", "t1", "t2"])
        for ln in self.lines:
            tp = list(ln.tangency_params) + [""] * (2 - len(ln.tangency_params))
            w.writerow([repr(ln.phi), repr(ln.s), ln.kind] + [repr(v) if v != "" else "" for v in tp])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text):
        rows = list(csv.DictReader(io.StringIO(text)))
        lines = []
        for r in rows:
            tp = tuple(float(r[k]) for k in ("t1", "t2") if r.get(k))
            lines.append(Line(float(r["phi"]), float(r["s"]), r["kind"], tp))
        return cls(lines)


def _wrap(a):
    return (a + math.pi) % TWO_PI - math.pi


def _segment_crossings(P0, P1, Q0, Q1, tol=0.0):
    """Vectorised intersection of segment P0P1 against segments Q0Q1.

    Returns boolean mask and the fractional positions along P and Q.
    Positions count in ``[-tol, 1 - tol)``; ``tol > 0`` also catches
    crossings that fall exactly on a shared sample.
    """
    r = P1 - P0
    u = Q1 - Q0
    den = r[0] * u[:, 1] - r[1] * u[:, 0]
    qp = Q0 - P0
    with np.errstate(divide="ignore", invalid="ignore"):
        a = (qp[:, 0] * u[:, 1] - qp[:, 1] * u[:, 0]) / den
        b = (qp[:, 0] * r[1] - qp[:, 1] * r[0]) / den
    ok = (den != 0) & (a >= -tol) & (a < 1 - tol) & (b >= -tol) & (b < 1 - tol)
    return ok, a, b


def _bitangent_residual(curve, t1, t2, flip):
    phi1, s1 = _raw_line(curve, t1)
    phi2, s2 = _raw_line(curve, t2)
    if flip:
        return np.array([_wrap(phi1 - phi2 - math.pi), s1 + s2])
    return np.array([_wrap(phi1 - phi2), s1 - s2])


def _bitangent_jacobian(curve, t, phi):
    dphi = _turning_rate(curve, t)
    g = curve.evaluate(t)
    ds = (-g[0] * math.sin(phi) + g[1] * math.cos(phi)) * dphi
    return dphi, ds


def refine_bitangent(curve, t1, t2, flip, tol=1e-14, max_iter=50):
    """Newton iteration on (s1 -/+ s2, wrapped phi1 - phi2 [- pi])."""
    for _ in range(max_iter):
        r = _bitangent_residual(curve, t1, t2, flip)
        phi1, _ = _raw_line(curve, t1)
        phi2, _ = _raw_line(curve, t2)
        a1, b1 = _bitangent_jacobian(curve, t1, float(phi1))
        a2, b2 = _bitangent_jacobian(curve, t2, float(phi2))
        sg = -1.0 if flip else 1.0
        J = np.array([[a1, -a2], [b1, -sg * b2]])
        try:
            step = np.linalg.solve(J, -r)
        except np.linalg.LinAlgError:
            raise GeometryError("singular bitangent Jacobian") from None
        lim = 0.05 * curve.length
        step = np.clip(step, -lim, lim)
        t1, t2 = t1 + step[0], t2 + step[1]
        if np.max(np.abs(step)) < tol:
            break
    r = _bitangent_residual(curve, t1, t2, flip)
    if np.max(np.abs(r)) > 1e-9:
        raise GeometryError(f"bitangent refinement did not converge (residual {np.max(np.abs(r)):.2e})")
    if curve.closed:
        t1, t2 = t1 % curve.length, t2 % curve.length
    return float(t1), float(t2)


def tangency_points(curve, phi, s, n=None, rel_tol=1e-8):
    """Parameters where the line ``(phi, s)`` touches the curve tangentially."""
    n = n or 4 * curve.default_samples()
    t = curve.sample_params(n)
    theta = np.array([math.cos(phi), math.sin(phi)])
    d1 = curve.evaluate(t, 1)
    v = d1 @ theta
    g = curve.evaluate(t)
    scale = max(1.0, float(np.max(np.abs(g))))
    step = curve.length / n if curve.closed else (t[1] - t[0])
    last = n if curve.closed else n - 1

    def vel(x):
        return float(curve.evaluate(x, 1) @ theta)

    def height(x):
        return float(curve.evaluate(x) @ theta) - s

    cands = []
    for i in range(last):
        j = (i + 1) % n
        if v[i] * v[j] < 0:
            # vectorised and scalar evaluation can disagree in sign on near-flat arcs
            if vel(t[i]) * vel(t[i] + step) < 0:
                cands.append(optimize.brentq(vel, t[i], t[i] + step, xtol=1e-14))
    av = np.abs(v)
    for i in range(n):
        if not curve.closed and (i == 0 or i == n - 1):
            continue
        p, q = (i - 1) % n, (i + 1) % n
        if av[i] <= av[p] and av[i] <= av[q] and np.sign(v[p]) == np.sign(v[q]):
            res = optimize.minimize_scalar(lambda x: abs(vel(x)), bounds=(t[i] - step, t[i] + step),
                                           method="bounded", options={"xatol": 1e-13})
            cands.append(float(res.x))
    hits = []
    for c in cands:
        speed = float(np.hypot(*curve.evaluate(c, 1)))
        if abs(height(c)) < rel_tol * scale and abs(vel(c)) < 1e-6 * speed:
            c = c % curve.length if curve.closed else c
            if all(curve.param_distance(c, h) > 1e-6 for h in hits):
                hits.append(c)
    return sorted(hits)


def tangency_order(curve, t0, phi, s):
    """Fitted exponent m in ``|height(t0 + d)| ~ d**m``; 2 for an ordinary tangency."""
    theta = np.array([math.cos(phi), math.sin(phi)])
    d = np.geomspace(1e-3, 1e-2, 12) * curve.length / TWO_PI
    out = []
    for sgn in (1.0, -1.0):
        tt = t0 + sgn * d
        if not curve.closed:
            tt = np.clip(tt, curve.t_min, curve.t_max)
        h = np.abs(curve.evaluate(tt) @ theta - s)
        if np.any(h == 0):
            return math.inf
        out.append(np.polyfit(np.log(d), np.log(h), 1)[0])
    return float(np.mean(out))


def find_bitangents(curve, n_samples=None, min_separation=None, check_a2=True):
    """Bitangent lines as transversal self-intersections of the dual curve."""
    n = n_samples or curve.default_samples()
    t = curve.sample_params(n)
    phi, s = dual_point(curve, t)
    pts = np.stack([phi, s], axis=1)
    nseg = n if curve.closed else n - 1
    step = curve.length / n if curve.closed else (t[1] - t[0])
    sep = min_separation if min_separation is not None else 8 * step

    # segment endpoints, with the far end re-expressed across the phi seam
    A = pts[:nseg].copy()
    B = pts[(np.arange(nseg) + 1) % n].copy()
    jump = B[:, 0] - A[:, 0]
    up = jump < -math.pi / 2
    dn = jump > math.pi / 2
    B[up, 0] += math.pi
    B[dn, 0] -= math.pi
    B[up | dn, 1] *= -1

    seeds = []
    shifts = [(0.0, 1.0), (math.pi, -1.0), (-math.pi, -1.0)]
    ts = t[:nseg]
    for i in range(nseg):
        j = np.arange(i + 2, nseg)
        if curve.closed and i == 0:
            j = j[j != nseg - 1]
        if j.size == 0:
            continue
        far = curve.param_distance(ts[i], ts[j]) > sep
        j = j[far]
        for dphi, sg in shifts:
            Q0 = np.column_stack([A[j, 0] + dphi, sg * A[j, 1]])
            Q1 = np.column_stack([B[j, 0] + dphi, sg * B[j, 1]])
            ok, a, b = _segment_crossings(A[i], B[i], Q0, Q1)
            for jj, aa, bb in zip(j[ok], a[ok], b[ok]):
                seeds.append((ts[i] + aa * step, ts[jj] + bb * step))

    lines = []
    for t1, t2 in seeds:
        p1, s1 = _raw_line(curve, t1)
        p2, s2 = _raw_line(curve, t2)
        flip = abs(_wrap(float(p1 - p2))) > math.pi / 2
        try:
            r1, r2 = refine_bitangent(curve, t1, t2, flip)
        except GeometryError as exc:
            logger.debug("dropping bitangent seed (%g, %g): %s", t1, t2, exc)
            continue
        if curve.param_distance(r1, r2) <= sep:
            continue
        if r2 < r1:
            r1, r2 = r2, r1
        ph, sv = dual_point(curve, r1)
        cand = Line(ph, sv, "bitangent", (r1, r2))
        if all(line_distance((ph, sv), (m.phi, m.s)) > 1e-8 for m in lines):
            lines.append(cand)

    if check_a2:
        for ln in lines:
            hits = tangency_points(curve, ln.phi, ln.s)
            if len(hits) >= 3:
                raise A2ViolationError(
                    f"line phi={ln.phi:.6f}, s={ln.s:.6f} is tangent at {len(hits)} points")
    lines.sort(key=lambda ln: (ln.phi, ln.s))
    return LineSet(lines)


def predicted_lines(curve, n_samples=None):
    """Bitangents plus one tangent per inflection point (even flat points excluded)."""
    flats = find_flat_points(curve, n_samples=n_samples)
    bit = find_bitangents(curve, n_samples=n_samples)
    infl = [fp for fp in flats if fp.is_inflection]
    for ln in bit:
        for fp in infl:
            if min(curve.param_distance(fp.t, tp) for tp in ln.tangency_params) < 1e-6:
                raise A2ViolationError(f"bitangent touches inflection point t={fp.t:.6f}")
    infl_lines = LineSet([Line(fp.tangent_line[0], fp.tangent_line[1], "inflection-tangent", (fp.t,))
                          for fp in infl])
    for ln in infl_lines:
        hits = tangency_points(curve, ln.phi, ln.s)
        others = [h for h in hits if curve.param_distance(h, ln.tangency_params[0]) > 1e-6]
        if others:
            raise A2ViolationError(
                f"inflection tangent at t={ln.tangency_params[0]:.6f} also touches t={others[0]:.6f}")
    return bit.merged(infl_lines)


@dataclass
class AssumptionReport:
    a1: bool
    a2: bool
    details: list = field(default_factory=list)
    flat_points: list = field(default_factory=list)
    lines: LineSet = field(default_factory=LineSet)

    @property
    def ok(self):
        return self.a1 and self.a2

    def to_text(self):
        out = [f"A1 = {'pass' if self.a1 else 'fail'}", f"A2 = {'pass' if self.a2 else 'fail'}"]
        out += [f"detail = {d}" for d in self.details]
        return "\n".join(out) + "\n"


def is_simple(curve, n=2048):
    """Pairwise segment test on an n-gon sample of a closed curve."""
    pts = curve.evaluate(curve.sample_params(n))
    A, B = pts, np.roll(pts, -1, axis=0)
    for i in range(n):
        j = np.arange(i + 2, n)
        if i == 0:
            j = j[j != n - 1]
        if j.size == 0:
            continue
        ok, _, _ = _segment_crossings(A[i], B[i], A[j], B[j], tol=1e-9)
        if ok.any():
            return False
    return True


def validate_assumptions(curve, n_samples=None):
    """Report (never raise) on the curvature and tangency assumptions."""
    rep = AssumptionReport(True, True)
    try:
        flats = find_flat_points(curve, n_samples=n_samples)
    except A1ViolationError as exc:
        rep.a1 = False
        rep.details.append(f"A1: {exc}")
        flats = []
    except DegenerateVelocityError as exc:
        rep.a1 = rep.a2 = False
        rep.details.append(f"regularity: {exc}")
        return rep
    rep.flat_points = flats
    for fp in flats:
        if fp.kind == "flat":
            rep.details.append(f"note: non-inflection flat point of order {fp.order} at t={fp.t:.9g}")
        elif fp.order != 1:
            rep.details.append(f"note: inflection of order {fp.order} at t={fp.t:.9g}")
    try:
        bit = find_bitangents(curve, n_samples=n_samples, check_a2=False)
    except GeometryError as exc:
        rep.a2 = False
        rep.details.append(f"A2: bitangent search failed: {exc}")
        return rep
    infl = [fp for fp in flats if fp.is_inflection]
    catalog = list(bit) + [Line(fp.tangent_line[0], fp.tangent_line[1], "inflection-tangent", (fp.t,))
                           for fp in infl]
    flat_ts = [fp.t for fp in flats]
    for ln in catalog:
        hits = tangency_points(curve, ln.phi, ln.s)
        if ln.kind == "bitangent":
            if len(hits) >= 3:
                rep.a2 = False
                rep.details.append(f"A2: line ({ln.phi:.6f}, {ln.s:.6f}) tangent at {len(hits)} points")
            if any(min(curve.param_distance(h, ft) for h in ln.tangency_params) < 1e-6 for ft in flat_ts):
                rep.a2 = False
                rep.details.append(f"A2: bitangent ({ln.phi:.6f}, {ln.s:.6f}) touches a flat point")
        else:
            if len(hits) > 1:
                rep.a2 = False
                rep.details.append(
                    f"A2: inflection tangent ({ln.phi:.6f}, {ln.s:.6f}) tangent at {len(hits)} points")
        bad = [(h, m) for h in hits for m in [tangency_order(curve, h, ln.phi, ln.s)] if not (1.5 < m < 12)]
        if bad:
            rep.a2 = False
            rep.details.append(f"A2: line ({ln.phi:.6f}, {ln.s:.6f}) has {len(bad)} tangencies without finite "
                               f"order (first at t={bad[0][0]:.9g}, fitted {bad[0][1]:.3g})")
    if rep.a1 and rep.a2:
        rep.lines = LineSet(sorted(bit.lines, key=lambda ln: (ln.phi, ln.s))).merged(
            LineSet([ln for ln in catalog if ln.kind == "inflection-tangent"]))
    return rep


# ---------------------------------------------------------------------------
# cusp exponent
# ---------------------------------------------------------------------------


@dataclass
class CuspReport:
    cusp_t: float
    exponent: float
    exponent_plus: float
    exponent_minus: float
    n_plus: int
    n_minus: int
    r_squared: float
    branches_opposite: bool
    same_side: bool

    @property
    def is_cusp(self):
        return self.branches_opposite and self.same_side


def cusp_exponent_fit(dual, cusp_t, window, min_points=8):
    """Fit ``|s| ~ z**p`` on each dual-curve branch next to ``cusp_t``.

    The boundary is moved so the flat point sits at the origin with its
    tangent along the x1-axis; then ``z = |cos(phi)|`` and ``s`` is the
    signed offset of the tangent line from the flat point.
    """
    curve = dual.curve
    p = curve.evaluate(cusp_t)
    phi_c, _ = dual_point(curve, cusp_t)
    dt = np.asarray(dual.t) - cusp_t
    if curve.closed:
        dt = _wrap(dt)
    sel = (np.abs(dt) <= window) & (dt != 0)
    delta = dual.phi[sel] - phi_c
    s_loc = dual.s[sel] - (p[0] * np.cos(dual.phi[sel]) + p[1] * np.sin(dual.phi[sel]))
    # bring delta into [-pi/2, pi/2), flipping s when shifting by pi
    shift = np.round(delta / math.pi)
    delta = delta - shift * math.pi
    s_loc = np.where(shift % 2 != 0, -s_loc, s_loc)
    z = np.abs(np.sin(delta))
    side = np.sign(delta)
    branch = np.sign(dt[sel])

    fits, signs, sides, counts, r2s = {}, {}, {}, {}, []
    for b in (1.0, -1.0):
        m = (branch == b) & (z > 0) & (s_loc != 0)
        counts[b] = int(m.sum())
        if counts[b] < min_points:
            raise InsufficientSamplesError(
                f"only {counts[b]} samples on branch {'+' if b > 0 else '-'} within window {window}")
        lz, ls = np.log(z[m]), np.log(np.abs(s_loc[m]))
        coef = np.polyfit(lz, ls, 1)
        pred = np.polyval(coef, lz)
        ss = np.sum((ls - ls.mean()) ** 2)
        r2s.append(1 - np.sum((ls - pred) ** 2) / ss if ss > 0 else 1.0)
        fits[b] = float(coef[0])
        signs[b] = float(np.sign(np.median(s_loc[m])))
        sides[b] = float(np.sign(np.median(side[m])))
    return CuspReport(
        cusp_t=float(cusp_t),
        exponent=0.5 * (fits[1.0] + fits[-1.0]),
        exponent_plus=fits[1.0],
        exponent_minus=fits[-1.0],
        n_plus=counts[1.0],
        n_minus=counts[-1.0],
        r_squared=float(min(r2s)),
        branches_opposite=signs[1.0] == -signs[-1.0],
        same_side=sides[1.0] == sides[-1.0],
    )
