"""Cusp-conormal test fields and the Fourier decay of their squares.

``v(x) = (2 pi)^-2 int exp(i (x . xi - H(xi))) b(xi) dxi`` with
``H(xi) = xi2**3 / xi1**2`` and ``b(xi) = chi(xi1) f(xi2/xi1) |xi|**-rho``.
The Lagrangian of ``v`` projects onto the cusp ``(x1/2)**2 = (x2/3)**3``.
Squaring creates a singularity at the cusp point whose Fourier transform
along ``(eps xi2, xi2)`` decays like ``|xi2|**(-3 rho + 5/2)``.

Lattice conventions: continuum frequency ``xi = (dxi1 k1, dxi2 k2)`` for
integers ``k``; fields are stored as ``[row = xi2 / x2, col = xi1 / x1]``.
Along ``xi1`` the lattice is zero padded (``pad`` times longer) so that
squaring in space does not alias.  The default spacing is finer in ``xi2``:
the interactions that build the cusp-point tail reach ``|xi1| ~ xi2**1.5``
but only ``|xi2| ~ xi2``, and the finer ``xi2`` spacing buys a spatial cell
long enough in ``x2`` to hold a window far from the cusp support.
"""

import math
from dataclasses import dataclass

import numpy as np
import scipy.fft

DEFAULT_DXI = (0.5, 0.125)  # (dxi1, dxi2); spatial cell 4 pi x 16 pi
DEFAULT_WINDOW = (20.0, 200.0)
WAVEFRONT_RADIUS = 5.0
FAR_CENTER = (0.0, -20.0)
MIN_FAR_GAP = 2.0
ALIAS_TOL = 1e-6


class AliasingError(ValueError):
    pass


class WindowError(ValueError):
    pass


def _smooth_step(t):
    """C-infinity step: 0 for t <= 0, 1 for t >= 1."""
    t = np.asarray(t, dtype=float)
    a = np.where(t > 0, np.exp(-1.0 / np.where(t > 0, t, 1.0)), 0.0)
    b = np.where(t < 1, np.exp(-1.0 / np.where(t < 1, 1.0 - t, 1.0)), 0.0)
    return a / (a + b)


def bump(r):
    """``exp(1 - 1/(1 - r**2))`` on ``|r| < 1``, 0 outside; value 1 at 0."""
    r = np.asarray(r, dtype=float)
    inside = np.abs(r) < 1
    rr = np.where(inside, r * r, 0.0)
    return np.where(inside, np.exp(1.0 - 1.0 / (1.0 - rr)), 0.0)


@dataclass(frozen=True)
class CuspSymbol:
    rho: float = 3.0
    r0: float = 1.0
    r1: float = 2.0
    width: float = 1.0
    profile: str = "bump"
    cone: float = 1.5

    def __post_init__(self):
        if not self.rho > 2:
            raise ValueError("rho must exceed 2")
        if not 0 < self.r0 < self.r1:
            raise ValueError("need 0 < r0 < r1")
        if not 0 < self.width < self.cone:
            raise ValueError("profile half-width must lie inside the slope cone")
        if self.profile not in ("bump", "cos2"):
            raise ValueError(f"unknown profile {self.profile!r}")

    def chi(self, xi1):
        return _smooth_step((np.abs(xi1) - self.r0) / (self.r1 - self.r0))

    def f(self, u):
        u = np.asarray(u, dtype=float) / self.width
        if self.profile == "bump":
            return bump(u)
        return np.where(np.abs(u) < 1, np.cos(0.5 * math.pi * u) ** 2, 0.0)

    def b(self, xi1, xi2):
        xi1 = np.asarray(xi1, dtype=float)
        xi2 = np.asarray(xi2, dtype=float)
        ok = xi1 != 0
        safe = np.where(ok, xi1, 1.0)
        val = self.chi(xi1) * self.f(xi2 / safe) * np.hypot(safe, xi2) ** (-self.rho)
        return np.where(ok, val, 0.0)

    @staticmethod
    def H(xi1, xi2):
        xi1 = np.asarray(xi1, dtype=float)
        safe = np.where(xi1 != 0, xi1, 1.0)
        return np.where(xi1 != 0, xi2 ** 3 / safe ** 2, 0.0)

    def support_radius(self):
        """Largest |x| on the projected Lagrangian ``x = (-2u^3, 3u^2)``, ``|u| <= width``."""
        u = self.width
        return math.hypot(2 * u ** 3, 3 * u ** 2)


@dataclass
class CuspField:
    """Real field sampled on ``x1 = j1 * dx1``, ``x2 = j2 * dx2`` (periodic, origin at index 0)."""

    values: np.ndarray  # (n2, n1)
    dx1: float
    dx2: float
    dxi1: float
    dxi2: float

    @property
    def shape(self):
        return self.values.shape


@dataclass
class Spectrum:
    """Half spectrum over ``xi1 >= 0``: ``values[k2, k1]`` at ``(k1 dxi1, k2 dxi2)``, k2 wrapped."""

    values: np.ndarray  # (n2, n1 // 2 + 1) complex
    n1: int
    n2: int
    dxi1: float
    dxi2: float

    def at(self, xi1, xi2):
        """Bilinear interpolation of the complex spectrum at continuum points."""
        xi1 = np.asarray(xi1, dtype=float)
        xi2 = np.asarray(xi2, dtype=float)
        neg = xi1 < 0
        # Hermitian symmetry of a real field's transform
        k1 = np.where(neg, -xi1, xi1) / self.dxi1
        k2 = np.where(neg, -xi2, xi2) / self.dxi2
        if np.any(k1 > self.values.shape[1] - 1) or np.any(np.abs(k2) > self.n2 // 2 - 1):
            raise ValueError("point outside the resolved lattice")
        i1 = np.floor(k1).astype(np.int64)
        i2 = np.floor(k2).astype(np.int64)
        w1 = k1 - i1
        w2 = k2 - i2
        V = self.values
        n2 = self.n2
        out = ((1 - w1) * (1 - w2) * V[i2 % n2, i1] + w1 * (1 - w2) * V[i2 % n2, i1 + 1]
               + (1 - w1) * w2 * V[(i2 + 1) % n2, i1] + w1 * w2 * V[(i2 + 1) % n2, i1 + 1])
        return np.where(neg, np.conj(out), out)


def _check_grid_n(n):
    if n < 64 or n & (n - 1):
        raise ValueError("grid_n must be a power of two")


def _spacing(freq_scale):
    if np.ndim(freq_scale) == 0:
        return float(freq_scale), float(freq_scale)
    a, b = freq_scale
    return float(a), float(b)


def synth_cusp_conormal(sym, grid_n, freq_scale=DEFAULT_DXI, pad=2, block=256, min_n=2048,
                        alias_tol=ALIAS_TOL):
    """Sample ``v`` on an ``grid_n x (pad * grid_n)`` spatial grid (rows x2, columns x1).

    ``freq_scale`` is the lattice spacing, a number or a pair
    ``(dxi1, dxi2)``.  The symbol ``b exp(-iH)`` is filled on the half
    lattice ``xi1 >= 0`` with ``|k1|, |k2| <= grid_n / 2`` and inverted with a
    real FFT; ``b`` is even and ``H`` odd, so ``v`` is real.
    """
    _check_grid_n(grid_n)
    if grid_n < min_n:
        raise ValueError(f"grid_n must be at least {min_n}")
    dxi1, dxi2 = _spacing(freq_scale)
    n2 = grid_n
    n1 = pad * grid_n
    half = grid_n // 2
    e1, e2 = half * dxi1, half * dxi2
    edge_max = max(np.max(sym.b(np.linspace(-e1, e1, 4097), e2)),
                   np.max(sym.b(e1, np.linspace(-e2, e2, 4097))))
    # b peaks just outside the cutoff band
    probe = np.linspace(sym.r0, sym.r1 + 1.0, 512)
    b_max = float(np.max(sym.b(probe, 0.0)))
    if edge_max > alias_tol * b_max:
        raise AliasingError(f"|b| at the lattice edge is {edge_max / b_max:.3g} of its max (> {alias_tol})")

    spec = np.zeros((n2, n1 // 2 + 1), dtype=complex)
    xi1 = np.arange(half + 1) * dxi1
    k2 = np.fft.fftfreq(n2, d=1.0 / n2)
    k2[n2 // 2] = 0.0  # drop the unpaired Nyquist row
    for lo in range(0, n2, block):
        xi2 = k2[lo:lo + block, None] * dxi2
        bb = sym.b(xi1[None, :], xi2)
        ph = np.where(bb != 0, sym.H(xi1[None, :], xi2), 0.0)
        spec[lo:lo + block, : half + 1] = bb * np.exp(-1j * ph)
    spec[n2 // 2] = 0.0
    scale = dxi1 * dxi2 * n1 * n2 / (2 * math.pi) ** 2
    v = scipy.fft.irfft2(spec, s=(n2, n1), overwrite_x=True)
    del spec
    v *= scale
    L1 = 2 * math.pi / dxi1
    L2 = 2 * math.pi / dxi2
    return CuspField(v, L1 / n1, L2 / n2, dxi1, dxi2)


def squared_spectrum(v):
    """Continuum-normalised ``F(v^2)`` on the half lattice ``xi1 >= 0``.

    The zero padding along ``xi1`` done in :func:`synth_cusp_conormal` is
    the padding round: ``v^2`` has twice the ``xi1``-bandwidth of ``v``.
    """
    n2, n1 = v.shape
    sq = np.square(v.values)
    F = scipy.fft.rfft2(sq, overwrite_x=True)
    del sq
    F *= v.dx1 * v.dx2
    return Spectrum(F, n1, n2, v.dxi1, v.dxi2)


@dataclass
class DecayReport:
    epsilon: float
    fitted_slope: float
    expected_slope: float
    fit_window: tuple
    r_squared: float
    xi2: np.ndarray = None
    magnitude: np.ndarray = None

    @property
    def deviation(self):
        return self.fitted_slope - self.expected_slope

    def to_text(self):
        return (f"epsilon = {self.epsilon!r}\nfitted_slope = {self.fitted_slope!r}\n"
                f"expected_slope = {self.expected_slope!r}\nfit_window = {self.fit_window[0]!r} {self.fit_window[1]!r}\n"
                f"r_squared = {self.r_squared!r}\n")

    def samples_csv(self):
        rows = ["xi2,abs_F"] + [f"{float(a)!r},{float(b)!r}" for a, b in zip(self.xi2, self.magnitude)]
        return "\n".join(rows) + "\n"


def _loglog_fit(x, y):
    lx, ly = np.log(x), np.log(y)
    A = np.stack([lx, np.ones_like(lx)], axis=1)
    coef, *_ = np.linalg.lstsq(A, ly, rcond=None)
    pred = A @ coef
    ss = np.sum((ly - ly.mean()) ** 2)
    r2 = 1.0 - np.sum((ly - pred) ** 2) / ss if ss > 0 else 1.0
    return float(coef[0]), float(r2)


def ray_samples(F2, epsilon, window, n_samples=256):
    lo, hi = window
    xi2 = np.geomspace(lo, hi, n_samples)
    return xi2, np.abs(F2.at(epsilon * xi2, xi2))


def decay_slope(F2, epsilon, window, rho=None, n_samples=256):
    """Least-squares slope of ``log|F2|`` vs ``log xi2`` along ``(eps xi2, xi2)``.

    ``window`` is in continuum frequency units and must span an octave.
    """
    lo, hi = window
    if not (0 < lo and hi >= 2 * lo):
        raise WindowError(f"fit window {window} is narrower than one octave")
    xi2, mag = ray_samples(F2, epsilon, window, n_samples)
    if np.any(mag <= 0):
        raise WindowError("spectrum vanishes inside the fit window")
    slope, r2 = _loglog_fit(xi2, mag)
    expected = -3.0 * rho + 2.5 if rho is not None else float("nan")
    return DecayReport(float(epsilon), slope, expected, (float(lo), float(hi)), r2, xi2, mag)


def windowed_ray(field, sq, center, radius, epsilon, xi2):
    """Continuum transform of ``bump(|x - center| / radius) * sq`` at ``(eps xi2, xi2)``.

    ``sq`` is a periodic array sampled like ``field``.  Evaluated as a direct
    DFT on the cropped patch (two real matrix products), so no frequency
    interpolation is involved.
    """
    n2, n1 = sq.shape
    dx1, dx2 = field.dx1, field.dx2
    h1 = int(math.ceil(radius / dx1)) + 1
    h2 = int(math.ceil(radius / dx2)) + 1
    c1 = int(round(center[0] / dx1))
    c2 = int(round(center[1] / dx2))
    j1 = np.arange(c1 - h1, c1 + h1 + 1)
    j2 = np.arange(c2 - h2, c2 + h2 + 1)
    x1 = j1 * dx1
    x2 = j2 * dx2
    w = bump(np.hypot(x1[None, :] - center[0], x2[:, None] - center[1]) / radius)
    patch = sq[np.ix_(j2 % n2, j1 % n1)] * w
    xi2 = np.asarray(xi2, dtype=float)
    ph1 = np.outer(x1, epsilon * xi2)
    rows_c = patch @ np.cos(ph1)
    rows_s = patch @ np.sin(ph1)
    e2 = np.exp(-1j * x2[:, None] * xi2[None, :])
    vals = np.sum((rows_c - 1j * rows_s) * e2, axis=0)
    return vals * dx1 * dx2


@dataclass
class WavefrontCheck:
    passed: bool
    origin: DecayReport
    far: DecayReport
    far_center: tuple
    radius: float
    floor: float

    def to_text(self):
        return (f"passed = {self.passed}\norigin_slope = {self.origin.fitted_slope!r}\n"
                f"expected_slope = {self.origin.expected_slope!r}\n"
                f"far_slope = {self.far.fitted_slope!r}\n"
                f"far_center = {self.far_center[0]!r} {self.far_center[1]!r}\n"
                f"window_radius = {self.radius!r}\nnoise_floor = {self.floor!r}\n")


def _floor(field, sq, center, radius):
    """Roundoff level of :func:`windowed_ray`: machine eps times the L1 mass of the patch."""
    dx1, dx2 = field.dx1, field.dx2
    n2, n1 = sq.shape
    j1 = np.arange(int(round((center[0] - radius) / dx1)), int(round((center[0] + radius) / dx1)) + 1)
    j2 = np.arange(int(round((center[1] - radius) / dx2)), int(round((center[1] + radius) / dx2)) + 1)
    w = bump(np.hypot(j1[None, :] * dx1 - center[0], j2[:, None] * dx2 - center[1]) / radius)
    mass = float(np.sum(np.abs(sq[np.ix_(j2 % n2, j1 % n1)]) * w)) * dx1 * dx2
    return 64 * np.finfo(float).eps * mass


def cusp_point_wavefront_check(v, epsilon, window=DEFAULT_WINDOW, rho=None, radius=WAVEFRONT_RADIUS,
                               far_center=FAR_CENTER, support_radius=None, n_samples=64, margin=2.0):
    """Compare the ray decay of ``v**2`` localised at the origin and far away.

    Passes when the far window decays faster than the origin window by at
    least ``margin`` in log-log slope.  Far samples under the roundoff floor
    are dropped; if none survive the far window counts as decaying to the
    floor, which is a pass.  Both windows must fit in the periodic cell and,
    when ``support_radius`` is given, the far one must clear the support of
    the projected Lagrangian.
    """
    lo, hi = window
    if not (0 < lo and hi >= 2 * lo):
        raise WindowError(f"fit window {window} is narrower than one octave")
    n2, n1 = v.shape
    L1, L2 = n1 * v.dx1, n2 * v.dx2
    for c in ((0.0, 0.0), far_center):
        if 2 * radius >= min(L1, L2) or abs(c[0]) + radius > L1 / 2 or abs(c[1]) + radius > L2 / 2:
            raise WindowError(f"window of radius {radius} at {c} does not fit the {L1:.4g} x {L2:.4g} cell")
    gap = math.hypot(*far_center) - radius
    if support_radius is not None and gap < support_radius + MIN_FAR_GAP:
        raise WindowError(f"far window comes within {gap:.3g} of the origin; support radius is {support_radius:.3g}")
    sq = np.square(v.values)
    xi2 = np.geomspace(lo, hi, n_samples)
    expected = -3.0 * rho + 2.5 if rho is not None else float("nan")
    reports = []
    floor = 0.0
    for c in ((0.0, 0.0), far_center):
        mag = np.abs(windowed_ray(v, sq, c, radius, epsilon, xi2))
        fl = _floor(v, sq, c, radius)
        keep = mag > fl
        if c != (0.0, 0.0):
            floor = fl
        if keep.sum() >= 4 and xi2[keep][-1] >= 2 * xi2[keep][0]:
            slope, r2 = _loglog_fit(xi2[keep], mag[keep])
        elif c == (0.0, 0.0):
            raise WindowError("origin-window transform is under the roundoff floor")
        else:
            slope, r2 = -math.inf, float("nan")
        reports.append(DecayReport(float(epsilon), slope, expected, (float(lo), float(hi)), r2, xi2, mag))
    origin, far = reports
    passed = bool(far.fitted_slope <= origin.fitted_slope - margin)
    return WavefrontCheck(passed, origin, far, tuple(map(float, far_center)), float(radius), float(floor))
