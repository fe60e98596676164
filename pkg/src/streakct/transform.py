"""Radon transform on the space of lines, ramp filtering and backprojection.

Sinograms are sampled at ``s_i = -s_max + i * ds`` (``ds = 2 s_max / (n_s - 1)``)
and ``phi_j = j * pi / n_phi``.  Values outside ``phi in [0, pi)`` follow the
line identification ``g(-s, phi + pi) = g(s, phi)``.

Images are ``n x n`` cell-centre rasters of ``[-r, r]**2``; ``values[row, col]``
holds the value at ``x1 = centre[col]``, ``x2 = centre[row]``.
"""

import math
from dataclasses import dataclass

import numpy as np
import scipy.fft
from scipy.signal import fftconvolve
from numba import njit, prange

from .geometry import ParamCurve

# fbp(sino) = C_FBP * backproject(ramp_filter(sino)); calibrated by
# scripts/calibrate_fbp.py (the continuum value is 1 / (2 pi) = 0.1591549...)
C_FBP = 0.1598027705961395  # least-squares fit against an analytic Gaussian sinogram (scripts/calibrate_fbp.py)

N_ROOT_SAMPLES = 4096
ROOT_BISECTIONS = 40


class TransformError(Exception):
    pass


class ParityError(TransformError):
    """Odd number of boundary crossings on a line."""


@dataclass(frozen=True)
class SinogramGrid:
    n_s: int
    n_phi: int
    s_max: float

    def __post_init__(self):
        if self.n_s < 2 or self.n_phi < 2:
            raise ValueError("n_s and n_phi must be >= 2")
        if not self.s_max > 0:
            raise ValueError("s_max must be positive")

    @property
    def ds(self):
        return 2.0 * self.s_max / (self.n_s - 1)

    @property
    def s(self):
        return -self.s_max + self.ds * np.arange(self.n_s)

    @property
    def phi(self):
        return math.pi * np.arange(self.n_phi) / self.n_phi

    @classmethod
    def covering(cls, r, n_phi, pixel):
        """Grid whose s-range covers the square [-r, r]**2 at spacing ~pixel."""
        s_max = r * math.sqrt(2.0)
        n_s = 2 * int(math.ceil(s_max / pixel)) + 1
        return cls(n_s, n_phi, s_max)


@dataclass
class Sinogram:
    grid: SinogramGrid
    values: np.ndarray  # (n_phi, n_s)

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape != (self.grid.n_phi, self.grid.n_s):
            raise ValueError(f"values shape {self.values.shape} does not match grid")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("sinogram values must be finite")

    def with_values(self, values):
        return Sinogram(self.grid, values)

    def lookup(self, s, phi):
        """Value at arbitrary (s, phi): linear in s and phi, periodic via the flip rule."""
        g = self.grid
        s = np.asarray(s, dtype=float)
        phi = np.asarray(phi, dtype=float)
        u = phi / (math.pi / g.n_phi)
        j0 = np.floor(u).astype(np.int64)
        w = u - j0

        def row_val(j, sv):
            # j may lie outside [0, n_phi): fold by multiples of n_phi with sign flips
            q = np.floor_divide(j, g.n_phi)
            jj = j - q * g.n_phi
            sv = np.where(q % 2 == 0, sv, -sv)
            x = (sv + g.s_max) / g.ds
            i0 = np.floor(x).astype(np.int64)
            f = x - i0
            ok0 = (i0 >= 0) & (i0 < g.n_s)
            ok1 = (i0 + 1 >= 0) & (i0 + 1 < g.n_s)
            v0 = np.where(ok0, self.values[jj, np.clip(i0, 0, g.n_s - 1)], 0.0)
            v1 = np.where(ok1, self.values[jj, np.clip(i0 + 1, 0, g.n_s - 1)], 0.0)
            return (1 - f) * v0 + f * v1

        return (1 - w) * row_val(j0, s) + w * row_val(j0 + 1, s)


@dataclass(frozen=True)
class ImageSpec:
    n: int
    r: float

    def __post_init__(self):
        if self.n < 2 or not self.r > 0:
            raise ValueError("image needs n >= 2 and r > 0")

    @property
    def pixel(self):
        return 2.0 * self.r / self.n

    @property
    def centers(self):
        return -self.r + self.pixel * (np.arange(self.n) + 0.5)

    def mesh(self):
        c = self.centers
        return np.meshgrid(c, c)  # x1, x2 with row index = x2

    def zeros(self):
        return ImageGrid(self, np.zeros((self.n, self.n)))


@dataclass
class ImageGrid:
    spec: ImageSpec
    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape != (self.spec.n, self.spec.n):
            raise ValueError("image shape does not match spec")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("image values must be finite")

    @property
    def n(self):
        return self.spec.n

    @property
    def r(self):
        return self.spec.r

    @classmethod
    def from_function(cls, spec, f):
        x1, x2 = spec.mesh()
        return cls(spec, f(x1, x2))

    def with_values(self, values):
        return ImageGrid(self.spec, values)


# ---------------------------------------------------------------------------
# forward transform of an indicator
# ---------------------------------------------------------------------------


@njit(cache=True)
def _fourier_point(cx, sx, cy, sy, t):
    c1 = math.cos(t)
    s1 = math.sin(t)
    ck = 1.0
    sk = 0.0
    x = cx[0]
    y = cy[0]
    for k in range(1, cx.size):
        ck, sk = ck * c1 - sk * s1, sk * c1 + ck * s1
        x += cx[k] * ck + sx[k] * sk
        y += cy[k] * ck + sy[k] * sk
    return x, y


@njit(cache=True, parallel=True)
def _indicator_rows(cx, sx, cy, sy, tk, px, py, cphi, sphi, svals, n_bisect, out, odd):
    n0 = tk.size
    ns = svals.size
    dt = 2.0 * math.pi / n0
    s0 = svals[0]
    ds = svals[1] - svals[0]
    for j in prange(cphi.size):
        c = cphi[j]
        sn = sphi[j]
        h = px * c + py * sn
        counts = np.zeros(ns, np.int64)
        for k in range(n0):
            a = h[k]
            b = h[(k + 1) % n0]
            lo = min(a, b)
            hi = max(a, b)
            if lo == hi:
                continue
            i0 = max(0, int(math.floor((lo - s0) / ds)) - 1)
            i1 = min(ns - 1, int(math.ceil((hi - s0) / ds)) + 1)
            for i in range(i0, i1 + 1):
                if (a > svals[i]) != (b > svals[i]):
                    counts[i] += 1
        start = np.zeros(ns + 1, np.int64)
        for i in range(ns):
            start[i + 1] = start[i] + counts[i]
        fill = np.zeros(ns, np.int64)
        u = np.empty(start[ns])
        for k in range(n0):
            a = h[k]
            b = h[(k + 1) % n0]
            lo = min(a, b)
            hi = max(a, b)
            if lo == hi:
                continue
            i0 = max(0, int(math.floor((lo - s0) / ds)) - 1)
            i1 = min(ns - 1, int(math.ceil((hi - s0) / ds)) + 1)
            for i in range(i0, i1 + 1):
                sv = svals[i]
                apos = a > sv
                if apos == (b > sv):
                    continue
                ta = tk[k]
                tb = ta + dt
                for _ in range(n_bisect):
                    tm = 0.5 * (ta + tb)
                    x, y = _fourier_point(cx, sx, cy, sy, tm)
                    if (x * c + y * sn > sv) == apos:
                        ta = tm
                    else:
                        tb = tm
                x, y = _fourier_point(cx, sx, cy, sy, 0.5 * (ta + tb))
                u[start[i] + fill[i]] = -x * sn + y * c
                fill[i] += 1
        for i in range(ns):
            m = counts[i]
            if m == 0:
                out[j, i] = 0.0
                continue
            if m % 2 == 1:
                odd[j, i] = True
                out[j, i] = 0.0
                continue
            seg = np.sort(u[start[i]:start[i + 1]])
            acc = 0.0
            for q in range(0, m, 2):
                acc += seg[q + 1] - seg[q]
            out[j, i] = acc


def radon_indicator(curve, amplitude, grid, n_samples=N_ROOT_SAMPLES):
    """Radon transform of ``amplitude * indicator(D)`` for the region bounded by ``curve``.

    Each line's crossings with the boundary are bracketed on ``n_samples``
    parameter samples, refined by bisection, ordered along the line and
    paired alternately.  Lines with an odd crossing count are redone at
    twice the sampling before giving up.
    """
    if not isinstance(curve, ParamCurve):
        raise TypeError("radon_indicator needs a closed ParamCurve")
    pts = curve.evaluate(curve.sample_params(n_samples))
    if np.max(np.hypot(pts[:, 0], pts[:, 1])) >= grid.s_max:
        raise ValueError("s_max does not cover the region")
    out, odd = _indicator_values(curve, grid, n_samples)
    if odd.any():
        rows = np.nonzero(odd.any(axis=1))[0]
        sub = SinogramGrid(grid.n_s, grid.n_phi, grid.s_max)
        out2, odd2 = _indicator_values(curve, sub, 2 * n_samples, rows)
        out[rows] = out2
        if odd2.any():
            j, i = np.argwhere(odd2)[0]
            raise ParityError(f"odd crossing count at phi={grid.phi[rows[j]]:.6g}, s={grid.s[i]:.6g}")
    return Sinogram(grid, amplitude * out)


def _indicator_values(curve, grid, n_samples, rows=None):
    phi = grid.phi if rows is None else grid.phi[rows]
    tk = curve.sample_params(n_samples)
    pts = curve.evaluate(tk)
    out = np.zeros((phi.size, grid.n_s))
    odd = np.zeros((phi.size, grid.n_s), dtype=np.bool_)
    _indicator_rows(np.ascontiguousarray(curve.cos_coeffs_x), np.ascontiguousarray(curve.sin_coeffs_x),
                    np.ascontiguousarray(curve.cos_coeffs_y), np.ascontiguousarray(curve.sin_coeffs_y),
                    tk, np.ascontiguousarray(pts[:, 0]), np.ascontiguousarray(pts[:, 1]),
                    np.cos(phi), np.sin(phi), grid.s, ROOT_BISECTIONS, out, odd)
    return out, odd


# ---------------------------------------------------------------------------
# forward transform of a raster
# ---------------------------------------------------------------------------


@njit(cache=True)
def _bilinear(img, r, h, x, y):
    n = img.shape[0]
    fx = (x + r) / h - 0.5
    fy = (y + r) / h - 0.5
    i0 = int(math.floor(fx))
    j0 = int(math.floor(fy))
    wx = fx - i0
    wy = fy - j0
    acc = 0.0
    for dj in range(2):
        jj = j0 + dj
        if jj < 0 or jj >= n:
            continue
        wyy = wy if dj else 1.0 - wy
        for di in range(2):
            ii = i0 + di
            if ii < 0 or ii >= n:
                continue
            wxx = wx if di else 1.0 - wx
            acc += wxx * wyy * img[jj, ii]
    return acc


@njit(cache=True, parallel=True)
def _radon_raster(img, r, h, cphi, sphi, svals, du, out):
    ext = r + h  # bilinear support reaches one pixel past the last centre
    for j in prange(cphi.size):
        c = cphi[j]
        sn = sphi[j]
        for i in range(svals.size):
            sv = svals[i]
            # u-interval where s*theta + u*theta_perp stays inside [-ext, ext]^2
            ulo = -1e300
            uhi = 1e300
            for base, d in ((sv * c, -sn), (sv * sn, c)):
                if abs(d) < 1e-15:
                    if abs(base) > ext:
                        ulo = 1.0
                        uhi = -1.0
                    continue
                a = (-ext - base) / d
                b = (ext - base) / d
                if a > b:
                    a, b = b, a
                ulo = max(ulo, a)
                uhi = min(uhi, b)
            if uhi <= ulo:
                out[j, i] = 0.0
                continue
            m = int(math.ceil((uhi - ulo) / du))
            step = (uhi - ulo) / m
            acc = 0.0
            for q in range(m + 1):
                uu = ulo + q * step
                w = 0.5 if (q == 0 or q == m) else 1.0
                acc += w * _bilinear(img, r, h, sv * c - uu * sn, sv * sn + uu * c)
            out[j, i] = acc * step


def radon_image(image, grid):
    """Line integrals of a raster (bilinear interpolation, trapezoid rule, step <= pixel/2)."""
    spec = image.spec
    if spec.r > grid.s_max + 1e-12:
        raise ValueError("image extent exceeds s_max")
    out = np.zeros((grid.n_phi, grid.n_s))
    phi = grid.phi
    _radon_raster(np.ascontiguousarray(image.values), spec.r, spec.pixel, np.cos(phi), np.sin(phi),
                  grid.s, 0.5 * spec.pixel, out)
    return Sinogram(grid, out)


# ---------------------------------------------------------------------------
# filtering and backprojection
# ---------------------------------------------------------------------------


def ramp_filter(sino, window=None):
    """Multiply each row's s-spectrum by |sigma| (optionally Hann-apodised).

    Rows are zero padded to the next power of two at least twice their length.
    """
    g = sino.grid
    npad = ramp_length(g.n_s)
    mult = ramp_multiplier(npad, g.ds, window)
    spec = scipy.fft.rfft(sino.values, n=npad, axis=1)
    out = scipy.fft.irfft(spec * mult, n=npad, axis=1)[:, : g.n_s]
    return Sinogram(g, out)


def ramp_length(n_s):
    """Padded row length: the next power of two >= 2 * n_s."""
    return 1 << int(math.ceil(math.log2(2 * n_s)))


def ramp_multiplier(npad, ds, window=None):
    """|sigma| on the rfft bins of a row of ``npad`` samples at spacing ``ds``."""
    freq = scipy.fft.rfftfreq(npad, d=ds)  # cycles per unit length
    mult = 2.0 * math.pi * freq
    if window == "hann":
        mult = mult * 0.5 * (1.0 + np.cos(math.pi * freq / freq[-1]))
    elif window is not None:
        raise ValueError(f"unknown window {window!r}")
    return mult


@njit(cache=True, parallel=True)
def _backproject(vals, s_max, ds, cphi, sphi, centers, weight, out):
    n = centers.size
    n_s = vals.shape[1]
    for row in prange(n):
        y = centers[row]
        for col in range(n):
            x = centers[col]
            acc = 0.0
            for j in range(cphi.size):
                t = (x * cphi[j] + y * sphi[j] + s_max) / ds
                if t < 0.0 or t > n_s - 1:
                    continue
                i0 = min(int(t), n_s - 2)
                f = t - i0
                acc += (1.0 - f) * vals[j, i0] + f * vals[j, i0 + 1]
            out[row, col] = acc * weight


def backproject(sino, spec):
    """``(pi / n_phi) * sum_j g(x . theta_j, phi_j)``, linear in s, zero outside the s-range."""
    g = sino.grid
    out = np.zeros((spec.n, spec.n))
    phi = g.phi
    _backproject(np.ascontiguousarray(sino.values), g.s_max, g.ds, np.cos(phi), np.sin(phi),
                 spec.centers, math.pi / g.n_phi, out)
    return ImageGrid(spec, out)


def fbp(sino, spec, window=None, c_fbp=C_FBP):
    """Filtered backprojection onto the raster ``spec``."""
    return ImageGrid(spec, c_fbp * backproject(ramp_filter(sino, window), spec).values)


# ---------------------------------------------------------------------------
# normal operator
# ---------------------------------------------------------------------------


@dataclass
class NormalOperatorReport:
    c: float
    residual: float
    normal_image: ImageGrid
    reference: ImageGrid


def _inv_norm_antiderivative(x, y):
    # mixed second derivative is 1/|(x, y)|; built from the first-quadrant
    # primitive by odd extension in each variable
    ax, ay = np.abs(x), np.abs(y)
    with np.errstate(divide="ignore", invalid="ignore"):
        a = np.where(ax > 0, ax * np.arcsinh(ay / np.where(ax > 0, ax, 1.0)), 0.0)
        b = np.where(ay > 0, ay * np.arcsinh(ax / np.where(ay > 0, ay, 1.0)), 0.0)
    return np.sign(x) * np.sign(y) * (a + b)


def riesz_potential(image):
    """Inverse transform of ``fhat / |xi|`` on the plane, i.e. ``(f * 1/|y|) / (2 pi)``.

    Linear (zero padded) convolution of the pixel values with the exact
    cell integrals of ``1/|y|``, which keeps the singular centre finite.
    """
    n, h = image.n, image.spec.pixel
    e = h * (np.arange(-(n - 1), n + 1) - 0.5)  # cell edges
    F = _inv_norm_antiderivative(e[None, :], e[:, None])
    K = F[1:, 1:] - F[1:, :-1] - F[:-1, 1:] + F[:-1, :-1]
    conv = fftconvolve(image.values, K, mode="same")
    return ImageGrid(image.spec, conv / (2.0 * math.pi))


def normal_operator_check(test_image, n_phi=None, grid=None):
    """Compare ``R* R f`` with ``c * |D|^-1 f`` and fit c by least squares."""
    spec = test_image.spec
    if grid is None:
        grid = SinogramGrid.covering(spec.r, n_phi or int(round(1.40625 * spec.n)), spec.pixel)
    normal = backproject(radon_image(test_image, grid), spec)
    ref = riesz_potential(test_image)
    a = normal.values.ravel()
    b = ref.values.ravel()
    c = float(a @ b / (b @ b))
    resid = float(np.linalg.norm(a - c * b) / np.linalg.norm(a))
    return NormalOperatorReport(c, resid, normal, ref)
