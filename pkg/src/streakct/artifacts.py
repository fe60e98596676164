"""Metal-artifact simulation, the canonical relation of the Radon transform and
quantitative localisation of streaks against the predicted line set.

Phase-space conventions: for ``(x, xi)`` with ``xi != 0``
``C(x, xi) = (x . xi/|xi|, arg xi, |xi|, -x . xi_perp)`` with
``xi_perp = (-xi2, xi1)``, and the inverse
``C^-1(s, phi, sigma, eta) = (s theta - (eta/sigma) theta_perp, sigma theta)``.
Points of line phase space are stored with ``phi in [0, pi)`` using
``(s, phi, sigma, eta) ~ (-s, phi + pi, -sigma, eta)``.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .geometry import LineSet
from .nonlinearity import apply_pointwise
from .transform import ImageGrid, fbp, radon_indicator

BOUNDARY = "boundary"
N_POLYGON = 2048


class ZeroCovectorError(ValueError):
    pass


class EmptyThresholdError(ValueError):
    pass


# ---------------------------------------------------------------------------
# canonical relation
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PhaseSpacePoint2D:
    x: tuple
    xi: tuple

    def __post_init__(self):
        if math.hypot(*self.xi) == 0:
            raise ZeroCovectorError("xi must be nonzero")


@dataclass(frozen=True)
class PhaseSpacePointL:
    s: float
    phi: float
    sigma: float
    eta: float

    def __post_init__(self):
        if self.sigma == 0:
            raise ZeroCovectorError("sigma must be nonzero")

    def normalized(self):
        s, phi, sigma, eta = normalize_phase(self.s, self.phi, self.sigma, self.eta)
        return PhaseSpacePointL(float(s), float(phi), float(sigma), float(eta))


def normalize_phase(s, phi, sigma, eta):
    """Representative with phi in [0, pi) under (s, phi, sigma, eta) ~ (-s, phi + pi, -sigma, eta)."""
    s, phi, sigma, eta = (np.asarray(v, dtype=float) for v in (s, phi, sigma, eta))
    k = np.floor(phi / math.pi)
    phi = phi - k * math.pi
    # guard the rounding case phi == pi after reduction
    over = phi >= math.pi
    phi = np.where(over, phi - math.pi, phi)
    k = k + over
    flip = (k % 2) != 0
    return np.where(flip, -s, s), phi, np.where(flip, -sigma, sigma), eta


def canonical_forward_arrays(x, xi):
    """Vectorised C on arrays of shape (..., 2); returns normalised (s, phi, sigma, eta)."""
    x = np.asarray(x, dtype=float)
    xi = np.asarray(xi, dtype=float)
    sigma = np.hypot(xi[..., 0], xi[..., 1])
    if np.any(sigma == 0):
        raise ZeroCovectorError("xi must be nonzero")
    s = (x[..., 0] * xi[..., 0] + x[..., 1] * xi[..., 1]) / sigma
    phi = np.arctan2(xi[..., 1], xi[..., 0])
    eta = -(x[..., 0] * -xi[..., 1] + x[..., 1] * xi[..., 0])
    return normalize_phase(s, phi, sigma, eta)


def canonical_inverse_arrays(s, phi, sigma, eta):
    s, phi, sigma, eta = (np.asarray(v, dtype=float) for v in (s, phi, sigma, eta))
    if np.any(sigma == 0):
        raise ZeroCovectorError("sigma = 0 is outside the range of C")
    c, sn = np.cos(phi), np.sin(phi)
    r = eta / sigma
    x = np.stack([s * c + r * sn, s * sn - r * c], axis=-1)
    xi = np.stack([sigma * c, sigma * sn], axis=-1)
    return x, xi


def canonical_forward(p):
    s, phi, sigma, eta = canonical_forward_arrays(p.x, p.xi)
    return PhaseSpacePointL(float(s), float(phi), float(sigma), float(eta))


def canonical_inverse(q):
    x, xi = canonical_inverse_arrays(q.s, q.phi, q.sigma, q.eta)
    return PhaseSpacePoint2D(tuple(map(float, x)), tuple(map(float, xi)))


# ---------------------------------------------------------------------------
# simulation
# ---------------------------------------------------------------------------


def metal_artifact(curve, model, sino_grid, img_spec, mode="artifact", window=None):
    """FBP image of ``F(R(alpha chi_D))``.

    ``mode="full"`` reconstructs ``R f + F(R f)`` instead, i.e. the metal
    object together with its artifact.
    """
    sino = radon_indicator(curve, model.alpha, sino_grid)
    return artifact_from_sinogram(sino, model, img_spec, mode, window)[1]


def artifact_from_sinogram(sino, model, img_spec, mode="artifact", window=None):
    """``(P_MA, image)`` for a precomputed ``R f``."""
    p_ma = apply_pointwise(sino, model)
    data = p_ma
    if mode == "full":
        data = p_ma.with_values(p_ma.values + sino.values)
    elif mode != "artifact":
        raise ValueError(f"unknown mode {mode!r}")
    return p_ma, fbp(data, img_spec, window=window)


def singular_support_map(img):
    """Central-difference gradient magnitude in physical units; border pixels are 0."""
    v = img.values
    h = img.spec.pixel
    out = np.zeros_like(v)
    gx = (v[1:-1, 2:] - v[1:-1, :-2]) / (2 * h)
    gy = (v[2:, 1:-1] - v[:-2, 1:-1]) / (2 * h)
    out[1:-1, 1:-1] = np.hypot(gx, gy)
    return ImageGrid(img.spec, out)


# ---------------------------------------------------------------------------
# scoring
# ---------------------------------------------------------------------------


@dataclass
class ArtifactScore:
    tube_radius: float
    threshold_quantile: float
    inside_fraction: float
    breakdown: dict = field(default_factory=dict)
    n_selected: int = 0
    threshold: float = 0.0

    def to_text(self):
        rows = [
            f"tube_radius = {self.tube_radius!r}",
            f"threshold_quantile = {self.threshold_quantile!r}",
            f"threshold = {self.threshold!r}",
            f"n_selected = {self.n_selected}",
            f"inside_fraction = {self.inside_fraction!r}",
        ]
        rows += [f"mass.{k} = {v!r}" for k, v in self.breakdown.items()]
        return "\n".join(rows) + "\n"


def _labels(lines):
    return [f"{i}:{ln.kind}" for i, ln in enumerate(lines)]


def _polyline_distance(pts, poly):
    """Distance from each point to a closed polygon (vertices ``poly``)."""
    a = poly
    b = np.roll(poly, -1, axis=0)
    d = b - a
    dd = np.einsum("ij,ij->i", d, d)
    dd = np.where(dd > 0, dd, 1.0)
    best = np.full(len(pts), np.inf)
    for lo in range(0, len(pts), 1024):
        p = pts[lo:lo + 1024, None, :]
        t = np.clip(np.einsum("pkj,kj->pk", p - a, d) / dd, 0.0, 1.0)
        q = a + t[..., None] * d
        best[lo:lo + 1024] = np.min(np.hypot(*(p - q).transpose(2, 0, 1)), axis=1)
    return best


def object_distances(points, lines, curve, n_polygon=N_POLYGON):
    """(n_points, n_lines + 1) distances; the last column is the boundary."""
    cols = [np.abs(points @ ln.theta - ln.s) for ln in lines]
    if curve is not None:
        poly = curve.evaluate(curve.sample_params(n_polygon))
        cols.append(_polyline_distance(points, poly))
    else:
        cols.append(np.full(len(points), np.inf))
    return np.stack(cols, axis=1)


def _select(gradmap, quantile):
    if not 0 < quantile < 1:
        raise ValueError("quantile must lie in (0, 1)")
    v = gradmap.values
    thr = float(np.quantile(v, quantile))
    mask = v > thr
    if not mask.any():
        raise EmptyThresholdError(f"no pixel exceeds the {quantile} quantile ({thr:.6g})")
    rows, cols = np.nonzero(mask)
    c = gradmap.spec.centers
    pts = np.stack([c[cols], c[rows]], axis=1)
    return pts, v[rows, cols], thr


def _score_from_distances(dist, mass, labels, tube, quantile, thr):
    total = float(np.sum(mass))
    near = np.min(dist, axis=1) <= tube
    nearest = np.argmin(dist, axis=1)
    breakdown = {}
    for k, lab in enumerate(labels):
        breakdown[lab] = float(np.sum(mass[near & (nearest == k)]) / total)
    inside = float(np.sum(mass[near]) / total)
    return inside, breakdown


def localization_score(gradmap, lines, curve, tube_radius=3.0, quantile=0.99):
    """Mass fraction of the top ``1 - quantile`` pixels of ``gradmap`` lying
    within ``tube_radius`` pixels of the predicted lines or of the boundary."""
    if tube_radius < 1:
        raise ValueError("tube_radius must be at least one pixel")
    pts, mass, thr = _select(gradmap, quantile)
    dist = object_distances(pts, lines, curve)
    tube = tube_radius * gradmap.spec.pixel
    labels = _labels(lines) + [BOUNDARY]
    inside, breakdown = _score_from_distances(dist, mass, labels, tube, quantile, thr)
    return ArtifactScore(float(tube_radius), float(quantile), inside, breakdown, int(len(mass)), thr)


def drop_one_sensitivity(gradmap, lines, curve, tube_radius=3.0, quantile=0.99):
    """inside_fraction of the full set minus that with each line removed in turn."""
    pts, mass, thr = _select(gradmap, quantile)
    dist = object_distances(pts, lines, curve)
    tube = tube_radius * gradmap.spec.pixel
    total = float(np.sum(mass))
    full = float(np.sum(mass[np.min(dist, axis=1) <= tube])) / total
    drops = []
    for i in range(len(lines)):
        keep = np.delete(dist, i, axis=1)
        drops.append(full - float(np.sum(mass[np.min(keep, axis=1) <= tube])) / total)
    return full, drops


def random_baseline(spec, lines, curve, tube_radius=3.0, quantile=0.99, seed=0):
    """Score of an i.i.d. uniform gradient map; approximates the tube area fraction."""
    rng = np.random.default_rng(seed)
    g = ImageGrid(spec, rng.random((spec.n, spec.n)))
    return localization_score(g, lines if lines is not None else LineSet(), curve, tube_radius, quantile)
