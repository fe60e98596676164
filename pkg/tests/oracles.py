"""Reference computations that share no code path with the package."""

import math

import mpmath
import numpy as np
from scipy import optimize


def shoelace_area(curve, n=20000):
    p = curve.evaluate(curve.sample_params(n))
    x, y = p[:, 0], p[:, 1]
    return 0.5 * abs(float(np.dot(x, np.roll(y, -1)) - np.dot(np.roll(x, -1), y)))


def beam_hardening_mp(x, eps, dps=50):
    with mpmath.workdps(dps):
        y = mpmath.mpf(eps) * mpmath.mpf(x)
        if y == 0:
            return 0.0
        return float(-mpmath.log(mpmath.sinh(y) / y))


def _tangent_line(curve, t):
    """Raw (phi, s) with phi = atan2 of the normal, no quotient normalisation."""
    d1 = curve.evaluate(t, 1)
    phi = math.atan2(-d1[0], d1[1])
    g = curve.evaluate(t)
    return phi, g[0] * math.cos(phi) + g[1] * math.sin(phi)


def _residual(curve, tt):
    p1, s1 = _tangent_line(curve, tt[0])
    p2, s2 = _tangent_line(curve, tt[1])
    # two lines coincide iff their normals are parallel and the offsets agree
    return [math.sin(p1 - p2), s1 - s2 * math.cos(p1 - p2)]


def brute_force_bitangents(curve, n=900, min_sep=0.2):
    """All-pairs search over tangent lines at ``n`` samples, polished by least squares.

    Returns a sorted list of ``(phi, s)`` in the quotient representative
    ``phi in [0, pi)``.
    """
    t = curve.sample_params(n)
    d1 = curve.evaluate(t, 1)
    g = curve.evaluate(t)
    phi = np.arctan2(-d1[:, 0], d1[:, 1])
    s = g[:, 0] * np.cos(phi) + g[:, 1] * np.sin(phi)
    # distance between the oriented lines (phi_i, s_i), (phi_j, s_j) and their flips
    dphi = phi[:, None] - phi[None, :]
    same = np.abs(np.angle(np.exp(1j * dphi))) + np.abs(s[:, None] - s[None, :])
    flip = np.abs(np.angle(np.exp(1j * (dphi - math.pi)))) + np.abs(s[:, None] + s[None, :])
    D = np.minimum(same, flip)
    sep = np.abs(t[:, None] - t[None, :])
    sep = np.minimum(sep, curve.length - sep)
    D[sep < min_sep] = np.inf
    iu = np.triu_indices(n, 1)
    mask = np.zeros_like(D, dtype=bool)
    mask[iu] = True
    D[~mask] = np.inf

    # local minima over the 8-neighbourhood (periodic in both parameters)
    cands = []
    for i, j in zip(*np.nonzero(np.isfinite(D))):
        v = D[i, j]
        nb = D[np.ix_([(i - 1) % n, i, (i + 1) % n], [(j - 1) % n, j, (j + 1) % n])]
        if v <= np.min(nb) and v < 20 * curve.length / n:
            cands.append((t[i], t[j]))

    found = []
    for t1, t2 in cands:
        res = optimize.least_squares(lambda x: _residual(curve, x), [t1, t2], xtol=1e-15, ftol=1e-15, gtol=1e-15)
        if np.max(np.abs(res.fun)) > 1e-10:
            continue
        a, b = res.x % curve.length
        d = abs(a - b)
        if min(d, curve.length - d) < min_sep / 2:
            continue
        p, sv = _tangent_line(curve, a)
        p = p % (2 * math.pi)
        if p >= math.pi:
            p, sv = p - math.pi, -sv
        if all(abs(p - q) + abs(sv - r) > 1e-7 for q, r in found):
            found.append((p, sv))
    return sorted(found)
