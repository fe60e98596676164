"""Ready-made boundary curves used by the tests, the CLI defaults and the docs."""

import numpy as np

from .geometry import ParamCurve


def circle(radius=1.0, center=(0.0, 0.0)):
    return ParamCurve([center[0], radius], [0, 0], [center[1], 0], [0, radius])


def ellipse(a=1.0, b=0.5, center=(0.0, 0.0)):
    return ParamCurve([center[0], a], [0, 0], [center[1], 0], [0, b])


def bean(c=0.45):
    """``(cos t, sin t + c sin 2t)``.

    For c = 0.45 the curve has a sharp nose at t = pi flanked by two dents,
    so its curvature changes sign four times.
    """
    return ParamCurve([0, 1, 0], [0, 0, 0], [0, 0, 0], [0, 1, c])


def two_concavity(c2=0.45, c3=0.45):
    return ParamCurve([0, 1, 0, 0], [0, 0, 0, 0], [0, 0, 0, 0], [0, 1, c2, c3])


def limacon(a=0.7, scale=1.0, center=True):
    """``r = 1 + a cos t``; one dimple with two simple inflections when 0.5 < a < 1.

    In Cartesian form ``x = a/2 + cos t + (a/2) cos 2t``,
    ``y = sin t + (a/2) sin 2t``.  With ``center`` the x-extent is centred.
    """
    x0 = a / 2
    if center:
        xmin = _limacon_xmin(a)
        x0 -= 0.5 * (xmin + 1 + a)
    c = ParamCurve([x0, 1, a / 2], [0, 0, 0], [0, 0, 0], [0, 1, a / 2])
    return c.transformed(scale=scale) if scale != 1.0 else c


def _limacon_xmin(a):
    t = np.linspace(0, 2 * np.pi, 20001)
    return float(np.min((1 + a * np.cos(t)) * np.cos(t)))


def figure1_domain():
    """Non-convex domain with two simple inflections and one bitangent."""
    return limacon(0.7)


def flat_side(power=6, height=2.0):
    """Closed curve whose bottom is flat to high order at t = 0.

    ``x = sin t``, ``x2 = -1 + A (1 - cos t)**power`` with A chosen so the
    top sits at ``-1 + height``.  Curvature vanishes like ``t**(2 power - 2)``
    at the bottom, so it is numerically zero over a whole arc.
    """
    A = height / 2.0 ** power
    return ParamCurve.from_functions(
        np.sin, lambda t: -1.0 + A * (1.0 - np.cos(t)) ** power, max_harmonic=power, n=8 * (power + 1))
