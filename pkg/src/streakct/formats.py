"""Binary and text formats for sinograms and images.

``SINO1``: magic, u64 n_phi, u64 n_s, f64 s_max, then n_phi*n_s f64 row-major.
``IMG1``:  magic, u64 n, u64 n, f64 r, then n*n f64 row-major.
All little-endian.  Images can also be written as 16-bit PGM with the
min/max scaling recorded in a ``.scale`` sidecar.
"""

import struct

import numpy as np

from .transform import ImageGrid, ImageSpec, Sinogram, SinogramGrid

SINO_MAGIC = b"SINO1"
IMG_MAGIC = b"IMG1"
_HEADER = struct.Struct("<QQd")


class FormatError(Exception):
    pass


def _write(path, magic, a, b, x, values):
    with open(path, "wb") as fh:
        fh.write(magic)
        fh.write(_HEADER.pack(a, b, x))
        fh.write(np.ascontiguousarray(values, dtype="<f8").tobytes())


def _read(path, magic):
    with open(path, "rb") as fh:
        data = fh.read()
    if not data.startswith(magic):
        raise FormatError(f"{path}: bad magic, expected {magic!r}")
    off = len(magic)
    if len(data) < off + _HEADER.size:
        raise FormatError(f"{path}: truncated header")
    a, b, x = _HEADER.unpack_from(data, off)
    off += _HEADER.size
    if len(data) - off != 8 * a * b:
        raise FormatError(f"{path}: payload has {len(data) - off} bytes, expected {8 * a * b}")
    vals = np.frombuffer(data, dtype="<f8", offset=off).reshape(a, b).astype(float)
    return a, b, x, vals


def save_sinogram(path, sino):
    g = sino.grid
    _write(path, SINO_MAGIC, g.n_phi, g.n_s, g.s_max, sino.values)


def load_sinogram(path):
    n_phi, n_s, s_max, vals = _read(path, SINO_MAGIC)
    return Sinogram(SinogramGrid(int(n_s), int(n_phi), float(s_max)), vals)


def save_image(path, image):
    _write(path, IMG_MAGIC, image.n, image.n, image.r, image.values)


def load_image(path):
    n, m, r, vals = _read(path, IMG_MAGIC)
    if n != m:
        raise FormatError(f"{path}: image is {n}x{m}, expected square")
    return ImageGrid(ImageSpec(int(n), float(r)), vals)


def sinogram_to_csv(path, sino):
    """Header line ``# n_phi n_s s_max`` then one row per angle."""
    g = sino.grid
    header = f"n_phi={g.n_phi} n_s={g.n_s} s_max={g.s_max!r}"
    np.savetxt(path, sino.values, delimiter=",", fmt="%.17g", header=header)


def sinogram_from_csv(path):
    with open(path) as fh:
        first = fh.readline()
    try:
        fields = dict(kv.split("=") for kv in first.lstrip("# ").split())
        grid = SinogramGrid(int(fields["n_s"]), int(fields["n_phi"]), float(fields["s_max"]))
    except (KeyError, ValueError) as exc:
        raise FormatError(f"{path}: bad CSV header: {first.strip()!r}") from exc
    vals = np.loadtxt(path, delimiter=",", ndmin=2)
    return Sinogram(grid, vals)


def save_pgm(path, image):
    """16-bit binary PGM (row 0 at the top = largest x2) plus ``path + '.scale'``."""
    v = image.values[::-1]
    lo, hi = float(v.min()), float(v.max())
    span = hi - lo if hi > lo else 1.0
    q = np.round((v - lo) / span * 65535).astype(">u2")
    with open(path, "wb") as fh:
        fh.write(f"P5\n{image.n} {image.n}\n65535\n".encode())
        fh.write(q.tobytes())
    with open(str(path) + ".scale", "w") as fh:
        fh.write(f"min {lo!r}\nmax {hi!r}\n")
    return lo, hi
