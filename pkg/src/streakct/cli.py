"""Command line front end: ``streakct {predict,simulate,cusp,verify}``."""

import argparse
import logging
import math
import os
import sys

import numpy as np

from . import config as cfgmod
from . import cuspwave, formats, geometry, shapes
from .artifacts import (EmptyThresholdError, artifact_from_sinogram, canonical_forward_arrays,
                        canonical_inverse_arrays, drop_one_sensitivity, localization_score, random_baseline,
                        singular_support_map)
from .nonlinearity import BeamModel
from .transform import ImageGrid, ImageSpec, SinogramGrid, TransformError, normal_operator_check, radon_indicator

log = logging.getLogger("streakct")

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_ASSUMPTION = 2
EXIT_NUMERIC = 3

EPILOG = """exit codes:
  0  success
  1  usage, config or input-file parse error
  2  boundary violates the curvature (A1) or tangency (A2) assumption; outputs are still written
  3  numerical failure (root finding, aliasing guard, empty threshold set, failed verify suite)
"""


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


# ---------------------------------------------------------------------------
# building blocks from the config
# ---------------------------------------------------------------------------


def build_curve(cfg):
    c = cfg["curve"]
    if c["file"]:
        try:
            return geometry.ParamCurve.load(c["file"])
        except OSError as exc:
            raise UsageError(f"cannot read curve file {c['file']}: {exc.strerror}") from None
        except geometry.CurveFormatError as exc:
            raise UsageError(f"{c['file']}: {exc}") from None
    p = c["param"]
    args = () if math.isnan(p) else (p,)
    shape = c["shape"]
    if shape == "figure1":
        if args:
            raise UsageError("curve.param is not used by the figure1 shape")
        return shapes.figure1_domain()
    if shape == "ellipse":
        return shapes.ellipse(1.0, *(args or (0.5,)))
    if shape == "circle":
        return shapes.circle(*args)
    if shape == "flat_side":
        return shapes.flat_side(*(int(a) for a in args))
    return getattr(shapes, shape)(*args)


def build_model(cfg):
    nl = cfg["nonlinearity"]
    kw = dict(variant=nl["variant"], eps=nl["eps"], alpha=nl["alpha"], a=nl["a"])
    if nl["variant"] == "table":
        if not nl["table"]:
            raise UsageError("nonlinearity.table must name a CSV file for the table variant")
        try:
            tab = np.loadtxt(nl["table"], delimiter=",", ndmin=2)
        except (OSError, ValueError) as exc:
            raise UsageError(f"cannot read table {nl['table']}: {exc}") from None
        if tab.shape[1] != 2:
            raise UsageError(f"{nl['table']}: expected two columns x,y")
        kw.update(table_x=tab[:, 0], table_y=tab[:, 1])
    try:
        return BeamModel(**kw)
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def build_grids(cfg, curve):
    im = cfg["image"]
    spec = ImageSpec(im["n"], im["r"])
    sg = cfg["sinogram"]
    s_max = sg["s_max"] or im["r"] * math.sqrt(2.0)
    n_s = sg["n_s"] or 2 * int(math.ceil(s_max / spec.pixel)) + 1
    grid = SinogramGrid(n_s, sg["n_phi"], s_max)
    reach = float(np.max(np.hypot(*curve.evaluate(curve.sample_params(2048)).T)))
    if reach >= grid.s_max:
        raise UsageError(f"sinogram.s_max = {grid.s_max:.6g} does not cover the curve (radius {reach:.6g})")
    if reach >= spec.r:
        raise UsageError(f"image.r = {spec.r:.6g} does not contain the curve (radius {reach:.6g})")
    return grid, spec


def _write(out, name, text):
    with open(os.path.join(out, name), "w", encoding="utf-8") as fh:
        fh.write(text)


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------


def cmd_predict(cfg, out):
    curve = build_curve(cfg)
    rep = geometry.validate_assumptions(curve)
    _write(out, "lines.csv", rep.lines.to_csv())
    _write(out, "assumptions.txt", rep.to_text())
    log.info("%d predicted lines; A1 %s, A2 %s", len(rep.lines), rep.a1, rep.a2)
    return EXIT_OK if rep.ok else EXIT_ASSUMPTION


def cmd_simulate(cfg, out):
    curve = build_curve(cfg)
    model = build_model(cfg)
    grid, spec = build_grids(cfg, curve)
    rep = geometry.validate_assumptions(curve)
    lines = rep.lines
    _write(out, "lines.csv", lines.to_csv())
    _write(out, "assumptions.txt", rep.to_text())

    nl = cfg["nonlinearity"]
    window = None if nl["window"] == "none" else nl["window"]
    sino = radon_indicator(curve, model.alpha, grid)
    formats.save_sinogram(os.path.join(out, "sinogram.sino"), sino)
    p_ma, img = artifact_from_sinogram(sino, model, spec, mode=nl["mode"], window=window)
    formats.save_sinogram(os.path.join(out, "p_ma.sino"), p_ma)
    formats.save_image(os.path.join(out, "f_ma.img"), img)
    formats.save_pgm(os.path.join(out, "f_ma.pgm"), img)
    grad = singular_support_map(img)
    formats.save_image(os.path.join(out, "gradient.img"), grad)
    formats.save_pgm(os.path.join(out, "gradient.pgm"), grad)

    sc = cfg["score"]
    score = localization_score(grad, lines, curve, sc["tube_radius"], sc["quantile"])
    _, drops = drop_one_sensitivity(grad, lines, curve, sc["tube_radius"], sc["quantile"])
    base = random_baseline(spec, lines, curve, sc["tube_radius"], sc["quantile"], seed=cfg["run"]["seed"])
    text = score.to_text()
    text += "".join(f"drop.{i}:{ln.kind} = {d!r}\n" for i, (ln, d) in enumerate(zip(lines, drops)))
    text += f"baseline.inside_fraction = {base.inside_fraction!r}\nbaseline.seed = {cfg['run']['seed']}\n"
    _write(out, "score.txt", text)
    log.info("inside_fraction %.4f over %d pixels", score.inside_fraction, score.n_selected)
    return EXIT_OK if rep.ok else EXIT_ASSUMPTION


def cmd_cusp(cfg, out):
    c = cfg["cusp"]
    sym = cuspwave.CuspSymbol(rho=c["rho"], width=c["width"], cone=c["cone"])
    v = cuspwave.synth_cusp_conormal(sym, c["n"], freq_scale=(c["dxi1"], c["dxi2"]))
    wf = cuspwave.cusp_point_wavefront_check(
        v, c["eps"], (c["fit_lo"], c["fit_hi"]), rho=c["rho"], radius=c["radius"],
        far_center=(c["far_x1"], c["far_x2"]), support_radius=sym.support_radius())
    F2 = cuspwave.squared_spectrum(v)
    del v
    rep = cuspwave.decay_slope(F2, c["eps"], (c["fit_lo"], c["fit_hi"]), c["rho"])
    text = f"rho = {c['rho']!r}\n" + rep.to_text()
    text += "".join(f"wavefront.{line}\n" for line in wf.to_text().splitlines())
    _write(out, "decay.txt", text)
    _write(out, "decay_samples.csv", rep.samples_csv())
    log.info("fitted slope %.4f (expected %.4f); far window %.4f", rep.fitted_slope, rep.expected_slope,
             wf.far.fitted_slope)
    return EXIT_OK


def _suite_canonical(cfg, rng):
    v = cfg["verify"]
    m = v["roundtrips"]
    x = rng.uniform(-2, 2, (m, 2))
    xi = rng.normal(size=(m, 2)) * rng.uniform(0.1, 10, (m, 1))
    s, phi, sigma, eta = canonical_forward_arrays(x, xi)
    x2, xi2 = canonical_inverse_arrays(s, phi, sigma, eta)
    err = max(float(np.max(np.abs(x2 - x))), float(np.max(np.abs(xi2 - xi))))
    ident = float(np.max(np.abs(np.sum(x * x, axis=1) - (s * s + (eta / sigma) ** 2))))
    return [("canonical_roundtrip", err, v["roundtrip_tol"]),
            ("canonical_norm_identity", ident, v["roundtrip_tol"])]


def _suite_tangency(cfg, curve):
    tol = cfg["verify"]["tangency_tol"]
    dual = geometry.dual_curve(curve)
    r_point, r_tan = dual.tangency_residuals()
    return [("dual_tangency_point", float(r_point.max()), tol), ("dual_tangency_direction", float(r_tan.max()), tol)]


def _suite_disk(cfg):
    n = cfg["verify"]["n"]
    grid = SinogramGrid.covering(1.5, int(round(1.40625 * n)), 3.0 / n)
    sino = radon_indicator(shapes.circle(), 1.0, grid)
    s = grid.s
    exact = 2 * np.sqrt(np.clip(1 - s * s, 0, None))
    err = float(np.max(np.abs(sino.values - exact[None, :])))
    return [("disk_sinogram_over_ds", err / grid.ds, cfg["verify"]["disk_tol"])]


def _gaussian(n, sigma=0.3, r=1.5):
    spec = ImageSpec(n, r)
    return ImageGrid.from_function(spec, lambda x, y: np.exp(-(x * x + y * y) / (2 * sigma * sigma)))


def _suite_normal(cfg):
    v = cfg["verify"]
    n = v["n"]
    a = normal_operator_check(_gaussian(n))
    b = normal_operator_check(_gaussian(2 * n))
    quantum = 0.5 * 10.0 ** (math.floor(math.log10(abs(b.c))) - v["c_digits"] + 1)
    return [("normal_residual", max(a.residual, b.residual), v["normal_tol"]),
            ("normal_c_two_grids", abs(a.c - b.c), quantum)]


def _suite_parseval(cfg, rng):
    n2, n1 = 64, 128
    field = cuspwave.CuspField(rng.normal(size=(n2, n1)), 0.1, 0.2, 2 * math.pi / (n1 * 0.1),
                               2 * math.pi / (n2 * 0.2))
    F = cuspwave.squared_spectrum(field)
    lhs = float(np.sum(field.values ** 4)) * field.dx1 * field.dx2
    w = np.full(F.values.shape[1], 2.0)
    w[0] = 1.0
    w[-1] = 1.0
    rhs = float(np.sum(np.abs(F.values) ** 2 * w[None, :])) * F.dxi1 * F.dxi2 / (2 * math.pi) ** 2
    return [("parseval_relative", abs(lhs - rhs) / lhs, cfg["verify"]["parseval_tol"])]


def cmd_verify(cfg, out):
    curve = build_curve(cfg)
    rng = np.random.default_rng(cfg["run"]["seed"])
    rows = []
    rows += _suite_canonical(cfg, rng)
    rows += _suite_tangency(cfg, curve)
    rows += _suite_disk(cfg)
    rows += _suite_normal(cfg)
    rows += _suite_parseval(cfg, rng)
    lines = []
    ok = True
    for name, value, tol in rows:
        passed = value < tol
        ok &= passed
        lines.append(f"{name} = {'pass' if passed else 'fail'} {value!r} {tol!r}")
    lines.append(f"all = {'pass' if ok else 'fail'}")
    text = "\n".join(lines) + "\n"
    _write(out, "verify.txt", text)
    sys.stdout.write(text)
    return EXIT_OK if ok else EXIT_NUMERIC


COMMANDS = {"predict": cmd_predict, "simulate": cmd_simulate, "cusp": cmd_cusp, "verify": cmd_verify}


def build_parser():
    p = _Parser(prog="streakct", description="Predict and simulate streak artifacts of non-convex metal regions.",
                epilog=EPILOG, formatter_class=argparse.RawDescriptionHelpFormatter)
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)
    helps = {
        "predict": "predicted line set and assumption report",
        "simulate": "simulate the artifact image and score it against the prediction",
        "cusp": "Fourier decay of the square of a cusp-conormal field",
        "verify": "run the numerical self-checks",
    }
    for name, h in helps.items():
        sp = sub.add_parser(name, help=h, description=h, epilog=EPILOG,
                            formatter_class=argparse.RawDescriptionHelpFormatter)
        sp.add_argument("--config", help="config file ([section] key = value)")
        sp.add_argument("--out", required=True, help="output directory (created if missing)")
        sp.add_argument("--seed", type=int, help="overrides run.seed")
        sp.add_argument("--set", action="append", default=[], metavar="SECTION.KEY=VALUE",
                        help="override one config value; repeatable")
        if name == "cusp":
            sp.add_argument("--rho", type=float)
            sp.add_argument("--eps", type=float)
            sp.add_argument("--n", type=int)
    return p


def _resolve_config(args):
    cfg = cfgmod.load(args.config) if args.config else cfgmod.defaults()
    for item in args.set:
        key, sep, val = item.partition("=")
        if not sep:
            raise cfgmod.ConfigError(f"--set expects SECTION.KEY=VALUE, got {item!r}")
        cfgmod.set_value(cfg, key.strip(), val.strip())
    if args.seed is not None:
        cfgmod.set_value(cfg, "run.seed", str(args.seed))
    for flag in ("rho", "eps", "n"):
        val = getattr(args, flag, None)
        if val is not None:
            cfgmod.set_value(cfg, f"cusp.{flag}", str(val))
    return cfg


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(name)s: %(message)s")
    try:
        cfg = _resolve_config(args)
        os.makedirs(args.out, exist_ok=True)
        _write(args.out, "config.ini", cfgmod.dumps(cfg))
        return COMMANDS[args.command](cfg, args.out)
    except (cfgmod.ConfigError, UsageError) as exc:
        print(f"streakct: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (geometry.A1ViolationError, geometry.A2ViolationError) as exc:
        print(f"streakct: assumption violated: {exc}", file=sys.stderr)
        return EXIT_ASSUMPTION
    except (TransformError, geometry.GeometryError, cuspwave.AliasingError, cuspwave.WindowError,
            EmptyThresholdError, FloatingPointError, np.linalg.LinAlgError) as exc:
        print(f"streakct: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
