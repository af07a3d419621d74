"""Command-line front end: ``polylab <command> [options]``.

Commands: sample, exact, integrate, estimate, census, surplus, compare.
Results go to ``--out`` (default stdout). When ``--out`` is a file a
``<out>.manifest.json`` sidecar records the command line, seed, library
versions, timestamps and the SHA-256 of the output; JSON results written
to stdout embed the manifest instead, and CSV written to stdout sends it
to stderr.

Seeds come from ``--seed``, else ``POLYLAB_SEED``, else 0.
Exit codes: 0 success, 1 convergence or statistical failure, 2 usage error.
"""
from __future__ import annotations

import argparse
import datetime as _dt
import hashlib
import io
import math
import os
import platform
import sys
from dataclasses import dataclass, field

import numpy as np

from . import __version__, analytic, kernels
from . import montecarlo as mc
from . import quadrature as quad
from .errors import ConvergenceError, DomainError, SampleEvaluationError, UnsupportedDimensionError
from .geometry import write_polygons_csv
from .samplers import RADIAL_LAWS, SamplerConfig, make_sampler, radial_law

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2
SEED_ENV = "POLYLAB_SEED"

SAMPLE_MEASURES = ("hopf-gaussian-arm", "hopf-gaussian-closed", "symmetric-closed", "equilateral-mcmc")


class UsageError(Exception):
    pass


# -- output helpers ---------------------------------------------------------


def fmt(x) -> str:
    return format(float(x), ".17g")


def to_json(obj, indent: int = 0) -> str:
    """JSON with every float written at 17 significant digits."""
    pad = "  " * (indent + 1)
    end = "  " * indent
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{to_json(str(k))}: {to_json(v, indent + 1)}" for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        return "[" + ", ".join(to_json(v, indent + 1) for v in obj) + "]"
    if isinstance(obj, bool) or obj is None:
        return {True: "true", False: "false", None: "null"}[obj]
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        if math.isfinite(x):
            return fmt(x)
        return '"nan"' if math.isnan(x) else ('"inf"' if x > 0 else '"-inf"')
    s = str(obj)
    return '"' + s.replace("\\", "\\\\").replace('"', '\\"').replace("\n", "\\n") + '"'


def _now() -> str:
    return _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="microseconds")


@dataclass
class RunManifest:
    command: list[str]
    seed: int | None
    versions: dict = field(default_factory=dict)
    started: str = field(default_factory=_now)
    finished: str | None = None
    outputs: dict = field(default_factory=dict)

    def __post_init__(self):
        import scipy

        if not self.versions:
            self.versions = {
                "polylab": __version__,
                "kernel_backend": kernels.BACKEND,
                "python": platform.python_version(),
                "numpy": np.__version__,
                "scipy": scipy.__version__,
            }

    def record(self, name: str, data: bytes) -> None:
        self.outputs[name] = hashlib.sha256(data).hexdigest()

    def as_dict(self) -> dict:
        return {
            "command": self.command,
            "seed": self.seed,
            "versions": self.versions,
            "started": self.started,
            "finished": self.finished,
            "outputs": self.outputs,
        }


def _emit(args, manifest: RunManifest, text: str, kind: str) -> None:
    data = text.encode("utf-8")
    manifest.finished = _now()
    if args.out and args.out != "-":
        with open(args.out, "wb") as fh:
            fh.write(data)
        manifest.record(os.path.basename(args.out), data)
        with open(args.out + ".manifest.json", "w", encoding="utf-8") as fh:
            fh.write(to_json(manifest.as_dict()) + "\n")
        return
    manifest.record("<stdout>", data)
    sys.stdout.write(text)
    sys.stdout.flush()
    if kind == "csv":
        sys.stderr.write(to_json(manifest.as_dict()) + "\n")


def _emit_json(args, manifest: RunManifest, payload: dict) -> None:
    if args.out and args.out != "-":
        _emit(args, manifest, to_json(payload) + "\n", "json")
        return
    manifest.finished = _now()
    body = to_json(payload)
    manifest.record("result", body.encode("utf-8"))
    sys.stdout.write(to_json({**payload, "manifest": manifest.as_dict()}) + "\n")


def resolve_seed(value: int | None) -> int:
    if value is not None:
        return value
    env = os.environ.get(SEED_ENV)
    if env is None or env.strip() == "":
        return 0
    try:
        return int(env, 0)
    except ValueError as exc:
        raise UsageError(f"{SEED_ENV} must be an integer, got {env!r}") from exc


def parse_range(text: str) -> list[int]:
    """``"5..25"``, ``"5-25"`` or a comma list like ``"4,6,10"``."""
    out: list[int] = []
    try:
        for part in text.split(","):
            part = part.strip()
            for sep in ("..", ":"):
                if sep in part:
                    lo, hi = part.split(sep)
                    out.extend(range(int(lo), int(hi) + 1))
                    break
            else:
                if "-" in part[1:]:
                    lo, hi = part.split("-", 1)
                    out.extend(range(int(lo), int(hi) + 1))
                else:
                    out.append(int(part))
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"bad range {text!r}") from exc
    if not out:
        raise argparse.ArgumentTypeError(f"empty range {text!r}")
    return out


def parse_counts(text: str) -> list[int]:
    try:
        vals = [int(float(t)) for t in text.split(",") if t.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"bad count list {text!r}") from exc
    if not vals or min(vals) < 2:
        raise argparse.ArgumentTypeError("counts must be integers >= 2")
    return vals


def _int(text: str) -> int:
    return int(float(text)) if "e" in text.lower() else int(text, 0)


def correct_digits(approx: float, exact: float) -> float:
    """``-log10`` of the relative error, floored at 0 (inf when exact)."""
    err = abs(approx - exact)
    if err == 0:
        return math.inf
    return max(0.0, -math.log10(err / abs(exact)))


# -- commands ---------------------------------------------------------------


def _check_measure(measure: str, n: int, d: int) -> None:
    if measure.startswith("radial:"):
        name = measure.split(":", 1)[1]
        if name not in RADIAL_LAWS:
            raise UsageError(f"unknown radial law {name!r}; choose from {', '.join(RADIAL_LAWS)}")
        return
    if measure not in SAMPLE_MEASURES:
        raise UsageError(f"unknown measure {measure!r}")
    if measure in ("symmetric-closed", "hopf-gaussian-closed") and n < 3:
        raise UsageError(f"closed polygons need --n >= 3, got {n}")
    if measure == "equilateral-mcmc":
        if d != 3:
            raise UsageError("equilateral-mcmc supports --d 3 only")
        if n < 4:
            raise UsageError(f"equilateral-mcmc needs --n >= 4, got {n}")


def cmd_sample(args) -> int:
    seed = resolve_seed(args.seed)
    if args.n < 1 or args.count < 0:
        raise UsageError("--n must be >= 1 and --count >= 0")
    _check_measure(args.measure, args.n, args.d)
    manifest = RunManifest(sys.argv[:] if args.argv is None else args.argv, seed)
    kw = {}
    if args.measure == "equilateral-mcmc":
        kw = {"burn_in": args.burn_in, "thin": args.thin}
    sampler = make_sampler(SamplerConfig(args.n, args.d, seed, args.stream_id, args.measure), **kw)
    buf = io.StringIO()
    if args.count == 0:
        buf.write(",".join(["poly_id", "edge_index", "x", "y", "z"][: 2 + args.d]) + "\n")
    written = 0
    block = mc.chunk_size(args.n)
    while written < args.count:
        size = min(block, args.count - written)
        write_polygons_csv(sampler.batch(size), buf, start_id=written, header=written == 0)
        written += size
    _emit(args, manifest, buf.getvalue(), "csv")
    return EXIT_OK


EXACT_QUANTITIES = (
    "total-curvature", "turning-angle", "surplus", "unknot-bound", "hausdorff-constant",
    "edge-moment", "chord", "gyradius", "arm-edge-moment", "arm-chord", "arm-gyradius",
    "asymptotic-surplus", "green-function",
)


def _need(args, *names):
    for name in names:
        if getattr(args, name) is None:
            raise UsageError(f"--quantity {args.quantity} requires --{name.replace('_', '-')}")


def exact_value(args) -> dict:
    q = args.quantity
    out: dict = {"quantity": q}
    if q in ("total-curvature", "turning-angle", "surplus", "unknot-bound", "hausdorff-constant",
             "edge-moment", "chord", "gyradius"):
        _need(args, "n")
        out["n"] = args.n
    if q == "total-curvature":
        out["value"] = analytic.exact_expected_total_curvature(args.n)
    elif q == "turning-angle":
        out["value"] = analytic.exact_expected_turning_angle(args.n)
    elif q == "surplus":
        out["value"] = analytic.exact_surplus(args.n)
    elif q == "unknot-bound":
        frac = analytic.unknot_fraction_bound_exact(args.n, args.bridge)
        out.update(bridge=args.bridge, value=float(frac), fraction=str(frac))
    elif q == "hausdorff-constant":
        out["value"] = analytic.hausdorff_constant(args.n)
    elif q == "edge-moment":
        _need(args, "p")
        out.update(p=args.p, value=analytic.closed_polygon_expectations(args.n).edge_moment(args.p))
    elif q == "chord":
        _need(args, "k")
        out.update(k=args.k, value=analytic.closed_polygon_expectations(args.n).chord(args.k))
    elif q == "gyradius":
        out["value"] = analytic.closed_polygon_expectations(args.n).gyradius
    elif q == "arm-edge-moment":
        _need(args, "p")
        if args.p != int(args.p):
            raise UsageError("--p must be an integer for arm moments")
        out.update(d=args.d, p=int(args.p), value=analytic.arm_edge_moment(args.d, int(args.p)))
    elif q == "arm-chord":
        _need(args, "k")
        out.update(d=args.d, k=args.k, value=analytic.arm_chord_expectation(args.d, args.k))
    elif q == "arm-gyradius":
        _need(args, "n")
        out.update(d=args.d, n=args.n, value=analytic.arm_gyradius_expectation(args.d, args.n))
    elif q == "asymptotic-surplus":
        if args.law:
            law = radial_law(args.law)
            m1, m2 = law.moment(1), law.moment(2)
            out["law"] = args.law
        else:
            _need(args, "m1", "m2")
            m1, m2 = args.m1, args.m2
        out.update(d=args.d, m1=m1, m2=m2, value=analytic.asymptotic_surplus(args.d, m1, m2))
    elif q == "green-function":
        _need(args, "k", "r")
        out.update(k=args.k, r=args.r, value=float(analytic.green_function(args.k, args.r)))
    else:
        raise UsageError(f"unknown quantity {q!r}")
    out["value"] = float(out["value"]) if not isinstance(out["value"], int) else out["value"]
    return out


def cmd_exact(args) -> int:
    payload = exact_value(args)
    _emit_json(args, RunManifest(args.argv or sys.argv[:], None), payload)
    return EXIT_OK


INTEGRALS = ("turning-angle", "total-curvature", "pair-normalization", "pair-norm", "edge-normalization", "edge-moment")


def cmd_integrate(args) -> int:
    spec = quad.QuadratureSpec(rtol=args.rtol, atol=args.atol)
    ctx = analytic.AnalyticContext(args.n)
    q = args.quantity
    exact = None
    if q == "turning-angle":
        res = quad.expected_turning_angle_numeric(ctx, spec)
        value, err = res.value, res.error
        exact = analytic.exact_expected_turning_angle(args.n)
    elif q == "total-curvature":
        res = quad.expected_turning_angle_numeric(ctx, spec)
        value, err = args.n * res.value, args.n * res.error
        exact = analytic.exact_expected_total_curvature(args.n)
    elif q in ("pair-normalization", "pair-norm"):
        res = quad.integrate_pairwise_normalization(ctx, spec)
        value, err, exact = res.value, res.error, 1.0
    elif q == "edge-normalization":
        res = quad.integrate_edge_moment(ctx, 0.0, spec)
        value, err, exact = res.value, res.error, 1.0
    elif q == "edge-moment":
        if args.p is None:
            raise UsageError("--quantity edge-moment requires --p")
        res = quad.integrate_edge_moment(ctx, args.p, spec)
        value, err = res.value, res.error
        if args.n >= 4:
            exact = analytic.closed_polygon_expectations(args.n).edge_moment(args.p)
    else:
        raise UsageError(f"unknown quantity {q!r}")
    payload = {
        "quantity": q, "n": args.n, "value": value, "error_bound": err,
        "evaluations": res.evaluations, "wall_time": res.seconds, "truncation": res.upper,
    }
    if exact is not None:
        payload["exact"] = exact
        payload["correct_digits"] = correct_digits(value, exact)
    _emit_json(args, RunManifest(args.argv or sys.argv[:], None), payload)
    return EXIT_OK


def cmd_estimate(args) -> int:
    seed = resolve_seed(args.seed)
    _check_measure(args.measure, args.n, args.d)
    if args.count < 2:
        raise UsageError("--count must be >= 2")
    try:
        mc.resolve_functional(args.quantity)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    manifest = RunManifest(args.argv or sys.argv[:], seed)
    cfg = SamplerConfig(args.n, args.d, seed, args.stream_id, args.measure)
    kw = {}
    if args.measure == "equilateral-mcmc":
        kw = {"chains": args.chains, "burn_in": args.burn_in, "thin": args.thin}
    rep = mc.estimate(args.quantity, cfg, args.count, workers=args.workers, **kw)
    payload = rep.as_dict()
    status = EXIT_OK
    if args.expect is not None:
        se = rep.stderr_batch if rep.stderr_batch is not None else rep.stderr
        z = (rep.mean - args.expect) / se if se > 0 else (0.0 if rep.mean == args.expect else math.inf)
        ok = abs(z) <= args.tolerance_se
        payload.update(expected=args.expect, z_score=z, within_tolerance=ok)
        status = EXIT_OK if ok else EXIT_FAIL
    _emit_json(args, manifest, payload)
    return status


def cmd_census(args) -> int:
    seed = resolve_seed(args.seed)
    if args.n < 3:
        raise UsageError("--n must be >= 3")
    if not args.threshold > 1:
        raise UsageError("--threshold is a multiple of 2 pi and must exceed 1")
    manifest = RunManifest(args.argv or sys.argv[:], seed)
    rep = mc.curvature_census(args.n, args.threshold, args.count, seed, workers=args.workers, d=args.d)
    payload = rep.as_dict()
    payload["lower_bound"] = analytic.unknot_fraction_bound(args.n, max(2, math.ceil(args.threshold)))
    _emit_json(args, manifest, payload)
    return EXIT_OK


def cmd_surplus(args) -> int:
    seed = resolve_seed(args.seed)
    if min(args.n_range) < 3:
        raise UsageError("every n must be >= 3")
    if args.measure == "equilateral-mcmc" and min(args.n_range) < 4:
        raise UsageError("equilateral-mcmc needs n >= 4")
    manifest = RunManifest(args.argv or sys.argv[:], seed)
    kw = {}
    if args.measure == "equilateral-mcmc":
        kw = {"chains": args.chains}
    rows = mc.surplus_curve(args.n_range, args.count, seed, args.measure, workers=args.workers, **kw)
    buf = io.StringIO()
    mc.write_surplus_csv(rows, buf)
    _emit(args, manifest, buf.getvalue(), "csv")
    return EXIT_OK


COMPARE_FIXED = ("n", "exact", "quadrature", "quadrature_error_bound", "quadrature_digits")


def cmd_compare(args) -> int:
    """Accuracy of quadrature and of Monte Carlo against the exact expected total curvature."""
    seed = resolve_seed(args.seed)
    if min(args.n_range) < 4:
        raise UsageError("quadrature of the pair density needs n >= 4")
    manifest = RunManifest(args.argv or sys.argv[:], seed)
    spec = quad.QuadratureSpec(rtol=args.rtol, atol=args.atol)
    header = list(COMPARE_FIXED)
    for c in args.mc_counts:
        header += [f"mc_{c}", f"mc_{c}_stderr", f"mc_{c}_digits"]
    lines = [",".join(header)]
    for n in args.n_range:
        exact = analytic.exact_expected_total_curvature(n)
        res = quad.expected_turning_angle_numeric(analytic.AnalyticContext(n), spec)
        qv = n * res.value
        row = [str(n), fmt(exact), fmt(qv), fmt(n * res.error), fmt(correct_digits(qv, exact))]
        for j, c in enumerate(args.mc_counts):
            rep = mc.estimate("curvature", SamplerConfig(n, 3, seed, j, "symmetric-closed"), c, workers=args.workers)
            row += [fmt(rep.mean), fmt(rep.stderr), fmt(correct_digits(rep.mean, exact))]
        lines.append(",".join(row))
    _emit(args, manifest, "\n".join(lines) + "\n", "csv")
    return EXIT_OK


# -- parser -----------------------------------------------------------------


def _common(p: argparse.ArgumentParser, seeded: bool = True) -> None:
    p.add_argument("--out", "-o", default=None, help="output file (default stdout)")
    if seeded:
        p.add_argument("--seed", type=_int, default=None, help=f"RNG seed (default ${SEED_ENV} or 0)")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="polylab", description="Random polygon curvature experiments.")
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__} ({kernels.BACKEND})")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("sample", help="stream random polygons as edge CSV")
    p.add_argument("--measure", default="symmetric-closed", help=f"{', '.join(SAMPLE_MEASURES)} or radial:<law>")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--d", type=int, choices=(2, 3), default=3)
    p.add_argument("--count", type=_int, default=1)
    p.add_argument("--stream-id", type=int, default=0)
    p.add_argument("--burn-in", type=int, default=None, help="crankshaft moves before the first sample")
    p.add_argument("--thin", type=int, default=None, help="crankshaft moves between samples")
    _common(p)
    p.set_defaults(func=cmd_sample)

    p = sub.add_parser("exact", help="closed-form expectations and constants")
    p.add_argument("--quantity", required=True, choices=EXACT_QUANTITIES)
    p.add_argument("--n", type=int)
    p.add_argument("--d", type=int, default=3)
    p.add_argument("--p", type=float)
    p.add_argument("--k", type=int)
    p.add_argument("--r", type=float)
    p.add_argument("--bridge", type=int, default=2)
    p.add_argument("--m1", type=float)
    p.add_argument("--m2", type=float)
    p.add_argument("--law", choices=sorted(RADIAL_LAWS))
    _common(p, seeded=False)
    p.set_defaults(func=cmd_exact)

    p = sub.add_parser("integrate", help="expectations by numerical quadrature")
    p.add_argument("--quantity", required=True, choices=INTEGRALS)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--p", type=float)
    p.add_argument("--rtol", "--reltol", dest="rtol", type=float, default=1e-11)
    p.add_argument("--atol", "--abstol", dest="atol", type=float, default=1e-13)
    _common(p, seeded=False)
    p.set_defaults(func=cmd_integrate)

    p = sub.add_parser("estimate", help="Monte Carlo mean of a functional")
    p.add_argument("--quantity", required=True, help=", ".join(mc.FUNCTIONAL_NAMES))
    p.add_argument("--measure", default="symmetric-closed")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--d", type=int, choices=(2, 3), default=3)
    p.add_argument("--count", type=_int, default=100_000)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--stream-id", type=int, default=0)
    p.add_argument("--chains", type=int, default=mc.DEFAULT_CHAINS)
    p.add_argument("--burn-in", type=int, default=None)
    p.add_argument("--thin", type=int, default=None)
    p.add_argument("--expect", type=float, default=None, help="exit 1 unless the mean is within tolerance of this")
    p.add_argument("--tolerance-se", type=float, default=3.0)
    _common(p)
    p.set_defaults(func=cmd_estimate)

    p = sub.add_parser("census", help="fraction of closed polygons below a curvature threshold")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--threshold", type=float, default=2.0, help="multiple of 2 pi (default 2, i.e. 4 pi)")
    p.add_argument("--count", type=_int, default=1_000_000)
    p.add_argument("--d", type=int, choices=(2, 3), default=3)
    p.add_argument("--workers", type=int, default=1)
    _common(p)
    p.set_defaults(func=cmd_census)

    p = sub.add_parser("surplus", help="CSV of mean curvature surplus against n")
    p.add_argument("--n-range", type=parse_range, required=True)
    p.add_argument("--count", type=_int, default=1_000_000)
    p.add_argument("--measure", choices=("symmetric-closed", "equilateral-mcmc"), default="symmetric-closed")
    p.add_argument("--chains", type=int, default=mc.DEFAULT_CHAINS)
    p.add_argument("--workers", type=int, default=1)
    _common(p)
    p.set_defaults(func=cmd_surplus)

    p = sub.add_parser("compare", help="correct digits of quadrature and Monte Carlo")
    p.add_argument("--n-range", type=parse_range, required=True)
    p.add_argument("--mc-counts", type=parse_counts, default=[1_000_000, 5_000_000])
    p.add_argument("--rtol", type=float, default=1e-11)
    p.add_argument("--atol", type=float, default=1e-13)
    p.add_argument("--workers", type=int, default=1)
    _common(p)
    p.set_defaults(func=cmd_compare)
    return ap


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    args.argv = ["polylab", *(sys.argv[1:] if argv is None else argv)]
    try:
        return args.func(args)
    except (UsageError, DomainError, UnsupportedDimensionError) as exc:
        parser.print_usage(sys.stderr)
        print(f"polylab {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ConvergenceError, SampleEvaluationError) as exc:
        print(f"polylab {args.command}: failed: {exc}", file=sys.stderr)
        return EXIT_FAIL
    except ValueError as exc:
        parser.print_usage(sys.stderr)
        print(f"polylab {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
