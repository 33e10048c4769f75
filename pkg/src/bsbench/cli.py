"""Command-line interface: ``bsbench <command> [options]``.

Exit status is 0 on success, 1 for computation errors and 2 for usage or
input errors; failures print a JSON error record on stderr.
"""

from __future__ import annotations

import argparse
import csv
import io as _io
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__, model
from .benchmark import accuracy_benchmark, cumulative_ladder, error_budget
from .exceptions import BSBenchError, CollisionError, ParseError
from .io import (build_manifest, file_digest, format_samples, iter_samples, load_matrix,
                 load_samples, save_matrix, unitarity_deviation, write_json)
from .likelihood import log_likelihood, maximize, normalization
from .monitor import RollingMonitor
from .simulate import NoiseConfig, generate_noisy_samples, haar_unitary

WORKERS_ENV = "BSBENCH_WORKERS"


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(f"{self.prog}: {message}")


def _int_list(text: str) -> list[int]:
    try:
        return [int(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def _str_list(text: str) -> list[str]:
    return [t.strip() for t in text.split(",") if t.strip()]


def _add_common(p: argparse.ArgumentParser, *, matrix_required: bool = True):
    p.add_argument("--matrix", type=Path, required=matrix_required, help="transmission matrix JSON")
    p.add_argument("--inputs", type=_int_list, help="occupied input modes, e.g. 0,1,2")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--workers", type=int, default=None,
                   help=f"worker threads (default: ${WORKERS_ENV} or all cores)")
    p.add_argument("--out", type=Path, help="output file (manifest is written next to it)")


def _add_fit(p: argparse.ArgumentParser):
    p.add_argument("--grid-step", type=float, default=1e-3)
    p.add_argument("--threshold", type=float, default=0.05, help="relative-likelihood CI cut")
    p.add_argument("--norm", choices=["auto", "exact", "mc"], default="auto")
    p.add_argument("--draws", type=int, default=10_000)


def _add_noise(p: argparse.ArgumentParser, x_default: float):
    p.add_argument("--x", type=float, default=x_default, help="true pairwise overlap")
    p.add_argument("--dark", type=float, default=0.0, help="dark-count probability per event")
    p.add_argument("--multi", type=float, default=0.0, help="multiphoton probability per mode")
    p.add_argument("--msigma", type=float, default=0.0, help="relative matrix noise")
    p.add_argument("--modes", type=int, default=16, help="Haar-random matrix size when --matrix is absent")
    p.add_argument("--matrix-seed", type=int, default=None)
    p.add_argument("--save-matrix", type=Path, help="write the (possibly generated) matrix here")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="bsbench", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"bsbench {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("estimate", help="maximum-likelihood overlap estimate")
    _add_common(p)
    _add_fit(p)
    p.add_argument("--samples", type=Path, required=True)
    p.add_argument("--curve", type=Path, help="also write the likelihood curve as CSV")

    p = sub.add_parser("curve", help="log-likelihood curve as CSV (x, loglik)")
    _add_common(p)
    _add_fit(p)
    p.add_argument("--samples", type=Path, required=True)

    p = sub.add_parser("normalize", help="collision-free normalization N(x)")
    _add_common(p)
    p.add_argument("--method", choices=["auto", "exact", "mc"], default="auto")
    p.add_argument("--draws", type=int, default=10_000)

    p = sub.add_parser("simulate", help="generate a (noisy) sample file")
    _add_common(p, matrix_required=False)
    _add_noise(p, 1.0)
    p.add_argument("--count", type=int, required=True)
    p.add_argument("--config", type=Path, help="NoiseConfig JSON (overrides noise flags)")
    p.add_argument("--sampler", choices=["auto", "exact", "mcmc"], default="auto")

    p = sub.add_parser("budget", help="cumulative error budget table")
    _add_common(p, matrix_required=False)
    _add_fit(p)
    p.add_argument("--ladder", type=_str_list, default=["hom", "mis", "multi", "dark"])
    p.add_argument("--x", type=float, default=0.981)
    p.add_argument("--dark", type=float, default=0.03)
    p.add_argument("--multi", type=float, default=0.012)
    p.add_argument("--msigma", type=float, default=0.01)
    p.add_argument("--modes", type=int, default=16)
    p.add_argument("--matrix-seed", type=int, default=None)
    p.add_argument("--count", type=int, default=10_000)
    p.add_argument("--reference", type=Path, help="reference samples for relative likelihoods")

    p = sub.add_parser("monitor", help="rolling-window estimates over a sample stream")
    _add_common(p)
    _add_fit(p)
    p.add_argument("--stream", default="-", help="sample file or '-' for stdin")
    p.add_argument("--window", type=int, default=10_000)
    p.add_argument("--step", type=int, default=1)
    p.add_argument("--chunk", type=int, default=1000, help="lines read before each update")

    p = sub.add_parser("accuracy", help="CI width versus photon number")
    _add_common(p, matrix_required=False)
    _add_fit(p)
    p.add_argument("--n-list", type=_int_list, default=[3, 4])
    p.add_argument("--modes", type=int, default=20)
    p.add_argument("--matrix-seed", type=int, default=None)
    p.add_argument("--samples-per-n", type=int, default=10_000)
    p.add_argument("--x", type=float, default=1.0)
    p.add_argument("--repeats", type=int, default=1)

    p = sub.add_parser("rerun", help="re-execute the command recorded in a manifest")
    p.add_argument("manifest", type=Path)
    return parser


# ---------------------------------------------------------------------------

def _matrix(args) -> np.ndarray:
    if args.matrix is not None:
        if not args.matrix.exists():
            raise UsageError(f"matrix file not found: {args.matrix}")
        return load_matrix(args.matrix)
    seed = args.matrix_seed if args.matrix_seed is not None else args.seed
    return haar_unitary(args.modes, seed=seed)


def _inputs(args, default_n: int = 3) -> list[int]:
    return args.inputs if args.inputs else list(range(default_n))


def _samples(path: Path, m: int):
    if not path.exists():
        raise UsageError(f"sample file not found: {path}")
    return load_samples(path, m)


def _emit(args, text: str, manifest: dict) -> None:
    """Write ``text`` to ``--out`` (plus manifest) or stdout."""
    if args.out is None:
        sys.stdout.write(text)
        return
    args.out.write_text(text)
    write_json(args.out.with_name(args.out.name + ".manifest.json"), manifest)


def _curve_csv(grid, curve) -> str:
    buf = _io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["x", "loglik"])
    for x, v in zip(grid.tolist(), curve.tolist()):
        w.writerow([repr(x), repr(v)])
    return buf.getvalue()


def _fit_report(args, U, inputs):
    samples = _samples(args.samples, U.shape[0])
    norm_method = {"mc": "monte-carlo"}.get(args.norm, args.norm)
    norm = normalization(U, inputs, norm_method, draws=args.draws, seed=args.seed)
    ll = log_likelihood(samples, U, inputs, norm)
    rep = maximize(ll, args.grid_step, args.threshold)
    return samples, norm, rep


def cmd_estimate(args, manifest):
    U = _matrix(args)
    inputs = _inputs(args)
    samples, norm, rep = _fit_report(args, U, inputs)
    doc = rep.to_dict()
    doc["diagnostics"]["unitarity_deviation"] = unitarity_deviation(U)
    doc["normalization"] = norm.to_dict()
    doc["inputs"] = inputs
    doc["manifest"] = manifest
    _emit(args, json.dumps(doc, indent=2, sort_keys=True) + "\n", manifest)
    if args.curve is not None:
        args.curve.write_text(_curve_csv(rep.grid, rep.loglik_curve))
        write_json(args.curve.with_name(args.curve.name + ".manifest.json"), manifest)


def cmd_curve(args, manifest):
    U = _matrix(args)
    _, _, rep = _fit_report(args, U, _inputs(args))
    _emit(args, _curve_csv(rep.grid, rep.loglik_curve), manifest)


def cmd_normalize(args, manifest):
    U = _matrix(args)
    inputs = _inputs(args)
    method = {"mc": "monte-carlo"}.get(args.method, args.method)
    norm = normalization(U, inputs, method, draws=args.draws, seed=args.seed)
    doc = norm.to_dict()
    doc["collision_fraction"] = {"x=0": float(norm.collision_fraction(0.0)),
                                 "x=1": float(norm.collision_fraction(1.0))}
    doc["inputs"] = inputs
    doc["manifest"] = manifest
    _emit(args, json.dumps(doc, indent=2, sort_keys=True) + "\n", manifest)


def cmd_simulate(args, manifest):
    U = _matrix(args)
    inputs = _inputs(args)
    if args.config is not None:
        if not args.config.exists():
            raise UsageError(f"config file not found: {args.config}")
        try:
            doc = json.loads(args.config.read_text())
            doc.setdefault("seed", args.seed)
            cfg = NoiseConfig(**doc)
        except (json.JSONDecodeError, AttributeError, TypeError) as exc:
            raise ParseError(f"{args.config}: not a NoiseConfig object ({exc})") from None
    else:
        cfg = NoiseConfig(args.x, args.dark, args.multi, args.msigma, args.seed)
    samples = generate_noisy_samples(U, inputs, cfg, args.count, method=args.sampler)
    if args.save_matrix is not None:
        save_matrix(args.save_matrix, U)
    _emit(args, format_samples(samples), manifest)


def cmd_budget(args, manifest):
    U = _matrix(args)
    inputs = _inputs(args)
    reference = _samples(args.reference, U.shape[0]) if args.reference else None
    strengths = NoiseConfig(args.x, args.dark, args.multi, args.msigma)
    norm_method = {"mc": "monte-carlo"}.get(args.norm, args.norm)
    rows = error_budget(U, inputs, args.x, cumulative_ladder(args.ladder), args.count, args.seed,
                        reference, strengths=strengths, rel_lik_threshold=args.threshold,
                        grid_step=args.grid_step, norm_method=norm_method, draws=args.draws)
    buf = _io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["label", "imperfections", "x_hat", "ci_low", "ci_high", "rel_log10_likelihood"])
    for r in rows:
        w.writerow([r.label, "+".join(r.imperfections) or "none", repr(r.x_hat), repr(r.ci_low),
                    repr(r.ci_high), "" if r.rel_log10_likelihood is None else repr(r.rel_log10_likelihood)])
    doc = {"rows": [r.to_dict() for r in rows], "manifest": manifest}
    if args.out is None:
        sys.stdout.write(buf.getvalue())
        return
    _emit(args, buf.getvalue(), manifest)
    write_json(args.out.with_suffix(".json"), doc)


def cmd_monitor(args, manifest):
    U = _matrix(args)
    inputs = _inputs(args)
    norm_method = {"mc": "monte-carlo"}.get(args.norm, args.norm)
    mon = RollingMonitor(U, inputs, args.window, args.step, args.threshold, args.grid_step,
                         norm_method, args.draws, args.seed)
    if args.stream == "-":
        source = sys.stdin
    else:
        if not Path(args.stream).exists():
            raise UsageError(f"stream file not found: {args.stream}")
        source = open(args.stream)
    sink = open(args.out, "w") if args.out is not None else sys.stdout
    try:
        batch = []

        def flush():
            mon.partial_fit(np.array(batch, dtype=np.int64).reshape(len(batch), -1))
            batch.clear()
            for pt in mon.drain():
                sink.write(json.dumps(pt.to_dict(), sort_keys=True) + "\n")
            sink.flush()

        for pattern in iter_samples(source, U.shape[0]):
            batch.append(pattern)
            if len(batch) >= args.chunk:
                flush()
        if batch:
            flush()
        if mon.n_seen_ < args.window:
            raise BSBenchError(f"stream of {mon.n_seen_} samples is shorter than the window ({args.window})")
    finally:
        if source is not sys.stdin:
            source.close()
        if sink is not sys.stdout:
            sink.close()
    if args.out is not None:
        write_json(args.out.with_name(args.out.name + ".manifest.json"), manifest)


def cmd_accuracy(args, manifest):
    U = _matrix(args)
    inputs = args.inputs if args.inputs else None
    norm_method = {"mc": "monte-carlo"}.get(args.norm, args.norm)
    points = accuracy_benchmark(args.n_list, U, inputs, args.samples_per_n, args.x, args.seed,
                                args.repeats, args.threshold, norm_method)
    doc = {
        "points": [{"n": p.n, "ci_widths": p.ci_widths, "x_hats": p.x_hats,
                    "median_width": p.median_width} for p in points],
        "manifest": manifest,
    }
    _emit(args, json.dumps(doc, indent=2, sort_keys=True) + "\n", manifest)


COMMANDS = {
    "estimate": cmd_estimate, "curve": cmd_curve, "normalize": cmd_normalize,
    "simulate": cmd_simulate, "budget": cmd_budget, "monitor": cmd_monitor,
    "accuracy": cmd_accuracy,
}


def _params(args) -> dict:
    out = {}
    for k, v in sorted(vars(args).items()):
        if k in ("command", "workers"):
            continue
        out[k] = str(v) if isinstance(v, Path) else v
    return out


def _error(kind: str, exc: BaseException, code: int) -> int:
    sys.stderr.write(json.dumps({"error": kind, "message": str(exc), "exit_code": code}) + "\n")
    return code


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        return _error("UsageError", exc, 2)
    except SystemExit as exc:  # --help / --version
        return int(exc.code or 0)

    if args.command == "rerun":
        if not args.manifest.exists():
            return _error("UsageError", FileNotFoundError(f"manifest not found: {args.manifest}"), 2)
        try:
            recorded = json.loads(args.manifest.read_text())
            argv_rec, files = recorded["argv"], recorded.get("inputs", {})
        except (json.JSONDecodeError, KeyError, TypeError) as exc:
            return _error("ParseError", ParseError(f"{args.manifest}: not a run manifest ({exc})"), 2)
        for name, rec in files.items():
            if not Path(rec["path"]).exists() or file_digest(rec["path"]) != rec["sha256"]:
                return _error("BSBenchError", BSBenchError(
                    f"input {name!r} ({rec['path']}) is missing or differs from the recorded digest"), 1)
        return main(argv_rec)

    workers = args.workers or int(os.environ.get(WORKERS_ENV, 0) or 0) or os.cpu_count() or 1
    model.set_workers(workers)
    inputs = {name: getattr(args, name, None)
              for name in ("matrix", "samples", "reference", "config")}
    stream = getattr(args, "stream", None)
    if stream not in (None, "-"):
        inputs["stream"] = stream
    try:
        missing = [str(p) for p in inputs.values() if p is not None and not Path(p).exists()]
        if missing:
            raise UsageError(f"input file not found: {missing[0]}")
        manifest = build_manifest(args.command, argv, _params(args), inputs)
        COMMANDS[args.command](args, manifest)
    except UsageError as exc:
        return _error("UsageError", exc, 2)
    except (ParseError, CollisionError) as exc:
        return _error(type(exc).__name__, exc, 2)
    except (BSBenchError, ValueError, ArithmeticError, IndexError) as exc:
        return _error(type(exc).__name__, exc, 1)
    return 0


if __name__ == "__main__":
    sys.exit(main())
