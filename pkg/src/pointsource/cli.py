"""Command-line front end.

Subcommands: ``eval``, ``verify``, ``probe-c``, ``reduce3d``, ``branchcut``,
``report``.  JSON in; CSV, JSON or JSON lines out.

Exit codes: 0 success, 2 flagged or failed verdict, 64 usage error,
65 malformed or out-of-domain data, 74 I/O failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np

from . import conjecture_probe as cp
from . import independence_lab as lab
from .complex_basis import ComplexExpansionSpec, eval_expansion, verify_branch_free
from .errors import DomainViolation, ParseError, PointSourceError
from .real_basis import (
    RealExpansionSpec2,
    RealExpansionSpec3,
    eval_expansion_r2,
    eval_expansion_r3,
)
from .reduction import reduce_dipole_r3, reduce_pm_r3

EXIT_OK = 0
EXIT_FLAGGED = 2
EXIT_USAGE = 64
EXIT_DATA = 65
EXIT_IO = 74

KIND_CHOICES = ("log", "pole1", "pole2", "pole-m", "mixed12", "log-pole",
                "mass2", "dipole2", "multipole2-2", "multipole2-3", "mass3", "dipole3")
DEFAULT_TOLERANCES = {"singular": 1e-10, "recovery": 1e-8, "reduction": 1e-6}


class UsageError(Exception):
    pass


@dataclass
class RunConfig:
    command: str
    config: Path | None = None
    out: Path | None = None
    seed: int = 0
    precision: str = "auto"
    tolerances: dict = field(default_factory=lambda: dict(DEFAULT_TOLERANCES))

    def __post_init__(self):
        for k, v in self.tolerances.items():
            if not (isinstance(v, float) and v > 0 and math.isfinite(v)):
                raise UsageError(f"tolerance {k} must be positive, got {v!r}")


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _positive_int(text: str) -> int:
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}") from None
    if v < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {v}")
    return v


def _tolerance(text: str) -> tuple[str, float]:
    name, _, value = text.partition("=")
    if name not in DEFAULT_TOLERANCES or not value:
        raise argparse.ArgumentTypeError(
            f"expected NAME=VALUE with NAME in {sorted(DEFAULT_TOLERANCES)}"
        )
    try:
        return name, float(value)
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad tolerance value {value!r}") from None


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--config", type=Path, help="input JSON (spec or configuration)")
    common.add_argument("--out", type=Path, help="output file (default: stdout)")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--precision", choices=("auto", "double", "extended"), default="auto")
    common.add_argument("--tol", type=_tolerance, action="append", default=[],
                        metavar="NAME=VALUE", help="override singular/recovery/reduction tolerance")

    p = _Parser(prog="pointsource", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    e = sub.add_parser("eval", parents=[common], help="evaluate a spec at exterior points")
    e.add_argument("--points", type=Path, required=True, help="JSON list of points or CSV rows")

    v = sub.add_parser("verify", parents=[common], help="independence verdicts for random configurations")
    v.add_argument("--kind", choices=KIND_CHOICES, required=True)
    v.add_argument("--nk", type=_positive_int, required=True)
    v.add_argument("--trials", type=_positive_int, default=10)
    v.add_argument("--m", type=_positive_int, default=3, help="pole order for --kind pole-m")
    v.add_argument("--radius", type=float, default=lab.DEFAULT_RADIUS)

    c = sub.add_parser("probe-c", parents=[common], help="Monte-Carlo sigma_min(C) probe")
    c.add_argument("--nk", type=_positive_int, required=True)
    c.add_argument("--trials", type=_positive_int, default=1000)
    c.add_argument("--sampler", choices=cp.SAMPLERS, default="annulus-uniform")
    c.add_argument("--m", type=_positive_int, default=1, help="probe C_m instead of C")
    c.add_argument("--log", type=Path, help="append records to this JSON-lines file")
    c.add_argument("--csv", type=Path, help="also write per-record CSV for plotting")

    r = sub.add_parser("reduce3d", parents=[common], help="reduce a 3D spec to the plane")
    r.add_argument("--L", type=float, default=1e4)
    r.add_argument("--probes", type=_positive_int, default=20)
    r.add_argument("--probe-radius", type=float, default=2.0)

    b = sub.add_parser("branchcut", parents=[common], help="sample |Im psi| on a circle")
    b.add_argument("--zk", type=complex, required=True, help="source, e.g. 0.9j or 0.3+0.2j")
    b.add_argument("--radius", type=float, default=1.0)
    b.add_argument("--samples", type=int, default=4096)

    g = sub.add_parser("report", parents=[common], help="aggregate a probe record log")
    g.add_argument("--log", type=Path, required=True)
    g.add_argument("--csv", type=Path, help="also write per-record CSV")
    return p


# ---------------------------------------------------------------------------
# I/O helpers


def _read_json(path: Path):
    try:
        text = path.read_text(encoding="utf-8")
    except OSError:
        raise
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: {exc}") from None


def _bundled(name: str):
    return json.loads(resources.files("pointsource").joinpath("data", name).read_text(encoding="utf-8"))


def _emit(text: str, out: Path | None) -> None:
    if out is None:
        sys.stdout.write(text)
    else:
        out.write_text(text, encoding="utf-8")


def load_spec(doc: dict):
    """Pick the spec type from the document shape."""
    if not isinstance(doc, dict) or "sources" not in doc:
        raise ParseError("spec must be a JSON object with a 'sources' entry")
    try:
        src = doc["sources"]
        dim = src.get("dim") if isinstance(src, dict) else None
        if dim is None:
            pts = np.asarray(src["points"] if isinstance(src, dict) else src, dtype=float)
            dim = pts.shape[-1]
        if "log" in doc or "poles" in doc:
            return ComplexExpansionSpec.from_dict(doc)
        if int(dim) == 3:
            return RealExpansionSpec3.from_dict(doc)
        return RealExpansionSpec2.from_dict(doc)
    except (KeyError, TypeError, IndexError) as exc:
        raise ParseError(f"malformed spec: {exc}") from None


def _read_points(path: Path) -> np.ndarray:
    text = path.read_text(encoding="utf-8")
    if not text.strip():
        return np.zeros((0, 2))
    try:
        if path.suffix.lower() == ".json" or text.lstrip().startswith("["):
            pts = json.loads(text)
        else:
            pts = [[float(x) for x in row] for row in csv.reader(io.StringIO(text)) if row]
        arr = np.asarray(pts, dtype=float)
    except (ValueError, json.JSONDecodeError) as exc:
        raise ParseError(f"{path}: {exc}") from None
    if arr.size == 0:
        return np.zeros((0, 2))
    if arr.ndim != 2 or arr.shape[1] not in (2, 3) or not np.all(np.isfinite(arr)):
        raise ParseError(f"{path}: expected rows of 2 or 3 finite coordinates")
    return arr


def _fmt(x: float) -> str:
    return repr(float(x))


# ---------------------------------------------------------------------------
# commands


def cmd_eval(cfg: RunConfig, args) -> int:
    if cfg.config is None:
        raise UsageError("eval needs --config SPEC.json")
    spec = load_spec(_read_json(cfg.config))
    pts = _read_points(args.points)
    dim = 3 if isinstance(spec, RealExpansionSpec3) else 2
    if len(pts) and pts.shape[1] != dim:
        raise ParseError(f"spec is {dim}-D but points have {pts.shape[1]} coordinates")

    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    coords = ["x", "y", "z"][:dim]
    is_complex = isinstance(spec, ComplexExpansionSpec)
    w.writerow(["row", *coords, *(["re", "im"] if is_complex else ["value"])])
    for i, p in enumerate(pts):
        try:
            if is_complex:
                v = complex(eval_expansion(spec, complex(p[0], p[1])))
                vals = [_fmt(v.real), _fmt(v.imag)]
            elif dim == 3:
                vals = [_fmt(eval_expansion_r3(spec, p))]
            else:
                vals = [_fmt(eval_expansion_r2(spec, p))]
        except DomainViolation as exc:
            raise DomainViolation(f"row {i}: {exc}") from None
        w.writerow([i, *(_fmt(c) for c in p), *vals])
    _emit(buf.getvalue(), cfg.out)
    return EXIT_OK


def cmd_verify(cfg: RunConfig, args) -> int:
    kind = f"pole{args.m}" if args.kind == "pole-m" else args.kind
    if lab.kind_dim(kind) == 3 and args.nk > 6:
        raise UsageError("3D kinds are verified for --nk <= 6")
    verdicts = lab.run_verification(kind, args.nk, args.trials, cfg.seed, radius=args.radius)
    body = io.StringIO()
    lab.write_verdicts(verdicts, body)
    flagged = sum(v.verdict != "independent" for v in verdicts)
    summary = f"{kind} n_k={args.nk} trials={args.trials} seed={cfg.seed}: " \
              f"{len(verdicts) - flagged} independent, {flagged} flagged"
    if kind in lab.OPEN_KINDS:
        summary += " (open question: reported, not asserted)"
    _emit(body.getvalue(), cfg.out)
    sys.stderr.write(summary + "\n")
    return EXIT_OK if flagged == 0 else EXIT_FLAGGED


def _records_csv(records) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["trial", "n_k", "m", "sampler", "sigma_min", "sigma_max", "relative",
                "cond_G", "flagged", "precision", "certified"])
    for r in records:
        w.writerow([r.trial, r.n_k, r.m, r.sampler, _fmt(r.sigma_min), _fmt(r.sigma_max),
                    _fmt(r.relative_sigma_min), _fmt(r.cond_G), int(r.flagged), r.precision,
                    int(r.certified)])
    return buf.getvalue()


def _candidates(records, rtol: float) -> int:
    # numerically singular and not proven otherwise
    return sum(1 for r in records if not r.certified and not (r.relative_sigma_min > rtol))


def cmd_probe_c(cfg: RunConfig, args) -> int:
    if args.nk > cp.MAX_NK:
        raise UsageError(f"--nk must be <= {cp.MAX_NK}")
    mem = cp.RecordLog()
    report = cp.probe_c(args.nk, args.trials, args.sampler, cfg.seed, args.m, log=mem,
                        precision=cfg.precision)
    records = mem.records()
    if args.log is not None:
        cp.RecordLog(args.log).append(records)
    if args.csv is not None:
        args.csv.write_text(_records_csv(records), encoding="utf-8")
    _emit(report.to_json() + "\n", cfg.out)
    sys.stderr.write(cp.render_histogram(report))
    return EXIT_FLAGGED if _candidates(records, cfg.tolerances["singular"]) else EXIT_OK


def cmd_reduce3d(cfg: RunConfig, args) -> int:
    doc = _read_json(cfg.config) if cfg.config is not None else _bundled("example_spec3.json")
    spec = load_spec(doc)
    if not isinstance(spec, RealExpansionSpec3):
        raise ParseError("reduce3d needs a 3D spec (sources with dim 3)")
    tol = cfg.tolerances["reduction"]
    out: dict = {}
    ok = True
    if np.any(spec.masses):
        _, rep = reduce_pm_r3(spec, args.L, probe_radius=args.probe_radius, n_probes=args.probes)
        out["masses"] = rep.to_dict()
        ok &= rep.defect < tol
    if np.any(spec.dipoles):
        _, rep = reduce_dipole_r3(spec, args.L, probe_radius=args.probe_radius, n_probes=args.probes)
        out["dipoles"] = rep.to_dict()
        ok &= rep.defect < tol
    out["tolerance"] = tol
    out["pass"] = bool(ok)
    _emit(json.dumps(out, sort_keys=True, indent=2) + "\n", cfg.out)
    return EXIT_OK if ok else EXIT_FLAGGED


def cmd_branchcut(cfg: RunConfig, args) -> int:
    if args.samples < 8:
        raise UsageError("--samples must be >= 8")
    val = verify_branch_free(args.zk, args.radius, args.samples)
    ok = val < math.pi / 2
    line = (f"z_k={args.zk!r} radius={_fmt(args.radius)} samples={args.samples} "
            f"max|Im psi|={_fmt(val)} margin={_fmt(math.pi / 2 - val)} {'PASS' if ok else 'FAIL'}\n")
    _emit(line, cfg.out)
    return EXIT_OK if ok else EXIT_FLAGGED


def cmd_report(cfg: RunConfig, args) -> int:
    if not args.log.exists():
        raise FileNotFoundError(f"no such log: {args.log}")
    try:
        records = cp.RecordLog(args.log).records()
    except (json.JSONDecodeError, TypeError) as exc:
        raise ParseError(f"{args.log}: malformed record ({exc})") from None
    report = cp.aggregate(records)
    if args.csv is not None:
        args.csv.write_text(_records_csv(records), encoding="utf-8")
    _emit(report.to_json() + "\n", cfg.out)
    sys.stderr.write(cp.render_histogram(report))
    return EXIT_FLAGGED if _candidates(records, cfg.tolerances["singular"]) else EXIT_OK


COMMANDS = {
    "eval": cmd_eval,
    "verify": cmd_verify,
    "probe-c": cmd_probe_c,
    "reduce3d": cmd_reduce3d,
    "branchcut": cmd_branchcut,
    "report": cmd_report,
}


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        tols = dict(DEFAULT_TOLERANCES)
        tols.update(dict(args.tol))
        cfg = RunConfig(args.command, args.config, args.out, args.seed, args.precision, tols)
        return COMMANDS[args.command](cfg, args)
    except UsageError as exc:
        sys.stderr.write(f"usage error: {exc}\n")
        return EXIT_USAGE
    except (ParseError, DomainViolation) as exc:
        sys.stderr.write(f"data error: {exc}\n")
        return EXIT_DATA
    except OSError as exc:
        sys.stderr.write(f"I/O error: {exc}\n")
        return EXIT_IO
    except (PointSourceError, ValueError) as exc:
        sys.stderr.write(f"data error: {exc}\n")
        return EXIT_DATA


if __name__ == "__main__":
    raise SystemExit(main())
