"""Empirical search for singular C matrices.

Nothing here proves anything.  Trials draw node sets from one of three
samplers, compute sigma_min of C (or C_m, or a square block system) in
batched double precision, and send every suspicious result through ball
arithmetic before it is reported.  Records go to an append-only JSON-lines
log; reports are pure folds over records, so a report rebuilt from the log
equals the live one.

Seeding: trial ``t`` of a run with master seed ``s`` draws from
``SeedSequence(s, spawn_key=(t,))``, so any record can be replayed alone.
"""

from __future__ import annotations

import json
import math
import os
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Iterable, Iterator

import numpy as np
from scipy.optimize import minimize

from . import _extended
from . import structured_matrices as sm
from .errors import BadSampler
from .geometry import DEFAULT_MIN_SEP, DEFAULT_R_MAX, DEFAULT_R_MIN

SAMPLERS = ("annulus-uniform", "near-boundary", "clustered")
RECHECK_BELOW = 1e-8
NEAR_BOUNDARY = (0.9, 0.95)
CLUSTER_RADIUS = 1e-2
MAX_NK = sm.MAX_DOUBLE_NK


# ---------------------------------------------------------------------------
# sampling


def trial_rng(seed: int, trial: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(int(seed), spawn_key=(int(trial),)))


def _separated(z: np.ndarray, min_sep: float) -> bool:
    if len(z) < 2:
        return True
    d = np.abs(z[:, None] - z[None, :])
    d[np.diag_indices_from(d)] = np.inf
    return bool(d.min() >= min_sep)


def _disk_uniform(rng, n, r_lo, r_hi):
    r = np.sqrt(rng.uniform(r_lo**2, r_hi**2, n))
    return r * np.exp(2j * np.pi * rng.uniform(size=n))


def sample_nodes(sampler: str, n_k: int, rng: np.random.Generator, r_min: float = DEFAULT_R_MIN,
                 r_max: float = DEFAULT_R_MAX, min_sep: float = DEFAULT_MIN_SEP,
                 max_tries: int = 1000) -> np.ndarray:
    """Draw one node set.

    annulus-uniform: area-uniform in ``r_min <= |z| <= r_max``;
    near-boundary: area-uniform in ``0.9 <= |z| <= 0.95``;
    clustered: area-uniform in a disk of radius 1e-2 whose centre is placed
    so the whole disk lies inside the annulus.
    """
    if sampler not in SAMPLERS:
        raise BadSampler(f"unknown sampler {sampler!r}; choose from {SAMPLERS}")
    for _ in range(max_tries):
        if sampler == "annulus-uniform":
            z = _disk_uniform(rng, n_k, r_min, r_max)
        elif sampler == "near-boundary":
            z = _disk_uniform(rng, n_k, *NEAR_BOUNDARY)
        else:
            c = _disk_uniform(rng, 1, r_min + CLUSTER_RADIUS, r_max - CLUSTER_RADIUS)[0]
            z = c + _disk_uniform(rng, n_k, 0.0, CLUSTER_RADIUS)
        if _separated(z, min_sep):
            return z
    raise BadSampler(f"{sampler} could not place {n_k} nodes {min_sep} apart")


# ---------------------------------------------------------------------------
# records, log, report


@dataclass(frozen=True)
class ProbeRecord:
    """One trial.  ``sigma_*`` refer to C (or the block system named by ``target``)."""

    n_k: int
    m: int
    seed: int
    trial: int
    sampler: str
    target: str
    nodes: list
    sigma_min: float
    sigma_max: float
    cond_G: float
    flagged: bool
    precision: str = "double"
    certified: bool = False
    bracket_sigma_min: float | None = None
    c_sigma_min: float | None = None

    @property
    def relative_sigma_min(self) -> float:
        return self.sigma_min / self.sigma_max if self.sigma_max > 0 else 0.0

    def to_json(self) -> str:
        return json.dumps(asdict(self), sort_keys=True)

    @classmethod
    def from_json(cls, line: str) -> "ProbeRecord":
        return cls(**json.loads(line))


class RecordLog:
    """Append-only JSON-lines sink.  ``path=None`` keeps records in memory."""

    def __init__(self, path: str | os.PathLike | None = None):
        self.path = None if path is None else Path(path)
        self._memory: list[str] = []

    def append(self, records: Iterable[ProbeRecord]) -> None:
        lines = [r.to_json() + "\n" for r in records]
        if self.path is None:
            self._memory.extend(lines)
            return
        with open(self.path, "a", encoding="utf-8") as fh:
            fh.writelines(lines)

    def __iter__(self) -> Iterator[ProbeRecord]:
        if self.path is None:
            yield from (ProbeRecord.from_json(s) for s in self._memory)
            return
        if not self.path.exists():
            return
        with open(self.path, encoding="utf-8") as fh:
            for line in fh:
                if line.strip():
                    yield ProbeRecord.from_json(line)

    def records(self) -> list[ProbeRecord]:
        return list(self)


def _bucket(rel: float) -> str:
    if rel <= 0:
        return "zero"
    return str(int(math.floor(math.log10(rel))))


def _bucket_order(key: str) -> float:
    # largest decade first, exact zeros last
    return math.inf if key == "zero" else -int(key)


@dataclass(frozen=True)
class ProbeReport:
    """Aggregate of a set of records.

    ``histogram`` counts records per decade of relative sigma_min (key
    ``"-12"`` holds values in ``[1e-12, 1e-11)``).
    """

    trials: int
    min_sigma_min: float | None
    min_relative_sigma_min: float | None
    argmin_nodes: list | None
    argmin_trial: int | None
    histogram: dict = field(default_factory=dict)
    flagged_count: int = 0
    certified_count: int = 0
    extended_count: int = 0
    below_threshold: int = 0

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2)


def aggregate(records: Iterable[ProbeRecord], threshold: float = sm.SINGULAR_RTOL) -> ProbeReport:
    """Fold records into a report; the argmin is by relative sigma_min, first wins ties."""
    recs = list(records)
    if not recs:
        return ProbeReport(0, None, None, None, None)
    hist: dict[str, int] = {}
    best = None
    for r in recs:
        b = _bucket(r.relative_sigma_min)
        hist[b] = hist.get(b, 0) + 1
        if best is None or r.relative_sigma_min < best.relative_sigma_min:
            best = r
    return ProbeReport(
        trials=len(recs),
        min_sigma_min=min(r.sigma_min for r in recs),
        min_relative_sigma_min=best.relative_sigma_min,
        argmin_nodes=best.nodes,
        argmin_trial=best.trial,
        histogram={k: hist[k] for k in sorted(hist, key=_bucket_order)},
        flagged_count=sum(r.flagged for r in recs),
        certified_count=sum(r.certified for r in recs),
        extended_count=sum(r.precision == "extended" for r in recs),
        below_threshold=sum(r.relative_sigma_min <= threshold for r in recs),
    )


def report_from_log(path) -> ProbeReport:
    return aggregate(RecordLog(path))


def render_histogram(report: ProbeReport, width: int = 40) -> str:
    """Plain-text bar chart of the decade histogram."""
    if not report.histogram:
        return "(no records)\n"
    peak = max(report.histogram.values())
    lines = []
    for key, count in report.histogram.items():
        label = "0" if key == "zero" else f"1e{key}"
        bar = "#" * max(1, round(width * count / peak))
        lines.append(f"{label:>7} | {bar} {count}")
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# batched C computation


# beyond this cond(G) the double solve is meaningless; go straight to ball arithmetic
DOUBLE_COND_LIMIT = 1e15


def _batched_c(Z: np.ndarray, m: int):
    """C (m = 1) or C_m for a stack of node sets, plus bracket and cond(G).

    ``Z`` has shape (trials, n).  Uses ``C = G R G^{-1}`` with the bracket
    ``R = pI - M + (z_l/z_k)^p M`` and ``M = G^{-1} N G`` from one solve.
    Rows whose Vandermonde is numerically singular get NaN singular values.
    """
    T, n = Z.shape
    p = m * n
    G = Z[:, None, :] ** np.arange(n)[None, :, None]
    sG = np.linalg.svd(G, compute_uv=False)
    with np.errstate(divide="ignore"):
        condG = sG[:, 0] / sG[:, -1]
    ok = condG < DOUBLE_COND_LIMIT
    sC = np.full((T, n), np.nan)
    sR = np.full((T, n), np.nan)
    if np.any(ok):
        Gk, Zk = G[ok], Z[ok]
        M = np.linalg.solve(Gk, np.arange(1, n + 1)[None, :, None] * Gk)
        ratio = (Zk[:, None, :] / Zk[:, :, None]) ** p
        ratio[:, np.arange(n), np.arange(n)] = 1.0  # z/z can round below 1
        R = p * np.eye(n)[None] - M + ratio * M
        if m == 1:
            GR = Gk @ R
            C = np.swapaxes(np.linalg.solve(np.swapaxes(Gk, 1, 2), np.swapaxes(GR, 1, 2)), 1, 2)
        else:
            C = R
        sC[ok] = np.linalg.svd(C, compute_uv=False)
        sR[ok] = np.linalg.svd(R, compute_uv=False)
    return sC, condG, sR


def _nodes_json(z) -> list:
    return [[float(v.real), float(v.imag)] for v in z]


def _check_params(n_k: int, trials: int, max_nk: int = MAX_NK) -> None:
    if not 1 <= n_k <= max_nk:
        raise ValueError(f"n_k must be in 1..{max_nk}, got {n_k}")
    if trials < 1:
        raise ValueError("trials must be >= 1")


def _recheck_c(z: np.ndarray, m: int, cond_g: float):
    start = _extended.suggested_start(z, cond_g)
    if m == 1:
        C, Ci, bits = _extended.c_matrix_and_inverse(z, len(z), start)
    else:
        C, Ci, bits = _extended.bracket_and_inverse(z, m * len(z), start)
    s_max = float(np.linalg.svd(C, compute_uv=False)[0])
    s_min = 1.0 / float(np.linalg.svd(Ci, compute_uv=False)[0])
    return s_min, s_max


def c_records(Z: np.ndarray, m: int, seed: int, trials: Iterable[int], sampler: str,
              cond_threshold: float = sm.COND_G_MAX, recheck_below: float = RECHECK_BELOW,
              precision: str = "auto") -> list[ProbeRecord]:
    """Records for a stack of node sets.

    ``precision="auto"`` rechecks in ball arithmetic whenever cond(G) is past
    the guard or the relative sigma_min is below ``recheck_below``;
    ``"extended"`` rechecks every trial; ``"double"`` never does and marks
    the would-be rechecks as flagged instead.
    """
    if precision not in sm.PRECISIONS:
        raise ValueError(f"precision must be one of {sm.PRECISIONS}")
    sC, condG, sR = _batched_c(Z, m)
    out = []
    for i, t in enumerate(trials):
        z = Z[i]
        s_min, s_max = float(sC[i, -1]), float(sC[i, 0])
        flagged = bool(condG[i] > cond_threshold)
        used, certified = "double", False
        needs = flagged or not (s_min > recheck_below * s_max)
        if precision == "double":
            flagged = flagged or needs
        elif needs or precision == "extended":
            try:
                s_min, s_max = _recheck_c(z, m, float(condG[i]))
                used, certified = "extended", True
            except _extended.PrecisionExhausted:
                flagged = True
        out.append(ProbeRecord(
            n_k=len(z), m=m, seed=int(seed), trial=int(t), sampler=sampler,
            target="C" if m == 1 else f"C_{m}", nodes=_nodes_json(z),
            sigma_min=s_min, sigma_max=s_max, cond_G=float(condG[i]), flagged=flagged,
            precision=used, certified=certified,
            bracket_sigma_min=float(sR[i, -1] / sR[i, 0]) if np.isfinite(sR[i, 0]) else None,
        ))
    return out


def probe_c(n_k: int, trials: int, sampler: str = "annulus-uniform", seed: int = 0, m: int = 1,
            log: RecordLog | None = None, chunk: int = 2048, precision: str = "auto") -> ProbeReport:
    """Monte-Carlo distribution of sigma_min(C) (or C_m) over random node sets.

    Records are appended to ``log`` (in-memory if omitted) and the report is
    the fold of exactly the records produced by this call.
    """
    _check_params(n_k, trials)
    if sampler not in SAMPLERS:
        raise BadSampler(f"unknown sampler {sampler!r}; choose from {SAMPLERS}")
    if m < 1:
        raise ValueError("m must be >= 1")
    log = RecordLog() if log is None else log
    produced: list[ProbeRecord] = []
    for start in range(0, trials, chunk):
        idx = range(start, min(start + chunk, trials))
        Z = np.array([sample_nodes(sampler, n_k, trial_rng(seed, t)) for t in idx])
        recs = c_records(Z, m, seed, idx, sampler, precision=precision)
        log.append(recs)
        produced.extend(recs)
    return aggregate(produced)


_BLOCK_KINDS = {"log", "pole1", "pole2"}


def _parse_block_kinds(kinds) -> tuple[str, ...]:
    ks = [kinds] if isinstance(kinds, str) else list(kinds)
    if not ks:
        raise BadSampler("kinds must be a non-empty subset of {log, pole1, pole2}")
    bad = set(ks) - _BLOCK_KINDS
    if bad:
        raise BadSampler(f"unknown kinds {sorted(bad)}")
    return sm._ordered_kinds(ks)


def probe_blocks(n_k: int, kinds, trials: int, seed: int = 0, sampler: str = "annulus-uniform",
                 log: RecordLog | None = None) -> ProbeReport:
    """sigma_min of the square truncated block system for ``kinds``.

    For two-kind systems involving simple poles ({pole1, pole2} and
    {log, pole1}) each record also carries the relative sigma_min of C,
    whose invertibility is equivalent after elimination.
    """
    ks = _parse_block_kinds(kinds)
    _check_params(n_k, trials)
    log = RecordLog() if log is None else log
    cross = len(ks) == 2 and "pole1" in ks
    tag = "+".join(ks)
    Z = np.array([sample_nodes(sampler, n_k, trial_rng(seed, t)) for t in range(trials)])
    S = np.array([sm.mixed_block_system(z, ks).entries for z in Z])
    sS = np.linalg.svd(S, compute_uv=False)
    c_rel = None
    if cross:
        c_rel = [r.relative_sigma_min for r in c_records(Z, 1, seed, range(trials), sampler)]
    sG = np.linalg.svd(Z[:, None, :] ** np.arange(n_k)[None, :, None], compute_uv=False)
    condG = sG[:, 0] / sG[:, -1]

    recs = []
    for t in range(trials):
        s_min, s_max = float(sS[t, -1]), float(sS[t, 0])
        flagged = bool(condG[t] > sm.COND_G_MAX)
        precision, certified = "double", False
        if flagged or not (s_min > RECHECK_BELOW * s_max):
            try:
                Si, _ = _extended.inverse_of(S[t], _extended.suggested_start(Z[t], float(condG[t])))
                s_min = 1.0 / float(np.linalg.svd(Si, compute_uv=False)[0])
                precision, certified = "extended", True
            except _extended.PrecisionExhausted:
                flagged = True
        recs.append(ProbeRecord(
            n_k=n_k, m=1, seed=int(seed), trial=t, sampler=sampler, target=tag,
            nodes=_nodes_json(Z[t]), sigma_min=s_min, sigma_max=s_max, cond_G=float(condG[t]),
            flagged=flagged, precision=precision, certified=certified,
            c_sigma_min=None if c_rel is None else float(c_rel[t]),
        ))
    log.append(recs)
    return aggregate(recs)


# ---------------------------------------------------------------------------
# adversarial search


def _sigmoid(x):
    return 0.5 * (1.0 + np.tanh(0.5 * x))


def _logit(p):
    p = np.clip(p, 1e-12, 1 - 1e-12)
    return np.log(p / (1 - p))


def _decode(u: np.ndarray, r_min: float, r_max: float) -> np.ndarray:
    n = len(u) // 2
    r = r_min + (r_max - r_min) * _sigmoid(u[:n])
    return r * np.exp(1j * u[n:])


def _encode(z: np.ndarray, r_min: float, r_max: float) -> np.ndarray:
    return np.r_[_logit((np.abs(z) - r_min) / (r_max - r_min)), np.angle(z)]


def minimize_sigma_min(n_k: int, restarts: int = 20, seed: int = 0, budget: int = 2000,
                       sampler: str = "annulus-uniform", m: int = 1, objective: str = "c",
                       r_min: float = DEFAULT_R_MIN, r_max: float = DEFAULT_R_MAX,
                       min_sep: float = DEFAULT_MIN_SEP) -> ProbeRecord:
    """Nelder-Mead search for node sets with small relative sigma_min.

    Radii pass through a sigmoid so every iterate lies in the annulus; sets
    closer than ``min_sep`` score +inf.  ``objective="bracket"`` minimizes the
    similarity-free bracket matrix instead of C (removing the Vandermonde
    conditioning from the score).  With ``budget=1`` only the restart
    samples are evaluated.  The winner is recomputed through the regular
    record path, so it is rechecked in ball arithmetic when small.
    """
    _check_params(n_k, max(restarts, 1))
    if budget < 1:
        raise ValueError("budget must be >= 1")
    if objective not in ("c", "bracket"):
        raise ValueError("objective must be 'c' or 'bracket'")

    def score(u):
        z = _decode(u, r_min, r_max)
        if not _separated(z, min_sep):
            return math.inf
        sC, _, sR = _batched_c(z[None, :], m)
        s = sC[0] if objective == "c" else sR[0]
        if not np.isfinite(s[0]):
            return math.inf
        return math.log10(max(s[-1] / s[0], 1e-300))

    best_z, best_val, best_t = None, math.inf, 0
    for t in range(restarts):
        z0 = sample_nodes(sampler, n_k, trial_rng(seed, t), r_min, r_max, min_sep)
        u0 = _encode(z0, r_min, r_max)
        val, z = score(u0), _decode(u0, r_min, r_max)
        if budget > 1 and n_k > 1:
            res = minimize(score, u0, method="Nelder-Mead",
                           options={"maxfev": budget - 1, "xatol": 1e-12, "fatol": 1e-12})
            if res.fun < val:
                val, z = float(res.fun), _decode(res.x, r_min, r_max)
        if val < best_val or best_z is None:
            best_z, best_val, best_t = z, val, t
    return c_records(best_z[None, :], m, seed, [best_t], f"search:{sampler}")[0]
