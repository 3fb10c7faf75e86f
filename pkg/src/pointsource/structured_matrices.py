"""Moment matrices of the exterior power-series conditions and the C matrix.

An expansion that vanishes for |z| >= 1 has all coefficients b_j of z^{-j}
equal to zero.  Each b_j is linear in the strengths, so uniqueness questions
become injectivity of structured matrices built from the nodes z_k:

    G_{ik} = z_k^{i-1}          (Vandermonde, i = 1..N_k)
    N      = diag(1, ..., N_k)
    X      = diag(z_1, ..., z_N)
    G'     = N^{-1} G X         (logarithmic terms)

The mixed simple/second-order system reduces, after eliminating the simple
pole strengths, to a matrix similar to

    C = N_k I - N + U^{-1} N U,   U = G X^{N_k} G^{-1},

whose invertibility is not known in general.  Because ``G^{-1} N G`` has the
closed form ``delta_kl + z_l L_k'(z_l)`` (Lagrange basis ``L_k``), the bracket
``N_k I - G^{-1}NG + X^{-N_k} G^{-1}NG X^{N_k}`` has all diagonal entries
equal to N_k and is invariant under scaling of the nodes.
"""

from __future__ import annotations

import csv
import io
import json
import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy import linalg as sla

from . import _extended
from .complex_basis import binomial_pole_coefficient
from .errors import (
    BadOrder,
    DuplicateNodes,
    IllConditioned,
    NonFinite,
    SingularBlock,
    ZeroNode,
)

SINGULAR_RTOL = 1e-10
COND_G_MAX = 1e12
MAX_DOUBLE_NK = 12
# forecast loss of relative accuracy in the double C route; beyond this, go extended
AMPLIFICATION_MAX = 1e6
KIND_ORDER = ("log", "pole1", "pole2")
PRECISIONS = ("auto", "double", "extended")


# ---------------------------------------------------------------------------
# containers and validation


@dataclass(frozen=True, eq=False)
class MomentMatrix:
    """Dense condition matrix.

    ``row_offset`` is the power j of z^{-j} whose condition occupies the first
    row.  ``kind_layout`` lists ``(kind, column_count)`` column blocks in order.
    """

    entries: np.ndarray
    row_offset: int
    kind_layout: tuple[tuple[str, int], ...]
    nodes: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=complex))

    def __post_init__(self):
        e = np.asarray(self.entries, dtype=complex)
        if e.ndim != 2:
            raise ValueError("moment matrix must be 2-D")
        if not np.all(np.isfinite(e)):
            raise NonFinite("moment matrix has non-finite entries")
        if sum(c for _, c in self.kind_layout) != e.shape[1]:
            raise ValueError("kind_layout does not match the column count")
        e.setflags(write=False)
        object.__setattr__(self, "entries", e)

    @property
    def shape(self) -> tuple[int, int]:
        return self.entries.shape

    def __array__(self, dtype=None, copy=None):
        return self.entries if dtype is None else self.entries.astype(dtype)

    def block(self, kind: str) -> np.ndarray:
        start = 0
        for k, c in self.kind_layout:
            if k == kind:
                return self.entries[:, start:start + c]
            start += c
        raise KeyError(kind)


def as_nodes(nodes, allow_zero: bool = True) -> np.ndarray:
    """Validate a node vector: finite, distinct, optionally nonzero."""
    z = np.atleast_1d(np.asarray(nodes, dtype=complex)).ravel()
    if z.size == 0:
        raise ValueError("at least one node is required")
    if not np.all(np.isfinite(z)):
        raise NonFinite("non-finite node")
    if not allow_zero and np.any(z == 0):
        raise ZeroNode("node at the origin makes X singular")
    diff = z[:, None] - z[None, :]
    np.fill_diagonal(diff, 1.0)
    if np.any(diff == 0):
        raise DuplicateNodes("nodes must be distinct")
    return z


# ---------------------------------------------------------------------------
# basic blocks


def vandermonde(nodes, rows: int | None = None) -> MomentMatrix:
    """``G[i, k] = z_k^(i-1)``; rows default to the node count."""
    z = as_nodes(nodes)
    rows = len(z) if rows is None else int(rows)
    if rows < 1:
        raise ValueError("rows must be >= 1")
    G = z[None, :] ** np.arange(rows)[:, None]
    return MomentMatrix(G, 1, (("pole1", len(z)),), z)


def diag_N(n: int) -> np.ndarray:
    if n < 1:
        raise ValueError("n must be >= 1")
    return np.diag(np.arange(1, n + 1).astype(float))


def diag_X(nodes) -> np.ndarray:
    z = np.atleast_1d(np.asarray(nodes, dtype=complex))
    if np.any(z == 0):
        raise ZeroNode("node at the origin makes X singular")
    return np.diag(z)


def log_moment_matrix(nodes) -> MomentMatrix:
    """``G' = N^{-1} G X``, entry (n, k) = z_k^n / n."""
    z = as_nodes(nodes, allow_zero=False)
    n = len(z)
    G = vandermonde(z).entries
    Gp = np.linalg.inv(diag_N(n)) @ G @ diag_X(z)
    return MomentMatrix(Gp, 1, (("log", n),), z)


def pole_moment_block(nodes, m: int) -> MomentMatrix:
    """Square condition block for an order-``m`` pole expansion.

    For m = 1 the conditions b_1..b_N give G.  For m >= 2 the coefficient of
    nu_k in b_j is ``S_{m, j-m} z_k^{j-m}``; row j = m carries only the
    constant-type condition sum(nu_k) and is skipped, so rows j = m+1..m+N_k
    give ``diag(S_{m,1..N}) G X``.
    """
    if m < 1:
        raise BadOrder(f"pole order must be >= 1, got {m}")
    z = as_nodes(nodes, allow_zero=(m == 1))
    n = len(z)
    G = vandermonde(z).entries
    if m == 1:
        return MomentMatrix(G, 1, (("pole1", n),), z)
    S = np.array([binomial_pole_coefficient(m, i) for i in range(1, n + 1)])
    return MomentMatrix(S[:, None] * (G @ diag_X(z)), m + 1, ((f"pole{m}", n),), z)


def _kind_column(kind: str, z: np.ndarray, j: np.ndarray) -> np.ndarray:
    # coefficient of each strength in b_j, j a column vector of powers
    if kind == "log":  # rho'_k = z_k rho_k
        return z[None, :] ** (j - 1) / j
    if kind == "pole1":
        return z[None, :] ** (j - 1)
    if kind == "pole2":
        return (j - 1) * z[None, :] ** (j - 2)
    raise ValueError(f"unknown kind {kind!r}")


def _ordered_kinds(kinds) -> tuple[str, ...]:
    ks = set(kinds)
    if not ks:
        raise ValueError("at least one kind is required")
    bad = ks - set(KIND_ORDER)
    if bad:
        raise ValueError(f"unknown kinds {sorted(bad)}")
    return tuple(k for k in KIND_ORDER if k in ks)


def mixed_block_system(nodes, kinds, rows: int | None = None) -> MomentMatrix:
    """Conditions b_j = 0 for j = 2 .. rows+1, columns ordered (log, pole1, pole2).

    The b_1 row (residue sum) is dropped.  Log columns use ``rho'_k = z_k rho_k``
    and second-order poles their raw strengths, which for {pole1, pole2}
    yields ``[G X | N G ; G X^{N+1} | (N + N_k I) G X^{N_k}]``.
    """
    ks = _ordered_kinds(kinds)
    z = as_nodes(nodes, allow_zero=False)
    n = len(z)
    rows = n * len(ks) if rows is None else int(rows)
    if rows < n * len(ks):
        raise ValueError(f"need at least {n * len(ks)} rows, got {rows}")
    j = np.arange(2, rows + 2)[:, None].astype(float)
    S = np.hstack([_kind_column(k, z, j) for k in ks])
    return MomentMatrix(S, 2, tuple((k, n) for k in ks), z)


# ---------------------------------------------------------------------------
# elimination


def _solve(A, B, what: str) -> np.ndarray:
    try:
        with np.errstate(all="raise"), warnings.catch_warnings():
            warnings.simplefilter("error", sla.LinAlgWarning)
            lu = sla.lu_factor(A, check_finite=True)
    except (ValueError, FloatingPointError, np.linalg.LinAlgError, sla.LinAlgWarning) as exc:
        raise SingularBlock(f"{what} is singular") from exc
    if np.any(np.abs(np.diag(lu[0])) == 0):
        raise SingularBlock(f"{what} is singular")
    s = np.linalg.svd(A, compute_uv=False)
    if s[-1] <= np.finfo(float).eps * s[0]:
        raise SingularBlock(f"{what} is numerically singular (sigma ratio {s[-1] / s[0]:.2e})")
    return sla.lu_solve(lu, B)


def _square_halves(system) -> tuple[np.ndarray, int]:
    S = np.asarray(system, dtype=complex)
    if S.ndim != 2 or S.shape[0] != S.shape[1] or S.shape[0] % 2:
        raise ValueError("expected a square 2N x 2N system")
    return S, S.shape[0] // 2


def eliminate_first_block(system) -> tuple[np.ndarray, np.ndarray]:
    """Eliminate the simple-pole strengths from the square {pole1, pole2} system.

    Returns ``(mu_from_nu, reduced)`` with ``mu = mu_from_nu @ nu`` solving the
    first block row and ``reduced @ nu = 0`` the remaining condition, where
    ``reduced = X^{-N} G^{-1} (S22 - S21 S11^{-1} S12)``.
    """
    S, n = _square_halves(system)
    S11, S12 = S[:n, :n], S[:n, n:]
    S21, S22 = S[n:, :n], S[n:, n:]
    z = S11[0].copy()
    if np.any(z == 0):
        raise SingularBlock("X has a zero node")
    G = S12 / np.arange(1, n + 1)[:, None]
    T = _solve(S11, S12, "G X")
    schur = S22 - S21 @ T
    reduced = _solve(G, schur, "G") / (z**n)[:, None]
    return -T, reduced


def log_pole_block(nodes) -> MomentMatrix:
    """Square log + simple-pole system in (rho', mu), rows j = 2..2N+1 scaled by j.

    ``[G X | (N+I) G X ; G X^{N+1} | (N + (N+1) I) G X^{N+1}]``
    """
    z = as_nodes(nodes, allow_zero=False)
    n = len(z)
    base = mixed_block_system(z, ("log", "pole1"))
    scale = np.arange(2, 2 * n + 2)[:, None].astype(float)
    return MomentMatrix(scale * base.entries, 2, base.kind_layout, z)


def eliminate_log_block(system) -> tuple[np.ndarray, np.ndarray]:
    """Eliminate rho' from :func:`log_pole_block`.

    Returns ``(rho_from_mu, reduced)``; ``reduced`` acts on ``X mu`` and equals
    the bracket produced by :func:`eliminate_first_block`.
    """
    S, n = _square_halves(system)
    S11, S12 = S[:n, :n], S[:n, n:]
    S21, S22 = S[n:, :n], S[n:, n:]
    z = S11[0].copy()
    if np.any(z == 0):
        raise SingularBlock("X has a zero node")
    G = S11 / z[None, :]
    T = _solve(S11, S12, "G X")
    schur = S22 - S21 @ T
    reduced = _solve(G, schur, "G") / (z**n)[:, None] / z[None, :]
    return -T, reduced


# ---------------------------------------------------------------------------
# spectra


def _finite(M) -> np.ndarray:
    A = np.asarray(M)
    if A.ndim != 2:
        raise ValueError("expected a matrix")
    if not np.all(np.isfinite(A)):
        raise NonFinite("matrix has non-finite entries")
    return A


def singular_values(M) -> np.ndarray:
    return np.linalg.svd(_finite(M), compute_uv=False)


def min_singular_value(M) -> float:
    return float(singular_values(M)[-1])


def condition_number(M) -> float:
    s = singular_values(M)
    return math.inf if s[-1] == 0 else float(s[0] / s[-1])


def is_numerically_singular(M, rtol: float = SINGULAR_RTOL) -> bool:
    s = singular_values(M)
    return bool(s[-1] <= rtol * s[0])


def g_inv_n_g(z: np.ndarray) -> np.ndarray:
    """``G^{-1} N G`` by a linear solve (no explicit inverse)."""
    n = len(z)
    G = vandermonde(z).entries
    return np.linalg.solve(G, diag_N(n) @ G)


def bracket(nodes, power: int | None = None) -> np.ndarray:
    """``p I - M + X^{-p} M X^p`` with ``M = G^{-1} N G`` (double precision).

    The ratio factor ``(z_l / z_k)^p`` is formed elementwise, so no power of X
    is ever materialized.
    """
    z = as_nodes(nodes, allow_zero=False)
    p = len(z) if power is None else int(power)
    M = g_inv_n_g(z)
    R = (z[None, :] / z[:, None]) ** p
    np.fill_diagonal(R, 1.0)
    return p * np.eye(len(z)) - M + R * M


# ---------------------------------------------------------------------------
# C matrix bundle


@dataclass(frozen=True, eq=False)
class CMatrixBundle:
    """All matrices of a C (or C_m) computation plus singular-value diagnostics.

    ``flagged`` marks cond(G) above the guard; the numbers are still real
    results, computed in whatever precision ``precision`` records.
    ``certified`` is true when ball arithmetic proved C nonsingular.
    """

    nodes: np.ndarray
    m: int
    G: np.ndarray
    N: np.ndarray
    X: np.ndarray
    U: np.ndarray
    C: np.ndarray
    sigma_min: float
    sigma_max: float
    cond: float
    cond_G: float
    flagged: bool
    precision: str
    certified: bool = False
    bits: int = 53

    @property
    def relative_sigma_min(self) -> float:
        return self.sigma_min / self.sigma_max if self.sigma_max > 0 else 0.0

    @property
    def A(self) -> np.ndarray:
        return self.m * len(self.nodes) * np.eye(len(self.nodes)) - self.N

    @property
    def B(self) -> np.ndarray:
        return self.C - self.A

    @property
    def singular(self) -> bool:
        return self.sigma_min <= SINGULAR_RTOL * self.sigma_max

    def to_dict(self) -> dict:
        return {
            "nodes": [[float(v.real), float(v.imag)] for v in self.nodes],
            "m": self.m,
            "sigma_min": self.sigma_min,
            "sigma_max": self.sigma_max,
            "cond": self.cond,
            "cond_G": self.cond_G,
            "flagged": self.flagged,
            "precision": self.precision,
            "certified": self.certified,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)


def amplification(nodes, power: int | None = None) -> float:
    """Forecast error growth of the double C route: cond(G) times the node-ratio power."""
    z = np.asarray(nodes, dtype=complex)
    p = len(z) if power is None else power
    a = np.abs(z)
    return condition_number(vandermonde(z).entries) * float(a.max() / a.min()) ** p


def _build_bundle(nodes, m: int, precision: str, cond_threshold: float, max_nk: int,
                  in_bracket: bool) -> CMatrixBundle:
    if precision not in PRECISIONS:
        raise ValueError(f"precision must be one of {PRECISIONS}")
    if m < 1:
        raise BadOrder(f"m must be >= 1, got {m}")
    z = as_nodes(nodes, allow_zero=False)
    n = len(z)
    p = m * n
    G = vandermonde(z).entries
    Nm = diag_N(n)
    X = np.diag(z)
    cond_G = condition_number(G)
    flagged = cond_G > cond_threshold
    amp = cond_G * float(np.abs(z).max() / np.abs(z).min()) ** p

    use_ext = precision == "extended" or (
        precision == "auto" and (flagged or n > max_nk or amp > AMPLIFICATION_MAX)
    )
    if precision == "double" and (flagged or n > max_nk):
        raise IllConditioned(
            f"cond(G) = {cond_G:.3e} (limit {cond_threshold:.1e}) or N_k = {n} > {max_nk}; "
            "use extended precision"
        )

    if use_ext:
        start = _extended.suggested_start(z, cond_G)
        U = _extended.similarity(G, np.diag(z**p), start)
        if not in_bracket:
            C, Ci, bits = _extended.c_matrix_and_inverse(z, p, start)
        else:
            C, Ci, bits = _extended.bracket_and_inverse(z, p, start)
        s_max = float(np.linalg.svd(C, compute_uv=False)[0])
        s_min = 1.0 / float(np.linalg.svd(Ci, compute_uv=False)[0])
        certified = True
        prec_used = "extended"
    else:
        # U = G X^p G^{-1} through a solve against G^T
        U = np.linalg.solve(G.T, (G * z[None, :] ** p).T).T
        R = bracket(z, p)
        C = R if in_bracket else np.linalg.solve(G.T, (G @ R).T).T
        s = singular_values(C)
        s_min, s_max = float(s[-1]), float(s[0])
        certified, bits, prec_used = False, 53, "double"

    cond = math.inf if s_min == 0 else s_max / s_min
    return CMatrixBundle(z, m, G, Nm, X, U, C, s_min, s_max, cond, cond_G,
                         bool(flagged), prec_used, certified, int(bits))


def c_matrix(nodes, precision: str = "auto", cond_threshold: float = COND_G_MAX,
             max_nk: int = MAX_DOUBLE_NK) -> CMatrixBundle:
    """``C = N_k I - N + U^{-1} N U`` with ``U = G X^{N_k} G^{-1}``.

    ``precision``: ``"double"`` raises :class:`IllConditioned` past the guard;
    ``"extended"`` always uses ball arithmetic (and certifies nonsingularity);
    ``"auto"`` switches to extended when the double route is forecast to lose
    accuracy.  In double, C is assembled as ``G R G^{-1}`` from the bracket R,
    which keeps full relative accuracy where the literal formula does not.
    """
    return _build_bundle(nodes, 1, precision, cond_threshold, max_nk, in_bracket=False)


def c_m_matrix(nodes, m: int, precision: str = "auto", cond_threshold: float = COND_G_MAX,
               max_nk: int = MAX_DOUBLE_NK) -> CMatrixBundle:
    """``C_m = m N_k I - G^{-1}NG + X^{-m N_k} G^{-1}NG X^{m N_k}``.

    Lives in the bracket coordinates, so ``C_1`` is similar (through G) to
    :func:`c_matrix`.  ``U`` in the bundle is ``G X^{m N_k} G^{-1}``.
    """
    return _build_bundle(nodes, m, precision, cond_threshold, max_nk, in_bracket=True)


def b_spectrum(nodes) -> np.ndarray:
    """Eigenvalues of ``U^{-1} N U`` via ball arithmetic, sorted by real part."""
    z = as_nodes(nodes, allow_zero=False)
    ev = _extended.spectrum_of_b(z, _extended.suggested_start(z, condition_number(vandermonde(z).entries)))
    return ev[np.argsort(ev.real)]


def vandermonde_det(nodes, precision: str = "double") -> complex:
    z = as_nodes(nodes)
    if precision == "extended":
        return _extended.vandermonde_det(z)
    return complex(np.linalg.det(vandermonde(z).entries))


def vandermonde_det_product(nodes) -> complex:
    """``prod_{j<k} (z_k - z_j)``."""
    z = as_nodes(nodes)
    d = z[None, :] - z[:, None]
    iu = np.triu_indices(len(z), 1)
    return complex(np.prod(d[iu]))


# ---------------------------------------------------------------------------
# export


def to_csv(M) -> str:
    """CSV with real and imaginary parts interleaved: re_1, im_1, re_2, im_2, ..."""
    A = np.atleast_2d(np.asarray(M, dtype=complex))
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    for row in A:
        w.writerow([repr(float(x)) for v in row for x in (v.real, v.imag)])
    return buf.getvalue()


def from_csv(text: str) -> np.ndarray:
    rows = [r for r in csv.reader(io.StringIO(text)) if r]
    if not rows:
        return np.zeros((0, 0), dtype=complex)
    a = np.array(rows, dtype=float)
    return a[:, 0::2] + 1j * a[:, 1::2]
