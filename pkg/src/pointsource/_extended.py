"""Ball-arithmetic helpers (python-flint) for the ill-conditioned matrix paths.

Every input double is converted exactly, so results are enclosures of the
true values for the given double nodes.  Precision is raised until the
enclosures are tight relative to their midpoints.
"""

from __future__ import annotations

import math
from contextlib import contextmanager

import numpy as np
from flint import acb, acb_mat, arb, ctx

START_PREC = 128
MAX_PREC = 8192
# enclosure radius relative to midpoint magnitude that counts as "tight"
TIGHT = 2.0**-60


class PrecisionExhausted(ArithmeticError):
    pass


@contextmanager
def working_precision(bits: int):
    saved = ctx.prec
    ctx.prec = int(bits)
    try:
        yield
    finally:
        ctx.prec = saved


def _acb(v) -> acb:
    v = complex(v)
    return acb(arb(v.real), arb(v.imag))


def to_acb(M) -> acb_mat:
    M = np.asarray(M, dtype=complex)
    r, c = M.shape
    return acb_mat(r, c, [_acb(v) for v in M.ravel()])


def to_numpy(M: acb_mat) -> tuple[np.ndarray, float]:
    """Midpoints rounded to complex128, plus the largest entry radius."""
    r, c = M.nrows(), M.ncols()
    out = np.empty((r, c), dtype=complex)
    rad = 0.0
    for i in range(r):
        for j in range(c):
            e = M[i, j]
            out[i, j] = complex(float(e.real.mid()), float(e.imag.mid()))
            rad = max(rad, float(e.rad()))
    return out, rad


def _is_tight(M: np.ndarray, rad: float) -> bool:
    scale = float(np.max(np.abs(M))) if M.size else 0.0
    return math.isfinite(rad) and rad <= TIGHT * max(scale, np.finfo(float).tiny)


def _power_vandermonde(z: list, rows: int, shift: int) -> acb_mat:
    n = len(z)
    return acb_mat(rows, n, [z[k] ** (i + shift) for i in range(rows) for k in range(n)])


def _diag(vals) -> acb_mat:
    n = len(vals)
    return acb_mat(n, n, [vals[i] if i == j else acb(0) for i in range(n) for j in range(n)])


def suggested_start(nodes, cond_g: float = 1.0) -> int:
    """Rough bit count: cancellation scales with cond(G) squared times the node-ratio power."""
    a = np.abs(np.asarray(nodes, dtype=complex))
    n = len(a)
    ratio = float(a.max() / a.min()) if n and a.min() > 0 else 1.0
    need = 64 + 2.0 * math.log2(max(cond_g, 1.0)) + 2 * n * math.log2(max(ratio, 1.0))
    bits = START_PREC
    while bits < need:
        bits *= 2
    return min(bits, MAX_PREC)


def _adaptive(fn, start: int):
    bits = start
    while bits <= MAX_PREC:
        with working_precision(bits):
            try:
                result = fn()
            except ZeroDivisionError:
                result = None
        if result is not None:
            return result, bits
        bits *= 2
    raise PrecisionExhausted(f"no tight enclosure up to {MAX_PREC} bits")


def c_matrix_and_inverse(nodes, power: int | None = None, start: int = START_PREC):
    """``C = pI - N + U^{-1} N U`` with ``U = G X^p G^{-1}`` and its inverse.

    Returns ``(C, C_inv, bits)`` as complex128 arrays.  A returned inverse
    certifies that C is nonsingular for these exact double nodes.
    """
    nodes = [complex(v) for v in nodes]
    n = len(nodes)
    p = n if power is None else int(power)

    def attempt():
        z = [_acb(v) for v in nodes]
        G = _power_vandermonde(z, n, 0)
        GXp = _power_vandermonde(z, n, p)
        Nm = _diag([acb(i + 1) for i in range(n)])
        U = GXp * G.inv()
        C = _diag([acb(p)] * n) - Nm + U.solve(Nm * U)
        Cn, crad = to_numpy(C)
        Ci, irad = to_numpy(C.inv())
        if not (_is_tight(Cn, crad) and _is_tight(Ci, irad)):
            return None
        return Cn, Ci

    (C, Ci), bits = _adaptive(attempt, start)
    return C, Ci, bits


def bracket_and_inverse(nodes, power: int | None = None, start: int = START_PREC):
    """``R = pI - G^{-1}NG + X^{-p} G^{-1}NG X^p`` and ``R^{-1}`` in ball arithmetic."""
    nodes = [complex(v) for v in nodes]
    n = len(nodes)
    p = n if power is None else int(power)

    def attempt():
        z = [_acb(v) for v in nodes]
        G = _power_vandermonde(z, n, 0)
        Nm = _diag([acb(i + 1) for i in range(n)])
        M = G.solve(Nm * G)
        Xp = _diag([w**p for w in z])
        Xmp = _diag([1 / w**p for w in z])
        R = _diag([acb(p)] * n) - M + Xmp * M * Xp
        Rn, rad = to_numpy(R)
        Ri, irad = to_numpy(R.inv())
        if not (_is_tight(Rn, rad) and _is_tight(Ri, irad)):
            return None
        return Rn, Ri

    (R, Ri), bits = _adaptive(attempt, start)
    return R, Ri, bits


def similarity(G, A, start: int = START_PREC) -> np.ndarray:
    """``G A G^{-1}`` for double inputs, rounded once at the end."""
    def attempt():
        Ga = to_acb(G)
        out, rad = to_numpy(Ga * to_acb(A) * Ga.inv())
        return out if _is_tight(out, rad) else None

    return _adaptive(attempt, start)[0]


def spectrum_of_b(nodes, start: int = START_PREC) -> np.ndarray:
    """Eigenvalues of ``U^{-1} N U`` (enclosure midpoints)."""
    nodes = [complex(v) for v in nodes]
    n = len(nodes)

    def attempt():
        z = [_acb(v) for v in nodes]
        G = _power_vandermonde(z, n, 0)
        U = _power_vandermonde(z, n, n) * G.inv()
        Nm = _diag([acb(i + 1) for i in range(n)])
        B = U.solve(Nm * U)
        try:
            ev = B.eig()
        except ValueError:
            return None
        vals = np.array([complex(float(e.real.mid()), float(e.imag.mid())) for e in ev])
        rad = max(float(e.rad()) for e in ev)
        return vals if rad <= 1e-12 else None

    return _adaptive(attempt, start)[0]


def vandermonde_det(nodes, start: int = START_PREC) -> complex:
    nodes = [complex(v) for v in nodes]

    def attempt():
        z = [_acb(v) for v in nodes]
        d = _power_vandermonde(z, len(z), 0).det()
        val = complex(float(d.real.mid()), float(d.imag.mid()))
        return val if float(d.rad()) <= TIGHT * max(abs(val), np.finfo(float).tiny) else None

    return _adaptive(attempt, start)[0]


def inverse_of(M, start: int = START_PREC) -> tuple[np.ndarray, int]:
    """Certified inverse of a double matrix (entries taken as exact)."""
    M = np.asarray(M, dtype=complex)

    def attempt():
        out, rad = to_numpy(to_acb(M).inv())
        return out if _is_tight(out, rad) else None

    return _adaptive(attempt, start)
