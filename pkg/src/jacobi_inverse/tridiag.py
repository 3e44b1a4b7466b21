"""Forward spectral solver for symmetric tridiagonal (Jacobi) matrices.

Eigenvalues come from Sturm-count bisection, run for all eigenvalues at once
and carried out in ``numpy.longdouble`` so that the float64 results are
correctly rounded on platforms with an 80-bit extended type.  The two-spectra
inverse problem amplifies eigenvalue errors enormously, so the extra bits are
worth the cost.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import (
    DegenerateSpectrumError,
    JacobiMatrix,
    SpectralDatum,
    StructuralError,
)

__all__ = [
    "DEFAULT_TOL",
    "SturmEvaluation",
    "apply_boundary",
    "gershgorin_bounds",
    "sturm_count",
    "sturm_evaluation",
    "eigenvalues",
    "spectral_weights",
    "spectral_datum",
]

DEFAULT_TOL = 1e-13

_LD = np.longdouble
_RESCALE = 2.0 ** 200
_SEED_PAD = 1e-11


@dataclass(frozen=True, eq=False)
class SturmEvaluation:
    """Leading principal minors ``p_k(z) = det(J[:k, :k] - z)`` at one point.

    ``p_k = values[k] * exp(log_scale[k])``; ``sign_changes`` equals the
    number of eigenvalues strictly below ``z``.
    """

    z: float
    values: np.ndarray
    log_scale: np.ndarray
    sign_changes: int

    @property
    def minors(self):
        with np.errstate(over="ignore"):
            return self.values * np.exp(self.log_scale)


def apply_boundary(matrix: JacobiMatrix, h: float) -> JacobiMatrix:
    """Return ``J - h <., e_1> e_1``, i.e. ``a_1`` replaced by ``a_1 - h``."""
    if h == 0:
        return matrix
    diag = matrix.diag.copy()
    diag[0] -= h
    return JacobiMatrix(diag, matrix.offdiag)


def gershgorin_bounds(matrix: JacobiMatrix):
    a = matrix.diag
    radius = np.zeros_like(a)
    radius[:-1] += matrix.offdiag
    radius[1:] += matrix.offdiag
    lo = float(np.min(a - radius))
    hi = float(np.max(a + radius))
    pad = 2.0 * np.finfo(float).eps * max(abs(lo), abs(hi), 1.0)
    return lo - pad, hi + pad


def _pivmin(matrix):
    b2max = float(np.max(matrix.offdiag ** 2)) if matrix.n > 1 else 0.0
    return np.finfo(_LD).tiny * max(1.0, b2max)


def _counts(a, b2, z, pivmin):
    """Negative-pivot counts of ``LDL^T(J - z)`` for a vector of shifts."""
    q = a[0] - z
    q = np.where(np.abs(q) <= pivmin, -pivmin, q)
    count = (q < 0).astype(np.int64)
    for i in range(1, a.size):
        q = (a[i] - z) - b2[i - 1] / q
        q = np.where(np.abs(q) <= pivmin, -pivmin, q)
        count += q < 0
    return count


def sturm_count(matrix: JacobiMatrix, z):
    """Number of eigenvalues of ``matrix`` strictly below ``z`` (vectorized over ``z``)."""
    a = matrix.diag.astype(_LD)
    b2 = matrix.offdiag.astype(_LD) ** 2
    zz = np.asarray(z, dtype=_LD)
    counts = _counts(a, b2, np.atleast_1d(zz), _pivmin(matrix))
    return int(counts[0]) if zz.ndim == 0 else counts


def sturm_evaluation(matrix: JacobiMatrix, z: float) -> SturmEvaluation:
    """Scaled leading-minor sequence ``p_0(z), ..., p_N(z)`` and its sign changes.

    The running pair ``(p_{k-1}, p_k)`` is rescaled whenever it leaves
    ``[2^-200, 2^200]``; the accumulated logarithm of the scale is returned
    per entry.  An exactly zero minor takes the sign opposite to its
    predecessor when counting sign changes.
    """
    a, b = matrix.diag, matrix.offdiag
    n = a.size
    values = np.empty(n + 1)
    log_scale = np.zeros(n + 1)
    prev, cur, logs = 0.0, 1.0, 0.0
    values[0] = 1.0
    for k in range(1, n + 1):
        b2 = b[k - 2] ** 2 if k >= 2 else 0.0
        prev, cur = cur, (a[k - 1] - z) * cur - b2 * prev
        mag = abs(cur)
        if mag > _RESCALE or (0 < mag < 1.0 / _RESCALE):
            prev /= mag
            cur /= mag
            logs += np.log(mag)
        values[k] = cur
        log_scale[k] = logs
    changes = 0
    last_sign = 1.0
    for k in range(1, n + 1):
        s = np.sign(values[k]) if values[k] != 0 else -last_sign
        if s != last_sign:
            changes += 1
        last_sign = s
    return SturmEvaluation(float(z), values, log_scale, changes)


def eigenvalues(matrix: JacobiMatrix, tol: float = DEFAULT_TOL) -> np.ndarray:
    """All eigenvalues of ``matrix`` in increasing order.

    Each eigenvalue is bracketed by bisection on the Sturm count until the
    bracket width is at most ``tol * max(1, |lambda|)``.  ``tol=0`` bisects
    until the bracket is narrower than a quarter of a float64 ulp (or cannot
    be split further).

    Starting brackets are narrow intervals around a dense LAPACK estimate;
    each one is certified by two Sturm counts, and any bracket that fails
    certification restarts from the Gershgorin interval, so the estimate
    affects speed but not the accuracy guarantee.
    """
    if tol < 0:
        raise StructuralError("tol must be non-negative")
    n = matrix.n
    a = matrix.diag.astype(_LD)
    b2 = matrix.offdiag.astype(_LD) ** 2
    pivmin = _pivmin(matrix)
    glo, ghi = gershgorin_bounds(matrix)
    index = np.arange(n)
    guess = np.linalg.eigvalsh(matrix.to_dense())
    pad = _SEED_PAD * max(1.0, float(np.max(np.abs(guess))))
    lo = np.maximum(guess - pad, glo).astype(_LD)
    hi = np.minimum(guess + pad, ghi).astype(_LD)
    certified = (_counts(a, b2, lo, pivmin) <= index) & (_counts(a, b2, hi, pivmin) > index)
    lo[~certified] = glo
    hi[~certified] = ghi
    active = np.ones(n, dtype=bool)
    for _ in range(256):
        idx = np.flatnonzero(active)
        if idx.size == 0:
            break
        mid = (lo[idx] + hi[idx]) / 2
        below = _counts(a, b2, mid, pivmin) > index[idx]
        hi[idx] = np.where(below, mid, hi[idx])
        lo[idx] = np.where(below, lo[idx], mid)
        width = hi[idx] - lo[idx]
        centre = (lo[idx] + hi[idx]) / 2
        limit = np.maximum(tol * np.maximum(1.0, np.abs(centre)), np.spacing(centre.astype(float)) / 4)
        stuck = (centre == lo[idx]) | (centre == hi[idx])
        active[idx[(width <= limit) | stuck]] = False
    lam = ((lo + hi) / 2).astype(float)
    if n > 1 and np.any(np.diff(lam) <= 0):
        raise DegenerateSpectrumError("eigenvalues are not separated in double precision")
    return lam


def spectral_weights(matrix: JacobiMatrix, eigs) -> np.ndarray:
    """Spectral weights ``mu_k``: squared first components of the unit eigenvectors.

    Uses the determinant-ratio identity ``mu_k = q(lam_k) / P'(lam_k)`` with
    ``P(z) = det(z - J)`` and ``q(z) = det(z - J[1:, 1:])``.  Differentiating
    the determinant row by row gives

        P'(lam) / q(lam) = sum_j prod_{i<j} s_i,   s_i = (u_{i+1} / u_i)^2,

    where each ratio ``s_i`` equals ``(d_i / b_i)^2`` from the top-down pivots
    ``d`` of ``J - lam`` and ``(b_i / r_{i+1})^2`` from the bottom-up pivots
    ``r``.  Above the twist index (smallest ``|d_k + r_k - (a_k - lam)|``)
    the top-down form is used, below it the bottom-up form, which keeps
    exponentially small weights accurate to high relative precision.
    """
    eigs = np.asarray(eigs, dtype=float)
    n = matrix.n
    if eigs.shape != (n,):
        raise StructuralError(f"expected {n} eigenvalues, got shape {eigs.shape}")
    if n == 1:
        return np.ones(1)
    lam = eigs.astype(_LD)
    shifted = matrix.diag.astype(_LD)[:, None] - lam[None, :]
    b = matrix.offdiag.astype(_LD)
    b2 = b ** 2
    pivmin = _pivmin(matrix)

    def guard(x):
        return np.where(np.abs(x) <= pivmin, -pivmin, x)

    down = np.empty_like(shifted)
    up = np.empty_like(shifted)
    down[0] = guard(shifted[0])
    for i in range(1, n):
        down[i] = guard(shifted[i] - b2[i - 1] / down[i - 1])
    up[n - 1] = guard(shifted[n - 1])
    for i in range(n - 2, -1, -1):
        up[i] = guard(shifted[i] - b2[i] / up[i + 1])
    twist = np.argmin(np.abs(down + up - shifted), axis=0)

    rows = np.arange(n - 1)[:, None]
    log_top = 2 * (np.log(np.abs(down[:-1])) - np.log(b)[:, None])
    log_bottom = 2 * (np.log(b)[:, None] - np.log(np.abs(up[1:])))
    log_ratio = np.where(rows < twist[None, :], log_top, log_bottom)
    log_sq = np.vstack([np.zeros((1, n), dtype=_LD), np.cumsum(log_ratio, axis=0)])
    peak = log_sq.max(axis=0)
    log_norm = peak + np.log(np.sum(np.exp(log_sq - peak), axis=0))
    mu = np.exp(-log_norm).astype(float)
    if not np.all(np.isfinite(mu)) or np.any(mu <= 0):
        raise DegenerateSpectrumError("non-finite or non-positive spectral weight; eigenvalues too clustered")
    return mu


def spectral_datum(matrix: JacobiMatrix, h: float, tol: float = DEFAULT_TOL) -> SpectralDatum:
    """Eigenvalues and weights of ``J_h`` packaged with ``h``."""
    perturbed = apply_boundary(matrix, h)
    lam = eigenvalues(perturbed, tol)
    return SpectralDatum(float(h), lam, spectral_weights(perturbed, lam))
