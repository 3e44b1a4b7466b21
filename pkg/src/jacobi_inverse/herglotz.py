r"""Real rational functions with simple real poles.

Two representations are used throughout:

* :class:`ProductForm` -- ``C * prod (z - zeros_j) / prod (z - poles_j)``
* :class:`PartialFractionForm` -- ``c + sum_j A_j / (poles_j - z)``

With the orientation ``A_j / (poles_j - z)`` a positive coefficient gives a
Herglotz term, and ``Res(f, poles_j) = -A_j``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ._util import accurate_sum, fsum_complex, log_sign_product
from .core import (
    DegenerateSpectrumError,
    InconsistentDataError,
    NormalizationError,
    NotHerglotzError,
    PoleEvaluationError,
    StructuralError,
)

__all__ = [
    "ProductForm",
    "PartialFractionForm",
    "PairingDiagnostics",
    "eval_product",
    "eval_partial_fraction",
    "product_residues",
    "product_to_partial_fraction",
    "zeros_of_partial_fraction",
    "zeros_of_rational",
    "constant_from_zero",
    "pairing_diagnostics",
]

_SWITCH_TO_NEWTON = 1e-6


def _sorted_array(values, name):
    arr = np.array(values, dtype=float).ravel()
    if not np.all(np.isfinite(arr)):
        raise StructuralError(f"{name} must be finite")
    if arr.size > 1 and not np.all(np.diff(arr) > 0):
        raise StructuralError(f"{name} must be strictly increasing")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class ProductForm:
    """``scale * prod(z - zeros) / prod(z - poles)`` with disjoint real zeros and poles."""

    scale: float
    zeros: np.ndarray
    poles: np.ndarray

    def __post_init__(self):
        if not math.isfinite(self.scale) or self.scale == 0:
            raise StructuralError("scale must be finite and nonzero")
        zeros = _sorted_array(self.zeros, "zeros")
        poles = _sorted_array(self.poles, "poles")
        if np.intersect1d(zeros, poles).size:
            raise StructuralError("zeros and poles must be disjoint")
        object.__setattr__(self, "zeros", zeros)
        object.__setattr__(self, "poles", poles)

    def __call__(self, z):
        return eval_product(self, z)


@dataclass(frozen=True, eq=False)
class PartialFractionForm:
    """``constant + sum_j coefficients_j / (poles_j - z)``."""

    constant: float
    poles: np.ndarray
    coefficients: np.ndarray

    def __post_init__(self):
        if not math.isfinite(self.constant):
            raise StructuralError("constant must be finite")
        poles = _sorted_array(self.poles, "poles")
        coef = np.array(self.coefficients, dtype=float).ravel()
        if coef.shape != poles.shape:
            raise StructuralError("one coefficient per pole is required")
        if not np.all(np.isfinite(coef)) or np.any(coef == 0):
            raise StructuralError("coefficients must be finite and nonzero")
        coef.setflags(write=False)
        object.__setattr__(self, "poles", poles)
        object.__setattr__(self, "coefficients", coef)

    def __call__(self, z):
        return eval_partial_fraction(self, z)

    def derivative(self, z):
        """``d/dz`` at real ``z``: ``sum A_j / (poles_j - z)^2``."""
        d = self.poles - z
        with np.errstate(divide="ignore", over="ignore"):
            return accurate_sum(self.coefficients / d ** 2)

    def negated(self):
        return PartialFractionForm(-self.constant, self.poles, -self.coefficients)


def _check_not_pole(z, poles):
    if np.any(np.asarray(z)[..., None] == poles):
        raise PoleEvaluationError(f"evaluation at a pole: z={z!r}")


def eval_product(f: ProductForm, z):
    """Evaluate a :class:`ProductForm` at real or complex ``z`` (scalar or array).

    Real arguments are evaluated in log-magnitude and sign form; complex
    arguments multiply zero/pole ratios pairwise so that intermediate values
    stay near unit modulus.
    """
    z_arr = np.asarray(z)
    _check_not_pole(z_arr, f.poles)
    zz = z_arr[..., None]
    if np.iscomplexobj(z_arr):
        m = min(f.zeros.size, f.poles.size)
        value = np.prod((zz - f.zeros[:m]) / (zz - f.poles[:m]), axis=-1)
        value = value * np.prod(zz - f.zeros[m:], axis=-1) / np.prod(zz - f.poles[m:], axis=-1)
        value = f.scale * value
    else:
        zz = zz.astype(float)
        ln, sn = log_sign_product(zz - f.zeros)
        ld, sd = log_sign_product(zz - f.poles)
        value = f.scale * sn * sd * np.exp(ln - ld)
    return value[()] if value.ndim == 0 else value


def eval_partial_fraction(f: PartialFractionForm, z):
    """Evaluate ``c + sum A_j/(poles_j - z)`` with compensated summation."""
    z_arr = np.asarray(z)
    _check_not_pole(z_arr, f.poles)
    if z_arr.ndim == 0:
        terms = (f.coefficients / (f.poles - z)).tolist()
        terms.append(f.constant)
        if np.iscomplexobj(z_arr):
            return complex(math.fsum(t.real for t in terms), math.fsum(t.imag for t in terms))
        return math.fsum(terms)
    out = np.empty(z_arr.shape, dtype=complex if np.iscomplexobj(z_arr) else float)
    for idx, zi in np.ndenumerate(z_arr):
        terms = f.coefficients / (f.poles - zi)
        out[idx] = fsum_complex(np.append(terms, f.constant))
    return out[()] if out.ndim == 0 else out


def product_residues(f: ProductForm) -> np.ndarray:
    """Residues of ``f`` at each pole.

    ``Res(f, p_k) = C * prod_j (p_k - zeros_j) / prod_{j != k} (p_k - p_j)``.
    """
    poles, zeros = f.poles, f.zeros
    if poles.size == 0:
        return np.zeros(0)
    if poles.size > 1 and np.any(np.diff(poles) == 0):
        raise DegenerateSpectrumError("repeated poles")
    numer = poles[:, None] - zeros[None, :]
    denom = poles[:, None] - poles[None, :]
    np.fill_diagonal(denom, 1.0)
    ln, sn = log_sign_product(numer)
    ld, sd = log_sign_product(denom)
    return f.scale * sn * sd * np.exp(ln - ld)


def product_to_partial_fraction(f: ProductForm) -> PartialFractionForm:
    """Additive pole expansion of a degree-balanced product.

    The linear term vanishes and the constant is the ``z -> infinity``
    limit ``C``; the coefficients are the negated residues.
    """
    if f.zeros.size != f.poles.size:
        raise StructuralError(
            f"degree mismatch: {f.zeros.size} zeros vs {f.poles.size} poles"
        )
    return PartialFractionForm(f.scale, f.poles, -product_residues(f))


def _single_sign(f: PartialFractionForm):
    coef = f.coefficients
    if coef.size and not (np.all(coef > 0) or np.all(coef < 0)):
        raise NotHerglotzError("partial-fraction coefficients have mixed signs")
    if f.constant == 0:
        raise NormalizationError("constant term is zero; one root escapes to infinity")
    return f if coef.size == 0 or coef[0] > 0 else f.negated()


def _bisect_all(g, lo, hi, shrink):
    """Vectorized bisection of the increasing ``g`` on every bracket at once."""
    lo = np.array(lo, dtype=float)
    hi = np.array(hi, dtype=float)
    target = shrink * (hi - lo)
    poles, coef = g.poles, g.coefficients
    while True:
        active = (hi - lo) > target
        if not np.any(active):
            return lo, hi
        mid = 0.5 * (lo + hi)
        with np.errstate(divide="ignore"):
            value = g.constant + np.sum(coef / (poles[None, :] - mid[:, None]), axis=1)
        up = active & (value < 0)
        down = active & ~(value < 0)
        lo = np.where(up, mid, lo)
        hi = np.where(down, mid, hi)
        stuck = (mid == lo) & (mid == hi)
        target = np.where(stuck, np.inf, target)


def _newton_in_bracket(g, lo, hi, tol):
    """Safeguarded Newton for the increasing ``g`` inside ``[lo, hi]``.

    Steps leaving the bracket are replaced by bisection.  Stops when a Newton
    step is below ``tol`` times the distance to the nearest pole (a
    ``|z|``-relative test would ruin roots close to a pole), when Newton
    reaches a fixed point, or when the bracket cannot be split further.
    """
    poles = g.poles
    z = 0.5 * (lo + hi)
    for _ in range(200):
        value = g(z)
        if value == 0:
            return z
        if value < 0:
            lo = z
        else:
            hi = z
        step_z = None
        slope = g.derivative(z)
        if slope > 0 and math.isfinite(slope):
            candidate = z - value / slope
            if candidate == z:
                return z
            if lo <= candidate <= hi:
                step_z = candidate
        if step_z is None:
            step_z = 0.5 * (lo + hi)
            if step_z in (lo, hi):
                return z
        elif abs(step_z - z) <= tol * float(np.min(np.abs(poles - step_z))):
            return step_z
        z = step_z
    return z


def zeros_of_partial_fraction(f: PartialFractionForm, tol: float = 1e-12) -> np.ndarray:
    """Real zeros of a single-sign partial fraction.

    With all coefficients of one sign the function is strictly monotone
    between consecutive poles, so there is exactly one zero in each gap plus
    one outside the pole range: above the last pole when ``c`` and the
    coefficients share a sign, below the first pole otherwise.  The exterior
    bracket ``(p_last, p_last + |sum A / c|]`` (or its mirror) is certified.
    """
    g = _single_sign(f)
    poles, coef, c = g.poles, g.coefficients, g.constant
    if poles.size == 0:
        return np.zeros(0)
    brackets = [(poles[i], poles[i + 1]) for i in range(poles.size - 1)]
    reach = accurate_sum(coef) / abs(c)
    if c > 0:
        upper = poles[-1] + reach
        while not g(upper) >= 0:
            upper = poles[-1] + 2 * (upper - poles[-1])
        brackets.append((poles[-1], float(np.nextafter(upper, np.inf))))
    else:
        lower = poles[0] - reach
        while not g(lower) <= 0:
            lower = poles[0] - 2 * (poles[0] - lower)
        brackets.insert(0, (float(np.nextafter(lower, -np.inf)), poles[0]))
    lo, hi = _bisect_all(g, *zip(*brackets), shrink=_SWITCH_TO_NEWTON)
    roots = np.array([_newton_in_bracket(g, l, u, tol) for l, u in zip(lo, hi)])
    return np.sort(roots)


def _polish(g: PartialFractionForm, z, steps=8):
    for _ in range(steps):
        d = g.poles - z
        if np.any(d == 0):
            break
        value = g(z)
        slope = accurate_sum(g.coefficients / d ** 2)
        if slope == 0 or not math.isfinite(slope):
            break
        step = value / slope
        z_new = z - step
        if z_new == z:
            break
        z = z_new
    return z


def zeros_of_rational(f: PartialFractionForm, tol: float = 1e-12) -> np.ndarray:
    """All zeros of ``c + sum A_j / (p_j - z)`` for coefficients of any sign.

    Single-sign input is delegated to :func:`zeros_of_partial_fraction`.
    Otherwise the zeros are the eigenvalues of ``diag(p) + (A / c) 1^T``,
    refined by Newton steps on the rational function.  Zeros with a
    non-negligible imaginary part raise :class:`InconsistentDataError`.
    """
    coef = f.coefficients
    if coef.size == 0:
        return np.zeros(0)
    if np.all(coef > 0) or np.all(coef < 0):
        return zeros_of_partial_fraction(f, tol)
    if f.constant == 0:
        raise NormalizationError("constant term is zero; one root escapes to infinity")
    mat = np.diag(f.poles) + np.outer(coef / f.constant, np.ones(coef.size))
    eig = np.linalg.eigvals(mat)
    scale = max(1.0, float(np.max(np.abs(f.poles))))
    if np.any(np.abs(eig.imag) > 1e-8 * scale):
        raise InconsistentDataError("real-zeros", "rational function has non-real zeros")
    roots = np.sort(eig.real)
    return np.array([_polish(f, z) for z in roots])


def constant_from_zero(poles, coefficients, known_zero: float) -> float:
    """Constant ``c`` that makes ``known_zero`` a root: ``-sum A_j / (p_j - known_zero)``."""
    poles = np.asarray(poles, dtype=float)
    coefficients = np.asarray(coefficients, dtype=float)
    if poles.shape != coefficients.shape:
        raise StructuralError("one coefficient per pole is required")
    if np.any(poles == known_zero):
        raise PoleEvaluationError(f"known zero {known_zero!r} coincides with a pole")
    return -accurate_sum(coefficients / (poles - known_zero))


@dataclass(frozen=True)
class PairingDiagnostics:
    """Finite-size stand-ins for the growth hypotheses on a pole/zero pairing.

    ``min_gap`` is ``min_n |zero_n - pole_n|``.  ``residue_drift[m-1]`` is
    ``sum_{n<=m} |A_{n,m} - A_n|``, where ``A_{n,m}`` is the residue at
    ``pole_n`` of the partial product over the first ``m`` pairs and ``A_n``
    that of the full product.
    """

    min_gap: float
    residue_drift: tuple


def pairing_diagnostics(poles, zeros) -> PairingDiagnostics:
    poles = np.asarray(poles, dtype=float)
    zeros = np.asarray(zeros, dtype=float)
    if poles.shape != zeros.shape:
        raise StructuralError("pairing needs as many zeros as poles")
    if poles.size == 0:
        return PairingDiagnostics(math.inf, ())
    full = product_residues(ProductForm(1.0, zeros, poles))
    drift = []
    for m in range(1, poles.size + 1):
        partial = product_residues(ProductForm(1.0, zeros[:m], poles[:m]))
        drift.append(float(np.sum(np.abs(partial - full[:m]))))
    return PairingDiagnostics(float(np.min(np.abs(zeros - poles))), tuple(drift))
