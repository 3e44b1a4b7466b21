"""Forward spectral data: Weyl m-functions, the boundary-shift identity,
the ratio ``F = m_{h1} / m_{h2}`` and seeded instance generation."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ._util import fsum_complex
from .core import (
    BoundaryConstant,
    JacobiMatrix,
    PoleEvaluationError,
    SpectralDatum,
    StructuralError,
    TwoSpectra,
    check_separation,
    compute_delta,
    spectral_scale,
    validate_interlacing,
    InconsistentDataError,
)
from .herglotz import PartialFractionForm, ProductForm, eval_partial_fraction, product_residues
from .tridiag import spectral_datum

__all__ = [
    "RNG_ALGORITHM",
    "ResidueReport",
    "AsymptoticReport",
    "GeneratedInstance",
    "m_function",
    "m_shift",
    "build_F",
    "residue_weight_check",
    "asymptotic_check",
    "boundary_from_angle",
    "generate_instance",
]

RNG_ALGORITHM = "numpy.random.Generator(PCG64)"


def m_function(datum: SpectralDatum, z):
    """Weyl function ``m_h(z) = sum_k mu_k / (lambda_k - z)``.

    Raises :class:`PoleEvaluationError` when ``z`` is an eigenvalue.
    """
    f = PartialFractionForm(0.0, datum.eigenvalues, datum.weights)
    return eval_partial_fraction(f, z)


def m_shift(m_value, h1: float, h2: float):
    """Map ``m_{h1}(z)`` to ``m_{h2}(z) = m / (1 - (h2 - h1) m)``.

    An infinite ``m`` (``z`` at an eigenvalue of ``J_{h1}``) maps to
    ``1 / (h1 - h2)``.  A vanishing denominator means ``z`` is an eigenvalue
    of ``J_{h2}`` and raises :class:`PoleEvaluationError`.
    """
    if h1 == h2:
        return m_value
    m = np.asarray(m_value)
    if np.any(np.isinf(m)):
        if m.ndim:
            raise StructuralError("infinite m values are only accepted as scalars")
        return 1.0 / (h1 - h2)
    denom = 1.0 - (h2 - h1) * m
    if np.any(denom == 0):
        raise PoleEvaluationError("z lies in the spectrum of J_{h2}")
    out = m / denom
    return out[()] if out.ndim == 0 else out


def build_F(ts: TwoSpectra) -> ProductForm:
    """``F(z) = prod (z - nu_n) / (z - lambda_n)``, which equals ``m_{h1} / m_{h2}``."""
    return ProductForm(1.0, ts.nu, ts.lam)


@dataclass(frozen=True)
class ResidueReport:
    """Comparison of ``Res(F, lambda_k)`` with ``-(h1 - h2) mu_k``.

    ``max_abs`` is the largest absolute deviation and ``max_rel`` the same
    divided by ``|h1 - h2|``.
    """

    residues: tuple
    expected: tuple
    max_abs: float
    max_rel: float


def residue_weight_check(ts: TwoSpectra, weights_h1) -> ResidueReport:
    weights = np.asarray(weights_h1, dtype=float)
    if weights.shape != ts.lam.shape:
        raise StructuralError("one weight per eigenvalue of J_{h1} is required")
    delta = ts.h1 - ts.h2
    res = product_residues(build_F(ts))
    expected = -delta * weights
    dev = float(np.max(np.abs(res - expected)))
    return ResidueReport(tuple(res.tolist()), tuple(expected.tolist()), dev, dev / abs(delta))


@dataclass(frozen=True)
class AsymptoticReport:
    """Residuals of ``m_h(iR)`` against its three-term expansion and their log-log slope."""

    radii: tuple
    residuals: tuple
    slope: float

    def passed(self, max_slope=-3.9):
        return self.slope <= max_slope


def _series(a1h, b1, z):
    return fsum_complex(np.array([-1.0 / z, -a1h / z ** 2, -(a1h ** 2 + b1 ** 2) / z ** 3]))


def asymptotic_check(matrix: JacobiMatrix, h: float, radii=(1e2, 1e3, 1e4), tol=0.0) -> AsymptoticReport:
    """Fit the decay rate of ``m_h(iR) + 1/z + (a_1-h)/z^2 + ((a_1-h)^2+b_1^2)/z^3``.

    Every radius must be at least ten times the spectral radius of ``J_h``.
    The expected slope is -4 (or steeper when the next moment vanishes).
    """
    datum = spectral_datum(matrix, h, tol)
    rho = spectral_scale(datum.eigenvalues)
    radii = np.asarray(radii, dtype=float)
    if radii.size < 2:
        raise StructuralError("at least two radii are needed for a slope")
    if np.any(radii < 10 * rho):
        raise StructuralError(f"radii must be at least 10 x spectral radius ({10 * rho:.3g})")
    a1h = matrix.diag[0] - h
    b1 = matrix.offdiag[0] if matrix.n > 1 else 0.0
    residuals = []
    for R in radii:
        z = 1j * R
        residuals.append(abs(m_function(datum, z) - _series(a1h, b1, z)))
    residuals = np.array(residuals)
    floor = np.finfo(float).tiny
    slope = float(np.polyfit(np.log(radii), np.log(np.maximum(residuals, floor)), 1)[0])
    return AsymptoticReport(tuple(radii.tolist()), tuple(residuals.tolist()), slope)


def boundary_from_angle(beta: float) -> float:
    """``h = cot(beta)`` for ``beta`` in ``(0, pi)``."""
    return BoundaryConstant.from_angle(beta).h


@dataclass(frozen=True, eq=False)
class GeneratedInstance:
    seed: int
    matrix: JacobiMatrix
    two_spectra: TwoSpectra
    datum_h1: SpectralDatum
    datum_h2: SpectralDatum

    def metadata(self):
        return {"seed": self.seed, "rng": RNG_ALGORITHM, "n": self.matrix.n}


def _check_range(bounds, name, positive=False):
    lo, hi = (float(v) for v in bounds)
    if not (math.isfinite(lo) and math.isfinite(hi)) or lo > hi:
        raise StructuralError(f"{name} must be a finite interval lo <= hi")
    if positive and lo <= 0:
        raise StructuralError(f"{name} must be strictly positive")
    return lo, hi


def generate_instance(
    seed: int,
    n: int,
    diag_range=(-2.0, 2.0),
    offdiag_range=(0.5, 2.0),
    h1: float = 0.7,
    h2: float = -0.4,
    tol: float = 0.0,
) -> GeneratedInstance:
    """Random Jacobi matrix with the spectral data for two boundary constants.

    The diagonal is drawn first, then the off-diagonal, both uniformly, from
    ``numpy.random.default_rng(seed)``.  Eigenvalues default to full double
    precision (``tol=0``) since the inverse problems amplify their errors.
    Raises :class:`DegenerateSpectrumError` when the merged spectra have a gap
    below the degeneracy threshold; choosing another seed is up to the caller.
    """
    if n < 1:
        raise StructuralError("n must be at least 1")
    if h1 == h2:
        raise StructuralError("h1 and h2 must differ")
    dlo, dhi = _check_range(diag_range, "diag_range")
    olo, ohi = _check_range(offdiag_range, "offdiag_range", positive=True)
    rng = np.random.default_rng(seed)
    a = rng.uniform(dlo, dhi, n)
    b = rng.uniform(olo, ohi, n - 1)
    matrix = JacobiMatrix(a, b)
    d1 = spectral_datum(matrix, h1, tol)
    d2 = spectral_datum(matrix, h2, tol)
    check_separation(np.concatenate([d1.eigenvalues, d2.eigenvalues]), "merged spectra")
    ts = TwoSpectra(float(h1), float(h2), d1.eigenvalues, d2.eigenvalues)
    report = validate_interlacing(ts.lam, ts.nu, ts.orientation)
    if not report:
        raise InconsistentDataError("interlacing", f"generated spectra do not interlace: {report.reason}")
    delta = compute_delta(ts.lam, ts.nu)
    if abs(delta - (h1 - h2)) > 1e-10 * n:
        raise InconsistentDataError("delta", f"sum(nu - lambda) = {delta!r} != h1 - h2")
    return GeneratedInstance(int(seed), matrix, ts, d1, d2)
