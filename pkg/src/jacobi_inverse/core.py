"""Domain types and structural validators.

Indices exposed to users (hidden sets, weight keys, report positions) are
1-based, matching the usual ``lambda_1 < ... < lambda_N`` enumeration.
Arrays inside the types are 0-based numpy arrays and are read-only.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping, Optional

import numpy as np

from ._util import accurate_sum, log_sign_product

__all__ = [
    "DEGENERACY_RTOL",
    "SpectralError",
    "StructuralError",
    "DegenerateSpectrumError",
    "PoleEvaluationError",
    "NotHerglotzError",
    "NormalizationError",
    "InconsistentDataError",
    "IllConditionedMeasureError",
    "JacobiMatrix",
    "BoundaryConstant",
    "SpectralDatum",
    "TwoSpectra",
    "ExtraDatum",
    "RecoveryProblem",
    "InterlacingReport",
    "validate_interlacing",
    "compute_delta",
    "compute_tau",
    "check_separation",
    "spectral_scale",
]

#: Relative gap (w.r.t. spectral radius) below which spectra count as degenerate.
DEGENERACY_RTOL = 1e-13


class SpectralError(ValueError):
    """Base class for all errors raised by this package."""


class StructuralError(SpectralError):
    """Malformed input: wrong lengths, unsorted lists, bad index sets."""


class DegenerateSpectrumError(SpectralError):
    """Eigenvalues too close to be resolved in double precision."""


class PoleEvaluationError(SpectralError):
    """A rational function was evaluated exactly at one of its poles."""


class NotHerglotzError(SpectralError):
    """Partial-fraction coefficients do not share a single sign."""


class NormalizationError(SpectralError):
    """A partial fraction has a zero constant term where one is required."""


class InconsistentDataError(SpectralError):
    """Spectral data that no Jacobi matrix realizes.

    ``check`` names the failed consistency test (``"interlacing"``,
    ``"delta"``, ``"orientation"``, ...).
    """

    def __init__(self, check, message):
        super().__init__(f"{check}: {message}")
        self.check = check


class IllConditionedMeasureError(SpectralError):
    """A recurrence coefficient lost positivity during reconstruction."""

    def __init__(self, index, message):
        super().__init__(message)
        self.index = index


def _frozen_array(values, name, ndim=1):
    arr = np.array(values, dtype=float)
    if arr.ndim != ndim:
        raise StructuralError(f"{name} must be {ndim}-dimensional, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise StructuralError(f"{name} contains non-finite entries")
    arr.setflags(write=False)
    return arr


def _require_strictly_increasing(arr, name):
    if arr.size > 1 and not np.all(np.diff(arr) > 0):
        bad = int(np.argmin(np.diff(arr) > 0)) + 1
        raise StructuralError(f"{name} must be strictly increasing (fails at position {bad + 1})")


def spectral_scale(*arrays):
    """Largest absolute value over ``arrays`` (1.0 if everything is zero)."""
    scale = max((float(np.max(np.abs(a))) for a in arrays if np.size(a)), default=0.0)
    return scale if scale > 0 else 1.0


def check_separation(values, what="spectrum", rtol=DEGENERACY_RTOL):
    """Raise :class:`DegenerateSpectrumError` if two sorted values are too close.

    The threshold is ``rtol`` times the spectral radius of ``values``.
    """
    values = np.sort(np.asarray(values, dtype=float))
    if values.size < 2:
        return
    gaps = np.diff(values)
    limit = rtol * spectral_scale(values)
    k = int(np.argmin(gaps))
    if gaps[k] < limit:
        raise DegenerateSpectrumError(
            f"{what}: gap {gaps[k]:.3e} between {values[k]!r} and {values[k + 1]!r} "
            f"is below {limit:.3e}"
        )


@dataclass(frozen=True, eq=False)
class JacobiMatrix:
    """Finite Jacobi matrix with diagonal ``diag`` and positive ``offdiag``."""

    diag: np.ndarray
    offdiag: np.ndarray

    def __post_init__(self):
        a = _frozen_array(self.diag, "diag")
        b = _frozen_array(self.offdiag, "offdiag")
        if a.size < 1:
            raise StructuralError("a Jacobi matrix needs at least one diagonal entry")
        if b.size != a.size - 1:
            raise StructuralError(f"expected {a.size - 1} off-diagonal entries, got {b.size}")
        if np.any(b <= 0):
            raise StructuralError("off-diagonal entries must be strictly positive")
        object.__setattr__(self, "diag", a)
        object.__setattr__(self, "offdiag", b)

    @property
    def n(self):
        return self.diag.size

    def to_dense(self):
        return np.diag(self.diag) + np.diag(self.offdiag, 1) + np.diag(self.offdiag, -1)

    def to_dict(self):
        return {"a": self.diag.tolist(), "b": self.offdiag.tolist()}

    @classmethod
    def from_dict(cls, record):
        try:
            return cls(record["a"], record["b"])
        except (KeyError, TypeError) as exc:
            raise StructuralError(f"JacobiMatrix record needs 'a' and 'b': {exc}") from exc


@dataclass(frozen=True)
class BoundaryConstant:
    """Boundary constant ``h``, optionally with its angle ``beta`` (``h = cot beta``)."""

    h: float
    beta: Optional[float] = None

    def __post_init__(self):
        if not math.isfinite(self.h):
            raise StructuralError("boundary constant must be finite")
        if self.beta is not None:
            if not 0.0 < self.beta < math.pi:
                raise StructuralError("boundary angle must lie in (0, pi)")
            cot = math.cos(self.beta) / math.sin(self.beta)
            if abs(self.h - cot) > 1e-12 * max(1.0, abs(self.h)):
                raise StructuralError(f"h={self.h!r} does not equal cot(beta)={cot!r}")

    @classmethod
    def from_angle(cls, beta):
        if not 0.0 < beta < math.pi:
            raise StructuralError("boundary angle must lie in (0, pi)")
        return cls(math.cos(beta) / math.sin(beta), beta)


@dataclass(frozen=True, eq=False)
class SpectralDatum:
    """Eigenvalues and spectral weights of ``J_h`` for one boundary constant ``h``."""

    h: float
    eigenvalues: np.ndarray
    weights: np.ndarray
    mass_tol: float = field(default=1e-12, repr=False)

    def __post_init__(self):
        lam = _frozen_array(self.eigenvalues, "eigenvalues")
        mu = _frozen_array(self.weights, "weights")
        if lam.size != mu.size or lam.size == 0:
            raise StructuralError("eigenvalues and weights must be non-empty and of equal length")
        _require_strictly_increasing(lam, "eigenvalues")
        if np.any(mu <= 0):
            raise StructuralError("spectral weights must be strictly positive")
        mass = accurate_sum(mu)
        if abs(mass - 1.0) > self.mass_tol:
            raise StructuralError(f"spectral weights sum to {mass!r}, not 1")
        object.__setattr__(self, "eigenvalues", lam)
        object.__setattr__(self, "weights", mu)

    @property
    def n(self):
        return self.eigenvalues.size

    def to_dict(self):
        return {"h": self.h, "eigenvalues": self.eigenvalues.tolist(), "weights": self.weights.tolist()}

    @classmethod
    def from_dict(cls, record, mass_tol=1e-12):
        try:
            return cls(float(record["h"]), record["eigenvalues"], record["weights"], mass_tol)
        except (KeyError, TypeError) as exc:
            raise StructuralError(f"SpectralDatum record is malformed: {exc}") from exc


@dataclass(frozen=True, eq=False)
class TwoSpectra:
    """Spectra ``lam`` of ``J_{h1}`` and ``nu`` of ``J_{h2}``.

    Construction checks only structure (sorted, equal length, ``h1 != h2``);
    use :func:`jacobi_inverse.inverse.check_two_spectra` for the full
    characterization.
    """

    h1: float
    h2: float
    lam: np.ndarray
    nu: np.ndarray

    def __post_init__(self):
        lam = _frozen_array(self.lam, "lambda")
        nu = _frozen_array(self.nu, "nu")
        if lam.size != nu.size or lam.size == 0:
            raise StructuralError("lambda and nu must be non-empty and of equal length")
        if not (math.isfinite(self.h1) and math.isfinite(self.h2)):
            raise StructuralError("boundary constants must be finite")
        if self.h1 == self.h2:
            raise StructuralError("h1 and h2 must differ")
        _require_strictly_increasing(lam, "lambda")
        _require_strictly_increasing(nu, "nu")
        object.__setattr__(self, "lam", lam)
        object.__setattr__(self, "nu", nu)

    @property
    def n(self):
        return self.lam.size

    @property
    def orientation(self):
        return 1 if self.h1 > self.h2 else -1

    def to_dict(self):
        return {"h1": self.h1, "h2": self.h2, "lambda": self.lam.tolist(), "nu": self.nu.tolist()}

    @classmethod
    def from_dict(cls, record):
        try:
            return cls(float(record["h1"]), float(record["h2"]), record["lambda"], record["nu"])
        except (KeyError, TypeError) as exc:
            raise StructuralError(f"TwoSpectra record is malformed: {exc}") from exc


@dataclass(frozen=True)
class ExtraDatum:
    """One additional datum: an eigenvalue ``nu_m`` or a weight ``mu_m`` (1-based ``index``)."""

    kind: str
    index: int
    value: float

    def __post_init__(self):
        if self.kind not in ("nu", "weight"):
            raise StructuralError(f"extra datum kind must be 'nu' or 'weight', got {self.kind!r}")
        if not math.isfinite(self.value):
            raise StructuralError("extra datum value must be finite")


def _index_map(mapping, n, name):
    out = {}
    for key, value in dict(mapping).items():
        idx = int(key)
        if not 1 <= idx <= n:
            raise StructuralError(f"{name} index {idx} outside 1..{n}")
        value = float(value)
        if not math.isfinite(value):
            raise StructuralError(f"{name}[{idx}] is not finite")
        out[idx] = value
    return dict(sorted(out.items()))


@dataclass(frozen=True, eq=False)
class RecoveryProblem:
    """Mixed spectral data for the recovery pipelines.

    Parameters
    ----------
    lam : sequence of float
        Full spectrum of ``J_{h1}``, strictly increasing.
    hidden : iterable of int
        1-based indices ``n`` for which ``nu_n`` is unknown.
    known_nu : mapping int -> float
        ``nu_j`` for every ``j`` not in ``hidden``.
    known_weights : mapping int -> float
        Spectral weights ``mu_j(h1)`` on the designated index set.
    h1, h2 : float or None
        Boundary constants; at least one must be known.
    extra : ExtraDatum or None
        Replaces the unknown boundary constant.
    """

    lam: np.ndarray
    hidden: tuple
    known_nu: Mapping[int, float]
    known_weights: Mapping[int, float]
    h1: Optional[float] = None
    h2: Optional[float] = None
    extra: Optional[ExtraDatum] = None

    def __post_init__(self):
        lam = _frozen_array(self.lam, "lambda")
        n = lam.size
        if n == 0:
            raise StructuralError("lambda must be non-empty")
        _require_strictly_increasing(lam, "lambda")
        hidden = tuple(sorted({int(i) for i in self.hidden}))
        if any(not 1 <= i <= n for i in hidden):
            raise StructuralError(f"hidden indices must lie in 1..{n}")
        known_nu = _index_map(self.known_nu, n, "known_nu")
        expected = set(range(1, n + 1)) - set(hidden)
        if set(known_nu) != expected:
            missing = sorted(expected - set(known_nu))
            extra = sorted(set(known_nu) - expected)
            raise StructuralError(
                f"known_nu must cover exactly the non-hidden indices (missing {missing}, unexpected {extra})"
            )
        known_weights = _index_map(self.known_weights, n, "known_weights")
        if any(w <= 0 for w in known_weights.values()):
            raise StructuralError("known weights must be strictly positive")
        for name in ("h1", "h2"):
            value = getattr(self, name)
            if value is not None:
                value = float(value)
                if not math.isfinite(value):
                    raise StructuralError(f"{name} must be finite")
                object.__setattr__(self, name, value)
        if self.h1 is None and self.h2 is None:
            raise StructuralError("at least one of h1, h2 must be given")
        if self.h1 is not None and self.h1 == self.h2:
            raise StructuralError("h1 and h2 must differ")
        if self.extra is not None and not 1 <= self.extra.index <= n:
            raise StructuralError(f"extra datum index must lie in 1..{n}")
        object.__setattr__(self, "lam", lam)
        object.__setattr__(self, "hidden", hidden)
        object.__setattr__(self, "known_nu", known_nu)
        object.__setattr__(self, "known_weights", known_weights)

    @property
    def n(self):
        return self.lam.size

    def to_dict(self):
        record = {
            "lambda": self.lam.tolist(),
            "hidden": list(self.hidden),
            "known_nu": {str(k): v for k, v in self.known_nu.items()},
            "known_weights": {str(k): v for k, v in self.known_weights.items()},
            "h1": self.h1,
            "h2": self.h2,
        }
        if self.extra is not None:
            record["extra"] = {"kind": self.extra.kind, "index": self.extra.index, "value": self.extra.value}
        return record

    @classmethod
    def from_dict(cls, record):
        if not isinstance(record, Mapping):
            raise StructuralError("RecoveryProblem record must be a JSON object")
        try:
            extra = record.get("extra")
            if extra is not None:
                extra = ExtraDatum(str(extra["kind"]), int(extra["index"]), float(extra["value"]))
            return cls(
                lam=record["lambda"],
                hidden=record.get("hidden", ()),
                known_nu=record.get("known_nu", {}),
                known_weights=record.get("known_weights", {}),
                h1=record.get("h1"),
                h2=record.get("h2"),
                extra=extra,
            )
        except (KeyError, TypeError, ValueError) as exc:
            if isinstance(exc, StructuralError):
                raise
            raise StructuralError(f"RecoveryProblem record is malformed: {exc}") from exc


@dataclass(frozen=True)
class InterlacingReport:
    ok: bool
    first_violation: Optional[int] = None
    reason: str = ""

    def __bool__(self):
        return self.ok


def validate_interlacing(lam, nu, orientation=1):
    """Check strict interlacing of two sorted spectra.

    ``orientation=+1`` requires ``lam_n < nu_n < lam_{n+1}``; ``-1`` requires
    ``nu_n < lam_n < nu_{n+1}``.  The report carries the first violating
    1-based index.
    """
    lam = np.asarray(lam, dtype=float)
    nu = np.asarray(nu, dtype=float)
    if lam.shape != nu.shape or lam.ndim != 1:
        raise StructuralError(f"length mismatch: {lam.shape} vs {nu.shape}")
    if orientation not in (1, -1):
        raise StructuralError("orientation must be +1 or -1")
    lower, upper = (lam, nu) if orientation == 1 else (nu, lam)
    for i in range(lower.size):
        if not lower[i] < upper[i]:
            return InterlacingReport(False, i + 1, f"expected {lower[i]!r} < {upper[i]!r} at index {i + 1}")
        if i + 1 < lower.size and not upper[i] < lower[i + 1]:
            return InterlacingReport(
                False, i + 1, f"expected {upper[i]!r} < {lower[i + 1]!r} between indices {i + 1} and {i + 2}"
            )
    return InterlacingReport(True)


def compute_delta(lam, nu):
    """Spectral shift sum ``sum(nu_n - lam_n)`` with compensated summation."""
    lam = np.asarray(lam, dtype=float)
    nu = np.asarray(nu, dtype=float)
    if lam.shape != nu.shape:
        raise StructuralError(f"length mismatch: {lam.shape} vs {nu.shape}")
    return math.fsum(nu.tolist() + (-lam).tolist())


def compute_tau(lam, nu):
    """Inverse norming values ``tau_k^{-1}`` determined by two spectra.

    ``tau_k^{-1} = (nu_k - lam_k)/Delta * prod_{n != k} (nu_n - lam_k)/(lam_n - lam_k)``,
    evaluated in log-magnitude and sign form.  For spectra of ``J_{h1}`` and
    ``J_{h2}`` these are the spectral weights of ``J_{h1}``.
    """
    lam = np.asarray(lam, dtype=float)
    nu = np.asarray(nu, dtype=float)
    delta = compute_delta(lam, nu)
    if lam.size > 1 and np.any(np.diff(np.sort(lam)) == 0):
        raise DegenerateSpectrumError("coincident eigenvalues in lambda")
    if delta == 0:
        raise DegenerateSpectrumError("spectral shift sum is zero")
    numer = nu[None, :] - lam[:, None]
    denom = lam[None, :] - lam[:, None]
    np.fill_diagonal(denom, delta)
    ln, sn = log_sign_product(numer)
    ld, sd = log_sign_product(denom)
    return sn * sd * np.exp(ln - ld)
