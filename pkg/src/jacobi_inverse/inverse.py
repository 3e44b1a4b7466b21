r"""Recovery of missing spectral data and of the Jacobi matrix itself.

All recovery modes share one engine.  Let ``K`` be the indices with known
weights ``mu_k(h1)`` and ``L`` the indices with unknown ``nu_l`` (``|K| = |L|``).
Splitting ``F = m_{h1}/m_{h2} = prod (z - nu_n)/(z - lam_n)`` as ``F = G H`` with
the known factor

    H(z) = prod_{n not in L} (z - nu_n) / prod_{n not in K} (z - lam_n)

leaves ``G`` with poles ``lam_K`` and zeros ``nu_L``.  Its residues follow from
``Res(F, lam_k) = -Delta mu_k`` with ``Delta = h1 - h2``, so

    g(z) = G(z) / Delta = 1/Delta + sum_{k in K} A_k / (lam_k - z),   A_k = mu_k / H(lam_k),

and the hidden eigenvalues are the zeros of ``g``.  When ``Delta`` is unknown,
one known zero of ``g`` fixes its constant instead.  The completed pair of
spectra is then turned into a matrix by :func:`reconstruct_from_two_spectra`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ._util import log_sign_product
from .core import (
    DegenerateSpectrumError,
    IllConditionedMeasureError,
    InconsistentDataError,
    JacobiMatrix,
    NormalizationError,
    RecoveryProblem,
    StructuralError,
    TwoSpectra,
    compute_delta,
    compute_tau,
    spectral_scale,
    validate_interlacing,
)
from .herglotz import (
    PartialFractionForm,
    ProductForm,
    constant_from_zero,
    pairing_diagnostics,
    product_residues,
    zeros_of_rational,
)
from .tridiag import apply_boundary, eigenvalues

__all__ = [
    "MODES",
    "RESIDUAL_TOL",
    "INCONSISTENCY_TOL",
    "RecoveryResult",
    "C2SReport",
    "weights_from_two_spectra",
    "stieltjes",
    "reconstruct_from_two_spectra",
    "recovery_coefficients",
    "recover",
    "recover_ip1",
    "recover_ip2",
    "recover_ip3",
    "recover_nonmatching",
    "check_two_spectra",
]

MODES = ("ip1", "ip2", "ip3", "nip1", "nip2", "nip3", "twospectra")
RESIDUAL_TOL = 1e-8
INCONSISTENCY_TOL = 1e-6
ROOT_TOL = 1e-12
_EPS = np.finfo(float).eps


def _delta_tolerance(lam, nu):
    return 1e-10 * len(lam) * max(1.0, spectral_scale(lam, nu))


# ---------------------------------------------------------------------------
# two spectra -> measure -> matrix


def weights_from_two_spectra(lam, nu, h1: float, h2: float) -> np.ndarray:
    """Spectral weights of ``J_{h1}`` from the spectra of ``J_{h1}`` and ``J_{h2}``.

    ``mu_k = -Res(F, lam_k) / Delta``, with ``Delta = sum(nu - lam)``, which
    must agree with ``h1 - h2``.
    """
    lam = np.asarray(lam, dtype=float)
    nu = np.asarray(nu, dtype=float)
    if h1 == h2:
        raise StructuralError("h1 and h2 must differ")
    orientation = 1 if h1 > h2 else -1
    report = validate_interlacing(lam, nu, orientation)
    if not report:
        raise InconsistentDataError("interlacing", report.reason)
    delta = compute_delta(lam, nu)
    if abs(delta - (h1 - h2)) > _delta_tolerance(lam, nu):
        raise InconsistentDataError("delta", f"sum(nu - lambda) = {delta!r} but h1 - h2 = {h1 - h2!r}")
    mu = -product_residues(ProductForm(1.0, nu, lam)) / delta
    if np.any(mu <= 0) or not np.all(np.isfinite(mu)):
        raise InconsistentDataError("tau_positive", "two-spectra weights are not all positive")
    return mu


def stieltjes(nodes, weights) -> JacobiMatrix:
    """Jacobi matrix whose spectral measure is ``sum_k weights_k delta_{nodes_k}``.

    Lanczos on ``diag(nodes)`` started from ``sqrt(weights)``, with two passes
    of full reorthogonalization per step.  An off-diagonal coefficient at the
    rounding level raises :class:`IllConditionedMeasureError` naming its
    1-based index.
    """
    x = np.asarray(nodes, dtype=float)
    w = np.asarray(weights, dtype=float)
    n = x.size
    if w.shape != x.shape or n == 0:
        raise StructuralError("nodes and weights must be non-empty and of equal length")
    if np.any(w <= 0):
        raise StructuralError("weights must be positive")
    q = np.sqrt(w)
    q /= np.linalg.norm(q)
    basis = np.zeros((n, n))
    a = np.zeros(n)
    b = np.zeros(max(n - 1, 0))
    floor = n * _EPS * max(1.0, spectral_scale(x))
    for j in range(n):
        basis[:, j] = q
        v = x * q
        a[j] = q @ v
        if j == n - 1:
            break
        v -= a[j] * q
        if j > 0:
            v -= b[j - 1] * basis[:, j - 1]
        for _ in range(2):
            v -= basis[:, : j + 1] @ (basis[:, : j + 1].T @ v)
        b[j] = np.linalg.norm(v)
        if not b[j] > floor:
            raise IllConditionedMeasureError(j + 1, f"recurrence coefficient b_{j + 1} = {b[j]:.3e} lost positivity")
        q = v / b[j]
    return JacobiMatrix(a, b)


def _reconstruct(lam, nu, h1):
    delta = compute_delta(lam, nu)
    if delta == 0:
        raise DegenerateSpectrumError("sum(nu - lambda) is zero")
    h2 = h1 - delta
    mu = weights_from_two_spectra(lam, nu, h1, h2)
    j_h1 = stieltjes(lam, mu)
    diag = j_h1.diag.copy()
    diag[0] += h1
    return JacobiMatrix(diag, j_h1.offdiag), h2, mu


def reconstruct_from_two_spectra(lam, nu, h1: float):
    """Rebuild ``J`` from the spectra of ``J_{h1}`` and ``J_{h2}``.

    Returns ``(matrix, h2)`` with ``h2 = h1 - sum(nu - lambda)``.
    """
    lam = np.asarray(lam, dtype=float)
    nu = np.asarray(nu, dtype=float)
    if lam.shape != nu.shape or lam.ndim != 1 or lam.size == 0:
        raise StructuralError("lambda and nu must be non-empty and of equal length")
    matrix, h2, _ = _reconstruct(lam, nu, float(h1))
    return matrix, h2


# ---------------------------------------------------------------------------
# the recovery engine


def recovery_coefficients(lam, known_nu, weight_indices, weights, hidden) -> np.ndarray:
    """Coefficients ``A_k = mu_k / H(lam_k)`` for ``k`` in ``weight_indices``.

    Indices are 1-based; ``known_nu`` maps every index outside ``hidden`` to
    its eigenvalue.  The result does not involve ``Delta``.
    """
    lam = np.asarray(lam, dtype=float)
    n = lam.size
    K = np.asarray(sorted(weight_indices), dtype=int) - 1
    L = set(int(i) - 1 for i in hidden)
    nu_idx = np.array([i for i in range(n) if i not in L], dtype=int)
    nu_vals = np.array([known_nu[i + 1] for i in nu_idx], dtype=float)
    lam_out = np.setdiff1d(np.arange(n), K)
    lam_k = lam[K]
    ln, sn = log_sign_product(lam_k[:, None] - nu_vals[None, :])
    ld, sd = log_sign_product(lam_k[:, None] - lam[lam_out][None, :])
    H = sn * sd * np.exp(ln - ld)
    if np.any(H == 0) or not np.all(np.isfinite(H)):
        raise DegenerateSpectrumError("a known eigenvalue of J_{h2} coincides with lambda_k")
    return np.asarray(weights, dtype=float) / H


def _partial_interlacing(lam, known_nu, orientation):
    """Check each known ``nu_n`` against its interlacing slot."""
    n = lam.size
    for idx, value in known_nu.items():
        i = idx - 1
        if orientation == 1:
            ok = lam[i] < value and (i == n - 1 or value < lam[i + 1])
        else:
            ok = value < lam[i] and (i == 0 or lam[i - 1] < value)
        if not ok:
            raise InconsistentDataError(
                "interlacing", f"known nu_{idx} = {value!r} is outside its interlacing slot"
            )


def _infer_orientation(lam, known_nu):
    signs = {1 if value > lam[idx - 1] else -1 for idx, value in known_nu.items()}
    if len(signs) > 1:
        raise InconsistentDataError("orientation", "known eigenvalues of J_{h2} lie on both sides of lambda")
    return signs.pop()


@dataclass(frozen=True, eq=False)
class RecoveryResult:
    """Completed data and reconstructed matrix of one recovery run.

    ``diagnostics`` holds named residuals (keys ending in ``_residual`` are
    gated by :meth:`ok`) and informational quantities.
    """

    mode: str
    lam: np.ndarray
    nu_full: np.ndarray
    h1: float
    h2: float
    weights_h1: np.ndarray
    matrix: JacobiMatrix
    diagnostics: dict = field(default_factory=dict)
    g: PartialFractionForm | None = None

    def ok(self, tol=RESIDUAL_TOL):
        return all(v <= tol for k, v in self.diagnostics.items() if k.endswith("_residual"))

    def failing(self, tol=RESIDUAL_TOL):
        return sorted(k for k, v in self.diagnostics.items() if k.endswith("_residual") and not v <= tol)

    def to_dict(self):
        return {
            "mode": self.mode,
            "lambda": self.lam.tolist(),
            "nu": self.nu_full.tolist(),
            "h1": self.h1,
            "h2": self.h2,
            "weights": self.weights_h1.tolist(),
            "matrix": self.matrix.to_dict(),
            "diagnostics": dict(self.diagnostics),
        }


def _forward_residuals(matrix, lam, nu, h1, h2):
    scale = max(1.0, spectral_scale(lam, nu))
    lam_back = eigenvalues(apply_boundary(matrix, h1), tol=0.0)
    nu_back = eigenvalues(apply_boundary(matrix, h2), tol=0.0)
    return (
        float(np.max(np.abs(lam_back - lam))) / scale,
        float(np.max(np.abs(nu_back - nu))) / scale,
    )


def _solve(mode, problem, K, L, weights, known_zero_index=None, verify=True, tol=ROOT_TOL):
    """Run the engine on 1-based index sets ``K`` (weights) and ``L`` (hidden)."""
    lam = problem.lam
    n = lam.size
    known_nu = dict(problem.known_nu)
    if problem.extra is not None and problem.extra.kind == "nu":
        known_nu_all = {**known_nu, problem.extra.index: problem.extra.value}
    else:
        known_nu_all = known_nu
    h1, h2 = problem.h1, problem.h2
    delta = h1 - h2 if h1 is not None and h2 is not None else None

    if delta is not None:
        orientation = 1 if delta > 0 else -1
    elif known_nu_all:
        orientation = _infer_orientation(lam, known_nu_all)
    else:
        raise StructuralError("the unknown boundary constant needs an extra datum")
    _partial_interlacing(lam, known_nu_all, orientation)

    K = sorted(K)
    L = sorted(L)
    A = recovery_coefficients(lam, known_nu, K, weights, L)
    if K == L and A.size and not np.all(A > 0):
        raise InconsistentDataError("sign", "coefficients of g are not all positive")
    poles = lam[np.asarray(K, dtype=int) - 1]

    diagnostics = {}
    if delta is None:
        target = known_nu_all[known_zero_index]
        c = constant_from_zero(poles, A, target)
        if c == 0:
            raise InconsistentDataError("orientation", "recovered constant is zero")
        delta = 1.0 / c
        if (1 if delta > 0 else -1) != orientation:
            raise InconsistentDataError(
                "orientation", f"recovered Delta = {delta!r} contradicts the side of the known eigenvalues"
            )
        if h1 is None:
            h1 = h2 + delta
        else:
            h2 = h1 - delta
    else:
        c = 1.0 / delta

    g = PartialFractionForm(c, poles, A) if A.size else None
    zeros = np.zeros(0)
    if g is not None:
        try:
            zeros = zeros_of_rational(g, tol)
        except NormalizationError as exc:
            raise InconsistentDataError("delta", str(exc)) from exc
    if zeros.size != len(L):
        raise InconsistentDataError("root-count", f"g has {zeros.size} real zeros, expected {len(L)}")

    nu_full = np.empty(n)
    for idx, value in known_nu.items():
        nu_full[idx - 1] = value
    for idx, value in zip(L, zeros):
        nu_full[idx - 1] = value
    if known_zero_index is not None:
        recovered = nu_full[known_zero_index - 1]
        target = known_nu_all[known_zero_index]
        diagnostics["known_zero_residual"] = float(abs(recovered - target)) / max(1.0, abs(target))
        nu_full[known_zero_index - 1] = target

    report = validate_interlacing(lam, nu_full, orientation)
    if not report:
        raise InconsistentDataError("interlacing", f"completed spectra do not interlace: {report.reason}")
    delta_data = compute_delta(lam, nu_full)
    diagnostics["delta_residual"] = abs(delta_data - delta)
    if diagnostics["delta_residual"] > INCONSISTENCY_TOL * max(1.0, abs(delta)):
        raise InconsistentDataError(
            "delta", f"sum(nu - lambda) = {delta_data!r} disagrees with Delta = {delta!r}"
        )

    matrix, _, mu = _reconstruct(lam, nu_full, h1)
    given = np.asarray(weights, dtype=float)
    if given.size:
        diagnostics["weight_residual"] = float(np.max(np.abs(mu[np.asarray(K) - 1] - given)))
    if mode.startswith("nip") and L:
        pd = pairing_diagnostics(poles, nu_full[np.asarray(L) - 1])
        diagnostics["pairing_min_gap"] = pd.min_gap
    if verify:
        lam_res, nu_res = _forward_residuals(matrix, lam, nu_full, h1, h2)
        diagnostics["forward_lambda_residual"] = lam_res
        diagnostics["forward_nu_residual"] = nu_res
    return RecoveryResult(mode, lam, nu_full, float(h1), float(h2), mu, matrix, diagnostics, g)


def _require(cond, message):
    if not cond:
        raise StructuralError(message)


def recover(problem: RecoveryProblem, mode: str, verify: bool = True, tol: float = ROOT_TOL) -> RecoveryResult:
    """Dispatch ``problem`` to the recovery pipeline named by ``mode``.

    Modes
    -----
    ``twospectra``
        Nothing hidden; ``h1`` known.
    ``ip1`` / ``nip1``
        ``h1`` and ``h2`` known; weights on the hidden set (``ip1``) or on any
        index set of the same size (``nip1``).
    ``ip2`` / ``nip2``
        One boundary constant unknown; the extra datum reveals ``nu_m`` for a
        hidden ``m``.
    ``ip3`` / ``nip3``
        One boundary constant unknown; the extra datum is a weight ``mu_m``
        for an index whose ``nu_m`` is known (and, for ``nip3``, outside the
        weight set).
    """
    if mode not in MODES:
        raise StructuralError(f"unknown mode {mode!r}; expected one of {MODES}")
    hidden = set(problem.hidden)
    weight_idx = set(problem.known_weights)
    extra = problem.extra
    both_known = problem.h1 is not None and problem.h2 is not None
    weights = [problem.known_weights[k] for k in sorted(weight_idx)]

    if mode == "twospectra":
        _require(not hidden, "twospectra mode needs every nu")
        _require(problem.h1 is not None, "twospectra mode needs h1")
        nu = np.array([problem.known_nu[i] for i in range(1, problem.n + 1)])
        h2_data = problem.h1 - compute_delta(problem.lam, nu)
        if problem.h2 is not None and abs(h2_data - problem.h2) > _delta_tolerance(problem.lam, nu):
            raise InconsistentDataError("delta", f"sum(nu - lambda) implies h2 = {h2_data!r}, not {problem.h2!r}")
        matrix, h2, mu = _reconstruct(problem.lam, nu, problem.h1)
        diagnostics = {}
        if verify:
            lam_res, nu_res = _forward_residuals(matrix, problem.lam, nu, problem.h1, h2)
            diagnostics = {"forward_lambda_residual": lam_res, "forward_nu_residual": nu_res}
        return RecoveryResult(mode, problem.lam, nu, problem.h1, h2, mu, matrix, diagnostics)

    matching = mode.startswith("ip")
    if matching:
        _require(weight_idx == hidden, f"{mode} needs weights exactly on the hidden indices")
    else:
        _require(len(weight_idx) == len(hidden), f"{mode} needs as many weights as hidden indices")

    if mode.endswith("1"):
        _require(both_known, f"{mode} needs both h1 and h2")
        _require(extra is None, f"{mode} takes no extra datum")
        return _solve(mode, problem, weight_idx, hidden, weights, verify=verify, tol=tol)

    _require(not both_known, f"{mode} recovers a boundary constant; give only one of h1, h2")
    _require(extra is not None, f"{mode} needs an extra datum")
    m = extra.index
    if mode.endswith("2"):
        _require(extra.kind == "nu", f"{mode} needs an extra eigenvalue nu_m")
        _require(m in hidden, f"{mode} needs the extra eigenvalue at a hidden index")
        return _solve(mode, problem, weight_idx, hidden, weights, known_zero_index=m, verify=verify, tol=tol)

    _require(extra.kind == "weight", f"{mode} needs an extra weight mu_m")
    _require(m not in hidden, f"{mode} needs the extra weight at an index with known nu")
    _require(m not in weight_idx, f"{mode} needs the extra weight outside the weight set")
    K = weight_idx | {m}
    weights_k = [problem.known_weights.get(k, extra.value) for k in sorted(K)]
    return _solve(mode, problem, K, hidden | {m}, weights_k, known_zero_index=m, verify=verify, tol=tol)


def recover_ip1(problem: RecoveryProblem, verify: bool = True) -> RecoveryResult:
    """Hidden ``nu_A`` from weights on ``A`` with both boundary constants known."""
    return recover(problem, "ip1", verify)


def recover_ip2(problem: RecoveryProblem, verify: bool = True) -> RecoveryResult:
    """As :func:`recover_ip1`, with one boundary constant replaced by a revealed ``nu_m``, ``m`` in ``A``."""
    return recover(problem, "ip2", verify)


def recover_ip3(problem: RecoveryProblem, verify: bool = True) -> RecoveryResult:
    """As :func:`recover_ip1`, with one boundary constant replaced by an extra weight ``mu_m``, ``m`` not in ``A``."""
    return recover(problem, "ip3", verify)


def recover_nonmatching(problem: RecoveryProblem, verify: bool = True) -> RecoveryResult:
    """General index pairing; picks ``nip1``, ``nip2`` or ``nip3`` from the data present."""
    if problem.extra is None:
        mode = "nip1"
    else:
        mode = "nip2" if problem.extra.kind == "nu" else "nip3"
    return recover(problem, mode, verify)


# ---------------------------------------------------------------------------
# characterization of two spectra


@dataclass(frozen=True)
class C2SReport:
    """Pass/fail per checkable condition, with a reason for each failure."""

    conditions: dict
    reasons: dict

    @property
    def ok(self):
        return all(self.conditions.values())

    def __bool__(self):
        return self.ok

    def lines(self):
        for name, passed in self.conditions.items():
            suffix = f"  ({self.reasons[name]})" if name in self.reasons else ""
            yield f"{'PASS' if passed else 'FAIL'} {name}{suffix}"


def check_two_spectra(ts: TwoSpectra) -> C2SReport:
    """Check whether ``ts`` can be the spectra of ``J_{h1}`` and ``J_{h2}`` for one ``J``.

    Conditions: disjointness, interlacing with orientation ``sign(h1 - h2)``,
    the lower-bound inequality (the spectrum with the larger boundary constant
    starts lower), finiteness of ``Delta``, ``Delta = h1 - h2``, and
    positivity of every ``tau_k^{-1}``.
    """
    lam, nu = ts.lam, ts.nu
    conditions, reasons = {}, {}

    def record(name, passed, reason=""):
        conditions[name] = bool(passed)
        if not passed and reason:
            reasons[name] = reason

    shared = np.intersect1d(lam, nu)
    record("disjoint", shared.size == 0, f"shared points {shared.tolist()}")
    report = validate_interlacing(lam, nu, ts.orientation)
    record("interlacing", report.ok, report.reason)
    if ts.orientation == 1:
        record("lower_bound", nu.min() > lam.min(), "min nu must exceed min lambda when h1 > h2")
    else:
        record("lower_bound", lam.min() > nu.min(), "min lambda must exceed min nu when h1 < h2")
    delta = compute_delta(lam, nu)
    record("delta_finite", math.isfinite(delta) and delta != 0, f"Delta = {delta!r}")
    tol = _delta_tolerance(lam, nu)
    record(
        "delta_matches_boundary",
        abs(delta - (ts.h1 - ts.h2)) <= tol,
        f"Delta = {delta!r} vs h1 - h2 = {ts.h1 - ts.h2!r}",
    )
    try:
        tau_inv = compute_tau(lam, nu)
        positive = bool(np.all(tau_inv > 0))
        reason = f"{int(np.sum(tau_inv <= 0))} non-positive values"
    except DegenerateSpectrumError as exc:
        positive, reason = False, str(exc)
    record("tau_positive", positive, reason)
    return C2SReport(conditions, reasons)
