"""Small numerical helpers shared across modules."""

import math

import numpy as np

__all__ = ["log_sign_product", "signed_product", "fsum_complex", "accurate_sum"]


def log_sign_product(factors, axis=-1):
    """Return ``(log|prod|, sign)`` of ``factors`` along ``axis``.

    A zero factor gives ``(-inf, 0)``.
    """
    factors = np.asarray(factors, dtype=float)
    with np.errstate(divide="ignore"):
        logmag = np.sum(np.log(np.abs(factors)), axis=axis)
    sign = np.prod(np.sign(factors), axis=axis)
    return logmag, sign


def signed_product(numer, denom, axis=-1):
    """Evaluate ``prod(numer) / prod(denom)`` in log-magnitude and sign form."""
    ln, sn = log_sign_product(numer, axis=axis)
    ld, sd = log_sign_product(denom, axis=axis)
    return sn * sd * np.exp(ln - ld)


def accurate_sum(values):
    """Compensated sum of a real sequence."""
    return math.fsum(np.asarray(values, dtype=float).ravel().tolist())


def fsum_complex(values):
    values = np.asarray(values)
    if not np.iscomplexobj(values):
        return accurate_sum(values)
    return complex(accurate_sum(values.real), accurate_sum(values.imag))
