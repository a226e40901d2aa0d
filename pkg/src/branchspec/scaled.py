"""Log-scaled complex arithmetic.

Quantities like exp(pi*mu/h) overflow double precision once mu/h is a few
hundred, so sums of exponential terms are carried as (value, offset) pairs
meaning value * exp(offset / h) with a real offset in action units.
"""

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class ScaledComplex:
    """value * exp(offset / h); offset is real, in action units."""

    value: complex
    offset: float
    h: float

    def to_complex(self):
        """Collapse to a plain complex; may overflow for large offsets."""
        return self.value * np.exp(self.offset / self.h)

    def abs_log(self):
        """log |.| (natural), or -inf for an exact zero."""
        if self.value == 0:
            return -np.inf
        return np.log(abs(self.value)) + self.offset / self.h

    def __mul__(self, other):
        if isinstance(other, ScaledComplex):
            return ScaledComplex(self.value * other.value,
                                 self.offset + other.offset, self.h)
        return ScaledComplex(self.value * other, self.offset, self.h)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, ScaledComplex):
            return ScaledComplex(self.value / other.value,
                                 self.offset - other.offset, self.h)
        return ScaledComplex(self.value / other, self.offset, self.h)


def sum_exp(log_values, h):
    """Stable sum of exp(log_values) as a ScaledComplex.

    log_values: array of complex logs (natural log of each term).
    The common offset is h * max(Re log), i.e. the largest term modulus
    expressed in action units, so |value| <= number of terms.
    """
    logs = np.asarray(log_values, dtype=complex)
    re = logs.real
    m = float(np.max(re))
    val = complex(np.sum(np.exp(logs - m)))
    return ScaledComplex(val, m * h, h)


def sum_exp_many(log_values, h, axis=0):
    """Vectorized sum_exp over one axis: returns (values, offsets).

    log_values: (k, ...) complex array of term logs; reduction over `axis`.
    offsets are in action units (h * max Re log).
    """
    logs = np.asarray(log_values, dtype=complex)
    m = np.max(logs.real, axis=axis, keepdims=True)
    vals = np.sum(np.exp(logs - m), axis=axis)
    return vals, np.squeeze(m, axis=axis) * h


def log1p_exp(z):
    """log(1 + exp(z)) for complex z, stable for large |Re z|."""
    z = complex(z)
    if z.real > 0:
        return z + np.log1p(np.exp(-z))
    return np.log1p(np.exp(z))


def log_2cosh(z):
    """log(2 cosh z), stable for large |Re z| (complex z)."""
    z = complex(z)
    s = z if z.real >= 0 else -z
    return s + np.log1p(np.exp(-2.0 * s))
