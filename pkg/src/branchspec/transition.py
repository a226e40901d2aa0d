"""Exact transition matrix across the branch point and its asymptotics.

The 2x2 matrix maps the coefficients (u3, u4) of microlocal solutions on
the incoming branches to (u2, u1) on the outgoing ones.  Entries mix
Gamma factors with exp(pi mu/h), so log-space duplicates are kept and
all identity checks are done on logs.
"""

import enum
from dataclasses import dataclass, field

import numpy as np

from .errors import SectorError
from .scaled import log1p_exp, log_2cosh
from .specfun import LOG_SQRT_2PI, _angdist, log_gamma

_SAFE_EXP = 650.0  # exp() beyond this is treated as unrepresentable


class Sector(enum.Enum):
    """Sectors of the asymptotic tableau (0.1 rad admissibility margin)."""

    RightReal = "right"   # Re mu > |Im mu|/C
    UpperHalf = "upper"   # Im mu > -C |Re mu|  (away from -i R+)
    LeftReal = "left"     # Re mu < -|Im mu|/C
    LowerHalf = "lower"   # Im mu < C |Re mu|   (away from +i R+)


SECTOR_MARGIN = 0.1


@dataclass
class TransitionMatrix:
    """Entries of the exact transition matrix at (mu, h).

    a24 and a13 are exact exponentials; a23 and a14 carry Gamma factors
    and are duplicated in log space.  Linear entries are +-inf when the
    exponent exceeds double range.
    """

    mu: complex
    h: float
    log_a23: complex
    log_a14: complex
    a23: complex = field(init=False)
    a24: complex = field(init=False)
    a13: complex = field(init=False)
    a14: complex = field(init=False)

    def __post_init__(self):
        self.a23 = _safe_exp(self.log_a23)
        self.a14 = _safe_exp(self.log_a14)
        x = np.pi * self.mu / self.h
        self.a13 = _safe_exp(x + 1j * np.pi / 2)
        self.a24 = -self.a13

    @property
    def det(self):
        """a23*a14 - a24*a13, linear evaluation (may overflow)."""
        return self.a23 * self.a14 - self.a24 * self.a13

    def det_residual(self):
        """|det - 1| / max(|a23*a14|, 1), evaluated in log space.

        The determinant equals 1 exactly; with L1 = log(a23*a14) and
        L2 = 2 pi mu/h = log(a24*a13) the identity reads
        L1 = log(1 + exp(L2)), so the residual is |exp(L1 - L1_true) - 1|.
        """
        l1 = self.log_a23 + self.log_a14
        l2 = 2.0 * np.pi * self.mu / self.h
        return abs(np.expm1(l1 - log1p_exp(l2)))


def _safe_exp(z):
    z = complex(z)
    if z.real > _SAFE_EXP:
        return complex(np.inf * np.cos(z.imag), np.inf * np.sin(z.imag))
    return complex(np.exp(z))


def exact_matrix(mu, h):
    """Transition matrix entries from the exact Gamma formulas."""
    if h <= 0:
        raise ValueError("h must be positive")
    mu = complex(mu)
    z = 1j * mu / h
    common = (np.pi / 2) * (mu / h)
    log_a23 = LOG_SQRT_2PI + z * np.log(h) - log_gamma(0.5 - z) \
        + common + 1j * np.pi / 4
    log_a14 = LOG_SQRT_2PI - z * np.log(h) - log_gamma(0.5 + z) \
        + common - 1j * np.pi / 4
    return TransitionMatrix(mu=mu, h=h, log_a23=log_a23, log_a14=log_a14)


class Entry(enum.Enum):
    A23 = "a23"
    A14 = "a14"


def _sector_ok(mu, sector, margin=SECTOR_MARGIN):
    th = np.angle(mu)
    if sector is Sector.RightReal:
        return _angdist(th, 0.0) <= np.pi / 2 - margin
    if sector is Sector.LeftReal:
        return _angdist(th, np.pi) <= np.pi / 2 - margin
    if sector is Sector.UpperHalf:
        return _angdist(th, -np.pi / 2) >= margin
    return _angdist(th, np.pi / 2) >= margin


def asymptotic_entry(entry, mu, h, sector):
    """Log of the tableau expression for a23 or a14, remainders dropped.

    Each sector block uses the principal log whose cut coincides with the
    sector's excluded axis.  In the half-plane blocks the subdominant
    reflection partner shows up as a 2cosh factor.
    """
    mu = complex(mu)
    if abs(mu) / h < 5.0:
        raise SectorError(f"|mu|/h < 5 (mu={mu}, h={h})")
    if not _sector_ok(mu, sector):
        raise SectorError(f"mu={mu} outside sector {sector.name} with margin")

    i_h = 1j / h
    quarter = np.pi * h / 4
    if sector is Sector.RightReal:
        if entry is Entry.A23:
            return i_h * (mu * np.log(mu) - 1j * np.pi * mu - mu + quarter)
        return i_h * (-mu * np.log(mu) - 1j * np.pi * mu + mu - quarter)
    if sector is Sector.UpperHalf:
        if entry is Entry.A23:
            return i_h * (mu * np.log(-1j * mu) - 1j * np.pi * mu / 2
                          - mu + quarter)
        return i_h * (-mu * np.log(-1j * mu) - 1j * np.pi * mu / 2
                      + mu - quarter) + log_2cosh(np.pi * mu / h)
    if sector is Sector.LeftReal:
        if entry is Entry.A23:
            return i_h * (mu * np.log(-mu) - mu + quarter)
        return i_h * (-mu * np.log(-mu) + mu - quarter)
    # LowerHalf
    if entry is Entry.A23:
        return i_h * (mu * np.log(1j * mu) - 1j * np.pi * mu / 2
                      - mu + quarter) + log_2cosh(np.pi * mu / h)
    return i_h * (-mu * np.log(1j * mu) - 1j * np.pi * mu / 2 + mu - quarter)


@dataclass
class RenormalizedCoeffs:
    """Coefficients c_jk = exp(-i (d_j - d_k)/h) a_jk for phases d_j."""

    d: tuple
    h: float
    log_c23: complex
    log_c14: complex
    log_c24: complex
    log_c13: complex

    @property
    def c23(self):
        return _safe_exp(self.log_c23)

    @property
    def c24(self):
        return _safe_exp(self.log_c24)

    @property
    def c13(self):
        return _safe_exp(self.log_c13)

    @property
    def c14(self):
        return _safe_exp(self.log_c14)

    def theta(self, j, k):
        """theta_{j,k} = d_j - d_k (1-based indices)."""
        return self.d[j - 1] - self.d[k - 1]


def renormalize(tm, d):
    """Renormalized coefficients for the four phases d = (d1, d2, d3, d4).

    det of the c-matrix picks up the factor exp(-i (d1+d2-d3-d4)/h); the
    theta identity theta23 + theta14 = theta13 + theta24 is exact.
    """
    d = tuple(complex(x) for x in d)
    d1, d2, d3, d4 = d
    ih = 1j / tm.h
    log_a_pure = np.pi * tm.mu / tm.h + 1j * np.pi / 2
    return RenormalizedCoeffs(
        d=d, h=tm.h,
        log_c23=tm.log_a23 - ih * (d2 - d3),
        log_c14=tm.log_a14 - ih * (d1 - d4),
        log_c24=log_a_pure + 1j * np.pi - ih * (d2 - d4),  # a24 = -e^{..}
        log_c13=log_a_pure - ih * (d1 - d3),
    )
