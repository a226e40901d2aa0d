"""Multi-regime evaluation of the quantization function G and its roots.

G(mu; h) is a sum of labeled exponential terms a_j whose zeros are the
reduced quasi-eigenvalues.  Four algebraically equivalent representations
cover the sectors around the positive/negative imaginary axis and the
|mu| = O(h) disk; all of them are exact rewritings (the Stirling
remainders are kept exactly), so regime overlaps agree to rounding.
"""

import enum
from dataclasses import dataclass

import numpy as np
from numpy.polynomial import polynomial as npoly

from .errors import DegenerateError, NoConvergence, RegimeError, SectorEscape
from .scaled import ScaledComplex, sum_exp, sum_exp_many
from .specfun import (
    LOG_SQRT_2PI,
    StirlingRegime,
    _angdist,
    _remainder,
    log_gamma,
)

SECTOR_C = 8.0    # 1/C sector margin in the Case 1 / Case 2 split
SMALL_C1 = 10.0   # |mu| <= C1 h switches to the small-mu representations


@dataclass(frozen=True)
class SemiclassicalParams:
    """Semiclassical parameters h, epsilon and the derived h^2/epsilon."""

    h: float
    epsilon: float = 0.0
    strict: bool = False

    def __post_init__(self):
        if self.h <= 0:
            raise ValueError("h must be positive")
        if self.epsilon < 0:
            raise ValueError("epsilon must be nonnegative")
        if self.strict and self.epsilon > 0:
            if self.epsilon / self.h ** 2 < 10 or self.epsilon / np.sqrt(self.h) > 0.1:
                raise ValueError("strict regime requires h^2 << epsilon << h^(1/2)")

    @property
    def alpha2(self):
        """h^2/epsilon, with the epsilon = 0 convention alpha2 = 0."""
        if self.epsilon == 0:
            return 0.0
        return self.h ** 2 / self.epsilon

    @property
    def width(self):
        """epsilon + h^2/epsilon, the band-width scale."""
        return self.epsilon + self.alpha2


@dataclass
class ActionModel:
    """Analytic actions as complex-coefficient polynomials in mu.

    The stored polynomials are the tilded actions of the quantization
    condition: the h pi/2 shift and all Floquet/Maslov contributions are
    folded in by the caller.
    """

    s12: np.ndarray
    s34: np.ndarray
    description: str = ""
    physical: bool = False

    def __post_init__(self):
        self.s12 = np.atleast_1d(np.asarray(self.s12, dtype=complex))
        self.s34 = np.atleast_1d(np.asarray(self.s34, dtype=complex))

    def S12(self, mu):
        return npoly.polyval(mu, self.s12)

    def S34(self, mu):
        return npoly.polyval(mu, self.s34)

    def dS12(self, mu):
        return npoly.polyval(mu, npoly.polyder(self.s12))

    def dS34(self, mu):
        return npoly.polyval(mu, npoly.polyder(self.s34))

    def check_physical(self, p, C=10.0):
        """Im S = O(eps + h^2/eps) at mu in {-0.1, 0, 0.1}."""
        scale = C * (p.width + 1e-15)
        mus = np.array([-0.1, 0.0, 0.1])
        vals = np.concatenate([np.atleast_1d(self.S12(mus)),
                               np.atleast_1d(self.S34(mus))])
        return bool(np.max(np.abs(vals.imag)) <= scale)

    def mirrored(self):
        """Model with S_jk(mu) -> conj(S_jk(conj mu)) (conjugate coefficients)."""
        return ActionModel(np.conj(self.s12), np.conj(self.s34),
                           description=self.description + " (mirrored)",
                           physical=self.physical)


class Regime(enum.Enum):
    Case1Large = "case1large"
    Case2Large = "case2large"
    Case1Small = "case1small"
    Case2Small = "case2small"

    @property
    def is_case1(self):
        return self in (Regime.Case1Large, Regime.Case1Small)

    @property
    def is_small(self):
        return self in (Regime.Case1Small, Regime.Case2Small)


CASE1_LABELS = ("1", "2", "3", "4+", "4-")
CASE2_LABELS = ("1+", "1-", "2", "3", "4")


def case1_admissible(mu):
    """|arg mu - pi/2| <= pi - 1/C, i.e. away from the -i axis."""
    return _angdist(np.angle(mu), np.pi / 2) <= np.pi - 1.0 / SECTOR_C


def case2_admissible(mu):
    return _angdist(np.angle(mu), -np.pi / 2) <= np.pi - 1.0 / SECTOR_C


def choose_regime(mu, p):
    """Regime for a single mu; ties favor Case 1 and the large form."""
    mu = complex(mu)
    small = abs(mu) < SMALL_C1 * p.h
    if case1_admissible(mu) or mu == 0:
        return Regime.Case1Small if small else Regime.Case1Large
    if case2_admissible(mu):
        return Regime.Case2Small if small else Regime.Case2Large
    raise RegimeError(f"mu={mu} admissible for neither case")


@dataclass(frozen=True)
class Term:
    label: str
    log_value: complex
    rate: float


@dataclass
class TermSet:
    """The labeled exponential terms of G in one regime at one mu."""

    mu: complex
    regime: Regime
    terms: tuple

    @property
    def labels(self):
        return tuple(t.label for t in self.terms)

    def log_value(self, label):
        for t in self.terms:
            if t.label == label:
                return t.log_value
        raise KeyError(label)

    def rate(self, label):
        for t in self.terms:
            if t.label == label:
                return t.rate
        raise KeyError(label)

    def G(self, h):
        return sum_exp([t.log_value for t in self.terms], h)


def _log_terms(mu, p, am, regime):
    """(k, n) array of term logs for a 1-d mu array, plus the labels."""
    mu = np.atleast_1d(np.asarray(mu, dtype=complex))
    h = p.h
    i_h = 1j / h
    s12 = am.S12(mu)
    s34 = am.S34(mu)
    l2 = i_h * s12 + np.pi * mu / (2 * h)
    l3 = i_h * s34 + np.pi * mu / (2 * h)
    if regime is Regime.Case1Large:
        rem = _remainder(mu, h, StirlingRegime.MinusBranch)
        core = i_h * (mu * np.log(-1j * mu) - mu + np.pi * h / 4)
        l1 = i_h * (s12 + s34) + core - rem
        l4 = -core + rem
        return np.stack([l1, l2, l3,
                         l4 + np.pi * mu / h,
                         l4 - np.pi * mu / h]), CASE1_LABELS
    if regime is Regime.Case2Large:
        rem = _remainder(mu, h, StirlingRegime.PlusBranch)
        core = i_h * (mu * np.log(1j * mu) - mu + np.pi * h / 4)
        l1 = i_h * (s12 + s34) + core + rem
        l4 = -core - rem
        return np.stack([l1 + np.pi * mu / h,
                         l1 - np.pi * mu / h,
                         l2, l3, l4]), CASE2_LABELS
    if regime is Regime.Case1Small:
        lg = log_gamma(0.5 - 1j * mu / h) - LOG_SQRT_2PI
        base = 1j * (mu / h) * np.log(h) - lg + 1j * np.pi / 4
        l1 = i_h * (s12 + s34) + base
        return np.stack([l1, l2, l3,
                         -base + np.pi * mu / h,
                         -base - np.pi * mu / h]), CASE1_LABELS
    if regime is Regime.Case2Small:
        lg = log_gamma(0.5 + 1j * mu / h) - LOG_SQRT_2PI
        base = lg + 1j * (mu / h) * np.log(h) + 1j * np.pi / 4
        l1 = i_h * (s12 + s34) + base
        return np.stack([l1 + np.pi * mu / h,
                         l1 - np.pi * mu / h,
                         l2, l3, -base]), CASE2_LABELS
    raise RegimeError(f"unknown regime {regime}")


def term_set(mu, p, am, regime=None):
    """TermSet at one mu, with rates r_j = h Re(log a_j)."""
    mu = complex(mu)
    if regime is None:
        regime = choose_regime(mu, p)
    else:
        ok = case1_admissible(mu) if regime.is_case1 else case2_admissible(mu)
        if not (ok or abs(mu) < 0.5 * p.h):
            raise RegimeError(f"mu={mu} not admissible for {regime}")
    logs, labels = _log_terms(np.array([mu]), p, am, regime)
    terms = tuple(Term(lab, complex(logs[i, 0]), p.h * float(logs[i, 0].real))
                  for i, lab in enumerate(labels))
    return TermSet(mu=mu, regime=regime, terms=terms)


def eval_G(mu, p, am, regime=None):
    """G = sum_j a_j as a ScaledComplex: G = value * exp(offset/h).

    The offset is the modulus of the largest term in action units, so
    |value| is G normalized by max_j |a_j|.  Arrays return (values,
    offsets) with per-point regime selection.
    """
    if np.ndim(mu) == 0:
        r = regime or choose_regime(mu, p)
        logs, _ = _log_terms(np.array([complex(mu)]), p, am, r)
        return sum_exp(logs[:, 0], p.h)

    mu = np.asarray(mu, dtype=complex)
    flat = mu.ravel()
    vals = np.empty(flat.shape, dtype=complex)
    offs = np.empty(flat.shape, dtype=float)
    if regime is not None:
        masks = [(regime, np.ones(flat.shape, dtype=bool))]
    else:
        small = np.abs(flat) < SMALL_C1 * p.h
        c1 = (_angdist(np.angle(flat), np.pi / 2) <= np.pi - 1.0 / SECTOR_C) \
            | (flat == 0)
        masks = [
            (Regime.Case1Large, c1 & ~small),
            (Regime.Case1Small, c1 & small),
            (Regime.Case2Large, ~c1 & ~small),
            (Regime.Case2Small, ~c1 & small),
        ]
    for r, mask in masks:
        if not np.any(mask):
            continue
        logs, _ = _log_terms(flat[mask], p, am, r)
        v, o = sum_exp_many(logs, p.h, axis=0)
        vals[mask] = v
        offs[mask] = o
    return vals.reshape(mu.shape), offs.reshape(mu.shape)


@dataclass(frozen=True)
class ExponentGeometry:
    """The X, Y, Ytilde exponent bookkeeping at one mu."""

    mu: complex
    X: float
    Y: float
    Ytilde: float


def exponent_geometry(mu, p):
    mu = complex(mu)
    h = p.h
    rm = _remainder(mu, h, StirlingRegime.MinusBranch)
    rp = _remainder(mu, h, StirlingRegime.PlusBranch)
    y = mu.real * np.angle(-1j * mu) - mu.imag + h * float(np.real(rm))
    yt = mu.real * np.angle(1j * mu) - mu.imag - h * float(np.real(rp))
    return ExponentGeometry(mu=mu, X=np.pi / 2 * mu.real + y, Y=y, Ytilde=yt)


def _raw_actions(mu, p, am, coeffs, theta):
    """Un-fold the tilded actions into the raw ones of the global
    quantization condition."""
    th1, th2 = theta
    h = p.h
    s12 = am.S12(mu) - coeffs.theta(1, 2) - 2 * np.pi * h * th2 - h * np.pi / 2
    s34 = am.S34(mu) - coeffs.theta(3, 4) - 2 * np.pi * h * th1 - h * np.pi / 2
    return s12, s34


def quantization_parenthesis(mu, p, am, coeffs, theta):
    """c23 e^{2pi i(th1+th2)+i(S34+S12)/h} + c24 e^{2pi i th2 + iS12/h}
    - c13 e^{2pi i th1 + iS34/h} - c14, as a ScaledComplex."""
    th1, th2 = theta
    mu = complex(mu)
    s12, s34 = _raw_actions(mu, p, am, coeffs, theta)
    i_h = 1j / p.h
    logs = [
        coeffs.log_c23 + 2j * np.pi * (th1 + th2) + i_h * (s34 + s12),
        coeffs.log_c24 + 2j * np.pi * th2 + i_h * s12,
        coeffs.log_c13 + 2j * np.pi * th1 + i_h * s34 + 1j * np.pi,
        coeffs.log_c14 + 1j * np.pi,
    ]
    return sum_exp(logs, p.h)


quantization_residual = quantization_parenthesis


class GrushinVariant(enum.Enum):
    UpperGrushin = "upper"
    LowerGrushin = "lower"


def det_E_minus_plus(variant, mu, p, coeffs, theta, am):
    """det E_-+ of the upper/lower Grushin reduction (ScaledComplex).

    Both variants equal the quantization parenthesis divided by c23
    (upper) or by c14 with an extra e^{-2 pi i(th~1+th~2)} (lower), so
    they vanish exactly at the quasi-eigenvalues.
    """
    th1, th2 = theta
    par = quantization_parenthesis(mu, p, am, coeffs, theta)
    s12, s34 = _raw_actions(complex(mu), p, am, coeffs, theta)
    if variant is GrushinVariant.UpperGrushin:
        div = coeffs.log_c23
        extra = 0.0 + 0.0j
    else:
        div = coeffs.log_c14
        # e^{-2 pi i (th~1 + th~2)} with th~ the action-shifted Floquet pair
        extra = -(2j * np.pi * (th1 + th2) + 1j * (s34 + s12) / p.h)
    if not np.isfinite(div):
        raise DegenerateError(f"dividing coefficient log is {div}")
    scale = max(np.real(t.log_value) for t in term_set(mu, p, am).terms)
    if np.real(div) - scale < -650.0:
        raise DegenerateError("dividing coefficient underflows in log space")
    shift = extra - div
    value = par.value * np.exp(1j * np.imag(shift))
    return ScaledComplex(value, par.offset + p.h * float(np.real(shift)), p.h)


class BSBranch(enum.Enum):
    Ext = "ext"
    LeftInt = "leftint"
    RightInt = "rightint"


@dataclass
class BSRoot:
    mu: complex
    branch: BSBranch
    k: int
    residual: float
    iterations: int
    converged: bool


def _bs_target(branch, mu, p, am, k):
    h = p.h
    rhs = 2 * np.pi * h * (k + 0.5)
    rem = _remainder(mu, h, StirlingRegime.MinusBranch)
    if branch is BSBranch.Ext:
        return (am.S12(mu) + am.S34(mu) + 2 * mu * (np.log(-mu) - 1)
                + np.pi * h / 2 + 2j * h * rem - rhs)
    s = am.S34(mu) if branch is BSBranch.LeftInt else am.S12(mu)
    return mu * np.log(mu) - mu + np.pi * h / 4 + s + 1j * h * rem - rhs


def _in_sector(branch, mu, p, c=1.0):
    if branch is BSBranch.Ext:
        return mu.real <= -1.5 * p.h and abs(mu.imag) <= c * abs(mu.real)
    return mu.real >= 1.5 * p.h and abs(mu.imag) <= c * abs(mu.real)


def bohr_sommerfeld_solve(branch, k, p, am, x_max=0.45, max_iter=60,
                          tol=1e-12):
    """Newton solution of the branch quantization condition for index k.

    Seeds from a real-axis bisection of the leading equation; raises
    SectorEscape if the iterate leaves the branch's truncated sector and
    NoConvergence (carrying the last iterate) after max_iter steps.
    """
    h = p.h
    sgn = -1.0 if branch is BSBranch.Ext else 1.0
    xs = sgn * np.geomspace(1.8 * h, x_max, 400)
    vals = np.real(_bs_target(branch, xs + 0j, p, am, k))
    sign_change = np.nonzero(np.diff(np.sign(vals)) != 0)[0]
    if len(sign_change) == 0:
        raise NoConvergence(
            f"no real seed for {branch.name} k={k}", last=None)
    i = sign_change[0]
    lo, hi = xs[i], xs[i + 1]
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        if np.sign(np.real(_bs_target(branch, mid + 0j, p, am, k))) == \
                np.sign(np.real(_bs_target(branch, lo + 0j, p, am, k))):
            lo = mid
        else:
            hi = mid
    mu = complex(0.5 * (lo + hi))

    delta = h * 1e-3
    for it in range(max_iter):
        f = _bs_target(branch, mu, p, am, k)
        if abs(f) <= tol:
            return BSRoot(mu=mu, branch=branch, k=k, residual=abs(f),
                          iterations=it, converged=True)
        df = (_bs_target(branch, mu + delta, p, am, k)
              - _bs_target(branch, mu - delta, p, am, k)) / (2 * delta)
        step = f / df
        # damp overly large steps
        max_step = 0.2 * max(abs(mu), h)
        if abs(step) > max_step:
            step *= max_step / abs(step)
        mu = mu - step
        if not _in_sector(branch, mu, p):
            raise SectorEscape(
                f"{branch.name} k={k} left its sector at {mu}", last=mu)
    f = _bs_target(branch, mu, p, am, k)
    raise NoConvergence(f"{branch.name} k={k} did not converge",
                        last=mu, residual=abs(f))


def bs_spacing(mu, p):
    """Leading spacing of successive interior roots, 2 pi h / ln(1/|mu|)."""
    return 2 * np.pi * p.h / np.log(1.0 / abs(mu))


@dataclass(frozen=True)
class SpectrumPoint2D:
    z: complex
    k: int
    mu: complex


def assemble_2d_spectrum(k_range, g_coeffs, K_coeffs, S0, k0, p,
                         mu_roots_provider, tau_cut=0.3):
    """Two-dimensional spectrum from per-tau mu-roots.

    tau_k = h(k - k0/4) - S0/(2 pi); each mu-root maps to
    w = K(tau_k, mu) and z = g(tau_k) + i eps w.  g must be strictly
    increasing over the retained tau_k.
    """
    g_coeffs = np.atleast_1d(np.asarray(g_coeffs, dtype=float))
    K_coeffs = np.atleast_2d(np.asarray(K_coeffs, dtype=complex))
    if abs(npoly.polyval(0.0, g_coeffs)) > 1e-14:
        raise ValueError("g(0) must vanish")
    dg = npoly.polyder(g_coeffs)
    out = []
    for k in range(k_range[0], k_range[1] + 1):
        tau = p.h * (k - k0 / 4.0) - S0 / (2 * np.pi)
        if abs(tau) > tau_cut:
            continue
        if npoly.polyval(tau, dg) <= 0:
            raise ValueError(f"g not strictly increasing at tau={tau}")
        gtau = float(npoly.polyval(tau, g_coeffs))
        for mu in mu_roots_provider(tau):
            w = complex(npoly.polyval2d(tau, mu, K_coeffs))
            out.append(SpectrumPoint2D(z=gtau + 1j * p.epsilon * w,
                                       k=k, mu=complex(mu)))
    return out
