"""Exact flow averages over the 1:1 resonant harmonic oscillator.

All symbolic computations (averages, the weighted average G0, Poisson
brackets, correlations C) are exact over the Gaussian rationals: a
monomial z^alpha zbar^beta is a dict key and its coefficient a pair of
Fractions.  Floating point enters only in the numerical verifier and in
the separatrix action integrals.

The frequency ratio 1:1 is hard-wired (flow z_j(t) = e^{-it} z_j);
general rational ratios would change only the balance condition
|alpha| = |beta| to a weighted one and are an untested extension point.
"""

import enum
from dataclasses import dataclass
from fractions import Fraction
from math import comb

import numpy as np

from .errors import DegenerateInput, Mismatch, NoLoop, NotInvariant

REGION_LINE_TOL = 1e-9


class QQi:
    """Exact complex rational re + i*im."""

    __slots__ = ("re", "im")

    def __init__(self, re=0, im=0):
        self.re = Fraction(re)
        self.im = Fraction(im)

    def __add__(self, o):
        o = _as_qqi(o)
        return QQi(self.re + o.re, self.im + o.im)

    __radd__ = __add__

    def __sub__(self, o):
        o = _as_qqi(o)
        return QQi(self.re - o.re, self.im - o.im)

    def __rsub__(self, o):
        return _as_qqi(o) - self

    def __mul__(self, o):
        o = _as_qqi(o)
        return QQi(self.re * o.re - self.im * o.im,
                   self.re * o.im + self.im * o.re)

    __rmul__ = __mul__

    def __neg__(self):
        return QQi(-self.re, -self.im)

    def __eq__(self, o):
        o = _as_qqi(o)
        return self.re == o.re and self.im == o.im

    def __bool__(self):
        return self.re != 0 or self.im != 0

    def conj(self):
        return QQi(self.re, -self.im)

    def times_i(self):
        return QQi(-self.im, self.re)

    def over_int(self, n):
        return QQi(self.re / n, self.im / n)

    def __complex__(self):
        return complex(float(self.re), float(self.im))

    def __repr__(self):
        if self.im == 0:
            return f"{self.re}"
        return f"({self.re}{'+' if self.im >= 0 else ''}{self.im}i)"

    def __hash__(self):
        return hash((self.re, self.im))


def _as_qqi(x):
    if isinstance(x, QQi):
        return x
    return QQi(Fraction(x))


class BalancedLaurent:
    """Exact polynomial in z1, z2, zbar1, zbar2 with |z_j|^-2 factors.

    terms: dict (a1, a2, b1, b2) -> QQi for z^a zbar^b; negative
    exponents appear only in matched pairs a_j = b_j < 0.
    """

    def __init__(self, terms=None):
        self.terms = {}
        if terms:
            for k, v in terms.items():
                self._add(k, _as_qqi(v))

    def _add(self, key, coeff):
        if not coeff:
            return
        cur = self.terms.get(key)
        new = coeff if cur is None else cur + coeff
        if new:
            self.terms[key] = new
        elif cur is not None:
            del self.terms[key]

    def __add__(self, o):
        out = BalancedLaurent(self.terms)
        for k, v in o.terms.items():
            out._add(k, v)
        return out

    def __sub__(self, o):
        out = BalancedLaurent(self.terms)
        for k, v in o.terms.items():
            out._add(k, -v)
        return out

    def __mul__(self, o):
        if isinstance(o, (int, Fraction, QQi)):
            c = _as_qqi(o)
            return BalancedLaurent({k: v * c for k, v in self.terms.items()})
        out = BalancedLaurent()
        for k1, v1 in self.terms.items():
            for k2, v2 in o.terms.items():
                key = tuple(a + b for a, b in zip(k1, k2))
                out._add(key, v1 * v2)
        return out

    __rmul__ = __mul__

    def __eq__(self, o):
        return self.terms == o.terms

    def __bool__(self):
        return bool(self.terms)

    def conj(self):
        return BalancedLaurent({(k[2], k[3], k[0], k[1]): v.conj()
                                for k, v in self.terms.items()})

    def is_flow_invariant(self):
        return all(k[0] + k[1] == k[2] + k[3] for k in self.terms)

    def is_real(self):
        return self == self.conj()

    def evaluate(self, z1, z2):
        tot = 0j
        for (a1, a2, b1, b2), v in self.terms.items():
            tot += complex(v) * z1 ** a1 * z2 ** a2 \
                * np.conj(z1) ** b1 * np.conj(z2) ** b2
        return tot

    def to_json_dict(self):
        return {",".join(map(str, k)):
                [[v.re.numerator, v.re.denominator],
                 [v.im.numerator, v.im.denominator]]
                for k, v in sorted(self.terms.items())}

    @classmethod
    def from_json_dict(cls, d):
        out = cls()
        for k, ((rn, rd), (im_n, im_d)) in d.items():
            key = tuple(int(s) for s in k.split(","))
            out._add(key, QQi(Fraction(rn, rd), Fraction(im_n, im_d)))
        return out

    def __repr__(self):
        return "BalancedLaurent(" + ", ".join(
            f"z^{k[:2]}zb^{k[2:]}: {v}" for k, v in sorted(self.terms.items())
        ) + ")"


_I_POWERS = (QQi(1), QQi(0, -1), QQi(-1), QQi(0, 1))  # (-i)^n


def zpoly_from_x(monomials):
    """BalancedLaurent from x/xi monomials.

    monomials: dict (a1, a2) or (a1, a2, b1, b2) -> rational coefficient
    of x1^a1 x2^a2 xi1^b1 xi2^b2; conversion x = (z+zbar)/2,
    xi = (z-zbar)/(2i).
    """
    out = BalancedLaurent()
    for key, coeff in monomials.items():
        if len(key) == 2:
            a1, a2 = key
            b1 = b2 = 0
        else:
            a1, a2, b1, b2 = key
        base = _as_qqi(Fraction(coeff)) * _I_POWERS[(b1 + b2) % 4]
        denom = 2 ** (a1 + a2 + b1 + b2)
        for i1 in range(a1 + 1):
            for i2 in range(a2 + 1):
                for j1 in range(b1 + 1):
                    for j2 in range(b2 + 1):
                        c = comb(a1, i1) * comb(a2, i2) \
                            * comb(b1, j1) * comb(b2, j2) \
                            * (-1) ** ((b1 - j1) + (b2 - j2))
                        k = (i1 + j1, i2 + j2,
                             (a1 - i1) + (b1 - j1), (a2 - i2) + (b2 - j2))
                        out._add(k, base * Fraction(c, denom))
    return out


def flow_average(q):
    """Time average along the periodic flow: keep the |alpha| = |beta|
    (time-independent) part; exact."""
    return BalancedLaurent({k: v for k, v in q.terms.items()
                            if k[0] + k[1] == k[2] + k[3]})


def weighted_average_G0(q):
    """G0 = (1/T) int_0^T (t - T/2) q(exp(t H_p)) dt, T = 2 pi.

    A term with frequency k = |beta| - |alpha| != 0 picks up the Fourier
    factor 1/(i k); k = 0 terms drop.  Satisfies H_p G0 = q - <q>.
    """
    out = BalancedLaurent()
    for key, v in q.terms.items():
        k = (key[2] + key[3]) - (key[0] + key[1])
        if k == 0:
            continue
        # 1/(ik) = -i/k
        out._add(key, QQi(0, Fraction(-1, k)) * v)
    return out


def poisson(f, g):
    """Exact Poisson bracket {f, g} of z-polynomials.

    {z^a zb^at, z^b zb^bt} = 2i sum_j (a_j bt_j - at_j b_j)
    z^{a+b} zb^{at+bt} / |z_j|^2.
    """
    out = BalancedLaurent()
    for (a1, a2, t1, t2), v1 in f.terms.items():
        for (b1, b2, u1, u2), v2 in g.terms.items():
            for j, sig in ((0, a1 * u1 - t1 * b1), (1, a2 * u2 - t2 * b2)):
                if sig == 0:
                    continue
                key = [a1 + b1, a2 + b2, t1 + u1, t2 + u2]
                key[j] -= 1
                key[j + 2] -= 1
                coeff = v1 * v2 * QQi(0, 2 * sig)
                out._add(tuple(key), coeff)
    return out


def hamiltonian_vector_on_p(q):
    """H_p q for p = (|z1|^2 + |z2|^2)/2: each term times i(|b|-|a|)."""
    out = BalancedLaurent()
    for key, v in q.terms.items():
        k = (key[2] + key[3]) - (key[0] + key[1])
        if k:
            out._add(key, QQi(0, k) * v)
    return out


def correlation_Cor(q1, q2):
    """Cor(q1, q2; s) as a dict frequency -> BalancedLaurent, where the
    s-dependence of each piece is exp(i s k)."""
    out = {}
    for (a1, a2, t1, t2), v1 in q1.terms.items():
        k = (t1 + t2) - (a1 + a2)
        piece = poisson(BalancedLaurent({(a1, a2, t1, t2): v1}), q2)
        bal = flow_average(piece)
        if not bal:
            continue
        out.setdefault(k, BalancedLaurent())
        out[k] = out[k] + bal
        if not out[k]:
            del out[k]
    return out


def correlation_C(q1, q2):
    """C(q1, q2) = (1/T) int_0^T (s - T/2) Cor(q1, q2; s) ds, exact."""
    out = BalancedLaurent()
    for k, piece in correlation_Cor(q1, q2).items():
        if k == 0:
            continue
        out = out + piece * QQi(0, Fraction(-1, k))
    return out


def to_action_angle(avg):
    """Rewrite a real flow-invariant element in (rho_1, rho_2, theta).

    z_j = sqrt(2 rho_j) e^{-i theta_j}; returns a dict
    (2*p1, 2*p2, m) -> (cos_coeff, sin_coeff) meaning
    rho1^p1 rho2^p2 (cos_coeff cos(m theta) + sin_coeff sin(m theta))
    with theta = theta1 - theta2 and m >= 0; coefficients are Fractions.
    """
    raw = {}
    for (a1, a2, b1, b2), v in avg.terms.items():
        if a1 + a2 != b1 + b2:
            raise NotInvariant(f"term {(a1, a2, b1, b2)} depends on theta1+theta2")
        m = a1 - b1  # = -(a2 - b2); e^{-i m theta}
        two_p1, two_p2 = a1 + b1, a2 + b2
        scale = Fraction(2) ** ((two_p1 + two_p2) // 2)
        key = (two_p1, two_p2, m)
        cur = raw.get(key, QQi())
        raw[key] = cur + v * scale
    out = {}
    for (tp1, tp2, m), v in raw.items():
        k = abs(m)
        key = (tp1, tp2, k)
        cos_c, sin_c = out.get(key, (Fraction(0), Fraction(0)))
        # v e^{-i m theta} + (the conjugate partner handles itself):
        # accumulate real projection: Re part -> cos, +-Im -> sin
        cos_c += v.re
        sin_c += v.im if m > 0 else (-v.im if m < 0 else Fraction(0))
        out[key] = (cos_c, sin_c)
    return {k: v for k, v in out.items() if v[0] != 0 or v[1] != 0}


# ---------------------------------------------------------------------------
# reduced function on Sigma and its critical points


class Region(enum.Enum):
    A = "A"
    Bplus = "B+"
    Bminus = "B-"
    Cplus = "C+"
    Cminus = "C-"
    D = "D"
    Eplus = "E+"
    Eminus = "E-"
    F = "F"
    Boundary = "boundary"
    Degenerate = "degenerate"


class PointKind(enum.Enum):
    HorizontalCircle = "horizontal"
    VerticalCircle = "vertical"
    CrossingCf = "Cf"
    CrossingCb = "Cb"
    Pole = "pole"


@dataclass
class CriticalPoint:
    kind: PointKind
    signature: tuple        # paper-order sign pair
    sig_theta: int          # sign of the second theta-derivative
    sig_rho: int            # sign of the second rho-derivative
    value: Fraction
    locations: list         # [(rho, theta)] real coordinates on Sigma

    @property
    def is_saddle(self):
        return self.sig_theta * self.sig_rho < 0


@dataclass
class CriticalPointReport:
    region: Region
    points: list
    params: dict

    @property
    def saddles(self):
        return [pt for pt in self.points if pt.is_saddle]

    @property
    def saddle_count(self):
        """Number of saddle locations (records carry symmetric pairs)."""
        return sum(len(pt.locations) for pt in self.saddles)


@dataclass
class ReducedFunction:
    """<q> = a + d g^2 + b g^2 y^2 + c g y on Sigma, d = b/2 - 2a."""

    a: Fraction
    b: Fraction
    c: Fraction

    def __post_init__(self):
        self.a = Fraction(self.a)
        self.b = Fraction(self.b)
        self.c = Fraction(self.c)

    @property
    def d(self):
        return self.b / 2 - 2 * self.a

    def eval(self, rho, theta):
        g2 = rho * (1.0 - rho)
        g = np.sqrt(np.maximum(g2, 0.0))
        y = np.cos(theta)
        a, b, c, d = map(float, (self.a, self.b, self.c, self.d))
        return a + d * g2 + b * g2 * y * y + c * g * y

    def grad(self, rho, theta):
        a, b, c, d = map(float, (self.a, self.b, self.c, self.d))
        g2 = rho * (1.0 - rho)
        g = np.sqrt(np.maximum(g2, 1e-300))
        y = np.cos(theta)
        dgdr = (1.0 - 2.0 * rho) / (2.0 * g)
        dq_drho = (d + b * y * y) * (1.0 - 2.0 * rho) + c * y * dgdr
        dq_dth = -np.sin(theta) * (2.0 * b * g2 * y + c * g)
        return dq_drho, dq_dth

    def eval_pole_chart(self, u, v):
        """Exact <q> near rho = 0 in the (Re zeta1, Im zeta1) chart."""
        a, b, c, d = map(float, (self.a, self.b, self.c, self.d))
        s = u * u + v * v
        return a + d * s * (1.0 - s) + b * u * u * (1.0 - s) \
            + c * u * np.sqrt(np.maximum(1.0 - s, 0.0))

    def grad_pole_chart(self, u, v):
        """Analytic chart gradient (avoids finite-difference noise)."""
        a, b, c, d = map(float, (self.a, self.b, self.c, self.d))
        s = u * u + v * v
        root = np.sqrt(np.maximum(1.0 - s, 1e-300))
        du = 2 * u * d * (1 - 2 * s) + 2 * u * b * (1 - s) \
            - 2 * b * u ** 3 + c * (root - u * u / root)
        dv = 2 * v * d * (1 - 2 * s) - 2 * b * u * u * v - c * u * v / root
        return du, dv


def _sign(x):
    return 1 if x > 0 else (-1 if x < 0 else 0)


def _region_of(b, c, d):
    b, c, d = float(b), float(c), float(d)
    lines = [abs(c - b), abs(c + b), abs(c - (b + d)), abs(c + (b + d))]
    if min(lines) <= REGION_LINE_TOL:
        raise DegenerateInput("parameters on a separating line",
                              clause="c = +-b or c = +-(b+d)")
    if d < 0:
        # classify via the sign-flipped parameters; the point list is
        # computed from the general formulas either way
        return _region_of(-b, -c, -d)
    if b > 0 and -b < c < b:
        return Region.A
    if max(b, -b) < c < b + d:
        return Region.Bplus
    if -(b + d) < c < min(b, -b):
        return Region.Bminus
    if c > max(b + d, -b):
        return Region.Cplus
    if c < min(b, -b - d):
        return Region.Cminus
    if b < 0 and max(b, -b - d) < c < min(-b, b + d):
        return Region.D
    if max(b + d, -b - d) < c < -b:
        return Region.Eplus
    if b < c < min(-b - d, b + d):
        return Region.Eminus
    if b < -d and b + d < c < -b - d:
        return Region.F
    raise DegenerateInput(f"no region for b={b}, c={c}, d={d}",
                          clause="region table")


def classify_critical_points(rf):
    """Critical points of <q> on Sigma with signatures and exact values.

    Preconditions: d != 0; when c != 0 also b != 0 and b + d != 0;
    parameters strictly inside one of the nine open regions.
    """
    a, b, c, d = rf.a, rf.b, rf.c, rf.d
    if d == 0:
        raise DegenerateInput("d = 0", clause="d != 0")
    if c != 0 and (b == 0 or b + d == 0):
        raise DegenerateInput("c != 0 requires b != 0 and b+d != 0",
                              clause="b != 0 and b+d != 0")
    region = _region_of(b, c, d)
    pts = []
    # crossing points, always critical
    pts.append(CriticalPoint(
        kind=PointKind.CrossingCf,
        signature=(_sign(-c - b - d), _sign(-b - c)),
        sig_theta=_sign(-b - c), sig_rho=_sign(-c - b - d),
        value=a + (d + b) / 4 + c / 2,
        locations=[(0.5, 0.0)]))
    pts.append(CriticalPoint(
        kind=PointKind.CrossingCb,
        signature=(_sign(c - b - d), _sign(c - b)),
        sig_theta=_sign(c - b), sig_rho=_sign(c - b - d),
        value=a + (d + b) / 4 - c / 2,
        locations=[(0.5, np.pi)]))
    # horizontal circle: cos(theta) = -c/b, two points, iff |c/b| < 1
    if b != 0 and abs(c) < abs(b):
        th = float(np.arccos(float(-c / b)))
        pts.append(CriticalPoint(
            kind=PointKind.HorizontalCircle,
            signature=(_sign(b), -_sign(d)),
            sig_theta=_sign(b), sig_rho=-_sign(d),
            value=a + d / 4 - c * c / (4 * b),
            locations=[(0.5, th), (0.5, 2 * np.pi - th)]))
    # vertical circle: g = -+ c/(2(b+d)) at theta = 0 / pi
    if b + d != 0 and c != 0:
        t = c / (b + d)
        if -1 < t < 0:
            gstar, theta0 = -t / 2, 0.0
        elif 0 < t < 1:
            gstar, theta0 = t / 2, np.pi
        else:
            gstar = None
        if gstar is not None:
            disc = float(Fraction(1, 4) - gstar * gstar)
            r1 = 0.5 - np.sqrt(disc)
            r2 = 0.5 + np.sqrt(disc)
            pts.append(CriticalPoint(
                kind=PointKind.VerticalCircle,
                signature=(_sign(d + b), _sign(d)),
                sig_theta=_sign(d), sig_rho=_sign(d + b),
                value=a - c * c / (4 * (b + d)),
                locations=[(r1, theta0), (r2, theta0)]))
    # poles: critical iff c = 0
    if c == 0:
        pts.append(CriticalPoint(
            kind=PointKind.Pole,
            signature=(_sign(d + b), _sign(d)),
            sig_theta=_sign(d + b), sig_rho=_sign(d),
            value=a,
            locations=[(0.0, 0.0), (1.0, 0.0)]))
    report = CriticalPointReport(region=region, points=pts,
                                 params={"a": a, "b": b, "c": c, "d": d})
    return report


# region tables from the classification: paper-order signatures
REGION_TABLE = {
    Region.A: {"Cf": (-1, -1), "Cb": (-1, -1),
               "horizontal": (1, -1), "vertical": (1, 1)},
    Region.Bplus: {"Cf": (-1, -1), "Cb": (-1, 1),
                   "horizontal": None, "vertical": (1, 1)},
    Region.Bminus: {"Cf": (-1, 1), "Cb": (-1, -1),
                    "horizontal": None, "vertical": (1, 1)},
    Region.Cplus: {"Cf": (-1, -1), "Cb": (1, 1),
                   "horizontal": None, "vertical": None},
    Region.Cminus: {"Cf": (1, 1), "Cb": (-1, -1),
                    "horizontal": None, "vertical": None},
    Region.D: {"Cf": (-1, 1), "Cb": (-1, 1),
               "horizontal": (-1, -1), "vertical": (1, 1)},
    Region.Eplus: {"Cf": (-1, 1), "Cb": (1, 1),
                   "horizontal": (-1, -1), "vertical": None},
    Region.Eminus: {"Cf": (1, 1), "Cb": (-1, 1),
                    "horizontal": (-1, -1), "vertical": None},
    Region.F: {"Cf": (1, 1), "Cb": (1, 1),
               "horizontal": (-1, -1), "vertical": (-1, 1)},
}

REGION_SADDLES = {Region.A: 2, Region.Bplus: 1, Region.Bminus: 1,
                  Region.Cplus: 0, Region.Cminus: 0, Region.D: 2,
                  Region.Eplus: 1, Region.Eminus: 1, Region.F: 2}


def _numeric_critical_points(rf, n=400):
    """All critical points of <q> on Sigma by grid + Newton, plus the
    pole-chart check; returns [(rho, theta, sig_theta, sig_rho)] with
    poles encoded as rho in {0, 1} and chart signs."""
    rhos = np.linspace(1e-3, 1 - 1e-3, n)
    thetas = np.linspace(0.0, 2 * np.pi, n, endpoint=False)
    R, T = np.meshgrid(rhos, thetas, indexing="ij")
    gr, gt = rf.grad(R, T)
    g2 = gr * gr + gt * gt
    found = []

    def refine(r0, t0):
        x = np.array([r0, t0])
        for _ in range(60):
            gr, gt = rf.grad(x[0], x[1])
            g = np.array([gr, gt])
            if np.linalg.norm(g) < 1e-13:
                break
            eps = 1e-7
            J = np.empty((2, 2))
            for j, dx in enumerate(np.eye(2) * eps):
                gp = np.array(rf.grad(*(x + dx)))
                gm = np.array(rf.grad(*(x - dx)))
                J[:, j] = (gp - gm) / (2 * eps)
            try:
                step = np.linalg.solve(J, g)
            except np.linalg.LinAlgError:
                return None
            if np.linalg.norm(step) > 0.3:
                step *= 0.3 / np.linalg.norm(step)
            x = x - step
            if not (1e-6 < x[0] < 1 - 1e-6):
                return None
        else:
            return None
        return x[0], x[1] % (2 * np.pi)

    # candidates: local minima of |grad|^2, with periodic wrap in theta
    g2w = np.concatenate([g2[:, -1:], g2, g2[:, :1]], axis=1)
    interior = g2w[1:-1, 1:-1]
    neigh = np.minimum.reduce([g2w[:-2, 1:-1], g2w[2:, 1:-1],
                               g2w[1:-1, :-2], g2w[1:-1, 2:]])
    mask = (interior <= neigh) & (interior < 1e-2)
    for i, j in zip(*np.nonzero(mask)):
        res = refine(R[i + 1, j], T[i + 1, j])
        if res is None:
            continue
        r0, t0 = res
        if all(_sigma_dist(r0, t0, r1, t1) > 1e-4 for r1, t1, *_ in found):
            eps = 1e-5
            d2r = (rf.eval(r0 + eps, t0) - 2 * rf.eval(r0, t0)
                   + rf.eval(r0 - eps, t0)) / eps ** 2
            d2t = (rf.eval(r0, t0 + eps) - 2 * rf.eval(r0, t0)
                   + rf.eval(r0, t0 - eps)) / eps ** 2
            found.append((r0, t0, _sign_eps(d2t), _sign_eps(d2r)))
    # pole chart around rho = 0: covers the region the (rho, theta) grid
    # resolves poorly; by the exact rho <-> 1-rho symmetry of <q>, every
    # chart finding is mirrored to the opposite hemisphere
    def chart_grad(u, v):
        return np.array(rf.grad_pole_chart(u, v))

    m = 90
    uu = np.linspace(-0.32, 0.32, m)
    U, V = np.meshgrid(uu, uu, indexing="ij")
    GU, GV = rf.grad_pole_chart(U, V)
    C2 = GU * GU + GV * GV
    interior = C2[1:-1, 1:-1]
    neigh = np.minimum.reduce([C2[:-2, 1:-1], C2[2:, 1:-1],
                               C2[1:-1, :-2], C2[1:-1, 2:]])
    cmask = (interior <= neigh) & (interior < 1e-2)
    chart_pts = []
    for i, j in zip(*np.nonzero(cmask)):
        x = np.array([U[i + 1, j + 1], V[i + 1, j + 1]])
        okc = False
        for _ in range(80):
            g = chart_grad(*x)
            if np.linalg.norm(g) < 1e-12:
                okc = True
                break
            J = np.empty((2, 2))
            for jj, dx in enumerate(np.eye(2) * 1e-6):
                J[:, jj] = (chart_grad(*(x + dx)) - chart_grad(*(x - dx))) / 2e-6
            try:
                step = np.linalg.solve(J, g)
            except np.linalg.LinAlgError:
                break
            if np.linalg.norm(step) > 0.1:
                step *= 0.1 / np.linalg.norm(step)
            x = x - step
            if np.linalg.norm(x) > 0.4:
                break
        if okc and np.linalg.norm(x) <= 0.33:
            if all(np.hypot(x[0] - w[0], x[1] - w[1]) > 1e-6
                   for w in chart_pts):
                chart_pts.append((x[0], x[1]))
    for u, v in chart_pts:
        s = u * u + v * v
        if s < 1e-12:
            # the pole itself; chart axes are the vertical-circle and
            # transverse directions
            e = 1e-5
            d2u = (rf.eval_pole_chart(e, 0) - 2 * rf.eval_pole_chart(0, 0)
                   + rf.eval_pole_chart(-e, 0)) / e ** 2
            d2v = (rf.eval_pole_chart(0, e) - 2 * rf.eval_pole_chart(0, 0)
                   + rf.eval_pole_chart(0, -e)) / e ** 2
            for pole_rho in (0.0, 1.0):
                found.append((pole_rho, 0.0, _sign_eps(d2u), _sign_eps(d2v)))
            continue
        rho0 = s
        th0 = np.arctan2(-v, u) % (2 * np.pi)
        for r0 in (rho0, 1.0 - rho0):
            if any(_sigma_dist(r0, th0, r1, t1) <= 1e-4
                   for r1, t1, *_ in found):
                continue
            e = min(1e-5, r0 / 3, (1 - r0) / 3)
            d2r = (rf.eval(r0 + e, th0) - 2 * rf.eval(r0, th0)
                   + rf.eval(r0 - e, th0)) / e ** 2
            d2t = (rf.eval(r0, th0 + 1e-5) - 2 * rf.eval(r0, th0)
                   + rf.eval(r0, th0 - 1e-5)) / 1e-10
            found.append((r0, th0, _sign_eps(d2t), _sign_eps(d2r)))
    return found


def _sign_eps(x, tol=1e-7):
    return 1 if x > tol else (-1 if x < -tol else 0)


def _sigma_dist(r0, t0, r1, t1):
    dt = abs((t0 - t1 + np.pi) % (2 * np.pi) - np.pi)
    return np.hypot(r0 - r1, dt)


def grid_verify(rf, report, n=400, tol=1e-6):
    """Numerical critical-point search; bijection against the report.

    Raises Mismatch with the discrepancy list when a reported point is
    missing, an extra point is found, or a signature disagrees.
    """
    numeric = _numeric_critical_points(rf, n=n)
    expected = []
    for pt in report.points:
        for (r, t) in pt.locations:
            if pt.kind is PointKind.Pole:
                expected.append((r, t, pt.sig_theta, pt.sig_rho, pt))
            else:
                expected.append((r, t, pt.sig_theta, pt.sig_rho, pt))
    problems = []
    used = [False] * len(numeric)
    for (r, t, st, sr, pt) in expected:
        best, best_d = None, np.inf
        for i, (rn, tn, snt, snr) in enumerate(numeric):
            if used[i]:
                continue
            d = _sigma_dist(r, t, rn, tn) if r not in (0.0, 1.0) \
                else abs(r - rn)
            if d < best_d:
                best, best_d = i, d
        if best is None or best_d > tol:
            problems.append(f"missing {pt.kind.value} at rho={r}, th={t}")
            continue
        used[best] = True
        rn, tn, snt, snr = numeric[best]
        if r in (0.0, 1.0):
            # pole chart signs: (u, v) directions correspond to the
            # vertical-circle and transverse directions
            if (snt, snr) != (pt.sig_theta, pt.sig_rho):
                problems.append(
                    f"pole signature {snt, snr} != {pt.sig_theta, pt.sig_rho}")
        else:
            if snt != st or snr != sr:
                problems.append(
                    f"{pt.kind.value} signature ({snt},{snr}) != ({st},{sr})"
                    f" at rho={rn:.4f}, th={tn:.4f}")
    extras = [numeric[i] for i in range(len(numeric)) if not used[i]]
    for e in extras:
        problems.append(f"unreported critical point at rho={e[0]:.4f}, "
                        f"th={e[1]:.4f}")
    if problems:
        raise Mismatch("; ".join(problems), discrepancies=problems)
    return {"matched": len(expected), "numeric": len(numeric)}


class Loop(enum.Enum):
    LeftLoop = "left"    # drifts into rho < 1/2 first
    RightLoop = "right"  # drifts into rho > 1/2 first


def action_perturbation(rf, f, loop, offset=1e-8, t_max=400.0):
    """int (f - f(saddle)) dt along the homoclinic separatrix of <q>.

    The flow is rho' = -d<q>/dtheta, theta' = d<q>/drho on Sigma.  The
    orbit is launched `offset` along the unstable eigenvector and
    truncated when it re-enters the linearization zone; both tails are
    added via the linearized flow.
    """
    from scipy.integrate import solve_ivp

    report = classify_critical_points(rf)
    saddle = None
    for pt in report.points:
        if pt.kind in (PointKind.CrossingCf, PointKind.CrossingCb) \
                and pt.is_saddle:
            saddle = pt
            break
    if saddle is None:
        raise NoLoop("no crossing saddle for these parameters")
    r_s, t_s = saddle.locations[0]
    f_c = float(f(r_s, t_s))

    eps = 1e-7
    H = np.empty((2, 2))
    def grad_at(x):
        return np.array(rf.grad(x[0], x[1]))
    x_s = np.array([r_s, t_s])
    for j, dx in enumerate(np.eye(2) * eps):
        H[:, j] = (grad_at(x_s + dx) - grad_at(x_s - dx)) / (2 * eps)
    # linearized field J H with J = [[0, -1], [1, 0]]
    A = np.array([[-H[1, 0], -H[1, 1]], [H[0, 0], H[0, 1]]])
    evals, evecs = np.linalg.eig(A)
    if np.max(evals.real) <= 1e-10:
        raise NoLoop("linearization has no unstable direction")
    iu = int(np.argmax(evals.real))
    lam = float(evals[iu].real)
    v = np.real(evecs[:, iu])
    v /= np.linalg.norm(v)
    want_left = loop is Loop.LeftLoop
    drift_left = v[0] < 0 if abs(v[0]) > 1e-12 else None
    if drift_left is None:
        # unstable direction purely in theta: sides by theta instead
        drift_left = v[1] < 0
    if drift_left != want_left:
        v = -v

    def rhs(t, s):
        gr, gt = rf.grad(s[0], s[1])
        return [-gt, gr, float(f(s[0], s[1])) - f_c]

    x0 = x_s + offset * v
    # the returning orbit misses the saddle by O(offset) manifold error,
    # observed ~1e-6; capture well above that, still deep in the linear zone
    capture = 1e-4

    def back_home(t, s):
        return np.hypot(s[0] - r_s,
                        (s[1] - t_s + np.pi) % (2 * np.pi) - np.pi) - capture
    back_home.terminal = True
    back_home.direction = -1.0

    sol = solve_ivp(rhs, (0.0, t_max), [x0[0], x0[1], 0.0],
                    rtol=1e-11, atol=1e-13, events=back_home,
                    dense_output=False, max_step=1.0, first_step=1e-6)
    if not sol.t_events[0].size:
        raise NoLoop("separatrix did not return to the saddle")
    integral = float(sol.y[2, -1])

    # tail corrections by the linearized flow: f - f_c ~ C e^{k lam t}
    def tail(x_near):
        f1 = float(f(*x_near)) - f_c
        mid = x_s + 0.5 * (np.asarray(x_near) - x_s)
        f2 = float(f(*mid)) - f_c
        if f1 == 0.0 or f2 == 0.0 or f1 * f2 <= 0:
            return 0.0
        k = max(np.log2(abs(f1 / f2)), 0.5)
        return f1 / (k * lam)

    integral += tail(x0)
    x_end = np.array([sol.y[0, -1], sol.y[1, -1]])
    integral += tail(x_end)
    return integral
