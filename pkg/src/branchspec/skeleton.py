"""Modulus-balance curves, their crossings, and the skeleton/body.

Each curve Gamma_{j,k} is the locus |a_j| = |a_k|, written as
(Im mu) ln(1/|mu|) = F_{j,k}(mu) away from the origin and, inside the
|mu| = O(h) disk, as (Im mu) ln(1/h) = F_small(mu).  The two residual
functions are algebraically identical, so one Newton solve covers both;
the small form is simply better conditioned near mu = 0.
"""

import csv
import enum
import json
from dataclasses import dataclass, field

import numpy as np

from .errors import NoConvergence
from .quantization import SMALL_C1, SemiclassicalParams
from .specfun import LOG_SQRT_2PI, StirlingRegime, _remainder, log_gamma

WORK_DISK = 0.3     # |mu| radius where the curve machinery is trusted
Y_CLAMP = 0.45


class Side(enum.Enum):
    Upper = "upper"
    Lower = "lower"


@dataclass
class ImplicitCurveProblem:
    """y ln(1/|x+iy|) = F(x+iy) with F real, uniformly Lipschitz."""

    F: callable
    side: Side = Side.Upper


def mu_h_norm(x, h):
    """<x>_h = sqrt(h^2 + |x|^2)."""
    return np.sqrt(h * h + np.abs(x) ** 2)


def _solve_scalar(F, x, h=1e-3, tol_scale=1e-12, max_iter=60):
    """Damped Newton in y for y*ln(1/|x+iy|) = F(x+iy)."""
    x = float(x)
    f0 = float(F(complex(x, 0.0)))
    ax = abs(x)
    if ax > 0 and abs(f0) <= ax * np.log(1.0 / ax):
        y = f0 / np.log(1.0 / ax)                      # regularized seed
    elif f0 == 0.0:
        y = 0.0
    else:
        z = abs(f0)
        bigz = np.log(1.0 / z)
        y = np.sign(f0) * z / (bigz + np.log(bigz))    # Y = Z + ln Z seed
    tol = tol_scale * max(1.0, abs(f0))
    for _ in range(max_iter):
        mu = complex(x, y)
        amu = abs(mu)
        if amu == 0.0:
            amu = 1e-300
        L = np.log(1.0 / amu)
        r = y * L - float(F(mu))
        if abs(r) <= tol:
            return y
        dy = max(1e-9, 1e-6 * mu_h_norm(x, h))
        rp = (y + dy) * np.log(1.0 / abs(complex(x, y + dy))) \
            - float(F(complex(x, y + dy)))
        rm = (y - dy) * np.log(1.0 / abs(complex(x, y - dy))) \
            - float(F(complex(x, y - dy)))
        drdy = (rp - rm) / (2 * dy)
        step = r / drdy
        cap = 0.5 * max(abs(y), mu_h_norm(x, h))
        if abs(step) > cap:
            step = np.sign(step) * cap
        y = float(np.clip(y - step, -Y_CLAMP, Y_CLAMP))
    raise NoConvergence(f"curve solve failed at x={x}", last=y, residual=r)


def solve_curve(prob, x, h=1e-3):
    """Solve the implicit curve problem at abscissa x (Appendix-B form)."""
    return _solve_scalar(prob.F, x, h=h)


# Gamma_{j,k} right sides.  T_large excludes X; the small form uses
# T_small = T_large + (pi/2) Re mu and the exact Gamma-based X.
_T_LARGE = {
    "1,2": lambda s12, s34, x: s34,
    "3,4+": lambda s12, s34, x: s34,
    "1,3": lambda s12, s34, x: s12,
    "2,4+": lambda s12, s34, x: s12,
    "1,4+": lambda s12, s34, x: 0.5 * (s12 + s34),
    "3,4-": lambda s12, s34, x: s34 - 2 * np.pi * x,
    "2,4-": lambda s12, s34, x: s12 - 2 * np.pi * x,
    "1,4-": lambda s12, s34, x: 0.5 * (s12 + s34) - np.pi * x,
}

PAIRS = tuple(_T_LARGE)


def curve_residual(pair, mu, p, am):
    """(Im mu) ln(1/|mu|) - F_pair(mu), vectorized; the defining function.

    Uses the exact remainder form for <mu>_h > C1 h and the exact
    log-Gamma form inside; the two agree identically.
    """
    mu = np.asarray(mu, dtype=complex)
    h = p.h
    x, y = mu.real, mu.imag
    s12 = np.imag(am.S12(mu))
    s34 = np.imag(am.S34(mu))
    t = _T_LARGE[pair](s12, s34, x)
    small = mu_h_norm(x, h) <= SMALL_C1 * h
    out = np.empty(mu.shape if mu.shape else (1,), dtype=float)
    mu1 = np.atleast_1d(mu)
    t1 = np.atleast_1d(t)
    x1, y1 = mu1.real, mu1.imag
    small = np.atleast_1d(small)
    if np.any(~small):
        m = mu1[~small]
        rem = _remainder(m, h, StirlingRegime.MinusBranch)
        Y = m.real * np.angle(-1j * m) - m.imag + h * np.real(rem)
        X = np.pi / 2 * m.real + Y
        out[~small] = m.imag * np.log(1.0 / np.abs(m)) - (t1[~small] + X)
    if np.any(small):
        m = mu1[small]
        lg = np.real(log_gamma(0.5 - 1j * m / h)) - LOG_SQRT_2PI
        xs = h * lg
        out[small] = m.imag * np.log(1.0 / h) \
            - (t1[small] + np.pi / 2 * m.real + xs)
    return float(out[0]) if mu.shape == () else out.reshape(mu.shape)


def _trace_vec(pair, xs, p, am, tol=1e-12, max_iter=80):
    """Vectorized Newton over all abscissas at once; returns ys, ok mask."""
    xs = np.asarray(xs, dtype=float)
    h = p.h
    ys = np.zeros_like(xs)
    f0 = curve_residual(pair, xs + 0j, p, am)
    # residual at y=0 is -F(x); seed per the two Appendix-B regimes
    F0 = -f0
    ax = np.abs(xs)
    with np.errstate(divide="ignore", invalid="ignore"):
        lx = np.log(1.0 / np.maximum(ax, 1e-300))
        reg = np.abs(F0) <= ax * lx
        ys = np.where(reg, F0 / np.where(lx > 0, lx, 1.0), ys)
        z = np.abs(F0)
        bigz = np.log(1.0 / np.maximum(z, 1e-300))
        alt = np.sign(F0) * z / np.maximum(bigz + np.log(np.maximum(bigz, 2.0)), 1.0)
        ys = np.where(~reg & (z > 0), alt, ys)
    active = np.ones(xs.shape, dtype=bool)
    for _ in range(max_iter):
        idx = np.flatnonzero(active)
        if len(idx) == 0:
            break
        xa, ya = xs[idx], ys[idx]
        r = curve_residual(pair, xa + 1j * ya, p, am)
        done = np.abs(r) <= tol
        active[idx[done]] = False
        idx = idx[~done]
        if len(idx) == 0:
            break
        xa, ya, r = xa[~done], ya[~done], r[~done]
        dy = np.maximum(1e-9, 1e-6 * mu_h_norm(xa, h))
        rp = curve_residual(pair, xa + 1j * (ya + dy), p, am)
        rm = curve_residual(pair, xa + 1j * (ya - dy), p, am)
        step = r * (2 * dy) / (rp - rm)
        cap = 0.5 * np.maximum(np.abs(ya), mu_h_norm(xa, h))
        step = np.clip(step, -cap, cap)
        ys[idx] = np.clip(ya - step, -Y_CLAMP, Y_CLAMP)
    ok = ~active
    return ys, ok


def default_steps(p, x_lo, x_hi, refine_near=(), refine_factor=4.0):
    """Adaptive abscissas with step h/(4 ln(1/<x>_h)), refined x4 near
    the points in refine_near (within 10 coarse steps)."""
    h = p.h
    xs = [x_lo]
    while xs[-1] < x_hi:
        x = xs[-1]
        step = h / (4.0 * np.log(1.0 / mu_h_norm(x, h)))
        if any(abs(x - c) < 10 * step for c in refine_near):
            step /= refine_factor
        xs.append(x + step)
    xs[-1] = x_hi
    return np.array(xs)


@dataclass
class SkeletonCurve:
    """Samples of one Gamma_{j,k}: y = gamma(x) with per-sample regime."""

    pair: str
    xs: np.ndarray
    ys: np.ndarray
    regimes: np.ndarray  # "small" / "large" strings
    gaps: list = field(default_factory=list)

    def interp(self, x):
        return np.interp(x, self.xs, self.ys)

    def covers(self, x):
        return (x >= self.xs[0]) & (x <= self.xs[-1])


def trace_gamma(pair, p, am, x_range, step_rule=None, refine_near=()):
    """Trace Gamma_pair over x_range = (x_lo, x_hi).

    Samples that fail to converge are dropped and recorded in .gaps.
    """
    x_lo, x_hi = x_range
    if pair.endswith("4+") and x_lo < -SMALL_C1 * p.h:
        x_lo = -SMALL_C1 * p.h
    if pair.endswith("4-") and x_hi > SMALL_C1 * p.h:
        x_hi = SMALL_C1 * p.h
    if x_hi <= x_lo:
        raise ValueError(f"empty x-range for pair {pair}")
    if step_rule is None:
        xs = default_steps(p, x_lo, x_hi, refine_near=refine_near)
    else:
        xs = [x_lo]
        while xs[-1] < x_hi:
            xs.append(xs[-1] + step_rule(xs[-1]))
        xs[-1] = x_hi
        xs = np.array(xs)
    ys, ok = _trace_vec(pair, xs, p, am)
    # clip samples that drift into the forbidden cone of the large-regime
    # representation (near the negative imaginary axis); gaps are
    # recorded, never interpolated across
    mu = xs + 1j * ys
    small = mu_h_norm(xs, p.h) <= SMALL_C1 * p.h
    from .specfun import _angdist
    forbidden = ~small & (_angdist(np.angle(mu), -np.pi / 2) < 1.0 / 8.0)
    ok &= ~forbidden
    gaps = [float(x) for x in xs[~ok]]
    xs, ys = xs[ok], ys[ok]
    regimes = np.where(mu_h_norm(xs, p.h) <= SMALL_C1 * p.h, "small", "large")
    return SkeletonCurve(pair=pair, xs=xs, ys=ys, regimes=regimes, gaps=gaps)


def _curve_y_at(pair, x, p, am):
    """y with (x, y) on Gamma_pair, via the shared residual function."""
    def neg_F(m):
        # solve_scalar expects the y ln(1/|mu|) = F form; build F from the
        # residual so both regimes are covered transparently
        return m.imag * np.log(1.0 / max(abs(m), 1e-300)) \
            - curve_residual(pair, m, p, am)
    return _solve_scalar(neg_F, x, h=p.h)


def find_crossings(p, am, x_max=WORK_DISK - 0.02):
    """Crossing points mu_A, mu_B of Gamma_{1,4-} with the lines
    A: -2 pi Re mu = Im S12 - Im S34 and B: the sign-swapped line.
    Returns None for a crossing hidden outside the working range."""
    curve = trace_gamma("1,4-", p, am, (-x_max, x_max))
    mu = curve.xs + 1j * curve.ys

    def crossing(sign):
        vals = -2 * np.pi * curve.xs - sign * (
            np.imag(am.S12(mu)) - np.imag(am.S34(mu)))
        exact = np.flatnonzero(vals == 0.0)
        if len(exact):
            i = exact[0]
            return complex(curve.xs[i], curve.ys[i])
        idx = np.flatnonzero(np.diff(np.sign(vals)) != 0)
        if len(idx) == 0:
            return None
        i = idx[0]
        lo, hi = float(curve.xs[i]), float(curve.xs[i + 1])

        def line_val(x):
            y = _curve_y_at("1,4-", x, p, am)
            m = complex(x, y)
            return (-2 * np.pi * x
                    - sign * (np.imag(am.S12(m)) - np.imag(am.S34(m))), y)

        flo, _ = line_val(lo)
        y_mid = None
        for _ in range(60):
            mid = 0.5 * (lo + hi)
            fmid, y_mid = line_val(mid)
            if np.sign(fmid) == np.sign(flo):
                lo, flo = mid, fmid
            else:
                hi = mid
        x_star = 0.5 * (lo + hi)
        return complex(x_star, _curve_y_at("1,4-", x_star, p, am))

    return crossing(+1.0), crossing(-1.0)


@dataclass
class CurvePiece:
    label: str
    xs: np.ndarray
    ys: np.ndarray


@dataclass
class Skeleton:
    s_prime: list
    gamma_vertical: tuple | None   # (y_lo, y_hi) on the imaginary axis
    diamonds: list                 # (center imag part, half-width)
    mu_A: complex | None
    mu_B: complex | None
    body_constant: float
    h: float

    def _covering(self, x):
        # tolerate one step of slack at piece endpoints (pieces start a
        # hair off the imaginary axis)
        slack = 0.5 * self.h
        return [np.interp(np.clip(x, pc.xs[0], pc.xs[-1]), pc.xs, pc.ys)
                for pc in self.s_prime
                if pc.xs[0] - slack <= x <= pc.xs[-1] + slack]

    def lower(self, x):
        """Lower envelope of S' at abscissa x (nan when uncovered)."""
        ys = self._covering(x)
        return min(ys) if ys else np.nan

    def upper(self, x):
        ys = self._covering(x)
        return max(ys) if ys else np.nan

    def all_samples(self):
        xs = np.concatenate([pc.xs for pc in self.s_prime])
        ys = np.concatenate([pc.ys for pc in self.s_prime])
        return xs, ys


@dataclass
class Body:
    """Thickened skeleton plus B_v, B_e and the exceptional box."""

    skeleton: Skeleton
    C: float
    p: SemiclassicalParams
    box_constant: float = 1.0

    def _radius(self, xs, ys):
        return self.C * self.p.h / np.log(1.0 / mu_h_norm(xs + 1j * ys, self.p.h))

    def contains(self, mu):
        """Membership in the body: discs around S', the below-S' strip
        |Re mu| < C h, and B_v, B_e; monotone in C."""
        mu = complex(mu)
        xs, ys = self.skeleton.all_samples()
        d2 = (xs - mu.real) ** 2 + (ys - mu.imag) ** 2
        rad = self._radius(xs, ys)
        if np.any(d2 <= rad ** 2):
            return True
        if abs(mu.real) < self.C * self.p.h:
            low = self.skeleton.lower(mu.real)
            if not np.isnan(low) and mu.imag <= low:
                return True
        return self.in_B_v(mu) or self.in_B_e(mu)

    def in_B_e(self, mu):
        mu = complex(mu)
        if abs(mu.real) >= self.p.h:
            return False
        low = self.skeleton.lower(mu.real)
        if np.isnan(low) or mu.imag > low:
            return False
        n = mu_h_norm(mu, self.p.h)
        width = self.C * self.p.h * np.log(np.log(1.0 / n)) / np.log(1.0 / n) \
            if np.log(1.0 / n) > np.e else self.C * self.p.h
        return (low - mu.imag) <= width

    def in_B_v(self, mu):
        mu = complex(mu)
        if self.skeleton.gamma_vertical is None:
            return False
        y_lo, y_hi = self.skeleton.gamma_vertical
        for c, w in self.skeleton.diamonds:
            if abs(mu.real) + abs(mu.imag - c) <= w:
                return True
        return abs(mu.real) <= 1e-12 and y_lo <= mu.imag <= y_hi

    def exceptional_box(self):
        """Half-widths (a, b) of the box around mu = 0; (0, 0) if eps = 0."""
        w = self.p.width
        if w <= 0:
            return 0.0, 0.0
        a = self.box_constant * w
        b = a / abs(np.log(w))
        return a, b

    def in_exceptional_box(self, mu):
        a, b = self.exceptional_box()
        mu = complex(mu)
        return abs(mu.real) <= a and abs(mu.imag) <= b


def assemble(p, am, C_body=10.0, x_max=WORK_DISK - 0.02):
    """Assemble the Case-1 skeleton S' (both half-planes), the vertical
    segment with its diamonds, and the body."""
    eps_x = 1e-6 * p.h
    # right half-plane: upper = max(g12, g13), lower = min(g24+, g34+)
    g12 = trace_gamma("1,2", p, am, (eps_x, x_max))
    g13 = trace_gamma("1,3", p, am, (eps_x, x_max))
    g24p = trace_gamma("2,4+", p, am, (eps_x, x_max))
    g34p = trace_gamma("3,4+", p, am, (eps_x, x_max))
    xs_r = g12.xs
    up = np.maximum(g12.ys, np.interp(xs_r, g13.xs, g13.ys))
    lo = np.minimum(np.interp(xs_r, g24p.xs, g24p.ys),
                    np.interp(xs_r, g34p.xs, g34p.ys))
    pieces = [CurvePiece("right_upper", xs_r, up),
              CurvePiece("right_lower", xs_r, lo)]

    mu_A, mu_B = find_crossings(p, am, x_max=x_max)
    # left half-plane: follow the branch whose crossing has Re <= 0;
    # with both crossings to the right, gamma_{1,4-} covers the whole half
    use_A = True
    xc = 0.0
    if mu_A is not None and mu_A.real <= 0:
        xc = mu_A.real
    elif mu_B is not None and mu_B.real <= 0:
        use_A = False
        xc = mu_B.real
    g14m = trace_gamma("1,4-", p, am, (-x_max, min(xc, -eps_x)))
    pieces.append(CurvePiece("left_1,4-", g14m.xs, g14m.ys))
    if xc < -eps_x:
        upper_pair = "1,3" if use_A else "1,2"
        lower_pair = "3,4-" if use_A else "2,4-"
        gu = trace_gamma(upper_pair, p, am, (xc, -eps_x))
        gl = trace_gamma(lower_pair, p, am, (xc, -eps_x))
        pieces.append(CurvePiece("left_upper_" + upper_pair, gu.xs, gu.ys))
        pieces.append(CurvePiece("left_lower_" + lower_pair, gl.xs, gl.ys))

    # vertical segment on the positive imaginary axis up to the lower
    # right-half part of S'
    y_top = float(lo[0])
    gamma_vertical = None
    diamonds = []
    if y_top > 0:
        gamma_vertical = (0.0, y_top)
        k = 0
        while (k + 0.5) * p.h <= y_top:
            c = (k + 0.5) * p.h
            w = C_body * p.h / np.log(1.0 / mu_h_norm(1j * c, p.h))
            diamonds.append((c, w))
            k += 1

    sk = Skeleton(s_prime=pieces, gamma_vertical=gamma_vertical,
                  diamonds=diamonds, mu_A=mu_A, mu_B=mu_B,
                  body_constant=C_body, h=p.h)
    return sk, Body(skeleton=sk, C=C_body, p=p)


def assemble_case2(p, am, C_body=10.0, x_max=WORK_DISK - 0.02):
    """Case-2 skeleton via the conjugation symmetry: the case-2 curves of
    (S12, S34) are the reflections of the case-1 curves of the mirrored
    model with conjugated coefficients."""
    sk1, _ = assemble(p, am.mirrored(), C_body=C_body, x_max=x_max)
    pieces = [CurvePiece(pc.label, pc.xs, -pc.ys) for pc in sk1.s_prime]
    gv = None
    if sk1.gamma_vertical is not None:
        gv = (-sk1.gamma_vertical[1], -sk1.gamma_vertical[0])
    diamonds = [(-c, w) for c, w in sk1.diamonds]
    refl = lambda z: None if z is None else np.conj(z)
    sk = Skeleton(s_prime=pieces, gamma_vertical=gv, diamonds=diamonds,
                  mu_A=refl(sk1.mu_A), mu_B=refl(sk1.mu_B),
                  body_constant=C_body, h=p.h)
    return sk, Body(skeleton=sk, C=C_body, p=p)


def export_csv(path, curves):
    """CSV with columns curve_label,x,y,regime."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["curve_label", "x", "y", "regime"])
        for c in curves:
            regs = c.regimes if hasattr(c, "regimes") else ["assembled"] * len(c.xs)
            label = c.pair if hasattr(c, "pair") else c.label
            for x, y, r in zip(c.xs, c.ys, regs):
                w.writerow([label, repr(float(x)), repr(float(y)), r])


def export_json(path, skeleton, body, extra=None):
    a, b = body.exceptional_box()
    doc = {
        "schema_version": 1,
        "body_constant": skeleton.body_constant,
        "h": skeleton.h,
        "mu_A": None if skeleton.mu_A is None else
            [skeleton.mu_A.real, skeleton.mu_A.imag],
        "mu_B": None if skeleton.mu_B is None else
            [skeleton.mu_B.real, skeleton.mu_B.imag],
        "gamma_vertical": skeleton.gamma_vertical,
        "diamonds": skeleton.diamonds,
        "exceptional_box": [a, b],
        "pieces": [{"label": pc.label,
                    "x_range": [float(pc.xs[0]), float(pc.xs[-1])],
                    "n_samples": int(len(pc.xs))}
                   for pc in skeleton.s_prime],
    }
    if extra:
        doc.update(extra)
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=1)
    return doc
