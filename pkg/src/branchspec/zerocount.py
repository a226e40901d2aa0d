"""Zero location and counting by the argument principle.

Winding numbers come from adaptive phase tracking (accumulated arg
increments kept below pi/2 per step), which yields exact integers
without numerical quadrature of f'/f.  Functions handed in here must be
vectorized over complex arrays; for the quantization function use the
normalized G (value of eval_G), whose modulus is the ratio of |G| to the
largest term.
"""

import csv
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    BijectionFailure,
    CellBudgetExceeded,
    NotAdmissible,
    OnContourZero,
)

PHASE_CAP = np.pi / 2


def _as_vectorized(f):
    def fv(z):
        return np.asarray(f(np.asarray(z, dtype=complex)), dtype=complex)
    return fv


@dataclass
class Contour:
    """Closed positively oriented simple polyline."""

    vertices: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.vertices, dtype=complex)
        if abs(v[0] - v[-1]) < 1e-300:
            v = v[:-1]
        if len(v) < 3:
            raise ValueError("contour needs at least 3 distinct vertices")
        if _signed_area(v) < 0:
            v = v[::-1]
        if not _is_simple(v):
            raise ValueError("contour is self-intersecting")
        self.vertices = v

    @classmethod
    def rectangle(cls, re0, re1, im0, im1):
        return cls(np.array([re0 + 1j * im0, re1 + 1j * im0,
                             re1 + 1j * im1, re0 + 1j * im1]))

    def edges(self):
        v = self.vertices
        return list(zip(v, np.roll(v, -1)))

    def expanded(self, delta):
        """Vertices pushed radially outward from the centroid by delta."""
        c = np.mean(self.vertices)
        d = self.vertices - c
        return Contour(c + d * (1.0 + delta / np.abs(d)))


def _signed_area(v):
    x, y = v.real, v.imag
    return 0.5 * np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y)


def _segs_intersect(a, b, c, d):
    def cross(o, p, q):
        return (p - o).real * (q - o).imag - (p - o).imag * (q - o).real
    d1, d2 = cross(c, d, a), cross(c, d, b)
    d3, d4 = cross(a, b, c), cross(a, b, d)
    return ((d1 > 0) != (d2 > 0)) and ((d3 > 0) != (d4 > 0))


def _is_simple(v):
    n = len(v)
    for i in range(n):
        a, b = v[i], v[(i + 1) % n]
        for j in range(i + 1, n):
            if j == i or (j + 1) % n == i or (i + 1) % n == j:
                continue
            c, d = v[j], v[(j + 1) % n]
            if _segs_intersect(a, b, c, d):
                return False
    return True


def _wrapped_increments(vals):
    d = np.diff(np.angle(vals))
    return (d + np.pi) % (2 * np.pi) - np.pi


def _phase_increments(f, za, zb, n0=32, max_depth=26):
    """Sum of arg increments of f along [za, zb].

    Refines until every wrapped step is below pi/2 AND the total is
    stable under one full extra bisection level; wrapped increments
    alone can alias a fast 2 pi k + small rotation into a small step.
    Returns (total, min |f| seen).
    """
    fv = f
    pts = za + (zb - za) * np.linspace(0.0, 1.0, n0 + 1)
    vals = fv(pts)
    for _ in range(max_depth):
        d = _wrapped_increments(vals)
        bad = np.abs(d) >= PHASE_CAP
        if np.any(bad):
            mids = 0.5 * (pts[:-1][bad] + pts[1:][bad])
            fm = fv(mids)
            pts = np.insert(pts, np.flatnonzero(bad) + 1, mids)
            vals = np.insert(vals, np.flatnonzero(bad) + 1, fm)
            continue
        # anti-aliasing verification: bisect everything once
        mids = 0.5 * (pts[:-1] + pts[1:])
        fm = fv(mids)
        pts2 = np.empty(len(pts) + len(mids), dtype=complex)
        vals2 = np.empty_like(pts2)
        pts2[0::2], pts2[1::2] = pts, mids
        vals2[0::2], vals2[1::2] = vals, fm
        total_before = float(np.sum(d))
        total_after = float(np.sum(_wrapped_increments(vals2)))
        pts, vals = pts2, vals2
        if abs(total_after - total_before) < 1e-9 \
                and not np.any(np.abs(_wrapped_increments(vals)) >= PHASE_CAP):
            return total_after, float(np.min(np.abs(vals)))
    raise OnContourZero("phase tracking did not stabilize (zero on path?)")


def _winding_once(f, contour):
    total = 0.0
    min_abs = np.inf
    max_abs = 0.0
    for za, zb in contour.edges():
        t, m = _phase_increments(f, za, zb)
        total += t
        min_abs = min(min_abs, m)
        v = np.abs(f(np.array([za])))[0]
        max_abs = max(max_abs, v)
    return total / (2 * np.pi), min_abs, max_abs


def winding_count(f, contour, h=1e-3, retries=3):
    """Exact number of zeros inside the contour by phase tracking.

    The count must be stable under one extra refinement level; contours
    running through a zero are pushed outward by h/100 up to `retries`
    times before OnContourZero is raised.
    """
    fv = _as_vectorized(f)
    c = contour
    for attempt in range(retries + 1):
        try:
            w, min_abs, max_abs = _winding_once(fv, c)
        except OnContourZero:
            if attempt == retries:
                raise
            c = c.expanded(h / 100.0)
            continue
        if min_abs <= 1e-12 * max(max_abs, 1.0):
            if attempt == retries:
                raise OnContourZero("contour passes through a zero")
            c = c.expanded(h / 100.0)
            continue
        n = int(np.round(w))
        if abs(w - n) > 0.25:
            if attempt == retries:
                raise OnContourZero(f"unstable winding {w}")
            c = c.expanded(h / 100.0)
            continue
        return n
    raise OnContourZero("winding failed")


@dataclass
class Zero:
    location: complex
    residual: float
    simple: bool


@dataclass
class ZeroSet:
    zeros: list
    method: str

    def locations(self):
        return np.array([z.location for z in self.zeros])

    def __len__(self):
        return len(self.zeros)


def _newton_polish(f, z0, h, tol=1e-9, max_iter=50):
    """Newton with central-difference derivative, step h*1e-3."""
    fv = _as_vectorized(f)
    z = complex(z0)
    delta = h * 1e-3
    fz = complex(fv(np.array([z]))[0])
    for _ in range(max_iter):
        if abs(fz) <= 0.0:
            return z, abs(fz)
        d = complex((fv(np.array([z + delta])) - fv(np.array([z - delta])))[0]) \
            / (2 * delta)
        if d == 0:
            break
        step = fz / d
        if abs(step) > h:
            step *= h / abs(step)
        z_new = z - step
        f_new = complex(fv(np.array([z_new]))[0])
        if abs(f_new) >= abs(fz) and abs(fz) <= tol:
            return z, abs(fz)
        z, fz = z_new, f_new
        if abs(step) < 1e-17 * max(1.0, abs(z)):
            break
    return z, abs(fz)


def locate_zeros(f, region, p, cell_budget=100_000, residual_tol=1e-9):
    """All zeros of f in a rectangle by quadrisection + Newton polish.

    region: (re0, re1, im0, im1).  f must be normalized so that |f| = 1
    is the local term scale (eval_G values qualify); polished zeros
    satisfy |f| <= residual_tol.  Child winding counts must add up to
    the parent count at every subdivision.
    """
    fv = _as_vectorized(f)
    h = p.h
    re0, re1, im0, im1 = region
    min_cell = h / 50.0
    zeros = []
    state = {"budget": cell_budget}

    def count(cell):
        state["budget"] -= 1
        if state["budget"] < 0:
            raise CellBudgetExceeded("cell budget exceeded",
                                     partial=ZeroSet(zeros, "Winding"))
        a0, a1, b0, b1 = cell
        return winding_count(fv, Contour.rectangle(a0, a1, b0, b1), h=h)

    def recurse(cell, n):
        a0, a1, b0, b1 = cell
        if n == 0:
            return
        if max(a1 - a0, b1 - b0) <= min_cell:
            z0 = complex(0.5 * (a0 + a1), 0.5 * (b0 + b1))
            z, res = _newton_polish(fv, z0, h, tol=residual_tol)
            zeros.append(Zero(location=z, residual=res, simple=(n == 1)))
            return
        am, bm = 0.5 * (a0 + a1), 0.5 * (b0 + b1)
        kids = [(a0, am, b0, bm), (am, a1, b0, bm),
                (a0, am, bm, b1), (am, a1, bm, b1)]
        kid_counts = [count(k) for k in kids]
        if sum(kid_counts) != n:
            # a zero sits on the shared boundary; jitter the split point
            am += 0.013 * (a1 - a0)
            bm += 0.017 * (b1 - b0)
            kids = [(a0, am, b0, bm), (am, a1, b0, bm),
                    (a0, am, bm, b1), (am, a1, bm, b1)]
            kid_counts = [count(k) for k in kids]
        assert sum(kid_counts) == n, \
            f"count {n} not conserved: children {kid_counts} in {cell}"
        for k, kn in zip(kids, kid_counts):
            recurse(k, kn)

    root = (re0, re1, im0, im1)
    recurse(root, count(root))
    # dedup: zeros closer than the polish scale are one zero
    uniq = []
    for z in sorted(zeros, key=lambda w: w.residual):
        if all(abs(z.location - u.location) > 1e-3 * h for u in uniq):
            uniq.append(z)
    uniq = [z for z in uniq if z.residual <= residual_tol]
    return ZeroSet(zeros=uniq, method="Winding")


def grid_newton_count(f, region, p, refine=6):
    """Independent zero counter: dense |f| grid minima + Newton polish.

    Used as the oracle against winding_count; shares no code path with
    the phase tracking.
    """
    fv = _as_vectorized(f)
    re0, re1, im0, im1 = region
    h = p.h
    nx = max(40, int((re1 - re0) / (h / refine)))
    ny = max(40, int((im1 - im0) / (h / refine)))
    nx, ny = min(nx, 1200), min(ny, 1200)
    # pad the scan beyond the rectangle so boundary-hugging zeros still
    # produce interior grid minima; roots are filtered to the rectangle
    padx = 2 * (re1 - re0) / nx
    pady = 2 * (im1 - im0) / ny
    xs = np.linspace(re0 - padx, re1 + padx, nx)
    ys = np.linspace(im0 - pady, im1 + pady, ny)
    X, Y = np.meshgrid(xs, ys)
    Z = X + 1j * Y
    A = np.abs(fv(Z.ravel())).reshape(Z.shape)
    # local minima of |f|
    interior = A[1:-1, 1:-1]
    neigh = np.minimum.reduce([A[:-2, 1:-1], A[2:, 1:-1],
                               A[1:-1, :-2], A[1:-1, 2:]])
    mask = interior <= neigh
    cand = Z[1:-1, 1:-1][mask]
    vals = interior[mask]
    cand = cand[vals < 0.5]
    roots = []
    outside = []

    def try_seed(z0):
        z, res = _newton_polish(fv, z0, h)
        if res > 1e-9:
            return
        inside = re0 <= z.real <= re1 and im0 <= z.imag <= im1
        bucket = roots if inside else outside
        if all(abs(z - r) > 1e-3 * h for r in roots) and \
                all(abs(z - r) > 1e-3 * h for r in outside):
            bucket.append(z)

    for z0 in cand:
        try_seed(z0)
    # near-twin zeros share one grid basin, and a basin minimum can drain
    # to a zero just outside the rectangle; reseed on circles around every
    # converged root (inside or out) to split/recover the partners
    cell = max((re1 - re0) / nx, (im1 - im0) / ny)
    for r in list(roots) + list(outside):
        for rad in (cell, 3 * cell):
            for k in range(8):
                try_seed(r + rad * np.exp(2j * np.pi * k / 8))
    return len(roots), np.array(roots)


@dataclass
class AdmissibleCurve:
    """Piecewise-C1 path split into dominance segments J and short
    crossing intervals I, for the dominance phase-sum count.

    path: (n,) complex samples, ordered;
    segments: list of (kind, i0, i1, label) with kind "J" or "I",
    label the dominant term on J segments (None on I), indices into path;
    touches_Be: per-I flags aligned with the I segments in order.
    """

    path: np.ndarray
    segments: list
    touches_Be: list = field(default_factory=list)

    def arc(self, i0, i1):
        seg = self.path[i0:i1 + 1]
        return float(np.sum(np.abs(np.diff(seg))))


def _check_admissible(curve, p, C=10.0):
    from .skeleton import mu_h_norm
    kinds = [s[0] for s in curve.segments]
    if kinds and (kinds[0] == "I" or kinds[-1] == "I"):
        raise NotAdmissible("endpoints must lie outside the I intervals")
    it = 0
    for kind, i0, i1, label in curve.segments:
        if kind != "I":
            continue
        length = curve.arc(i0, i1)
        mid = curve.path[(i0 + i1) // 2]
        n = mu_h_norm(mid, p.h)
        ln = np.log(1.0 / n)
        touches = curve.touches_Be[it] if it < len(curve.touches_Be) else False
        it += 1
        cap = C * p.h * (np.log(max(ln, np.e)) / ln if touches else 1.0 / ln)
        if length > cap:
            raise NotAdmissible(
                f"I segment of length {length:.3g} exceeds cap {cap:.3g}")


class GProvider:
    """Bundles (params, actions): term sets and normalized G values."""

    def __init__(self, p, am):
        self.p = p
        self.am = am

    def __call__(self, mu):
        from .quantization import term_set
        return term_set(complex(mu), self.p, self.am)

    def normalized_G(self, z):
        from .quantization import eval_G
        vals, _ = eval_G(np.asarray(z, dtype=complex), self.p, self.am)
        return vals


def _combined_log(ts, l1, l2):
    a, b = ts.log_value(l1), ts.log_value(l2)
    m = max(a.real, b.real)
    return m + np.log(np.exp(a - m) + np.exp(b - m))


def phase_sum_count(curve, provider, C=10.0, dominance_slack=None):
    """Dominant-phase sum along an admissible curve vs the direct
    winding integral.

    provider: GProvider.  The estimate sums the real parts of the
    dominant-term phase differences phi = -i h log a_j over the J
    segments, substituting the combined log a4 (or a1 in case 2) when the
    dominant label is a 4+-/1+- pair; the direct count tracks arg G along
    the whole open curve.  Returns (estimate, direct, discrepancy).
    """
    p = provider.p
    _check_admissible(curve, p, C=C)
    if dominance_slack is None:
        dominance_slack = p.h * np.log(np.log(1.0 / p.h))

    def log_term(mu, label):
        ts = provider(mu)
        if label in ("4+", "4-") and "4+" in ts.labels:
            return _combined_log(ts, "4+", "4-")
        if label in ("1+", "1-") and "1+" in ts.labels:
            return _combined_log(ts, "1+", "1-")
        return ts.log_value(label)

    estimate = 0.0
    for kind, i0, i1, label in curve.segments:
        if kind != "J":
            continue
        idx = np.unique(np.linspace(i0, i1, 20).astype(int))
        for i in idx:
            ts = provider(curve.path[i])
            if label not in ts.labels:
                raise NotAdmissible(f"label {label} absent at {curve.path[i]}")
            r_dom = ts.rate(label)
            others = [t.rate for t in ts.terms if t.label != label]
            if r_dom < max(others) - dominance_slack:
                raise NotAdmissible(f"{label} not dominant at {curve.path[i]}")
        # phase difference via a continuity-tracked log along the segment
        seg = curve.path[i0:i1 + 1]
        logs = np.array([log_term(m, label) for m in seg])
        im = np.unwrap(logs.imag)
        # Re(phi(e) - phi(s))/(2 pi h) with phi = -i h log a: the real
        # part picks up h * (unwrapped arg change)
        estimate += (im[-1] - im[0]) / (2 * np.pi)

    gv = _as_vectorized(provider.normalized_G)
    total = 0.0
    for i in range(len(curve.path) - 1):
        t, _ = _phase_increments(gv, curve.path[i], curve.path[i + 1])
        total += t
    direct = total / (2 * np.pi)
    return float(estimate), float(direct), float(abs(estimate - direct))


def match_bijection(zeros, predicted, rate, strict=True):
    """Greedy nearest-neighbor bijection between two zero sets.

    rate(mu) bounds the allowed pair distance at mu; unmatched points or
    over-distance pairs raise BijectionFailure when strict.
    Returns a report dict.
    """
    za = list(np.asarray(zeros, dtype=complex))
    zb = list(np.asarray(predicted, dtype=complex))
    pairs = []
    ia = list(range(len(za)))
    ib = list(range(len(zb)))
    while ia and ib:
        best = None
        for i in ia:
            for j in ib:
                d = abs(za[i] - zb[j])
                if best is None or d < best[0]:
                    best = (d, i, j)
        d, i, j = best
        pairs.append((za[i], zb[j], d))
        ia.remove(i)
        ib.remove(j)
    unmatched_a = [za[i] for i in ia]
    unmatched_b = [zb[j] for j in ib]
    bad = [(a, b, d) for a, b, d in pairs
           if d > rate(0.5 * (a + b))]
    ok = not unmatched_a and not unmatched_b and not bad
    report = {
        "pairs": pairs,
        "unmatched_zeros": unmatched_a,
        "unmatched_predicted": unmatched_b,
        "violations": bad,
        "max_distance": max((d for _, _, d in pairs), default=0.0),
        "ok": ok,
    }
    if strict and not ok:
        raise BijectionFailure(
            f"{len(unmatched_a)}+{len(unmatched_b)} unmatched, "
            f"{len(bad)} over-distance pairs",
            unmatched_left=unmatched_a, unmatched_right=unmatched_b,
            bad_pairs=bad)
    return report


def export_zeros_csv(path, zeroset):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["re", "im", "residual", "method"])
        for z in zeroset.zeros:
            w.writerow([repr(z.location.real), repr(z.location.imag),
                        repr(z.residual), zeroset.method])
