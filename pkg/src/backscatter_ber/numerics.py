"""Special functions and adaptive quadrature.

Everything here is deterministic: the same inputs always produce
bit-identical outputs, because the panel/cell refinement schedule depends
only on computed values, never on timing or thread count.

Special functions are backed by scipy (cephes/CDFLIB); the test suite
pins them against independent series and quadrature oracles.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy import special, stats

from .errors import QuadratureFailureError

# Largest x for which I0(x) still fits in a double (I0(x) ~ e^x/sqrt(2 pi x)).
_I0_OVERFLOW_X = 713.0


def bessel_j0(x):
    """Bessel function of the first kind, order zero."""
    return special.j0(x)


def bessel_i0(x):
    """Modified Bessel function of the first kind, order zero.

    Raises OverflowError beyond the double range; use bessel_i0e for a
    scaled value that never overflows.
    """
    x = np.asarray(x, dtype=float)
    if np.any(x > _I0_OVERFLOW_X):
        raise OverflowError(
            "I0(x) overflows double precision for x > %g; "
            "use bessel_i0e(x) = exp(-x) I0(x) instead" % _I0_OVERFLOW_X
        )
    return special.i0(x)


def bessel_i0e(x):
    """Scaled modified Bessel function exp(-|x|) * I0(x)."""
    return special.i0e(x)


def marcum_q1(a, b):
    """First-order Marcum Q function Q1(a, b).

    Q1(a, b) = integral_b^inf t exp(-(t^2 + a^2)/2) I0(a t) dt, the
    complementary CDF of a noncentral chi-square with 2 degrees of
    freedom evaluated at b^2 with noncentrality a^2.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if np.any(a < 0) or np.any(b < 0):
        raise ValueError("marcum_q1 requires a >= 0 and b >= 0")
    nc = a * a
    out = np.where(
        nc > 0,
        stats.ncx2.sf(b * b, 2, np.where(nc > 0, nc, 1.0)),
        np.exp(-b * b / 2.0),
    )
    return out if out.ndim else float(out)


class QuadRule(enum.Enum):
    GAUSS_LEGENDRE = "gauss-legendre"
    ADAPTIVE_SIMPSON = "adaptive-simpson"


@dataclass(frozen=True)
class QuadratureSpec:
    """Tolerance and budget for the adaptive integrators."""

    rel_tol: float = 1e-8
    max_panels: int = 1_000_000
    rule: QuadRule = QuadRule.GAUSS_LEGENDRE

    def __post_init__(self):
        if not (0.0 < self.rel_tol <= 1e-2):
            raise ValueError("rel_tol must lie in (0, 1e-2]")
        if self.max_panels < 1:
            raise ValueError("max_panels must be >= 1")


# Node/weight pairs for the embedded high/low rules.  The error estimate
# per panel is |Q_high - Q_low|.
_GL_HI = leggauss(12)
_GL_LO = leggauss(6)
# Composite Simpson on 5 points vs plain Simpson on 3 points.
_SIMP_HI = (np.linspace(-1.0, 1.0, 5), np.array([1, 4, 2, 4, 1]) / 6.0)
_SIMP_LO = (np.linspace(-1.0, 1.0, 3), np.array([1, 4, 1]) / 3.0)

_EVAL_CHUNK = 32768  # cells per vectorized evaluation (memory cap)


def _rules(spec):
    if spec.rule is QuadRule.GAUSS_LEGENDRE:
        return _GL_HI, _GL_LO
    return _SIMP_HI, _SIMP_LO


def _map_semi_infinite(f, a):
    """Map integral over [a, inf) to s in [0, 1) via t = a + s/(1-s)."""

    def g(s):
        onems = 1.0 - s
        t = a + s / onems
        return f(t) / onems**2

    return g


def _panel_eval_1d(f, lo, hi, nodes, weights):
    half = (hi - lo) / 2.0
    mid = (hi + lo) / 2.0
    t = mid[:, None] + half[:, None] * nodes[None, :]
    vals = f(t)
    return half * (vals @ weights)


def integrate_1d(f, a, b, spec=None):
    """Adaptive panel integration of a vectorized callable over [a, b].

    b may be numpy.inf, in which case the domain is mapped to a finite
    interval through t = a + s/(1-s) first.  f must accept ndarray input
    and return values of the same shape.
    """
    spec = spec or QuadratureSpec()
    if math.isinf(b):
        f = _map_semi_infinite(f, a)
        a, b = 0.0, 1.0
    (nh, wh), (nl, wl) = _rules(spec)

    n0 = min(8, spec.max_panels)
    edges = np.linspace(a, b, n0 + 1)
    lo, hi = edges[:-1], edges[1:]
    q = _panel_eval_1d(f, lo, hi, nh, wh)
    e = np.abs(q - _panel_eval_1d(f, lo, hi, nl, wl))

    for _ in range(200):
        total, err = q.sum(), e.sum()
        if err <= spec.rel_tol * max(abs(total), np.finfo(float).tiny):
            return float(total)
        if len(q) >= spec.max_panels:
            break
        sel = e > spec.rel_tol * abs(total) / (2 * len(q))
        if not sel.any():
            k = max(1, len(e) // 4)
            sel = e >= np.partition(e, -k)[-k]
        mid = (lo[sel] + hi[sel]) / 2.0
        nlo = np.concatenate([lo[sel], mid])
        nhi = np.concatenate([mid, hi[sel]])
        nq = _panel_eval_1d(f, nlo, nhi, nh, wh)
        ne = np.abs(nq - _panel_eval_1d(f, nlo, nhi, nl, wl))
        lo = np.concatenate([lo[~sel], nlo])
        hi = np.concatenate([hi[~sel], nhi])
        q = np.concatenate([q[~sel], nq])
        e = np.concatenate([e[~sel], ne])

    raise QuadratureFailureError(
        "integrate_1d: tolerance %g not reached with %d panels"
        % (spec.rel_tol, len(q)),
        best_estimate=float(q.sum()),
        error_estimate=float(e.sum()),
    )


def _cells_eval_2d(f, cells, nodes, weights, xmap, ymap):
    """Integrate f over a batch of unit-square cells (C, 4) -> (C,)."""
    out = np.empty(len(cells))
    nw = len(nodes)
    for i in range(0, len(cells), _EVAL_CHUNK):
        c = cells[i : i + _EVAL_CHUNK]
        hx = (c[:, 1] - c[:, 0]) / 2.0
        hy = (c[:, 3] - c[:, 2]) / 2.0
        xs = c[:, 0, None] + hx[:, None] * (nodes[None, :] + 1.0)
        ys = c[:, 2, None] + hy[:, None] * (nodes[None, :] + 1.0)
        shape = (len(c), nw, nw)
        vals = f(
            np.broadcast_to(xmap(xs)[:, :, None], shape),
            np.broadcast_to(ymap(ys)[:, None, :], shape),
        )
        out[i : i + _EVAL_CHUNK] = hx * hy * np.einsum("i,j,cij->c", weights, weights, vals)
    return out


def integrate_2d(f, x_domain, y_domain, spec=None):
    """Adaptive tensor-product integration over a rectangle.

    The rectangle is normalized to the unit square internally, so
    refinement depth is independent of the domain's aspect ratio; sharp
    axis-aligned ridges (e.g. the aligned-AoA null of the array gain)
    refine without blowing up the cell count.  Cells whose error exceeds
    their share of the global budget are split four ways per wave.
    """
    spec = spec or QuadratureSpec()
    (x0, x1), (y0, y1) = x_domain, y_domain
    sx, sy = x1 - x0, y1 - y0
    xmap = lambda u: x0 + sx * u  # noqa: E731
    ymap = lambda v: y0 + sy * v  # noqa: E731
    (nh, wh), (nl, wl) = _rules(spec)

    n0 = 8
    g = np.linspace(0.0, 1.0, n0 + 1)
    cells = np.array(
        [(g[i], g[i + 1], g[j], g[j + 1]) for i in range(n0) for j in range(n0)]
    )
    q = _cells_eval_2d(f, cells, nh, wh, xmap, ymap)
    e = np.abs(q - _cells_eval_2d(f, cells, nl, wl, xmap, ymap))

    for _ in range(100):
        total, err = q.sum(), e.sum()
        scale = sx * sy
        if err <= spec.rel_tol * max(abs(total), np.finfo(float).tiny):
            return float(total * scale)
        if len(cells) >= spec.max_panels:
            break
        sel = e > spec.rel_tol * abs(total) / (2 * len(cells))
        if not sel.any():
            k = max(1, len(e) // 4)
            sel = e >= np.partition(e, -k)[-k]
        sc = cells[sel]
        mx = (sc[:, 0] + sc[:, 1]) / 2.0
        my = (sc[:, 2] + sc[:, 3]) / 2.0
        children = np.concatenate(
            [
                np.stack([cx0, cx1, cy0, cy1], axis=1)
                for cx0, cx1 in ((sc[:, 0], mx), (mx, sc[:, 1]))
                for cy0, cy1 in ((sc[:, 2], my), (my, sc[:, 3]))
            ]
        )
        cq = _cells_eval_2d(f, children, nh, wh, xmap, ymap)
        ce = np.abs(cq - _cells_eval_2d(f, children, nl, wl, xmap, ymap))
        cells = np.concatenate([cells[~sel], children])
        q = np.concatenate([q[~sel], cq])
        e = np.concatenate([e[~sel], ce])

    raise QuadratureFailureError(
        "integrate_2d: tolerance %g not reached with %d cells"
        % (spec.rel_tol, len(cells)),
        best_estimate=float(q.sum() * sx * sy),
        error_estimate=float(e.sum() * sx * sy),
    )


def bivariate_expsq_pdf(u, v, var0, var1, corr):
    """Joint density of (|Z0|^2, |Z1|^2) for jointly circular complex
    Gaussian (Z0, Z1) with E|Z0|^2 = var0, E|Z1|^2 = var1 and normalized
    correlation corr = E[Z0 Z1*]/sqrt(var0 var1) (real, in [0, 1)).

    The magnitude pair is bivariate Rayleigh; squaring gives correlated
    exponentials with density

        f(u, v) = exp(-(u/var0 + v/var1)/(1-corr^2))
                  * I0(2 corr sqrt(u v / (var0 var1)) / (1-corr^2))
                  / ((1-corr^2) var0 var1).

    Evaluated through the scaled Bessel function so large arguments do
    not overflow.
    """
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    if var0 <= 0 or var1 <= 0:
        raise ValueError("variances must be positive")
    if not 0.0 <= corr < 1.0:
        raise ValueError("corr must lie in [0, 1)")
    omc = 1.0 - corr * corr
    arg = 2.0 * corr * np.sqrt(u * v / (var0 * var1)) / omc
    log_f = -(u / var0 + v / var1) / omc + arg + np.log(special.i0e(arg))
    return np.exp(log_f) / (omc * var0 * var1)
