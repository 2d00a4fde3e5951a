"""Mutual-energy kernels and the quadratic energy of discrete measures.

Three kernel kinds are shipped:

* parabolic  -- heat-kernel-ratio pair energy on space-time points,
  K(z, z') = int_0^{t^t'} ds p(t+t'-2s, x-x') p(s+sig(s), m(s)) / (p(t,x) p(t',x')),
  the 1-D reduction of the defining (1+d)-dimensional double integral;
* cap_prime  -- exponentially damped variant,
  K'(z, z') = 1/2 int_{|t-t'|}^inf du p(u, x-x') e^{-u/2};
* newtonian  -- classical h_{d-2}(|x-x'|) with the log kernel at d = 2.

Diagonal values are +inf for d >= 2 (non-integrable singularity); +inf is an
explicit sentinel, never an overflow artifact.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .heat_kernel import (
    SpaceTimePoint,
    bridge_weight_batch,
    heat_density,
    log_heat_density,
    _exp_floor,
)
from .quadrature import (
    adaptive_gauss_kronrod,
    gauss_legendre,
    geometric_edges,
    panel_rule,
)

__all__ = [
    "KernelKind",
    "PARABOLIC",
    "CAP_PRIME",
    "newtonian",
    "DiscreteMeasure",
    "mutual_kernel",
    "mutual_kernel_bruteforce",
    "cap_prime_kernel",
    "cap_prime_bruteforce",
    "newtonian_kernel",
    "energy",
    "energy_mc_paths",
]


@dataclass(frozen=True)
class KernelKind:
    tag: str
    d: int | None = None

    def __post_init__(self):
        if self.tag not in ("parabolic", "cap_prime", "newtonian"):
            raise ValueError(f"unknown kernel kind {self.tag!r}")
        if self.tag == "newtonian" and (self.d is None or self.d < 2):
            raise ValueError("newtonian kernel needs d >= 2")


PARABOLIC = KernelKind("parabolic")
CAP_PRIME = KernelKind("cap_prime")


def newtonian(d):
    return KernelKind("newtonian", d)


@dataclass(frozen=True)
class DiscreteMeasure:
    """Weighted atoms forming a probability measure, on E or on R^d."""

    times: np.ndarray | None  # None for spatial measures
    coords: np.ndarray        # (n, d)
    weights: np.ndarray       # (n,)

    def __post_init__(self):
        coords = np.atleast_2d(np.asarray(self.coords, dtype=float))
        weights = np.asarray(self.weights, dtype=float)
        times = self.times
        if times is not None:
            times = np.asarray(times, dtype=float)
            if times.shape[0] != coords.shape[0]:
                raise ValueError("times/coords length mismatch")
            if np.any(times <= 0) or not np.all(np.isfinite(times)):
                raise ValueError("atom times must be finite and positive")
        if weights.shape[0] != coords.shape[0]:
            raise ValueError("weights/coords length mismatch")
        if np.any(weights < 0):
            raise ValueError("weights must be nonnegative")
        if abs(weights.sum() - 1.0) > 1e-12:
            raise ValueError(f"weights sum to {weights.sum()!r}, not 1")
        if not np.all(np.isfinite(coords)):
            raise ValueError("atom coordinates must be finite")
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "coords", coords)
        object.__setattr__(self, "weights", weights)

    @classmethod
    def spacetime(cls, points, weights):
        """Build from an iterable of (t, x) pairs or SpaceTimePoints."""
        ts, xs = [], []
        for p in points:
            if isinstance(p, SpaceTimePoint):
                ts.append(p.t)
                xs.append(p.x)
            else:
                t, x = p
                ts.append(float(t))
                xs.append(np.atleast_1d(x))
        return cls(np.asarray(ts), np.asarray(xs, dtype=float), np.asarray(weights))

    @classmethod
    def spatial(cls, coords, weights):
        return cls(None, np.asarray(coords, dtype=float), np.asarray(weights))

    @property
    def n(self):
        return self.coords.shape[0]

    @property
    def d(self):
        return self.coords.shape[1]

    @property
    def is_spacetime(self):
        return self.times is not None


def _as_point(z):
    if isinstance(z, SpaceTimePoint):
        return z
    t, x = z
    return SpaceTimePoint(t, x)


# --- parabolic kernel ---------------------------------------------------------

def _parabolic_integrand(u, t1, x1, t2, x2, log_den):
    """Integrand after the s = t^t' - u^2 substitution, vectorized in u."""
    d = x1.size
    tmin = min(t1, t2)
    s = tmin - u * u
    a = t1 - s
    b = t2 - s
    tot = a + b
    dx = x1 - x2
    log_c = log_heat_density(tot, dx @ dx, d)
    sig = a * b / tot
    m = (np.outer(b, x1) + np.outer(a, x2)) / tot[:, None]
    log_p2 = log_heat_density(s + sig, np.sum(m * m, axis=1), d)
    return 2.0 * u * _exp_floor(log_c + log_p2 - log_den)


def mutual_kernel(z, z2, rel_tol=1e-9):
    """Parabolic pair energy K(z, z2); +inf on the diagonal for d >= 2.

    Evaluated as a 1-D adaptive quadrature with a square-root substitution
    at the s -> t^t' endpoint, which removes the (t^t'-s)^{-1/2} singularity
    at d = 1 and leaves divergence at d >= 2 to the diagonal sentinel.
    """
    z, z2 = _as_point(z), _as_point(z2)
    if z.d != z2.d:
        raise ValueError("dimension mismatch")
    if z == z2 and z.d >= 2:
        return math.inf
    t1, x1 = z.t, z.x_arr
    t2, x2 = z2.t, z2.x_arr
    log_den = (log_heat_density(t1, x1 @ x1, z.d)
               + log_heat_density(t2, x2 @ x2, z.d))
    u_max = math.sqrt(min(t1, t2))

    def f(u):
        return _parabolic_integrand(np.asarray(u, dtype=float), t1, x1, t2, x2,
                                    float(log_den))

    return adaptive_gauss_kronrod(f, 0.0, u_max, rel_tol=rel_tol)


_BATCH_UNIT_NODES, _BATCH_UNIT_WEIGHTS = panel_rule(
    geometric_edges(0.0, 1.0, 13, ratio=0.5), order=8)


def parabolic_kernel_batch(t1, x1, t2, x2, block=8192):
    """Vectorized K over aligned pair arrays; fixed composite rule.

    Same integrand as :func:`mutual_kernel` on a panel grid clustered toward
    the endpoint; agreement with the adaptive scalar path is pinned by tests.
    All intermediate times are strictly positive, so the log-space math is
    inlined without the nonpositive-time masking of the scalar path.
    """
    t1 = np.asarray(t1, dtype=float)
    t2 = np.asarray(t2, dtype=float)
    x1 = np.atleast_2d(np.asarray(x1, dtype=float))
    x2 = np.atleast_2d(np.asarray(x2, dtype=float))
    d = x1.shape[1]
    half_d = 0.5 * d  # the (2 pi)^{-d} factors cancel against the denominator
    out = np.empty(t1.shape[0])
    u0 = _BATCH_UNIT_NODES[None, :]
    w0 = _BATCH_UNIT_WEIGHTS[None, :]
    for lo in range(0, t1.shape[0], block):
        hi = min(lo + block, t1.shape[0])
        T1, T2 = t1[lo:hi, None], t2[lo:hi, None]
        X1, X2 = x1[lo:hi], x2[lo:hi]
        tmin = np.minimum(T1, T2)
        root = np.sqrt(tmin)
        u2 = u0 * u0 * tmin  # u^2 for the scaled nodes
        s = tmin - u2
        a = T1 - s
        b = T2 - s
        tot = a + b
        sq1 = np.sum(X1 * X1, axis=1)[:, None]
        sq2 = np.sum(X2 * X2, axis=1)[:, None]
        dot = np.sum(X1 * X2, axis=1)[:, None]
        dx2 = sq1 - 2.0 * dot + sq2
        tau = s + a * b / tot
        m2 = (b * b * sq1 + 2.0 * a * b * dot + a * a * sq2) / (tot * tot)
        log_den = (-half_d * np.log(T1 * T2) - sq1 / (2.0 * T1) - sq2 / (2.0 * T2))
        log_val = (-half_d * np.log(tot * tau)
                   - dx2 / (2.0 * tot) - m2 / (2.0 * tau) - log_den)
        np.clip(log_val, -745.0, None, out=log_val)
        out[lo:hi] = 2.0 * np.sum(root * u0 * np.exp(log_val) * (root * w0), axis=1)
    return out


def mutual_kernel_bruteforce(z, z2, n_s=160, n_y=64):
    """Oracle: tensor quadrature of the defining (1+d)-dim double integral.

    The y-grid per s-node is a Gauss-Legendre window centred where the three
    Gaussian factors concentrate (precision-weighted mean). Used in tests
    only; requires z != z2.
    """
    z, z2 = _as_point(z), _as_point(z2)
    if z == z2:
        raise ValueError("bruteforce oracle requires distinct points")
    d = z.d
    t1, x1 = z.t, z.x_arr
    t2, x2 = z2.t, z2.x_arr
    den = heat_density(t1, x1) * heat_density(t2, x2)
    tmin = min(t1, t2)
    s_nodes, s_weights = panel_rule(
        np.concatenate([
            geometric_edges(0.0, 0.5 * tmin, n_s // (2 * 10), ratio=0.5),
            geometric_edges(tmin, 0.5 * tmin, n_s // (2 * 10), ratio=0.5)[::-1][1:],
        ]),
        order=10,
    )
    gl_x, gl_w = gauss_legendre(n_y)
    total = 0.0
    for s, ws in zip(s_nodes, s_weights):
        # precision-weighted centre/width of p(s,y) p(t1-s,x1-y) p(t2-s,x2-y)
        prec = 1.0 / s + 1.0 / (t1 - s) + 1.0 / (t2 - s)
        width = 1.0 / math.sqrt(prec)
        centre = (x1 / (t1 - s) + x2 / (t2 - s)) / prec
        half = 10.0 * width
        axes = [centre[i] + half * gl_x for i in range(d)]
        mesh = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, d)
        wmesh = gl_w
        for _ in range(d - 1):
            wmesh = np.outer(wmesh, gl_w).ravel()
        wmesh = wmesh * half ** d
        log_f = (log_heat_density(s, np.sum(mesh * mesh, axis=1), d)
                 + log_heat_density(t1 - s, np.sum((x1 - mesh) ** 2, axis=1), d)
                 + log_heat_density(t2 - s, np.sum((x2 - mesh) ** 2, axis=1), d))
        total += ws * float(np.dot(wmesh, _exp_floor(log_f)))
    return total / den


# --- cap-prime kernel ---------------------------------------------------------

_CAP_PRIME_SPAN = 300.0  # e^{-150} tail is negligible at any shipped tolerance


def cap_prime_kernel(z, z2, rel_tol=1e-10):
    """Damped kernel K'(z, z2) = 1/2 int_{|t-t'|}^inf p(u, x-x') e^{-u/2} du."""
    z, z2 = _as_point(z), _as_point(z2)
    if z.d != z2.d:
        raise ValueError("dimension mismatch")
    if z == z2 and z.d >= 2:
        return math.inf
    d = z.d
    u0 = abs(z.t - z2.t)
    dx = z.x_arr - z2.x_arr
    sq = dx @ dx

    def f(w):
        w = np.asarray(w, dtype=float)
        u = u0 + w * w
        return 2.0 * w * _exp_floor(log_heat_density(u, sq, d) - 0.5 * u) * 0.5

    return adaptive_gauss_kronrod(f, 0.0, math.sqrt(_CAP_PRIME_SPAN),
                                  rel_tol=rel_tol)


_CP_UNIT_NODES, _CP_UNIT_WEIGHTS = panel_rule(
    geometric_edges(0.0, math.sqrt(_CAP_PRIME_SPAN), 24, ratio=0.55), order=12)


def cap_prime_kernel_batch(t1, x1, t2, x2, block=8192):
    """Vectorized K' over aligned pair arrays (fixed composite rule)."""
    t1 = np.asarray(t1, dtype=float)
    t2 = np.asarray(t2, dtype=float)
    x1 = np.atleast_2d(np.asarray(x1, dtype=float))
    x2 = np.atleast_2d(np.asarray(x2, dtype=float))
    d = x1.shape[1]
    half_d = 0.5 * d
    log2pi = math.log(2.0 * math.pi)
    out = np.empty(t1.shape[0])
    wn = _CP_UNIT_NODES[None, :]
    ww = _CP_UNIT_WEIGHTS[None, :]
    for lo in range(0, t1.shape[0], block):
        hi = min(lo + block, t1.shape[0])
        u0 = np.abs(t1[lo:hi] - t2[lo:hi])[:, None]
        sq = np.sum((x1[lo:hi] - x2[lo:hi]) ** 2, axis=1)[:, None]
        u = u0 + wn * wn
        log_val = -half_d * (np.log(u) + log2pi) - sq / (2.0 * u) - 0.5 * u
        np.clip(log_val, -745.0, None, out=log_val)
        out[lo:hi] = np.sum(wn * np.exp(log_val) * ww, axis=1)
    return out


def cap_prime_bruteforce(z, z2, n_s=240, n_y=64, span=160.0):
    """Oracle: tensor (s, y) quadrature of the defining damped double integral."""
    z, z2 = _as_point(z), _as_point(z2)
    d = z.d
    t1, x1 = z.t, z.x_arr
    t2, x2 = z2.t, z2.x_arr
    tmin = min(t1, t2)
    # s runs over (-inf, t^t'); the e^{-(t+t'-2s)/2} damping truncates the
    # tail. Edges decrease from tmin, so panel weights come out negative and
    # abs() below restores the orientation.
    s_nodes, s_weights = panel_rule(
        geometric_edges(tmin, tmin - span, n_s // 10, ratio=0.55), order=10)
    gl_x, gl_w = gauss_legendre(n_y)
    total = 0.0
    for s, ws in zip(s_nodes, s_weights):
        a, b = t1 - s, t2 - s
        prec = 1.0 / a + 1.0 / b
        width = 1.0 / math.sqrt(prec)
        centre = (x1 / a + x2 / b) / prec
        half = 10.0 * width
        axes = [centre[i] + half * gl_x for i in range(d)]
        mesh = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, d)
        wmesh = gl_w
        for _ in range(d - 1):
            wmesh = np.outer(wmesh, gl_w).ravel()
        wmesh = wmesh * half ** d
        log_f = (log_heat_density(a, np.sum((x1 - mesh) ** 2, axis=1), d) - 0.5 * a
                 + log_heat_density(b, np.sum((x2 - mesh) ** 2, axis=1), d) - 0.5 * b)
        total += abs(ws) * float(np.dot(wmesh, _exp_floor(log_f)))
    return total


# --- Newtonian / logarithmic kernel -------------------------------------------

def newtonian_kernel(x, x2, d):
    """h_{d-2}(|x - x2|): r^{-(d-2)} for d >= 3, log_+(1/r) for d = 2."""
    if d < 2:
        raise ValueError("newtonian kernel needs d >= 2")
    x = np.atleast_1d(np.asarray(x, dtype=float))
    x2 = np.atleast_1d(np.asarray(x2, dtype=float))
    r = float(np.linalg.norm(x - x2))
    if r == 0.0:
        return math.inf
    if d == 2:
        return max(0.0, -math.log(r))
    return r ** (2 - d)


def newtonian_kernel_batch(x1, x2, d):
    x1 = np.atleast_2d(np.asarray(x1, dtype=float))
    x2 = np.atleast_2d(np.asarray(x2, dtype=float))
    r = np.linalg.norm(x1 - x2, axis=1)
    out = np.full(r.shape, np.inf)
    pos = r > 0
    if d == 2:
        out[pos] = np.maximum(0.0, -np.log(r[pos]))
    else:
        out[pos] = r[pos] ** (2 - d)
    return out


# --- energy functional ----------------------------------------------------------

def _pair_kernel(kind, measure, i, j):
    if kind.tag == "newtonian":
        return newtonian_kernel(measure.coords[i], measure.coords[j], kind.d)
    zi = SpaceTimePoint(measure.times[i], measure.coords[i])
    zj = SpaceTimePoint(measure.times[j], measure.coords[j])
    if kind.tag == "parabolic":
        return mutual_kernel(zi, zj)
    return cap_prime_kernel(zi, zj)


def energy(measure, kind):
    """Quadratic energy sum_{ij} w_i w_j K(z_i, z_j), diagonal included.

    Zero-weight atoms drop out (0 * inf = 0 convention); any +inf pair with
    positive weight product makes the energy +inf.
    """
    if kind.tag == "newtonian":
        if measure.is_spacetime:
            raise ValueError("newtonian energy needs a spatial measure")
        if kind.d != measure.d:
            raise ValueError("kernel/measure dimension mismatch")
    elif not measure.is_spacetime:
        raise ValueError(f"{kind.tag} energy needs a space-time measure")
    w = measure.weights
    total = 0.0
    for i in range(measure.n):
        if w[i] == 0.0:
            continue
        for j in range(i, measure.n):
            if w[j] == 0.0:
                continue
            k = _pair_kernel(kind, measure, i, j)
            if math.isinf(k):
                return math.inf
            total += (1.0 if i == j else 2.0) * w[i] * w[j] * k
    return total


def energy_mc_paths(measure, n_paths, dt, seed, chunk=256):
    """Brownian-path Monte Carlo estimate of the parabolic energy.

    Simulates standard Brownian paths from the origin on [0, T] (T = max atom
    time, exact truncation since bridge weights vanish beyond each atom time),
    trapezoid-integrates the squared measure-averaged bridge weight along each
    path, and returns (mean, standard error) over paths.
    """
    if not measure.is_spacetime:
        raise ValueError("path estimator needs a space-time measure")
    t_min = float(np.min(measure.times))
    if dt >= t_min:
        raise ValueError(f"dt={dt} must be below the smallest atom time {t_min}")
    T = float(np.max(measure.times))
    n_steps = int(math.ceil(T / dt))
    grid = np.linspace(0.0, T, n_steps + 1)
    d = measure.d
    rng = np.random.default_rng(seed)
    vals = np.empty(n_paths)
    done = 0
    while done < n_paths:
        m = min(chunk, n_paths - done)
        steps = rng.normal(0.0, 1.0, size=(m, n_steps, d)) * np.sqrt(np.diff(grid))[None, :, None]
        paths = np.concatenate([np.zeros((m, 1, d)), np.cumsum(steps, axis=1)], axis=1)
        fw = bridge_weight_batch(measure.times, measure.coords,
                                 np.broadcast_to(grid, (m, n_steps + 1)), paths, d)
        f = np.tensordot(measure.weights, fw, axes=(0, 0))
        vals[done:done + m] = np.trapezoid(f * f, grid, axis=1)
        done += m
    est = float(np.mean(vals))
    se = float(np.std(vals, ddof=1) / math.sqrt(n_paths))
    return est, se
