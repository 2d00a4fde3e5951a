"""Multi-index Hermite polynomials, the smoothing-operator family they
diagonalize, operator-norm probes, and the Hardy inequality.

Conventions. He_n is the probabilists' family (He_0 = 1, He_1 = u,
He_n = u He_{n-1} - (n-1) He_{n-2}) taken as products over coordinates for a
multi-index n. The separated fields are

    h(n, g)(t, x) = He_n(x / sqrt(t)) t^{-|n|/2} g(t),

while expansions f(t, x) = sum_n He_n(x / sqrt(t)) gamma_n(t) carry plain
coefficient profiles gamma_n with ||f||^2 = sum_n n! int gamma_n(t)^2 dt.
The two conventions differ by the t^{-|n|/2} factor; every conversion here
is explicit because silently mixing them is the main correctness hazard.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .quadrature import gauss_hermite_prob, gauss_legendre, panel_rule

__all__ = [
    "BumpProfile",
    "BoxProfile",
    "hermite_value",
    "hermite_value_1d",
    "hermite_derivative_check",
    "hermite_orthogonality",
    "h_field",
    "lambda_numeric",
    "lambda_family_on_hermite",
    "operator_norm_probe",
    "hardy_check",
    "generating_function_error",
    "multi_indices",
    "index_factorial",
    "OPERATOR_BOUNDS",
    "verification_report",
]


# --- time profiles -------------------------------------------------------------

class BumpProfile:
    """Polynomial-modulated smooth window supported on [alpha, beta].

    g(t) = amplitude * P(u) * exp(1 - 1/(1 - u^2)) with u the affine map of
    [alpha, beta] onto [-1, 1]. Weighted running integrals int_0^t s^q g(s) ds
    are computed on a cached panel rule; the profile is smooth, so the cached
    rule is accurate far beyond the tolerances used anywhere in the package.
    """

    def __init__(self, alpha, beta, amplitude=1.0, poly=(1.0,), n_panels=24,
                 order=16):
        if not 0.0 < alpha < beta:
            raise ValueError("need 0 < alpha < beta")
        self.alpha = float(alpha)
        self.beta = float(beta)
        self.amplitude = float(amplitude)
        self.poly = tuple(poly)
        self._edges = np.linspace(alpha, beta, n_panels + 1)
        self._order = order
        self._nodes, self._weights = panel_rule(self._edges, order=order)
        self._values = self(self._nodes)
        self._cum_cache = {}

    @property
    def support(self):
        return (self.alpha, self.beta)

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        u = (2.0 * t - (self.alpha + self.beta)) / (self.beta - self.alpha)
        out = np.zeros(t.shape)
        inside = np.abs(u) < 1.0
        ui = u[inside]
        out[inside] = (self.amplitude * np.polyval(self.poly[::-1], ui)
                       * np.exp(1.0 - 1.0 / (1.0 - ui * ui)))
        return out

    def _cumulative(self, q):
        """Running integral of s^q g(s) at the cached panel edges."""
        cum = self._cum_cache.get(q)
        if cum is None:
            order = self._order
            per_panel = (self._weights * self._nodes ** q
                         * self._values).reshape(-1, order).sum(axis=1)
            cum = np.concatenate([[0.0], np.cumsum(per_panel)])
            self._cum_cache[q] = cum
        return cum

    def weighted_integral(self, q, t=None):
        """int_0^t s^q g(s) ds, vectorized over t (full integral if t is None).

        Panel-cumulative plus a partial panel, so accuracy does not degrade
        for t deep inside the support.
        """
        cum = self._cumulative(q)
        if t is None:
            return float(cum[-1])
        t = np.asarray(t, dtype=float)
        out = np.zeros(t.shape)
        out[t >= self.beta] = cum[-1]
        mid = (t > self.alpha) & (t < self.beta)
        if np.any(mid):
            tm = t[mid]
            j = np.clip(np.searchsorted(self._edges, tm, side="right") - 1,
                        0, self._edges.size - 2)
            lo = self._edges[j]
            gx, gw = gauss_legendre(self._order)
            half = 0.5 * (tm - lo)
            nodes = lo[:, None] + half[:, None] * (gx[None, :] + 1.0)
            vals = self(nodes) * nodes ** q
            out[mid] = cum[j] + half * (vals @ gw)
        return out

    def sq_integral(self):
        """int g(t)^2 dt over the support."""
        return float(np.dot(self._weights, self._values ** 2))


class BoxProfile:
    """Piecewise-constant profile; weighted integrals are exact power sums."""

    def __init__(self, edges, values):
        edges = np.asarray(edges, dtype=float)
        values = np.asarray(values, dtype=float)
        if edges.ndim != 1 or edges.size != values.size + 1:
            raise ValueError("need len(edges) == len(values) + 1")
        if np.any(np.diff(edges) <= 0) or edges[0] < 0:
            raise ValueError("edges must be increasing and nonnegative")
        self.edges = edges
        self.values = values

    @property
    def support(self):
        return (float(self.edges[0]), float(self.edges[-1]))

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        idx = np.searchsorted(self.edges, t, side="right") - 1
        ok = (idx >= 0) & (idx < self.values.size) & (t < self.edges[-1])
        out = np.zeros(t.shape)
        out[ok] = self.values[idx[ok]]
        return out

    def weighted_integral(self, q, t=None):
        """int_0^t s^q h(s) ds exactly (q > -1)."""
        p = q + 1.0
        lo = self.edges[:-1]
        hi = self.edges[1:]
        pieces = self.values * (hi ** p - lo ** p) / p
        cum = np.concatenate([[0.0], np.cumsum(pieces)])
        if t is None:
            return float(cum[-1])
        t = np.asarray(t, dtype=float)
        tc = np.clip(t, self.edges[0], self.edges[-1])
        idx = np.clip(np.searchsorted(self.edges, tc, side="right") - 1,
                      0, self.values.size - 1)
        part = self.values[idx] * (tc ** p - self.edges[idx] ** p) / p
        return cum[idx] + part

    def sq_integral(self):
        return float(np.sum(self.values ** 2 * np.diff(self.edges)))


# --- Hermite polynomials --------------------------------------------------------

def hermite_value_1d(k, u):
    """He_k(u) via the three-term recurrence, vectorized in u."""
    u = np.asarray(u, dtype=float)
    if k < 0:
        return np.zeros(u.shape)
    prev = np.ones(u.shape)
    if k == 0:
        return prev
    cur = u.copy()
    for j in range(2, k + 1):
        prev, cur = cur, u * cur - (j - 1) * prev
    return cur


def hermite_value(n, x):
    """Multi-index He_n(x) = prod_i He_{n_i}(x_i); x may be (..., d)."""
    n = tuple(int(k) for k in np.atleast_1d(n))
    if any(k < 0 for k in n):
        raise ValueError("index entries must be >= 0")
    x = np.asarray(x, dtype=float)
    if x.ndim == 0:
        x = x.reshape(1)
    if x.shape[-1] != len(n):
        raise ValueError("dimension mismatch between index and point")
    out = np.ones(x.shape[:-1])
    for i, k in enumerate(n):
        out = out * hermite_value_1d(k, x[..., i])
    return out if out.shape else float(out)


def index_factorial(n):
    return math.prod(math.factorial(int(k)) for k in np.atleast_1d(n))


def multi_indices(d, max_total):
    """All n in N^d with |n| <= max_total, lexicographic."""
    if d == 1:
        return [(k,) for k in range(max_total + 1)]
    out = []
    for k in range(max_total + 1):
        for rest in multi_indices(d - 1, max_total - k):
            out.append((k,) + rest)
    return sorted(out)


def hermite_derivative_check(n, i, x, fd_step=1e-5):
    """(analytic, numeric) values of d/dx_i He_n at x; requires n_i >= 1."""
    n = tuple(int(k) for k in np.atleast_1d(n))
    if n[i] < 1:
        raise ValueError("derivative index must have n_i >= 1")
    x = np.asarray(np.atleast_1d(x), dtype=float)
    lowered = list(n)
    lowered[i] -= 1
    analytic = n[i] * float(hermite_value(tuple(lowered), x))
    e = np.zeros_like(x)
    e[i] = fd_step
    numeric = (float(hermite_value(n, x + e)) - float(hermite_value(n, x - e))) \
        / (2.0 * fd_step)
    return analytic, numeric


def hermite_orthogonality(n, m, t, quad_order=40):
    """int p(t, x) He_n(x/sqrt t) He_m(x/sqrt t) dx by Gauss-Hermite nodes.

    Nodes are placed for the variance-t Gaussian weight and mapped through
    the same x/sqrt(t) scaling as the integrand; equals n! when n == m.
    """
    n = tuple(int(k) for k in np.atleast_1d(n))
    m = tuple(int(k) for k in np.atleast_1d(m))
    if len(n) != len(m):
        raise ValueError("index dimension mismatch")
    u, w = gauss_hermite_prob(quad_order)
    total = 1.0
    root_t = math.sqrt(t)
    for ni, mi in zip(n, m):
        y = root_t * u
        vals = hermite_value_1d(ni, y / root_t) * hermite_value_1d(mi, y / root_t)
        total *= float(np.dot(w, vals))
    return total


# --- separated fields and the operator family -----------------------------------

def h_field(n, profile, t, x):
    """h(n, g)(t, x) = He_n(x / sqrt t) t^{-|n|/2} g(t); zero for t <= 0."""
    n = tuple(int(k) for k in np.atleast_1d(n))
    if t <= 0:
        return 0.0
    x = np.asarray(np.atleast_1d(x), dtype=float)
    tot = sum(n)
    return float(hermite_value(n, x / math.sqrt(t)) * t ** (-0.5 * tot)
                 * profile(np.asarray(t)))


def lambda_numeric(f, support, t, x, s_order=64, gh_order=40):
    """Smoothing operator p^{-1}[p * (p f)] at (t, x) by direct quadrature.

    The spatial convolution collapses onto a Gaussian average: the operator
    equals int_0^t ds E[f(s, m + sqrt(sig) Z)] with m = (s/t) x and
    sig = s (t - s)/t, so the y-integral is Gauss-Hermite with those moments
    and the s-integral is Gauss-Legendre over the support window.

    ``f(s, Y)`` must accept a float s and an (m, d) array of points.
    """
    x = np.asarray(np.atleast_1d(x), dtype=float)
    d = x.size
    lo = max(0.0, support[0])
    hi = min(t, support[1])
    if hi <= lo:
        return 0.0
    # panelled in s: bump windows converge slowly on a single GL interval
    s_nodes, s_weights = panel_rule(np.linspace(lo, hi, 9), order=s_order // 4)
    u, w = gauss_hermite_prob(gh_order)
    axes = [u] * d
    mesh = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, d)
    wmesh = w
    for _ in range(d - 1):
        wmesh = np.outer(wmesh, w).ravel()
    total = 0.0
    for s, ws in zip(s_nodes, s_weights):
        sig = s * (t - s) / t
        m = (s / t) * x
        y = m[None, :] + math.sqrt(sig) * mesh
        total += ws * float(np.dot(wmesh, f(s, y)))
    return total


def _lowered(n, i, by=2):
    out = list(n)
    out[i] -= by
    return tuple(out)


def lambda_family_on_hermite(which, n, profile, t, x, i=0):
    """Closed-form action of the operator family on h(n, g) at (t, x).

    which: "lambda" | "lambda1" | "lambda2i" | "lambda3i" | "lambda4i".
    Negative lowered indices contribute zero by convention.
    """
    n = tuple(int(k) for k in np.atleast_1d(n))
    if t <= 0:
        return 0.0
    x = np.asarray(np.atleast_1d(x), dtype=float)
    tot = sum(n)
    root_t = math.sqrt(t)
    big_g = float(profile.weighted_integral(0.0, np.asarray(t)))
    decay = t ** (-1.0 - 0.5 * tot) * big_g

    if which == "lambda":
        return float(hermite_value(n, x / root_t)) * t ** (-0.5 * tot) * big_g
    if which == "lambda2i":
        ni = n[i]
        if ni < 2:
            return 0.0
        he = float(hermite_value(_lowered(n, i), x / root_t))
        return 0.5 * ni * (ni - 1) * he * decay
    if which == "lambda4i":
        ni = n[i]
        if ni < 1:
            return 0.0
        return -ni * float(hermite_value(n, x / root_t)) * decay
    if which == "lambda3i":
        return (lambda_family_on_hermite("lambda4i", n, profile, t, x, i)
                - 2.0 * lambda_family_on_hermite("lambda2i", n, profile, t, x, i))
    if which == "lambda1":
        # identity part plus sum_i (Lambda_{4,i} - Lambda_{2,i})
        val = h_field(n, profile, t, x)
        for j in range(len(n)):
            val += lambda_family_on_hermite("lambda4i", n, profile, t, x, j)
            val -= lambda_family_on_hermite("lambda2i", n, profile, t, x, j)
        return val
    raise ValueError(f"unknown operator {which!r}")


# --- operator norms in the coefficient domain ------------------------------------

OPERATOR_BOUNDS = {
    "lambda0": lambda d, T: 2.0,
    "e_t_lambda": lambda d, T: T / math.sqrt(2.0),
    "lambda1": lambda d, T: 1.0 + 3.0 * d,
    "lambda2i": lambda d, T: 1.0,
    "lambda3i": lambda d, T: 4.0,
    "lambda4i": lambda d, T: 2.0,
}


@dataclass
class _Contribution:
    """One additive output term: values on the grid plus a power-law tail."""

    grid_vals: np.ndarray
    tail_coeff: float  # contribution ~ tail_coeff * t^{-tail_pow} beyond the grid
    tail_pow: float


class _Expansion:
    """Finite expansion {n: gamma_n} in the plain-coefficient convention."""

    def __init__(self, coeffs):
        self.coeffs = dict(coeffs)

    def supports(self):
        return [p.support for p in self.coeffs.values()]

    def norm_sq(self):
        return sum(index_factorial(n) * p.sq_integral()
                   for n, p in self.coeffs.items())


def _common_grid(expansion, t_cap=None):
    edges = set()
    for a, b in expansion.supports():
        edges.update(np.linspace(a, b, 9))
    if t_cap is not None:
        edges.add(t_cap)
    edges = np.array(sorted(e for e in edges
                            if t_cap is None or e <= t_cap + 1e-15))
    return panel_rule(edges, order=12)


def _apply_operator(which, expansion, d, T=None, i=0):
    """Map an expansion through an operator; returns (outputs, grid, t_max).

    outputs: dict output-index -> list of _Contribution on the common grid.
    The running integrals J_n(t) = t^{-|n|/2} int_0^t s^{|n|/2} gamma_n(s) ds
    carry exact power-law tails beyond the largest support edge.
    """
    t_cap = T if which == "e_t_lambda" else None
    nodes, weights = _common_grid(expansion, t_cap=t_cap)
    t_max = max(b for _, b in expansion.supports())
    if t_cap is not None:
        t_max = min(t_max, t_cap)
    out = {}

    def add(m, vals, tail_c, tail_p):
        out.setdefault(m, []).append(_Contribution(vals, tail_c, tail_p))

    for n, prof in expansion.coeffs.items():
        tot = sum(n)
        q = 0.5 * tot
        J = nodes ** (-q) * prof.weighted_integral(q, nodes)
        C = prof.weighted_integral(q)  # J(t) = C t^{-q} beyond the support
        if which == "lambda0":
            add(n, J / nodes, C, q + 1.0)
        elif which == "e_t_lambda":
            vals = np.where(nodes < T, J, 0.0)
            add(n, vals, 0.0, 0.0)  # grid is capped at T, no tail
        elif which == "lambda2i":
            ni = n[i]
            if ni >= 2:
                add(_lowered(n, i), 0.5 * ni * (ni - 1) * J / nodes,
                    0.5 * ni * (ni - 1) * C, q + 1.0)
        elif which == "lambda3i":
            ni = n[i]
            if ni >= 1:
                add(n, -ni * J / nodes, -ni * C, q + 1.0)
            if ni >= 2:
                add(_lowered(n, i), -ni * (ni - 1) * J / nodes,
                    -ni * (ni - 1) * C, q + 1.0)
        elif which == "lambda4i":
            ni = n[i]
            if ni >= 1:
                add(n, -ni * J / nodes, -ni * C, q + 1.0)
        elif which == "lambda1":
            add(n, prof(nodes), 0.0, 0.0)
            for j in range(len(n)):
                nj = n[j]
                if nj >= 1:
                    add(n, -nj * J / nodes, -nj * C, q + 1.0)
                if nj >= 2:
                    add(_lowered(n, j), -0.5 * nj * (nj - 1) * J / nodes,
                        -0.5 * nj * (nj - 1) * C, q + 1.0)
        else:
            raise ValueError(f"unknown operator {which!r}")
    return out, (nodes, weights), t_max


def _output_norm_sq(outputs, grid, t_max):
    nodes, weights = grid
    total = 0.0
    for m, contribs in outputs.items():
        vals = sum(c.grid_vals for c in contribs)
        piece = float(np.dot(weights, vals ** 2))
        # closed-form tail integral of (sum_k c_k t^{-p_k})^2 over (t_max, inf)
        for ca in contribs:
            for cb in contribs:
                if ca.tail_coeff == 0.0 or cb.tail_coeff == 0.0:
                    continue
                p = ca.tail_pow + cb.tail_pow
                piece += ca.tail_coeff * cb.tail_coeff * t_max ** (1.0 - p) / (p - 1.0)
        total += index_factorial(m) * piece
    return total


def operator_norm_probe(which, trials, max_degree, d, T=None, i=0, seed=0):
    """Max Rayleigh quotient ||op f|| / ||f|| over random finite expansions.

    Expansions draw an independent random bump coefficient profile for every
    index with |n| <= max_degree. Quotients are evaluated in the coefficient
    domain, where the family acts index-by-index; the physical-space
    cross-check lives in :func:`lambda_numeric`.
    """
    if which == "e_t_lambda" and T is None:
        raise ValueError("e_t_lambda probe needs T")
    rng = np.random.default_rng(seed)
    indices = multi_indices(d, max_degree)
    worst = 0.0
    for _ in range(trials):
        coeffs = {}
        for n in indices:
            a = rng.uniform(0.05, 2.0)
            b = a + rng.uniform(0.1, 1.5)
            amp = rng.uniform(-1.0, 1.0)
            if abs(amp) < 0.05:
                amp = 0.05
            coeffs[n] = BumpProfile(a, b, amplitude=amp)
        f = _Expansion(coeffs)
        outputs, grid, t_max = _apply_operator(which, f, d, T=T, i=i)
        quot = math.sqrt(_output_norm_sq(outputs, grid, t_max) / f.norm_sq())
        worst = max(worst, quot)
    return worst


# --- Hardy inequality -------------------------------------------------------------

def _power_integral(p, lo, hi):
    """int_lo^hi t^p dt with the log case at p = -1."""
    if p == -1.0:
        return math.log(hi / lo)
    return (hi ** (p + 1.0) - lo ** (p + 1.0)) / (p + 1.0)


def hardy_check(k, profile):
    """(lhs, rhs) of the weighted Hardy inequality for exponent k > -1.

    lhs = int_0^inf t^{-2-k} (int_0^t s^{k/2} h(s) ds)^2 dt,
    rhs = 4 / (k+1)^2 * int_0^inf h(t)^2 dt.

    BoxProfile arguments are integrated in closed form (exact power sums);
    smooth profiles fall back to panel quadrature plus the exact tail.
    """
    if k <= -1.0:
        raise ValueError("need k > -1")
    q = 0.5 * k + 1.0
    rhs = 4.0 / (k + 1.0) ** 2 * profile.sq_integral()
    alpha, beta = profile.support

    if isinstance(profile, BoxProfile):
        lhs = 0.0
        inner_at = 0.0  # running value of int_0^t s^{k/2} h
        for lo, hi, v in zip(profile.edges[:-1], profile.edges[1:],
                             profile.values):
            # inner(t) = a + b t^q on this piece
            b = v / q
            a = inner_at - b * lo ** q
            if lo == 0.0:
                # a = 0 when the support starts at 0, so no singular term
                lhs += b * b * _power_integral(2 * q - 2.0 - k, lo, hi) if a == 0.0 \
                    else math.inf
            else:
                lhs += (a * a * _power_integral(-2.0 - k, lo, hi)
                        + 2 * a * b * _power_integral(q - 2.0 - k, lo, hi)
                        + b * b * _power_integral(2 * q - 2.0 - k, lo, hi))
            inner_at = a + b * hi ** q
        tail_c = inner_at
    else:
        edges = np.linspace(alpha, beta, 33)
        nodes, weights = panel_rule(edges, order=16)
        inner = profile.weighted_integral(0.5 * k, nodes)
        lhs = float(np.dot(weights, nodes ** (-2.0 - k) * inner ** 2))
        tail_c = profile.weighted_integral(0.5 * k)
    lhs += tail_c ** 2 * beta ** (-1.0 - k) / (1.0 + k)
    return lhs, rhs


# --- generating function -----------------------------------------------------------

def generating_function_error(z, x, max_total):
    """|sum_{|n|<=N} z^n He_n(x)/n! - exp(-(|z|^2 - 2(x,z))/2)| at one point."""
    z = np.asarray(np.atleast_1d(z), dtype=float)
    x = np.asarray(np.atleast_1d(x), dtype=float)
    d = z.size
    total = 0.0
    for n in multi_indices(d, max_total):
        zn = math.prod(float(z[i]) ** n[i] for i in range(d))
        total += zn * float(hermite_value(n, x)) / index_factorial(n)
    exact = math.exp(-0.5 * (float(z @ z) - 2.0 * float(x @ z)))
    return abs(total - exact)


# --- aggregated verification (CLI-facing) ------------------------------------------

def verification_report(seed=0, trials=200, max_degree=6, d=2, grid_n=5,
                        bound_overrides=None):
    """Run the full identity/bound suite and report per-item maxima.

    ``bound_overrides`` is a test hook mapping operator name -> bound,
    letting a negative control force a failure.
    """
    rng = np.random.default_rng(seed)
    report = {"identities": [], "bounds": [], "hardy": {}, "ok": True}

    # eigen-identity on a grid, |n| <= 4, d in {1, 2}
    for dim in (1, 2):
        prof = BumpProfile(0.2, 1.2, amplitude=1.0)
        worst = 0.0
        ts = np.linspace(0.4, 2.0, grid_n)
        xs = np.linspace(-1.5, 1.5, grid_n)
        for n in multi_indices(dim, 4):
            def f(s, y, n=n):
                he = hermite_value(n, y / math.sqrt(s))
                return he * s ** (-0.5 * sum(n)) * prof(np.full(y.shape[0], s))
            for t in ts:
                for xv in xs:
                    x = np.full(dim, xv)
                    a = lambda_numeric(f, prof.support, t, x)
                    b = lambda_family_on_hermite("lambda", n, prof, t, x)
                    worst = max(worst, abs(a - b))
        report["identities"].append(
            {"name": f"eigen_identity_d{dim}", "max_error": worst,
             "tolerance": 1e-5, "pass": worst < 1e-5})

    # orthogonality matrix
    worst = 0.0
    for dim in (1, 2):
        idx = multi_indices(dim, 6)
        for t in (0.5, 1.0, 3.0):
            for a_i, n in enumerate(idx):
                for m in idx[a_i:]:
                    val = hermite_orthogonality(n, m, t)
                    want = index_factorial(n) if n == m else 0.0
                    worst = max(worst, abs(val - want))
    report["identities"].append(
        {"name": "orthogonality", "max_error": worst, "tolerance": 1e-8,
         "pass": worst < 1e-8})

    # operator norm bounds
    probes = [("lambda0", None), ("lambda1", None), ("lambda2i", None),
              ("lambda3i", None), ("e_t_lambda", 0.5), ("e_t_lambda", 1.0),
              ("e_t_lambda", 2.0)]
    overrides = bound_overrides or {}
    for which, T in probes:
        bound = overrides.get(which, OPERATOR_BOUNDS[which](d, T))
        quot = operator_norm_probe(which, trials, max_degree, d, T=T,
                                   seed=int(rng.integers(2 ** 31)))
        label = which if T is None else f"{which}(T={T})"
        report["bounds"].append(
            {"operator": label, "bound": bound, "max_quotient": quot,
             "pass": quot <= bound + 1e-6})

    # Hardy sweep on random boxes
    violations = 0
    for _ in range(100):
        k = rng.uniform(-0.9, 4.0)
        edges = np.sort(rng.uniform(0.05, 3.0, size=4))
        vals = rng.uniform(-2.0, 2.0, size=3)
        lhs, rhs = hardy_check(k, BoxProfile(edges, vals))
        if lhs > rhs * (1.0 + 1e-12):
            violations += 1
    report["hardy"] = {"draws": 100, "violations": violations,
                       "pass": violations == 0}

    report["ok"] = (all(r["pass"] for r in report["identities"])
                    and all(r["pass"] for r in report["bounds"])
                    and report["hardy"]["pass"])
    return report
