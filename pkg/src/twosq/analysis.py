"""Smooth windows, Bessel functions and oscillatory quadrature.

Windows are built from the mollifier sigma(t) = exp(-1/t) (t > 0) and the
smoothstep s(t) = sigma(t) / (sigma(t) + sigma(1 - t)). Exact derivatives
come from truncated Taylor arithmetic ("jets") rather than finite
differences, so derivative-based bounds are reliable to high order.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from numpy.polynomial.legendre import leggauss

from .errors import ToleranceNotMet

GL_NODES = 16
KINDS = ("plateau_w", "bump_phi", "partition_u", "zero")


# ---------------------------------------------------------------- jets

def _jmul(a, b):
    out = np.zeros(np.broadcast_shapes(a.shape, b.shape))
    for k in range(a.shape[0]):
        out[k] = sum(a[i] * b[k - i] for i in range(k + 1))
    return out


def _jrecip(a):
    out = np.zeros_like(a)
    out[0] = 1.0 / a[0]
    for k in range(1, a.shape[0]):
        out[k] = -sum(a[i] * out[k - i] for i in range(1, k + 1)) / a[0]
    return out


def _jexp(a):
    out = np.zeros_like(a)
    out[0] = np.exp(a[0])
    for k in range(1, a.shape[0]):
        out[k] = sum(i * a[i] * out[k - i] for i in range(1, k + 1)) / k
    return out


def _variable(t, order):
    jet = np.zeros((order + 1,) + np.shape(t))
    jet[0] = t
    if order:
        jet[1] = 1.0
    return jet


def _sigma_jet(t, order):
    """Taylor coefficients of exp(-1/t); zero for t <= 0."""
    t = np.asarray(t, dtype=float)
    pos = t > 0
    safe = np.where(pos, t, 1.0)
    jet = _jexp(-_jrecip(_variable(safe, order)))
    return np.where(pos, jet, 0.0)


def smoothstep_jet(t, order: int = 0) -> np.ndarray:
    """Taylor coefficients (shape (order+1, len(t))) of the smoothstep at ``t``.

    Outside (0, 1) the step is exactly 0 or 1 with vanishing derivatives.
    """
    t = np.atleast_1d(np.asarray(t, dtype=float))
    inside = (t > 0) & (t < 1)
    tc = np.where(inside, t, 0.5)
    a = _sigma_jet(tc, order)
    b = _sigma_jet(1.0 - tc, order)
    b[1::2] *= -1.0  # d/dt of sigma(1 - t)
    jet = _jmul(a, _jrecip(a + b))
    jet = np.where(inside, jet, 0.0)
    jet[0] = np.where(inside, jet[0], np.where(t >= 1, 1.0, 0.0))
    return jet


def smoothstep(t) -> np.ndarray:
    t = np.asarray(t, dtype=float)
    inside = (t > 0) & (t < 1)
    tc = np.where(inside, t, 0.5)
    a = np.exp(-1.0 / tc)
    b = np.exp(-1.0 / (1.0 - tc))
    return np.where(inside, a / (a + b), np.where(t >= 1, 1.0, 0.0))


def _bump_jet(t, order, sharpness=1.0):
    """Taylor coefficients of exp(p - p/(1-t^2)) on (-1, 1), p = sharpness."""
    t = np.atleast_1d(np.asarray(t, dtype=float))
    inside = np.abs(t) < 1
    tc = np.where(inside, t, 0.0)
    var = _variable(tc, order)
    one_minus = -_jmul(var, var)
    one_minus[0] += 1.0
    jet = math.exp(sharpness) * _jexp(-sharpness * _jrecip(one_minus))
    return np.where(inside, jet, 0.0)


# ---------------------------------------------------------------- windows

@dataclass(frozen=True)
class SmoothWindow:
    """A compactly supported smooth weight.

    ``plateau_w``: support [X, 2X], equal to 1 on [5X/4, 7X/4].
    ``bump_phi``: support [-1, 1], exp(p - p/(1 - t^2)) with p = ``sharpness``.
    ``partition_u``: support [1, 2].
    ``zero``: identically zero (support taken as [X, 2X]).

    A larger sharpness gives the bump faster Fourier decay at moderate
    frequencies (p = 1 leaves aliasing terms near 1e-5 at L = 50).
    """

    kind: str = "plateau_w"
    X: float = 1.0
    sharpness: float = 8.0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown window kind {self.kind!r}")
        if not self.sharpness > 0:
            raise ValueError("sharpness must be positive")
        if not self.X > 0:
            raise ValueError("window scale X must be positive")

    @property
    def support(self) -> tuple[float, float]:
        if self.kind == "bump_phi":
            return (-1.0, 1.0)
        if self.kind == "partition_u":
            return (1.0, 2.0)
        return (self.X, 2.0 * self.X)

    @property
    def breakpoints(self) -> list[float]:
        """Points where the closed form switches branch (panel edges for quadrature)."""
        lo, hi = self.support
        if self.kind in ("plateau_w", "zero"):
            X = self.X
            return [X, 1.25 * X, 1.75 * X, 2.0 * X]
        mid = 0.5 * (lo + hi)
        return [lo, mid, hi]

    def __call__(self, x):
        return window_eval(self, x)

    def derivatives(self, x, order: int) -> np.ndarray:
        """Exact derivatives w^(0..order)(x), shape (order+1, len(x))."""
        jet = window_jet(self, x, order)
        fact = np.array([math.factorial(j) for j in range(order + 1)], dtype=float)
        return jet * fact.reshape((-1,) + (1,) * (jet.ndim - 1))


def window_eval(win: SmoothWindow, x):
    x = np.asarray(x, dtype=float)
    if win.kind == "zero":
        return np.zeros_like(x)
    if win.kind == "bump_phi":
        inside = np.abs(x) < 1
        xc = np.where(inside, x, 0.0)
        p = win.sharpness
        return np.where(inside, np.exp(p - p / (1.0 - xc * xc)), 0.0)
    if win.kind == "partition_u":
        return window_eval(SmoothWindow("bump_phi", sharpness=win.sharpness), 2.0 * (x - 1.5))
    X = win.X
    ramp = X / 4.0
    rise = smoothstep((x - X) / ramp)
    fall = smoothstep((2.0 * X - x) / ramp)
    out = np.minimum(rise, fall)
    # exact 1 on the plateau, exact 0 off the support
    out = np.where((x >= 1.25 * X) & (x <= 1.75 * X), 1.0, out)
    return np.where((x <= X) | (x >= 2.0 * X), 0.0, out)


def window_jet(win: SmoothWindow, x, order: int) -> np.ndarray:
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if win.kind == "zero":
        return np.zeros((order + 1,) + x.shape)
    if win.kind == "bump_phi":
        return _bump_jet(x, order, win.sharpness)
    if win.kind == "partition_u":
        jet = _bump_jet(2.0 * (x - 1.5), order, win.sharpness)
        return jet * (2.0 ** np.arange(order + 1)).reshape((-1,) + (1,) * x.ndim)
    X = win.X
    scale = (4.0 / X) ** np.arange(order + 1)
    scale = scale.reshape((-1,) + (1,) * x.ndim)
    rise = smoothstep_jet((x - X) / (X / 4.0), order) * scale
    fall = smoothstep_jet((2.0 * X - x) / (X / 4.0), order) * scale
    fall[1::2] *= -1.0
    out = np.where(x < 1.5 * X, rise, fall)
    return np.where((x <= X) | (x >= 2.0 * X), 0.0, out)


@lru_cache(maxsize=None)
def smoothstep_derivative_l1(j: int, samples: int = 20000) -> float:
    """Midpoint estimate of the integral over [0, 1] of |s^(j)|."""
    t = (np.arange(samples) + 0.5) / samples
    d = smoothstep_jet(t, j)[j] * math.factorial(j)
    return float(np.mean(np.abs(d)))


def window_derivative_bound_check(win: SmoothWindow, j: int, grid: int = 10_000) -> float:
    """sup over a grid of |w^(j)(x)| * X^j, the j-th derivative taken by finite differences."""
    if not 1 <= j <= 6:
        raise ValueError("derivative order must be in 1..6")
    lo, hi = win.support
    x = np.linspace(lo, hi, grid)
    h = (hi - lo) / grid
    # central difference of order j on a (j+1)-point stencil with spacing h
    offsets = np.arange(j + 1) - j / 2.0
    coeffs = np.array([(-1) ** (j - i) * math.comb(j, i) for i in range(j + 1)], dtype=float)
    vals = sum(c * window_eval(win, x + o * h) for c, o in zip(coeffs, offsets))
    deriv = vals / h**j
    scale = win.X if win.kind in ("plateau_w", "zero") else 1.0
    return float(np.max(np.abs(deriv)) * scale**j)


# ---------------------------------------------------------------- Bessel

SERIES_CUTOFF = 12.0
MAX_ORDER = 8


def _bessel_series(nu: int, x: np.ndarray) -> np.ndarray:
    half = x / 2.0
    term = half**nu / math.factorial(nu)
    total = term.copy()
    q = -half * half
    for m in range(1, 60):
        term = term * q / (m * (m + nu))
        total += term
        if np.all(np.abs(term) <= 1e-17 * np.maximum(np.abs(total), 1e-300)) and m > 5:
            break
    return total


def _hankel_terms(x_min: float) -> int:
    """Number of asymptotic terms needed at arguments >= x_min (orders 0 and 1)."""
    for cut, k in ((400.0, 6), (150.0, 8), (60.0, 10), (30.0, 14), (20.0, 18)):
        if x_min >= cut:
            return k
    return 26


def _bessel_hankel(nu: int, x: np.ndarray) -> np.ndarray:
    """Large-argument expansion for orders 0 and 1."""
    mu = 4.0 * nu * nu
    out = np.empty_like(x)
    bands = [(12.0, 20.0), (20.0, 30.0), (30.0, 60.0), (60.0, 150.0), (150.0, 400.0), (400.0, np.inf)]
    for lo, hi in bands:
        sel = (x >= lo) & (x < hi)
        if not np.any(sel):
            continue
        xs = x[sel]
        K = _hankel_terms(lo)
        inv8x = 1.0 / (8.0 * xs)
        P = np.ones_like(xs)
        Q = np.zeros_like(xs)
        a = np.ones_like(xs)
        for k in range(1, K + 1):
            a = a * (mu - (2 * k - 1) ** 2) * inv8x / k
            if k % 2:
                Q += (-1) ** ((k - 1) // 2) * a
            else:
                P += (-1) ** (k // 2) * a
        chi = xs - (0.5 * nu + 0.25) * math.pi
        out[sel] = np.sqrt(2.0 / (math.pi * xs)) * (P * np.cos(chi) - Q * np.sin(chi))
    return out


def bessel_j(order: int, x):
    """Bessel function of the first kind J_order(x) for order 0..8, x >= 0.

    Power series for x <= 12; above, the Hankel expansion for orders 0, 1
    and forward recurrence (stable since x > order) for higher orders.
    """
    if not 0 <= order <= MAX_ORDER or int(order) != order:
        raise ValueError("order must be an integer in 0..8")
    x = np.asarray(x, dtype=float)
    scalar = x.ndim == 0
    x = np.atleast_1d(x)
    if np.any(x < 0):
        raise ValueError("bessel_j needs x >= 0")
    out = np.empty_like(x)
    small = x <= SERIES_CUTOFF
    if np.any(small):
        out[small] = _bessel_series(order, x[small])
    big = ~small
    if np.any(big):
        xb = x[big]
        j0 = _bessel_hankel(0, xb)
        if order == 0:
            out[big] = j0
        else:
            j1 = _bessel_hankel(1, xb)
            prev, cur = j0, j1
            for nu in range(1, order):
                prev, cur = cur, (2.0 * nu / xb) * cur - prev
            out[big] = cur
    return out[0] if scalar else out


def j0(x):
    return bessel_j(0, x)


# ---------------------------------------------------------------- quadrature

@dataclass(frozen=True)
class QuadratureResult:
    value: complex | float
    abs_error_estimate: float
    panels_used: int


@lru_cache(maxsize=None)
def _gl(n: int):
    return leggauss(n)


def _panel_nodes(edges: np.ndarray, n: int = GL_NODES):
    """Gauss-Legendre nodes and weights on consecutive panels [edges[i], edges[i+1]]."""
    xg, wg = _gl(n)
    a = edges[:-1, None]
    b = edges[1:, None]
    nodes = (0.5 * (b - a) * xg + 0.5 * (a + b)).ravel()
    weights = (0.5 * (b - a) * wg).ravel()
    return nodes, weights


def _edges(breaks: list[float], panels: int) -> np.ndarray:
    """Split each segment between breakpoints into panels proportional to its length."""
    total = breaks[-1] - breaks[0]
    pieces = []
    for lo, hi in zip(breaks[:-1], breaks[1:]):
        m = max(1, int(math.ceil(panels * (hi - lo) / total)))
        pieces.append(np.linspace(lo, hi, m + 1)[:-1])
    pieces.append(np.array([breaks[-1]]))
    return np.concatenate(pieces)


def _integrate_panels(f, breaks, panels):
    nodes, weights = _panel_nodes(_edges(breaks, panels))
    vals = f(nodes)
    return np.sum(weights * vals), np.sum(weights * np.abs(vals)), len(nodes) // GL_NODES


def integrate(f, breaks, tol: float = 1e-10, panels: int = 8, max_panels: int = 1 << 16) -> QuadratureResult:
    """Composite Gauss-Legendre with panel doubling until successive results agree.

    ``f`` must accept a numpy array. The error estimate is the difference of
    the last two refinements, floored at the rounding level of the sum.
    """
    prev, _, _ = _integrate_panels(f, breaks, panels)
    while True:
        panels *= 2
        cur, mass, used = _integrate_panels(f, breaks, panels)
        err = max(abs(cur - prev), 64 * np.finfo(float).eps * mass)
        if err <= tol * max(abs(cur), mass * 1e-3, 1e-300) or err <= 64 * np.finfo(float).eps * mass:
            return QuadratureResult(cur.item() if hasattr(cur, "item") else cur, float(err), used)
        if panels > max_panels:
            raise ToleranceNotMet(f"quadrature error {err:.3e} after {used} panels")
        prev = cur


def integral_of(win: SmoothWindow, tol: float = 1e-13) -> QuadratureResult:
    lo, hi = win.support
    return integrate(lambda x: window_eval(win, x), win.breakpoints, tol=tol)


def fourier_transform(win: SmoothWindow, xi: float, tol: float = 1e-12) -> QuadratureResult:
    """hat f(xi) = integral of f(y) e(-xi y) dy."""
    lo, hi = win.support
    cycles = abs(xi) * (hi - lo)
    panels = max(8, int(math.ceil(cycles)) + 8)
    return integrate(
        lambda y: window_eval(win, y) * np.exp(-2j * math.pi * xi * y),
        win.breakpoints,
        tol=tol,
        panels=panels,
    )


# ---------------------------------------------------------------- J0 transforms

def _t_breaks(win: SmoothWindow) -> list[float]:
    return [math.sqrt(b) for b in win.breakpoints]


def j0_transform(win: SmoothWindow, rho, panels_per_cycle: float = 0.25, base_panels: int = 24,
                 block: int = 2048, error_samples: int = 2) -> tuple[np.ndarray, np.ndarray]:
    """Integral of J0(2 pi rho sqrt(x)) w(x) dx over the support, for each rho.

    Works in t = sqrt(x), where the oscillation is uniform: the integral
    becomes the integral of J0(2 pi rho t) w(t^2) 2t dt. Frequencies are
    processed in sorted blocks sharing one panel grid sized for the block's
    largest frequency. Returns (values, error_estimates); each block's error
    estimate is the largest doubling difference observed on ``error_samples``
    of its highest frequencies, floored at the rounding level.
    """
    rho = np.atleast_1d(np.asarray(rho, dtype=float))
    values = np.zeros_like(rho)
    errors = np.zeros_like(rho)
    if win.kind == "zero" or rho.size == 0:
        return values, errors
    breaks = _t_breaks(win)
    span = breaks[-1] - breaks[0]
    order = np.argsort(rho, kind="stable")
    eps = np.finfo(float).eps

    def grid(panels):
        nodes, weights = _panel_nodes(_edges(breaks, panels))
        amp = window_eval(win, nodes * nodes) * 2.0 * nodes * weights
        keep = amp != 0.0
        return nodes[keep], amp[keep]

    for start in range(0, rho.size, block):
        idx = order[start:start + block]
        r = rho[idx]
        panels = base_panels + int(math.ceil(panels_per_cycle * r[-1] * span))
        nodes, amp = grid(panels)
        kern = j0(2.0 * math.pi * r[:, None] * nodes[None, :])
        vals = kern @ amp
        mass = np.abs(kern) @ np.abs(amp)
        fine_nodes, fine_amp = grid(2 * panels)
        sample = r[-error_samples:]
        fine = j0(2.0 * math.pi * sample[:, None] * fine_nodes[None, :]) @ fine_amp
        diff = float(np.max(np.abs(fine - vals[-error_samples:])))
        values[idx] = vals
        errors[idx] = np.maximum(diff, 64 * eps * mass)
    return values, errors


def w_tilde(k: int, n: int, win: SmoothWindow, tol: float = 1e-10) -> QuadratureResult:
    """(1/k) * integral of J0(2 pi sqrt(n x) / k) w(x) dx, adaptively refined."""
    if k < 1 or n < 1:
        raise ValueError("w_tilde needs k >= 1 and n >= 1")
    rho = math.sqrt(n) / k
    breaks = _t_breaks(win)
    span = breaks[-1] - breaks[0]
    panels = 16 + int(math.ceil(rho * span))

    def integrand(t):
        return j0(2.0 * math.pi * rho * t) * window_eval(win, t * t) * 2.0 * t

    res = integrate(integrand, breaks, tol=tol, panels=panels)
    return QuadratureResult(res.value / k, res.abs_error_estimate / k, res.panels_used)


MOMENT_PANELS = 16384
MOMENT_SAFETY = 1.001


@lru_cache(maxsize=32)
def _unit_moments(kind: str, sharpness: float, jmax: int) -> tuple[float, ...]:
    win = SmoothWindow(kind, 1.0, sharpness)
    # |w^(j)| has kinks, so Gauss-Legendre converges only algebraically here;
    # a fixed fine grid is accurate to ~1e-5 relative, covered by the safety factor
    acc = np.zeros(jmax + 1)
    nodes, weights = _panel_nodes(_edges(win.breakpoints, MOMENT_PANELS))
    powers = np.arange(jmax + 1)[:, None] / 2.0
    for i in range(0, len(nodes), 1 << 15):
        x, wts = nodes[i:i + (1 << 15)], weights[i:i + (1 << 15)]
        acc += (np.abs(win.derivatives(x, jmax)) * x[None, :] ** powers) @ wts
    return tuple(float(v) * MOMENT_SAFETY for v in acc)


def derivative_moments(win: SmoothWindow, jmax: int) -> np.ndarray:
    """M_j = integral of |w^(j)(x)| x^(j/2) dx for j = 0..jmax (upper estimates)."""
    if win.kind == "zero":
        return np.zeros(jmax + 1)
    if win.kind == "plateau_w":
        m = np.array(_unit_moments(win.kind, win.sharpness, jmax))
        j = np.arange(jmax + 1)
        return m * win.X ** (1.0 - j / 2.0)
    return np.array(_unit_moments(win.kind, win.sharpness, jmax))


def derivative_weighted_moment(win: SmoothWindow, j: int) -> float:
    """Integral of |w^(j)(x)| x^(j/2) dx, the constant in the j-fold integration-by-parts bound."""
    return float(derivative_moments(win, max(j, 1))[j])


def w_tilde_decay_bound(k: int, n, win: SmoothWindow, j: int, moment: float | None = None):
    """Rigorous |w~_k(n)| <= (1/k) (k / (pi sqrt n))^j M_j, using |J_j| <= 1."""
    if moment is None:
        moment = derivative_weighted_moment(win, j)
    n = np.asarray(n, dtype=float)
    return (1.0 / k) * (k / (math.pi * np.sqrt(n))) ** j * moment
