"""Oscillatory integrals and their asymptotic evaluations.

Four layers, bottom up:

* `quad_osc` — adaptive Gauss-Legendre panel quadrature for w(t) e(g(t)),
  with panels capped at half an oscillation and split at stationary points;
  it is the numerical oracle everything else is checked against.
* `nonstationary_bound` — the integration-by-parts tail bound
  J_len * X_I * ((Q R / sqrt(Y))^{-A} + (R V)^{-A}) for phases whose
  derivative stays away from zero on the window.
* `stationary_point` / `stationary_values` / `stationary_expand` — closed
  forms for the two concrete phase families plus the truncated asymptotic
  expansion  e(g(t0)) / |g''|^{1/2} * sum_n p_n  with
  p_n = e^{-i pi/4} / n! * (4 pi i)^{-n} |g''|^{-n} G^{(2n)}(t0)
  (the e(x) = e^{2 pi i x} convention; G = w * e(H), H the phase minus its
  second-order jet at t0).
* `poisson_verify_first` / `poisson_verify_second` — both finite-vs-integral
  identities obtained by Poisson summation on a character-twisted smooth
  sum, each side computed independently.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import mpmath
import numpy as np

from .charkloost import character_group, chi_values
from .errors import (AccuracyError, ArgumentError, InvariantViolation,
                     ResourceLimitError, StationaryPointError)
from .expsums import REDUCTION_THRESHOLD, reduced_phase_array
from .smoothing import BumpWindow, eval_bump, make_partition, eval_member

_SQRT_GL = 15
_GL_X, _GL_W = np.polynomial.legendre.leggauss(_SQRT_GL)


# ---------------------------------------------------------------------------
# the alpha-constant pack

@dataclass(frozen=True)
class AlphaConstants:
    alpha: float
    beta: float    # (2-a)/(1-a)
    gamma: float   # a/(1-a)
    delta: float   # 1/(1-a)
    xi: float      # (1-a)/(1-2a)
    eta: float     # a/(1-2a)
    omega: float   # (2-3a)/(1-2a)


def alpha_constants(alpha: float) -> AlphaConstants:
    if not 0.0 < alpha < 0.5:
        raise ArgumentError(f"need 0 < alpha < 1/2, got {alpha} "
                            "(xi/eta/omega are singular at 1/2)")
    a = float(alpha)
    return AlphaConstants(alpha=a,
                          beta=(2 - a) / (1 - a),
                          gamma=a / (1 - a),
                          delta=1 / (1 - a),
                          xi=(1 - a) / (1 - 2 * a),
                          eta=a / (1 - 2 * a),
                          omega=(2 - 3 * a) / (1 - 2 * a))


# ---------------------------------------------------------------------------
# windows and phases

@dataclass(frozen=True)
class WindowModel:
    """Smooth amplitude with compact support [lo, hi]; fn is vectorized."""

    fn: object
    lo: float
    hi: float
    params: dict = field(default_factory=dict)

    def __call__(self, t):
        return self.fn(np.asarray(t, dtype=float))


def window_from_bump(w: BumpWindow) -> WindowModel:
    lo, hi = w.support
    return WindowModel(fn=lambda t: eval_bump(w, t), lo=lo, hi=hi,
                       params={"kind": "bump", "y": w.y, "delta": w.delta,
                               "mollifier": "exp(-1/t) smoothstep"})


@dataclass(frozen=True)
class PhaseModel:
    """Phase g with derivatives to order 4.

    kind "first-poisson":  g(t) = h (X t)^a - X s t / (q u m n)
    kind "second-poisson": g(T) = (1-a) h X^a T^g0 - X^{1-a} s sig T/(a h q^2 u m)
                           (g0 = a/(1-a))
    kind "generic":        user callables; missing derivatives by central
                           differences.
    """

    kind: str
    params: dict
    _g: object = None
    _dg: object = None     # generic only: callable (t, order) or None

    def __post_init__(self):
        if self.kind not in ("first-poisson", "second-poisson", "generic"):
            raise ArgumentError(f"unknown phase kind {self.kind!r}")

    # -- evaluation ---------------------------------------------------------
    def g(self, t):
        t = np.asarray(t, dtype=float)
        p = self.params
        if self.kind == "first-poisson":
            return (p["h"] * np.power(p["X"] * t, p["alpha"])
                    - p["X"] * p["s"] * t / (p["q"] * p["u"] * p["m"] * p["n"]))
        if self.kind == "second-poisson":
            a = p["alpha"]
            c = alpha_constants(a)
            lead = (1 - a) * p["h"] * p["X"] ** a
            lin = (p["X"] ** (1 - a) * p["s"] * p["sigma"]
                   / (a * p["h"] * p["q"] ** 2 * p["u"] * p["m"]))
            return lead * np.power(t, c.gamma) - lin * t
        return self._g(t)

    def dg(self, t, order: int = 1):
        if not 1 <= order <= 4:
            raise ArgumentError(f"derivative order {order} not in [1, 4]")
        t = np.asarray(t, dtype=float)
        p = self.params
        if self.kind == "first-poisson":
            a = p["alpha"]
            coef = p["h"] * p["X"] ** a
            for r in range(order):
                coef *= a - r
            out = coef * np.power(t, a - order)
            if order == 1:
                out = out - p["X"] * p["s"] / (p["q"] * p["u"] * p["m"] * p["n"])
            return out
        if self.kind == "second-poisson":
            a = p["alpha"]
            c = alpha_constants(a)
            coef = (1 - a) * p["h"] * p["X"] ** a
            for r in range(order):
                coef *= c.gamma - r
            out = coef * np.power(t, c.gamma - order)
            if order == 1:
                out = out - (p["X"] ** (1 - a) * p["s"] * p["sigma"]
                             / (a * p["h"] * p["q"] ** 2 * p["u"] * p["m"]))
            return out
        if self._dg is not None:
            return self._dg(t, order)
        # central differences on the user callable
        h0 = self.params.get("fd_step", 1e-3)
        scalar = np.ndim(t) == 0
        ts = np.atleast_1d(t)
        out = np.array([_real_derivative(self._g, float(x), order, h0) for x in ts])
        return out[0] if scalar else out


def make_first_phase(h, X, alpha, q, u, m, n, s) -> PhaseModel:
    return PhaseModel(kind="first-poisson",
                      params=dict(h=h, X=X, alpha=alpha, q=q, u=u, m=m, n=n, s=s))


def make_second_phase(h, X, alpha, q, u, m, s, sigma) -> PhaseModel:
    return PhaseModel(kind="second-poisson",
                      params=dict(h=h, X=X, alpha=alpha, q=q, u=u, m=m,
                                  s=s, sigma=sigma))


def make_generic_phase(g, dg=None, **params) -> PhaseModel:
    return PhaseModel(kind="generic", params=params, _g=g, _dg=dg)


def gaussian_phase(Y: float, t0: float) -> PhaseModel:
    """g(t) = -Y (t - t0)^2 / 2 with exact derivatives."""
    def g(t):
        return -0.5 * Y * (np.asarray(t, dtype=float) - t0) ** 2

    def dg(t, order):
        t = np.asarray(t, dtype=float)
        if order == 1:
            return -Y * (t - t0)
        if order == 2:
            return -Y * np.ones_like(t)
        return np.zeros_like(t)

    return PhaseModel(kind="generic", params={"Y": Y, "t0": t0}, _g=g, _dg=dg)


def _real_derivative(fn, x, order, h0, levels=3):
    """Richardson central differences for a real- or complex-valued fn."""
    stencils = {
        1: ((-1, 1), (-0.5, 0.5)),
        2: ((-1, 0, 1), (1.0, -2.0, 1.0)),
        3: ((-2, -1, 1, 2), (-0.5, 1.0, -1.0, 0.5)),
        4: ((-2, -1, 0, 1, 2), (1.0, -4.0, 6.0, -4.0, 1.0)),
        5: ((-3, -2, -1, 1, 2, 3), (-0.5, 2.0, -2.5, 2.5, -2.0, 0.5)),
        6: ((-3, -2, -1, 0, 1, 2, 3), (1.0, -6.0, 15.0, -20.0, 15.0, -6.0, 1.0)),
    }
    if order == 0:
        return fn(x)
    offs, coefs = stencils[order]
    ests = []
    h = h0
    for _ in range(levels):
        val = sum(c * complex(fn(x + o * h)) for o, c in zip(offs, coefs))
        ests.append(val / h ** order)
        h /= 2.0
    fac = 4.0
    while len(ests) > 1:
        ests = [(fac * b - a) / (fac - 1.0) for a, b in zip(ests, ests[1:])]
        fac *= 4.0
    val = ests[0]
    return val if abs(val.imag) > 0 else val.real


# ---------------------------------------------------------------------------
# quadrature

@dataclass(frozen=True)
class OscIntegralResult:
    value: complex
    method: str
    error_estimate: float
    terms_used: int


def _phase_circle(g_vals: np.ndarray) -> np.ndarray:
    return np.exp(2j * np.pi * np.mod(g_vals, 1.0))


def _panel_values(wfn, phase: PhaseModel, edges: np.ndarray) -> np.ndarray:
    """GL-15 value of the integral on each [edges[i], edges[i+1]]."""
    mid = 0.5 * (edges[1:] + edges[:-1])
    half = 0.5 * (edges[1:] - edges[:-1])
    t = mid[:, None] + half[:, None] * _GL_X[None, :]
    flat = t.ravel()
    vals = (np.asarray(wfn(flat), dtype=np.complex128)
            * _phase_circle(phase.g(flat))).reshape(t.shape)
    return (vals * _GL_W[None, :]).sum(axis=1) * half


def _split_at_stationary(phase: PhaseModel, a: float, b: float) -> list[float]:
    pts = _stationary_candidates(phase, a, b)
    cuts = sorted({a, b, *pts})
    return [c for c in cuts if a <= c <= b]


def _stationary_candidates(phase: PhaseModel, a: float, b: float) -> list[float]:
    """Zeros of g' in (a, b); closed forms where available, else a scan."""
    out = []
    if phase.kind in ("first-poisson", "second-poisson"):
        try:
            t0 = stationary_point(phase)
        except StationaryPointError:
            return []
        if a < t0 < b:
            out.append(t0)
        return out
    grid = np.linspace(a, b, 257)
    d = np.asarray(phase.dg(grid, 1), dtype=float)
    sign = np.sign(d)
    for i in np.flatnonzero(d[1:-1] == 0.0) + 1:   # exact zeros on the grid
        out.append(float(grid[i]))
    for i in np.flatnonzero(sign[:-1] * sign[1:] < 0):
        lo_t, hi_t = grid[i], grid[i + 1]
        for _ in range(60):
            mid_t = 0.5 * (lo_t + hi_t)
            if np.sign(phase.dg(mid_t, 1)) == sign[i]:
                lo_t = mid_t
            else:
                hi_t = mid_t
        out.append(0.5 * (lo_t + hi_t))
    merged = []
    for t in sorted(out):
        if not merged or t - merged[-1] > 1e-12 * max(abs(b - a), 1.0):
            merged.append(t)
    return merged


def quad_osc(w: WindowModel, g: PhaseModel, J=None, tol: float = 1e-9,
             max_panels: int = 400_000, max_rounds: int = 30) -> OscIntegralResult:
    """Adaptive panel quadrature of int w(t) e(g(t)) dt over J.

    Panels are seeded at stationary points and subdivided until each spans
    at most half an oscillation of g; refinement then targets the panels
    with the largest two-level discrepancy until the summed estimate is
    below tol.
    """
    if tol < 1e-12:
        raise ArgumentError(f"tol {tol} below supported floor 1e-12")
    a = w.lo if J is None else max(J[0], w.lo)
    b = w.hi if J is None else min(J[1], w.hi)
    if not b > a:
        return OscIntegralResult(value=0j, method="quadrature",
                                 error_estimate=0.0, terms_used=0)

    edges = np.array(_split_at_stationary(g, a, b), dtype=float)
    # oscillation budget: |g'| * width <= 0.5 per panel
    for _ in range(64):
        mid = 0.5 * (edges[1:] + edges[:-1])
        width = edges[1:] - edges[:-1]
        speeds = np.maximum.reduce([np.abs(np.asarray(g.dg(x, 1), dtype=float))
                                    for x in (edges[:-1], mid, edges[1:])])
        need = np.ceil(np.sqrt(np.maximum(width * speeds / 0.5, 1.0))).astype(int)
        # sqrt: split gradually; large factors converge in a few sweeps
        if np.all(need <= 1):
            break
        if len(edges) * 2 > max_panels:
            raise AccuracyError("oscillation budget needs too many panels",
                                value=None, error_estimate=None)
        pieces = [np.linspace(edges[i], edges[i + 1], need[i] + 1)[:-1]
                  for i in range(len(width))]
        edges = np.append(np.concatenate(pieces), edges[-1])

    nodes = 0
    for _ in range(max_rounds):
        coarse = _panel_values(w, g, edges)
        half_edges = np.empty(2 * len(edges) - 1)
        half_edges[0::2] = edges
        half_edges[1::2] = 0.5 * (edges[1:] + edges[:-1])
        fine = _panel_values(w, g, half_edges)
        fine_pairs = fine[0::2] + fine[1::2]
        err = np.abs(coarse - fine_pairs)
        nodes += _SQRT_GL * (len(edges) - 1 + len(half_edges) - 1)
        total_err = float(err.sum())
        if total_err <= tol:
            return OscIntegralResult(value=complex(fine_pairs.sum()),
                                     method="quadrature",
                                     error_estimate=total_err,
                                     terms_used=nodes)
        if 2 * len(edges) > max_panels:
            break
        bad = err > tol / max(len(err), 1)
        keep = np.ones(len(half_edges), dtype=bool)
        keep[1::2] = bad          # keep midpoints only where needed
        edges = half_edges[keep]
    raise AccuracyError(f"no convergence to tol={tol}",
                        value=complex(fine_pairs.sum()),
                        error_estimate=total_err)


# ---------------------------------------------------------------------------
# non-stationary (integration by parts) bound

def nonstationary_bound(X_I: float, V_I: float, Y_I: float, Q_I: float,
                        R_I: float, A_I: float, J_len: float,
                        constant: float = 1.0) -> float:
    """J_len * X_I * ((Q R / sqrt(Y))^{-A} + (R V)^{-A}).

    Valid when the phase derivative exceeds R_I on the window, the
    amplitude is X_I-bounded with V_I-scaled derivatives, and the phase
    second derivative is Y_I Q_I^{-2}-ish; the leading constant is not
    pinned by theory and defaults to 1.
    """
    for name, val in (("X_I", X_I), ("V_I", V_I), ("Y_I", Y_I),
                      ("Q_I", Q_I), ("R_I", R_I), ("A_I", A_I),
                      ("J_len", J_len)):
        if val <= 0:
            raise ArgumentError(f"{name} must be positive, got {val}")
    if Y_I < 1:
        raise ArgumentError(f"need Y_I >= 1, got {Y_I}")
    d1 = Q_I * R_I / math.sqrt(Y_I)
    d2 = R_I * V_I
    return constant * J_len * X_I * (d1 ** (-A_I) + d2 ** (-A_I))


# ---------------------------------------------------------------------------
# stationary phase

def stationary_point(g: PhaseModel, window=None) -> float:
    """The zero of g' (closed form for the two concrete kinds)."""
    p = g.params
    if g.kind == "first-poisson":
        if p["h"] <= 0 or p["s"] <= 0:
            raise StationaryPointError("no stationary point: need h > 0, s > 0")
        a = p["alpha"]
        t0 = (a * p["h"] * p["q"] * p["u"] * p["m"] * p["n"] / p["s"]) \
            ** (1 / (1 - a)) / p["X"]
    elif g.kind == "second-poisson":
        if p["h"] <= 0 or p["s"] * p["sigma"] <= 0:
            raise StationaryPointError("no stationary point: need h > 0, "
                                       "s*sigma > 0")
        a = p["alpha"]
        c = alpha_constants(a)
        t0 = ((a * p["h"] * p["q"]) ** 2 * p["u"] * p["m"]
              / (p["s"] * p["sigma"])) ** c.xi / p["X"] ** (1 - a)
    else:
        if window is None:
            raise ArgumentError("generic phases need an explicit window")
        pts = _stationary_candidates(g, window[0], window[1])
        if not pts:
            raise StationaryPointError("no stationary point in window")
        if len(pts) > 1:
            raise StationaryPointError(
                f"{len(pts)} stationary points in window; decompose the range")
        t0 = pts[0]
    if window is not None and not window[0] <= t0 <= window[1]:
        raise StationaryPointError(
            f"stationary point {t0} outside window {window}")
    resid = abs(float(g.dg(t0, 1)))
    scale = abs(float(g.dg(t0, 2))) * abs(t0)
    if resid > 1e-10 * max(scale, 1e-300):
        raise InvariantViolation(
            f"stationary residual |g'(t0)| = {resid} exceeds 1e-10 * {scale}")
    return float(t0)


def stationary_values(g: PhaseModel, window=None) -> tuple[float, float]:
    """(g(t0), g''(t0)); closed forms for the two concrete kinds."""
    p = g.params
    if g.kind == "first-poisson":
        t0 = stationary_point(g, window)
        a = p["alpha"]
        # beta/gamma/delta stay finite on all of 0 < a < 1, unlike the
        # second-iteration constants, so compute them inline
        beta, gamma, delta = (2 - a) / (1 - a), a / (1 - a), 1 / (1 - a)
        qumn = p["q"] * p["u"] * p["m"] * p["n"]
        val = (1 - a) * (a ** a * p["h"]) ** delta * (qumn / p["s"]) ** gamma
        curv = -a * (1 - a) * p["h"] * p["X"] ** 2 \
            * (p["s"] / (a * p["h"] * qumn)) ** beta
        return val, curv
    if g.kind == "second-poisson":
        t0 = stationary_point(g, window)
        a = p["alpha"]
        c = alpha_constants(a)
        B = (a * p["h"] * p["q"]) ** 2 * p["u"] * p["m"] / (p["s"] * p["sigma"])
        val = (1 - 2 * a) * p["h"] * B ** c.eta
        curv = -(a * (1 - 2 * a) / (1 - a)) * p["h"] \
            * p["X"] ** (2 * (1 - a)) * (1.0 / B) ** c.omega
        return val, curv
    t0 = stationary_point(g, window)
    return float(np.real(g.g(t0))), float(np.real(g.dg(t0, 2)))


def stationary_expand(w: WindowModel, g: PhaseModel, n_terms: int = 1,
                      J=None, step: float | None = None) -> OscIntegralResult:
    """Truncated stationary-phase value of int w e(g) around the unique
    interior stationary point.

    value = e(g(t0)) |g''|^{-1/2} sum_{n < n_terms} p_n,
    p_n = e^{-i pi/4}/n! (4 pi i)^{-n} |g''|^{-n} G^{(2n)}(t0),
    G = w e(H), H = g - g(t0) - g''(t0)(t-t0)^2/2.

    G-derivatives by Richardson central differences; the reported
    error_estimate is the magnitude of the first omitted term.
    """
    if not 1 <= n_terms <= 3:
        raise ArgumentError(f"n_terms must be 1..3, got {n_terms}")
    a = w.lo if J is None else max(J[0], w.lo)
    b = w.hi if J is None else min(J[1], w.hi)
    pts = _stationary_candidates(g, a, b) if g.kind == "generic" \
        else [t for t in [stationary_point(g)] if a < t < b]
    if not pts:
        raise StationaryPointError("no stationary point in the window")
    if len(pts) > 1:
        raise StationaryPointError(
            f"{len(pts)} stationary points; decompose the range first")
    t0 = pts[0]
    g0, g2 = stationary_values(g, (a, b)) if g.kind != "generic" \
        else (float(np.real(g.g(t0))), float(np.real(g.dg(t0, 2))))
    if g2 >= 0:
        raise ArgumentError("expansion implemented for g'' < 0 (conjugate "
                            "the phase otherwise)")
    ag2 = abs(g2)

    if step is None:
        g3 = abs(float(np.real(g.dg(t0, 3)))) if g.kind != "generic" else \
            abs(complex(g.dg(t0, 3)).real)
        scale2 = 0.3 / math.sqrt(ag2)
        scale3 = (0.05 / (2 * math.pi * g3)) ** (1 / 3) if g3 > 0 else np.inf
        step = min(0.02 * (b - a), scale2, scale3)

    def H(t):
        return np.asarray(g.g(t), dtype=float) - g0 - 0.5 * g2 * (t - t0) ** 2

    def G(t):
        return w(t) * np.exp(2j * np.pi * H(t))

    phases = []
    for nn in range(min(n_terms + 1, 4)):  # one extra term for the estimate
        if 2 * nn == 0:
            d = complex(G(np.asarray(t0)))
        elif 2 * nn > 6:
            d = None
        else:
            d = complex(_real_derivative(G, t0, 2 * nn, step))
        phases.append(d)

    pre = np.exp(-1j * np.pi / 4)
    terms = []
    for nn in range(n_terms):
        d = phases[nn]
        terms.append(pre * d / (math.factorial(nn) * (4j * np.pi * ag2) ** nn))
    lead = np.exp(2j * np.pi * (g0 % 1.0)) / math.sqrt(ag2)
    value = lead * sum(terms)

    if phases[n_terms] is not None:
        nxt = abs(phases[n_terms]) / (math.factorial(n_terms)
                                      * (4 * np.pi * ag2) ** n_terms)
    else:
        nxt = abs(terms[-1]) ** 2 / max(abs(terms[-2]), 1e-300) \
            if len(terms) >= 2 else abs(terms[-1])
    return OscIntegralResult(value=complex(value),
                             method="stationary-expansion",
                             error_estimate=float(nxt / math.sqrt(ag2)),
                             terms_used=n_terms)


def phase_jet_derivatives(H1: float, H2: float, H3: float, H4: float):
    """Derivatives of e(H) at a point where H = 0, orders 1..4, via the
    composition (Bell polynomial) formula with z = 2 pi i."""
    z = 2j * np.pi
    d1 = z * H1
    d2 = z * H2 + z ** 2 * H1 ** 2
    d3 = z * H3 + 3 * z ** 2 * H1 * H2 + z ** 3 * H1 ** 3
    d4 = (z * H4 + z ** 2 * (4 * H1 * H3 + 3 * H2 ** 2)
          + 6 * z ** 3 * H1 ** 2 * H2 + z ** 4 * H1 ** 4)
    return d1, d2, d3, d4


# ---------------------------------------------------------------------------
# truncation thresholds

@dataclass(frozen=True)
class TruncationWindows:
    T1: float
    T2: float
    T3: float | None = None
    T4: float | None = None

    @property
    def empty_main_term(self) -> bool:
        return self.T2 < 1.0

    @property
    def empty_second(self) -> bool:
        return self.T4 is not None and self.T4 < 1.0


def truncation_windows(alpha: float, h: float, u: int, m: int, N: float,
                       q: int, X: float, s: float | None = None
                       ) -> TruncationWindows:
    """T1 = a h u m N q / (4 X^{1-a}), T2 = 16 T1; with s also
    T3 = (a h q)^2 u m / (4 s X^{1-2a}), T4 = 16 T3."""
    for name, val in (("alpha", alpha), ("h", h), ("u", u), ("m", m),
                      ("N", N), ("q", q), ("X", X)):
        if val <= 0:
            raise ArgumentError(f"{name} must be positive, got {val}")
    t1 = 0.25 * alpha * h * u * m * N * q / X ** (1 - alpha)
    t3 = t4 = None
    if s is not None:
        if s <= 0:
            raise ArgumentError(f"s must be positive, got {s}")
        t3 = (alpha * h * q) ** 2 * u * m / (4 * s * X ** (1 - 2 * alpha))
        t4 = 16 * t3
    return TruncationWindows(T1=t1, T2=16 * t1, T3=t3, T4=t4)


# ---------------------------------------------------------------------------
# Poisson-summation verifications

def _slot_weight(kind: str):
    if kind == "one":
        return lambda x: np.ones_like(np.asarray(x, dtype=float))
    if kind == "log":
        return lambda x: np.log(np.asarray(x, dtype=float))
    raise ArgumentError(f"slot weight {kind!r} not one of 'one', 'log'")


def _reduced_phase_general(vals) -> np.ndarray:
    """frac of an array of float phase values, mpmath-refined when large.

    Only sound when the caller can supply exact expressions; here values
    come in as float64, so the refinement just guards the mod against
    catastrophic integer parts (values stay below ~1e9 in the scope).
    """
    vals = np.asarray(vals, dtype=float)
    return np.mod(vals, 1.0)


@dataclass(frozen=True)
class PoissonCheck:
    lhs: complex
    rhs: complex
    diff: float
    rel: float
    s_max: int
    tail_bound: float
    empty_main_term: bool
    meta: dict


def _gauss_row(table, idx: int) -> np.ndarray:
    """tau(chi; s) for s = 0..q-1 via one inverse FFT of the value row."""
    vals = chi_values(table, idx)
    return np.fft.ifft(vals) * table.q


def poisson_verify_first(q: int, u: int, m: int, n: int, chi_index: int,
                         h: float, alpha: float, X: int, window: BumpWindow,
                         theta: float = 1.1, K: float | None = None,
                         s_max: int | None = None, tol: float = 1e-6,
                         quad_tol: float = 1e-12, k_budget: int = 10**4,
                         f3: str = "log") -> PoissonCheck:
    """Check  sum_k chi(k) f3(k) Psi_K(k) psi(umnk/X) e(h (umnk)^a)
            = (X/(q u m n)) sum_s tau(chi; s) I(s),
    I(s) = int f3(Xt/(umn)) Psi_K(Xt/(umn)) psi(t) e(h (Xt)^a - X s t/(q u m n)) dt.

    Both sides are computed independently (finite sum vs adaptive
    quadrature); the s-sum is truncated at s_max with a reported tail bound.
    """
    if q > 50:
        raise ArgumentError(f"verification scale capped at q <= 50, got {q}")
    table = character_group(q)
    if not 0 <= chi_index < table.phi:
        raise ArgumentError(f"chi_index {chi_index} out of range")
    umn = u * m * n
    part = make_partition(theta, 1.0, max(2, math.ceil(math.log(4 * X)
                                                       / math.log(theta))))
    if K is None:
        t_mid = 0.5 * (1 + window.y)
        if X * t_mid / umn < 1.0:
            raise ArgumentError(
                f"derived block scale X*t/(u*m*n) = {X * t_mid / umn:.3g} < 1; "
                "increase X or decrease u*m*n")
        K = theta ** part.grid.index_of(
            theta ** round(math.log(X * t_mid / umn) / math.log(theta)))
    else:
        part.grid.index_of(K)

    k_lo = math.ceil(K / theta)
    k_hi = math.floor(K * theta)
    if k_hi - k_lo + 1 > k_budget:
        raise ResourceLimitError(f"{k_hi - k_lo + 1} k-terms exceed {k_budget}",
                                 estimate=k_hi - k_lo + 1, budget=k_budget)
    f3_fn = _slot_weight(f3)
    ks = np.arange(k_lo, k_hi + 1, dtype=np.int64)
    chiv = chi_values(table, chi_index)
    amp_k = (f3_fn(ks) * eval_member(part, K, ks.astype(float))
             * eval_bump(window, umn * ks / X))
    ph = reduced_phase_array(h, umn * ks, alpha) if h != 0 else np.zeros(len(ks))
    lhs = complex(np.sum(chiv[ks % q] * amp_k * np.exp(2j * np.pi * ph)))

    # truncation scale: the t-integral oscillates against e(-Xst/(qumn));
    # stationary s stop near T2, tails decay like s^{-A}
    tw = truncation_windows(alpha, max(h, 1e-300), u, m, n, q, X)

    t_lo = max(1.0 - 2 * window.delta, umn * K / (X * theta))
    t_hi = min(window.y + 2 * window.delta, umn * K * theta / X)

    def w_t(t):
        t = np.asarray(t, dtype=float)
        x = X * t / umn
        return f3_fn(x) * eval_member(part, K, x) * eval_bump(window, t)

    wmodel = WindowModel(fn=w_t, lo=t_lo, hi=t_hi,
                         params={"f3": f3, "K": K, "theta": theta})
    gauss = _gauss_row(table, chi_index)

    # tail machinery: |I(s)| for s beyond the window is bounded by repeated
    # integration by parts; the mollifier's j-th derivatives grow like
    # (j^2/width)^j, so the effective inverse-derivative scale carries a
    # 1/A_I^2 correction (without it the power bound undershoots)
    A_tail = 8.0
    amp_grid = np.linspace(t_lo, t_hi, 257) if t_hi > t_lo else np.array([1.0])
    amp_max = float(np.max(np.abs(w_t(amp_grid)))) if t_hi > t_lo else 1.0
    v_scale = min(window.delta, t_lo * (1 - 1 / theta)) / A_tail ** 2
    y_curv = max(alpha * (1 - alpha) * h * X ** alpha * t_lo ** (alpha - 2), 1.0)
    drift_peak = alpha * h * X ** alpha * t_lo ** (alpha - 1)

    def tail_beyond(sm: int) -> float:
        acc = 0.0
        for s_t in range(sm + 1, 64 * (sm + 1)):
            r = X * s_t / (q * umn) - drift_peak
            if r <= 0:
                continue
            term = nonstationary_bound(X_I=max(amp_max, 1e-300), V_I=v_scale,
                                       Y_I=y_curv, Q_I=1.0, R_I=r, A_I=A_tail,
                                       J_len=max(t_hi - t_lo, 1e-12))
            acc += 2 * term * q   # both signs of s; |tau| <= q
            if term * q < 1e-22 * max(acc, 1.0):
                break
        return acc * X / (q * umn)

    if s_max is None:
        s_max = int(math.ceil(tw.T2)) + 4
        budget = 0.25 * tol * max(1.0, abs(lhs))
        while tail_beyond(s_max) > budget and s_max < 16 * (tw.T2 + 40):
            s_max += max(4, s_max // 4)

    rhs = 0j
    pref = X / (q * umn)
    quad_err = 0.0
    if t_hi > t_lo:
        # phase-evaluation noise floors the achievable error estimate at
        # ~ 2 pi eps |g|_max int|w|; never ask quad_osc for less than that
        g_peak = abs(h) * (X * t_hi) ** alpha + X * s_max * t_hi / (q * umn)
        w_peak = float(np.max(np.abs(w_t(np.linspace(t_lo, t_hi, 257)))))
        floor = 2 * np.pi * 2.3e-16 * g_peak * (t_hi - t_lo) * max(w_peak, 1.0)
        qtol = max(quad_tol, 40 * floor)
        for s in range(-s_max, s_max + 1):
            tau_s = gauss[s % q]
            if abs(tau_s) < 1e-13:
                continue
            phase = make_first_phase(h=h, X=X, alpha=alpha, q=q, u=u, m=m,
                                     n=n, s=s)
            res = quad_osc(wmodel, phase, (t_lo, t_hi), tol=qtol)
            rhs += tau_s * res.value
            quad_err += abs(tau_s) * res.error_estimate
    rhs *= pref
    quad_err *= pref

    tail = tail_beyond(s_max)
    scale = max(abs(lhs), abs(rhs), 1e-300)
    if tail > tol * max(1.0, scale):
        raise AccuracyError(f"s-sum tail bound {tail} above tolerance",
                            value=rhs, error_estimate=tail)
    diff = abs(lhs - rhs)
    return PoissonCheck(lhs=lhs, rhs=rhs, diff=diff, rel=diff / scale,
                        s_max=s_max, tail_bound=tail,
                        empty_main_term=tw.empty_main_term,
                        meta={"q": q, "u": u, "m": m, "n": n, "h": h,
                              "alpha": alpha, "X": X, "K": K, "theta": theta,
                              "chi_index": chi_index, "f3": f3,
                              "k_terms": int(len(ks)),
                              "quad_err": quad_err,
                              "amp_l1": float(np.sum(np.abs(amp_k))),
                              "t_support": (t_lo, t_hi)})


def poisson_verify_second(q: int, u: int, m: int, s: int, chi_index: int,
                          h: float, alpha: float, X: int, window: BumpWindow,
                          N: float | None = None, K: float | None = None,
                          theta: float = 1.1, sigma_max: int | None = None,
                          tol: float = 1e-6, quad_tol: float = 1e-12,
                          f2: str = "one", f3: str = "log") -> PoissonCheck:
    """Check the second summation identity

      sum_n chi(n) f2(n) n^{b/2-1} Psi_N(n) w_n(t0(n)) e(Phi(n))
        = (1/q) (s X^{1-a}/(a h q u m))^{b/2} sum_sig tau(chi; sig) J(sig),

    where t0(n) = (a h q u m n / s)^{1/(1-a)} / X is the interior critical
    point, Phi(n) = (1-a)(a^a h)^{1/(1-a)} (q u m n / s)^{a/(1-a)} its phase
    value, w_n(t) = f3(Xt/(umn)) Psi_K(Xt/(umn)) psi(t), and

      J(sig) = int f2(n(T)) Psi_N(n(T)) T^{b/2-1} w_{n(T)}(T^{1/(1-a)})
               e((1-a) h X^a T^{a/(1-a)} - X^{1-a} s sig T/(a h q^2 u m)) dT

    with n(T) = s X^{1-a} T / (a h q u m).  The identity is Poisson
    summation in n after the substitution T = a h q u m n / (s X^{1-a}).
    """
    if q > 50:
        raise ArgumentError(f"verification scale capped at q <= 50, got {q}")
    if s <= 0:
        raise ArgumentError(f"need s >= 1, got {s}")
    table = character_group(q)
    if not 0 <= chi_index < table.phi:
        raise ArgumentError(f"chi_index {chi_index} out of range")
    cst = alpha_constants(alpha)
    beta, gamma, delta = cst.beta, cst.gamma, cst.delta

    part = make_partition(theta, 1.0, max(2, math.ceil(math.log(4 * X)
                                                       / math.log(theta))))
    if N is None:
        # place the critical point of the n-sum mid-plateau
        n_star = s * X ** (1 - alpha) * (0.5 * (1 + window.y)) ** (1 / delta) \
            / (alpha * h * q * u * m)
        N = theta ** part.grid.index_of(
            theta ** round(math.log(n_star) / math.log(theta)))
    else:
        part.grid.index_of(N)
    aq = alpha * h * q * u * m

    def t0_of(nv):
        return (aq * np.asarray(nv, dtype=float) / s) ** delta / X

    if K is None:
        k_star = X * float(t0_of(N)) / (u * m * N)
        if k_star < 1.0:
            raise ArgumentError(
                f"derived block scale X*t0/(u*m*N) = {k_star:.3g} < 1; "
                "the N-block is too wide for this (h, s, X) combination")
        K = theta ** part.grid.index_of(
            theta ** round(math.log(k_star) / math.log(theta)))
    else:
        part.grid.index_of(K)

    f2_fn = _slot_weight(f2)
    f3_fn = _slot_weight(f3)

    def w_n(nv, t):
        nv = np.asarray(nv, dtype=float)
        t = np.asarray(t, dtype=float)
        x = X * t / (u * m * nv)
        return f3_fn(x) * eval_member(part, K, x) * eval_bump(window, t)

    # ----- lhs: finite n-sum ------------------------------------------------
    n_lo = math.ceil(N / theta)
    n_hi = math.floor(N * theta)
    ns = np.arange(n_lo, n_hi + 1, dtype=np.int64)
    chiv = chi_values(table, chi_index)
    t0s = t0_of(ns)
    amp = (f2_fn(ns) * np.power(ns.astype(float), beta / 2 - 1)
           * eval_member(part, N, ns.astype(float)) * w_n(ns, t0s))
    phi_scale = (1 - alpha) * (alpha ** alpha * h) ** delta
    phi_vals = phi_scale * np.power(q * u * m * ns.astype(float) / s, gamma)
    big = np.abs(phi_vals) > REDUCTION_THRESHOLD
    ph = np.mod(phi_vals, 1.0)
    if np.any(big):
        with mpmath.workdps(60):
            sc = (1 - mpmath.mpf(alpha)) * (mpmath.mpf(alpha) ** alpha * h) \
                ** (1 / (1 - mpmath.mpf(alpha)))
            ex = mpmath.mpf(alpha) / (1 - mpmath.mpf(alpha))
            for i in np.flatnonzero(big):
                val = sc * mpmath.power(q * u * m * int(ns[i]), ex) \
                    / mpmath.power(s, ex)
                ph[i] = float(mpmath.frac(val) % 1)
    lhs = complex(np.sum(chiv[ns % q] * amp * np.exp(2j * np.pi * ph)))

    # ----- rhs: sigma-sum of transformed integrals --------------------------
    tw = truncation_windows(alpha, h, u, m, N, q, X, s=s)
    tau_lo = aq * (N / theta) / (s * X ** (1 - alpha))
    tau_hi = aq * (N * theta) / (s * X ** (1 - alpha))

    def n_of(taus):
        return s * X ** (1 - alpha) * np.asarray(taus, dtype=float) / aq

    def w_tau(taus):
        taus = np.asarray(taus, dtype=float)
        nv = n_of(taus)
        return (f2_fn(nv) * eval_member(part, N, nv)
                * np.power(taus, beta / 2 - 1) * w_n(nv, np.power(taus, delta)))

    wmodel = WindowModel(fn=w_tau, lo=tau_lo, hi=tau_hi,
                         params={"N": N, "K": K, "theta": theta,
                                 "f2": f2, "f3": f3})
    gauss = _gauss_row(table, chi_index)
    pref = (s * X ** (1 - alpha) / aq) ** (beta / 2) / q

    # tail bound beyond sigma_max (same derivative-growth correction as in
    # the first verification)
    A_tail = 8.0
    sample = np.linspace(tau_lo, tau_hi, 257)
    amp_max = float(np.max(np.abs(w_tau(sample))))
    v_scale = tau_lo * (1 - 1 / theta) / A_tail ** 2
    y_curv = max(abs(float(make_second_phase(h=h, X=X, alpha=alpha, q=q, u=u,
                                             m=m, s=s, sigma=1).dg(
                                                 0.5 * (tau_lo + tau_hi), 2))),
                 1.0)
    lead_peak = float(np.max(np.abs(
        (1 - alpha) * h * X ** alpha * gamma * np.power(sample, gamma - 1))))
    lin_unit = X ** (1 - alpha) * s / (alpha * h * q ** 2 * u * m)

    def tail_beyond(sm: int) -> float:
        acc = 0.0
        for sig_t in range(sm + 1, 64 * (sm + 1)):
            r = lin_unit * sig_t - lead_peak
            if r <= 0:
                continue
            term = nonstationary_bound(X_I=max(amp_max, 1e-300), V_I=v_scale,
                                       Y_I=y_curv, Q_I=1.0, R_I=r, A_I=A_tail,
                                       J_len=max(tau_hi - tau_lo, 1e-12))
            acc += 2 * term * q
            if term * q < 1e-22 * max(acc, 1.0):
                break
        return acc * abs(pref)

    if sigma_max is None:
        sigma_max = int(math.ceil(tw.T4 if tw.T4 is not None else 1)) + 4
        budget = 0.25 * tol * max(1.0, abs(lhs))
        cap = 16 * ((tw.T4 or 1) + 40)
        while tail_beyond(sigma_max) > budget and sigma_max < cap:
            sigma_max += max(4, sigma_max // 4)

    rhs = 0j
    quad_err = 0.0
    g_peak = ((1 - alpha) * h * X ** alpha * tau_hi ** gamma
              + lin_unit * sigma_max * tau_hi)
    floor = 2 * np.pi * 2.3e-16 * g_peak * (tau_hi - tau_lo) * max(amp_max, 1.0)
    qtol = max(quad_tol, 40 * floor)
    for sig in range(-sigma_max, sigma_max + 1):
        tau_sig = gauss[sig % q]
        if abs(tau_sig) < 1e-13:
            continue
        phase = make_second_phase(h=h, X=X, alpha=alpha, q=q, u=u, m=m,
                                  s=s, sigma=sig)
        res = quad_osc(wmodel, phase, (tau_lo, tau_hi), tol=qtol)
        rhs += tau_sig * res.value
        quad_err += abs(tau_sig) * res.error_estimate
    rhs *= pref
    quad_err *= abs(pref)

    tail = tail_beyond(sigma_max)
    scale = max(abs(lhs), abs(rhs), 1e-300)
    if tail > tol * max(1.0, scale):
        raise AccuracyError(f"sigma-sum tail bound {tail} above tolerance",
                            value=rhs, error_estimate=tail)
    diff = abs(lhs - rhs)
    return PoissonCheck(lhs=lhs, rhs=rhs, diff=diff, rel=diff / scale,
                        s_max=sigma_max, tail_bound=tail,
                        empty_main_term=(tw.T4 is not None and tw.T4 < 1),
                        meta={"q": q, "u": u, "m": m, "s": s, "h": h,
                              "alpha": alpha, "X": X, "N": N, "K": K,
                              "theta": theta, "chi_index": chi_index,
                              "n_terms": int(len(ns)),
                              "quad_err": quad_err,
                              "amp_l1": float(np.sum(np.abs(amp))),
                              "tau_support": (tau_lo, tau_hi),
                              "T3": tw.T3, "T4": tw.T4})


def second_change_of_variables_check(q: int, u: int, m: int, s: int, sigma: int,
                                     h: float, alpha: float, X: int,
                                     window: BumpWindow, N: float, K: float,
                                     theta: float = 1.1,
                                     quad_tol: float = 1e-9) -> tuple[complex, complex]:
    """The sigma-integral in the n-variable vs in the tau-variable.

    Returns (direct, transformed): direct = int F(n) e(Phi(n) - sigma n/q) dn,
    transformed = (s X^{1-a}/(a h q u m))^{b/2} J(sigma).  Equality is the
    change-of-variables T = a h q u m n/(s X^{1-a}) with its Jacobian.
    """
    cst = alpha_constants(alpha)
    beta, gamma, delta = cst.beta, cst.gamma, cst.delta
    part = make_partition(theta, 1.0, max(2, math.ceil(math.log(4 * X)
                                                       / math.log(theta))))
    part.grid.index_of(N)
    part.grid.index_of(K)
    aq = alpha * h * q * u * m
    f3_fn = _slot_weight("log")

    def w_n(nv, t):
        nv = np.asarray(nv, dtype=float)
        x = X * np.asarray(t, dtype=float) / (u * m * nv)
        return f3_fn(x) * eval_member(part, K, x) * eval_bump(window, t)

    def t0_of(nv):
        return (aq * np.asarray(nv, dtype=float) / s) ** delta / X

    phi_scale = (1 - alpha) * (alpha ** alpha * h) ** delta

    def amp_n(nv):
        nv = np.asarray(nv, dtype=float)
        return (np.power(nv, beta / 2 - 1) * eval_member(part, N, nv)
                * w_n(nv, t0_of(nv)))

    def phase_n(nv):
        nv = np.asarray(nv, dtype=float)
        return phi_scale * np.power(q * u * m * nv / s, gamma) - sigma * nv / q

    n_lo, n_hi = N / theta, N * theta
    direct = quad_osc(WindowModel(fn=amp_n, lo=n_lo, hi=n_hi),
                      make_generic_phase(phase_n, dg=None, fd_step=1e-2),
                      (n_lo, n_hi), tol=quad_tol)

    def n_of(taus):
        return s * X ** (1 - alpha) * np.asarray(taus, dtype=float) / aq

    def w_tau(taus):
        taus = np.asarray(taus, dtype=float)
        nv = n_of(taus)
        return (eval_member(part, N, nv) * np.power(taus, beta / 2 - 1)
                * w_n(nv, np.power(taus, delta)))

    tau_lo = aq * n_lo / (s * X ** (1 - alpha))
    tau_hi = aq * n_hi / (s * X ** (1 - alpha))
    phase = make_second_phase(h=h, X=X, alpha=alpha, q=q, u=u, m=m,
                              s=s, sigma=sigma)
    transformed = quad_osc(WindowModel(fn=w_tau, lo=tau_lo, hi=tau_hi),
                           phase, (tau_lo, tau_hi), tol=quad_tol)
    pref = (s * X ** (1 - alpha) / aq) ** (beta / 2)
    return direct.value, pref * transformed.value
