"""Sets of admissible boundary values and their membership checks.

Four characterizations are implemented and cross-validated: closed-form case
tables (convex and cubic scalar fluxes), pointwise inequality checks (the
sign-condition test and entropy-pair tests), scheme-level entropy checks with
numerical entropy fluxes, and the Riemann-trace set {R(u_B, w)}.

Sign convention: the pointwise condition is implemented as
(sgn(u_0 - k) - sgn(u_B - k)) (f(u_0) - f(k)) <= 0 for all k; only this sign
reproduces the closed-form case tables, so the opposite printed inequality is
treated as a typo (see the design notes).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize_scalar

from quarterplane.layers import lf_membership_scalar_batch, viscous_member_scalar
from quarterplane.riemann import conjugate_state, cubic_companions, godunov_trace_scalar
from quarterplane.systems import SystemModel

__all__ = [
    "ScalarSet",
    "AuditReport",
    "bln_check",
    "entropy_check",
    "kruzkov_worst",
    "scheme_entropy_check",
    "riemann_set_scalar",
    "exclusion_set",
    "layer_set_scalar",
    "godunov_set",
    "inclusion_audit",
]

TOL_SET = 1e-9  # closed-form sets
TOL_SAMPLED = 1e-4  # sampled / numeric sets


@dataclass(frozen=True)
class ScalarSet:
    """Union of disjoint intervals and isolated points on the real line."""

    intervals: tuple = ()  # (lo, hi, lo_closed, hi_closed), +-inf allowed
    points: tuple = ()
    tol: float = TOL_SET

    def __post_init__(self):
        ivs = sorted(self.intervals)
        for (a, b, *_), (c, d, *_) in zip(ivs, ivs[1:]):
            if c < b:
                raise ValueError("intervals overlap")
        for p in self.points:
            for lo, hi, *_ in ivs:
                if lo < p < hi:
                    raise ValueError("isolated point interior to an interval")
        object.__setattr__(self, "intervals", tuple(ivs))
        object.__setattr__(self, "points", tuple(sorted(self.points)))

    def member(self, x: float) -> bool:
        for p in self.points:
            if abs(x - p) <= self.tol:
                return True
        for lo, hi, lo_c, hi_c in self.intervals:
            above = x >= lo - self.tol if lo_c else x > lo
            below = x <= hi + self.tol if hi_c else x < hi
            if above and below:
                return True
        return False

    def member_grid(self, xs) -> np.ndarray:
        return np.array([self.member(float(x)) for x in np.asarray(xs)])

    def boundary_values(self):
        """Finite endpoints and isolated points (for tolerance-band masking)."""
        vals = list(self.points)
        for lo, hi, *_ in self.intervals:
            for v in (lo, hi):
                if np.isfinite(v):
                    vals.append(v)
        return tuple(sorted(set(vals)))

    def as_json(self) -> dict:
        return {
            "intervals": [[lo, hi, bool(lc), bool(hc)] for lo, hi, lc, hc in self.intervals],
            "points": list(self.points),
        }


@dataclass(frozen=True)
class AuditReport:
    model_name: str
    u_B: object
    regularization: object
    n_samples: int
    n_layer_members: int
    violations: tuple = ()

    @property
    def ok(self) -> bool:
        return not self.violations


# --- Interval extrema (exact, via critical points) ---------------------------


def _interval_extremum(model, a, b, which):
    lo, hi = (a, b) if a <= b else (b, a)
    cands = [lo, hi] + [c for c in model.critical_points if lo < c < hi]
    vals = np.asarray(model.flux(np.asarray(cands, dtype=float)))
    return float(vals.max() if which == "max" else vals.min())


# --- Pointwise checks --------------------------------------------------------


def bln_check(model: SystemModel, u_0: float, u_B: float) -> bool:
    """Pointwise sign-condition test for scalar boundary data, evaluated
    exactly: for u_0 < u_B it reduces to f(u_0) >= max f on [u_0, u_B], for
    u_0 > u_B to f(u_0) <= min f on [u_B, u_0]."""
    if model.dimension != 1:
        raise ValueError("scalar models only")
    u_0, u_B = float(u_0), float(u_B)
    if u_0 == u_B:
        return True
    f0 = float(model.flux(u_0))
    if u_0 < u_B:
        return f0 >= _interval_extremum(model, u_0, u_B, "max") - TOL_SET
    return f0 <= _interval_extremum(model, u_0, u_B, "min") + TOL_SET


def kruzkov_worst(model: SystemModel, u_0: float, u_B: float) -> float:
    """sup over k of the boundary entropy expression for the |u - k| family.

    The supremum is attained at an extremum of f between the two states:
    2 (max f - f(u_0)) for u_0 < u_B and 2 (f(u_0) - min f) for u_0 > u_B.
    """
    u_0, u_B = float(u_0), float(u_B)
    if u_0 == u_B:
        return 0.0
    f0 = float(model.flux(u_0))
    if u_0 < u_B:
        return 2.0 * (_interval_extremum(model, u_0, u_B, "max") - f0)
    return 2.0 * (f0 - _interval_extremum(model, u_0, u_B, "min"))


def entropy_check(model: SystemModel, u_0, u_B, pairs=None):
    """Boundary entropy inequality F(u_0) - F(u_B) - grad U(u_B).(f(u_0) - f(u_B)) <= 0
    over the supplied pairs.  Returns (ok, worst left-hand side).

    For systems the model's finite entropy list is only a necessary
    condition: ok means "not refuted"."""
    if pairs is None:
        pairs = model.entropies
    scalar = model.dimension == 1
    a0 = float(u_0) if scalar else np.asarray(u_0, dtype=float)
    aB = float(u_B) if scalar else np.asarray(u_B, dtype=float)
    df = np.atleast_1d(np.asarray(model.flux(a0)) - np.asarray(model.flux(aB)))
    worst = -np.inf
    for pair in pairs:
        lhs = float(pair.F(a0)) - float(pair.F(aB)) \
            - float(np.dot(np.atleast_1d(pair.grad_U(aB)), df))
        worst = max(worst, lhs)
    return worst <= TOL_SET, worst


# --- Scheme-level entropy checks ---------------------------------------------


def _kruzkov_terms(model, k, u):
    """U and F of the |u - k| family, vectorized over both arguments."""
    k = np.asarray(k, dtype=float)
    u = np.asarray(u, dtype=float)
    sign = np.sign(u - k)
    return np.abs(u - k), sign * (np.asarray(model.flux(u)) - np.asarray(model.flux(k)))


def _numerical_entropy_flux(model, scheme, k, v, w):
    """G_k(v, w) for the Kruzkov family under the given scheme."""
    if scheme[0] == "lf":
        _, lam, q = scheme
        coeff = q / lam
        u_v, f_v = _kruzkov_terms(model, k, v)
        u_w, f_w = _kruzkov_terms(model, k, w)
        return 0.5 * (f_v + f_w) - coeff * (u_w - u_v)
    if scheme[0] == "godunov":
        r = godunov_trace_scalar(model, np.broadcast_to(np.asarray(v, dtype=float), np.shape(w))
                                 if np.shape(v) != np.shape(w) else v, w)
        _, f_r = _kruzkov_terms(model, k, r)
        return f_r
    raise ValueError("scheme must be ('lf', lam, q) or ('godunov',)")


def _witness_margin(model, scheme, u_0, u_B, v_1, k_grid):
    _, f_0 = _kruzkov_terms(model, k_grid, u_0)
    g = _numerical_entropy_flux(model, scheme, k_grid, u_B, v_1)
    return float(np.min(g - f_0))


def scheme_entropy_check(model: SystemModel, scheme, u_0: float, u_B: float,
                         v_1=None, box=(-3.0, 3.0), n_grid=601) -> bool:
    """Existence of an interior witness v_1 with G_k(u_B, v_1) >= F_k(u_0)
    for the whole Kruzkov family (k on a grid over the state box).

    With v_1 supplied, checks that witness; otherwise scans a grid of
    candidates and polishes the best margin with a bounded 1-d optimizer."""
    if model.dimension != 1:
        raise ValueError("scalar models only")
    lo = min(box[0], u_0, u_B) - 0.5
    hi = max(box[1], u_0, u_B) + 0.5
    k_grid = np.linspace(lo, hi, n_grid)
    if v_1 is not None:
        return _witness_margin(model, scheme, u_0, u_B, float(v_1), k_grid) >= -TOL_SAMPLED

    v_grid = np.linspace(lo, hi, n_grid)
    _, f_0 = _kruzkov_terms(model, k_grid, u_0)
    g = _numerical_entropy_flux(model, scheme, k_grid[None, :], u_B,
                                v_grid[:, None])
    margins = np.min(g - f_0[None, :], axis=1)
    best = int(np.argmax(margins))
    if margins[best] >= -TOL_SAMPLED:
        return True
    bracket_lo = v_grid[max(best - 1, 0)]
    bracket_hi = v_grid[min(best + 1, n_grid - 1)]
    res = minimize_scalar(
        lambda v: -_witness_margin(model, scheme, u_0, u_B, v, k_grid),
        bounds=(bracket_lo, bracket_hi), method="bounded",
        options={"xatol": 1e-10})
    return -res.fun >= -TOL_SAMPLED


# --- Closed-form case tables -------------------------------------------------


def riemann_set_scalar(model: SystemModel, u_B: float) -> ScalarSet:
    """The set of boundary traces of Riemann solutions with left state u_B."""
    u_B = float(u_B)
    if model.flux_convex:
        u_star = model.critical_points[0]
        if u_B > u_star:
            u_conj = conjugate_state(model, u_B)
            return ScalarSet(((-np.inf, u_conj, False, True),), (u_B,))
        return ScalarSet(((-np.inf, u_star, False, True),))
    if model.name != "cubic":
        raise ValueError("closed-form sets exist for convex fluxes and the cubic model")
    if u_B < -2.0:
        return ScalarSet((), (u_B,))
    if u_B == -2.0:
        return ScalarSet((), (-2.0, 1.0))
    if u_B < -1.0:
        u_s = min(cubic_companions(model, u_B))
        return ScalarSet(((u_s, 1.0, True, True),), (u_B,))
    if u_B <= 1.0:
        return ScalarSet(((-1.0, 1.0, True, True),))
    if u_B < 2.0:
        u_l = max(cubic_companions(model, u_B))
        return ScalarSet(((-1.0, u_l, True, True),), (u_B,))
    if u_B == 2.0:
        return ScalarSet((), (-1.0, 2.0))
    return ScalarSet((), (u_B,))


def exclusion_set(model: SystemModel, u_B: float) -> tuple:
    """Points of the Riemann set that admit no boundary layer (the excluded
    set is empty or a single state)."""
    u_B = float(u_B)
    if model.flux_convex:
        u_star = model.critical_points[0]
        if u_B == u_star:
            return ()
        conj = conjugate_state(model, u_B)
        # for u_B below the sonic point the conjugate lies outside the
        # Riemann set, so nothing is actually removed
        return (conj,) if riemann_set_scalar(model, u_B).member(conj) else ()
    if model.name != "cubic":
        raise ValueError("closed-form sets exist for convex fluxes and the cubic model")
    if u_B == -2.0:
        return (1.0,)
    if u_B == 2.0:
        return (-1.0,)
    if -2.0 < u_B < -1.0:
        return (min(cubic_companions(model, u_B)),)
    if 1.0 < u_B < 2.0:
        return (max(cubic_companions(model, u_B)),)
    return ()


def _remove_points(s: ScalarSet, removed) -> ScalarSet:
    intervals = list(s.intervals)
    points = [p for p in s.points if all(abs(p - r) > TOL_SET for r in removed)]
    for r in removed:
        out = []
        for lo, hi, lo_c, hi_c in intervals:
            if abs(r - lo) <= TOL_SET:
                out.append((lo, hi, False, hi_c))
            elif abs(r - hi) <= TOL_SET:
                out.append((lo, hi, lo_c, False))
            elif lo < r < hi:
                out.append((lo, r, lo_c, False))
                out.append((r, hi, False, hi_c))
            else:
                out.append((lo, hi, lo_c, hi_c))
        intervals = out
    return ScalarSet(tuple(intervals), tuple(points), s.tol)


def layer_set_scalar(model: SystemModel, u_B: float, regularization) -> ScalarSet:
    """Closed-form layer-admissible set: the Riemann set minus the excluded
    point(s).  For the LF regularization the subtraction is valid under the
    CFL hypothesis sup_{[-8M, 8M]} |f'| * lam / q <= 1."""
    if isinstance(regularization, tuple) and regularization[0] == "lf":
        _, lam, q = regularization
        m_window = 8.0 * max(2.0, abs(u_B), 3.0)
        grid = np.linspace(-m_window, m_window, 4001)
        sup_fp = float(np.max(np.abs(np.asarray(model.dflux(grid)))))
        if sup_fp * lam / q > 1.0 + 1e-12:
            raise ValueError("CFL hypothesis sup|f'| lam/q <= 1 violated")
    elif regularization != "viscous":
        raise ValueError("regularization must be 'viscous' or ('lf', lam, q)")
    base = riemann_set_scalar(model, u_B)
    return _remove_points(base, exclusion_set(model, u_B))


def godunov_set(model: SystemModel, u_B: float, w_grid) -> np.ndarray:
    """Traces {R(u_B, w)} over the candidate grid, deduplicated."""
    w = np.asarray(w_grid, dtype=float)
    if w.size == 0:
        return w
    traces = godunov_trace_scalar(model, np.full_like(w, float(u_B)), w)
    traces = np.sort(traces)
    keep = np.concatenate([[True], np.diff(traces) > TOL_SET])
    return traces[keep]


# --- Membership oracles and the inclusion audit ------------------------------


def layer_member_oracle(model: SystemModel, u_B: float, candidates, regularization,
                        y_max: int = 20000) -> np.ndarray:
    """Numerical layer membership for a batch of scalar candidates."""
    v = np.asarray(candidates, dtype=float)
    if regularization == "viscous":
        return np.array([viscous_member_scalar(model, u_B, float(x)) for x in v])
    _, lam, q = regularization
    return lf_membership_scalar_batch(model, lam, q, float(u_B), v, y_max=y_max,
                                      member_tol=5e-4 * (1.0 + np.abs(v)))


def inclusion_audit(model: SystemModel, u_B, regularization, n_samples: int = 1000,
                    seed: int = 0, box=(-3.0, 3.0)) -> AuditReport:
    """Sample candidate limits and assert layer membership implies entropy
    membership; returns the (expected empty) list of counterexamples."""
    rng = np.random.default_rng(seed)
    violations = []

    if model.dimension == 1:
        samples = rng.uniform(box[0], box[1], n_samples)
        members = layer_member_oracle(model, float(u_B), samples, regularization) \
            if n_samples else np.zeros(0, dtype=bool)
        n_members = int(members.sum())
        for x in samples[members]:
            if kruzkov_worst(model, float(x), float(u_B)) > TOL_SAMPLED:
                violations.append(float(x))
        return AuditReport(model.name, float(u_B), regularization, n_samples,
                           n_members, tuple(violations))

    if model.name != "elastodynamics" or regularization != "viscous":
        raise ValueError("system audits are supported for the viscous p-system")
    from quarterplane.layers import elasto_layer_curve

    u_B = np.asarray(u_B, dtype=float)
    n_curve = n_samples // 2
    vs = u_B[0] + rng.uniform(-0.5, 0.5, max(n_curve, 0))
    curve = elasto_layer_curve(model, u_B, vs) if n_curve else None
    n_members = n_curve
    if curve is not None:
        for pt in curve.points:
            ok, worst = entropy_check(model, pt, u_B)
            if not ok:
                violations.append((float(pt[0]), float(pt[1]), worst))
    # off-curve samples are not layer members; the implication is vacuous
    return AuditReport(model.name, tuple(u_B), regularization, n_samples,
                       n_members, tuple(violations))
