"""Conservation-law system definitions.

Each model packages the flux, its Jacobian, an eigendecomposition, a list of
entropy pairs (at least one strictly convex) and a viscosity matrix.  States
for scalar models are plain floats (or numpy arrays, elementwise); states for
2x2 systems are arrays whose last axis has length 2.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

__all__ = [
    "EntropyPair",
    "EigenStructure",
    "SystemModel",
    "HyperbolicityError",
    "make_model",
    "eigen_structure",
    "classify_euler_region",
    "entropy_eval",
    "kruzkov_pair",
]


class HyperbolicityError(ValueError):
    """Raised when the Jacobian is defective or has complex eigenvalues."""


# --- Domain types ------------------------------------------------------------


@dataclass(frozen=True)
class EntropyPair:
    """An entropy/entropy-flux pair (U, F) with gradient and Hessian of U.

    ``convexity`` is one of ``strictly-convex``, ``convex`` or ``trivial``.
    Trivial pairs are (+-u_j, +-f_j); they carry no convexity information but
    are useful to force flux equalities in admissibility arguments.
    """

    U: Callable
    F: Callable
    grad_U: Callable
    hess_U: Callable
    convexity: str = "strictly-convex"
    label: str = ""


@dataclass(frozen=True)
class EigenStructure:
    """Sorted eigenvalues with biorthonormal left/right eigenvectors.

    ``right`` holds right eigenvectors as columns, ``left`` holds left
    eigenvectors as rows, so that left @ right == identity.  ``p`` counts the
    strictly negative eigenvalues (characteristic speeds entering from the
    right of the boundary); ``characteristic`` is set when some eigenvalue is
    zero up to ``tol_char``.
    """

    eigenvalues: np.ndarray
    right: np.ndarray
    left: np.ndarray
    p: int
    characteristic: bool
    tol_char: float


@dataclass(frozen=True)
class SystemModel:
    name: str
    dimension: int
    flux: Callable
    jacobian: Callable  # state -> (N, N) matrix
    entropies: tuple
    viscosity: Callable  # state -> (N, N) matrix
    state_region: tuple  # per-component (lo, hi) open bounds
    params: dict = field(default_factory=dict)
    # Scalar conveniences (None for systems): elementwise f' and the interior
    # critical points of f (roots of f'), used by envelope/extremum code.
    dflux: Optional[Callable] = None
    critical_points: tuple = ()
    # Vectorized max characteristic speed, used for CFL control.
    max_char_speed: Optional[Callable] = None
    flux_convex: bool = False

    def in_region(self, state) -> bool:
        u = np.atleast_1d(np.asarray(state, dtype=float))
        if self.dimension == 1:
            lo, hi = self.state_region[0]
            return bool(np.all(u > lo) and np.all(u < hi))
        ok = True
        for i, (lo, hi) in enumerate(self.state_region):
            ok = ok and bool(np.all(u[..., i] > lo) and np.all(u[..., i] < hi))
        return ok


# --- Eigen helpers -----------------------------------------------------------


def _eig2(a: np.ndarray, tol: float = 1e-12):
    """Closed-form eigendecomposition of a real 2x2 matrix.

    Returns (eigenvalues ascending, right eigenvector matrix).  Raises
    HyperbolicityError for complex or defective spectra.
    """
    tr = a[0, 0] + a[1, 1]
    det = a[0, 0] * a[1, 1] - a[0, 1] * a[1, 0]
    disc = tr * tr - 4.0 * det
    scale = 1.0 + abs(tr) + abs(det)
    if disc < -tol * scale:
        raise HyperbolicityError("complex eigenvalues: disc=%g" % disc)
    disc = max(disc, 0.0)
    rt = np.sqrt(disc)
    lam1 = 0.5 * (tr - rt)
    lam2 = 0.5 * (tr + rt)
    if rt <= tol * scale:
        # Equal eigenvalues: only acceptable if the matrix is (numerically) a
        # multiple of the identity, otherwise it is defective.
        off = abs(a[0, 1]) + abs(a[1, 0]) + abs(a[0, 0] - a[1, 1])
        if off > tol * scale:
            raise HyperbolicityError("defective 2x2 matrix")
        return np.array([lam1, lam2]), np.eye(2)

    def _evec(lam):
        # Null vector of (a - lam I), taking the numerically larger row.
        r0 = (a[0, 0] - lam, a[0, 1])
        r1 = (a[1, 0], a[1, 1] - lam)
        row = r0 if abs(r0[0]) + abs(r0[1]) >= abs(r1[0]) + abs(r1[1]) else r1
        v = np.array([-row[1], row[0]])
        n = np.linalg.norm(v)
        if n == 0.0:
            v = np.array([1.0, 0.0])
            n = 1.0
        return v / n

    right = np.column_stack([_evec(lam1), _evec(lam2)])
    return np.array([lam1, lam2]), right


def eigen_structure(model: SystemModel, state, tol_char: Optional[float] = None) -> EigenStructure:
    """Eigenvalues/eigenvectors of the flux Jacobian at ``state``.

    Eigenvalues are sorted ascending; left eigenvectors are the rows of the
    inverse of the right eigenvector matrix, which makes the pairing
    biorthonormal by construction.
    """
    if model.dimension == 1:
        lam = float(model.dflux(float(np.asarray(state).reshape(()))))
        tc = tol_char if tol_char is not None else 1e-9 * (1.0 + abs(lam))
        evals = np.array([lam])
        return EigenStructure(
            eigenvalues=evals,
            right=np.ones((1, 1)),
            left=np.ones((1, 1)),
            p=int(lam < -tc),
            characteristic=bool(abs(lam) <= tc),
            tol_char=tc,
        )
    a = np.asarray(model.jacobian(state), dtype=float)
    if a.shape == (2, 2):
        evals, right = _eig2(a)
    else:
        ev, rv = np.linalg.eig(a)
        if np.max(np.abs(ev.imag)) > 1e-9 * (1.0 + np.max(np.abs(ev.real))):
            raise HyperbolicityError("complex eigenvalues")
        order = np.argsort(ev.real)
        evals = ev.real[order]
        right = rv.real[:, order]
    left = np.linalg.inv(right)
    tc = tol_char if tol_char is not None else 1e-9 * (1.0 + float(np.max(np.abs(evals))))
    p = int(np.sum(evals < -tc))
    characteristic = bool(np.any(np.abs(evals) <= tc))
    return EigenStructure(evals, right, left, p, characteristic, tc)


def entropy_eval(pair: EntropyPair, state):
    """Evaluate an entropy pair, returning the triple (U, F, grad U)."""
    return pair.U(state), pair.F(state), pair.grad_U(state)


# --- Built-in models ---------------------------------------------------------


def _trivial_pairs_scalar(f):
    def hess(u):
        return 0.0 * np.asarray(u, dtype=float)

    return (
        EntropyPair(U=lambda u: np.asarray(u, dtype=float) + 0.0, F=f,
                    grad_U=lambda u: np.ones_like(np.asarray(u, dtype=float)),
                    hess_U=hess, convexity="trivial", label="+u"),
        EntropyPair(U=lambda u: -np.asarray(u, dtype=float), F=lambda u: -f(u),
                    grad_U=lambda u: -np.ones_like(np.asarray(u, dtype=float)),
                    hess_U=hess, convexity="trivial", label="-u"),
    )


def _trivial_pairs_system(flux, n):
    pairs = []
    for j in range(n):
        for sgn, tag in ((1.0, "+"), (-1.0, "-")):
            def U(u, j=j, sgn=sgn):
                return sgn * np.asarray(u, dtype=float)[..., j]

            def F(u, j=j, sgn=sgn):
                return sgn * np.asarray(flux(u))[..., j]

            def grad(u, j=j, sgn=sgn):
                g = np.zeros(n)
                g[j] = sgn
                return g

            def hess(u):
                return np.zeros((n, n))

            pairs.append(EntropyPair(U, F, grad, hess, "trivial", "%su_%d" % (tag, j + 1)))
    return tuple(pairs)


def _make_burgers(params):
    def f(u):
        u = np.asarray(u, dtype=float)
        return 0.5 * u * u

    def df(u):
        return np.asarray(u, dtype=float) + 0.0

    quad = EntropyPair(
        U=lambda u: 0.5 * np.asarray(u, dtype=float) ** 2,
        F=lambda u: np.asarray(u, dtype=float) ** 3 / 3.0,
        grad_U=lambda u: np.asarray(u, dtype=float) + 0.0,
        hess_U=lambda u: np.ones_like(np.asarray(u, dtype=float)),
        convexity="strictly-convex",
        label="u^2/2",
    )
    return SystemModel(
        name="burgers", dimension=1, flux=f,
        jacobian=lambda u: np.array([[float(df(u))]]),
        entropies=(quad,) + _trivial_pairs_scalar(f),
        viscosity=lambda u: np.eye(1),
        state_region=((-np.inf, np.inf),),
        params=dict(params), dflux=df, critical_points=(0.0,),
        max_char_speed=lambda u: np.abs(np.asarray(u, dtype=float)),
        flux_convex=True,
    )


def _make_cubic(params):
    def f(u):
        u = np.asarray(u, dtype=float)
        return 0.5 * (u ** 3 - 3.0 * u)

    def df(u):
        u = np.asarray(u, dtype=float)
        return 1.5 * u * u - 1.5

    quad = EntropyPair(
        U=lambda u: 0.5 * np.asarray(u, dtype=float) ** 2,
        # F' = u f'(u) = (3u^3 - 3u)/2  ->  F = 3u^4/8 - 3u^2/4
        F=lambda u: 0.375 * np.asarray(u, dtype=float) ** 4 - 0.75 * np.asarray(u, dtype=float) ** 2,
        grad_U=lambda u: np.asarray(u, dtype=float) + 0.0,
        hess_U=lambda u: np.ones_like(np.asarray(u, dtype=float)),
        convexity="strictly-convex",
        label="u^2/2",
    )
    return SystemModel(
        name="cubic", dimension=1, flux=f,
        jacobian=lambda u: np.array([[float(df(u))]]),
        entropies=(quad,) + _trivial_pairs_scalar(f),
        viscosity=lambda u: np.eye(1),
        state_region=((-np.inf, np.inf),),
        params=dict(params), dflux=df, critical_points=(-1.0, 1.0),
        max_char_speed=lambda u: np.abs(df(u)),
        flux_convex=False,
    )


def _make_linear2(params):
    a = np.array(params.get("A", [[-5.0, 5.0], [-3.0, 3.0]]), dtype=float)
    b_diag = np.asarray(params.get("B", [1.0, 1.0]), dtype=float)
    if a.shape != (2, 2):
        raise ValueError("linear2 requires a 2x2 matrix A")
    if b_diag.shape != (2,) or np.any(b_diag <= 0.0):
        raise ValueError("linear2 requires a positive-definite diagonal viscosity B")
    evals, right = _eig2(a)  # validates strict hyperbolicity
    left = np.linalg.inv(right)

    def f(u):
        u = np.asarray(u, dtype=float)
        return u @ a.T

    # Quadratic entropy built from characteristic variables: U = 1/2 sum (l_i.u)^2
    # with F = 1/2 sum lambda_i (l_i.u)^2; compatibility holds by construction.
    s_mat = left.T @ left
    fs_mat = left.T @ np.diag(evals) @ left

    quad = EntropyPair(
        U=lambda u: 0.5 * np.einsum("...i,ij,...j->...", np.asarray(u, dtype=float), s_mat, np.asarray(u, dtype=float)),
        F=lambda u: 0.5 * np.einsum("...i,ij,...j->...", np.asarray(u, dtype=float), fs_mat, np.asarray(u, dtype=float)),
        grad_U=lambda u: s_mat @ np.asarray(u, dtype=float),
        hess_U=lambda u: s_mat.copy(),
        convexity="strictly-convex",
        label="characteristic-quadratic",
    )
    amax = float(np.max(np.abs(evals)))
    return SystemModel(
        name="linear2", dimension=2, flux=f,
        jacobian=lambda u: a.copy(),
        entropies=(quad,) + _trivial_pairs_system(f, 2),
        viscosity=lambda u: np.diag(b_diag),
        state_region=((-np.inf, np.inf), (-np.inf, np.inf)),
        params={"A": a, "B": b_diag},
        max_char_speed=lambda u: np.full(np.asarray(u, dtype=float).shape[:-1], amax),
    )


def _default_stress(v):
    v = np.asarray(v, dtype=float)
    return v + v ** 3 / 3.0


def _default_stress_prime(v):
    v = np.asarray(v, dtype=float)
    return 1.0 + v * v


def _default_stress_energy(v):
    # integral of sigma from 0 to v
    v = np.asarray(v, dtype=float)
    return 0.5 * v * v + v ** 4 / 12.0


def _make_elastodynamics(params):
    sigma = params.get("sigma", _default_stress)
    sigma_p = params.get("sigma_prime", _default_stress_prime)
    sigma_int = params.get("sigma_energy", _default_stress_energy)
    if sigma_p(1.0) <= 0.0 or sigma_p(-1.0) <= 0.0:
        raise ValueError("stress law must satisfy sigma' > 0")

    def f(u):
        u = np.asarray(u, dtype=float)
        out = np.empty_like(u)
        out[..., 0] = -u[..., 1]
        out[..., 1] = -sigma(u[..., 0])
        return out

    def jac(u):
        u = np.asarray(u, dtype=float)
        return np.array([[0.0, -1.0], [-float(sigma_p(u[0])), 0.0]])

    energy = EntropyPair(
        U=lambda u: 0.5 * np.asarray(u, dtype=float)[..., 1] ** 2 + sigma_int(np.asarray(u, dtype=float)[..., 0]),
        F=lambda u: -np.asarray(u, dtype=float)[..., 1] * sigma(np.asarray(u, dtype=float)[..., 0]),
        grad_U=lambda u: np.array([float(sigma(u[0])), float(u[1])]),
        hess_U=lambda u: np.diag([float(sigma_p(u[0])), 1.0]),
        convexity="strictly-convex",
        label="mechanical-energy",
    )
    return SystemModel(
        name="elastodynamics", dimension=2, flux=f, jacobian=jac,
        entropies=(energy,) + _trivial_pairs_system(f, 2),
        viscosity=lambda u: np.eye(2),
        state_region=((-np.inf, np.inf), (-np.inf, np.inf)),
        params={"sigma": sigma, "sigma_prime": sigma_p, "sigma_energy": sigma_int},
        max_char_speed=lambda u: np.sqrt(sigma_p(np.asarray(u, dtype=float)[..., 0])),
    )


def _make_euler(params):
    gamma = float(params.get("gamma", 2.0))
    if gamma <= 1.0:
        raise ValueError("euler_isentropic requires gamma > 1")

    def f(u):
        u = np.asarray(u, dtype=float)
        rho = u[..., 0]
        m = u[..., 1]
        out = np.empty_like(u)
        out[..., 0] = m
        out[..., 1] = m * m / rho + rho ** gamma
        return out

    def jac(u):
        rho, m = float(u[0]), float(u[1])
        return np.array([
            [0.0, 1.0],
            [-(m / rho) ** 2 + gamma * rho ** (gamma - 1.0), 2.0 * m / rho],
        ])

    energy = EntropyPair(
        U=lambda u: 0.5 * np.asarray(u, dtype=float)[..., 1] ** 2 / np.asarray(u, dtype=float)[..., 0]
        + np.asarray(u, dtype=float)[..., 0] ** gamma / (gamma - 1.0),
        F=lambda u: np.asarray(u, dtype=float)[..., 1] ** 3 / (2.0 * np.asarray(u, dtype=float)[..., 0] ** 2)
        + gamma / (gamma - 1.0) * np.asarray(u, dtype=float)[..., 1] * np.asarray(u, dtype=float)[..., 0] ** (gamma - 1.0),
        grad_U=lambda u: np.array([
            -0.5 * (u[1] / u[0]) ** 2 + gamma / (gamma - 1.0) * u[0] ** (gamma - 1.0),
            u[1] / u[0],
        ]),
        hess_U=lambda u: np.array([
            [u[1] ** 2 / u[0] ** 3 + gamma * u[0] ** (gamma - 2.0), -u[1] / u[0] ** 2],
            [-u[1] / u[0] ** 2, 1.0 / u[0]],
        ]),
        convexity="strictly-convex",
        label="total-energy",
    )

    def max_speed(u):
        u = np.asarray(u, dtype=float)
        rho = u[..., 0]
        c = np.sqrt(gamma * rho ** (gamma - 1.0))
        return np.abs(u[..., 1] / rho) + c

    return SystemModel(
        name="euler_isentropic", dimension=2, flux=f, jacobian=jac,
        entropies=(energy,) + _trivial_pairs_system(f, 2),
        viscosity=lambda u: np.eye(2),
        state_region=((0.0, np.inf), (-np.inf, np.inf)),
        params={"gamma": gamma},
        max_char_speed=max_speed,
    )


def _make_lagrangian(params):
    def f(u):
        u = np.asarray(u, dtype=float)
        out = np.empty_like(u)
        out[..., 0] = -u[..., 1]
        out[..., 1] = 1.0 / u[..., 0]
        return out

    def jac(u):
        v = float(u[0])
        return np.array([[0.0, -1.0], [-1.0 / (v * v), 0.0]])

    energy = EntropyPair(
        U=lambda u: 0.5 * np.asarray(u, dtype=float)[..., 1] ** 2 - np.log(np.asarray(u, dtype=float)[..., 0]),
        F=lambda u: np.asarray(u, dtype=float)[..., 1] / np.asarray(u, dtype=float)[..., 0],
        grad_U=lambda u: np.array([-1.0 / u[0], u[1]]),
        hess_U=lambda u: np.diag([1.0 / u[0] ** 2, 1.0]),
        convexity="strictly-convex",
        label="mechanical-energy",
    )
    return SystemModel(
        name="lagrangian_gas", dimension=2, flux=f, jacobian=jac,
        entropies=(energy,) + _trivial_pairs_system(f, 2),
        viscosity=lambda u: np.eye(2),
        state_region=((0.0, np.inf), (-np.inf, np.inf)),
        params=dict(params),
        max_char_speed=lambda u: 1.0 / np.asarray(u, dtype=float)[..., 0],
    )


_FACTORIES = {
    "burgers": _make_burgers,
    "cubic": _make_cubic,
    "linear2": _make_linear2,
    "elastodynamics": _make_elastodynamics,
    "euler_isentropic": _make_euler,
    "lagrangian_gas": _make_lagrangian,
}


def make_model(name: str, **params) -> SystemModel:
    """Build one of the built-in systems by name."""
    try:
        factory = _FACTORIES[name]
    except KeyError:
        raise ValueError("unknown model %r; choose from %s" % (name, sorted(_FACTORIES)))
    return factory(params)


# --- Model-specific helpers --------------------------------------------------


def classify_euler_region(model: SystemModel, state) -> str:
    """Classify an (rho, u) state by the signs of u - c and u + c.

    Returns one of "I".."V".  Note the argument is the primitive pair
    (density, velocity), not the conserved state.
    """
    if model.name != "euler_isentropic":
        raise ValueError("region classification only applies to euler_isentropic")
    rho, u = float(state[0]), float(state[1])
    if rho <= 0.0:
        raise ValueError("density must be positive")
    gamma = model.params["gamma"]
    c = np.sqrt(gamma * rho ** (gamma - 1.0))
    tol = 1e-9 * (1.0 + abs(u) + c)
    s1 = u - c
    s2 = u + c
    if s1 > tol:
        return "V"
    if abs(s1) <= tol:
        return "IV"
    if s2 > tol:
        return "III"
    if abs(s2) <= tol:
        return "II"
    return "I"


def kruzkov_pair(model: SystemModel, k: float) -> EntropyPair:
    """The scalar entropy family U = |u - k|, F = sgn(u - k)(f(u) - f(k))."""
    if model.dimension != 1:
        raise ValueError("the Kruzkov family only exists for scalar models")
    f = model.flux
    fk = float(f(k))

    def U(u):
        return np.abs(np.asarray(u, dtype=float) - k)

    def F(u):
        u = np.asarray(u, dtype=float)
        return np.sign(u - k) * (f(u) - fk)

    def grad(u):
        return np.sign(np.asarray(u, dtype=float) - k)

    def hess(u):
        return 0.0 * np.asarray(u, dtype=float)

    return EntropyPair(U, F, grad, hess, "convex", "kruzkov(k=%g)" % k)
