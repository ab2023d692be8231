"""Modulation models: averaged Lagrangian, wave action maps and their derivatives.

A model supplies ``L(omega, k)`` and/or the wave action and flux maps
``A = D_omega L``, ``B = D_k L``.  Whatever is missing is recovered with
central differences; the linearised modulation equations then reduce to the
pencil ``E(c) = D_omega A c**2 + (D_k A + D_omega B) c + D_k B``.
"""

from dataclasses import dataclass, field
from typing import Any, Callable

import numpy as np

from .config import DEFAULT_TOL
from .errors import ModelError, OutsideDomain, SymmetryViolation
from .pencil import QuadraticPencil

EPS = np.finfo(float).eps


def _always(omega, k):
    return True


@dataclass(frozen=True)
class ActionHessians:
    """Second derivatives of ``A`` and ``B``; entry ``[i, j, l]`` is
    ``d^2 A_i / dx_j dy_l`` for the variable pair in the attribute name."""

    a_ww: np.ndarray
    a_wk: np.ndarray
    a_kk: np.ndarray
    b_ww: np.ndarray
    b_wk: np.ndarray
    b_kk: np.ndarray


@dataclass(frozen=True)
class ModulationModel:
    """Evaluator of the averaged Lagrangian and/or wave action maps.

    Parameters
    ----------
    n_phases : int
        Number of phases ``N``.
    lagrangian : callable ``(omega, k) -> float``, optional
    action_maps : callable ``(omega, k) -> (A, B)``, optional
    analytic_jacobians : callable ``(omega, k) -> (dwa, dka, dwb, dkb)``, optional
    action_hessians : callable ``(omega, k) -> ActionHessians``, optional
        Enables the tensor route for the nonlinear coefficient.
    dispersion_hook : callable ``(context: dict) -> float | None``, optional
    domain_guard : callable ``(omega, k) -> bool``, optional
        Existence region of the underlying wavetrain; defaults to everywhere.
    """

    n_phases: int
    lagrangian: Callable | None = None
    action_maps: Callable | None = None
    analytic_jacobians: Callable | None = None
    action_hessians: Callable | None = None
    dispersion_hook: Callable | None = None
    domain_guard: Callable = _always
    name: str = "custom"
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.n_phases < 1:
            raise ModelError("n_phases must be >= 1")
        if self.lagrangian is None and self.action_maps is None:
            raise ModelError("a model needs a lagrangian or action maps")

    def check_domain(self, omega, k):
        omega, k = _vec(omega, self.n_phases, "omega"), _vec(k, self.n_phases, "k")
        if not self.domain_guard(omega, k):
            raise OutsideDomain(f"no wavetrain of model {self.name!r} at omega={omega.tolist()}, k={k.tolist()}")
        return omega, k


def _vec(x, n, name):
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if x.shape != (n,):
        raise ModelError(f"{name} must have shape ({n},), got {x.shape}")
    return x


def _step(order, omega, k):
    return EPS ** (1.0 / (order + 2)) * (1.0 + np.linalg.norm(np.concatenate([omega, k])))


@dataclass(frozen=True)
class JacobianSet:
    dwa: np.ndarray
    dka: np.ndarray
    dwb: np.ndarray
    dkb: np.ndarray

    @property
    def symmetry_defect(self):
        """Relative defect of ``D_k A = (D_omega B)^T``."""
        scale = max(np.linalg.norm(self.dka), np.linalg.norm(self.dwb), np.linalg.norm(self.dwa), np.linalg.norm(self.dkb))
        if scale == 0:
            return 0.0
        return float(np.linalg.norm(self.dka - self.dwb.T) / scale)

    def to_dict(self):
        return {k: getattr(self, k).tolist() for k in ("dwa", "dka", "dwb", "dkb")}


def _grad_fd(f, omega, k):
    """Central-difference gradient of scalar ``f`` with one Richardson step."""
    n = len(omega)
    h = _step(1, omega, k)
    z0 = np.concatenate([omega, k])

    def g(hh):
        out = np.empty(2 * n)
        for i in range(2 * n):
            e = np.zeros(2 * n)
            e[i] = hh
            zp, zm = z0 + e, z0 - e
            out[i] = (f(zp[:n], zp[n:]) - f(zm[:n], zm[n:])) / (2 * hh)
        return out

    return (4 * g(h / 2) - g(h)) / 3


def wave_action(m, omega, k):
    """``(A, B)`` at ``(omega, k)``: analytic maps if present, else gradients of ``L``."""
    omega, k = m.check_domain(omega, k)
    if m.action_maps is not None:
        A, B = m.action_maps(omega, k)
        return np.asarray(A, dtype=float), np.asarray(B, dtype=float)
    grad = _grad_fd(m.lagrangian, omega, k)
    n = m.n_phases
    return grad[:n], grad[n:]


def _jacobians_fd(m, omega, k):
    n = m.n_phases
    z0 = np.concatenate([omega, k])
    if m.action_maps is not None:
        h = _step(1, omega, k)

        def fmap(z):
            A, B = m.action_maps(z[:n], z[n:])
            return np.concatenate([A, B])

        def jac(hh):
            J = np.empty((2 * n, 2 * n))
            for j in range(2 * n):
                e = np.zeros(2 * n)
                e[j] = hh
                J[:, j] = (fmap(z0 + e) - fmap(z0 - e)) / (2 * hh)
            return J

        J = (4 * jac(h / 2) - jac(h)) / 3
    else:
        # Hessian of L directly: avoids nesting two difference quotients
        h = _step(2, omega, k)
        f = m.lagrangian

        def fz(z):
            return f(z[:n], z[n:])

        def hess(hh):
            H = np.empty((2 * n, 2 * n))
            f0 = fz(z0)
            for i in range(2 * n):
                ei = np.zeros(2 * n)
                ei[i] = hh
                H[i, i] = (fz(z0 + ei) - 2 * f0 + fz(z0 - ei)) / hh**2
                for j in range(i):
                    ej = np.zeros(2 * n)
                    ej[j] = hh
                    H[i, j] = H[j, i] = (
                        fz(z0 + ei + ej) - fz(z0 + ei - ej) - fz(z0 - ei + ej) + fz(z0 - ei - ej)
                    ) / (4 * hh**2)
            return H

        J = (4 * hess(h / 2) - hess(h)) / 3
    # rows: (A, B); columns: (omega, k)
    return JacobianSet(dwa=J[:n, :n], dka=J[:n, n:], dwb=J[n:, :n], dkb=J[n:, n:])


def jacobians(m, omega, k, tol=DEFAULT_TOL):
    """``(D_omega A, D_k A, D_omega B, D_k B)``, analytic if the model provides them."""
    omega, k = m.check_domain(omega, k)
    if m.analytic_jacobians is not None:
        js = JacobianSet(*(np.atleast_2d(np.asarray(a, dtype=float)) for a in m.analytic_jacobians(omega, k)))
    else:
        js = _jacobians_fd(m, omega, k)
    if js.symmetry_defect > tol.jacobian_symmetry:
        raise SymmetryViolation(
            f"D_k A and (D_omega B)^T differ by {js.symmetry_defect:.3g} (relative); "
            "A and B are not the gradients of one Lagrangian"
        )
    return js


def pencil_from_jacobians(js):
    return QuadraticPencil.from_matrices(js.dwa, js.dka + js.dwb, js.dkb)


def assemble_pencil(m, omega, k, tol=DEFAULT_TOL):
    """Pencil of the linearised modulation equations at ``(omega, k)``."""
    return pencil_from_jacobians(jacobians(m, omega, k, tol=tol))


_STENCILS = {
    1: (np.array([-1.0, 1.0]), np.array([-0.5, 0.5])),
    2: (np.array([-1.0, 0.0, 1.0]), np.array([1.0, -2.0, 1.0])),
    3: (np.array([-2.0, -1.0, 0.0, 1.0, 2.0]), np.array([-0.5, 1.0, 0.0, -1.0, 0.5])),
}


def directional_lagrangian_derivative(m, omega, k, d_omega, d_k, order, h=None):
    """``d^p/ds^p L(omega + s d_omega, k + s d_k)`` at ``s = 0`` for ``p`` in 1..3.

    Central stencils of 2, 3 and 5 points, refined by one Richardson
    extrapolation (``h`` and ``h/2``).  If a stencil point leaves the domain
    guard, ``h`` is halved up to three times before giving up.
    """
    if m.lagrangian is None:
        raise ModelError(f"model {m.name!r} has no Lagrangian")
    if order not in _STENCILS:
        raise ValueError("order must be 1, 2 or 3")
    omega, k = m.check_domain(omega, k)
    d_omega, d_k = _vec(d_omega, m.n_phases, "d_omega"), _vec(d_k, m.n_phases, "d_k")
    dnorm = np.linalg.norm(np.concatenate([d_omega, d_k]))
    if dnorm == 0:
        return 0.0
    if h is None:
        h = _step(order, omega, k) / dnorm
    offsets, weights = _STENCILS[order]

    def estimate(hh):
        pts = [(omega + s * hh * d_omega, k + s * hh * d_k) for s in offsets]
        if not all(m.domain_guard(w, q) for w, q in pts):
            raise OutsideDomain("stencil leaves the domain of the model")
        vals = np.array([m.lagrangian(w, q) for w, q in pts])
        return float(weights @ vals) / hh**order

    for _ in range(4):
        try:
            return (4 * estimate(h / 2) - estimate(h)) / 3
        except OutsideDomain:
            h /= 2
    raise OutsideDomain("stencil leaves the domain of the model even after shrinking the step")


# --------------------------------------------------------------------------- registry

_REGISTRY: dict[str, Callable[..., ModulationModel]] = {}


def register_model(name):
    """Decorator registering a model factory under ``name``."""

    def deco(factory):
        _REGISTRY[name] = factory
        return factory

    return deco


def registered_models():
    return sorted(_REGISTRY)


def model_from_config(cfg: dict[str, Any]) -> ModulationModel:
    """Build a registered model from ``{"model": name, **parameters}``.

    Unknown parameters are rejected by the factory signature.
    """
    cfg = dict(cfg)
    try:
        name = cfg.pop("model")
    except KeyError:
        raise ModelError("model configuration needs a 'model' key") from None
    if name not in _REGISTRY:
        raise ModelError(f"unknown model {name!r}; registered: {', '.join(registered_models())}")
    try:
        return _REGISTRY[name](**cfg)
    except TypeError as exc:
        raise ModelError(f"bad parameters for model {name!r}: {exc}") from None


@register_model("quadratic")
def quadratic_model(Q, R, S):
    """``L = 1/2 w.Q w + w.R k + 1/2 k.S k``; its Jacobians are ``(Q, R, R^T, S)`` exactly."""
    Q, R, S = (np.atleast_2d(np.asarray(a, dtype=float)) for a in (Q, R, S))
    n = Q.shape[0]

    def lagr(w, k):
        return 0.5 * w @ Q @ w + w @ R @ k + 0.5 * k @ S @ k

    def maps(w, k):
        return Q @ w + R @ k, R.T @ w + S @ k

    return ModulationModel(
        n_phases=n,
        lagrangian=lagr,
        action_maps=maps,
        analytic_jacobians=lambda w, k: (Q, R, R.T, S),
        name="quadratic",
        params={"Q": Q.tolist(), "R": R.tolist(), "S": S.tolist()},
    )
