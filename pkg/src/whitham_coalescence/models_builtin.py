"""Closed-form models: two-phase coupled NLS and pseudo-phase shallow water."""

from dataclasses import dataclass

import numpy as np

from .errors import EllipticSide, InvalidBranch, InvalidParameters, NonexistentWavetrain
from .model import ActionHessians, ModulationModel, register_model


@dataclass(frozen=True)
class CnlsParams:
    """Coefficients of ``i Psi_j,t + alpha_j Psi_j,xx + (sum_l beta_jl |Psi_l|^2) Psi_j = 0``."""

    alpha1: float
    alpha2: float
    beta11: float
    beta12: float
    beta22: float

    def __post_init__(self):
        if self.beta_det == 0:
            raise InvalidParameters("beta11*beta22 - beta12**2 must be nonzero")

    @property
    def alpha(self):
        return np.array([self.alpha1, self.alpha2])

    @property
    def beta_matrix(self):
        return np.array([[self.beta11, self.beta12], [self.beta12, self.beta22]])

    @property
    def beta_det(self):
        return self.beta11 * self.beta22 - self.beta12**2

    @property
    def beta_inv(self):
        b = self.beta_det
        return np.array([[self.beta22, -self.beta12], [-self.beta12, self.beta11]]) / b

    @classmethod
    def from_config(cls, alpha, beta):
        beta = np.asarray(beta, dtype=float)
        if beta.shape != (2, 2) or beta[0, 1] != beta[1, 0]:
            raise InvalidParameters("beta must be a symmetric 2x2 matrix")
        return cls(float(alpha[0]), float(alpha[1]), beta[0, 0], beta[0, 1], beta[1, 1])


def _shifted_frequency(p, omega, k):
    return np.asarray(omega, dtype=float) + p.alpha * np.asarray(k, dtype=float) ** 2


def cnls_amplitudes(p, omega, k):
    """Squared amplitudes ``(|Psi_1|^2, |Psi_2|^2)`` of the plane-wave basic state."""
    amp = p.beta_inv @ _shifted_frequency(p, omega, k)
    if np.any(amp <= 0):
        raise NonexistentWavetrain(f"squared amplitudes {amp.tolist()} are not positive")
    return float(amp[0]), float(amp[1])


def plane_wave_residual(p, omega, k, amps):
    """Residual of the plane-wave balance ``omega_j + alpha_j k_j^2 = sum_l beta_jl |Psi_l|^2``."""
    return p.beta_matrix @ np.asarray(amps) - _shifted_frequency(p, omega, k)


def omega_from_amplitudes(p, amps, k=(0.0, 0.0)):
    """Frequencies of the basic state with prescribed squared amplitudes."""
    k = np.asarray(k, dtype=float)
    return p.beta_matrix @ np.asarray(amps, dtype=float) - p.alpha * k**2


def cnls_quartic_coefficients(p, omega, k):
    """Coefficients ``(a0, ..., a4)`` of ``Delta(c) = a0 c^4 + ... + a4`` in closed form."""
    P1, P2 = p.beta_inv @ _shifted_frequency(p, omega, k)
    a1_, a2_ = p.alpha
    k1, k2 = k
    b = p.beta_det
    r1 = p.beta11 * P1 + 2 * a1_ * k1**2
    r2 = p.beta22 * P2 + 2 * a2_ * k2**2
    return np.array([
        0.25 / b,
        (a1_ * k1 + a2_ * k2) / b,
        0.5 / b * (a1_ * r1 + a2_ * r2 + 8 * a1_ * a2_ * k1 * k2),
        2 * a1_ * a2_ / b * (k1 * r2 + k2 * r1),
        a1_ * a2_ / b * (r1 * r2 - P1 * P2 * p.beta12**2),
    ])


def standing_discriminant(p, amp1_sq, amp2_sq):
    """Discriminant of the biquadratic for ``c**2`` at ``k = 0``; zero at coalescence."""
    x = p.alpha1 * p.beta11 * amp1_sq
    y = p.alpha2 * p.beta22 * amp2_sq
    return (x - y) ** 2 + 4 * p.alpha1 * p.alpha2 * p.beta12**2 * amp1_sq * amp2_sq


def standing_characteristics_sq(p, amp1_sq, amp2_sq):
    """The two values of ``c**2`` for standing waves (complex when the discriminant is negative)."""
    x = p.alpha1 * p.beta11 * amp1_sq
    y = p.alpha2 * p.beta22 * amp2_sq
    root = np.sqrt(complex(standing_discriminant(p, amp1_sq, amp2_sq)))
    return -x - y + root, -x - y - root


@dataclass(frozen=True)
class StandingWaveCoalescence:
    params: CnlsParams
    amp1_sq: float
    amp2_sq: float
    cg_sq: float
    branch: int
    zeta: np.ndarray
    gamma: np.ndarray
    mu_tilde: float
    kappa_tilde: float
    K_tilde: float
    kappa0: float

    @property
    def c_g(self):
        return float(np.sqrt(self.cg_sq))

    @property
    def omega(self):
        return omega_from_amplitudes(self.params, (self.amp1_sq, self.amp2_sq))

    @property
    def amplitude_ratio(self):
        return self.amp2_sq / self.amp1_sq


def coalescence_amplitude_ratio(p, branch):
    """``|Psi_2|^2 / |Psi_1|^2`` on the coalescence line for ``branch`` in ``{+1, -1}``."""
    if branch not in (1, -1):
        raise InvalidBranch("branch must be +1 or -1")
    b = p.beta_det
    if b >= 0 or p.alpha1 * p.alpha2 >= 0:
        raise InvalidParameters("standing-wave coalescence needs beta < 0 and alpha1*alpha2 < 0")
    s = p.beta11 * p.beta22 - 2 * p.beta12**2 + branch * 2 * abs(p.beta12) * np.sqrt(-b)
    return p.alpha1 * s / (p.alpha2 * p.beta22**2)


def cnls_standing_coalescence(p, amp1_sq, branch):
    """Standing wave (``k = 0``) exactly on the coalescence line, with closed-form chain data.

    ``zeta`` is the unnormalised kernel vector
    ``(c^2 beta12, beta22 c^2 + 2 alpha1 beta |Psi_1|^2)``; ``gamma`` solves
    ``E(c_g) gamma = -E'(c_g) zeta`` with zero second component.  The reduced
    equation ``c^2 U_TT + (kappa_tilde U^2 / 2 + K_tilde U_XX)_XX = 0`` supplies
    ``mu_tilde = c_g^2``, ``kappa_tilde`` and ``K_tilde``.
    """
    ratio = coalescence_amplitude_ratio(p, branch)
    if amp1_sq <= 0:
        raise InvalidParameters("amp1_sq must be positive")
    P1 = float(amp1_sq)
    P2 = ratio * P1
    if P2 <= 0:
        raise InvalidBranch(f"branch {branch:+d} gives |Psi_2|^2 = {P2:.6g} <= 0")
    a1_, a2_ = p.alpha
    b = p.beta_det
    x = a1_ * p.beta11 * P1
    y = a2_ * p.beta22 * P2
    cg_sq = -x - y
    if cg_sq <= 0:
        raise EllipticSide(f"c_g^2 = {cg_sq:.6g} <= 0 on branch {branch:+d}")
    c_g = np.sqrt(cg_sq)
    d = p.beta22 * cg_sq + 2 * a1_ * b * P1
    zeta = np.array([cg_sq * p.beta12, d])
    gamma = np.array([4 * c_g * a1_ * p.beta12 * b * P1 / d, 0.0])
    kappa_tilde = -3 * cg_sq / (8 * P2) * (x - y) * (x - y + 2 * a1_ * p.beta12 * P2)
    K_tilde = (a2_ * P1 - a1_ * P2) / (4 * P1 * P2 * (x - y))
    return StandingWaveCoalescence(
        params=p,
        amp1_sq=P1,
        amp2_sq=float(P2),
        cg_sq=float(cg_sq),
        branch=branch,
        zeta=zeta,
        gamma=gamma,
        mu_tilde=float(cg_sq),
        kappa_tilde=float(kappa_tilde),
        K_tilde=float(K_tilde),
        kappa0=float(4 * b * d),
    )


def admissible_branches(p):
    """Branches of the coalescence line with positive amplitudes and ``c_g^2 > 0``."""
    out = []
    for br in (1, -1):
        try:
            cnls_standing_coalescence(p, 1.0, br)
        except (InvalidBranch, EllipticSide, InvalidParameters):
            continue
        out.append(br)
    return out


def cnls_standing_path(p, amp1_sq, ratio_start, ratio_end):
    """Linear path ``s -> omega(s)`` at ``k = 0`` with ``|Psi_2|^2/|Psi_1|^2`` moving
    linearly from ``ratio_start`` to ``ratio_end`` and ``|Psi_1|^2`` fixed."""
    w0 = omega_from_amplitudes(p, (amp1_sq, ratio_start * amp1_sq))
    w1 = omega_from_amplitudes(p, (amp1_sq, ratio_end * amp1_sq))
    k = np.zeros(2)

    def path(s):
        return w0 + s * (w1 - w0), k.copy()

    return path


def cnls_crossing_path(p, amp1_sq, branch, width=0.3):
    """Standing-wave path crossing the coalescence line of ``branch`` at ``s = 1/2``."""
    r = coalescence_amplitude_ratio(p, branch)
    return cnls_standing_path(p, amp1_sq, r * (1 + width), r * (1 - width))


def cnls_model(p):
    """Two-phase CNLS modulation model.

    With ``Omega_j = omega_j + alpha_j k_j^2`` and ``M = beta^{-1}`` the averaged
    Lagrangian is ``L = Omega.M Omega / 4``, so that ``A = |Psi|^2 / 2`` and
    ``B_j = alpha_j k_j |Psi_j|^2``.
    """
    al = p.alpha
    M = p.beta_inv

    def shifted(w, k):
        return w + al * k**2

    def lagr(w, k):
        Om = shifted(w, k)
        return 0.25 * Om @ M @ Om

    def maps(w, k):
        amp = M @ shifted(w, k)
        return 0.5 * amp, al * k * amp

    def jac(w, k):
        amp = M @ shifted(w, k)
        dwa = 0.5 * M
        dka = M * (al * k)[None, :]
        dwb = dka.T
        dkb = np.diag(al * amp) + 2 * np.outer(al * k, al * k) * M
        return dwa, dka, dwb, dkb

    def hess(w, k):
        n = 2
        I = np.eye(n)
        a_kk = np.einsum("ij,jl->ijl", M * al[None, :], I)
        b_wk = np.einsum("i,il,ij->ijl", al, I, M)
        b_kk = (
            np.einsum("i,ij,il,l,l->ijl", al, I, M, al, 2 * k)
            + np.einsum("i,il,ij,j,j->ijl", al, I, M, al, 2 * k)
            + np.einsum("i,i,ij,j,jl->ijl", al, k, M, 2 * al, I)
        )
        z = np.zeros((n, n, n))
        return ActionHessians(a_ww=z, a_wk=z.copy(), a_kk=a_kk, b_ww=z.copy(), b_wk=b_wk, b_kk=b_kk)

    def guard(w, k):
        return bool(np.all(M @ shifted(w, k) > 0))

    def hook(ctx):
        return cnls_dispersion(p, ctx)

    return ModulationModel(
        n_phases=2,
        lagrangian=lagr,
        action_maps=maps,
        analytic_jacobians=jac,
        action_hessians=hess,
        dispersion_hook=hook,
        domain_guard=guard,
        name="cnls",
        params={"alpha": [p.alpha1, p.alpha2], "beta": p.beta_matrix.tolist()},
    )


def cnls_dispersion(p, ctx, rel_tol=1e-6):
    """Dispersion coefficient at a standing-wave coalescence, else ``None``.

    Only the ratio ``K / mu = K_tilde / c_g^2`` of the reduced equation is
    known in closed form, so the value is scaled by the computed ``mu``.
    """
    w, k = np.asarray(ctx["omega"]), np.asarray(ctx["k"])
    scale = 1.0 + np.linalg.norm(w)
    if np.linalg.norm(k) > rel_tol * scale:
        return None
    P1, P2 = p.beta_inv @ w
    if P1 <= 0 or P2 <= 0:
        return None
    x = p.alpha1 * p.beta11 * P1
    y = p.alpha2 * p.beta22 * P2
    if abs(standing_discriminant(p, P1, P2)) > rel_tol * (x * x + y * y):
        return None
    cg_sq = ctx["c_g"] ** 2
    K_tilde = (p.alpha2 * P1 - p.alpha1 * P2) / (4 * P1 * P2 * (x - y))
    return float(ctx["mu"] * K_tilde / cg_sq)


@register_model("cnls")
def _cnls_from_config(alpha, beta):
    return cnls_model(CnlsParams.from_config(alpha, beta))


def shallow_water_model(g, sigma=None):
    """Pseudo-phase shallow water, ``L(omega, k) = -(omega + k^2/2)^2 / (2 g)``.

    Eliminating the depth ``h = -(omega + k^2/2)/g`` gives ``A = h`` and
    ``B = h k``; the wavetrain exists where ``h > 0``.  The dispersive
    coefficient ``sigma`` of the full model does not enter the dispersionless
    Lagrangian and is accepted only for configuration compatibility.
    """
    if g <= 0:
        raise InvalidParameters("g must be positive")

    def depth(w, k):
        return -(w[0] + 0.5 * k[0] ** 2) / g

    def lagr(w, k):
        return -((w[0] + 0.5 * k[0] ** 2) ** 2) / (2 * g)

    def maps(w, k):
        h = depth(w, k)
        return np.array([h]), np.array([h * k[0]])

    def jac(w, k):
        h = depth(w, k)
        return (
            np.array([[-1.0 / g]]),
            np.array([[-k[0] / g]]),
            np.array([[-k[0] / g]]),
            np.array([[h - k[0] ** 2 / g]]),
        )

    def hess(w, k):
        z = np.zeros((1, 1, 1))
        return ActionHessians(
            a_ww=z,
            a_wk=z,
            a_kk=np.full((1, 1, 1), -1.0 / g),
            b_ww=z,
            b_wk=np.full((1, 1, 1), -1.0 / g),
            b_kk=np.full((1, 1, 1), -3.0 * k[0] / g),
        )

    return ModulationModel(
        n_phases=1,
        lagrangian=lagr,
        action_maps=maps,
        analytic_jacobians=jac,
        action_hessians=hess,
        domain_guard=lambda w, k: depth(w, k) > 0,
        name="shallow_water",
        params={"g": g} if sigma is None else {"g": g, "sigma": sigma},
    )


def shallow_water_state(g, h, k):
    """``(omega, k)`` of the uniform flow with depth ``h`` and wavenumber (velocity) ``k``."""
    return np.array([-g * h - 0.5 * k**2]), np.array([float(k)])


@register_model("shallow_water")
def _shallow_from_config(g, sigma=None):
    return shallow_water_model(g, sigma)
