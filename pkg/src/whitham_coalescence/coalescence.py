"""Coalescing characteristics along parameter paths and the emergent coefficients.

A path is any callable ``s -> (omega, k)`` on ``[0, 1]``.  The pipeline is

1. :func:`scan_path` samples the pencil, tracks the real characteristics and
   flags cells where a pair of real roots is lost or gained;
2. :func:`refine_coalescence` solves ``Delta = Delta' = 0`` for ``(c, s)``;
3. :func:`analyze_coalescence` builds the Jordan chain ``(zeta, gamma)`` and the
   coefficients ``mu``, ``kappa``, ``K`` and ``nu`` of the two-way Boussinesq
   equation ``mu U_TT + nu U_XX + kappa (U U_X)_X + K U_XXXX = 0``.
"""

import logging
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.optimize import linear_sum_assignment

from .config import DEFAULT_TOL
from .errors import (
    ChainTerminationFailure,
    ConsistencyError,
    DegenerateDenominator,
    HigherDegeneracy,
    ModelError,
    NoConvergence,
    NoSplitDetected,
    NotARoot,
    NotSolvable,
    NumericalError,
    OutsideDomain,
)
from .model import assemble_pencil, directional_lagrangian_derivative, jacobians, pencil_from_jacobians
from .pencil import (
    characteristics,
    delta_scale,
    determinant_coefficients,
    evaluate_pencil,
    kernel_vector,
    pencil_derivative,
    pencil_scale,
)

logger = logging.getLogger(__name__)


def linear_path(omega0, k0, omega1, k1):
    """Straight segment in ``(omega, k)`` space."""
    w0, k0, w1, k1 = (np.asarray(a, dtype=float) for a in (omega0, k0, omega1, k1))

    def path(s):
        return w0 + s * (w1 - w0), k0 + s * (k1 - k0)

    return path


@dataclass
class CoalescencePoint:
    omega: np.ndarray
    k: np.ndarray
    path_param: float
    c_g: float
    zeta: np.ndarray
    gamma: np.ndarray | None = None
    mu: float | None = None
    kappa: float | None = None
    K_disp: float | None = None
    nu: float | None = None
    diagnostics: dict = field(default_factory=dict)

    def to_dict(self):
        d = asdict(self)
        for key in ("omega", "k", "zeta", "gamma"):
            if d[key] is not None:
                d[key] = np.asarray(d[key]).tolist()
        d["diagnostics"] = _jsonable(d["diagnostics"])
        return d

    @classmethod
    def from_dict(cls, d):
        d = dict(d)
        d.pop("schema_version", None)
        for key in ("omega", "k", "zeta", "gamma"):
            if d.get(key) is not None:
                d[key] = np.asarray(d[key], dtype=float)
        return cls(**d)


def _jsonable(x):
    if isinstance(x, dict):
        return {k: _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, np.ndarray):
        return x.tolist()
    if isinstance(x, np.generic):
        return x.item()
    return x


# --------------------------------------------------------------------------- scanning


@dataclass
class ScanSample:
    path_param: float
    real_roots: np.ndarray
    signs: list
    n_complex: int
    clustered: bool


@dataclass
class Candidate:
    kind: str              # "pair_lost", "pair_gained" or "near_collision"
    p_left: float
    p_right: float
    p_guess: float
    c_guess: float
    signs_before: tuple    # sign characteristics of the pair on the hyperbolic side


@dataclass
class ScanResult:
    samples: list
    candidates: list
    skipped: list          # (path_param, reason) for samples outside the domain


def _sample(model, path, s, tol):
    omega, k = path(s)
    pen = assemble_pencil(model, omega, k, tol=tol)
    roots = characteristics(pen, tol=tol)
    real = [ch for ch in roots if ch.is_real]
    return ScanSample(
        path_param=float(s),
        real_roots=np.array([ch.real for ch in real]),
        signs=[ch.sign_char for ch in real],
        n_complex=len(roots) - len(real),
        clustered=any(ch.multiplicity > 1 for ch in real),
    ), roots


def _match(prev, prev2, cur):
    """Assign current roots to previous tracks using linear extrapolation."""
    if len(prev) == 0 or len(cur) == 0:
        return {}
    pred = prev if prev2 is None or len(prev2) != len(prev) else 2 * prev - prev2
    cost = np.abs(pred[:, None] - cur[None, :])
    rows, cols = linear_sum_assignment(cost)
    return dict(zip(rows.tolist(), cols.tolist()))


def _nearest_complex(roots, c):
    cands = [ch.value for ch in roots if not ch.is_real and ch.value.imag > 0]
    if not cands:
        return None
    return min(cands, key=lambda z: abs(z.real - c))


def scan_path(model, path, grid=200, tol=DEFAULT_TOL, gap_threshold=1e-3):
    """Sample ``grid + 1`` equispaced points of the path and flag collision cells."""
    if grid < 1:
        raise ValueError("grid must be >= 1")
    ss = np.linspace(0.0, 1.0, grid + 1)
    samples, all_roots, skipped = [], [], []
    for s in ss:
        try:
            smp, roots = _sample(model, path, s, tol)
        except (OutsideDomain, ModelError) as exc:
            skipped.append((float(s), str(exc)))
            continue
        samples.append(smp)
        all_roots.append(roots)

    def signs_near(i, i0, i1, step):
        """Signs of roots ``i0, i1`` at sample ``i``, or at the nearest sample
        further into the hyperbolic side where they are simple."""
        n_real = len(samples[i].real_roots)
        j = i
        while 0 <= j < len(samples) and len(samples[j].real_roots) == n_real:
            sg = samples[j].signs
            if sg[i0] is not None and sg[i1] is not None:
                return sg[i0], sg[i1]
            j += step
        return None, None

    candidates = []
    prev2 = None
    for i in range(len(samples) - 1):
        a, b = samples[i], samples[i + 1]
        ra, rb = a.real_roots, b.real_roots
        mapping = _match(ra, prev2, rb)
        prev2 = ra if len(ra) == len(rb) else None

        lost = sorted(set(range(len(ra))) - set(mapping))
        gained = sorted(set(range(len(rb))) - set(mapping.values()))
        for kind, idx, i_h, other, other_roots, step in (
            ("pair_lost", lost, i, b, all_roots[i + 1], -1),
            ("pair_gained", gained, i + 1, a, all_roots[i], 1),
        ):
            side = samples[i_h]
            vals = side.real_roots[idx]
            order = np.argsort(vals)
            idx = [idx[j] for j in order]
            for j in range(0, len(idx) - 1, 2):
                i0, i1 = idx[j], idx[j + 1]
                c0, c1 = side.real_roots[i0], side.real_roots[i1]
                cmid = 0.5 * (c0 + c1)
                d_h = (0.5 * (c1 - c0)) ** 2
                z = _nearest_complex(other_roots, cmid)
                d_e = -(z.imag**2) if z is not None else 0.0
                frac = d_h / (d_h - d_e) if z is not None and d_h - d_e > 0 else 0.5
                p_h, p_e = side.path_param, other.path_param
                candidates.append(
                    Candidate(
                        kind=kind,
                        p_left=a.path_param,
                        p_right=b.path_param,
                        p_guess=float(p_h + frac * (p_e - p_h)),
                        c_guess=float(cmid if z is None else (1 - frac) * cmid + frac * z.real),
                        signs_before=signs_near(i_h, i0, i1, step),
                    )
                )

    for i, smp in enumerate(samples):
        r = smp.real_roots
        for j in range(len(r) - 1):
            if abs(r[j + 1] - r[j]) < gap_threshold * (1 + abs(r[j])):
                sg = signs_near(i, j, j + 1, -1)
                if sg == (None, None):
                    sg = signs_near(i, j, j + 1, 1)
                candidates.append(
                    Candidate(
                        kind="near_collision",
                        p_left=smp.path_param,
                        p_right=smp.path_param,
                        p_guess=smp.path_param,
                        c_guess=float(0.5 * (r[j] + r[j + 1])),
                        signs_before=sg,
                    )
                )
    candidates.sort(key=lambda c: (c.p_guess, c.c_guess))
    return ScanResult(samples=samples, candidates=candidates, skipped=skipped)


# --------------------------------------------------------------------------- refinement


def _coeffs_at(model, path, s, tol):
    omega, k = path(s)
    return determinant_coefficients(assemble_pencil(model, omega, k, tol=tol))


def refine_coalescence(model, path, p_guess, c_guess, tol=DEFAULT_TOL, h_param=1e-6):
    """Newton on ``(Delta(c; s), Delta'(c; s)) = 0`` for ``(c, s)``.

    ``c``-derivatives are exact (polynomial coefficients of Delta); the
    ``s``-derivatives are central differences of those coefficients.  Returns a
    :class:`CoalescencePoint` with ``c_g``, the unit kernel vector ``zeta`` and
    the defining residuals in ``diagnostics``; the coefficients are left empty.
    """
    c, s = float(c_guess), float(p_guess)

    def residual(c, s):
        co = _coeffs_at(model, path, s, tol)
        d0 = np.polyval(co, c)
        d1 = np.polyval(np.polyder(co), c)
        sc0 = max(delta_scale(co, c), np.finfo(float).tiny)
        sc1 = max(delta_scale(co, c, 1), np.finfo(float).tiny)
        return co, np.array([d0 / sc0, d1 / sc1]), (sc0, sc1)

    co, F, scales = residual(c, s)
    for it in range(tol.refine_maxiter + 1):
        if np.all(np.abs(F) < tol.refine_tol):
            break
        if it == tol.refine_maxiter:
            raise NoConvergence(f"no coalescence near (s={p_guess:.6g}, c={c_guess:.6g}) after {it} iterations")
        sc0, sc1 = scales
        dco = (_coeffs_at(model, path, s + h_param, tol) - _coeffs_at(model, path, s - h_param, tol)) / (2 * h_param)
        J = np.array([
            [np.polyval(np.polyder(co), c) / sc0, np.polyval(dco, c) / sc0],
            [np.polyval(np.polyder(co, 2), c) / sc1, np.polyval(np.polyder(dco), c) / sc1],
        ])
        try:
            step = np.linalg.solve(J, -F)
        except np.linalg.LinAlgError:
            raise NoConvergence("singular Newton matrix: the fold is degenerate along this path") from None
        lam = 1.0
        while True:
            try:
                co_n, F_n, sc_n = residual(c + lam * step[0], s + lam * step[1])
                ok = np.linalg.norm(F_n) < np.linalg.norm(F) or lam < 1e-3
            except OutsideDomain:
                ok = False
                if lam < 1e-3:
                    raise
            if ok:
                break
            lam *= 0.5
        c, s = c + lam * step[0], s + lam * step[1]
        co, F, scales = co_n, F_n, sc_n
    iterations = it

    omega, k = path(s)
    pen = assemble_pencil(model, omega, k, tol=tol)
    d2 = np.polyval(np.polyder(co, 2), c)
    sc2 = max(delta_scale(co, c, 2), np.finfo(float).tiny)
    if abs(d2) <= tol.second_derivative * sc2:
        raise HigherDegeneracy(f"Delta'' also vanishes at c = {c:.8g}: more than two characteristics coalesce")
    E = evaluate_pencil(pen, c)
    try:
        zeta, sv = kernel_vector(E, tol=max(tol.kernel, 1e-7), scale=pencil_scale(pen, c))
    except NotARoot as exc:
        raise NoConvergence(f"converged point is not a characteristic: {exc}") from None
    if len(sv) > 1 and sv[-2] <= tol.kernel * sv[0]:
        raise HigherDegeneracy(f"kernel of E(c_g) has dimension >= 2 at c = {c:.8g}")
    diag = {
        "delta": float(np.polyval(co, c)),
        "delta_prime": float(np.polyval(np.polyder(co), c)),
        "delta_second": float(d2),
        "delta_rel": float(abs(F[0])),
        "delta_prime_rel": float(abs(F[1])),
        "delta_second_rel": float(abs(d2) / sc2),
        "iterations": int(iterations),
        "kernel_singular_values": sv.tolist(),
    }
    return CoalescencePoint(omega=omega, k=k, path_param=float(s), c_g=float(c), zeta=zeta, diagnostics=diag)


# --------------------------------------------------------------------------- chain and coefficients


def group_velocity_formula(js, zeta, tol=DEFAULT_TOL):
    """``c_g = -<zeta, D_k A zeta> / <zeta, D_omega A zeta>``.

    The quotient is 0/0 when the pencil has no linear part (mirror-symmetric
    roots), which raises :class:`DegenerateDenominator`.
    """
    zeta = np.asarray(zeta, dtype=float) / np.linalg.norm(zeta)
    den = zeta @ js.dwa @ zeta
    if abs(den) <= tol.chain * max(np.linalg.norm(js.dwa, 2), np.finfo(float).tiny):
        raise DegenerateDenominator("<zeta, D_omega A zeta> vanishes")
    return float(-(zeta @ js.dka @ zeta) / den)


def jordan_gamma(p, c_g, zeta, tol=DEFAULT_TOL):
    """Generalised eigenvector: minimum-norm ``gamma`` with ``E gamma = -E' zeta``, ``gamma`` orthogonal to ``zeta``.

    Returns ``(gamma, residual)`` with ``residual = ||E gamma + E' zeta||``.
    """
    E = evaluate_pencil(p, c_g)
    Ep = pencil_derivative(p, c_g, 1)
    nEp = max(np.linalg.norm(Ep, 2), np.finfo(float).tiny)
    zeta = np.asarray(zeta, dtype=float)
    zn = zeta / np.linalg.norm(zeta)
    solv = zn @ Ep @ zn
    if abs(solv) > tol.chain * nEp:
        raise NotSolvable(f"<zeta, E'(c_g) zeta> = {solv:.3g} is not zero: c_g is not a double characteristic")
    rhs = -Ep @ zeta
    U, s, Vh = np.linalg.svd(E)
    # drop the kernel direction explicitly; E(c_g) has rank N - 1
    coef = (U[:, :-1].T @ rhs) / s[:-1]
    gamma = Vh[:-1].T @ coef
    gamma -= (gamma @ zn) * zn
    res = float(np.linalg.norm(E @ gamma - rhs))
    if res > tol.chain * nEp * max(np.linalg.norm(zeta), 1.0):
        raise NotSolvable(f"chain residual {res:.3g} too large")
    return gamma, res


def mu_forms(p, c_g, zeta, gamma):
    """Both expressions of the chain-termination coefficient.

    ``<zeta, E' gamma> + <zeta, E'' zeta>/2`` and ``<zeta, E'' zeta>/2 - <gamma, E gamma>``.
    """
    E = evaluate_pencil(p, c_g)
    Ep = pencil_derivative(p, c_g, 1)
    Epp = pencil_derivative(p, c_g, 2)
    half = 0.5 * zeta @ Epp @ zeta
    return float(zeta @ Ep @ gamma + half), float(half - gamma @ E @ gamma)


def mu_coefficient(p, c_g, zeta, gamma, tol=DEFAULT_TOL):
    """Coefficient of ``U_TT``; nonzero iff the chain ``(zeta, gamma)`` stops at length two."""
    m1, m2 = mu_forms(p, c_g, zeta, gamma)
    E = evaluate_pencil(p, c_g)
    Ep = pencil_derivative(p, c_g, 1)
    zz, gg = np.linalg.norm(zeta), np.linalg.norm(gamma)
    scale = np.linalg.norm(p.a2, 2) * zz**2 + np.linalg.norm(Ep, 2) * zz * gg + np.linalg.norm(E, 2) * gg**2
    scale = max(scale, np.finfo(float).tiny)
    if abs(m1 - m2) > tol.chain * scale:
        raise ConsistencyError(f"the two forms of mu disagree: {m1:.12g} vs {m2:.12g}")
    if abs(m1) < tol.mu_zero * scale:
        raise ChainTerminationFailure("mu vanishes: the Jordan chain does not stop at length two")
    return m1


def kappa_tensor(m, omega, k, c_g, zeta):
    """``<zeta, H(zeta, zeta)>`` assembled from the second derivatives of ``A`` and ``B``."""
    H = m.action_hessians(np.asarray(omega, float), np.asarray(k, float))

    def q(T):
        return np.einsum("ijl,j,l->i", T, zeta, zeta)

    vec = (
        q(H.b_kk)
        + c_g * (2 * q(H.b_wk.transpose(0, 2, 1)) + q(H.a_kk))
        + c_g**2 * (2 * q(H.a_wk.transpose(0, 2, 1)) + q(H.b_ww))
        + c_g**3 * q(H.a_ww)
    )
    return float(zeta @ vec)


def kappa_coefficient(m, omega, k, c_g, zeta, tol=DEFAULT_TOL):
    """Coefficient of the nonlinear term: third derivative of ``L`` along ``(c_g zeta, zeta)``.

    When the model exposes second derivatives of ``A`` and ``B`` the tensor
    form is evaluated too and the two must agree to ``tol.kappa_routes``.
    """
    zeta = np.asarray(zeta, dtype=float)
    kap = directional_lagrangian_derivative(m, omega, k, c_g * zeta, zeta, order=3)
    if m.action_hessians is not None:
        kt = kappa_tensor(m, omega, k, c_g, zeta)
        if abs(kap - kt) > tol.kappa_routes * max(abs(kt), abs(kap), 1e-300):
            raise ConsistencyError(f"kappa by differences {kap:.10g} disagrees with tensor form {kt:.10g}")
    return kap


def mu_lagrangian_form(m, omega, k, c_g, zeta, gamma):
    """``mu`` from second derivatives of ``L``.

    ``d^2/ds^2 L(omega + s zeta, k) - d^2/ds^2 L(omega + s c_g gamma, k + s gamma)``;
    the second term equals ``<gamma, E(c_g) gamma>``.
    """
    zeta, gamma = np.asarray(zeta, float), np.asarray(gamma, float)
    first = directional_lagrangian_derivative(m, omega, k, zeta, np.zeros_like(zeta), order=2)
    if not np.any(gamma):
        return first
    second = directional_lagrangian_derivative(m, omega, k, c_g * gamma, gamma, order=2)
    return first - second


def unfolding_nu(m, cp, direction, eps=1e-3, tol=DEFAULT_TOL):
    """Unfolding coefficient from the splitting of the double characteristic.

    The point is moved to ``(omega, k) + eps * direction`` and the two
    characteristics nearest ``c_g`` are fitted to ``mu (c - c_g)^2 + eps nu = 0``:
    ``nu = -mu ((c+ - c-)/2)^2 / eps`` for a real pair and
    ``nu = mu (Im c+)^2 / eps`` for a complex pair.  So ``mu nu < 0`` on the
    hyperbolic side and ``mu nu > 0`` on the elliptic side.
    """
    if cp.mu is None:
        raise ValueError("coalescence point has no mu")
    d_omega, d_k = (np.asarray(a, dtype=float) for a in direction)
    omega = cp.omega + eps * d_omega
    k = cp.k + eps * d_k
    pen = assemble_pencil(m, omega, k, tol=tol)
    roots = sorted(characteristics(pen, tol=tol), key=lambda ch: abs(ch.value - cp.c_g))
    r0, r1 = roots[0].value, roots[1].value
    if abs(r0 - r1) < tol.double_root * (1 + abs(cp.c_g)):
        raise NoSplitDetected(f"roots near c_g = {cp.c_g:.6g} did not split for eps = {eps:g}")
    if roots[0].is_real and roots[1].is_real:
        return float(-cp.mu * (0.5 * (r1.real - r0.real)) ** 2 / eps)
    return float(cp.mu * abs(r0.imag) ** 2 / eps)


def dispersion_coefficient(m, cp):
    """Coefficient of ``U_XXXX`` from the model's dispersion hook, or ``None``.

    A generic value needs the Jordan chain of the full linear operator of the
    underlying PDE, which is not available from ``L(omega, k)`` alone.
    """
    if m.dispersion_hook is None or cp.mu is None:
        return None
    ctx = {"omega": cp.omega, "k": cp.k, "c_g": cp.c_g, "zeta": cp.zeta, "gamma": cp.gamma, "mu": cp.mu}
    val = m.dispersion_hook(ctx)
    return None if val is None else float(val)


def path_tangent(path, s, h=1e-6):
    (w1, k1), (w0, k0) = path(s + h), path(s - h)
    return (w1 - w0) / (2 * h), (k1 - k0) / (2 * h)


def analyze_coalescence(model, path, p_guess, c_guess, tol=DEFAULT_TOL, unfold_eps=1e-3, signs_before=None):
    """Refine a candidate and fill every coefficient and cross-check."""
    cp = refine_coalescence(model, path, p_guess, c_guess, tol=tol)
    js = jacobians(model, cp.omega, cp.k, tol=tol)
    pen = pencil_from_jacobians(js)
    gamma, chain_res = jordan_gamma(pen, cp.c_g, cp.zeta, tol=tol)
    cp.gamma = gamma
    cp.mu = mu_coefficient(pen, cp.c_g, cp.zeta, gamma, tol=tol)
    m1, m2 = mu_forms(pen, cp.c_g, cp.zeta, gamma)
    try:
        c_formula = group_velocity_formula(js, cp.zeta, tol=tol)
    except DegenerateDenominator:
        c_formula = None
    diag = cp.diagnostics
    diag.update(
        chain_residual=chain_res,
        chain_residual_rel=chain_res / np.linalg.norm(pencil_derivative(pen, cp.c_g, 1), 2),
        mu_alt=m2,
        c_g_formula=c_formula,
        sign_pair_before=list(signs_before) if signs_before is not None else None,
    )
    if model.lagrangian is not None:
        mu_l = mu_lagrangian_form(model, cp.omega, cp.k, cp.c_g, cp.zeta, gamma)
        diag["mu_lagrangian"] = mu_l
        if abs(mu_l - cp.mu) > tol.mu_routes * max(abs(cp.mu), 1e-300):
            raise ConsistencyError(f"mu from L ({mu_l:.10g}) disagrees with chain value ({cp.mu:.10g})")
        cp.kappa = kappa_coefficient(model, cp.omega, cp.k, cp.c_g, cp.zeta, tol=tol)
        if model.action_hessians is not None:
            diag["kappa_tensor"] = kappa_tensor(model, cp.omega, cp.k, cp.c_g, cp.zeta)
    elif model.action_hessians is not None:
        cp.kappa = kappa_tensor(model, cp.omega, cp.k, cp.c_g, cp.zeta)
    if c_formula is not None and abs(c_formula - cp.c_g) > 1e-6 * (1 + abs(cp.c_g)):
        raise ConsistencyError(f"group-velocity formula {c_formula:.10g} disagrees with c_g {cp.c_g:.10g}")
    cp.K_disp = dispersion_coefficient(model, cp)
    if unfold_eps:
        try:
            cp.nu = unfolding_nu(model, cp, path_tangent(path, cp.path_param), eps=unfold_eps, tol=tol)
            diag["unfold_eps"] = unfold_eps
        except (NumericalError, OutsideDomain) as exc:
            diag["unfold_error"] = str(exc)
    return cp


def find_coalescences(model, path, grid=200, tol=DEFAULT_TOL, unfold_eps=1e-3):
    """Scan, refine and analyse.  Returns ``(scan, points, failures)``.

    Points are unique in ``(path_param, c_g)`` and ordered by them; failures
    are ``(candidate, message)`` pairs.
    """
    scan = scan_path(model, path, grid=grid, tol=tol)
    points, failures = [], []
    for cand in scan.candidates:
        try:
            cp = analyze_coalescence(model, path, cand.p_guess, cand.c_guess, tol=tol,
                                     unfold_eps=unfold_eps, signs_before=cand.signs_before)
        except (NumericalError, ModelError) as exc:
            failures.append((cand, f"{type(exc).__name__}: {exc}"))
            continue
        if not 0.0 <= cp.path_param <= 1.0:
            failures.append((cand, f"refined point s={cp.path_param:.6g} left the path"))
            continue
        dup = any(
            abs(q.path_param - cp.path_param) < 1e-8 and abs(q.c_g - cp.c_g) < 1e-6 * (1 + abs(cp.c_g)) for q in points
        )
        if not dup:
            points.append(cp)
    points.sort(key=lambda q: (q.path_param, q.c_g))
    return scan, points, failures
