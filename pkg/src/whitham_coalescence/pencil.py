"""Quadratic Hermitian matrix pencils ``E(c) = a2 c**2 + a1 c + a0``.

The coefficient matrices are real and symmetric.  Characteristics of the
linearised modulation equations are the roots of ``Delta(c) = det E(c)``; a
real simple root carries a sign characteristic ``sign <z, E'(c) z>`` where
``z`` spans the kernel of ``E(c)``.
"""

import enum
from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla
from scipy.optimize import minimize
from scipy.stats import norm, qmc

from .config import DEFAULT_TOL
from .errors import DegenerateRoot, NotARoot, SingularLeadingCoefficient


def _as_matrix(a, name):
    a = np.atleast_2d(np.asarray(a, dtype=float))
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"{name} must be a square matrix, got shape {a.shape}")
    return a


def symmetry_defect(a):
    """Relative Frobenius norm of the antisymmetric part of ``a``."""
    nrm = np.linalg.norm(a)
    if nrm == 0.0:
        return 0.0
    return np.linalg.norm(a - a.T) / nrm


def symmetrize(a):
    return 0.5 * (a + a.T)


@dataclass(frozen=True, eq=False)
class QuadraticPencil:
    """``E(c) = a2 c**2 + a1 c + a0`` with real symmetric ``N x N`` blocks.

    Construct with ``force_symmetric=True`` (via :meth:`from_matrices`) when the
    blocks come from finite differences and carry rounding-level asymmetry.
    """

    a2: np.ndarray
    a1: np.ndarray
    a0: np.ndarray

    def __post_init__(self):
        mats = [_as_matrix(getattr(self, n), n) for n in ("a2", "a1", "a0")]
        shapes = {m.shape for m in mats}
        if len(shapes) != 1:
            raise ValueError(f"pencil blocks have mismatched shapes {sorted(shapes)}")
        for name, m in zip(("a2", "a1", "a0"), mats):
            if symmetry_defect(m) > DEFAULT_TOL.symmetry:
                raise ValueError(f"{name} is not symmetric (defect {symmetry_defect(m):.3g})")
            m.setflags(write=False)
            object.__setattr__(self, name, m)

    @classmethod
    def from_matrices(cls, a2, a1, a0, force_symmetric=True):
        if force_symmetric:
            a2, a1, a0 = (symmetrize(_as_matrix(m, n)) for m, n in ((a2, "a2"), (a1, "a1"), (a0, "a0")))
        return cls(a2, a1, a0)

    @property
    def dim(self):
        return self.a2.shape[0]

    def congruent(self, P):
        """The pencil ``P^T E(c) P``."""
        P = np.asarray(P, dtype=float)
        return QuadraticPencil.from_matrices(P.T @ self.a2 @ P, P.T @ self.a1 @ P, P.T @ self.a0 @ P)

    def to_dict(self):
        return {"a2": self.a2.tolist(), "a1": self.a1.tolist(), "a0": self.a0.tolist()}

    @classmethod
    def from_dict(cls, d):
        return cls.from_matrices(d["a2"], d["a1"], d["a0"])


def evaluate_pencil(p, c):
    """``E(c)``; complex ``c`` is accepted and gives a complex symmetric matrix."""
    E = p.a2 * (c * c) + p.a1 * c + p.a0
    return 0.5 * (E + E.T)


def pencil_derivative(p, c, order=1):
    """``d^order E / dc^order``; zero for ``order >= 3``."""
    if order < 0:
        raise ValueError("order must be non-negative")
    if order == 0:
        return evaluate_pencil(p, c)
    if order == 1:
        D = 2.0 * c * p.a2 + p.a1
        return 0.5 * (D + D.T)
    if order == 2:
        return 2.0 * np.array(p.a2)
    return np.zeros_like(p.a2)


def pencil_scale(p, c):
    """``||a2|| |c|^2 + ||a1|| |c| + ||a0||``: the size of the terms making up ``E(c)``."""
    c = abs(c)
    return float(np.linalg.norm(p.a2, 2) * c * c + np.linalg.norm(p.a1, 2) * c + np.linalg.norm(p.a0, 2))


def determinant(p, c):
    """``Delta(c) = det E(c)`` by LU factorisation."""
    return np.linalg.det(evaluate_pencil(p, c))


def _polymat_det_2x2(p):
    e11 = [p.a2[0, 0], p.a1[0, 0], p.a0[0, 0]]
    e22 = [p.a2[1, 1], p.a1[1, 1], p.a0[1, 1]]
    e12 = [p.a2[0, 1], p.a1[0, 1], p.a0[0, 1]]
    return np.polysub(np.polymul(e11, e22), np.polymul(e12, e12))


def determinant_coefficients(p):
    """Coefficients of ``Delta`` (highest degree first, length ``2N + 1``).

    Exact polynomial arithmetic for ``N <= 2``; for larger ``N`` the
    determinant is sampled on a circle and the coefficients recovered with a
    discrete Fourier transform, which is well conditioned for moderate ``N``.
    """
    n = p.dim
    if n == 1:
        return np.array([p.a2[0, 0], p.a1[0, 0], p.a0[0, 0]])
    if n == 2:
        return np.asarray(_polymat_det_2x2(p), dtype=float)
    deg = 2 * n
    na2 = np.linalg.norm(p.a2, 2)
    na0 = np.linalg.norm(p.a0, 2)
    radius = np.sqrt(na0 / na2) if na0 > 0 and na2 > 0 else 1.0
    m = deg + 1
    z = radius * np.exp(2j * np.pi * np.arange(m) / m)
    vals = np.array([np.linalg.det(evaluate_pencil(p, zj)) for zj in z])
    low_first = np.fft.fft(vals) / m / radius ** np.arange(m)
    return np.real(low_first[::-1])


def delta_scale(coeffs, c, order=0):
    """Sum of absolute term magnitudes of the ``order``-th derivative of Delta at ``c``."""
    poly = np.abs(np.polyder(coeffs, order)) if order else np.abs(coeffs)
    return float(np.polyval(poly, abs(c))) if len(poly) else 0.0


def determinant_derivatives(p, c, coeffs=None):
    """``(Delta, Delta', Delta'')`` at ``c`` from the polynomial coefficients."""
    if coeffs is None:
        coeffs = determinant_coefficients(p)
    return (
        np.polyval(coeffs, c),
        np.polyval(np.polyder(coeffs, 1), c),
        np.polyval(np.polyder(coeffs, 2), c),
    )


def adjugate(a):
    """Adjugate (classical adjoint) of a square matrix, valid when singular."""
    a = np.asarray(a)
    n = a.shape[0]
    if n == 1:
        return np.ones((1, 1), dtype=a.dtype)
    U, s, Vh = np.linalg.svd(a)
    cof = np.array([np.prod(np.delete(s, i)) for i in range(n)])
    sign = np.linalg.det(U) * np.linalg.det(Vh)
    return sign * (Vh.conj().T * cof) @ U.conj().T


def determinant_derivative_jacobi(p, c):
    """``Delta'(c) = Tr(adj(E(c)) E'(c))`` (Jacobi's formula)."""
    return np.trace(adjugate(evaluate_pencil(p, c)) @ pencil_derivative(p, c, 1))


def kernel_vector(E, tol=DEFAULT_TOL.kernel, scale=None):
    """Unit vector spanning the (numerical) kernel of a real symmetric ``E``.

    Returns ``(zeta, singular_values)``.  The sign is fixed so that the first
    entry of largest magnitude is positive.  Raises :class:`NotARoot` when the
    smallest singular value is not below ``tol * scale`` (default ``||E||``;
    pass :func:`pencil_scale` when ``E`` is a pencil value, e.g. for ``N = 1``).
    """
    _, s, Vh = np.linalg.svd(np.real(E))
    if scale is None:
        scale = s[0]
    if s[-1] > tol * max(scale, np.finfo(float).tiny):
        raise NotARoot(f"matrix is not singular: sigma_min/sigma_max = {s[-1] / s[0]:.3g}")
    z = Vh[-1].copy()
    z /= np.linalg.norm(z)
    i = int(np.argmax(np.abs(z)))
    if z[i] < 0:
        z = -z
    return z, s


@dataclass(frozen=True)
class Characteristic:
    value: complex
    is_real: bool
    sign_char: int | None
    residual: float
    nearest_gap: float
    multiplicity: int = 1

    @property
    def real(self):
        return float(np.real(self.value))


def _check_leading(p):
    s = np.linalg.svd(p.a2, compute_uv=False)
    scale = max(np.linalg.norm(p.a2, 2), np.linalg.norm(p.a1, 2), np.linalg.norm(p.a0, 2), 1e-300)
    if s[-1] <= 1e-12 * scale:
        raise SingularLeadingCoefficient(
            f"leading coefficient a2 is singular (sigma_min = {s[-1]:.3g}); "
            "the characteristic polynomial drops degree"
        )


def _companion_roots(p):
    n = p.dim
    I = np.eye(n)
    Z = np.zeros((n, n))
    A = np.block([[Z, I], [-p.a0, -p.a1]])
    B = np.block([[I, Z], [Z, p.a2]])
    return sla.eigvals(A, B)


def _polish(p, c, steps):
    """Newton on Delta with Delta/Delta' = 1/Tr(E^{-1} E'); keeps improving iterates only."""
    best = c
    best_res = abs(np.linalg.det(evaluate_pencil(p, c)))
    for _ in range(steps):
        E = evaluate_pencil(p, best)
        try:
            t = np.trace(np.linalg.solve(E, pencil_derivative(p, best, 1)))
        except np.linalg.LinAlgError:
            break
        if t == 0:
            break
        cand = best - 1.0 / t
        res = abs(np.linalg.det(evaluate_pencil(p, cand)))
        if not res < best_res:
            break
        step = abs(cand - best)
        best, best_res = cand, res
        if step <= 4 * np.finfo(float).eps * (1 + abs(best)):
            break
    return best


def characteristics(p, tol=DEFAULT_TOL):
    """All ``2N`` roots of ``det E(c)`` with multiplicity.

    Roots come from the companion linearisation
    ``[[0, I], [-a0, -a1]] x = c [[I, 0], [0, a2]] x`` (no inversion of
    ``a2``) and are Newton-polished on Delta.  Roots closer than
    ``tol.double_root * (1 + |c|)`` are reported as a cluster: they get a
    multiplicity estimate instead of a sign characteristic, and a nearly real
    conjugate pair inside a cluster is reported as a real double root.

    Returns the list sorted by (real part, imaginary part).
    """
    _check_leading(p)
    raw = _companion_roots(p)
    n2 = 2 * p.dim
    coeffs = determinant_coefficients(p)

    def is_close(a, b):
        return abs(a - b) < tol.double_root * (1 + max(abs(a), abs(b)))

    clusters = []
    for r in raw:
        for cl in clusters:
            if any(is_close(r, q) for q in cl):
                cl.append(r)
                break
        else:
            clusters.append([r])

    roots = []  # (value, multiplicity)
    for cl in clusters:
        if len(cl) == 1:
            c = cl[0]
            if abs(c.imag) <= tol.imag * (1 + abs(c)):
                c = complex(_polish(p, c.real, tol.newton_polish_steps).real, 0.0)
                roots.append((c, 1))
            elif c.imag > 0:
                c = complex(_polish(p, c, tol.newton_polish_steps))
                roots.append((c, 1))
                roots.append((c.conjugate(), 1))
            # negative-imaginary members are produced as conjugates above
        else:
            mean = complex(np.mean(cl))
            m = len(cl)
            if abs(mean.imag) <= tol.double_root * (1 + abs(mean)):
                roots.extend([(complex(mean.real, 0.0), m)] * m)
            elif mean.imag > 0:
                roots.extend([(mean, m)] * m + [(mean.conjugate(), m)] * m)

    if len(roots) != n2:
        # conjugate bookkeeping failed (e.g. unpaired complex eigenvalue); fall back to raw values
        roots = [(complex(r), 1) for r in raw]

    values = np.array([r[0] for r in roots])
    out = []
    for i, (c, mult) in enumerate(roots):
        others = np.delete(values, i)
        others = others[np.abs(others - c) > 0] if mult > 1 else others
        gap = float(np.min(np.abs(others - c))) if len(others) else np.inf
        is_real = c.imag == 0.0
        sign = None
        if is_real and mult == 1 and gap > tol.double_root * (1 + abs(c)):
            try:
                sign = sign_characteristic(p, c.real, tol=tol, coeffs=coeffs)
            except (DegenerateRoot, NotARoot):
                sign = None
        out.append(
            Characteristic(
                value=complex(c),
                is_real=is_real,
                sign_char=sign,
                residual=float(abs(np.polyval(coeffs, c))),
                nearest_gap=gap,
                multiplicity=mult,
            )
        )
    out.sort(key=lambda ch: (ch.value.real, ch.value.imag))
    return out


def sign_characteristic(p, c0, tol=DEFAULT_TOL, coeffs=None):
    """Sign of ``<z, E'(c0) z>`` for a real simple root ``c0`` with unit kernel vector ``z``."""
    if coeffs is None:
        coeffs = determinant_coefficients(p)
    scale = max(delta_scale(coeffs, c0), np.finfo(float).tiny)
    if abs(np.polyval(coeffs, c0)) > tol.root_acceptance * scale:
        raise NotARoot(f"|Delta({c0:.6g})| exceeds the acceptance tolerance")
    E = evaluate_pencil(p, c0)
    z, s = kernel_vector(E, tol=tol.kernel, scale=pencil_scale(p, c0))
    if len(s) > 1 and s[-2] <= tol.kernel * s[0]:
        raise DegenerateRoot(f"kernel of E({c0:.6g}) has dimension >= 2")
    Ep = pencil_derivative(p, c0, 1)
    val = z @ Ep @ z
    if abs(val) <= tol.degeneracy * max(np.linalg.norm(Ep, 2), np.finfo(float).tiny):
        raise DegenerateRoot(f"<z, E'z> = {val:.3g} vanishes at c = {c0:.6g}: coalescing characteristic")
    return 1 if val > 0 else -1


class Hyperbolicity(enum.Enum):
    HYPERBOLIC = "hyperbolic"
    NOT_HYPERBOLIC = "not_hyperbolic"
    INCONCLUSIVE = "inconclusive"


@dataclass(frozen=True)
class HyperbolicityResult:
    verdict: Hyperbolicity
    margin: float
    witness: np.ndarray | None = None


def _quadratic_forms(p, u):
    uc = u.conj()
    alpha = np.real(uc @ p.a2 @ u)
    beta = 0.5 * np.real(uc @ p.a1 @ u)
    gamma = np.real(uc @ p.a0 @ u)
    return alpha, beta, gamma


def hyperbolicity_margin(p, u):
    """``beta**2 - alpha*gamma`` for the normalised (possibly complex) vector ``u``."""
    u = np.asarray(u)
    u = u / np.linalg.norm(u)
    alpha, beta, gamma = _quadratic_forms(p, u)
    return beta * beta - alpha * gamma


def hyperbolicity_test(p, n_samples=256, refine=True, seed=0, inconclusive_tol=1e-10):
    """Sampled test of ``beta**2 > alpha*gamma`` over nonzero ``u`` in C^N.

    Exact for ``N = 1``.  For ``N >= 2`` the complex unit sphere is sampled with
    a scrambled Halton sequence and the best samples are refined by local
    minimisation, so a *hyperbolic* verdict is probabilistic, not certified.
    A violation found anywhere is definitive and returned with its witness.
    """
    if n_samples < 1:
        raise ValueError("n_samples must be >= 1")
    n = p.dim
    scale = (0.5 * np.linalg.norm(p.a1, 2)) ** 2 + np.linalg.norm(p.a2, 2) * np.linalg.norm(p.a0, 2)
    scale = max(scale, np.finfo(float).tiny)

    def verdict(margin, witness):
        if margin <= 0:
            return HyperbolicityResult(Hyperbolicity.NOT_HYPERBOLIC, float(margin), witness)
        if margin <= inconclusive_tol * scale:
            return HyperbolicityResult(Hyperbolicity.INCONCLUSIVE, float(margin), witness)
        return HyperbolicityResult(Hyperbolicity.HYPERBOLIC, float(margin), witness)

    if n == 1:
        return verdict(0.25 * p.a1[0, 0] ** 2 - p.a2[0, 0] * p.a0[0, 0], np.ones(1))

    def unpack(x):
        u = x[:n] + 1j * x[n:]
        return u / np.linalg.norm(u)

    def f(x):
        if not np.any(x):
            return np.inf
        return hyperbolicity_margin(p, unpack(x))

    sampler = qmc.Halton(d=2 * n, scramble=True, seed=seed)
    pts = np.clip(sampler.random(n_samples), 1e-12, 1 - 1e-12)
    X = norm.ppf(pts)
    # include the real coordinate directions so diagonal violations are never missed
    X = np.vstack([np.hstack([np.eye(n), np.zeros((n, n))]), X])
    vals = np.array([f(x) for x in X])
    order = np.argsort(vals)
    best_x, best_v = X[order[0]], vals[order[0]]
    if refine and best_v > 0:
        for idx in order[: min(4, len(order))]:
            res = minimize(f, X[idx], method="Nelder-Mead", options={"xatol": 1e-12, "fatol": 1e-14 * scale, "maxiter": 4000})
            if res.fun < best_v:
                best_x, best_v = res.x, res.fun
            if best_v <= 0:
                break
    w = unpack(best_x)
    if np.allclose(w.imag, 0.0, atol=1e-14):
        w = w.real
    return verdict(best_v, w)


def graphical_sign_data(p, c_min, c_max, samples):
    """Uniform samples ``(c, Delta(c), sign Delta'(c))`` for plotting.

    Returns a numpy record array with fields ``c``, ``delta``, ``sign_dprime``.
    """
    if not c_min < c_max:
        raise ValueError("c_min must be smaller than c_max")
    if samples < 2:
        raise ValueError("samples must be >= 2")
    coeffs = determinant_coefficients(p)
    c = np.linspace(c_min, c_max, samples)
    delta = np.array([determinant(p, ci) for ci in c])
    dprime = np.polyval(np.polyder(coeffs), c)
    out = np.zeros(samples, dtype=[("c", float), ("delta", float), ("sign_dprime", int)])
    out["c"], out["delta"], out["sign_dprime"] = c, delta, np.sign(dprime).astype(int)
    return out
