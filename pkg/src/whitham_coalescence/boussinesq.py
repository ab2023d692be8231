"""Normalised two-way Boussinesq equation: scalings, linear classification,
solitary waves and a pseudo-spectral RK4 solver.

Normal form on a periodic domain ``[0, L)``::

    u_tt + s1 u_xx + (u^2 / 2)_xx + s2 u_xxxx = 0
"""

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import BlowUp, DegenerateCoefficient, NoSolitaryWave, UnstableStep

BLOWUP_LEVEL = 1e6


class DispersionClass(str, enum.Enum):
    HYPERBOLIC_ALL_K = "HyperbolicAllK"
    FINITE_BAND_INSTABILITY = "FiniteBandInstability"
    CUTOFF_RESTABILIZED = "CutoffRestabilized"
    ALL_K_UNSTABLE = "AllKUnstable"


@dataclass(frozen=True)
class DispersionVerdict:
    classification: DispersionClass
    unstable_band: tuple | None  # (k_lo, k_hi) in normalised wavenumber, None if stable everywhere

    def is_stable(self, k):
        if self.unstable_band is None:
            return True
        lo, hi = self.unstable_band
        return not (lo < abs(k) < hi)


def _sign(x):
    if x not in (1, -1):
        raise ValueError(f"sign must be +1 or -1, got {x!r}")
    return int(x)


def linear_frequency_sq(s1, s2, k):
    """``omega^2 = -s1 k^2 + s2 k^4``."""
    k = np.asarray(k, dtype=float)
    return -s1 * k**2 + s2 * k**4


def classify_dispersion(s1, s2):
    s1, s2 = _sign(s1), _sign(s2)
    table = {
        (-1, 1): (DispersionClass.HYPERBOLIC_ALL_K, None),
        (-1, -1): (DispersionClass.FINITE_BAND_INSTABILITY, (1.0, math.inf)),
        (1, 1): (DispersionClass.CUTOFF_RESTABILIZED, (0.0, 1.0)),
        (1, -1): (DispersionClass.ALL_K_UNSTABLE, (0.0, math.inf)),
    }
    return DispersionVerdict(*table[(s1, s2)])


@dataclass(frozen=True)
class BoussinesqSetup:
    """Coefficients of ``mu U_TT + nu U_XX + kappa (U U_X)_X + K U_XXXX = 0`` and
    the scalings ``tau = a T``, ``xi = b X``, ``U = rho u`` that map it to the
    normal form.  ``rho`` carries the sign of ``mu kappa``."""

    mu: float
    nu: float
    kappa: float
    K: float
    s1: int
    s2: int
    scale_t: float
    scale_x: float
    scale_u: float
    classification: DispersionClass

    @classmethod
    def normal(cls, s1, s2):
        return normalize(1.0, float(s1), 1.0, float(s2))

    def transformed_coefficients(self):
        """Coefficients after the change of variables, divided by the ``u_tt`` one."""
        a, b, r = self.scale_t, self.scale_x, self.scale_u
        f = self.mu * a**2 * r
        return (1.0, self.nu * b**2 * r / f, self.kappa * b**2 * r**2 / f, self.K * b**4 * r / f)

    def to_dict(self):
        d = {k: getattr(self, k) for k in ("mu", "nu", "kappa", "K", "s1", "s2", "scale_t", "scale_x", "scale_u")}
        d["classification"] = self.classification.value
        return d

    @classmethod
    def from_dict(cls, d):
        d = dict(d)
        d.pop("schema_version", None)
        d["classification"] = DispersionClass(d["classification"])
        return cls(**d)


def normalize(mu, nu, kappa, K):
    """Scalings and signs reducing the equation to ``(1, s1, 1, s2)``.

    ``b = sqrt(|nu|/|K|)``, ``a = b sqrt(|nu|/|mu|)``, ``rho = sign(mu kappa) |nu|/|kappa|``.
    """
    for name, v in (("mu", mu), ("nu", nu), ("kappa", kappa), ("K", K)):
        if not np.isfinite(v) or v == 0:
            hint = {
                "mu": "the Jordan chain does not stop at length two",
                "nu": "the point is exactly on the coalescence; unfold it",
                "kappa": "quadratic nonlinearity is absent; a cubic nonlinearity governs instead",
                "K": "fourth-order dispersion is absent; a higher-order term governs instead",
            }[name]
            raise DegenerateCoefficient(name, f"coefficient {name} = {v!r} vanishes: {hint}")
    s1 = 1 if mu * nu > 0 else -1
    s2 = 1 if mu * K > 0 else -1
    b = math.sqrt(abs(nu) / abs(K))
    a = b * math.sqrt(abs(nu) / abs(mu))
    rho = math.copysign(abs(nu) / abs(kappa), mu * kappa)
    return BoussinesqSetup(
        float(mu), float(nu), float(kappa), float(K), s1, s2, a, b, rho, classify_dispersion(s1, s2).classification
    )


def denormalize(s1, s2, scale_t, scale_x, scale_u, mu):
    """Invert :func:`normalize`: ``(mu, nu, kappa, K)`` given the overall scale ``mu``."""
    f = mu * scale_t**2 * scale_u
    return (
        float(mu),
        s1 * f / (scale_x**2 * scale_u),
        f / (scale_x**2 * scale_u**2),
        s2 * f / (scale_x**4 * scale_u),
    )


# --------------------------------------------------------------------------- fields


@dataclass
class FieldState:
    grid: np.ndarray
    u: np.ndarray
    u_t: np.ndarray
    time: float = 0.0
    length: float | None = None

    def __post_init__(self):
        self.grid = np.asarray(self.grid, dtype=float)
        self.u = np.asarray(self.u, dtype=float)
        self.u_t = np.asarray(self.u_t, dtype=float)
        m = self.grid.size
        if m < 2 or m & (m - 1):
            raise ValueError(f"grid size must be a power of two, got {m}")
        if self.u.shape != (m,) or self.u_t.shape != (m,):
            raise ValueError("u and u_t must match the grid")
        if self.length is None:
            self.length = float(m * (self.grid[1] - self.grid[0]))

    @property
    def M(self):
        return self.grid.size

    @property
    def dx(self):
        return self.length / self.M


def periodic_grid(length, M):
    return np.arange(M) * (length / M)


def make_state(length, M, u, u_t=None, time=0.0):
    xi = periodic_grid(length, M)
    u = u(xi) if callable(u) else np.asarray(u, float)
    if u_t is None:
        u_t = np.zeros(M)
    elif callable(u_t):
        u_t = u_t(xi)
    return FieldState(xi, u, u_t, time, float(length))


def wavenumbers(M, length):
    return 2 * np.pi * np.fft.fftfreq(M, d=length / M)


def spectral_derivative(u, length, order=1):
    """Periodic Fourier derivative; the Nyquist mode is dropped for odd orders."""
    M = u.size
    k = wavenumbers(M, length)
    mult = (1j * k) ** order
    if order % 2 == 1:
        mult[M // 2] = 0
    return np.fft.ifft(mult * np.fft.fft(u)).real


def solitary_wave(s1, s2, speed, length, M):
    """Solitary wave ``u = U(xi + speed tau)`` centred at ``L/2``.

    ``U = -3p sech^2(sqrt(-p/(4 s2)) xi)`` with ``p = s1 + speed^2``; it solves
    ``s2 U'' + p U + U^2/2 = 0`` and ``u_t = speed U'``.
    """
    s1, s2 = _sign(s1), _sign(s2)
    p = s1 + speed**2
    if p / s2 >= 0:
        raise NoSolitaryWave(f"no localised wave for s1={s1}, s2={s2}, speed={speed}: need (s1 + speed^2)/s2 < 0")
    kap = math.sqrt(-p / (4 * s2))
    xi = periodic_grid(length, M)
    z = kap * (xi - length / 2)
    sech2 = 1 / np.cosh(z) ** 2
    u = -3 * p * sech2
    du = 6 * p * kap * sech2 * np.tanh(z)
    return FieldState(xi, u, speed * du, 0.0, float(length))


def solitary_profile(s1, s2, speed, xi):
    p = s1 + speed**2
    kap = math.sqrt(-p / (4 * s2))
    return -3 * p / np.cosh(kap * xi) ** 2


def conserved_quantities(state):
    """``(mass, flux_mean)`` = integrals of ``u`` and ``u_t`` over the period."""
    return float(state.u.sum() * state.dx), float(state.u_t.sum() * state.dx)


# --------------------------------------------------------------------------- solver


@dataclass
class Trajectory:
    times: np.ndarray
    u: np.ndarray         # (n_frames, M)
    u_t: np.ndarray
    grid: np.ndarray
    length: float
    diagnostics: dict = field(default_factory=dict)  # t, mass, flux_mean, max_u

    def state(self, i):
        return FieldState(self.grid, self.u[i], self.u_t[i], float(self.times[i]), self.length)

    @property
    def final(self):
        return self.state(-1)


def spectral_filter(M, length, kind=None, cutoff=None, strength=36.0, order=16):
    """Multiplier applied to the spectrum after every step.

    ``"hard"`` zeros ``|k| > cutoff``; ``"exp"`` uses ``exp(-strength (|k|/k_max)^order)``.
    """
    if kind is None:
        return None
    k = np.abs(wavenumbers(M, length))
    if kind == "hard":
        if cutoff is None:
            raise ValueError("hard filter needs a cutoff wavenumber")
        return (k <= cutoff).astype(float)
    if kind == "exp":
        return np.exp(-strength * (k / k.max()) ** order)
    raise ValueError(f"unknown filter {kind!r}")


def max_stable_dt(dx, safety=0.2, cutoff=None):
    """RK4 bound for the fourth-order term: ``safety * (pi / k_eff)^2``."""
    k_eff = math.pi / dx if cutoff is None else min(math.pi / dx, cutoff)
    return safety * (math.pi / k_eff) ** 2


def simulate(setup, init, dt, t_end, dealias=True, filter=None, filter_cutoff=None, safety=0.2, n_frames=200):
    """Evolve ``(u, v = u_t)`` with classical RK4 and Fourier derivatives.

    Frames are stored every ``max(1, floor(n_steps / n_frames))`` steps and at
    ``t_end``.  Raises :class:`BlowUp` (carrying the partial trajectory) when
    ``max|u| > 1e6`` or a non-finite value appears.
    """
    s1, s2 = _sign(setup.s1), _sign(setup.s2)
    if dt <= 0 or t_end < 0:
        raise ValueError("dt must be positive and t_end non-negative")
    M, L = init.M, init.length
    bound = max_stable_dt(L / M, safety, filter_cutoff if filter == "hard" else None)
    if dt > bound:
        raise UnstableStep(f"dt = {dt:g} exceeds the stability bound {bound:g}")
    n_steps = max(0, math.ceil(t_end / dt - 1e-9))
    if n_steps:
        dt = t_end / n_steps
    every = max(1, n_steps // max(n_frames, 1))

    k = wavenumbers(M, L)
    k2 = k**2
    lin = s1 * k2 - s2 * k2**2  # Fourier symbol of -s1 d_xx - s2 d_xxxx
    keep = np.abs(k) <= (2.0 / 3.0) * np.abs(k).max() if dealias else np.ones(M, bool)
    filt = spectral_filter(M, L, filter, filter_cutoff)

    def rhs(uh, vh):
        u = np.fft.ifft(uh).real
        nl = np.fft.fft(0.5 * u * u)
        nl[~keep] = 0
        return vh, lin * uh + k2 * nl  # -(u^2/2)_xx -> +k^2 FFT(u^2/2)

    uh, vh = np.fft.fft(init.u), np.fft.fft(init.u_t)
    if filt is not None:
        uh, vh = uh * filt, vh * filt

    times, us, vs = [], [], []

    def record(t):
        times.append(t)
        us.append(np.fft.ifft(uh).real)
        vs.append(np.fft.ifft(vh).real)

    def pack():
        u_arr, v_arr = np.array(us), np.array(vs)
        dx = L / M
        diag = {
            "t": np.array(times),
            "mass": u_arr.sum(axis=1) * dx,
            "flux_mean": v_arr.sum(axis=1) * dx,
            "max_u": np.abs(u_arr).max(axis=1),
        }
        return Trajectory(np.array(times), u_arr, v_arr, init.grid.copy(), L, diag)

    t0 = init.time
    record(t0)
    for n in range(1, n_steps + 1):
        k1u, k1v = rhs(uh, vh)
        k2u, k2v = rhs(uh + 0.5 * dt * k1u, vh + 0.5 * dt * k1v)
        k3u, k3v = rhs(uh + 0.5 * dt * k2u, vh + 0.5 * dt * k2v)
        k4u, k4v = rhs(uh + dt * k3u, vh + dt * k3v)
        uh = uh + dt / 6 * (k1u + 2 * k2u + 2 * k3u + k4u)
        vh = vh + dt / 6 * (k1v + 2 * k2v + 2 * k3v + k4v)
        if filt is not None:
            uh, vh = uh * filt, vh * filt
        t = t0 + n * dt
        # max|u| <= sum|u_hat| / M, so checking the spectrum is cheap and safe
        amp = np.abs(uh).sum() / M
        if not np.isfinite(amp) or amp > BLOWUP_LEVEL:
            u_now = np.fft.ifft(uh).real
            if not np.all(np.isfinite(u_now)) or np.abs(u_now).max() > BLOWUP_LEVEL:
                record(t)
                raise BlowUp(t, pack())
        if n % every == 0 or n == n_steps:
            record(t)
    return pack()


def fit_translation(u, profile_hat, length):
    """Shift ``s`` in ``[-L/2, L/2)`` minimising ``||u - P(. - s)||``; ``P`` is given by its spectrum."""
    from scipy.optimize import minimize_scalar

    M = u.size
    k = wavenumbers(M, length)
    uh = np.fft.fft(u)

    # maximise the cross-correlation c(s) = sum conj(P_hat) u_hat e^{i k s}
    cross = np.fft.ifft(np.conj(profile_hat) * uh).real
    s0 = np.argmax(cross) * length / M

    def neg_corr(s):
        return -np.real(np.sum(np.conj(profile_hat) * uh * np.exp(1j * k * s)))

    res = minimize_scalar(neg_corr, bracket=(s0 - length / M, s0, s0 + length / M), tol=1e-12)
    return float((res.x + length / 2) % length - length / 2)


def shift_field(u, shift, length):
    """Periodic translation ``u(x - shift)`` by Fourier interpolation."""
    k = wavenumbers(u.size, length)
    return np.fft.ifft(np.fft.fft(u) * np.exp(-1j * k * shift)).real


def modal_amplitude(u, mode):
    """Cosine coefficient of Fourier mode ``mode`` (integer)."""
    return 2 * np.fft.rfft(u, axis=-1)[..., mode].real / u.shape[-1]


def measure_frequency(times, signal):
    """Angular frequency of a sinusoidal series, by least squares seeded with an FFT peak."""
    from scipy.optimize import curve_fit

    t = np.asarray(times, float)
    y = np.asarray(signal, float)
    n = t.size
    power = np.abs(np.fft.rfft(y - y.mean(), 8 * n))
    freqs = 2 * np.pi * np.fft.rfftfreq(8 * n, d=t[1] - t[0])
    w0 = freqs[1 + np.argmax(power[1:])]
    amp0 = np.abs(y).max()

    def model(tt, a, w, ph):
        return a * np.cos(w * tt + ph)

    popt, _ = curve_fit(model, t, y, p0=(amp0, w0, 0.0), maxfev=20000)
    return abs(float(popt[1]))
