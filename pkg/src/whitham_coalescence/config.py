"""Numerical tolerances shared across modules."""

from dataclasses import dataclass, fields, replace


@dataclass(frozen=True)
class Tolerances:
    symmetry: float = 1e-12          # relative Frobenius defect of pencil matrices
    jacobian_symmetry: float = 1e-4  # above this a user model is rejected
    root_acceptance: float = 1e-8    # |Delta(c)| relative to its term scale
    double_root: float = 1e-6        # gap < double_root * (1 + |c|) => cluster
    kernel: float = 1e-8             # sigma_min < kernel * ||E|| => singular
    degeneracy: float = 1e-10        # |<z, E' z>| relative to ||E'||
    imag: float = 1e-9               # |Im c| < imag * (1 + |c|) => real
    newton_polish_steps: int = 10
    refine_tol: float = 1e-10
    refine_maxiter: int = 50
    second_derivative: float = 1e-6
    chain: float = 1e-8
    mu_zero: float = 1e-10
    kappa_routes: float = 1e-5
    mu_routes: float = 1e-5

    def __post_init__(self):
        for f in fields(self):
            if getattr(self, f.name) <= 0:
                raise ValueError(f"tolerance {f.name} must be positive")

    def with_overrides(self, **kwargs):
        return replace(self, **kwargs)


DEFAULT_TOL = Tolerances()
