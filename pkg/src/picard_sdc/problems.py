"""Test problems and the right-hand-side abstraction consumed by the sweeps."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .errors import ConfigurationError

VDP_Y0 = (2.0, -0.666666654321)


@dataclass(frozen=True)
class OdeSystem:
    """Autonomous system ``y' = f(y)`` with an optional split ``f = f_I + f_E``.

    ``linear_parts`` is set only for scalar linear problems ``y' = (a + b) y``
    with ``f_I = a y`` and ``f_E = b y``; implicit substeps then use a
    closed-form solve, which is what makes complex arithmetic possible.
    """

    name: str
    y0: np.ndarray
    f: Callable
    f_implicit: Optional[Callable] = None
    f_explicit: Optional[Callable] = None
    jac: Optional[Callable] = None
    jac_implicit: Optional[Callable] = None
    exact: Optional[Callable] = None
    linear_parts: Optional[tuple] = None
    lipschitz_hint: Optional[float] = None
    T: float = 1.0
    params: dict = field(default_factory=dict)

    @property
    def dimension(self) -> int:
        return self.y0.size

    @property
    def has_split(self) -> bool:
        return self.f_implicit is not None and self.f_explicit is not None

    @property
    def is_complex(self) -> bool:
        return np.iscomplexobj(self.y0)

    @property
    def key(self) -> tuple:
        return (self.name, tuple(sorted(self.params.items())), tuple(self.y0.tolist()))

    def rhs(self, part: str = "full") -> Callable:
        if part == "full":
            return self.f
        if not self.has_split:
            raise ConfigurationError(f"problem {self.name!r} has no implicit/explicit split")
        return self.f_implicit if part == "implicit" else self.f_explicit

    def jacobian(self, part: str = "full") -> Optional[Callable]:
        return self.jac if part == "full" else self.jac_implicit


def fd_jacobian(g: Callable, y: np.ndarray) -> np.ndarray:
    """Central-difference Jacobian with increment ``sqrt(eps) * (1 + |y_j|)``."""
    y = np.asarray(y, dtype=float)
    d = y.size
    J = np.empty((d, d))
    base = math.sqrt(np.finfo(float).eps)
    for j in range(d):
        step = base * (1.0 + abs(y[j]))
        e = np.zeros(d)
        e[j] = step
        J[:, j] = (g(y + e) - g(y - e)) / (2.0 * step)
    return J


def split_defect(system: OdeSystem, y) -> float:
    """``|f - f_I - f_E|`` relative to ``1 + |f|``, in the max norm."""
    y = np.asarray(y)
    fy = system.f(y)
    gap = fy - system.f_implicit(y) - system.f_explicit(y)
    return float(np.max(np.abs(gap)) / (1.0 + np.max(np.abs(fy))))


# ---------------------------------------------------------------------------
# Problem constructors


def linear_problem(lam: complex = -1.0, explicit_part: complex = 0.0, T: float = 10.0) -> OdeSystem:
    """Dahlquist problem ``y' = lam * y, y(0) = 1``.

    The split puts ``explicit_part * y`` in ``f_E`` and the remainder in ``f_I``.
    """
    is_complex = isinstance(lam, complex) or isinstance(explicit_part, complex)
    dtype = complex if is_complex else float
    lam = dtype(lam)
    lam_e = dtype(explicit_part)
    lam_i = lam - lam_e
    y0 = np.ones(1, dtype=dtype)
    params = {"lam": lam, "explicit_part": lam_e}
    return OdeSystem(
        name="linear",
        y0=y0,
        f=lambda y: lam * y,
        f_implicit=lambda y: lam_i * y,
        f_explicit=lambda y: lam_e * y,
        jac=lambda y: np.array([[lam]]),
        jac_implicit=lambda y: np.array([[lam_i]]),
        exact=lambda t: np.exp(lam * t) * np.ones(1, dtype=dtype),
        linear_parts=(lam_i, lam_e),
        lipschitz_hint=abs(lam),
        T=T,
        params=params,
    )


def constant_problem(c: float = 1.0, dimension: int = 1, T: float = 1.0) -> OdeSystem:
    """``y' = c`` with ``y(0) = 0``; every quadrature is exact."""
    cvec = np.full(dimension, float(c))
    return OdeSystem(
        name="constant",
        y0=np.zeros(dimension),
        f=lambda y: cvec.copy(),
        f_implicit=lambda y: np.zeros(dimension),
        f_explicit=lambda y: cvec.copy(),
        jac=lambda y: np.zeros((dimension, dimension)),
        jac_implicit=lambda y: np.zeros((dimension, dimension)),
        exact=lambda t: cvec * t,
        lipschitz_hint=0.0,
        T=T,
        params={"c": float(c), "dimension": dimension},
    )


def pendulum_problem(y0=(0.0, 1.0), T: float = 10.0) -> OdeSystem:
    """Nonlinear pendulum ``(y1, y2)' = (y2, -sin y1)``."""

    def f(y):
        return np.array([y[1], -math.sin(y[0])])

    def jac(y):
        return np.array([[0.0, 1.0], [-math.cos(y[0]), 0.0]])

    return OdeSystem(
        name="pendulum",
        y0=np.array(y0, dtype=float),
        f=f,
        jac=jac,
        lipschitz_hint=1.0,
        T=T,
        params={},
    )


def pendulum_energy(y) -> float:
    return 0.5 * y[1] ** 2 - math.cos(y[0])


def vdp_problem(eps: float = 1.0, y0=VDP_Y0, T: float = 4.0) -> OdeSystem:
    """Rescaled Van der Pol oscillator with the usual stiff/non-stiff split.

    ``f_E = (y2, 0)`` and ``f_I = (0, (-y1 + (1 - y1^2) y2) / eps)``.
    """
    if eps <= 0:
        raise ConfigurationError(f"eps must be positive, got {eps}")
    eps = float(eps)

    def f(y):
        return np.array([y[1], (-y[0] + (1.0 - y[0] ** 2) * y[1]) / eps])

    def f_i(y):
        return np.array([0.0, (-y[0] + (1.0 - y[0] ** 2) * y[1]) / eps])

    def f_e(y):
        return np.array([y[1], 0.0])

    def jac(y):
        return np.array([[0.0, 1.0], [(-1.0 - 2.0 * y[0] * y[1]) / eps, (1.0 - y[0] ** 2) / eps]])

    def jac_i(y):
        return np.array([[0.0, 0.0], [(-1.0 - 2.0 * y[0] * y[1]) / eps, (1.0 - y[0] ** 2) / eps]])

    return OdeSystem(
        name="vdp",
        y0=np.array(y0, dtype=float),
        f=f,
        f_implicit=f_i,
        f_explicit=f_e,
        jac=jac,
        jac_implicit=jac_i,
        T=T,
        params={"eps": eps},
    )


PROBLEMS = {
    "linear": linear_problem,
    "pendulum": pendulum_problem,
    "vdp": vdp_problem,
}


def get_problem(name: str, **params) -> OdeSystem:
    try:
        ctor = PROBLEMS[name]
    except KeyError:
        raise ConfigurationError(
            f"unknown problem {name!r}; valid problems: {', '.join(PROBLEMS)}"
        ) from None
    return ctor(**{k: v for k, v in params.items() if v is not None})


# ---------------------------------------------------------------------------
# Reference solutions

_REFERENCE_CACHE: dict = {}


def reference_solution(system: OdeSystem, T: Optional[float] = None, steps: int = 512,
                       check: bool = True, check_tol: float = 1e-11) -> np.ndarray:
    """High-accuracy value of ``y(T)``.

    Uses the closed form when the problem has one; otherwise 8-point
    Gauss-Legendre collocation on ``steps`` uniform steps, optionally
    confirmed against a run on twice as many steps.
    """
    T = system.T if T is None else float(T)
    if system.exact is not None:
        return np.asarray(system.exact(T))
    key = (system.key, T, steps, check)
    if key not in _REFERENCE_CACHE:
        from .quadrature import make_rule
        from .sweeper import SolveOptions, collocation_march

        rule = make_rule("legendre", 8)
        opts = SolveOptions(newton_tol=1e-14)
        y = collocation_march(rule, system, T, steps, opts)
        if check:
            y_fine = collocation_march(rule, system, T, 2 * steps, opts)
            gap = float(np.max(np.abs(y - y_fine)))
            if gap > check_tol:
                raise RuntimeError(
                    f"reference for {system.name} not converged: refinement gap {gap:.2e}"
                )
            y = y_fine
        _REFERENCE_CACHE[key] = y
    return _REFERENCE_CACHE[key].copy()
