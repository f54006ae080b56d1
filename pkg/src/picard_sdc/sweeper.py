"""Provisional solutions, correction sweeps, time stepping and collocation.

All update formulas share one layout.  For a step of size ``h`` the solution
is stored at every subinterval boundary ``t_n = xi^R_n h`` (``n = 0..N``),
which covers every quadrature node plus the two interval endpoints.  A sweep
marches ``n = 1..N`` and adds ``h * sum_m w[n, m] f(eta_m)`` of the previous
iterate to a scheme-specific low-order difference term:

=================  ===================================================
picard             none
explicit-sdc       h_n [f(new_{n-1}) - f(old_{n-1})]
implicit-sdc       theta h_n [f(new_n) - f(old_n)]
sisdc              h_n [f_I(new_n) - f_I(old_n)] + h_n [f_E(new_{n-1}) - f_E(old_{n-1})]
modified-sisdc     h_n [f_I(new_n) - f_I(old_n)]
trapezoid-sdc      h_n / 2 [f(new_n) + f(new_{n-1}) - f(old_n) - f(old_{n-1})]
=================  ===================================================

Every difference term vanishes once the iterates stop changing, so all
schemes share the collocation solution as their fixed point.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from .errors import ConfigurationError, SingularityError, SolverDivergence
from .problems import OdeSystem, fd_jacobian
from .quadrature import QuadratureRule


def _parse_enum(cls, value, what):
    if isinstance(value, cls):
        return value
    key = str(value).strip().lower().replace("_", "-")
    for member in cls:
        if member.value == key:
            return member
    valid = ", ".join(m.value for m in cls)
    raise ConfigurationError(f"unknown {what} {value!r}; valid values: {valid}")


class SweepKind(enum.Enum):
    PICARD = "picard"
    EXPLICIT_SDC = "explicit-sdc"
    IMPLICIT_SDC = "implicit-sdc"
    SISDC = "sisdc"
    MODIFIED_SISDC = "modified-sisdc"
    TRAPEZOID_SDC = "trapezoid-sdc"

    @classmethod
    def parse(cls, value):
        return _parse_enum(cls, value, "scheme")


class Provisional(enum.Enum):
    FORWARD_EULER = "forward-euler"
    BACKWARD_EULER = "backward-euler"
    IMEX_EULER = "imex-euler"
    IMPLICIT_PART_EULER = "implicit-part-euler"
    TRAPEZOID_RULE = "trapezoid"
    COPY_CONSTANT = "constant"

    @classmethod
    def parse(cls, value):
        return _parse_enum(cls, value, "provisional method")


class ScalarField(enum.Enum):
    REAL_VECTOR = "real"
    COMPLEX_SCALAR = "complex"


DEFAULT_PROVISIONAL = {
    SweepKind.PICARD: Provisional.FORWARD_EULER,
    SweepKind.EXPLICIT_SDC: Provisional.FORWARD_EULER,
    SweepKind.IMPLICIT_SDC: Provisional.BACKWARD_EULER,
    SweepKind.SISDC: Provisional.IMEX_EULER,
    SweepKind.MODIFIED_SISDC: Provisional.IMEX_EULER,
    SweepKind.TRAPEZOID_SDC: Provisional.TRAPEZOID_RULE,
}

PROVISIONAL_ORDER = {
    Provisional.FORWARD_EULER: 1,
    Provisional.BACKWARD_EULER: 1,
    Provisional.IMEX_EULER: 1,
    Provisional.IMPLICIT_PART_EULER: 0,
    Provisional.TRAPEZOID_RULE: 2,
    Provisional.COPY_CONSTANT: 0,
}

_SPLIT_KINDS = (SweepKind.SISDC, SweepKind.MODIFIED_SISDC)
_SPLIT_PROVISIONALS = (Provisional.IMEX_EULER, Provisional.IMPLICIT_PART_EULER)


@dataclass(frozen=True)
class SweepScheme:
    kind: SweepKind
    corrections: int = 0
    theta: float = 1.0
    provisional: Optional[Provisional] = None

    def __post_init__(self):
        object.__setattr__(self, "kind", SweepKind.parse(self.kind))
        prov = DEFAULT_PROVISIONAL[self.kind] if self.provisional is None else self.provisional
        object.__setattr__(self, "provisional", Provisional.parse(prov))
        if self.corrections < 0:
            raise ConfigurationError("corrections must be >= 0")

    @property
    def needs_split(self) -> bool:
        return self.kind in _SPLIT_KINDS or self.provisional in _SPLIT_PROVISIONALS

    def with_corrections(self, corrections: int) -> "SweepScheme":
        return replace(self, corrections=corrections)

    def describe(self) -> dict:
        return {
            "kind": self.kind.value,
            "corrections": self.corrections,
            "theta": self.theta,
            "provisional": self.provisional.value,
        }


@dataclass(frozen=True)
class SolveOptions:
    newton_tol: float = 1e-12
    newton_abs_tol: float = 1e-14
    newton_max_iter: int = 50
    fixed_point_tol: Optional[float] = None
    max_sweeps: int = 1000
    field: ScalarField = ScalarField.REAL_VECTOR

    def __post_init__(self):
        if self.newton_tol <= 0 or self.newton_abs_tol <= 0:
            raise ConfigurationError("Newton tolerances must be positive")
        if self.fixed_point_tol is not None and self.fixed_point_tol <= 0:
            raise ConfigurationError("fixed_point_tol must be positive")


DEFAULT_OPTIONS = SolveOptions()


@dataclass
class NodeSolution:
    """One iterate: values at all subinterval boundaries of a single step.

    ``values[0]`` is the starting value and ``values[-1]`` the value at the
    end of the step.  ``fvals`` (and the split parts, when tracked) are
    evaluated at construction so they are always coherent with ``values``.
    """

    values: np.ndarray
    fvals: np.ndarray
    h: float
    node_index: np.ndarray = field(repr=False)
    fi: Optional[np.ndarray] = field(default=None, repr=False)
    fe: Optional[np.ndarray] = field(default=None, repr=False)

    @property
    def eta0(self) -> np.ndarray:
        return self.values[0]

    @property
    def eta(self) -> np.ndarray:
        """Values at the quadrature nodes, shape ``(M, d)``."""
        return self.values[self.node_index]

    @property
    def final(self) -> np.ndarray:
        return self.values[-1]


class _Evaluator:
    """Right-hand-side evaluation for one (system, scheme) pair."""

    def __init__(self, system: OdeSystem, split: bool):
        self.system = system
        self.split = split
        if split and not system.has_split:
            raise ConfigurationError(
                f"scheme needs an implicit/explicit split but problem {system.name!r} has none"
            )

    def rows(self, y):
        f = self.system.f(y)
        if not self.split:
            return f, None, None
        return f, self.system.f_implicit(y), self.system.f_explicit(y)

    def build(self, values, h, rule: QuadratureRule) -> NodeSolution:
        d = values.shape[1]
        fvals = np.empty_like(values)
        fi = np.empty_like(values) if self.split else None
        fe = np.empty_like(values) if self.split else None
        for n in range(values.shape[0]):
            f, a, b = self.rows(values[n])
            fvals[n] = f
            if self.split:
                fi[n], fe[n] = a, b
        assert fvals.shape[1] == d
        return NodeSolution(values, fvals, h, rule.node_boundary, fi, fe)


def _working_dtype(system: OdeSystem, y, opts: SolveOptions):
    dtype = np.result_type(np.asarray(y), system.y0, float)
    if opts.field is ScalarField.COMPLEX_SCALAR:
        if system.linear_parts is None:
            raise ConfigurationError("complex arithmetic requires a linear scalar problem")
        dtype = np.result_type(dtype, complex)
    return dtype


# ---------------------------------------------------------------------------
# Implicit substeps


def implicit_substep(system: OdeSystem, a, alpha: float, use_split: bool = False,
                     opts: SolveOptions = DEFAULT_OPTIONS) -> np.ndarray:
    """Solve ``eta = a + alpha * g(eta)`` with ``g = f_I`` if ``use_split`` else ``f``."""
    a = np.asarray(a)
    if alpha == 0:
        return a.copy()
    part = "implicit" if use_split else "full"
    if system.linear_parts is not None:
        lam = system.linear_parts[0] if use_split else system.params["lam"]
        denom = 1.0 - alpha * lam
        if denom == 0:
            raise SingularityError(f"singular implicit substep: 1 - alpha*lambda = 0 at alpha={alpha}")
        return a / denom
    if opts.field is ScalarField.COMPLEX_SCALAR:
        raise ConfigurationError("complex arithmetic requires a linear scalar problem")

    g = system.rhs(part)
    jac = system.jacobian(part)
    eye = np.eye(a.size)
    eta = a.astype(float, copy=True)
    trace = []
    for _ in range(opts.newton_max_iter):
        resid = eta - a - alpha * g(eta)
        J = jac(eta) if jac is not None else fd_jacobian(g, eta)
        try:
            delta = np.linalg.solve(eye - alpha * J, resid)
        except np.linalg.LinAlgError as exc:
            raise SingularityError(f"singular Newton matrix in implicit substep: {exc}") from exc
        eta = eta - delta
        size = float(np.max(np.abs(delta)))
        trace.append(size)
        if not math.isfinite(size):
            break
        if size <= max(opts.newton_tol * float(np.max(np.abs(eta))), opts.newton_abs_tol):
            return eta
    raise SolverDivergence(
        f"implicit substep did not converge in {len(trace)} Newton iterations", trace
    )


# ---------------------------------------------------------------------------
# Provisional solution and sweeps


def provisional(rule: QuadratureRule, system: OdeSystem, scheme: SweepScheme, y_start, h: float,
                opts: SolveOptions = DEFAULT_OPTIONS) -> NodeSolution:
    """Initial iterate from a low-order march over the subintervals."""
    if h <= 0:
        raise ConfigurationError("step size must be positive")
    ev = _Evaluator(system, scheme.needs_split)
    dtype = _working_dtype(system, y_start, opts)
    y_start = np.asarray(y_start, dtype=dtype).ravel()
    values = np.empty((rule.N + 1, y_start.size), dtype=dtype)
    values[0] = y_start
    kind = scheme.provisional
    hs = rule.fractions * h

    for n in range(1, rule.N + 1):
        hn = hs[n - 1]
        prev = values[n - 1]
        if kind is Provisional.COPY_CONSTANT:
            values[n] = prev
        elif kind is Provisional.FORWARD_EULER:
            values[n] = prev + hn * system.f(prev)
        elif kind is Provisional.BACKWARD_EULER:
            values[n] = implicit_substep(system, prev, hn, False, opts)
        elif kind is Provisional.IMEX_EULER:
            values[n] = implicit_substep(system, prev + hn * system.f_explicit(prev), hn, True, opts)
        elif kind is Provisional.IMPLICIT_PART_EULER:
            values[n] = implicit_substep(system, prev, hn, True, opts)
        else:
            values[n] = implicit_substep(system, prev + 0.5 * hn * system.f(prev), 0.5 * hn, False, opts)
    return ev.build(values, h, rule)


def sweep(rule: QuadratureRule, system: OdeSystem, scheme: SweepScheme, prev: NodeSolution,
          opts: SolveOptions = DEFAULT_OPTIONS) -> NodeSolution:
    """One correction pass producing the next iterate from ``prev``."""
    ev = _Evaluator(system, scheme.needs_split)
    h = prev.h
    hs = rule.fractions * h
    quad = h * (rule.weights @ prev.fvals[rule.node_boundary])
    kind = scheme.kind
    theta = scheme.theta
    old_f, old_i, old_e = prev.fvals, prev.fi, prev.fe

    values = np.empty_like(prev.values)
    fvals = np.empty_like(prev.fvals)
    fi = np.empty_like(prev.values) if ev.split else None
    fe = np.empty_like(prev.values) if ev.split else None
    values[0] = prev.values[0]
    fvals[0] = old_f[0]
    if ev.split:
        fi[0], fe[0] = old_i[0], old_e[0]

    for n in range(1, rule.N + 1):
        hn = hs[n - 1]
        left = values[n - 1]
        if kind is SweepKind.PICARD:
            new = left + quad[n - 1]
        elif kind is SweepKind.EXPLICIT_SDC:
            new = left + hn * (fvals[n - 1] - old_f[n - 1]) + quad[n - 1]
        elif kind is SweepKind.IMPLICIT_SDC:
            alpha = theta * hn
            rhs = left - alpha * old_f[n] + quad[n - 1]
            new = implicit_substep(system, rhs, alpha, False, opts)
        elif kind is SweepKind.SISDC:
            rhs = left - hn * old_i[n] + hn * (fe[n - 1] - old_e[n - 1]) + quad[n - 1]
            new = implicit_substep(system, rhs, hn, True, opts)
        elif kind is SweepKind.MODIFIED_SISDC:
            rhs = left - hn * old_i[n] + quad[n - 1]
            new = implicit_substep(system, rhs, hn, True, opts)
        else:
            half = 0.5 * hn
            rhs = left + half * (fvals[n - 1] - old_f[n] - old_f[n - 1]) + quad[n - 1]
            new = implicit_substep(system, rhs, half, False, opts)
        values[n] = new
        f, a, b = ev.rows(new)
        fvals[n] = f
        if ev.split:
            fi[n], fe[n] = a, b
    return NodeSolution(values, fvals, h, rule.node_boundary, fi, fe)


def iterate(rule: QuadratureRule, system: OdeSystem, scheme: SweepScheme, y_start, h: float,
            opts: SolveOptions = DEFAULT_OPTIONS) -> tuple[NodeSolution, int]:
    """Provisional solution followed by the configured sweeps.

    Returns the last iterate and the number of sweeps performed.  With
    ``opts.fixed_point_tol`` set, sweeps continue until successive iterates
    differ by less than the tolerance at every boundary point.
    """
    sol = provisional(rule, system, scheme, y_start, h, opts)
    if opts.fixed_point_tol is None:
        for _ in range(scheme.corrections):
            sol = sweep(rule, system, scheme, sol, opts)
        return sol, scheme.corrections
    for count in range(1, opts.max_sweeps + 1):
        new = sweep(rule, system, scheme, sol, opts)
        change = float(np.max(np.abs(new.values - sol.values)))
        sol = new
        if change < opts.fixed_point_tol:
            return sol, count
        if not math.isfinite(change):
            break
    raise SolverDivergence(
        f"sweeps did not reach fixed-point tolerance {opts.fixed_point_tol:g}"
    )


def step(rule: QuadratureRule, system: OdeSystem, scheme: SweepScheme, y_start, h: float,
         opts: SolveOptions = DEFAULT_OPTIONS) -> np.ndarray:
    """Advance ``y_start`` by one step of size ``h``."""
    sol, _ = iterate(rule, system, scheme, y_start, h, opts)
    return sol.final.copy()


def integrate(rule: QuadratureRule, system: OdeSystem, scheme: SweepScheme, T: float, steps: int,
              opts: SolveOptions = DEFAULT_OPTIONS, y0=None) -> np.ndarray:
    """States at the ``steps + 1`` uniformly spaced times in [0, T]."""
    if steps < 1:
        raise ConfigurationError("steps must be >= 1")
    h = T / steps
    y = np.asarray(system.y0 if y0 is None else y0)
    dtype = _working_dtype(system, y, opts)
    out = np.empty((steps + 1, y.size), dtype=dtype)
    out[0] = y
    for k in range(steps):
        out[k + 1] = step(rule, system, scheme, out[k], h, opts)
    return out


# ---------------------------------------------------------------------------
# Fully implicit collocation


def _cumulative_weights(rule: QuadratureRule) -> np.ndarray:
    cum = np.zeros((rule.N + 1, rule.M))
    cum[1:] = np.cumsum(rule.weights, axis=0)
    return cum


def collocation_solve(rule: QuadratureRule, system: OdeSystem, y_start, h: float,
                      opts: SolveOptions = DEFAULT_OPTIONS) -> NodeSolution:
    """Solve the coupled collocation equations for one step.

    Newton runs on the stacked node unknowns (``M * d`` of them); linear
    scalar problems are solved directly.
    """
    if h <= 0:
        raise ConfigurationError("step size must be positive")
    dtype = _working_dtype(system, y_start, opts)
    y_start = np.asarray(y_start, dtype=dtype).ravel()
    d, M = y_start.size, rule.M
    cum = _cumulative_weights(rule)
    A = cum[rule.node_boundary]

    if system.linear_parts is not None:
        lam = system.params["lam"]
        X = np.linalg.solve(np.eye(M) - h * lam * A, np.ones(M)).astype(dtype)[:, None] * y_start
        F = lam * X
    else:
        X = np.tile(y_start, (M, 1))
        jac = system.jac
        trace = []
        for _ in range(opts.newton_max_iter):
            F = np.array([system.f(x) for x in X])
            resid = (X - y_start - h * (A @ F)).ravel()
            big = np.eye(M * d)
            for k in range(M):
                Jk = jac(X[k]) if jac is not None else fd_jacobian(system.f, X[k])
                for m in range(M):
                    big[m * d:(m + 1) * d, k * d:(k + 1) * d] -= h * A[m, k] * Jk
            try:
                delta = np.linalg.solve(big, resid).reshape(M, d)
            except np.linalg.LinAlgError as exc:
                raise SingularityError(f"singular collocation Newton matrix: {exc}") from exc
            X = X - delta
            size = float(np.max(np.abs(delta)))
            trace.append(size)
            if size <= max(opts.newton_tol * float(np.max(np.abs(X))), opts.newton_abs_tol):
                break
            if not math.isfinite(size):
                raise SolverDivergence("collocation Newton iteration diverged", trace)
        else:
            raise SolverDivergence("collocation Newton iteration did not converge", trace)
        F = np.array([system.f(x) for x in X])

    values = y_start + h * (cum @ F)
    values[rule.node_boundary] = X
    values[0] = y_start
    split = system.has_split
    return _Evaluator(system, split).build(values, h, rule)


def collocation_residual(rule: QuadratureRule, system: OdeSystem, sol: NodeSolution) -> float:
    """Max-norm defect of the collocation equations at ``sol``."""
    quad = sol.h * (rule.weights @ sol.fvals[rule.node_boundary])
    gaps = sol.values[1:] - sol.values[:-1] - quad
    return float(np.max(np.abs(gaps)))


def collocation_march(rule: QuadratureRule, system: OdeSystem, T: float, steps: int,
                      opts: SolveOptions = DEFAULT_OPTIONS, y0=None) -> np.ndarray:
    """Final state after ``steps`` uniform collocation steps on [0, T]."""
    h = T / steps
    y = np.asarray(system.y0 if y0 is None else y0)
    for _ in range(steps):
        y = collocation_solve(rule, system, y, h, opts).final
    return y


# ---------------------------------------------------------------------------
# Presets


def preset(kind, order: int, provisional_method=None, theta: float = 1.0):
    """Minimal ``(M, scheme)`` reaching ``order`` on uniform nodes.

    ``M = order`` uniform nodes and the fewest corrections that lift the
    provisional order to ``order``: one order per sweep for Euler-type
    corrections, two per sweep for trapezoid corrections.
    """
    kind = SweepKind.parse(kind)
    if order < 1:
        raise ConfigurationError("order must be >= 1")
    scheme = SweepScheme(kind, 0, theta, provisional_method)
    start = PROVISIONAL_ORDER[scheme.provisional]
    gap = max(order - start, 0)
    per_sweep = 2 if kind is SweepKind.TRAPEZOID_SDC else 1
    corrections = -(-gap // per_sweep)
    return max(order, 2), scheme.with_corrections(corrections)
