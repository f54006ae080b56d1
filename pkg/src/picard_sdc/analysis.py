"""Convergence studies, correction-error coefficients and table reproduction."""
from __future__ import annotations

import csv
import enum
import io
import json
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .errors import ConfigurationError, SingularityError, SolverDivergence
from .problems import OdeSystem, reference_solution
from .quadrature import NAMED_FAMILIES, NodeFamily, QuadratureRule, lebesgue_max, make_rule
from .sweeper import DEFAULT_OPTIONS, SolveOptions, SweepScheme, integrate

SCHEMA_VERSION = 1
ERROR_FLOOR = 1e-16
FIT_FLOOR = 1e-14


class BaseRule(enum.Enum):
    TRAPEZOID = "trapezoid"
    FORWARD_EULER = "forward-euler"
    BACKWARD_EULER = "backward-euler"

    @classmethod
    def parse(cls, value):
        if isinstance(value, cls):
            return value
        key = str(value).strip().lower().replace("_", "-")
        for member in cls:
            if member.value == key:
                return member
        raise ConfigurationError(
            f"unknown base rule {value!r}; valid values: {', '.join(m.value for m in cls)}"
        )


# ---------------------------------------------------------------------------
# Correction coefficients


@dataclass(frozen=True)
class CorrectionCoefficients:
    """Per-subinterval coefficients of the low-order minus high-order quadrature.

    Row ``n`` holds ``c[n, m]`` with the local error of a correction over
    subinterval ``n`` equal to ``h * sum_m c[n, m] e_m``, where ``e_m`` is the
    error of the previous iterate at node ``m``.  The sign convention is
    base rule minus interpolatory integral.
    """

    rule_label: str
    base: BaseRule
    coeffs: np.ndarray

    def sign_normalized(self) -> np.ndarray:
        """Rows scaled by +-1 so the first nonzero entry is positive.

        The published tables use this presentation; the sign carries no
        information about the order of the error term.
        """
        out = self.coeffs.copy()
        for row in out:
            nz = np.nonzero(np.abs(row) > 1e-14)[0]
            if nz.size and row[nz[0]] < 0:
                row *= -1.0
        return out

    def as_fractions(self, max_denominator: int = 100000, normalized: bool = False) -> list:
        from fractions import Fraction

        rows = self.sign_normalized() if normalized else self.coeffs
        return [
            [Fraction(float(c)).limit_denominator(max_denominator) for c in row]
            for row in rows
        ]


def correction_coefficients(rule: QuadratureRule, base) -> CorrectionCoefficients:
    base = BaseRule.parse(base)
    left = rule.basis(rule.boundaries[:-1])
    right = rule.basis(rule.boundaries[1:])
    frac = rule.fractions[:, None]
    if base is BaseRule.TRAPEZOID:
        low = 0.5 * frac * (left + right)
    elif base is BaseRule.FORWARD_EULER:
        low = frac * left
    else:
        low = frac * right
    return CorrectionCoefficients(rule.label, base, low - rule.weights)


def first_vanishing_moment(coeffs: CorrectionCoefficients, rule: QuadratureRule,
                           tol: float = 1e-12) -> list:
    """Smallest ``k`` with ``sum_m c[n, m] xi_m^k != 0``, per subinterval."""
    out = []
    for row in coeffs.coeffs:
        k = 0
        while k <= 2 * rule.M and abs(row @ rule.nodes**k) <= tol:
            k += 1
        out.append(k)
    return out


def _series_mul(a, b, deg):
    return np.convolve(a, b)[: deg + 1]


def euler_iterate_error_series(rule: QuadratureRule, degree: int = 12) -> np.ndarray:
    """Taylor coefficients in ``h`` of the forward-Euler iterate error on ``y' = y``.

    Row ``m`` holds the coefficients of ``eta_m(h) - exp(xi_m h)`` where
    ``eta`` is the forward-Euler march over the subintervals.
    """
    prod = np.zeros(degree + 1)
    prod[0] = 1.0
    at_boundary = [prod.copy()]
    for frac in rule.fractions:
        prod = _series_mul(prod, np.array([1.0, frac]), degree)
        at_boundary.append(prod.copy())
    rows = []
    for m, xi in enumerate(rule.nodes):
        exp_series = np.array([xi**j / math.factorial(j) for j in range(degree + 1)])
        rows.append(at_boundary[rule.node_boundary[m]] - exp_series)
    return np.array(rows)


def coefficient_order(coeffs: CorrectionCoefficients, rule: QuadratureRule,
                      tol: float = 1e-12, degree: int = 12) -> list:
    """Leading power of ``h`` in each subinterval's correction error.

    The iterate is the forward-Euler provisional solution of ``y' = y``,
    whose node errors are ``O(h^2)``; the correction error over subinterval
    ``n`` is ``h * sum_m c[n, m] e_m(h)`` expanded as a power series in ``h``.
    """
    series = euler_iterate_error_series(rule, degree)
    out = []
    for row in coeffs.coeffs:
        local = row @ series
        nonzero = np.nonzero(np.abs(local) > tol)[0]
        out.append(int(nonzero[0]) + 1 if nonzero.size else None)
    return out


# ---------------------------------------------------------------------------
# Convergence studies


@dataclass
class ConvergenceReport:
    steps: list
    h: list
    errors: list
    orders: list
    failures: dict = field(default_factory=dict)
    metadata: dict = field(default_factory=dict)

    def fitted_orders(self) -> list:
        return [o for o in self.orders if o is not None]

    @property
    def final_order(self) -> Optional[float]:
        fitted = self.fitted_orders()
        return fitted[-1] if fitted else None

    def rows(self):
        for s, h, e, o in zip(self.steps, self.h, self.errors, self.orders):
            yield s, h, e, o

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["steps", "h", "error", "order"])
        for s, h, e, o in self.rows():
            writer.writerow([s, repr(h), "" if e is None else repr(e), "" if o is None else repr(o)])
        return buf.getvalue()

    def to_dict(self) -> dict:
        return {
            "schema_version": SCHEMA_VERSION,
            "kind": "convergence",
            "metadata": self.metadata,
            "steps": self.steps,
            "h": self.h,
            "errors": self.errors,
            "orders": self.orders,
            "failures": {str(k): v for k, v in self.failures.items()},
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)


def pairwise_orders(errors: Sequence[Optional[float]], floor: float = FIT_FLOOR) -> list:
    """``log2(e_k / e_{k+1})`` between successive doublings; ``None`` where unusable."""
    orders: list = [None]
    for prev, cur in zip(errors[:-1], errors[1:]):
        if prev is None or cur is None or prev < floor or cur < floor:
            orders.append(None)
        else:
            orders.append(math.log2(prev / cur))
    return orders


def error_norm(y, ref, mode: str = "absolute") -> float:
    err = float(np.max(np.abs(np.asarray(y) - np.asarray(ref))))
    if mode == "relative":
        err /= float(np.max(np.abs(ref)))
    elif mode != "absolute":
        raise ConfigurationError(f"unknown error norm {mode!r}; valid: absolute, relative")
    return max(err, ERROR_FLOOR)


def convergence_study(system: OdeSystem, scheme: SweepScheme, rule: QuadratureRule,
                      T: Optional[float], meshes: Sequence[int],
                      opts: SolveOptions = DEFAULT_OPTIONS, reference=None,
                      norm: str = "absolute") -> ConvergenceReport:
    """Final-time errors on successively doubled meshes and their pairwise orders."""
    meshes = [int(m) for m in meshes]
    if len(meshes) < 3:
        raise ConfigurationError("a convergence study needs at least 3 meshes")
    if any(b != 2 * a for a, b in zip(meshes[:-1], meshes[1:])):
        raise ConfigurationError("meshes must double from one entry to the next")
    T = system.T if T is None else float(T)
    if reference is None:
        reference = reference_solution(system, T)

    errors: list = []
    failures = {}
    for m in meshes:
        try:
            y = integrate(rule, system, scheme, T, m, opts)[-1]
        except (SolverDivergence, SingularityError) as exc:
            failures[m] = str(exc)
            errors.append(None)
            continue
        if not np.all(np.isfinite(y)):
            failures[m] = "non-finite solution"
            errors.append(None)
            continue
        errors.append(error_norm(y, reference, norm))

    metadata = {
        "problem": system.name,
        "problem_params": {k: _jsonable(v) for k, v in system.params.items()},
        "scheme": scheme.describe(),
        "rule": {"family": rule.family.value, "M": rule.M, "nodes": rule.nodes.tolist()},
        "T": T,
        "norm": norm,
        "reference": [_jsonable(v) for v in np.asarray(reference).tolist()],
    }
    return ConvergenceReport(
        steps=meshes,
        h=[T / m for m in meshes],
        errors=errors,
        orders=pairwise_orders(errors),
        failures=failures,
        metadata=metadata,
    )


def _jsonable(v):
    if isinstance(v, complex):
        return [v.real, v.imag]
    if isinstance(v, (np.floating, np.integer)):
        return v.item()
    return v


# ---------------------------------------------------------------------------
# Interpolation constants table


def table1_report(Ms: Sequence[int] = range(2, 21), families=NAMED_FAMILIES,
                  samples: int = 1000, refine: bool = False) -> list:
    """Rows ``(M, {family: max |l_m|})``.

    Defaults to the plain maximum over 1000 equispaced samples, which is how
    the published table was produced; ``refine=True`` gives the true maxima.
    """
    families = [NodeFamily.parse(f) for f in families]
    rows = []
    for M in Ms:
        rows.append(
            (int(M), {f.value: lebesgue_max(make_rule(f, M), samples, refine) for f in families})
        )
    return rows
