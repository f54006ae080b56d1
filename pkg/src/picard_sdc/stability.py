"""Amplification factors and regions of absolute stability."""
from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, replace
from typing import Optional

import numpy as np

from .errors import ConfigurationError, SingularityError
from .problems import linear_problem
from .quadrature import QuadratureRule
from .sweeper import DEFAULT_OPTIONS, ScalarField, SolveOptions, SweepKind, SweepScheme, step


def amplification(scheme: SweepScheme, rule: QuadratureRule, z: complex,
                  opts: SolveOptions = DEFAULT_OPTIONS, explicit_part: complex = 0.0) -> complex:
    """One step of ``scheme`` on ``y' = z y`` from ``y = 1`` with ``h = 1``.

    For split schemes ``explicit_part`` is the portion of ``z`` treated
    explicitly.  Raises :class:`SingularityError` when an implicit substep
    is singular.
    """
    z = complex(z)
    system = linear_problem(z, complex(explicit_part))
    opts = replace(opts, field=ScalarField.COMPLEX_SCALAR)
    return complex(step(rule, system, scheme, system.y0, 1.0, opts)[0])


def abs_amplification(scheme, rule, z, opts=DEFAULT_OPTIONS, explicit_part=0.0) -> float:
    """``|rho(z)|`` with singular or overflowing points mapped to ``+inf``."""
    try:
        with np.errstate(over="ignore", invalid="ignore"):
            value = abs(amplification(scheme, rule, z, opts, explicit_part))
    except (SingularityError, ZeroDivisionError, OverflowError):
        return float("inf")
    return value if np.isfinite(value) else float("inf")


@dataclass
class StabilityGrid:
    """``values[i, j] = |rho(re[i] + 1j * im[j])|``."""

    re_range: tuple
    im_range: tuple
    nx: int
    ny: int
    values: np.ndarray
    metadata: Optional[dict] = None

    @property
    def re(self) -> np.ndarray:
        return np.linspace(self.re_range[0], self.re_range[1], self.nx)

    @property
    def im(self) -> np.ndarray:
        return np.linspace(self.im_range[0], self.im_range[1], self.ny)

    def stable_mask(self) -> np.ndarray:
        return self.values < 1.0

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["re", "im", "abs_rho"])
        re, im = self.re, self.im
        for i in range(self.nx):
            for j in range(self.ny):
                writer.writerow([repr(float(re[i])), repr(float(im[j])), repr(float(self.values[i, j]))])
        return buf.getvalue()

    def to_json(self) -> str:
        from .analysis import SCHEMA_VERSION

        vals = [[v if np.isfinite(v) else "inf" for v in row] for row in self.values.tolist()]
        return json.dumps({
            "schema_version": SCHEMA_VERSION,
            "kind": "stability",
            "metadata": self.metadata or {},
            "re_range": list(self.re_range),
            "im_range": list(self.im_range),
            "nx": self.nx,
            "ny": self.ny,
            "abs_rho": vals,
        }, indent=2, sort_keys=True)


def default_ranges(order: int) -> tuple:
    if order <= 5:
        return (-6.0, 2.0), (-5.0, 5.0)
    return (-15.0, 5.0), (-12.0, 12.0)


def scheme_order(scheme: SweepScheme, rule: QuadratureRule) -> int:
    """Nominal order used only to pick a default plotting window."""
    from .sweeper import PROVISIONAL_ORDER

    per = 2 if scheme.kind is SweepKind.TRAPEZOID_SDC else 1
    return min(PROVISIONAL_ORDER[scheme.provisional] + per * scheme.corrections, rule.M)


def scan_region(scheme: SweepScheme, rule: QuadratureRule, re_range=None, im_range=None,
                nx: int = 401, ny: int = 401, opts: SolveOptions = DEFAULT_OPTIONS,
                explicit_part: complex = 0.0) -> StabilityGrid:
    """Sample ``|rho|`` on a uniform ``nx x ny`` grid."""
    if nx < 2 or ny < 2:
        raise ConfigurationError("stability grids need nx, ny >= 2")
    if re_range is None or im_range is None:
        dre, dim = default_ranges(scheme_order(scheme, rule))
        re_range = dre if re_range is None else re_range
        im_range = dim if im_range is None else im_range
    re_range = (float(re_range[0]), float(re_range[1]))
    im_range = (float(im_range[0]), float(im_range[1]))
    if re_range[0] >= re_range[1] or im_range[0] >= im_range[1]:
        raise ConfigurationError("grid ranges must be increasing intervals")

    values = _scan_vectorized(scheme, rule, re_range, im_range, nx, ny, opts, explicit_part)
    meta = {
        "scheme": scheme.describe(),
        "rule": {"family": rule.family.value, "M": rule.M, "nodes": rule.nodes.tolist()},
        "explicit_part": [complex(explicit_part).real, complex(explicit_part).imag],
    }
    return StabilityGrid(re_range, im_range, nx, ny, values, meta)


def _scan_vectorized(scheme, rule, re_range, im_range, nx, ny, opts, explicit_part):
    """Run the one-step map on every grid point at once.

    The scalar map is linear in ``y`` with closed-form substeps, so the same
    recurrences evaluated on an array of ``z`` values give every ``rho(z)``
    in one pass.  Points whose substep denominator vanishes become ``+inf``.
    """
    re = np.linspace(re_range[0], re_range[1], nx)
    im = np.linspace(im_range[0], im_range[1], ny)
    Z = re[:, None] + 1j * im[None, :]
    with np.errstate(all="ignore"):
        rho = rho_array(scheme, rule, Z.ravel(), explicit_part, opts).reshape(nx, ny)
        out = np.abs(rho)
    out[~np.isfinite(out)] = np.inf
    return out


def rho_array(scheme: SweepScheme, rule: QuadratureRule, z: np.ndarray,
              explicit_part: complex = 0.0, opts: SolveOptions = DEFAULT_OPTIONS) -> np.ndarray:
    """Vectorized amplification factor over an array of ``z``.

    Mirrors the scalar one-step map in :mod:`sweeper` for ``y' = z y`` with
    ``h = 1``: the solution at each boundary is an array over ``z``.
    Singular substeps produce ``inf``/``nan`` entries.
    """
    from .sweeper import Provisional

    z = np.asarray(z, dtype=complex)
    le = np.full_like(z, complex(explicit_part))
    li = z - le
    hs = rule.fractions
    N = rule.N
    kind = scheme.kind
    prov = scheme.provisional

    vals = np.empty((N + 1,) + z.shape, dtype=complex)
    vals[0] = 1.0
    for n in range(1, N + 1):
        hn, prev = hs[n - 1], vals[n - 1]
        if prov is Provisional.COPY_CONSTANT:
            vals[n] = prev
        elif prov is Provisional.FORWARD_EULER:
            vals[n] = prev * (1 + hn * z)
        elif prov is Provisional.BACKWARD_EULER:
            vals[n] = prev / (1 - hn * z)
        elif prov is Provisional.IMEX_EULER:
            vals[n] = prev * (1 + hn * le) / (1 - hn * li)
        elif prov is Provisional.IMPLICIT_PART_EULER:
            vals[n] = prev / (1 - hn * li)
        else:
            vals[n] = prev * (1 + 0.5 * hn * z) / (1 - 0.5 * hn * z)

    def one_sweep(old):
        quad = np.tensordot(rule.weights, z * old[rule.node_boundary], axes=1)
        new = np.empty_like(old)
        new[0] = old[0]
        for n in range(1, N + 1):
            hn, left = hs[n - 1], new[n - 1]
            if kind is SweepKind.PICARD:
                new[n] = left + quad[n - 1]
            elif kind is SweepKind.EXPLICIT_SDC:
                new[n] = left + hn * z * (left - old[n - 1]) + quad[n - 1]
            elif kind is SweepKind.IMPLICIT_SDC:
                a = scheme.theta * hn
                new[n] = (left - a * z * old[n] + quad[n - 1]) / (1 - a * z)
            elif kind is SweepKind.SISDC:
                rhs = left - hn * li * old[n] + hn * le * (left - old[n - 1]) + quad[n - 1]
                new[n] = rhs / (1 - hn * li)
            elif kind is SweepKind.MODIFIED_SISDC:
                new[n] = (left - hn * li * old[n] + quad[n - 1]) / (1 - hn * li)
            else:
                half = 0.5 * hn
                rhs = left + half * z * (left - old[n] - old[n - 1]) + quad[n - 1]
                new[n] = rhs / (1 - half * z)
        return new

    if opts.fixed_point_tol is None:
        for _ in range(scheme.corrections):
            vals = one_sweep(vals)
    else:
        for _ in range(opts.max_sweeps):
            new = one_sweep(vals)
            change = np.nanmax(np.abs(new - vals))
            vals = new
            if change < opts.fixed_point_tol:
                break
    return vals[-1]
