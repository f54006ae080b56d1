"""Quadrature nodes on [0, 1], Lagrange basis machinery and subinterval weights.

A rule with ``M`` nodes splits the unit interval into ``N`` subintervals whose
boundaries are ``{0} U nodes U {1}``.  ``N`` is therefore ``M - 1``, ``M`` or
``M + 1`` depending on how many endpoints belong to the node set.  Row ``n`` of
the weight matrix integrates every Lagrange basis polynomial over subinterval
``n``, so ``h * weights @ f(nodes)`` integrates the interpolant of ``f`` over
each scaled subinterval.

Node indices are zero-based throughout.
"""
from __future__ import annotations

import enum
import functools
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigurationError

_NEWTON_MAX_ITER = 100
_GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


class NodeFamily(enum.Enum):
    UNIFORM = "uniform"
    CHEBYSHEV = "chebyshev"
    GAUSS_LEGENDRE = "legendre"
    GAUSS_RADAU_IIA = "radau"
    GAUSS_LOBATTO = "lobatto"
    CUSTOM = "custom"

    @classmethod
    def parse(cls, name: "str | NodeFamily") -> "NodeFamily":
        if isinstance(name, cls):
            return name
        key = str(name).strip().lower().replace("_", "-")
        aliases = {
            "gauss-legendre": "legendre",
            "gauss-radau": "radau",
            "radau-iia": "radau",
            "gauss-lobatto": "lobatto",
            "equispaced": "uniform",
        }
        key = aliases.get(key, key)
        for member in cls:
            if member.value == key:
                return member
        valid = ", ".join(m.value for m in cls if m is not cls.CUSTOM)
        raise ConfigurationError(f"unknown node family {name!r}; valid families: {valid}")


NAMED_FAMILIES = tuple(f for f in NodeFamily if f is not NodeFamily.CUSTOM)


# ---------------------------------------------------------------------------
# Orthogonal polynomial helpers


def legendre_with_derivatives(n: int, s):
    """Return ``(P_n, P_n', P_n'')`` at ``s`` via the three-term recurrence."""
    s = np.asarray(s, dtype=float)
    p_prev, p = np.ones_like(s), s.copy()
    d_prev, d = np.zeros_like(s), np.ones_like(s)
    dd_prev, dd = np.zeros_like(s), np.zeros_like(s)
    if n == 0:
        return p_prev, d_prev, dd_prev
    for k in range(1, n):
        p_next = ((2 * k + 1) * s * p - k * p_prev) / (k + 1)
        d_next = d_prev + (2 * k + 1) * p
        dd_next = dd_prev + (2 * k + 1) * d
        p_prev, p = p, p_next
        d_prev, d = d, d_next
        dd_prev, dd = dd, dd_next
    return p, d, dd


def _newton_roots(func, guesses, deflate=()):
    """Polish ``guesses`` to roots of ``func`` (returns value, derivative).

    Roots listed in ``deflate`` are divided out analytically so that the
    iteration cannot wander onto them.
    """
    roots = []
    for x in guesses:
        for _ in range(_NEWTON_MAX_ITER):
            val, der = func(x)
            denom = der - val * sum(1.0 / (x - r) for r in deflate)
            step = val / denom
            x -= step
            if abs(step) <= 2e-16 * max(1.0, abs(x)):
                break
        else:
            raise ConfigurationError("node computation did not converge")
        roots.append(x)
    return np.array(sorted(roots))


def gauss_legendre_nodes(M: int) -> np.ndarray:
    """Roots of the degree-``M`` Legendre polynomial on [-1, 1]."""
    guesses = [math.cos(math.pi * (4 * k - 1) / (4 * M + 2)) for k in range(1, M + 1)]

    def cond(x):
        p, d, _ = legendre_with_derivatives(M, x)
        return float(p), float(d)

    return _newton_roots(cond, guesses)


def _radau_iia_nodes(M: int) -> np.ndarray:
    # Zeros of P_M - P_{M-1}; s = 1 is one of them and is deflated.
    guesses = [math.cos(2.0 * math.pi * k / (2 * M - 1)) for k in range(1, M)]

    def cond(x):
        p, d, _ = legendre_with_derivatives(M, x)
        q, e, _ = legendre_with_derivatives(M - 1, x)
        return float(p - q), float(d - e)

    interior = _newton_roots(cond, guesses, deflate=(1.0,))
    return np.append(interior, 1.0)


def _lobatto_nodes(M: int) -> np.ndarray:
    guesses = [math.cos(math.pi * k / (M - 1)) for k in range(1, M - 1)]

    def cond(x):
        _, d, dd = legendre_with_derivatives(M - 1, x)
        return float(d), float(dd)

    interior = _newton_roots(cond, guesses) if M > 2 else np.array([])
    return np.concatenate(([-1.0], interior, [1.0]))


def make_nodes(family, M: int) -> np.ndarray:
    """Nodes of ``family`` with ``M`` points, mapped to [0, 1] in increasing order."""
    family = NodeFamily.parse(family)
    if family is NodeFamily.CUSTOM:
        raise ConfigurationError("custom nodes are built with rule_from_nodes")
    M = int(M)
    min_m = 1 if family in (NodeFamily.UNIFORM, NodeFamily.GAUSS_LEGENDRE) else 2
    if M < min_m:
        raise ConfigurationError(f"{family.value} nodes need M >= {min_m}, got M={M}")

    if family is NodeFamily.UNIFORM:
        return np.array([0.5]) if M == 1 else np.linspace(0.0, 1.0, M)
    if family is NodeFamily.CHEBYSHEV:
        k = np.arange(1, M + 1)
        return 0.5 * (1.0 - np.cos((2 * k - 1) * np.pi / (2 * M)))
    if family is NodeFamily.GAUSS_LEGENDRE:
        s = gauss_legendre_nodes(M)
    elif family is NodeFamily.GAUSS_RADAU_IIA:
        s = _radau_iia_nodes(M)
    else:
        s = _lobatto_nodes(M)
    x = 0.5 * (s + 1.0)
    # Exact endpoints and exact mirror symmetry where the family has it.
    if family is not NodeFamily.GAUSS_RADAU_IIA:
        x = 0.5 * (x + (1.0 - x[::-1]))
    if family is NodeFamily.GAUSS_LOBATTO:
        x[0], x[-1] = 0.0, 1.0
    elif family is NodeFamily.GAUSS_RADAU_IIA:
        x[-1] = 1.0
    return x


def _gauss_rule_01(n: int):
    """Gauss-Legendre points and weights on [0, 1]."""
    s = gauss_legendre_nodes(n)
    _, d, _ = legendre_with_derivatives(n, s)
    w = 2.0 / ((1.0 - s**2) * d**2)
    return 0.5 * (s + 1.0), 0.5 * w


# ---------------------------------------------------------------------------
# Lagrange basis


def lagrange_denominators(nodes) -> np.ndarray:
    nodes = np.asarray(nodes, dtype=float)
    diff = nodes[:, None] - nodes[None, :]
    np.fill_diagonal(diff, 1.0)
    return np.prod(diff, axis=1)


def lagrange_basis(nodes, x, denominators=None) -> np.ndarray:
    """Matrix ``L[i, m] = l_m(x_i)`` for the Lagrange basis on ``nodes``."""
    nodes = np.asarray(nodes, dtype=float)
    if denominators is None:
        denominators = lagrange_denominators(nodes)
    x = np.atleast_1d(np.asarray(x, dtype=float))
    diff = x[:, None] - nodes[None, :]
    out = np.empty((x.size, nodes.size))
    for m in range(nodes.size):
        factors = np.delete(diff, m, axis=1)
        out[:, m] = np.prod(factors, axis=1) / denominators[m]
    return out


def _integrate_basis(nodes, denominators, a, b, aux) -> np.ndarray:
    """Exact integrals of every basis polynomial over [a, b]."""
    xq, wq = aux
    pts = a + (b - a) * xq
    return (b - a) * (wq @ lagrange_basis(nodes, pts, denominators))


# ---------------------------------------------------------------------------
# Rules


@dataclass(frozen=True)
class QuadratureRule:
    family: NodeFamily
    nodes: np.ndarray
    boundaries: np.ndarray
    weights: np.ndarray
    denominators: np.ndarray
    node_boundary: np.ndarray = field(repr=False)

    @property
    def M(self) -> int:
        return self.nodes.size

    @property
    def N(self) -> int:
        return self.boundaries.size - 1

    @property
    def has_left(self) -> bool:
        return self.nodes[0] == 0.0

    @property
    def has_right(self) -> bool:
        return self.nodes[-1] == 1.0

    @property
    def fractions(self) -> np.ndarray:
        """Subinterval lengths ``xi^R_n - xi^R_{n-1}`` on the unit interval."""
        return np.diff(self.boundaries)

    @property
    def full_weights(self) -> np.ndarray:
        """Weights of the rule over the whole interval [0, 1]."""
        return self.weights.sum(axis=0)

    @property
    def label(self) -> str:
        return f"{self.family.value}-{self.M}"

    def basis(self, x) -> np.ndarray:
        return lagrange_basis(self.nodes, x, self.denominators)


def _aux_rule(M: int):
    return _gauss_rule_01(math.ceil(M / 2) + 2)


def _build_rule(family: NodeFamily, nodes: np.ndarray) -> QuadratureRule:
    nodes = np.asarray(nodes, dtype=float)
    boundaries = nodes.copy()
    if nodes[0] != 0.0:
        boundaries = np.concatenate(([0.0], boundaries))
    if nodes[-1] != 1.0:
        boundaries = np.concatenate((boundaries, [1.0]))
    offset = 0 if nodes[0] == 0.0 else 1
    node_boundary = np.arange(nodes.size) + offset

    denominators = lagrange_denominators(nodes)
    aux = _aux_rule(nodes.size)
    weights = np.array(
        [
            _integrate_basis(nodes, denominators, a, b, aux)
            for a, b in zip(boundaries[:-1], boundaries[1:])
        ]
    )
    for arr in (nodes, boundaries, weights, denominators, node_boundary):
        arr.setflags(write=False)
    return QuadratureRule(family, nodes, boundaries, weights, denominators, node_boundary)


def make_rule(family, M: int) -> QuadratureRule:
    return _make_rule_cached(NodeFamily.parse(family), int(M))


@functools.lru_cache(maxsize=None)
def _make_rule_cached(family: NodeFamily, M: int) -> QuadratureRule:
    return _build_rule(family, make_nodes(family, M))


def rule_from_nodes(nodes) -> QuadratureRule:
    """Rule on user-supplied nodes (strictly increasing, inside [0, 1])."""
    nodes = np.asarray(nodes, dtype=float).ravel()
    if nodes.size < 1:
        raise ConfigurationError("at least one node is required")
    if nodes[0] < 0.0 or nodes[-1] > 1.0 or np.any(np.diff(nodes) <= 0.0):
        raise ConfigurationError("custom nodes must be strictly increasing within [0, 1]")
    return _build_rule(NodeFamily.CUSTOM, nodes)


def eval_lagrange(rule: QuadratureRule, m: int, x):
    """Value of the basis polynomial attached to node ``m`` (zero-based) at ``x``."""
    if not 0 <= m < rule.M:
        raise IndexError(f"node index {m} outside 0..{rule.M - 1}")
    vals = rule.basis(x)[:, m]
    return vals[0] if np.ndim(x) == 0 else vals


def _golden_max(func, a, b, tol=1e-13):
    """Maximise a unimodal ``func`` on [a, b] by golden-section search."""
    c, d = b - _GOLDEN * (b - a), a + _GOLDEN * (b - a)
    fc, fd = func(c), func(d)
    while b - a > tol:
        if fc > fd:
            b, d, fd = d, c, fc
            c = b - _GOLDEN * (b - a)
            fc = func(c)
        else:
            a, c, fc = c, d, fd
            d = a + _GOLDEN * (b - a)
            fd = func(d)
    return max(fc, fd, func(a), func(b))


def lebesgue_max(rule: QuadratureRule, samples: int = 2048, refine: bool = True) -> float:
    """Largest value of ``|l_m(x)|`` over all basis polynomials and x in [0, 1].

    The maximum is located on ``samples`` equispaced points and, with
    ``refine``, polished by golden-section search around the best sample.
    ``samples=1000, refine=False`` is the plain grid maximum used for the
    published table of these values.
    """
    xs = np.linspace(0.0, 1.0, samples)
    vals = np.abs(rule.basis(xs))
    best = float(vals.max())
    if not refine:
        return best
    for m in range(rule.M):
        i = int(np.argmax(vals[:, m]))
        lo, hi = xs[max(i - 1, 0)], xs[min(i + 1, samples - 1)]
        others = np.delete(rule.nodes, m)
        c = rule.denominators[m]

        def g(x, others=others, c=c):
            return abs(math.prod(x - others) / c)

        best = max(best, _golden_max(g, lo, hi))
    return best


def wn_constants(rule: QuadratureRule) -> np.ndarray:
    """Integral of ``sum_m |l_m|`` over every subinterval."""
    aux = _aux_rule(rule.M)
    out = np.zeros(rule.N)
    for n, (a, b) in enumerate(zip(rule.boundaries[:-1], rule.boundaries[1:])):
        # l_m changes sign only at the other nodes.
        cuts = [x for x in rule.nodes if a < x < b]
        edges = [a, *cuts, b]
        for lo, hi in zip(edges[:-1], edges[1:]):
            out[n] += np.abs(_integrate_basis(rule.nodes, rule.denominators, lo, hi, aux)).sum()
    return out


def quadrature_order_cap(rule: QuadratureRule) -> int:
    """Order of the full-interval rule: polynomial degree integrated exactly, plus one."""
    w = rule.full_weights
    k = 0
    while k < 4 * rule.M:
        exact = 1.0 / (k + 1)
        if abs(w @ rule.nodes**k - exact) > 1e-11:
            break
        k += 1
    return k
