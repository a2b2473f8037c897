"""Symbolic derivation and propagation of moment dynamics (TreeRing).

For a polynomial stochastic system b_{t+1} = g(b_t, noise_t) the moments
of b evolve polynomially too: E[b^xi at t+1] expands through g into a sum
of monomial moments at time t.  Independence between groups of variables,
recorded in a dependence graph, lets each required moment factor into a
product over connected components; components whose moments are already
computable in closed form (pure noise powers, accumulated-speed powers,
accumulated-heading trig products) terminate the recursion, and the rest
are added to the tracked set and expanded in turn.

The output is a :class:`MomentDynamics`: a closed set of update
expressions that a runtime evaluator steps forward, so no hand
transcription of moment recursions is involved anywhere downstream.
Doing the transcription mechanically matters: the hand-derived update
for a single mixed moment of the unicycle has four terms, while the full
fourth-order closure needs 125 expressions.

The unicycle (Dubins) instantiation uses the change of variables
c = cos(theta), s = sin(theta), after which the angle-sum identities make
the dynamics polynomial.  Heading trig moments come from the
characteristic function of the accumulated heading (an independent sum),
speed moments from binomial convolution of raw-moment sequences.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Dict, Iterable, List, Mapping, Optional, Sequence, Tuple

import numpy as np

from .distributions import (
    MAX_MOMENT_ORDER,
    MomentTable,
    ScalarMixture,
    char_fn_sum,
    trig_moment_from_char_fn,
)
from .errors import NumericalError, ValidationError

__all__ = [
    "MultiIndex",
    "Poly",
    "DependenceGraph",
    "PolySystem",
    "MomentExpr",
    "MomentDynamics",
    "MomentState",
    "substitute_dynamics",
    "factor_moment",
    "expand",
    "derive_position_moments",
    "dubins_system",
    "DubinsBaseMoments",
    "propagate",
    "dubins_position_tables",
]


# ---------------------------------------------------------------------------
# sparse multivariate monomials and polynomials


@dataclass(frozen=True)
class MultiIndex:
    """Exponent vector of a monomial, stored sparsely.

    Zero exponents are never stored, so equal monomials compare and hash
    equal regardless of construction path.
    """

    exponents: Tuple[Tuple[str, int], ...]

    @staticmethod
    def of(mapping: Mapping[str, int] = (), **kw: int) -> "MultiIndex":
        merged = dict(mapping)
        merged.update(kw)
        items = tuple(sorted((v, e) for v, e in merged.items() if e != 0))
        for _, e in items:
            if e < 0:
                raise ValidationError("negative exponent in multi-index")
        return MultiIndex(items)

    @property
    def degree(self) -> int:
        return sum(e for _, e in self.exponents)

    @property
    def support(self) -> frozenset:
        return frozenset(v for v, _ in self.exponents)

    def get(self, var: str) -> int:
        for v, e in self.exponents:
            if v == var:
                return e
        return 0

    def __mul__(self, other: "MultiIndex") -> "MultiIndex":
        merged = dict(self.exponents)
        for v, e in other.exponents:
            merged[v] = merged.get(v, 0) + e
        return MultiIndex.of(merged)

    def restrict(self, vars_: Iterable[str]) -> "MultiIndex":
        keep = set(vars_)
        return MultiIndex.of({v: e for v, e in self.exponents if v in keep})

    def is_zero(self) -> bool:
        return not self.exponents

    def grlex_key(self, var_order: Sequence[str]) -> tuple:
        """Graded-lexicographic sort key under a fixed variable order."""
        pos = {v: i for i, v in enumerate(var_order)}
        vec = [0] * len(var_order)
        for v, e in self.exponents:
            vec[pos[v]] = e
        return (self.degree, tuple(-x for x in vec))

    def render(self, var_order: Sequence[str]) -> str:
        if not self.exponents:
            return "1"
        pos = {v: i for i, v in enumerate(var_order)}
        parts = []
        for v, e in sorted(self.exponents, key=lambda ve: pos[ve[0]]):
            parts.append(v if e == 1 else f"{v}^{e}")
        return "*".join(parts)


ONE = MultiIndex.of()

# Expansion abort threshold: no sane closure needs monomials anywhere near
# this degree (fourth-order unicycle position moments stay at degree 8).
_MAX_EXPANSION_DEGREE = 64


class Poly:
    """Sparse multivariate polynomial with real coefficients."""

    __slots__ = ("terms",)

    def __init__(self, terms: Optional[Mapping[MultiIndex, float]] = None):
        clean: Dict[MultiIndex, float] = {}
        if terms:
            for mi, coeff in terms.items():
                if coeff != 0.0:
                    clean[mi] = float(coeff)
        self.terms = clean

    @staticmethod
    def variable(name: str) -> "Poly":
        return Poly({MultiIndex.of({name: 1}): 1.0})

    @staticmethod
    def constant(value: float) -> "Poly":
        return Poly({ONE: value})

    def __add__(self, other: "Poly") -> "Poly":
        out = dict(self.terms)
        for mi, coeff in other.terms.items():
            out[mi] = out.get(mi, 0.0) + coeff
        return Poly(out)

    def __sub__(self, other: "Poly") -> "Poly":
        return self + other.scale(-1.0)

    def __mul__(self, other: "Poly") -> "Poly":
        out: Dict[MultiIndex, float] = {}
        for mi1, c1 in self.terms.items():
            for mi2, c2 in other.terms.items():
                key = mi1 * mi2
                out[key] = out.get(key, 0.0) + c1 * c2
        return Poly(out)

    def scale(self, factor: float) -> "Poly":
        return Poly({mi: factor * c for mi, c in self.terms.items()})

    def pow(self, n: int) -> "Poly":
        if n < 0:
            raise ValidationError("negative polynomial power")
        out = Poly.constant(1.0)
        for _ in range(n):
            out = out * self
        return out

    def variables(self) -> frozenset:
        out: set = set()
        for mi in self.terms:
            out |= mi.support
        return frozenset(out)

    def __eq__(self, other) -> bool:
        return isinstance(other, Poly) and self.terms == other.terms

    def __len__(self) -> int:
        return len(self.terms)

    def __repr__(self) -> str:  # debug aid only
        return f"Poly({self.terms!r})"


# ---------------------------------------------------------------------------
# dependence structure


@dataclass(frozen=True)
class DependenceGraph:
    """Undirected graph recording which variables may be dependent."""

    vertices: frozenset
    edges: frozenset

    @staticmethod
    def of(vertices: Iterable[str], edges: Iterable[Tuple[str, str]]) -> "DependenceGraph":
        verts = frozenset(vertices)
        edge_set = set()
        for a, b in edges:
            if a == b:
                raise ValidationError(f"self-loop on {a}")
            if a not in verts or b not in verts:
                raise ValidationError(f"edge ({a},{b}) uses undeclared variable")
            edge_set.add(frozenset((a, b)))
        return DependenceGraph(verts, frozenset(edge_set))

    def neighbors(self, var: str) -> frozenset:
        return frozenset(
            next(iter(e - {var})) for e in self.edges if var in e
        )

    def components(self, support: Iterable[str]) -> List[frozenset]:
        """Connected components of the subgraph induced by `support`."""
        todo = set(support)
        missing = todo - self.vertices
        if missing:
            raise ValidationError(f"variables not in graph: {sorted(missing)}")
        comps = []
        while todo:
            stack = [todo.pop()]
            comp = {stack[0]}
            while stack:
                here = stack.pop()
                for nb in self.neighbors(here):
                    if nb in todo:
                        todo.discard(nb)
                        comp.add(nb)
                        stack.append(nb)
            comps.append(frozenset(comp))
        return comps


def factor_moment(alpha: MultiIndex, graph: DependenceGraph) -> List[MultiIndex]:
    """Split E[b^alpha] into independent factors via the dependence graph.

    Vertices in different components of the induced subgraph are
    independent, so the moment is the product of the per-component
    moments.  Returned indices sum to `alpha`.
    """
    if alpha.is_zero():
        raise ValidationError("cannot factor the zeroth moment")
    comps = graph.components(alpha.support)
    return [alpha.restrict(c) for c in comps]


# ---------------------------------------------------------------------------
# polynomial systems


@dataclass(frozen=True)
class PolySystem:
    """State update polynomials plus the externally-known variable groups.

    `state_vars` fixes the registration order used for rendering and
    sorting.  `known_groups` lists sets of variables whose joint moments
    are computable without recursion (per-step noise, and state variables
    like accumulated speed or heading trig whose law is an independent
    sum); a moment whose support lies inside one group is never expanded.
    """

    state_vars: Tuple[str, ...]
    updates: Mapping[str, Poly]
    known_groups: Tuple[frozenset, ...]

    def __post_init__(self):
        declared = set(self.state_vars) | set(self.noise_vars)
        for var, poly in self.updates.items():
            if var not in self.state_vars:
                raise ValidationError(f"update for non-state variable {var}")
            undeclared = poly.variables() - declared
            if undeclared:
                raise ValidationError(
                    f"update for {var} uses undeclared {sorted(undeclared)}"
                )
        for noise in self.noise_vars:
            if not any(noise in g for g in self.known_groups):
                raise ValidationError(f"noise variable {noise} has no known group")

    @property
    def noise_vars(self) -> Tuple[str, ...]:
        seen = set(self.state_vars)
        out = []
        for var in self.state_vars:
            for other in sorted(self.updates[var].variables()):
                if other not in seen:
                    seen.add(other)
                    out.append(other)
        return tuple(out)

    @property
    def all_vars(self) -> Tuple[str, ...]:
        return self.state_vars + self.noise_vars

    def is_known(self, xi: MultiIndex) -> bool:
        sup = xi.support
        return any(sup <= group for group in self.known_groups)


def substitute_dynamics(xi: MultiIndex, sys: PolySystem) -> Poly:
    """Express b_{t+1}^xi as a polynomial in time-t state and noise."""
    out = Poly.constant(1.0)
    for var, exp in xi.exponents:
        if var not in sys.updates:
            raise ValidationError(f"undeclared state variable {var}")
        out = out * sys.updates[var].pow(exp)
    return out


# ---------------------------------------------------------------------------
# moment dynamics derivation


@dataclass(frozen=True)
class MomentExpr:
    """One update: E[target]_{t+1} = sum of coeff * prod of symbol moments.

    Every symbol is a multi-index over state or noise variables; symbols
    outside the tracked set must lie inside a known group.
    """

    target: MultiIndex
    terms: Tuple[Tuple[float, Tuple[MultiIndex, ...]], ...]

    def symbols(self) -> frozenset:
        out: set = set()
        for _, factors in self.terms:
            out.update(factors)
        return frozenset(out)


class MomentState(dict):
    """Mapping from tracked multi-index to its moment value at one time."""

    def __init__(self, values: Mapping[MultiIndex, float]):
        super().__init__(values)
        if ONE in self and abs(self[ONE] - 1.0) > 1e-9:
            raise ValidationError("zeroth moment must be 1")
        for mi, val in self.items():
            if all(e % 2 == 0 for _, e in mi.exponents) and val < -1e-9:
                raise ValidationError(f"even moment E[{mi.exponents}] negative: {val}")


@dataclass(frozen=True)
class MomentDynamics:
    """Closed moment-update system produced by the expansion recursion."""

    system: PolySystem
    graph: DependenceGraph
    tracked: frozenset
    expressions: Tuple[MomentExpr, ...]

    def expression_for(self, xi: MultiIndex) -> MomentExpr:
        for expr in self.expressions:
            if expr.target == xi:
                return expr
        raise KeyError(xi)

    def unknown_symbols(self) -> frozenset:
        """Symbols in any expression that are neither tracked nor known.

        Empty by construction; exposed so tests can verify closure
        mechanically rather than trusting the recursion.
        """
        bad = set()
        for expr in self.expressions:
            for sym in expr.symbols():
                if sym not in self.tracked and not self.system.is_known(sym):
                    bad.add(sym)
        return frozenset(bad)

    def dump(self) -> str:
        """Render expressions, one line each, in a stable order.

        Targets and terms sort graded-lexicographically under the
        system's registration order, so output is byte-identical across
        runs and suitable for golden-file comparison.
        """
        order = self.system.all_vars
        lines = []
        for expr in sorted(self.expressions,
                           key=lambda e: e.target.grlex_key(order)):
            rendered = []
            def term_key(term):
                total = ONE
                for f in term[1]:
                    total = total * f
                return total.grlex_key(order)
            for coeff, factors in sorted(expr.terms, key=term_key):
                syms = "*".join(
                    f"E[{f.render(order)}]_t"
                    for f in sorted(factors, key=lambda f: f.grlex_key(order))
                ) or "1"
                if coeff == 1.0:
                    rendered.append(f"+ {syms}")
                elif coeff == -1.0:
                    rendered.append(f"- {syms}")
                elif coeff < 0:
                    rendered.append(f"- {-coeff:.12g}*{syms}")
                else:
                    rendered.append(f"+ {coeff:.12g}*{syms}")
            body = " ".join(rendered)
            if body.startswith("+ "):
                body = body[2:]
            lines.append(f"E[{expr.target.render(order)}]_{{t+1}} = {body}")
        return "\n".join(lines) + "\n"


def expand(
    xi: MultiIndex,
    sys: PolySystem,
    graph: DependenceGraph,
    tracked: Optional[set] = None,
    expressions: Optional[Dict[MultiIndex, MomentExpr]] = None,
    max_tracked: int = 500,
) -> Tuple[set, Dict[MultiIndex, MomentExpr]]:
    """Recursively close the moment set needed to update E[b^xi].

    Adds `xi` (and everything it transitively requires) to the tracked
    set, recording one update expression per tracked moment.  Membership
    is checked before recursing, so shared sub-moments are expanded once
    and cycles cannot occur.  `max_tracked` guards against systems whose
    closure does not terminate (degree-increasing dynamics).
    """
    tracked = tracked if tracked is not None else set()
    expressions = expressions if expressions is not None else {}
    if xi in tracked:
        return tracked, expressions
    if xi.degree > _MAX_EXPANSION_DEGREE:
        # Degree-increasing dynamics can double the degree per level, in
        # which case the substitution cost explodes long before the
        # tracked-count guard below would fire.
        raise NumericalError(
            f"moment degree {xi.degree} exceeds cap {_MAX_EXPANSION_DEGREE}; "
            "the system is unlikely to close"
        )
    tracked.add(xi)
    if len(tracked) > max_tracked:
        raise NumericalError(
            f"moment closure exceeded {max_tracked} tracked moments; "
            "the system is unlikely to close"
        )
    poly = substitute_dynamics(xi, sys)
    var_order = sys.all_vars
    terms = []
    for alpha, coeff in poly.terms.items():
        if alpha.is_zero():
            factors: Tuple[MultiIndex, ...] = ()
        else:
            parts = factor_moment(alpha, graph)
            for part in parts:
                if not sys.is_known(part) and part not in tracked:
                    expand(part, sys, graph, tracked, expressions, max_tracked)
            factors = tuple(sorted(parts, key=lambda p: p.grlex_key(var_order)))
        terms.append((coeff, factors))
    terms.sort(key=lambda t: tuple(f.grlex_key(var_order) for f in t[1]))
    expressions[xi] = MomentExpr(xi, tuple(terms))
    return tracked, expressions


def derive_position_moments(
    sys: PolySystem,
    graph: DependenceGraph,
    order: int,
    include_means: bool = False,
) -> MomentDynamics:
    """Close the moment set for all position moments up to `order`.

    Targets are E[x^a y^b] for 2 <= a+b <= order; with `include_means`
    the degree-1 means join the targets (needed when downstream
    consumers build full moment tables).  For the unicycle system the
    default targets close with exactly 11 expressions at order 2 and
    125 at order 4; every expression is exact, no truncation is applied.
    """
    if order < 2:
        raise ValidationError("order must be at least 2")
    lo = 1 if include_means else 2
    tracked: set = set()
    exprs: Dict[MultiIndex, MomentExpr] = {}
    for deg in range(lo, order + 1):
        for a in range(deg + 1):
            xi = MultiIndex.of({"x": a, "y": deg - a})
            expand(xi, sys, graph, tracked, exprs)
    ordered = tuple(
        exprs[key] for key in sorted(exprs, key=lambda k: k.grlex_key(sys.all_vars))
    )
    dyn = MomentDynamics(sys, graph, frozenset(tracked), ordered)
    leftovers = dyn.unknown_symbols()
    if leftovers:
        raise NumericalError(f"closure failed for symbols {leftovers}")
    return dyn


# ---------------------------------------------------------------------------
# unicycle (Dubins) instantiation


def dubins_system() -> Tuple[PolySystem, DependenceGraph]:
    """Polynomial unicycle after the cos/sin change of variables.

    State (x, y, v, c, s) with per-step noises w_v (speed increment) and
    (c_w, s_w) = (cos w_theta, sin w_theta):

        x' = x + v c                 y' = y + v s
        v' = v + w_v
        c' = c c_w - s s_w           s' = s c_w + c s_w

    Position depends on speed and heading history, so x and y connect to
    everything; v is independent of heading; c and s share the
    accumulated heading, as do c_w and s_w the step noise.  Known groups:
    v powers (independent-sum convolution), c/s trig products
    (accumulated-heading characteristic function), and the two noise
    groups.
    """
    x, y, v, c, s = (Poly.variable(n) for n in ("x", "y", "v", "c", "s"))
    w_v, c_w, s_w = (Poly.variable(n) for n in ("w_v", "c_w", "s_w"))
    updates = {
        "x": x + v * c,
        "y": y + v * s,
        "v": v + w_v,
        "c": c * c_w - s * s_w,
        "s": s * c_w + c * s_w,
    }
    sys = PolySystem(
        state_vars=("x", "y", "v", "c", "s"),
        updates=updates,
        known_groups=(
            frozenset({"v"}),
            frozenset({"c", "s"}),
            frozenset({"w_v"}),
            frozenset({"c_w", "s_w"}),
        ),
    )
    graph = DependenceGraph.of(
        vertices=("x", "y", "v", "c", "s", "w_v", "c_w", "s_w"),
        edges=(
            ("x", "y"), ("x", "v"), ("y", "v"),
            ("x", "s"), ("x", "c"), ("y", "s"), ("y", "c"),
            ("c", "s"), ("c_w", "s_w"),
        ),
    )
    return sys, graph


class DubinsBaseMoments:
    """Known-group moment provider for the unicycle.

    Speed moments come from binomially convolving the raw-moment
    sequences of v_0 and the per-step speed noises; heading trig moments
    from the characteristic function of theta_t = theta_0 + sum of
    step noises, evaluated at the integer frequencies a trig product
    expands into.  Noise-group moments read the per-step mixtures
    directly.  Everything is cached, so a propagation pass touches each
    (moment, t) pair once.
    """

    def __init__(
        self,
        initial_state: Tuple[float, float, float, float],
        w_v_steps: Sequence[ScalarMixture],
        w_theta_steps: Sequence[ScalarMixture],
        max_degree: int = 8,
    ):
        if len(w_v_steps) != len(w_theta_steps):
            raise ValidationError("speed and heading noise horizons differ")
        if max_degree > MAX_MOMENT_ORDER:
            raise ValidationError(
                f"max_degree {max_degree} exceeds cap {MAX_MOMENT_ORDER}"
            )
        self.x0, self.y0, self.v0, self.theta0 = map(float, initial_state)
        self.w_v_steps = list(w_v_steps)
        self.w_theta_steps = list(w_theta_steps)
        self.max_degree = max_degree
        self.horizon = len(w_v_steps)
        # v_t raw moment sequences, filled forward on demand.
        self._v_moments: List[List[float]] = [
            [self.v0**k for k in range(max_degree + 1)]
        ]
        self._phi_cache: Dict[Tuple[int, int], complex] = {}
        self._trig_cache: Dict[Tuple[int, int, int], float] = {}
        self._moment_cache: Dict[Tuple[MultiIndex, int], float] = {}

    # -- speed ---------------------------------------------------------

    def _v_moment_row(self, t: int) -> List[float]:
        while len(self._v_moments) <= t:
            tau = len(self._v_moments) - 1
            prev = self._v_moments[-1]
            noise = self.w_v_steps[tau]
            row = []
            for k in range(self.max_degree + 1):
                acc = 0.0
                for j in range(k + 1):
                    acc += math.comb(k, j) * prev[j] * noise.raw_moment(k - j)
                row.append(acc)
            self._v_moments.append(row)
        return self._v_moments[t]

    # -- heading -------------------------------------------------------

    def _phi(self, t: int, k: int) -> complex:
        """Characteristic function of theta_t at integer frequency k."""
        if k < 0:
            return self._phi(t, -k).conjugate()
        key = (t, k)
        if key not in self._phi_cache:
            if t == 0:
                val = complex(math.cos(k * self.theta0), math.sin(k * self.theta0))
            else:
                val = self._phi(t - 1, k) * self.w_theta_steps[t - 1].char_fn(k)
            self._phi_cache[key] = val
        return self._phi_cache[key]

    def _trig(self, t: int, m: int, n: int) -> float:
        key = (t, m, n)
        if key not in self._trig_cache:
            self._trig_cache[key] = trig_moment_from_char_fn(
                lambda freq: self._phi(t, int(round(freq))), m, n
            )
        return self._trig_cache[key]

    # -- dispatch ------------------------------------------------------

    def moment(self, xi: MultiIndex, t: int) -> float:
        """Value of the known moment E[b^xi] at time t (noises: step t)."""
        key = (xi, t)
        hit = self._moment_cache.get(key)
        if hit is not None:
            return hit
        val = self._moment_uncached(xi, t)
        self._moment_cache[key] = val
        return val

    def _moment_uncached(self, xi: MultiIndex, t: int) -> float:
        sup = xi.support
        if sup <= {"v"}:
            k = xi.get("v")
            if k > self.max_degree:
                raise ValidationError(f"speed moment degree {k} above cap")
            return self._v_moment_row(t)[k]
        if sup <= {"c", "s"}:
            return self._trig(t, xi.get("c"), xi.get("s"))
        if t >= self.horizon:
            raise ValidationError(f"no step-{t} noise in a horizon of {self.horizon}")
        if sup <= {"w_v"}:
            return self.w_v_steps[t].raw_moment(xi.get("w_v"))
        if sup <= {"c_w", "s_w"}:
            phi = self.w_theta_steps[t].char_fn
            return trig_moment_from_char_fn(phi, xi.get("c_w"), xi.get("s_w"))
        raise ValidationError(f"no provider for moment over {sorted(sup)}")

    def initial_moments(self, tracked: Iterable[MultiIndex]) -> MomentState:
        """Deterministic initial values of the tracked moments."""
        base = {
            "x": self.x0,
            "y": self.y0,
            "v": self.v0,
            "c": math.cos(self.theta0),
            "s": math.sin(self.theta0),
        }
        values = {}
        for mi in tracked:
            val = 1.0
            for var, exp in mi.exponents:
                val *= base[var] ** exp
            values[mi] = val
        return MomentState(values)


def propagate(
    dyn: MomentDynamics,
    init: MomentState,
    base_moments: DubinsBaseMoments,
    horizon: int,
) -> List[MomentState]:
    """Roll the moment dynamics forward `horizon` steps.

    Returns horizon+1 states; state t+1 evaluates every expression on
    state t plus the known moments at t.  Symbols outside both the
    tracked set and the provider's groups raise immediately rather than
    propagating garbage.
    """
    missing = dyn.tracked - set(init)
    if missing:
        raise ValidationError(f"initial state missing {len(missing)} tracked moments")
    # Compile each expression once: tracked factors become vector indices,
    # base factors stay symbolic for the per-step provider.
    targets = [expr.target for expr in dyn.expressions]
    index = {sym: i for i, sym in enumerate(targets)}
    compiled = []
    for expr in dyn.expressions:
        cterms = []
        for coeff, factors in expr.terms:
            state_ix = [index[f] for f in factors if f in index]
            base_syms = [f for f in factors if f not in index]
            cterms.append((coeff, state_ix, base_syms))
        compiled.append(cterms)

    states = [init]
    cur = [init[sym] for sym in targets]
    for t in range(horizon):
        nxt = []
        for cterms in compiled:
            acc = 0.0
            for coeff, state_ix, base_syms in cterms:
                prod = coeff
                for i in state_ix:
                    prod *= cur[i]
                for sym in base_syms:
                    prod *= base_moments.moment(sym, t)
                acc += prod
            nxt.append(acc)
        cur = nxt
        states.append(MomentState(dict(zip(targets, nxt))))
    return states


def dubins_position_tables(
    initial_state: Tuple[float, float, float, float],
    w_v_steps: Sequence[ScalarMixture],
    w_theta_steps: Sequence[ScalarMixture],
    order: int = 2,
) -> List[MomentTable]:
    """Propagated per-step position moment tables for a unicycle agent.

    Derives (and caches) the closed moment dynamics including means,
    propagates over the noise horizon, and packages each step's
    E[x^a y^b], a+b <= order, as a MomentTable for the bound modules.
    """
    dyn = _cached_dynamics(order)
    base = DubinsBaseMoments(
        initial_state, w_v_steps, w_theta_steps,
        max_degree=max(8, 2 * order),
    )
    init = base.initial_moments(dyn.tracked)
    states = propagate(dyn, init, base, len(w_v_steps))
    tables = []
    for state in states:
        entries = {(0, 0): 1.0}
        for deg in range(1, order + 1):
            for a in range(deg + 1):
                entries[(a, deg - a)] = state[MultiIndex.of({"x": a, "y": deg - a})]
        tables.append(MomentTable(order, entries))
    return tables


_DYNAMICS_CACHE: Dict[int, MomentDynamics] = {}


def _cached_dynamics(order: int) -> MomentDynamics:
    if order not in _DYNAMICS_CACHE:
        sys, graph = dubins_system()
        _DYNAMICS_CACHE[order] = derive_position_moments(
            sys, graph, order, include_means=True
        )
    return _DYNAMICS_CACHE[order]
