"""Scalar integrand functions and their multivariate combinations.

Covers scalar functions with derivative access (polynomials, callables with
supplied derivatives, plain callables with numerical differentiation),
divided differences with confluent-node handling, separable (rank-one-sum)
representations of multivariate integrands, and the computable projective
norm surrogate used by every certified bound in the package.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
import numpy.polynomial.polynomial as npoly

from .errors import CapabilityError, ParameterError, ValidationError

_MACHINE_EPS = float(np.finfo(float).eps)

POLYNOMIAL = "polynomial"
CALLABLE_WITH_DERIVATIVES = "callable_with_derivatives"
CALLABLE_ONLY = "callable_only"

MAX_NUMERIC_DERIVATIVE_ORDER = 3


def _central_difference(fn, x, order: int, h: float):
    if order == 1:
        return (fn(x + h) - fn(x - h)) / (2.0 * h)
    if order == 2:
        return (fn(x + h) - 2.0 * fn(x) + fn(x - h)) / h**2
    # order == 3
    return (fn(x + 2 * h) - 2.0 * fn(x + h) + 2.0 * fn(x - h) - fn(x - 2 * h)) / (
        2.0 * h**3
    )


def _richardson_derivative(fn, x, order: int):
    # Step balances the O(h^2) truncation of the central stencil against the
    # eps / h^order roundoff floor; two extrapolation levels on top.
    h = _MACHINE_EPS ** (1.0 / (order + 2)) * max(1.0, abs(x))
    d0 = _central_difference(fn, x, order, h)
    d1 = _central_difference(fn, x, order, h / 2.0)
    d2 = _central_difference(fn, x, order, h / 4.0)
    r0 = (4.0 * d1 - d0) / 3.0
    r1 = (4.0 * d2 - d1) / 3.0
    return (16.0 * r1 - r0) / 15.0


class ScalarFunction:
    """A scalar function of one variable with declared derivative access.

    Three kinds:

    * ``polynomial`` -- coefficients ascending by degree; derivatives of every
      order are exact.
    * ``callable_with_derivatives`` -- a value function plus derivative
      functions up to some order.
    * ``callable_only`` -- a bare value function; derivatives up to order 3
      come from Richardson-extrapolated central differences, higher orders
      raise :class:`CapabilityError`.
    """

    def __init__(
        self,
        kind: str,
        *,
        coefficients=None,
        value_fn: Callable | None = None,
        derivative_fns: Sequence[Callable] = (),
        domain_note: str = "",
    ):
        self.kind = kind
        self.domain_note = domain_note
        if kind == POLYNOMIAL:
            coeffs = np.atleast_1d(np.asarray(coefficients))
            if coeffs.ndim != 1 or coeffs.size == 0:
                raise ValidationError("polynomial needs a non-empty coefficient list")
            if not np.all(np.isfinite(coeffs)):
                raise ValidationError("polynomial coefficients must be finite")
            self.coefficients = np.array(
                coeffs,
                dtype=np.complex128 if np.iscomplexobj(coeffs) else np.float64,
            )
            self.coefficients.setflags(write=False)
            self.value_fn = None
            self.derivative_fns = ()
        elif kind in (CALLABLE_WITH_DERIVATIVES, CALLABLE_ONLY):
            if value_fn is None:
                raise ValidationError(f"{kind} needs a value function")
            self.coefficients = None
            self.value_fn = value_fn
            self.derivative_fns = tuple(derivative_fns)
            if kind == CALLABLE_ONLY and self.derivative_fns:
                raise ValidationError("callable_only takes no derivative functions")
        else:
            raise ValidationError(f"unknown scalar-function kind {kind!r}")

    # -- constructors ------------------------------------------------------

    @classmethod
    def polynomial(cls, coefficients, domain_note: str = "") -> "ScalarFunction":
        return cls(POLYNOMIAL, coefficients=coefficients, domain_note=domain_note)

    @classmethod
    def monomial(cls, degree: int, coefficient=1.0) -> "ScalarFunction":
        coeffs = np.zeros(degree + 1, dtype=np.result_type(type(coefficient), float))
        coeffs[degree] = coefficient
        return cls.polynomial(coeffs)

    @classmethod
    def constant(cls, value=1.0) -> "ScalarFunction":
        return cls.polynomial([value])

    @classmethod
    def from_callable(
        cls, value_fn, derivatives: Sequence[Callable] = (), domain_note: str = ""
    ) -> "ScalarFunction":
        kind = CALLABLE_WITH_DERIVATIVES if derivatives else CALLABLE_ONLY
        return cls(
            kind,
            value_fn=value_fn,
            derivative_fns=derivatives,
            domain_note=domain_note,
        )

    # -- evaluation --------------------------------------------------------

    @property
    def degree(self) -> int | None:
        if self.kind != POLYNOMIAL:
            return None
        nonzero = np.nonzero(self.coefficients)[0]
        return int(nonzero[-1]) if nonzero.size else 0

    def __call__(self, x):
        if self.kind == POLYNOMIAL:
            return npoly.polyval(x, self.coefficients)
        arr = np.asarray(x)
        if arr.ndim == 0:
            return self.value_fn(arr[()])
        return np.vectorize(self.value_fn, otypes=[np.complex128])(arr)

    @property
    def derivative_order_available(self) -> float:
        if self.kind == POLYNOMIAL:
            return math.inf
        if self.kind == CALLABLE_WITH_DERIVATIVES:
            return len(self.derivative_fns)
        return MAX_NUMERIC_DERIVATIVE_ORDER

    def derivative(self, x, order: int = 1):
        """Value of the ``order``-th derivative at ``x``."""
        if order < 0:
            raise ParameterError("derivative order must be nonnegative")
        if order == 0:
            return self(x)
        if order > self.derivative_order_available:
            raise CapabilityError(
                f"derivative order {order} unavailable for {self.kind} "
                f"(available: {self.derivative_order_available})"
            )
        if self.kind == POLYNOMIAL:
            return npoly.polyval(x, npoly.polyder(self.coefficients, order))
        if self.kind == CALLABLE_WITH_DERIVATIVES:
            return self.derivative_fns[order - 1](x)
        return _richardson_derivative(self.value_fn, x, order)

    def differentiated(self, order: int = 1) -> "ScalarFunction":
        """The derivative as a new function (polynomials only)."""
        if self.kind != POLYNOMIAL:
            raise CapabilityError("symbolic differentiation needs a polynomial")
        return ScalarFunction.polynomial(npoly.polyder(self.coefficients, order))

    def scaled(self, factor) -> "ScalarFunction":
        """The function multiplied by a scalar."""
        if self.kind == POLYNOMIAL:
            return ScalarFunction.polynomial(self.coefficients * factor)
        fn = self.value_fn
        scaled_value = lambda x, _f=fn, _c=factor: _c * _f(x)  # noqa: E731
        scaled_derivs = tuple(
            (lambda x, _g=g, _c=factor: _c * _g(x)) for g in self.derivative_fns
        )
        return ScalarFunction(
            self.kind,
            value_fn=scaled_value,
            derivative_fns=scaled_derivs,
            domain_note=self.domain_note,
        )

    def __repr__(self):
        if self.kind == POLYNOMIAL:
            return f"ScalarFunction.polynomial({list(self.coefficients)})"
        return f"ScalarFunction({self.kind})"


def add_scalar_functions(a: ScalarFunction, b: ScalarFunction) -> ScalarFunction:
    """Pointwise sum; stays a polynomial when both inputs are polynomials."""
    if a.kind == POLYNOMIAL and b.kind == POLYNOMIAL:
        return ScalarFunction.polynomial(
            npoly.polyadd(a.coefficients, b.coefficients)
        )
    available = int(min(a.derivative_order_available, b.derivative_order_available))
    value = lambda x, _a=a, _b=b: _a(x) + _b(x)  # noqa: E731
    derivs = tuple(
        (lambda x, _a=a, _b=b, _o=o: _a.derivative(x, _o) + _b.derivative(x, _o))
        for o in range(1, available + 1)
    )
    return ScalarFunction.from_callable(value, derivs)


# ---------------------------------------------------------------------------
# Divided differences
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class DividedDifferenceSpec:
    """Order-n divided difference of ``f`` at ``order + 1`` nodes.

    Nodes clustered within ``confluence_tolerance`` are merged and evaluated
    through derivatives (the Hermite limit), which is the unique continuous
    extension of the difference-quotient recursion.
    """

    f: ScalarFunction
    order: int
    nodes: tuple
    confluence_tolerance: float | None = None

    def __post_init__(self):
        if self.order < 0:
            raise ValidationError("divided-difference order must be nonnegative")
        nodes = tuple(complex(z) if np.iscomplexobj(np.asarray(self.nodes)) else float(z)
                      for z in self.nodes)
        if len(nodes) != self.order + 1:
            raise ValidationError(
                f"order {self.order} needs {self.order + 1} nodes, got {len(nodes)}"
            )
        object.__setattr__(self, "nodes", nodes)
        if self.confluence_tolerance is not None and not self.confluence_tolerance > 0:
            raise ValidationError("confluence tolerance must be positive")

    @property
    def tolerance(self) -> float:
        if self.confluence_tolerance is not None:
            return self.confluence_tolerance
        magnitude = max((abs(z) for z in self.nodes), default=0.0)
        return 1e-7 * max(1.0, magnitude)


def _cluster_nodes(nodes: Sequence[complex], tol: float) -> list[complex]:
    """Snap tolerance-coincident nodes to their cluster mean.

    Union-find over the pairwise distance graph keeps the result independent
    of the input order; members are sorted before averaging so the snapped
    values are reproducible.
    """
    n = len(nodes)
    parent = list(range(n))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for i in range(n):
        for j in range(i + 1, n):
            if abs(nodes[i] - nodes[j]) <= tol:
                ri, rj = find(i), find(j)
                if ri != rj:
                    parent[rj] = ri
    clusters: dict[int, list[complex]] = {}
    for i in range(n):
        clusters.setdefault(find(i), []).append(nodes[i])
    reps = {
        root: sum(sorted(vals, key=lambda z: (complex(z).real, complex(z).imag)))
        / len(vals)
        for root, vals in clusters.items()
    }
    return [reps[find(i)] for i in range(n)]


def divided_difference(spec: DividedDifferenceSpec):
    """Evaluate the divided difference by the standard recursive table.

    Separated nodes use the difference-quotient recursion; any run of
    coincident nodes of length r+1 contributes ``f^(r)(z) / r!``.  The result
    is symmetric in node order (nodes are sorted internally).
    """
    f = spec.f
    snapped = _cluster_nodes(list(spec.nodes), spec.tolerance)
    ordered = sorted(snapped, key=lambda z: (complex(z).real, complex(z).imag))
    n = len(ordered)
    multiplicity = max(
        len(list(g)) for _, g in itertools.groupby(ordered)
    )
    if multiplicity - 1 > f.derivative_order_available:
        raise CapabilityError(
            f"confluent cluster of size {multiplicity} needs derivative order "
            f"{multiplicity - 1}, available {f.derivative_order_available}"
        )
    table = [f(z) for z in ordered]
    for level in range(1, n):
        nxt = []
        for i in range(n - level):
            lo, hi = ordered[i], ordered[i + level]
            if lo == hi:
                nxt.append(f.derivative(lo, level) / math.factorial(level))
            else:
                nxt.append((table[i + 1] - table[i]) / (hi - lo))
        table = nxt
    return table[0]


# ---------------------------------------------------------------------------
# Multivariate integrands
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SeparableIntegrand:
    """A finite rank-one sum: psi(l_1..l_m) = sum_n prod_i f_{i,n}(l_i)."""

    arity: int
    terms: tuple[tuple[ScalarFunction, ...], ...]

    def __post_init__(self):
        if self.arity < 1:
            raise ValidationError("integrand arity must be positive")
        terms = tuple(tuple(term) for term in self.terms)
        if not terms:
            raise ValidationError("separable integrand needs at least one term")
        for k, term in enumerate(terms):
            if len(term) != self.arity:
                raise ValidationError(
                    f"term {k} has {len(term)} factors, expected {self.arity}"
                )
        object.__setattr__(self, "terms", terms)

    @classmethod
    def constant(cls, arity: int, value=1.0) -> "SeparableIntegrand":
        factors = [ScalarFunction.constant(1.0)] * (arity - 1)
        return cls(arity, ((ScalarFunction.constant(value), *factors),))

    def evaluate(self, point: Sequence) -> complex:
        if len(point) != self.arity:
            raise ValidationError(
                f"point has {len(point)} coordinates, expected {self.arity}"
            )
        total = 0.0 + 0.0j
        for term in self.terms:
            prod = 1.0 + 0.0j
            for fn, x in zip(term, point):
                prod *= fn(x)
            total += prod
        return total

    def eval_grid(self, axes: Sequence[np.ndarray]) -> np.ndarray:
        """Evaluate on the Cartesian product of the axes (broadcast sum of
        outer products; shape = axis lengths)."""
        if len(axes) != self.arity:
            raise ValidationError("axis count must equal the integrand arity")
        axes = [np.asarray(a) for a in axes]
        shape = tuple(a.size for a in axes)
        total = np.zeros(shape, dtype=np.complex128)
        for term in self.terms:
            prod = np.ones(shape, dtype=np.complex128)
            for i, (fn, axis) in enumerate(zip(term, axes)):
                view = [None] * self.arity
                view[i] = slice(None)
                prod = prod * np.asarray(fn(axis), dtype=np.complex128)[tuple(view)]
            total += prod
        return total

    def scaled(self, factor) -> "SeparableIntegrand":
        terms = tuple((term[0].scaled(factor), *term[1:]) for term in self.terms)
        return SeparableIntegrand(self.arity, terms)

    def plus(self, other: "SeparableIntegrand") -> "SeparableIntegrand":
        if other.arity != self.arity:
            raise ValidationError("cannot add integrands of different arity")
        return SeparableIntegrand(self.arity, self.terms + other.terms)

    def as_multivariate(self) -> "MultivariateFunction":
        return MultivariateFunction(self.arity, self.evaluate, separable=self)


@dataclass(frozen=True)
class MultivariateFunction:
    """An arity-m scalar map with an optional separable representation."""

    arity: int
    evaluate: Callable
    separable: SeparableIntegrand | None = None

    def __post_init__(self):
        if self.arity < 1:
            raise ValidationError("arity must be positive")
        if self.separable is not None and self.separable.arity != self.arity:
            raise ValidationError("separable representation has mismatched arity")

    def __call__(self, *point):
        if len(point) == 1 and isinstance(point[0], (tuple, list, np.ndarray)):
            point = tuple(point[0])
        return self.evaluate(point)

    def eval_grid(self, axes: Sequence[np.ndarray]) -> np.ndarray:
        if self.separable is not None:
            return self.separable.eval_grid(axes)
        axes = [np.asarray(a) for a in axes]
        shape = tuple(a.size for a in axes)
        out = np.empty(shape, dtype=np.complex128)
        for idx in np.ndindex(shape):
            out[idx] = self.evaluate(tuple(ax[i] for ax, i in zip(axes, idx)))
        return out

    def check_separable_consistency(self, box: Sequence[tuple], points_per_axis: int = 5):
        """Probe |evaluate - separable| on a grid over ``box``; raises when the
        declared representation disagrees beyond 1e-10 relative."""
        if self.separable is None:
            raise CapabilityError("no separable representation declared")
        axes = [np.linspace(lo, hi, points_per_axis) for lo, hi in box]
        grid_sep = self.separable.eval_grid(axes)
        worst = 0.0
        for idx in np.ndindex(grid_sep.shape):
            point = tuple(ax[i] for ax, i in zip(axes, idx))
            direct = self.evaluate(point)
            err = abs(direct - grid_sep[idx])
            if err > 1e-10 * (1.0 + abs(direct)):
                raise ValidationError(
                    f"separable representation deviates by {err:.3e} at {point}"
                )
            worst = max(worst, err)
        return worst


def integrand_block_product(
    p: SeparableIntegrand, q: SeparableIntegrand
) -> SeparableIntegrand:
    """Join two separable integrands on disjoint variable blocks.

    The result has arity ``p.arity + q.arity`` and evaluates to the pointwise
    product ``p(l_1..l_k) * q(l_{k+1}..l_m)``; its terms are all pairwise
    factor-tuple concatenations.
    """
    terms = tuple(tp + tq for tp in p.terms for tq in q.terms)
    return SeparableIntegrand(p.arity + q.arity, terms)


def multiply_by_slot_variable(
    psi: SeparableIntegrand, slot: int
) -> SeparableIntegrand:
    """The integrand ``l_slot * psi(l_1..l_m)`` (still separable)."""
    if not 0 <= slot < psi.arity:
        raise ParameterError(f"slot {slot} out of range for arity {psi.arity}")
    shift = ScalarFunction.polynomial([0.0, 1.0])
    terms = []
    for term in psi.terms:
        factor = term[slot]
        if factor.kind != POLYNOMIAL:
            raise CapabilityError("slot-variable multiplication needs polynomial factors")
        bumped = ScalarFunction.polynomial(
            npoly.polymul(factor.coefficients, shift.coefficients)
        )
        terms.append(term[:slot] + (bumped,) + term[slot + 1 :])
    return SeparableIntegrand(psi.arity, tuple(terms))


# ---------------------------------------------------------------------------
# Divided-difference integrands
# ---------------------------------------------------------------------------


def exponent_tuples(total: int, slots: int):
    """All nonnegative integer tuples of the given length summing to total."""
    if slots == 1:
        yield (total,)
        return
    for first in range(total + 1):
        for rest in exponent_tuples(total - first, slots - 1):
            yield (first,) + rest


def _polynomial_dd_separable(coefficients: np.ndarray, order: int) -> SeparableIntegrand:
    """Separable representation of a polynomial's order-k divided difference.

    The order-k divided difference of x^p is the complete homogeneous
    symmetric polynomial of degree p-k in the k+1 nodes; expanding it
    monomial by monomial gives an exact rank-one sum with no divisions, so
    evaluation stays stable at clustered nodes.
    """
    slots = order + 1
    terms = []
    for p, c in enumerate(coefficients):
        if c == 0 or p < order:
            continue
        for exponents in exponent_tuples(p - order, slots):
            factors = [ScalarFunction.monomial(exponents[0], c)]
            factors.extend(ScalarFunction.monomial(e) for e in exponents[1:])
            terms.append(tuple(factors))
    if not terms:
        terms.append(tuple(ScalarFunction.constant(0.0) for _ in range(slots)))
    return SeparableIntegrand(slots, tuple(terms))


def divided_difference_integrand(f: ScalarFunction, order: int) -> MultivariateFunction:
    """The arity-(order+1) integrand ``(l_0..l_k) -> f^[k](l_0..l_k)``.

    Polynomials get an exact separable representation (used for grid
    evaluation and certified norm bounds); other kinds fall back to the
    recursive divided-difference table per point.
    """
    if order < 0:
        raise ParameterError("divided-difference order must be nonnegative")
    if f.kind == POLYNOMIAL:
        separable = _polynomial_dd_separable(f.coefficients, order)
        return MultivariateFunction(order + 1, separable.evaluate, separable=separable)

    def evaluate(point, _f=f, _k=order):
        return divided_difference(DividedDifferenceSpec(_f, _k, tuple(point)))

    return MultivariateFunction(order + 1, evaluate)


# ---------------------------------------------------------------------------
# Norm surrogates
# ---------------------------------------------------------------------------


def projective_norm_bound(
    psi: SeparableIntegrand, spectra: Sequence[Sequence]
) -> float:
    """Certified norm surrogate: sum over terms of the per-factor maxima.

    ``sum_n prod_i max_{l in spectra_i} |f_{i,n}(l)|``.  Depends only on the
    given representation, not on the abstract function.
    """
    if len(spectra) != psi.arity:
        raise ValidationError("spectra count must equal the integrand arity")
    axes = [np.asarray(s) for s in spectra]
    for i, axis in enumerate(axes):
        if axis.size == 0:
            raise ValidationError(f"spectrum {i} is empty")
    total = 0.0
    for term in psi.terms:
        prod = 1.0
        for fn, axis in zip(term, axes):
            prod *= float(np.max(np.abs(np.asarray(fn(axis)))))
        total += prod
    return total


def sup_norm_on_grid(psi: MultivariateFunction, spectra: Sequence[Sequence]) -> float:
    """Max of |psi| over the Cartesian product of the spectra."""
    if len(spectra) != psi.arity:
        raise ValidationError("spectra count must equal the integrand arity")
    grid = psi.eval_grid([np.asarray(s) for s in spectra])
    return float(np.max(np.abs(grid)))
