"""Multivariate polynomial decompositions and box fits.

Rewrites polynomials as sums of powers of inner products (one block of
C(m+i-1, i) random unit directions per homogeneous degree, solved through the
multinomial expansion) and further into sums of products of homogenized
linear forms.  Also fits black-box functions on boxes by least squares on a
tensor Chebyshev grid.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .errors import DecompositionFailureError, ParameterError, ValidationError

__all__ = [
    "MonomialPolynomial",
    "InnerPowerForm",
    "LinearProductForm",
    "monomial_count",
    "decompose_inner_powers",
    "to_linear_products",
    "fit_polynomial",
]

CONDITION_LIMIT = 1e10
MAX_DIRECTION_ATTEMPTS = 10


def monomial_count(arity: int, degree: int) -> int:
    """Number of degree-``degree`` monomials in ``arity`` variables."""
    return math.comb(arity + degree - 1, degree)


def _degree_exponents(arity: int, degree: int) -> list[tuple[int, ...]]:
    """All exponent tuples of the given total degree, lexicographic order."""
    out = []
    for combo in itertools.combinations_with_replacement(range(arity), degree):
        exp = [0] * arity
        for idx in combo:
            exp[idx] += 1
        out.append(tuple(exp))
    out.sort()
    return out


@dataclass(frozen=True)
class MonomialPolynomial:
    """A real multivariate polynomial stored as (exponent tuple, coefficient)
    pairs with unique exponents."""

    arity: int
    terms: tuple[tuple[tuple[int, ...], float], ...]

    def __post_init__(self):
        if self.arity < 1:
            raise ValidationError("polynomial arity must be positive")
        seen = set()
        cleaned = []
        for exp, coef in self.terms:
            exp = tuple(int(e) for e in exp)
            if len(exp) != self.arity or any(e < 0 for e in exp):
                raise ValidationError(f"bad exponent tuple {exp}")
            if exp in seen:
                raise ValidationError(f"duplicate exponent {exp}")
            seen.add(exp)
            cleaned.append((exp, float(coef)))
        if not cleaned:
            cleaned.append((tuple([0] * self.arity), 0.0))
        object.__setattr__(self, "terms", tuple(cleaned))

    @property
    def degree(self) -> int:
        return max((sum(exp) for exp, c in self.terms if c != 0.0), default=0)

    def coefficient(self, exponent: tuple[int, ...]) -> float:
        for exp, coef in self.terms:
            if exp == exponent:
                return coef
        return 0.0

    def evaluate(self, point: Sequence[float]) -> float:
        x = np.asarray(point, dtype=float)
        total = 0.0
        for exp, coef in self.terms:
            total += coef * float(np.prod(x ** np.asarray(exp)))
        return total

    def evaluate_many(self, points: np.ndarray) -> np.ndarray:
        """Evaluate at an (n, arity) array of points."""
        pts = np.asarray(points, dtype=float)
        total = np.zeros(pts.shape[0])
        for exp, coef in self.terms:
            total += coef * np.prod(pts ** np.asarray(exp), axis=1)
        return total


@dataclass(frozen=True)
class InnerPowerForm:
    """Sum of coefficient-weighted powers of inner products with unit
    directions: sum over terms of c * <x, v>^degree."""

    arity: int
    terms: tuple[tuple[int, float, tuple[float, ...]], ...]

    def __post_init__(self):
        cleaned = []
        for degree, coef, direction in self.terms:
            direction = tuple(float(v) for v in direction)
            if len(direction) != self.arity:
                raise ValidationError("direction length must equal the arity")
            norm = math.sqrt(sum(v * v for v in direction))
            if degree > 0 and abs(norm - 1.0) > 1e-9:
                raise ValidationError("directions must be unit-normalized")
            cleaned.append((int(degree), float(coef), direction))
        object.__setattr__(self, "terms", tuple(cleaned))

    def evaluate(self, point: Sequence[float]) -> float:
        x = np.asarray(point, dtype=float)
        total = 0.0
        for degree, coef, direction in self.terms:
            total += coef * float(np.dot(x, direction)) ** degree
        return total

    def evaluate_many(self, points: np.ndarray) -> np.ndarray:
        pts = np.asarray(points, dtype=float)
        total = np.zeros(pts.shape[0])
        for degree, coef, direction in self.terms:
            total += coef * (pts @ np.asarray(direction)) ** degree
        return total

    def degree_term_counts(self) -> dict[int, int]:
        counts: dict[int, int] = {}
        for degree, _, _ in self.terms:
            counts[degree] = counts.get(degree, 0) + 1
        return counts


@dataclass(frozen=True)
class LinearProductForm:
    """Sum of products of homogenized linear forms.

    Each term is a factor list of vectors in R^(arity+1); evaluation appends
    1 to the point and multiplies the inner products.  The factor counts
    follow the triangular layout: the term at (1-based) position i carries
    exactly i factors.
    """

    arity: int
    terms: tuple[tuple[tuple[float, ...], ...], ...]

    def __post_init__(self):
        for pos, factors in enumerate(self.terms, start=1):
            if len(factors) != pos:
                raise ValidationError(
                    f"term at position {pos} has {len(factors)} factors, expected {pos}"
                )
            for u in factors:
                if len(u) != self.arity + 1:
                    raise ValidationError(
                        f"factor length must be {self.arity + 1}, got {len(u)}"
                    )

    def evaluate(self, point: Sequence[float]) -> float:
        lifted = np.append(np.asarray(point, dtype=float), 1.0)
        total = 0.0
        for factors in self.terms:
            prod = 1.0
            for u in factors:
                prod *= float(np.dot(lifted, u))
            total += prod
        return total

    def evaluate_many(self, points: np.ndarray) -> np.ndarray:
        pts = np.asarray(points, dtype=float)
        lifted = np.hstack([pts, np.ones((pts.shape[0], 1))])
        total = np.zeros(pts.shape[0])
        for factors in self.terms:
            prod = np.ones(pts.shape[0])
            for u in factors:
                prod *= lifted @ np.asarray(u)
            total += prod
        return total


def _probe_grid(arity: int, points_per_axis: int = 10) -> np.ndarray:
    axes = [np.linspace(-1.0, 1.0, points_per_axis)] * arity
    mesh = np.meshgrid(*axes, indexing="ij")
    return np.stack([m.ravel() for m in mesh], axis=1)


def decompose_inner_powers(
    poly: MonomialPolynomial, rng: np.random.Generator
) -> InnerPowerForm:
    """Rewrite a polynomial as a sum of powers of inner products.

    For each degree i in 0..deg(p) the homogeneous part is matched against
    C(m+i-1, i) random unit directions by solving the multinomial-expansion
    linear system; the block count per degree is exactly the monomial count,
    so the system is square.  Ill-conditioned or inaccurate draws are
    resampled up to 10 times before failing with a conditioning report.
    """
    m = poly.arity
    k = poly.degree
    if k > 8 or m > 4:
        raise ParameterError("decomposition supports degree <= 8, arity <= 4")
    probes = _probe_grid(m)
    target = poly.evaluate_many(probes)
    scale = 1.0 + float(np.max(np.abs(target))) if target.size else 1.0
    conditions: list[tuple[int, float]] = []
    for attempt in range(MAX_DIRECTION_ATTEMPTS):
        terms: list[tuple[int, float, tuple[float, ...]]] = []
        conditions = []
        ok = True
        for degree in range(k + 1):
            exponents = _degree_exponents(m, degree)
            count = len(exponents)
            coeffs = np.array([poly.coefficient(exp) for exp in exponents])
            if degree == 0:
                direction = tuple(1.0 if i == 0 else 0.0 for i in range(m))
                terms.append((0, float(coeffs[0]), direction))
                conditions.append((0, 1.0))
                continue
            gauss = rng.standard_normal((count, m))
            norms = np.linalg.norm(gauss, axis=1)
            directions = gauss / norms[:, None]
            system = np.empty((count, count))
            for row, exp in enumerate(exponents):
                multi = math.factorial(degree)
                for e in exp:
                    multi //= math.factorial(e)
                system[row] = multi * np.prod(directions ** np.asarray(exp), axis=1)
            condition = float(np.linalg.cond(system))
            conditions.append((degree, condition))
            if not np.isfinite(condition) or condition > CONDITION_LIMIT:
                ok = False
                break
            solution = np.linalg.solve(system, coeffs)
            for c, v in zip(solution, directions):
                terms.append((degree, float(c), tuple(float(t) for t in v)))
        if not ok:
            continue
        form = InnerPowerForm(m, tuple(terms))
        residual = float(np.max(np.abs(form.evaluate_many(probes) - target)))
        if residual <= 1e-8 * scale:
            return form
    report = ", ".join(f"degree {d}: cond {c:.3e}" for d, c in conditions)
    raise DecompositionFailureError(
        f"no acceptable direction system after {MAX_DIRECTION_ATTEMPTS} attempts ({report})"
    )


def to_linear_products(form: InnerPowerForm) -> LinearProductForm:
    """Rewrite each power term as one product of homogenized linear factors.

    A degree-d term at position i becomes <x', [c v, 0]> <x', [v, 0]>^(d-1)
    padded with constant-one factors up to i factors total.  Terms are sorted
    by degree; zero terms are inserted where a degree would otherwise exceed
    its position, keeping the triangular factor layout intact.
    """
    m = form.arity
    one = tuple([0.0] * m + [1.0])
    zero_vec = tuple([0.0] * m + [0.0])

    ordered = sorted(enumerate(form.terms), key=lambda kv: (kv[1][0], kv[0]))
    product_terms: list[tuple[tuple[float, ...], ...]] = []
    position = 1
    for _, (degree, coef, direction) in ordered:
        while position < max(degree, 1):
            product_terms.append((zero_vec,) + (one,) * (position - 1))
            position += 1
        if degree == 0:
            factors = (tuple([0.0] * m + [coef]),) + (one,) * (position - 1)
        else:
            lead = tuple([coef * v for v in direction] + [0.0])
            body = tuple([v for v in direction] + [0.0])
            factors = (lead,) + (body,) * (degree - 1) + (one,) * (position - degree)
        product_terms.append(factors)
        position += 1
    return LinearProductForm(m, tuple(product_terms))


def _chebyshev_nodes(count: int) -> np.ndarray:
    i = np.arange(count)
    return np.cos((2 * i + 1) * math.pi / (2 * count))


def fit_polynomial(
    f: Callable,
    degree: int,
    arity: int,
    box: Sequence[tuple[float, float]],
    probe_seed: int = 20260315,
) -> tuple[MonomialPolynomial, dict]:
    """Least-squares polynomial fit of a black-box function on a box.

    Fits total-degree monomials on a tensor Chebyshev grid (in normalized
    coordinates for conditioning, expanded back exactly), then measures the
    sup error on an independent uniform sample of 10^3 points.  The error is
    reported, never raised.
    """
    if degree > 8 or arity > 3:
        raise ParameterError("fit supports degree <= 8, arity <= 3")
    box = [(float(lo), float(hi)) for lo, hi in box]
    if len(box) != arity or any(hi <= lo for lo, hi in box):
        raise ValidationError("box must give arity-many (lo, hi) pairs with lo < hi")
    centers = np.array([(lo + hi) / 2.0 for lo, hi in box])
    scales = np.array([(hi - lo) / 2.0 for lo, hi in box])

    nodes = _chebyshev_nodes(degree + 2)
    mesh = np.meshgrid(*([nodes] * arity), indexing="ij")
    t_points = np.stack([g.ravel() for g in mesh], axis=1)
    x_points = centers + scales * t_points
    samples = np.array([f(*pt) for pt in x_points], dtype=float)

    exponents: list[tuple[int, ...]] = []
    for total in range(degree + 1):
        exponents.extend(_degree_exponents(arity, total))
    design = np.stack(
        [np.prod(t_points ** np.asarray(exp), axis=1) for exp in exponents], axis=1
    )
    coefs, *_ = np.linalg.lstsq(design, samples, rcond=None)

    # expand prod_i ((x_i - c_i) / s_i)^a_i back to monomials in x
    accum: dict[tuple[int, ...], float] = {}
    for exp, coef in zip(exponents, coefs):
        if coef == 0.0:
            continue
        partial = {tuple([0] * arity): float(coef)}
        for axis, power in enumerate(exp):
            if power == 0:
                continue
            expanded: dict[tuple[int, ...], float] = {}
            s_inv = 1.0 / scales[axis]
            for beta in range(power + 1):
                factor = (
                    math.comb(power, beta)
                    * ((-centers[axis]) ** (power - beta))
                    * s_inv**power
                )
                for key, val in partial.items():
                    new_key = list(key)
                    new_key[axis] += beta
                    new_key = tuple(new_key)
                    expanded[new_key] = expanded.get(new_key, 0.0) + val * factor
            partial = expanded
        for key, val in partial.items():
            accum[key] = accum.get(key, 0.0) + val
    fitted = MonomialPolynomial(
        arity, tuple(sorted((k, v) for k, v in accum.items()))
    )

    probe_rng = np.random.default_rng(probe_seed)
    lows = np.array([lo for lo, _ in box])
    highs = np.array([hi for _, hi in box])
    probes = probe_rng.uniform(lows, highs, size=(1000, arity))
    truth = np.array([f(*pt) for pt in probes], dtype=float)
    sup_error = float(np.max(np.abs(fitted.evaluate_many(probes) - truth)))
    report = {
        "sup_error": sup_error,
        "degree": degree,
        "grid_points": int(t_points.shape[0]),
        "probe_points": 1000,
    }
    return fitted, report
