"""Multiple-operator-integral engine.

Evaluates weighted spectral sums of the form

    sum over eigenvalue tuples of  psi(l_1..l_m) P_1 X_1 P_2 ... X_{m-1} P_m

in rotated coordinates: with each operator diagonalized as U diag(l) U*, the
arguments rotate to Y_j = U_j* X_j U_{j+1} and the whole sum collapses to a
single tensor contraction of the integrand grid against the Y matrices.
Also certifies the algebraic, norm, perturbation, and continuity identities
the evaluator is expected to satisfy.
"""

from __future__ import annotations

import string
import time
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import (
    CapabilityError,
    FunctionDomainError,
    ParameterError,
    ValidationError,
)
from .integrands import (
    MultivariateFunction,
    ScalarFunction,
    SeparableIntegrand,
    divided_difference_integrand,
    projective_norm_bound,
    sup_norm_on_grid,
)
from .operators import (
    AnyOperator,
    SpectralDecomposition,
    operator_norm,
    schatten_norm,
)

__all__ = [
    "MoiRequest",
    "MoiResult",
    "moi_evaluate",
    "moi_core",
    "moi_linear_combination_check",
    "moi_split_evaluate",
    "moi_partition_evaluate",
    "moi_norm_bound",
    "perturbation_residual",
    "continuity_modulus",
]


def _as_integrand(integrand) -> MultivariateFunction:
    if isinstance(integrand, SeparableIntegrand):
        return integrand.as_multivariate()
    if isinstance(integrand, MultivariateFunction):
        return integrand
    raise ValidationError(
        "integrand must be a MultivariateFunction or SeparableIntegrand"
    )


@dataclass(frozen=True)
class MoiRequest:
    """An evaluation task: m decomposed operators, an arity-m integrand, and
    m-1 argument matrices threaded between the spectral projectors."""

    operators: tuple[AnyOperator, ...]
    integrand: MultivariateFunction
    arguments: tuple[np.ndarray, ...]

    def __post_init__(self):
        operators = tuple(self.operators)
        integrand = _as_integrand(self.integrand)
        arguments = tuple(np.asarray(x, dtype=np.complex128) for x in self.arguments)
        if len(operators) < 2:
            raise ValidationError("an evaluation needs at least two operators")
        dims = {op.dim for op in operators}
        if len(dims) != 1:
            raise ValidationError(f"operators have mixed dimensions {sorted(dims)}")
        dim = dims.pop()
        if integrand.arity != len(operators):
            raise ValidationError(
                f"integrand arity {integrand.arity} != operator count {len(operators)}"
            )
        if len(arguments) != len(operators) - 1:
            raise ValidationError(
                f"need {len(operators) - 1} argument matrices, got {len(arguments)}"
            )
        for k, arg in enumerate(arguments):
            if arg.shape != (dim, dim):
                raise ValidationError(
                    f"argument {k} has shape {arg.shape}, expected {(dim, dim)}"
                )
        object.__setattr__(self, "operators", operators)
        object.__setattr__(self, "integrand", integrand)
        object.__setattr__(self, "arguments", arguments)

    @property
    def dim(self) -> int:
        return self.operators[0].dim


@dataclass(frozen=True)
class MoiResult:
    value: np.ndarray
    eigen_tuple_count: int
    wall_time: float


def _integrand_grid(
    integrand: MultivariateFunction, decomps: Sequence[SpectralDecomposition]
) -> np.ndarray:
    axes = [np.asarray(d.eigenvalues) for d in decomps]
    grid = integrand.eval_grid(axes)
    finite = np.isfinite(grid)
    if not np.all(finite):
        idx = np.unravel_index(int(np.argmin(finite)), grid.shape)
        tup = tuple(complex(ax[i]) for ax, i in zip(axes, idx))
        raise FunctionDomainError(
            f"integrand is not finite at eigenvalue tuple {tup}"
        )
    return grid


def moi_core(
    operators: Sequence[AnyOperator],
    integrand,
    arguments: Sequence[np.ndarray],
) -> np.ndarray:
    """Spectral-sum evaluation for any operator count m >= 1.

    m = 1 has no arguments and reduces to applying the integrand as a scalar
    function of the single operator.
    """
    integrand = _as_integrand(integrand)
    m = len(operators)
    if integrand.arity != m:
        raise ValidationError(
            f"integrand arity {integrand.arity} != operator count {m}"
        )
    if len(arguments) != m - 1:
        raise ValidationError(f"need {m - 1} arguments, got {len(arguments)}")
    decomps = [op.decomposition for op in operators]
    grid = _integrand_grid(integrand, decomps)
    if m == 1:
        basis = decomps[0].basis
        return (basis * grid) @ basis.conj().T
    bases = [d.basis for d in decomps]
    rotated = [
        bases[j].conj().T @ np.asarray(arguments[j], dtype=np.complex128) @ bases[j + 1]
        for j in range(m - 1)
    ]
    letters = string.ascii_lowercase[:m]
    spec = ",".join([letters] + [letters[j : j + 2] for j in range(m - 1)])
    spec += "->" + letters[0] + letters[-1]
    core = np.einsum(spec, grid, *rotated)
    return bases[0] @ core @ bases[-1].conj().T


def moi_evaluate(request: MoiRequest) -> MoiResult:
    """Evaluate the request; the result matches the direct projector-product
    sum to the engine's working precision."""
    start = time.perf_counter()
    value = moi_core(request.operators, request.integrand, request.arguments)
    elapsed = time.perf_counter() - start
    count = 1
    for op in request.operators:
        count *= op.dim
    return MoiResult(value=value, eigen_tuple_count=count, wall_time=elapsed)


def moi_linear_combination_check(
    phi,
    psi,
    alpha,
    beta,
    operators: Sequence[AnyOperator],
    arguments: Sequence[np.ndarray],
) -> float:
    """Residual of linearity:  || T_{a*phi + b*psi} - (a T_phi + b T_psi) ||."""
    phi = _as_integrand(phi)
    psi = _as_integrand(psi)
    if phi.arity != psi.arity:
        raise ValidationError("integrand arities differ")
    if phi.separable is not None and psi.separable is not None:
        combined = phi.separable.scaled(alpha).plus(psi.separable.scaled(beta))
        combo = combined.as_multivariate()
    else:
        combo = MultivariateFunction(
            phi.arity,
            lambda pt, _p=phi, _q=psi, _a=alpha, _b=beta: _a * _p.evaluate(pt)
            + _b * _q.evaluate(pt),
        )
    lhs = moi_core(operators, combo, arguments)
    rhs = alpha * moi_core(operators, phi, arguments) + beta * moi_core(
        operators, psi, arguments
    )
    return operator_norm(lhs - rhs)


def moi_split_evaluate(
    psi_left: SeparableIntegrand,
    psi_right: SeparableIntegrand,
    operators: Sequence[AnyOperator],
    arguments: Sequence[np.ndarray],
) -> np.ndarray:
    """Factored evaluation of a block-product integrand.

    For psi_left of arity k and psi_right of arity m-k, returns
    ``T_left(X_1..X_{k-1}) X_k T_right(X_{k+1}..X_{m-1})``, which equals the
    full evaluation of their block product.
    """
    k = psi_left.arity
    m = len(operators)
    if not 1 <= k <= m - 1:
        raise ParameterError(f"split point {k} must lie in 1..{m - 1}")
    if psi_right.arity != m - k:
        raise ValidationError(
            f"right integrand arity {psi_right.arity} != {m - k}"
        )
    left = moi_core(operators[:k], psi_left, arguments[: k - 1])
    right = moi_core(operators[k:], psi_right, arguments[k:])
    return left @ np.asarray(arguments[k - 1], dtype=np.complex128) @ right


def moi_partition_evaluate(
    segment_integrands: Sequence[SeparableIntegrand],
    segment_lengths: Sequence[int],
    operators: Sequence[AnyOperator],
    arguments: Sequence[np.ndarray],
) -> np.ndarray:
    """Factored evaluation over a contiguous partition of the operator list.

    With the operators split into contiguous non-empty segments and the full
    integrand equal to the product of the per-segment integrands, the result
    is the product of the per-segment evaluations joined by the argument
    matrices at the segment boundaries.
    """
    lengths = [int(s) for s in segment_lengths]
    if len(lengths) != len(segment_integrands) or not lengths:
        raise ValidationError("one integrand per segment is required")
    if any(s < 1 for s in lengths):
        raise ValidationError("every segment must hold at least one operator")
    if sum(lengths) != len(operators):
        raise ValidationError(
            f"segment lengths sum to {sum(lengths)}, expected {len(operators)}"
        )
    for psi, length in zip(segment_integrands, lengths):
        if psi.arity != length:
            raise ValidationError(
                f"segment integrand arity {psi.arity} != segment length {length}"
            )
    result = None
    offset = 0
    for idx, (psi, length) in enumerate(zip(segment_integrands, lengths)):
        ops = operators[offset : offset + length]
        args = arguments[offset : offset + length - 1]
        block = moi_core(ops, psi, args)
        if result is None:
            result = block
        else:
            boundary = np.asarray(arguments[offset - 1], dtype=np.complex128)
            result = result @ boundary @ block
        offset += length
    return result


def moi_norm_bound(
    request: MoiRequest, schatten_p: Sequence[float] | None = None
) -> tuple[float, float]:
    """Certified upper bound and actual norm of an evaluation.

    Operator mode (default): bound = projective surrogate of the integrand on
    the realized spectra times the product of argument spectral norms; actual
    is the spectral norm of the result.

    Schatten mode: argument i is measured in the Schatten p_i norm (p_i >= 1,
    sum of reciprocals at most 1) and the result in the Schatten q norm with
    1/q = sum_i 1/p_i (q = inf when the sum is zero).
    """
    integrand = request.integrand
    if integrand.separable is None:
        raise CapabilityError("a certified bound needs a separable representation")
    spectra = [np.asarray(op.decomposition.eigenvalues) for op in request.operators]
    surrogate = projective_norm_bound(integrand.separable, spectra)
    value = moi_core(request.operators, integrand, request.arguments)
    if schatten_p is None:
        bound = surrogate
        for arg in request.arguments:
            bound *= operator_norm(arg)
        return bound, operator_norm(value)
    exponents = [float(p) for p in schatten_p]
    if len(exponents) != len(request.arguments):
        raise ParameterError("one Schatten exponent per argument is required")
    if any(p < 1 for p in exponents):
        raise ParameterError("Schatten exponents must satisfy p >= 1")
    reciprocal = sum(0.0 if p == np.inf else 1.0 / p for p in exponents)
    if reciprocal > 1.0 + 1e-12:
        raise ParameterError(
            f"sum of reciprocal exponents is {reciprocal:.6f}, must be <= 1"
        )
    q = np.inf if reciprocal == 0.0 else 1.0 / reciprocal
    bound = surrogate
    for arg, p in zip(request.arguments, exponents):
        bound *= schatten_norm(arg, p)
    return bound, schatten_norm(value, q)


def holder_result_exponent(schatten_p: Sequence[float]) -> float:
    """The result exponent q with 1/q = sum of the argument reciprocals."""
    reciprocal = sum(0.0 if p == np.inf else 1.0 / float(p) for p in schatten_p)
    return np.inf if reciprocal == 0.0 else 1.0 / reciprocal


def perturbation_residual(
    f: ScalarFunction,
    operators: Sequence[AnyOperator],
    insert_index: int,
    c_op: AnyOperator,
    d_op: AnyOperator,
    arguments: Sequence[np.ndarray],
) -> float:
    """Residual of the middle-operator replacement identity.

    Swapping one inserted operator C for D inside an order-m divided
    difference evaluation equals one order-(m+1) evaluation with C and D
    adjacent and C - D threaded as the extra argument.  Returns the spectral
    norm of (left side - right side).
    """
    m = len(operators)
    if len(arguments) != m:
        raise ValidationError(f"need {m} arguments, got {len(arguments)}")
    if not 1 <= insert_index <= m + 1:
        raise ParameterError(f"insert index must lie in 1..{m + 1}")
    j = insert_index - 1
    dd_m = divided_difference_integrand(f, m)
    dd_m1 = divided_difference_integrand(f, m + 1)
    with_c = list(operators[:j]) + [c_op] + list(operators[j:])
    with_d = list(operators[:j]) + [d_op] + list(operators[j:])
    lhs = moi_core(with_c, dd_m, arguments) - moi_core(with_d, dd_m, arguments)
    both = list(operators[:j]) + [c_op, d_op] + list(operators[j:])
    gap = c_op.matrix - d_op.matrix
    rhs_args = list(arguments[:j]) + [gap] + list(arguments[j:])
    rhs = moi_core(both, dd_m1, rhs_args)
    return operator_norm(lhs - rhs)


def continuity_modulus(
    f: ScalarFunction,
    order: int,
    operators: Sequence[AnyOperator],
    perturbed: Sequence[AnyOperator],
    arguments: Sequence[np.ndarray],
) -> tuple[float, float]:
    """Measured drift of an evaluation under operator perturbation, with the
    certified modulus-of-continuity bound.

    lhs = || T(perturbed list) - T(base list) || for the order-n divided
    difference integrand; bound = (order-(n+1) surrogate norm over the union
    of both spectra) * sum_i ||A'_i - A_i|| * prod_j ||X_j||.
    """
    if len(perturbed) != len(operators):
        raise ValidationError("operator lists must have equal length")
    if len(operators) != order + 1:
        raise ValidationError(
            f"order {order} needs {order + 1} operators, got {len(operators)}"
        )
    if len(arguments) != order:
        raise ValidationError(f"need {order} arguments")
    dd_n = divided_difference_integrand(f, order)
    lhs_matrix = moi_core(perturbed, dd_n, arguments) - moi_core(
        operators, dd_n, arguments
    )
    lhs = operator_norm(lhs_matrix)

    dd_next = divided_difference_integrand(f, order + 1)
    union = np.concatenate(
        [np.asarray(op.decomposition.eigenvalues) for op in operators]
        + [np.asarray(op.decomposition.eigenvalues) for op in perturbed]
    )
    spectra = [union] * (order + 2)
    if dd_next.separable is not None:
        surrogate = projective_norm_bound(dd_next.separable, spectra)
    else:
        surrogate = sup_norm_on_grid(dd_next, spectra)
    drift = sum(
        operator_norm(b.matrix - a.matrix) for a, b in zip(operators, perturbed)
    )
    argument_product = 1.0
    for arg in arguments:
        argument_product *= operator_norm(arg)
    return lhs, surrogate * drift * argument_product
