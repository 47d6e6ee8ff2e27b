"""Hermitian tensors, contractions, unfolding, and multiple tensor integrals.

A Hermitian tensor of mode dimensions (I_1..I_N) is a 2N-way array with
conjugate symmetry between its first and last N indices.  Row-major grouping
of those two index blocks is an isomorphism onto Hermitian matrices of size
prod(I); contraction over N common indices becomes the matrix product under
that grouping, so tensor integrals are evaluated by unfolding, running the
matrix engine, and folding back.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ValidationError
from .moi import moi_core
from .operators import HermitianOperator

__all__ = [
    "HermitianTensor",
    "TensorEigenSystem",
    "tensor_contract",
    "unfold",
    "fold",
    "tensor_eigendecompose",
    "mti_evaluate",
]

CONJUGATE_SYMMETRY_TOL = 1e-12


@dataclass(frozen=True)
class HermitianTensor:
    """2N-way complex array, conjugate-symmetric across its two index blocks."""

    mode_dims: tuple[int, ...]
    entries: np.ndarray

    def __post_init__(self):
        dims = tuple(int(d) for d in self.mode_dims)
        if not dims or any(d < 1 for d in dims):
            raise ValidationError("mode dimensions must be positive")
        arr = np.array(self.entries, dtype=np.complex128)
        expected = dims + dims
        if arr.shape != expected:
            raise ValidationError(
                f"entries have shape {arr.shape}, expected {expected}"
            )
        n = len(dims)
        swapped = np.conj(np.transpose(arr, axes=tuple(range(n, 2 * n)) + tuple(range(n))))
        asym = float(np.max(np.abs(arr - swapped))) if arr.size else 0.0
        scale = max(1.0, float(np.max(np.abs(arr)))) if arr.size else 1.0
        if asym > CONJUGATE_SYMMETRY_TOL * scale:
            raise ValidationError(
                f"tensor is not conjugate-symmetric: max deviation {asym:.3e}"
            )
        arr.setflags(write=False)
        object.__setattr__(self, "mode_dims", dims)
        object.__setattr__(self, "entries", arr)

    @property
    def flat_dim(self) -> int:
        return math.prod(self.mode_dims)


@dataclass(frozen=True)
class TensorEigenSystem:
    """Eigenvalues with unit-norm eigentensors of shape (I_1..I_N)."""

    eigenvalues: np.ndarray
    eigentensors: tuple[np.ndarray, ...]

    def reconstruct(self, mode_dims: tuple[int, ...]) -> HermitianTensor:
        total = np.zeros(tuple(mode_dims) * 2, dtype=np.complex128)
        for value, tensor in zip(self.eigenvalues, self.eigentensors):
            total += value * np.multiply.outer(tensor, tensor.conj())
        total = (total + np.conj(np.transpose(
            total,
            axes=tuple(range(len(mode_dims), 2 * len(mode_dims)))
            + tuple(range(len(mode_dims))),
        ))) / 2.0
        return HermitianTensor(tuple(mode_dims), total)


def tensor_contract(a, b, k: int) -> np.ndarray:
    """Contract the trailing k axes of ``a`` against the leading k axes of
    ``b`` (for matrices and k = 1 this is the matrix product)."""
    a = np.asarray(a)
    b = np.asarray(b)
    if k < 1 or k > a.ndim or k > b.ndim:
        raise ValidationError(f"cannot contract {k} indices of shapes {a.shape}, {b.shape}")
    if a.shape[a.ndim - k :] != b.shape[:k]:
        raise ValidationError(
            f"trailing {k} dims of {a.shape} do not match leading {k} dims of {b.shape}"
        )
    return np.tensordot(a, b, axes=k)


def unfold(tensor: HermitianTensor) -> HermitianOperator:
    """Row-major grouping of the two index blocks into a Hermitian matrix."""
    p = tensor.flat_dim
    return HermitianOperator(tensor.entries.reshape(p, p))


def unfold_array(entries, mode_dims) -> np.ndarray:
    """Unfold a general (not necessarily Hermitian) 2N-way array."""
    dims = tuple(int(d) for d in mode_dims)
    arr = np.asarray(entries, dtype=np.complex128)
    if arr.shape != dims + dims:
        raise ValidationError(f"array shape {arr.shape} does not match modes {dims}")
    p = math.prod(dims)
    return arr.reshape(p, p)


def fold(matrix, mode_dims) -> HermitianTensor:
    """Inverse of :func:`unfold`; exact (a reshape, no arithmetic)."""
    dims = tuple(int(d) for d in mode_dims)
    if isinstance(matrix, HermitianOperator):
        matrix = matrix.matrix
    arr = np.asarray(matrix, dtype=np.complex128)
    p = math.prod(dims)
    if arr.shape != (p, p):
        raise ValidationError(
            f"matrix shape {arr.shape} does not match mode product {p}"
        )
    return HermitianTensor(dims, arr.reshape(dims + dims))


def fold_array(matrix, mode_dims) -> np.ndarray:
    dims = tuple(int(d) for d in mode_dims)
    arr = np.asarray(matrix, dtype=np.complex128)
    p = math.prod(dims)
    if arr.shape != (p, p):
        raise ValidationError(
            f"matrix shape {arr.shape} does not match mode product {p}"
        )
    return arr.reshape(dims + dims)


def tensor_eigendecompose(tensor: HermitianTensor) -> TensorEigenSystem:
    """Eigen-decomposition through the unfolding isomorphism.

    Eigenvalues ascend; eigenvectors fold back into unit-norm eigentensors.
    The tensor is positive semidefinite exactly when every eigenvalue
    clears -1e-10.
    """
    operator = unfold(tensor)
    decomp = operator.decomposition
    tensors = tuple(
        decomp.basis[:, i].reshape(tensor.mode_dims)
        for i in range(operator.dim)
    )
    return TensorEigenSystem(np.asarray(decomp.eigenvalues), tensors)


def mti_evaluate(tensors, integrand, arguments) -> HermitianTensor | np.ndarray:
    """Multiple tensor integral via unfold -> matrix engine -> fold.

    ``tensors`` are HermitianTensor instances sharing mode dimensions;
    ``arguments`` are 2N-way arrays (or HermitianTensor) of the same modes.
    The N-index contraction between projectors and arguments is the matrix
    product under unfolding, so this equals the matrix evaluation exactly.
    """
    tensors = list(tensors)
    if not tensors:
        raise ValidationError("at least one tensor is required")
    dims = tensors[0].mode_dims
    for i, t in enumerate(tensors):
        if t.mode_dims != dims:
            raise ValidationError(f"tensor {i} has modes {t.mode_dims}, expected {dims}")
    unfolded_args = []
    for i, arg in enumerate(arguments):
        if isinstance(arg, HermitianTensor):
            if arg.mode_dims != dims:
                raise ValidationError(f"argument {i} has mismatched modes")
            unfolded_args.append(unfold_array(arg.entries, dims))
        else:
            unfolded_args.append(unfold_array(arg, dims))
    operators = [unfold(t) for t in tensors]
    value = moi_core(operators, integrand, unfolded_args)
    folded = fold_array(value, dims)
    asym = np.conj(
        np.transpose(
            folded,
            axes=tuple(range(len(dims), 2 * len(dims))) + tuple(range(len(dims))),
        )
    )
    if float(np.max(np.abs(folded - asym))) <= CONJUGATE_SYMMETRY_TOL * max(
        1.0, float(np.max(np.abs(folded)))
    ):
        return HermitianTensor(dims, folded)
    return folded
