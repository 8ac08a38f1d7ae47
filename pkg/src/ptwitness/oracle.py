"""Brute-force ground truth in truncated Fock space.

Everything here is deliberately literal: explicit density matrices, partial
transposition by tensor-axis swapping, full Hermitian eigendecomposition.  It
exists to certify the moment-level machinery, not to scale.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import reduce
from typing import Iterable, Sequence

import numpy as np
import scipy.sparse.linalg

from .algebra import OperatorPoly
from .errors import CapacityError, ContractError, DimensionError
from .fock import SparseState
from .pt import ModeSet, pt_expectation

DIMENSION_CAP = 4096
ITERATIVE_ABOVE = 1024
NPT_TOL = 1e-9


@dataclass(frozen=True)
class DenseDensity:
    """Density matrix over per-mode cutoffs; mode 0 is the slowest index."""

    dims: tuple[int, ...]
    matrix: np.ndarray

    def __post_init__(self):
        side = int(np.prod(self.dims))
        if self.matrix.shape != (side, side):
            raise DimensionError(f"matrix shape {self.matrix.shape} does not match dims {self.dims}")
        self.matrix.setflags(write=False)

    @property
    def mode_count(self) -> int:
        return len(self.dims)

    def trace(self) -> complex:
        return complex(np.trace(self.matrix))

    def is_hermitian(self, tol: float = 1e-10) -> bool:
        return bool(np.max(np.abs(self.matrix - self.matrix.conj().T), initial=0.0) <= tol)


def _check_dimension(dims: Sequence[int]) -> int:
    side = int(np.prod(dims))
    if side > DIMENSION_CAP:
        raise CapacityError(f"dense dimension {side} exceeds cap {DIMENSION_CAP} (cutoffs {tuple(dims)})")
    return side


def default_cutoffs(state: SparseState) -> tuple[int, ...]:
    return tuple(n + 1 for n in state.max_occupation())


def dense_vector(state: SparseState, cutoffs: Sequence[int]) -> np.ndarray:
    dims = tuple(int(d) for d in cutoffs)
    if len(dims) != state.mode_count:
        raise DimensionError(f"{len(dims)} cutoffs given for {state.mode_count} modes")
    side = _check_dimension(dims)
    vec = np.zeros(side, dtype=complex)
    for ket, amp in state.terms.items():
        for k, (n, d) in enumerate(zip(ket, dims)):
            if n >= d:
                raise CapacityError(f"occupation {n} of mode {k} does not fit cutoff {d}")
        vec[np.ravel_multi_index(ket, dims)] = amp
    return vec


def build_density(state: SparseState, cutoffs: Sequence[int] | None = None) -> DenseDensity:
    """``|psi><psi|`` in the truncated basis; exact since the support is finite."""
    dims = tuple(int(d) for d in (cutoffs if cutoffs is not None else default_cutoffs(state)))
    vec = dense_vector(state, dims)
    rho = np.outer(vec, vec.conj())
    # The outer product is Hermitian only up to rounding; averaging with the
    # adjoint makes it bit-exact, and PT (a permutation of entries) keeps that.
    return DenseDensity(dims, 0.5 * (rho + rho.conj().T))


def mixture(densities: Sequence[DenseDensity], weights: Sequence[float]) -> DenseDensity:
    """Convex combination of densities sharing the same cutoffs."""
    if len(densities) != len(weights) or not densities:
        raise ContractError("need one weight per density")
    w = np.asarray(weights, dtype=float)
    if np.any(w < 0):
        raise ContractError("mixture weights must be nonnegative")
    w = w / w.sum()
    dims = densities[0].dims
    if any(d.dims != dims for d in densities):
        raise DimensionError("all densities in a mixture must share cutoffs")
    return DenseDensity(dims, sum(wi * d.matrix for wi, d in zip(w, densities)))


def partial_transpose(dm: DenseDensity, modes: Iterable[int]) -> DenseDensity:
    """Transpose the tensor factors in ``modes``."""
    n = dm.mode_count
    modes = ModeSet(modes).check(n)
    axes = list(range(2 * n))
    for k in modes:
        axes[k], axes[n + k] = axes[n + k], axes[k]
    tensor = dm.matrix.reshape(dm.dims + dm.dims).transpose(axes)
    return DenseDensity(dm.dims, np.ascontiguousarray(tensor).reshape(dm.matrix.shape))


def min_eigenvalue(matrix: np.ndarray) -> float:
    """Smallest eigenvalue of a Hermitian matrix."""
    side = matrix.shape[0]
    if side > DIMENSION_CAP:
        raise CapacityError(f"matrix dimension {side} exceeds cap {DIMENSION_CAP}")
    if side > ITERATIVE_ABOVE:
        vals = scipy.sparse.linalg.eigsh(matrix, k=1, which="SA", return_eigenvectors=False, tol=1e-13)
        return float(vals[0])
    return float(np.linalg.eigvalsh(matrix)[0])


@dataclass(frozen=True)
class NptReport:
    npt: bool
    min_eig: float
    dimension: int
    method: str


def _support_pt_min_eig(state: SparseState, modes: ModeSet) -> tuple[float, int, int]:
    """Minimum PT eigenvalue of a pure state using only the touched basis vectors.

    ``(|psi><psi|)^PT`` is nonzero only on the kets produced by exchanging the
    transposed occupations between each bra/ket pair, so its spectrum is that
    of the restricted block plus zeros.
    """
    kets = list(state.terms.items())
    entries: dict[tuple[tuple[int, ...], tuple[int, ...]], complex] = {}
    for ki, ai in kets:
        for kj, aj in kets:
            row = tuple(kj[k] if k in modes else ki[k] for k in range(len(ki)))
            col = tuple(ki[k] if k in modes else kj[k] for k in range(len(ki)))
            entries[(row, col)] = entries.get((row, col), 0j) + ai * aj.conjugate()
    support = sorted({r for r, _ in entries} | {c for _, c in entries})
    if len(support) > DIMENSION_CAP:
        raise CapacityError(f"support dimension {len(support)} exceeds cap {DIMENSION_CAP}")
    index = {ket: i for i, ket in enumerate(support)}
    block = np.zeros((len(support), len(support)), dtype=complex)
    for (r, c), v in entries.items():
        block[index[r], index[c]] += v
    full = int(np.prod([n + 1 for n in state.max_occupation()], dtype=object))
    lam = min_eigenvalue(block)
    if len(support) < full:
        lam = min(lam, 0.0)
    return lam, len(support), full


def is_npt(
    target: SparseState | DenseDensity,
    modes: Iterable[int],
    cutoffs: Sequence[int] | None = None,
    method: str = "full",
    tol: float = NPT_TOL,
) -> NptReport:
    """NPT verdict for a state across the cut ``modes | rest``.

    ``method="full"`` builds the truncated density matrix and fails beyond the
    dimension cap.  ``"support"`` (pure states only) diagonalises the exact
    nonzero block of the transposed projector.  ``"auto"`` uses full when it
    fits and support otherwise.
    """
    if method not in ("full", "support", "auto"):
        raise ContractError(f"unknown method {method!r}")
    if isinstance(target, DenseDensity):
        if method == "support":
            raise ContractError("support method needs a pure sparse state")
        pt = partial_transpose(target, modes)
        lam = min_eigenvalue(pt.matrix)
        return NptReport(lam < -tol, lam, pt.matrix.shape[0], "full")

    mode_set = ModeSet(modes).check(target.mode_count)
    dims = tuple(cutoffs) if cutoffs is not None else default_cutoffs(target)
    side = int(np.prod(dims, dtype=object))
    if method == "full" or (method == "auto" and side <= DIMENSION_CAP):
        pt = partial_transpose(build_density(target, dims), mode_set)
        lam = min_eigenvalue(pt.matrix)
        return NptReport(lam < -tol, lam, side, "full")
    lam, used, _ = _support_pt_min_eig(target, mode_set)
    return NptReport(lam < -tol, lam, used, "support")


def _ladder(d: int) -> np.ndarray:
    return np.diag(np.sqrt(np.arange(1, d, dtype=float)), k=1)


def operator_matrix(poly: OperatorPoly, cutoffs: Sequence[int]) -> np.ndarray:
    """Dense matrix of ``poly`` from products of truncated ladder matrices."""
    dims = tuple(int(d) for d in cutoffs)
    if len(dims) != poly.mode_count:
        raise DimensionError(f"{len(dims)} cutoffs given for {poly.mode_count} modes")
    side = _check_dimension(dims)
    ladders = [_ladder(d) for d in dims]
    out = np.zeros((side, side), dtype=complex)
    for powers, coeff in poly.terms.items():
        factors = [
            np.linalg.matrix_power(a.T, s) @ np.linalg.matrix_power(a, t)
            for a, (s, t) in zip(ladders, powers)
        ]
        out += coeff * reduce(np.kron, factors)
    return out


@dataclass(frozen=True)
class CrossCheck:
    rule_value: complex
    matrix_value: complex
    abs_diff: float


def moment_crosscheck(
    state: SparseState,
    poly: OperatorPoly,
    modes: Iterable[int],
    cutoffs: Sequence[int] | None = None,
) -> CrossCheck:
    """Compare the moment rule with ``Tr(poly rho^PT)`` computed densely."""
    modes = ModeSet(modes).check(state.mode_count)
    occ = state.max_occupation()
    dag = [max((p[k][0] for p in poly.terms), default=0) for k in range(poly.mode_count)]
    needed = tuple(o + d + 1 for o, d in zip(occ, dag))
    if cutoffs is None:
        cutoffs = needed
    if len(cutoffs) != state.mode_count:
        raise DimensionError(f"{len(cutoffs)} cutoffs given for {state.mode_count} modes")
    short = [k for k, (c, need) in enumerate(zip(cutoffs, needed)) if c < need]
    if short:
        raise ContractError(f"insufficient cutoff on modes {short}: need at least {[needed[k] for k in short]}")
    rule = pt_expectation(state, poly, modes)
    rho_pt = partial_transpose(build_density(state, cutoffs), modes)
    value = complex(np.trace(operator_matrix(poly, cutoffs) @ rho_pt.matrix))
    return CrossCheck(rule, value, abs(rule - value))
