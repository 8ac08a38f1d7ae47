"""Exact sparse pure states in the multimode number basis.

A state is a dictionary from occupation tuples to complex amplitudes.  Ladder
operators act ket by ket, so every expectation value is computed exactly with
no Fock-space truncation: the support of ``M|psi>`` is finite whenever the
support of ``|psi>`` is.
"""

from __future__ import annotations

import math
from types import MappingProxyType
from typing import Iterable, Mapping, Sequence

from .algebra import BosonMonomial, OperatorPoly, Powers
from .errors import CapacityError, ContractError, DegenerateStateError, DimensionError

MAX_OCC = 64
PRUNE_TOL = 1e-15
NORM_TOL = 1e-12

Ket = tuple[int, ...]


class FockKet(tuple):
    """Occupation numbers, one per mode."""

    def __new__(cls, occupations: Iterable[int]):
        occ = tuple(int(n) for n in occupations)
        for n in occ:
            if n < 0:
                raise ContractError(f"negative occupation in {occ}")
            if n > MAX_OCC:
                raise CapacityError(f"occupation {n} exceeds MAX_OCC={MAX_OCC}")
        return super().__new__(cls, occ)

    @property
    def mode_count(self) -> int:
        return len(self)


class SparseState:
    """Finite superposition of Fock kets.

    ``normalized`` is False for intermediate images such as ``M|psi>``;
    operations that require a physical state check the flag.
    """

    __slots__ = ("_mode_count", "_terms", "_normalized")

    def __init__(self, mode_count: int, terms: Mapping[Sequence[int], complex], normalized: bool | None = None):
        if mode_count < 1:
            raise ContractError("mode_count must be positive")
        acc: dict[Ket, complex] = {}
        for ket, amp in terms.items():
            ket = FockKet(ket)
            if len(ket) != mode_count:
                raise DimensionError(f"ket {tuple(ket)} does not have {mode_count} modes")
            acc[tuple(ket)] = acc.get(tuple(ket), 0j) + complex(amp)
        self._mode_count = int(mode_count)
        self._terms = {k: v for k, v in acc.items() if abs(v) >= PRUNE_TOL}
        if normalized is None:
            normalized = abs(self.norm_squared() - 1.0) <= NORM_TOL
        self._normalized = normalized

    @classmethod
    def _raw(cls, mode_count: int, terms: dict[Ket, complex], normalized: bool = False) -> "SparseState":
        obj = cls.__new__(cls)
        obj._mode_count = mode_count
        obj._terms = {k: v for k, v in terms.items() if abs(v) >= PRUNE_TOL}
        obj._normalized = normalized
        return obj

    @classmethod
    def basis(cls, *occupations: int) -> "SparseState":
        """The single number state ``|n_0 n_1 ...>``."""
        return cls(len(occupations), {tuple(occupations): 1.0})

    @classmethod
    def from_kets(cls, kets: Iterable[tuple[Sequence[int], complex]], renormalize: bool = True) -> "SparseState":
        kets = list(kets)
        if not kets:
            raise DegenerateStateError("no kets given")
        mode_count = len(kets[0][0])
        acc: dict[Ket, complex] = {}
        for occ, amp in kets:
            occ = tuple(occ)
            acc[occ] = acc.get(occ, 0j) + complex(amp)
        state = cls(mode_count, acc)
        return normalize(state) if renormalize else state

    @property
    def mode_count(self) -> int:
        return self._mode_count

    @property
    def terms(self) -> Mapping[Ket, complex]:
        return MappingProxyType(self._terms)

    @property
    def normalized(self) -> bool:
        return self._normalized

    def __len__(self) -> int:
        return len(self._terms)

    def is_zero(self) -> bool:
        return not self._terms

    def norm_squared(self) -> float:
        return math.fsum(abs(v) ** 2 for v in self._terms.values())

    def max_occupation(self) -> tuple[int, ...]:
        """Largest occupation of each mode over the support."""
        if not self._terms:
            return (0,) * self._mode_count
        return tuple(max(col) for col in zip(*self._terms))

    def amplitude(self, occupations: Sequence[int]) -> complex:
        return self._terms.get(tuple(occupations), 0j)

    def __repr__(self) -> str:
        body = " + ".join(f"({v:.6g})|{','.join(map(str, k))}>" for k, v in sorted(self._terms.items()))
        return f"SparseState({self._mode_count}, {body or '0'})"


def _apply_powers(ket: Ket, powers: Powers) -> tuple[Ket, float] | None:
    """Image of one ket under one normally ordered word, or None if annihilated."""
    coeff = 1.0
    out = list(ket)
    for k, (dag, ann) in enumerate(powers):
        n = out[k]
        if ann > n:
            return None
        for i in range(ann):
            coeff *= math.sqrt(n - i)
        n -= ann
        for i in range(1, dag + 1):
            coeff *= math.sqrt(n + i)
        n += dag
        if n > MAX_OCC:
            raise CapacityError(f"occupation {n} in mode {k} exceeds MAX_OCC={MAX_OCC}")
        out[k] = n
    return tuple(out), coeff


def _check_modes(state: SparseState, mode_count: int) -> None:
    if state.mode_count != mode_count:
        raise DimensionError(f"mode count mismatch: state has {state.mode_count}, operator has {mode_count}")


def apply_monomial(state: SparseState, mono: BosonMonomial, coeff: complex = 1.0) -> SparseState:
    """``coeff * mono |state>``; the result is unnormalized."""
    _check_modes(state, mono.mode_count)
    acc: dict[Ket, complex] = {}
    for ket, amp in state.terms.items():
        image = _apply_powers(ket, mono.powers)
        if image is not None:
            new_ket, c = image
            acc[new_ket] = acc.get(new_ket, 0j) + coeff * c * amp
    return SparseState._raw(state.mode_count, acc)


def apply_poly(state: SparseState, poly: OperatorPoly) -> SparseState:
    _check_modes(state, poly.mode_count)
    acc: dict[Ket, complex] = {}
    for powers, coeff in poly.terms.items():
        for ket, amp in state.terms.items():
            image = _apply_powers(ket, powers)
            if image is not None:
                new_ket, c = image
                acc[new_ket] = acc.get(new_ket, 0j) + coeff * c * amp
    return SparseState._raw(state.mode_count, acc)


def inner(left: SparseState, right: SparseState) -> complex:
    """``<left|right>``, conjugate-linear in ``left``."""
    if left.mode_count != right.mode_count:
        raise DimensionError(f"mode count mismatch: {left.mode_count} vs {right.mode_count}")
    small, large = (left, right) if len(left) <= len(right) else (right, left)
    total = 0j
    for ket, amp in small.terms.items():
        other = large.terms.get(ket)
        if other is not None:
            total += amp.conjugate() * other if small is left else other.conjugate() * amp
    return total


def _require_normalized(state: SparseState) -> None:
    if not state.normalized:
        raise ContractError("expectation values require a normalized state")


def expectation(state: SparseState, poly: OperatorPoly) -> complex:
    """``<psi| poly |psi>`` evaluated term by term."""
    _require_normalized(state)
    _check_modes(state, poly.mode_count)
    terms = state.terms
    total = 0j
    for powers, coeff in poly.terms.items():
        acc = 0j
        for ket, amp in terms.items():
            image = _apply_powers(ket, powers)
            if image is None:
                continue
            partner = terms.get(image[0])
            if partner is not None:
                acc += partner.conjugate() * image[1] * amp
        total += coeff * acc
    return total


def expectation_of_product(state: SparseState, factors: Sequence[OperatorPoly]) -> complex:
    """``<psi| F_1 F_2 ... F_k |psi>`` without expanding the product.

    Factors are applied right to left, so the intermediate state never holds
    more kets than the exact image.  Used where the expanded polynomial would
    have exponentially many monomials.
    """
    _require_normalized(state)
    image = state
    for poly in reversed(factors):
        image = apply_poly(image, poly)
        if image.is_zero():
            return 0j
    return inner(state, image)


def variance(state: SparseState, poly: OperatorPoly) -> float:
    """``<poly^2> - <poly>^2`` for a Hermitian polynomial."""
    if not poly.is_hermitian():
        raise ContractError("variance requires a Hermitian polynomial")
    mean = expectation(state, poly)
    second = expectation(state, poly * poly)
    return (second - mean * mean).real


def tensor(left: SparseState, right: SparseState) -> SparseState:
    acc = {lk + rk: la * ra for lk, la in left.terms.items() for rk, ra in right.terms.items()}
    return SparseState._raw(left.mode_count + right.mode_count, acc,
                            normalized=left.normalized and right.normalized)


def normalize(state: SparseState) -> SparseState:
    norm2 = state.norm_squared()
    if norm2 <= PRUNE_TOL ** 2 or not state.terms:
        raise DegenerateStateError("cannot normalize the zero state")
    scale = 1.0 / math.sqrt(norm2)
    return SparseState._raw(state.mode_count, {k: v * scale for k, v in state.terms.items()}, normalized=True)


def phase_rotate(state: SparseState, phases: Sequence[float]) -> SparseState:
    """Apply the local rotation ``prod_k exp(i phi_k n_k)``."""
    if len(phases) != state.mode_count:
        raise DimensionError("one phase per mode required")
    acc = {}
    for ket, amp in state.terms.items():
        angle = sum(p * n for p, n in zip(phases, ket))
        acc[ket] = amp * complex(math.cos(angle), math.sin(angle))
    return SparseState._raw(state.mode_count, acc, normalized=state.normalized)
