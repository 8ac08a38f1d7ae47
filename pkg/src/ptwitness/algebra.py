"""Normally ordered multimode boson operator polynomials.

Every polynomial is stored in canonical form: a mapping from normally ordered
monomials ``prod_k a_k^{dag S'_k} a_k^{S_k}`` to complex coefficients.  Modes
commute with each other, so a monomial is just the tuple of ``(S'_k, S_k)``
pairs indexed by mode.  Canonical form makes symbolic equality a dictionary
comparison, which is what the commutator identities in the test-suite rely on.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import lru_cache
from types import MappingProxyType
from typing import Iterable, Iterator, Mapping

from .errors import ContractError, DimensionError

PRUNE_TOL = 1e-14
EQUALITY_RTOL = 1e-12

Powers = tuple[tuple[int, int], ...]


@dataclass(frozen=True)
class BosonMonomial:
    """Normally ordered word ``prod_k a_k^{dag S'_k} a_k^{S_k}``.

    ``powers[k] == (S'_k, S_k)``: creation power first, annihilation second.
    """

    powers: Powers

    def __post_init__(self):
        if not self.powers:
            raise ContractError("a monomial needs at least one mode")
        for pair in self.powers:
            if len(pair) != 2 or pair[0] < 0 or pair[1] < 0:
                raise ContractError(f"invalid per-mode powers {pair!r}")

    @classmethod
    def identity(cls, mode_count: int) -> "BosonMonomial":
        return cls(((0, 0),) * mode_count)

    @classmethod
    def from_modes(cls, mode_count: int, spec: Mapping[int, tuple[int, int]]) -> "BosonMonomial":
        """Build from a sparse ``{mode: (dag_power, ann_power)}`` mapping."""
        powers = [(0, 0)] * mode_count
        for mode, pair in spec.items():
            if not 0 <= mode < mode_count:
                raise DimensionError(f"mode {mode} out of range for {mode_count} modes")
            powers[mode] = (int(pair[0]), int(pair[1]))
        return cls(tuple(powers))

    @property
    def mode_count(self) -> int:
        return len(self.powers)

    def dag_power(self, mode: int) -> int:
        return self.powers[mode][0]

    def ann_power(self, mode: int) -> int:
        return self.powers[mode][1]

    @property
    def is_diagonal(self) -> bool:
        """True when the word is a function of number operators only."""
        return all(s == t for s, t in self.powers)

    def __str__(self) -> str:
        parts = []
        for k, (s, t) in enumerate(self.powers):
            if s:
                parts.append(f"a{k}^+{s}" if s > 1 else f"a{k}^+")
            if t:
                parts.append(f"a{k}^{t}" if t > 1 else f"a{k}")
        return " ".join(parts) or "1"


@lru_cache(maxsize=4096)
def _single_mode_product(p1: int, q1: int, p2: int, q2: int) -> tuple[tuple[int, int, float], ...]:
    """Expand ``a^+p1 a^q1 a^+p2 a^q2`` into normal order.

    Uses ``a^s a^+t = sum_k k! C(s,k) C(t,k) a^+(t-k) a^(s-k)`` with the
    coefficient advanced by the recurrence ``c_{k+1} = c_k (s-k)(t-k)/(k+1)``.
    """
    out = []
    coeff = 1
    for k in range(min(q1, p2) + 1):
        out.append((p1 + p2 - k, q1 + q2 - k, float(coeff)))
        coeff = coeff * (q1 - k) * (p2 - k) // (k + 1)
    return tuple(out)


def _raw_product(left: Powers, right: Powers) -> Iterator[tuple[Powers, float]]:
    per_mode = [_single_mode_product(p1, q1, p2, q2) for (p1, q1), (p2, q2) in zip(left, right)]
    for combo in itertools.product(*per_mode):
        coeff = 1.0
        for _, _, c in combo:
            coeff *= c
        yield tuple((s, t) for s, t, _ in combo), coeff


class OperatorPoly:
    """Complex-weighted sum of normally ordered monomials over a fixed mode count.

    Instances are immutable; arithmetic returns new polynomials.  ``*`` between
    two polynomials is the operator product, re-expanded into normal order.
    """

    __slots__ = ("_mode_count", "_terms")

    def __init__(self, mode_count: int, terms: Mapping[BosonMonomial | Powers, complex] | None = None):
        if mode_count < 1:
            raise ContractError("mode_count must be positive")
        self._mode_count = int(mode_count)
        acc: dict[Powers, complex] = {}
        for mono, coeff in (terms or {}).items():
            powers = mono.powers if isinstance(mono, BosonMonomial) else tuple(tuple(p) for p in mono)
            if len(powers) != mode_count:
                raise DimensionError(f"monomial has {len(powers)} modes, polynomial has {mode_count}")
            acc[powers] = acc.get(powers, 0j) + complex(coeff)
        self._terms = {k: v for k, v in acc.items() if abs(v) >= PRUNE_TOL}

    @classmethod
    def _from_canonical(cls, mode_count: int, terms: dict[Powers, complex]) -> "OperatorPoly":
        obj = cls.__new__(cls)
        obj._mode_count = mode_count
        obj._terms = {k: v for k, v in terms.items() if abs(v) >= PRUNE_TOL}
        return obj

    @property
    def mode_count(self) -> int:
        return self._mode_count

    @property
    def terms(self) -> Mapping[Powers, complex]:
        return MappingProxyType(self._terms)

    def items(self) -> Iterable[tuple[BosonMonomial, complex]]:
        return ((BosonMonomial(k), v) for k, v in self._terms.items())

    def __len__(self) -> int:
        return len(self._terms)

    def is_zero(self) -> bool:
        return not self._terms

    def _check(self, other: "OperatorPoly") -> None:
        if other._mode_count != self._mode_count:
            raise DimensionError(f"mode count mismatch: {self._mode_count} vs {other._mode_count}")

    def __add__(self, other):
        if isinstance(other, (int, float, complex)):
            other = identity(self._mode_count) * other
        if not isinstance(other, OperatorPoly):
            return NotImplemented
        self._check(other)
        acc = dict(self._terms)
        for k, v in other._terms.items():
            acc[k] = acc.get(k, 0j) + v
        return OperatorPoly._from_canonical(self._mode_count, acc)

    __radd__ = __add__

    def __neg__(self) -> "OperatorPoly":
        return OperatorPoly._from_canonical(self._mode_count, {k: -v for k, v in self._terms.items()})

    def __sub__(self, other):
        if isinstance(other, (int, float, complex)):
            return self + (-other)
        if not isinstance(other, OperatorPoly):
            return NotImplemented
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, (int, float, complex)):
            c = complex(other)
            return OperatorPoly._from_canonical(self._mode_count, {k: v * c for k, v in self._terms.items()})
        if not isinstance(other, OperatorPoly):
            return NotImplemented
        self._check(other)
        acc: dict[Powers, complex] = {}
        for lk, lv in self._terms.items():
            for rk, rv in other._terms.items():
                base = lv * rv
                for powers, c in _raw_product(lk, rk):
                    acc[powers] = acc.get(powers, 0j) + base * c
        return OperatorPoly._from_canonical(self._mode_count, acc)

    def __rmul__(self, other):
        if isinstance(other, (int, float, complex)):
            return self * other
        return NotImplemented

    def __truediv__(self, other):
        if isinstance(other, (int, float, complex)):
            return self * (1.0 / other)
        return NotImplemented

    def dagger(self) -> "OperatorPoly":
        return dagger(self)

    def equals(self, other: "OperatorPoly", rtol: float = EQUALITY_RTOL) -> bool:
        """Symbolic equality with tolerance scaled by the largest coefficient."""
        if other._mode_count != self._mode_count:
            return False
        keys = set(self._terms) | set(other._terms)
        if not keys:
            return True
        scale = max(abs(v) for v in itertools.chain(self._terms.values(), other._terms.values()))
        tol = rtol * scale
        return all(abs(self._terms.get(k, 0j) - other._terms.get(k, 0j)) <= tol for k in keys)

    def __eq__(self, other):
        if not isinstance(other, OperatorPoly):
            return NotImplemented
        return self.equals(other)

    __hash__ = None  # type: ignore[assignment]

    def is_hermitian(self, rtol: float = EQUALITY_RTOL) -> bool:
        return self.equals(dagger(self), rtol)

    def __repr__(self) -> str:
        if not self._terms:
            return f"OperatorPoly({self._mode_count}, 0)"
        body = " + ".join(f"({v:.6g})*{BosonMonomial(k)}" for k, v in sorted(self._terms.items()))
        return f"OperatorPoly({self._mode_count}, {body})"


def normal_order_product(left: BosonMonomial, right: BosonMonomial) -> OperatorPoly:
    """Exact normally ordered expansion of ``left * right``."""
    if left.mode_count != right.mode_count:
        raise DimensionError(f"mode count mismatch: {left.mode_count} vs {right.mode_count}")
    acc: dict[Powers, complex] = {}
    for powers, c in _raw_product(left.powers, right.powers):
        acc[powers] = acc.get(powers, 0j) + c
    return OperatorPoly._from_canonical(left.mode_count, acc)


def commutator(p: OperatorPoly, q: OperatorPoly) -> OperatorPoly:
    return p * q - q * p


def anticommutator(p: OperatorPoly, q: OperatorPoly) -> OperatorPoly:
    return p * q + q * p


def dagger(p: OperatorPoly) -> OperatorPoly:
    """Hermitian adjoint.

    The adjoint of ``a^+s a^t`` is ``a^+t a^s``, already normally ordered, so
    swapping each mode's pair is the full re-canonicalisation.
    """
    acc = {tuple((t, s) for s, t in k): v.conjugate() for k, v in p.terms.items()}
    return OperatorPoly._from_canonical(p.mode_count, acc)


# -- elementary constructors -------------------------------------------------

def monomial(mode_count: int, spec: Mapping[int, tuple[int, int]], coeff: complex = 1.0) -> OperatorPoly:
    return OperatorPoly(mode_count, {BosonMonomial.from_modes(mode_count, spec): coeff})


def identity(mode_count: int) -> OperatorPoly:
    return OperatorPoly(mode_count, {BosonMonomial.identity(mode_count): 1.0})


def annihilation(mode_count: int, mode: int, power: int = 1) -> OperatorPoly:
    return monomial(mode_count, {mode: (0, power)})


def creation(mode_count: int, mode: int, power: int = 1) -> OperatorPoly:
    return monomial(mode_count, {mode: (power, 0)})


def number(mode_count: int, mode: int) -> OperatorPoly:
    return monomial(mode_count, {mode: (1, 1)})


def quadrature_x(mode_count: int, mode: int) -> OperatorPoly:
    """``x = (a^+ + a)/sqrt(2)``."""
    return (creation(mode_count, mode) + annihilation(mode_count, mode)) * (2 ** -0.5)


def quadrature_p(mode_count: int, mode: int) -> OperatorPoly:
    """``p = i(a^+ - a)/sqrt(2)``."""
    return (creation(mode_count, mode) - annihilation(mode_count, mode)) * (1j * 2 ** -0.5)


# -- word-derived operator families --------------------------------------------

@dataclass(frozen=True)
class WordOperators:
    """Operators derived from a single word ``M`` and a transposed mode set.

    ``L_x, L_y, L_z`` are the Hermitian combinations of ``M``; ``H_x, H_y`` the
    same with creation/annihilation powers exchanged on the transposed modes;
    ``N`` is the quarter product of the commutators of the untouched and the
    (exchanged) transposed parts.
    """

    word: BosonMonomial
    modes: frozenset[int]
    L_x: OperatorPoly
    L_y: OperatorPoly
    L_z: OperatorPoly
    H_x: OperatorPoly
    H_y: OperatorPoly
    N: OperatorPoly


def _hermitian_parts(m: OperatorPoly) -> tuple[OperatorPoly, OperatorPoly]:
    md = dagger(m)
    return (m + md) * 0.5, (m - md) * (-0.5j)


@lru_cache(maxsize=512)
def word_operators(word: BosonMonomial, modes: frozenset[int]) -> WordOperators:
    n = word.mode_count
    modes = frozenset(modes)
    if not modes or any(not 0 <= k < n for k in modes):
        raise DimensionError(f"transposed modes {sorted(modes)} invalid for {n} modes")
    m = OperatorPoly(n, {word: 1.0})
    swapped = tuple((t, s) if k in modes else (s, t) for k, (s, t) in enumerate(word.powers))
    m_swapped = OperatorPoly(n, {swapped: 1.0})

    l_x, l_y = _hermitian_parts(m)
    l_z = commutator(m, dagger(m)) * 0.5
    h_x, h_y = _hermitian_parts(m_swapped)

    untouched = tuple((0, 0) if k in modes else p for k, p in enumerate(word.powers))
    transposed = tuple(p if k in modes else (0, 0) for k, p in enumerate(swapped))
    m1 = OperatorPoly(n, {untouched: 1.0})
    m2 = OperatorPoly(n, {transposed: 1.0})
    big_n = commutator(m1, dagger(m1)) * commutator(m2, dagger(m2)) * 0.25
    return WordOperators(word, modes, l_x, l_y, l_z, h_x, h_y, big_n)


NAMED_OPERATORS = (
    "J_x", "J_y", "J_z", "K_x", "K_y", "K_z",
    "L_x", "L_y", "L_z", "H_x", "H_y", "N_mn", "N_plus", "N_general",
)


@lru_cache(maxsize=256)
def _two_mode_named(name: str, m: int, n: int) -> OperatorPoly:
    a, ad = annihilation(2, 0), creation(2, 0)
    b, bd = annihilation(2, 1), creation(2, 1)
    if name == "J_x":
        return (ad * b + a * bd) * 0.5
    if name == "J_y":
        return (ad * b - a * bd) * (-0.5j)
    if name == "J_z":
        return (number(2, 0) - number(2, 1)) * 0.5
    if name == "K_x":
        return (ad * bd + a * b) * 0.5
    if name == "K_y":
        return (ad * bd - a * b) * (-0.5j)
    if name == "K_z":
        return (number(2, 0) + number(2, 1) + 1.0) * 0.5
    if name == "N_plus":
        return (number(2, 0) * n + number(2, 1) * m) / (2.0 * m * n)
    ops = word_operators(BosonMonomial(((m, 0), (0, n))), frozenset({1}))
    return {
        "L_x": ops.L_x,
        "L_y": ops.L_y,
        "L_z": ops.L_z,
        "H_x": ops.H_x,
        "H_y": ops.H_y,
        "N_mn": ops.N,
    }[name]


def build_named(
    name: str,
    m: int = 1,
    n: int = 1,
    *,
    word: BosonMonomial | None = None,
    modes: Iterable[int] | None = None,
) -> OperatorPoly:
    """Construct one of the named operators.

    ``J_*``, ``K_*``, ``L_*``, ``H_*``, ``N_mn`` and ``N_plus`` live on two
    modes ``(a, b) = (0, 1)``; ``L_*``/``H_*``/``N_mn`` use the word
    ``a^+m b^n`` with ``b`` transposed.  ``N_general`` needs an explicit
    ``word`` and the transposed ``modes``.
    """
    if name not in NAMED_OPERATORS:
        raise ContractError(f"unknown operator name {name!r}; expected one of {', '.join(NAMED_OPERATORS)}")
    if int(m) < 1 or int(n) < 1:
        raise ContractError(f"powers must be positive integers, got m={m}, n={n}")
    if name == "N_general":
        if word is None or modes is None:
            raise ContractError("N_general requires word= and modes=")
        return word_operators(word, frozenset(modes)).N
    return _two_mode_named(name, int(m), int(n))
