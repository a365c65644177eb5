"""Exact algebra of signed multi-qubit Pauli strings.

A string is stored in symplectic form: two bit masks ``x`` and ``z`` (bit j
belongs to qubit j) plus a phase exponent ``k``, representing the operator

    P = i**k * (X**x) * (Z**z),

where ``X**x`` is the product of single-qubit X on every set bit of ``x`` and
likewise for Z. The per-site convention is fixed globally as Y = i X Z, so the
letter Y corresponds to (x=1, z=1) with one factor of i absorbed into ``k``.
Phases are exact: products, adjoints and squares are integer arithmetic mod 4.

Dense realizations use the little-endian basis convention: qubit 0 is the
least significant bit of the computational-basis index, i.e.
``to_dense(P) == kron(M_{n-1}, ..., M_1, M_0)`` for single-site matrices M_j.

Text serialization is ``"<phase> <letters>"`` with one letter per qubit in
qubit order, e.g. ``"+1 IXYZ"`` or ``"-i ZZII"``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .errors import CapacityError, DimensionMismatchError, ParameterError

#: Largest qubit count for which dense 2^n x 2^n realizations are produced.
DENSE_LIMIT = 14

_PHASE_VALUES = (1 + 0j, 1j, -1 + 0j, -1j)
_PHASE_TOKENS = {0: "+1", 1: "+i", 2: "-1", 3: "-i"}
_TOKEN_PHASES = {"+1": 0, "1": 0, "+i": 1, "i": 1, "-1": 2, "-i": 3}

# per-letter (x, z, phase exponent) under Y = i X Z
_LETTER_XZK = {"I": (0, 0, 0), "X": (1, 0, 0), "Z": (0, 1, 0), "Y": (1, 1, 1)}

_SINGLE_QUBIT_DENSE = {
    "I": np.eye(2, dtype=complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
}


def _popcount(v: int) -> int:
    return int(v).bit_count()


@dataclass(frozen=True)
class PauliString:
    """Signed n-qubit Pauli operator in symplectic (x, z, phase) form.

    Instances are immutable and hashable; all operations are pure functions.
    """

    n: int
    x: int
    z: int
    k: int = 0  # phase exponent, P = i**k X**x Z**z

    def __post_init__(self):
        if self.n < 1:
            raise ParameterError(f"need at least one qubit, got n={self.n}")
        mask = (1 << self.n) - 1
        if self.x & ~mask or self.z & ~mask:
            raise ParameterError("mask has bits outside the qubit register")
        object.__setattr__(self, "k", self.k % 4)

    # -- constructors ------------------------------------------------------

    @classmethod
    def identity(cls, n: int) -> "PauliString":
        return cls(n, 0, 0, 0)

    @classmethod
    def single(cls, n: int, qubit: int, axis: str) -> "PauliString":
        """sigma^axis on one qubit of an n-qubit register."""
        if not 0 <= qubit < n:
            raise ParameterError(f"qubit {qubit} out of range for n={n}")
        ax = axis.upper()
        if ax not in ("X", "Y", "Z"):
            raise ParameterError(f"axis must be x, y or z, got {axis!r}")
        x, z, k = _LETTER_XZK[ax]
        return cls(n, x << qubit, z << qubit, k)

    @classmethod
    def from_letters(cls, letters: str, phase: complex | str = "+1") -> "PauliString":
        """Build from a letter string, qubit 0 first (e.g. ``"IXYZ"``)."""
        letters = letters.strip().upper()
        if not letters or any(c not in _LETTER_XZK for c in letters):
            raise ParameterError(f"bad Pauli letters {letters!r}")
        x = z = 0
        n_y = 0
        for j, c in enumerate(letters):
            xb, zb, kb = _LETTER_XZK[c]
            x |= xb << j
            z |= zb << j
            n_y += kb
        if isinstance(phase, str):
            tok = phase.strip()
            if tok not in _TOKEN_PHASES:
                raise ParameterError(f"bad phase token {tok!r}")
            k0 = _TOKEN_PHASES[tok]
        else:
            try:
                k0 = _PHASE_VALUES.index(complex(phase))
            except ValueError:
                raise ParameterError(f"phase must be one of +1,-1,+i,-i, got {phase!r}")
        return cls(len(letters), x, z, k0 + n_y)

    @classmethod
    def from_label(cls, label: str) -> "PauliString":
        """Parse the text form ``"<phase> <letters>"``, e.g. ``"+1 IXYZ"``."""
        parts = label.split()
        if len(parts) == 1:
            return cls.from_letters(parts[0])
        if len(parts) != 2:
            raise ParameterError(f"bad Pauli label {label!r}")
        return cls.from_letters(parts[1], phase=parts[0])

    # -- basic queries ------------------------------------------------------

    @property
    def phase(self) -> complex:
        """The overall phase i**k as a complex number."""
        return _PHASE_VALUES[self.k]

    def letter(self, qubit: int) -> str:
        xb = (self.x >> qubit) & 1
        zb = (self.z >> qubit) & 1
        return ("I", "X", "Z", "Y")[xb + 2 * zb]

    @property
    def letters(self) -> str:
        return "".join(self.letter(j) for j in range(self.n))

    @property
    def weight(self) -> int:
        """Number of non-identity sites."""
        return _popcount(self.x | self.z)

    @property
    def support(self) -> tuple[int, ...]:
        m = self.x | self.z
        return tuple(j for j in range(self.n) if (m >> j) & 1)

    def is_hermitian(self) -> bool:
        # (X^x Z^z)^dag = (-1)^{|x&z|} X^x Z^z, so P^dag = i^{-k}(-1)^{|x&z|} ...
        return (2 * self.k + 2 * _popcount(self.x & self.z)) % 4 == 0

    # -- algebra -------------------------------------------------------------

    def __mul__(self, other: "PauliString") -> "PauliString":
        if not isinstance(other, PauliString):
            return NotImplemented
        if self.n != other.n:
            raise DimensionMismatchError(
                f"cannot multiply strings on {self.n} and {other.n} qubits"
            )
        # Z^z1 X^x2 = (-1)^{|z1 & x2|} X^x2 Z^z1
        k = self.k + other.k + 2 * _popcount(self.z & other.x)
        return PauliString(self.n, self.x ^ other.x, self.z ^ other.z, k)

    def adjoint(self) -> "PauliString":
        return PauliString(self.n, self.x, self.z, -self.k + 2 * _popcount(self.x & self.z))

    def commutes(self, other: "PauliString") -> bool:
        """True iff the dense matrices commute (symplectic-form parity test)."""
        if self.n != other.n:
            raise DimensionMismatchError(
                f"cannot compare strings on {self.n} and {other.n} qubits"
            )
        return (_popcount(self.x & other.z) + _popcount(self.z & other.x)) % 2 == 0

    def square_phase(self) -> complex:
        """P * P = square_phase * I; always +1 or -1."""
        return _PHASE_VALUES[(2 * self.k + 2 * _popcount(self.x & self.z)) % 4]

    # -- dense realization ----------------------------------------------------

    def to_dense(self, dense_limit: int | None = None) -> np.ndarray:
        """Exact 2^n x 2^n complex matrix (little-endian qubit ordering)."""
        limit = DENSE_LIMIT if dense_limit is None else dense_limit
        if self.n > limit:
            raise CapacityError(
                f"dense realization of {self.n} qubits exceeds the limit {limit}"
            )
        dim = 1 << self.n
        cols = np.arange(dim, dtype=np.int64)
        rows = cols ^ self.x
        signs = 1.0 - 2.0 * (np.bitwise_count(cols & self.z) & 1).astype(np.float64)
        mat = np.zeros((dim, dim), dtype=complex)
        mat[rows, cols] = self.phase * signs
        return mat

    def to_sparse(self, sparse_limit: int = 24):
        """CSR realization; one nonzero per column. Cheap up to ~24 qubits."""
        from scipy import sparse

        if self.n > sparse_limit:
            raise CapacityError(
                f"sparse realization of {self.n} qubits exceeds the limit {sparse_limit}"
            )
        dim = 1 << self.n
        cols = np.arange(dim, dtype=np.int64)
        rows = cols ^ self.x
        signs = 1.0 - 2.0 * (np.bitwise_count(cols & self.z) & 1).astype(np.float64)
        return sparse.csr_matrix((self.phase * signs, (rows, cols)), shape=(dim, dim))

    # -- misc -----------------------------------------------------------------

    @property
    def label(self) -> str:
        """Text form with display phase, Y letters shown as plain Y."""
        n_y = _popcount(self.x & self.z)
        return f"{_PHASE_TOKENS[(self.k - n_y) % 4]} {self.letters}"

    def __str__(self) -> str:
        return self.label

    def __repr__(self) -> str:
        return f"PauliString({self.label!r})"


def multiply(p: PauliString, q: PauliString) -> PauliString:
    """Exact product p*q including phase."""
    return p * q


def commutes(p: PauliString, q: PauliString) -> bool:
    return p.commutes(q)


def to_dense(p: PauliString, dense_limit: int | None = None) -> np.ndarray:
    return p.to_dense(dense_limit)


class PauliSum:
    """Weighted sum of Pauli strings with duplicate terms merged.

    Internally every string is canonicalized to phase exponent 0 and the
    i**k phase is absorbed into a complex coefficient, so merging is a plain
    dictionary update keyed on the (x, z) masks.
    """

    __slots__ = ("n", "_terms")

    def __init__(self, n: int, terms: Iterable[tuple[complex, PauliString]] = ()):
        self.n = n
        self._terms: dict[tuple[int, int], complex] = {}
        for coeff, string in terms:
            self._add(coeff, string)

    def _add(self, coeff: complex, string: PauliString) -> None:
        if string.n != self.n:
            raise DimensionMismatchError(
                f"term on {string.n} qubits in a sum on {self.n} qubits"
            )
        if not np.isfinite(coeff):
            raise ParameterError("coefficients must be finite")
        key = (string.x, string.z)
        self._terms[key] = self._terms.get(key, 0.0) + complex(coeff) * string.phase

    @classmethod
    def zero(cls, n: int) -> "PauliSum":
        return cls(n)

    @classmethod
    def from_string(cls, string: PauliString, coeff: complex = 1.0) -> "PauliSum":
        return cls(string.n, [(coeff, string)])

    @property
    def terms(self) -> list[tuple[complex, PauliString]]:
        """Merged terms as (coefficient, phase-0 string) pairs."""
        return [
            (c, PauliString(self.n, x, z, 0))
            for (x, z), c in sorted(self._terms.items())
            if c != 0
        ]

    def simplify(self, tol: float = 1e-14) -> "PauliSum":
        out = PauliSum(self.n)
        scale = max((abs(c) for c in self._terms.values()), default=0.0)
        for (x, z), c in self._terms.items():
            if abs(c) > tol * max(scale, 1.0):
                out._terms[(x, z)] = c
        return out

    def __len__(self) -> int:
        return sum(1 for c in self._terms.values() if c != 0)

    def __add__(self, other: "PauliSum") -> "PauliSum":
        out = PauliSum(self.n)
        out._terms = dict(self._terms)
        for (x, z), c in other._terms.items():
            out._terms[(x, z)] = out._terms.get((x, z), 0.0) + c
        return out

    def __sub__(self, other: "PauliSum") -> "PauliSum":
        return self + (other * (-1.0))

    def __mul__(self, other):
        if isinstance(other, PauliSum):
            out = PauliSum(self.n)
            for c1, s1 in self.terms:
                for c2, s2 in other.terms:
                    out._add(c1 * c2, s1 * s2)
            return out
        out = PauliSum(self.n)
        for (x, z), c in self._terms.items():
            out._terms[(x, z)] = c * complex(other)
        return out

    __rmul__ = __mul__

    def adjoint(self) -> "PauliSum":
        out = PauliSum(self.n)
        for (x, z), c in self._terms.items():
            s = PauliString(self.n, x, z, 0).adjoint()
            out._add(np.conj(c), s)
        return out

    def is_hermitian(self, tol: float = 1e-12) -> bool:
        diff = self - self.adjoint()
        return all(abs(c) <= tol for c, _ in diff.terms)

    def to_dense(self, dense_limit: int | None = None) -> np.ndarray:
        dim = 1 << self.n
        out = np.zeros((dim, dim), dtype=complex)
        for c, s in self.terms:
            out += c * s.to_dense(dense_limit)
        return out

    def to_sparse(self, sparse_limit: int = 24):
        from scipy import sparse

        dim = 1 << self.n
        out = sparse.csr_matrix((dim, dim), dtype=complex)
        for c, s in self.terms:
            out = out + c * s.to_sparse(sparse_limit)
        return out

    def norm_coeffs(self) -> float:
        """Sum of absolute coefficients (an upper bound on the operator norm)."""
        return float(sum(abs(c) for c in self._terms.values()))

    def max_weight(self) -> int:
        return max((s.weight for c, s in self.terms), default=0)

    def __repr__(self) -> str:
        inner = " + ".join(f"({c:.6g})*{s.letters}" for c, s in self.terms[:6])
        more = "" if len(self) <= 6 else f" + ... [{len(self)} terms]"
        return f"PauliSum({inner}{more})"


def projector_product(
    stabilizers: Sequence[PauliString], signs: Sequence[int]
) -> PauliSum:
    """Symbolic expansion of prod_h (I + sign_h * h) / 2 as a PauliSum.

    The stabilizers must be Hermitian involutions for the result to be an
    orthogonal projector; callers enforce that.
    """
    if not stabilizers:
        raise ParameterError("need at least one stabilizer")
    n = stabilizers[0].n
    out = PauliSum(n, [(1.0, PauliString.identity(n))])
    for h, s in zip(stabilizers, signs):
        factor = PauliSum(n, [(0.5, PauliString.identity(n)), (0.5 * s, h)])
        out = out * factor
    return out
