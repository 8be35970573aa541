"""Pauli strings, Pauli-basis expansion and qubit-commuting cover grouping.

This is the Clifford-only baseline: terms are grouped so that every member
of a group is measurable in the local eigenbasis of a single covering
string, which turns the group into one ``U^H diag(lam) U`` term.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import reduce

import numpy as np

from .linalg import is_hermitian, n_qubits_of

LETTERS = "IXYZ"

_MATS = {
    "I": np.eye(2, dtype=np.complex128),
    "X": np.array([[0, 1], [1, 0]], dtype=np.complex128),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=np.complex128),
    "Z": np.array([[1, 0], [0, -1]], dtype=np.complex128),
}

_S = 1 / np.sqrt(2)
# rotations taking each letter's eigenbasis to the computational basis
BASIS_ROTATION = {
    "I": np.eye(2, dtype=np.complex128),
    "Z": np.eye(2, dtype=np.complex128),
    "X": np.array([[_S, _S], [_S, -_S]], dtype=np.complex128),
    "Y": np.array([[_S, -1j * _S], [_S, 1j * _S]], dtype=np.complex128),
}

# Euler angles (theta, phi, lam) reproducing BASIS_ROTATION exactly
BASIS_ROTATION_ANGLES = {
    "I": (0.0, 0.0, 0.0),
    "Z": (0.0, 0.0, 0.0),
    "X": (np.pi / 2, 0.0, np.pi),
    "Y": (np.pi / 2, 0.0, np.pi / 2),
}


@dataclass(frozen=True)
class PauliString:
    letters: str

    def __post_init__(self):
        if not self.letters:
            raise ValueError("empty Pauli string")
        bad = set(self.letters) - set(LETTERS)
        if bad:
            raise ValueError(f"invalid Pauli letters {sorted(bad)} in {self.letters!r}")

    @property
    def n_qubits(self) -> int:
        return len(self.letters)

    def matrix(self) -> np.ndarray:
        return reduce(np.kron, (_MATS[c] for c in self.letters))

    def __str__(self) -> str:
        return self.letters


@dataclass
class PauliSum:
    terms: list[tuple[float, PauliString]]

    def __post_init__(self):
        seen = set()
        for _, p in self.terms:
            if p.letters in seen:
                raise ValueError(f"duplicate Pauli string {p.letters}")
            seen.add(p.letters)
        if len({p.n_qubits for _, p in self.terms}) > 1:
            raise ValueError("Pauli strings of mixed length")

    @property
    def n_qubits(self) -> int:
        return self.terms[0][1].n_qubits

    def __len__(self) -> int:
        return len(self.terms)

    def to_matrix(self) -> np.ndarray:
        dim = 1 << self.n_qubits
        out = np.zeros((dim, dim), dtype=np.complex128)
        for coeff, p in self.terms:
            out += coeff * p.matrix()
        return out


def pauli_expand(H: np.ndarray, tol: float = 1e-14) -> PauliSum:
    """Expand a Hermitian matrix in the Pauli basis.

    Coefficients are ``tr(H Q) / 2**n``; terms with ``|coeff| <= tol`` are
    dropped.
    """
    n = n_qubits_of(H)
    if not is_hermitian(H):
        raise ValueError("pauli_expand requires a Hermitian matrix")
    dim = 1 << n
    terms = []
    for letters in itertools.product(LETTERS, repeat=n):
        p = PauliString("".join(letters))
        # tr(H Q) = sum_ij H_ij Q_ji
        coeff = np.sum(H * p.matrix().T).real / dim
        if abs(coeff) > tol:
            terms.append((float(coeff), p))
    return PauliSum(terms)


def covers(Q: PauliString, P: PauliString) -> bool:
    """True when every letter of ``Q`` is ``I`` or equals ``P`` there."""
    if Q.n_qubits != P.n_qubits:
        raise ValueError("Pauli strings of different length")
    return all(q == "I" or q == p for q, p in zip(Q.letters, P.letters))


@dataclass
class CoverGroup:
    members: list[int]
    cover: PauliString


def _merge(cover: list[str], letters: str) -> bool:
    """Absorb ``letters`` into a partial cover in place if compatible."""
    for c, q in zip(cover, letters):
        if q != "I" and c != "I" and c != q:
            return False
    for i, q in enumerate(letters):
        if q != "I":
            cover[i] = q
    return True


def greedy_cover_grouping(S: PauliSum) -> list[CoverGroup]:
    """Disjoint greedy grouping, largest ``|coeff|`` first.

    The largest ungrouped term seeds a group and every compatible remaining
    term is absorbed in order of decreasing magnitude.  Qubits where all
    members carry ``I`` get cover letter ``Z``.
    """
    if len(S) == 0:
        raise ValueError("empty Pauli sum")
    order = sorted(range(len(S)), key=lambda i: (-abs(S.terms[i][0]), i))
    remaining = list(order)
    groups = []
    while remaining:
        seed = remaining.pop(0)
        cover = list(S.terms[seed][1].letters)
        members = [seed]
        rest = []
        for j in remaining:
            if _merge(cover, S.terms[j][1].letters):
                members.append(j)
            else:
                rest.append(j)
        remaining = rest
        letters = "".join("Z" if c == "I" else c for c in cover)
        groups.append(CoverGroup(members=members, cover=PauliString(letters)))
    return groups


def _sign_diagonal(letters: str) -> np.ndarray:
    """+-1 diagonal of a Pauli string in its rotated (all-Z) frame."""
    z = np.array([1.0, -1.0])
    one = np.ones(2)
    return reduce(np.kron, (one if c == "I" else z for c in letters))


def cover_to_term(g: CoverGroup, S: PauliSum) -> tuple[np.ndarray, np.ndarray]:
    """Clifford rotation ``U`` and diagonal ``lam`` with ``U (sum a_j Q_j) U^H = diag(lam)``."""
    for j in g.members:
        if not covers(S.terms[j][1], g.cover):
            raise ValueError(f"term {S.terms[j][1]} is not covered by {g.cover}")
    U = reduce(np.kron, (BASIS_ROTATION[c] for c in g.cover.letters))
    lam = np.zeros(1 << g.cover.n_qubits)
    for j in g.members:
        coeff, q = S.terms[j]
        lam += coeff * _sign_diagonal(q.letters)
    return U, lam


def grouped_reconstruction(groups: list[CoverGroup], S: PauliSum) -> np.ndarray:
    """Sum of ``U_i^H diag(lam_i) U_i``; a term in several groups counts once, in its first group."""
    used: set[int] = set()
    dim = 1 << S.n_qubits
    out = np.zeros((dim, dim), dtype=np.complex128)
    for g in groups:
        fresh = [j for j in g.members if j not in used]
        used.update(fresh)
        if not fresh:
            continue
        U, lam = cover_to_term(CoverGroup(fresh, g.cover), S)
        out += (U.conj().T * lam) @ U
    return out


def cover_angles(cover: PauliString) -> np.ndarray:
    """Layer-0 ansatz angles realising the cover's basis rotation."""
    return np.array([a for c in cover.letters for a in BASIS_ROTATION_ANGLES[c]])


# ---------------------------------------------------------------------------
# text format: one "coeff LETTERS" term per line

def parse_pauli_sum(text: str) -> PauliSum:
    terms: dict[str, float] = {}
    n = None
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) != 2:
            raise ValueError(f"line {lineno}: expected 'coeff LETTERS', got {raw!r}")
        try:
            coeff = float(parts[0])
        except ValueError:
            raise ValueError(f"line {lineno}: bad coefficient {parts[0]!r}") from None
        letters = parts[1].upper()
        if set(letters) - set(LETTERS):
            raise ValueError(f"line {lineno}: letters must be from IXYZ, got {parts[1]!r}")
        if n is None:
            n = len(letters)
        elif len(letters) != n:
            raise ValueError(f"line {lineno}: length {len(letters)} differs from {n}")
        terms[letters] = terms.get(letters, 0.0) + coeff
    if n is None:
        raise ValueError("no terms in Pauli sum")
    return PauliSum([(c, PauliString(p)) for p, c in terms.items() if c != 0.0])


def format_pauli_sum(S: PauliSum) -> str:
    return "".join(f"{c!r} {p.letters}\n" for c, p in S.terms)
