"""Pauli-string observables, activity classification, and X-structure tools."""

from __future__ import annotations

import itertools
import math
import re
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .qcore import HADAMARD, ID2, PHASE_S, dag, index_to_bits, kron_all

PAULI_1Q = {
    "I": np.eye(2, dtype=complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.diag([1.0, -1.0]).astype(complex),
}

_WORD_RE = re.compile(r"^[IXYZ]+$")


class ObservableError(ValueError):
    pass


@dataclass(frozen=True)
class PauliString:
    """A word over {I,X,Y,Z} with a real coefficient."""

    word: str
    coeff: float = 1.0

    def __post_init__(self):
        if not _WORD_RE.match(self.word):
            raise ObservableError(f"invalid Pauli word {self.word!r}")
        if not math.isfinite(self.coeff):
            raise ObservableError("non-finite coefficient")

    @property
    def n(self) -> int:
        return len(self.word)

    def matrix(self) -> np.ndarray:
        return self.coeff * kron_all(*(PAULI_1Q[c] for c in self.word))

    @property
    def activity(self) -> frozenset[int]:
        """Qubits (1-based) carrying X or Y; the element class this word touches."""
        return frozenset(j + 1 for j, c in enumerate(self.word) if c in "XY")


class Observable:
    """Real linear combination of Pauli strings on a fixed register size."""

    def __init__(self, terms):
        terms = tuple(terms)
        if not terms:
            raise ObservableError("observable needs at least one term")
        if len({t.n for t in terms}) != 1:
            raise ObservableError("terms have mismatched register sizes")
        self.terms = terms
        self.n = terms[0].n

    @cached_property
    def matrix(self) -> np.ndarray:
        return sum(t.matrix() for t in self.terms)

    def __repr__(self):
        return f"Observable({format_observable(self)!r})"


def parse_observable(text: str, n: int | None = None) -> Observable:
    """Parse 'coeff WORD; coeff WORD; ...', e.g. '8 ZZ; 2 XY; 3 XX; -10 IZ'."""
    terms = []
    for pos, chunk in enumerate(text.split(";")):
        parts = chunk.split()
        if len(parts) != 2:
            raise ObservableError(f"term {pos + 1} ({chunk.strip()!r}): expected 'coeff WORD'")
        try:
            coeff = float(parts[0])
        except ValueError:
            raise ObservableError(f"term {pos + 1}: bad coefficient {parts[0]!r}") from None
        if not _WORD_RE.match(parts[1]):
            raise ObservableError(f"term {pos + 1}: bad Pauli word {parts[1]!r}")
        terms.append(PauliString(parts[1], coeff))
    obs = Observable(terms)
    if n is not None and obs.n != n:
        raise ObservableError(f"observable is on {obs.n} qubits, expected {n}")
    return obs


def format_observable(obs: Observable) -> str:
    return "; ".join(f"{t.coeff:g} {t.word}" for t in obs.terms)


def pauli_matrix(ps: PauliString) -> np.ndarray:
    return ps.matrix()


def activity_of_element(i_bits, j_bits) -> frozenset[int]:
    """Set of qubits where the two index bitstrings differ (A of an A-active element)."""
    if len(i_bits) != len(j_bits):
        raise ObservableError("bitstrings have different lengths")
    return frozenset(q + 1 for q, (a, b) in enumerate(zip(i_bits, j_bits)) if a != b)


def activity_of_indices(i: int, j: int, n: int) -> frozenset[int]:
    return activity_of_element(index_to_bits(i, n), index_to_bits(j, n))


def activity_support(obs: Observable) -> frozenset[frozenset[int]]:
    """Element classes touched by the observable, one pattern per term's X/Y positions."""
    return frozenset(t.activity for t in obs.terms)


def is_x_structured(obs: Observable) -> bool:
    """True iff every term lies entirely in {I,Z} or entirely in {X,Y}."""
    return all(set(t.word) <= {"I", "Z"} or set(t.word) <= {"X", "Y"} for t in obs.terms)


# Per-qubit rotation candidates and their conjugation action on Pauli letters.
# HSH sends Y -> Z (and fixes X up to sign); H swaps X and Z.
_HSH = HADAMARD @ PHASE_S @ HADAMARD
_ROTATION_CANDIDATES = (("1", ID2), ("H", HADAMARD), ("HSH", _HSH))


def _letter_action(v: np.ndarray) -> dict[str, tuple[str, float]]:
    action = {"I": ("I", 1.0)}
    for letter in "XYZ":
        m = v @ PAULI_1Q[letter] @ dag(v)
        for target in "XYZ":
            for sign in (1.0, -1.0):
                if np.abs(m - sign * PAULI_1Q[target]).max() < 1e-12:
                    action[letter] = (target, sign)
    return action


_ACTIONS = {name: _letter_action(v) for name, v in _ROTATION_CANDIDATES}
_CAND_MATS = dict(_ROTATION_CANDIDATES)


def rotate_to_x_structure(obs: Observable):
    """Find a per-qubit rotation U with U O U^dag = P X-structured.

    Returns (U, rotated observable, per-qubit rotation names) or None when no
    assignment of per-qubit candidates X-structures every term simultaneously.
    Always succeeds for a single Pauli string.
    """
    names = [name for name, _ in _ROTATION_CANDIDATES]
    for assign in itertools.product(names, repeat=obs.n):
        rotated = []
        for t in obs.terms:
            coeff = t.coeff
            word = []
            for j, letter in enumerate(t.word):
                target, sign = _ACTIONS[assign[j]][letter]
                word.append(target)
                coeff *= sign
            rotated.append(PauliString("".join(word), coeff))
        candidate = Observable(rotated)
        if is_x_structured(candidate):
            u = kron_all(*(_CAND_MATS[a] for a in assign))
            return u, candidate, tuple(assign)
    return None


def expectation(obs, mat, imag_tol: float = 1e-8) -> float:
    """Re Tr(O M); complains if the imaginary residual is large."""
    o = obs.matrix if isinstance(obs, Observable) else np.asarray(obs, dtype=complex)
    mat = np.asarray(mat, dtype=complex)
    if o.shape != mat.shape:
        raise ObservableError("expectation arguments have mismatched dimensions")
    val = complex(np.trace(o @ mat))
    if abs(val.imag) > imag_tol * max(1.0, abs(val.real)):
        raise ObservableError(f"expectation has imaginary residual {val.imag:.2e}")
    return val.real
