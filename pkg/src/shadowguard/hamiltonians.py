"""Pauli-string algebra and the model Hamiltonians used in the experiments.

Models: Heisenberg XXX with a z field on an arbitrary graph (open chain,
ring, random regular graph), the SYK model through a Jordan-Wigner map, and
the classical Ising chain.
"""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np
import scipy.sparse

CANON_TOL = 1e-12

# (a, b) -> (phase, product) for single-qubit Paulis a*b
_PAULI_TABLE = {
    ("X", "X"): (1, ""), ("Y", "Y"): (1, ""), ("Z", "Z"): (1, ""),
    ("X", "Y"): (1j, "Z"), ("Y", "X"): (-1j, "Z"),
    ("Y", "Z"): (1j, "X"), ("Z", "Y"): (-1j, "X"),
    ("Z", "X"): (1j, "Y"), ("X", "Z"): (-1j, "Y"),
}


class HermiticityError(ValueError):
    """A canonical coefficient has a non-negligible imaginary part."""


@dataclass(frozen=True)
class PauliTerm:
    """coefficient * (tensor product of Paulis on ``support``).

    ``support`` is a tuple of ``(qubit, "X"|"Y"|"Z")`` pairs sorted by qubit;
    the empty tuple is the identity.
    """

    coefficient: complex
    support: tuple[tuple[int, str], ...] = ()

    def __post_init__(self):
        items = sorted((int(q), str(p).upper()) for q, p in self.support)
        qubits = [q for q, _ in items]
        if len(set(qubits)) != len(qubits):
            raise ValueError(f"repeated qubit in support {items}")
        if any(p not in "XYZ" or len(p) != 1 for _, p in items):
            raise ValueError(f"invalid Pauli label in {items}")
        if qubits and qubits[0] < 0:
            raise ValueError("qubit indices must be non-negative")
        object.__setattr__(self, "support", tuple(items))
        object.__setattr__(self, "coefficient", complex(self.coefficient))

    @classmethod
    def from_string(cls, label: str, coefficient: complex = 1.0) -> PauliTerm:
        """Parse labels such as ``"X0 Z3"``; an empty string is the identity."""
        support = []
        for tok in label.split():
            support.append((int(tok[1:]), tok[0]))
        return cls(coefficient, tuple(support))

    @property
    def label(self) -> str:
        return " ".join(f"{p}{q}" for q, p in self.support)

    @property
    def weight(self) -> int:
        return len(self.support)

    def paulis(self) -> dict[int, str]:
        return dict(self.support)

    def __mul__(self, other):
        if isinstance(other, PauliTerm):
            return pauli_multiply(self, other)
        return PauliTerm(self.coefficient * other, self.support)

    __rmul__ = __mul__

    def masks(self) -> tuple[int, int, int]:
        """(x_mask, y_mask, z_mask) bit masks of the support."""
        x = y = z = 0
        for q, p in self.support:
            if p == "X":
                x |= 1 << q
            elif p == "Y":
                y |= 1 << q
            else:
                z |= 1 << q
        return x, y, z


def pauli_multiply(a: PauliTerm, b: PauliTerm) -> PauliTerm:
    coef = a.coefficient * b.coefficient
    ops = dict(a.support)
    for q, p in b.support:
        if q not in ops:
            ops[q] = p
            continue
        phase, prod = _PAULI_TABLE[(ops[q], p)]
        coef *= phase
        if prod:
            ops[q] = prod
        else:
            del ops[q]
    return PauliTerm(coef, tuple(ops.items()))


@dataclass(frozen=True)
class ObservableSum:
    """Sum of Pauli terms, canonicalized on construction.

    Terms with equal support are merged and (near-)zero terms dropped. Use
    ``ObservableSum.raw`` to skip canonicalization (only useful for testing
    the Hermiticity check).
    """

    terms: tuple[PauliTerm, ...] = ()
    _canonical: bool = field(default=True, repr=False, compare=False)

    def __post_init__(self):
        if self._canonical:
            object.__setattr__(self, "terms", _canonicalize(self.terms))
        else:
            object.__setattr__(self, "terms", tuple(self.terms))

    @classmethod
    def raw(cls, terms: Iterable[PauliTerm]) -> ObservableSum:
        return cls(tuple(terms), _canonical=False)

    @property
    def locality(self) -> int:
        return max((t.weight for t in self.terms), default=0)

    @property
    def n_terms(self) -> int:
        return len(self.terms)

    def min_qubits(self) -> int:
        return max((t.support[-1][0] + 1 for t in self.terms if t.support), default=0)

    def non_identity_terms(self) -> list[PauliTerm]:
        return [t for t in self.terms if t.support]

    def identity_offset(self) -> float:
        return sum(t.coefficient.real for t in self.terms if not t.support)

    def check_hermitian(self, tol: float = CANON_TOL) -> None:
        for t in _canonicalize(self.terms, check=False):
            if abs(t.coefficient.imag) > tol:
                raise HermiticityError(
                    f"term {t.label or 'I'} has imaginary coefficient {t.coefficient}")

    def __add__(self, other: ObservableSum) -> ObservableSum:
        return ObservableSum(self.terms + other.terms)

    def scaled(self, factor: float) -> ObservableSum:
        return ObservableSum(tuple(t * factor for t in self.terms))

    def to_sparse(self, n: int) -> scipy.sparse.csr_matrix:
        """Matrix in the little-endian computational basis."""
        if self.min_qubits() > n:
            raise ValueError(f"observable needs {self.min_qubits()} qubits, got {n}")
        dim = 1 << n
        idx = np.arange(dim, dtype=np.int64)
        rows, cols, data = [], [], []
        for t in self.terms:
            x, y, z = t.masks()
            flip = x | y
            parity = _popcount(idx & (y | z)) & 1
            phase = (1j) ** bin(y).count("1")
            rows.append(idx ^ flip)
            cols.append(idx)
            data.append(t.coefficient * phase * (1.0 - 2.0 * parity))
        if not rows:
            return scipy.sparse.csr_matrix((dim, dim), dtype=np.complex128)
        mat = scipy.sparse.coo_matrix(
            (np.concatenate(data), (np.concatenate(rows), np.concatenate(cols))), shape=(dim, dim))
        return mat.tocsr()

    def to_dense(self, n: int) -> np.ndarray:
        return self.to_sparse(n).toarray()

    def to_json(self) -> list[dict]:
        out = []
        for t in self.terms:
            c = t.coefficient
            coef = c.real if c.imag == 0 else [c.real, c.imag]
            out.append({"coefficient": coef, "pauli": t.label})
        return out

    @classmethod
    def from_json(cls, data: list[dict] | str) -> ObservableSum:
        if isinstance(data, str):
            data = json.loads(data)
        terms = []
        for item in data:
            c = item["coefficient"]
            coef = complex(c[0], c[1]) if isinstance(c, list) else complex(c)
            terms.append(PauliTerm.from_string(item["pauli"], coef))
        return cls(tuple(terms))


def _popcount(a: np.ndarray) -> np.ndarray:
    if hasattr(np, "bitwise_count"):
        return np.bitwise_count(a).astype(np.int64)
    out = np.zeros_like(a)
    a = a.copy()
    while np.any(a):
        out += a & 1
        a >>= 1
    return out


def _canonicalize(terms: Iterable[PauliTerm], check: bool = True) -> tuple[PauliTerm, ...]:
    merged: dict[tuple, complex] = {}
    for t in terms:
        merged[t.support] = merged.get(t.support, 0j) + t.coefficient
    out = []
    for support in sorted(merged, key=lambda s: (len(s), s)):
        c = merged[support]
        if abs(c) < CANON_TOL:
            continue
        if check:
            if abs(c.imag) >= CANON_TOL:
                raise HermiticityError(f"term {support} has imaginary coefficient {c}")
            c = complex(c.real, 0.0)
        out.append(PauliTerm(c, support))
    return tuple(out)


# -- graphs ------------------------------------------------------------------

@dataclass(frozen=True)
class Graph:
    n_vertices: int
    edges: tuple[tuple[int, int], ...]

    def __post_init__(self):
        edges = tuple(sorted(tuple(sorted((int(a), int(b)))) for a, b in self.edges))
        for a, b in edges:
            if a == b:
                raise ValueError(f"self-loop on vertex {a}")
            if not 0 <= a < b < self.n_vertices:
                raise ValueError(f"edge ({a}, {b}) outside vertex range")
        if len(set(edges)) != len(edges):
            raise ValueError("duplicate edge")
        object.__setattr__(self, "edges", edges)

    def degrees(self) -> np.ndarray:
        deg = np.zeros(self.n_vertices, dtype=int)
        for a, b in self.edges:
            deg[a] += 1
            deg[b] += 1
        return deg

    def to_json(self) -> dict:
        return {"n_vertices": self.n_vertices, "edges": [list(e) for e in self.edges]}

    @classmethod
    def from_json(cls, data: Mapping) -> Graph:
        return cls(int(data["n_vertices"]), tuple(tuple(e) for e in data["edges"]))


def chain_graph(n: int) -> Graph:
    """Open chain 0-1-...-(n-1)."""
    return Graph(n, tuple((i, i + 1) for i in range(n - 1)))


def ring_graph(n: int) -> Graph:
    """Periodic chain; for n = 2 the two bonds coincide and appear once."""
    if n < 2:
        raise ValueError("a ring needs at least two vertices")
    edges = {tuple(sorted((i, (i + 1) % n))) for i in range(n)}
    return Graph(n, tuple(edges))


def random_regular_graph(n: int, degree: int = 3, rng: np.random.Generator | None = None,
                         max_tries: int = 10_000) -> Graph:
    """Uniform-ish simple d-regular graph from the pairing model.

    Stubs are matched by a random permutation; a matching containing a
    self-loop or a repeated edge is discarded and redrawn from scratch.
    """
    if (n * degree) % 2 or not 0 <= degree < n:
        raise ValueError(f"no simple {degree}-regular graph on {n} vertices")
    rng = np.random.default_rng() if rng is None else rng
    stubs = np.repeat(np.arange(n), degree)
    for _ in range(max_tries):
        pairs = rng.permutation(stubs).reshape(-1, 2)
        if np.any(pairs[:, 0] == pairs[:, 1]):
            continue
        edges = {tuple(sorted(map(int, p))) for p in pairs}
        if len(edges) == len(pairs):
            return Graph(n, tuple(edges))
    raise RuntimeError("pairing model failed to produce a simple graph")


# -- models ------------------------------------------------------------------

def heisenberg_graph(graph: Graph, J: float = 1.0, h_z: float = 1.0) -> ObservableSum:
    """J * sum_edges (ZZ + YY + XX) + h_z * sum_i Z_i; each edge counted once."""
    terms = []
    for a, b in graph.edges:
        for p in "XYZ":
            terms.append(PauliTerm(J, ((a, p), (b, p))))
    for i in range(graph.n_vertices):
        terms.append(PauliTerm(h_z, ((i, "Z"),)))
    return ObservableSum(tuple(terms))


def heisenberg_chain(n: int, J: float = 1.0, h_z: float = 1.0, periodic: bool = False) -> ObservableSum:
    return heisenberg_graph(ring_graph(n) if periodic else chain_graph(n), J, h_z)


def ising_chain(n: int, J: float = 1.0) -> ObservableSum:
    """-J * sum_{i<n-1} Z_i Z_{i+1} on an open chain."""
    if n < 2:
        raise ValueError("Ising chain needs n >= 2")
    return ObservableSum(tuple(PauliTerm(-J, ((i, "Z"), (i + 1, "Z"))) for i in range(n - 1)))


def majorana(index: int, n_qubits: int) -> PauliTerm:
    """Jordan-Wigner Majorana chi_index for index in 1..2n.

    chi_{2i-1} = X_1..X_{i-1} Z_i / sqrt2 and chi_{2i} = X_1..X_{i-1} Y_i / sqrt2
    with 1-based site i living on qubit i-1.
    """
    if not 1 <= index <= 2 * n_qubits:
        raise ValueError(f"Majorana index must be in [1, {2 * n_qubits}]")
    site = (index + 1) // 2
    last = "Z" if index % 2 else "Y"
    support = tuple((q, "X") for q in range(site - 1)) + ((site - 1, last),)
    return PauliTerm(1 / math.sqrt(2), support)


def syk_coupling_variance(n_qubits: int, J: float = 1.0) -> float:
    """3! J^2 / ((N-3)(N-2)(N-1)) with N = 2 n_qubits Majoranas."""
    N = 2 * n_qubits
    return 6.0 * J * J / ((N - 3) * (N - 2) * (N - 1))


def sample_syk_couplings(n_qubits: int, J: float, rng: np.random.Generator) -> dict[tuple[int, ...], float]:
    """Gaussian couplings for every strictly increasing 4-tuple of Majoranas (1-based)."""
    if n_qubits < 3:
        raise ValueError("SYK needs at least 3 qubits")
    quads = list(itertools.combinations(range(1, 2 * n_qubits + 1), 4))
    values = rng.normal(0.0, math.sqrt(syk_coupling_variance(n_qubits, J)), size=len(quads))
    return dict(zip(quads, values.tolist()))


def syk_from_couplings(n_qubits: int, couplings: Mapping[Sequence[int], float]) -> ObservableSum:
    chis = [majorana(i, n_qubits) for i in range(1, 2 * n_qubits + 1)]
    terms = []
    for quad, value in couplings.items():
        if value == 0:
            continue
        i, j, k, l = quad
        prod = chis[i - 1] * chis[j - 1] * chis[k - 1] * chis[l - 1]
        terms.append(prod * value)
    try:
        return ObservableSum(tuple(terms))
    except HermiticityError as exc:  # pragma: no cover - signals a phase bug
        raise RuntimeError(f"SYK expansion is not Hermitian: {exc}") from exc


def syk_hamiltonian(n_qubits: int, J: float = 1.0, rng: np.random.Generator | None = None) -> ObservableSum:
    rng = np.random.default_rng() if rng is None else rng
    return syk_from_couplings(n_qubits, sample_syk_couplings(n_qubits, J, rng))
