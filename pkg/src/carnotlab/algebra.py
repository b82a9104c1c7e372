"""Graded nilpotent Lie algebras with exact rational structure constants.

Free algebras are built on the Lyndon basis (layer by layer, lex order within
a layer); arbitrary stratified quotients can be loaded from a spec file and
are validated against antisymmetry, Jacobi and the grading before acceptance.

Scalars are either ``Fraction`` (exact mode) or ``float`` (numeric mode); a
value knows its mode and the two never mix silently.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations

from . import linalg
from .words import HallWord, Tree, lyndon_words, parse_text, tree_degree, tree_text

DEFAULT_MAX_DIM = 64


class AlgebraError(ValueError):
    """Invalid algebra construction or use."""


class CapacityError(AlgebraError):
    """Requested algebra exceeds the configured maximum dimension."""


class StructureError(AlgebraError):
    """Structure table violates antisymmetry, Jacobi or the grading."""


class ModeError(AlgebraError):
    """Exact and float scalars mixed in one operation."""


def _is_exact(x) -> bool:
    return isinstance(x, (Fraction, int))


def scalar_mode(values) -> bool:
    """True for exact mode.  Raises on a mix of Fractions and floats."""
    exact = None
    for v in values:
        this = _is_exact(v)
        if exact is None:
            exact = this
        elif exact != this:
            raise ModeError("exact and float scalars mixed; convert explicitly")
    return True if exact is None else exact


def _expand_tree(tree: Tree) -> dict[tuple[int, ...], Fraction]:
    """Tensor-word expansion of a bracket tree ([a,b] -> ab - ba)."""
    if isinstance(tree, int):
        return {(tree,): Fraction(1)}
    left = _expand_tree(tree[0])
    right = _expand_tree(tree[1])
    out: dict[tuple[int, ...], Fraction] = {}
    for wa, ca in left.items():
        for wb, cb in right.items():
            c = ca * cb
            out[wa + wb] = out.get(wa + wb, Fraction(0)) + c
            out[wb + wa] = out.get(wb + wa, Fraction(0)) - c
    return {w: c for w, c in out.items() if c != 0}


@dataclass(frozen=True)
class GradedAlgebraSpec:
    """Immutable stratified Lie algebra: basis words per layer + bracket table."""

    rank: int
    step: int
    layers: tuple[tuple[HallWord, ...], ...]
    structure: dict  # (i, j) with i < j -> {k: Fraction}, basis indices
    is_free: bool

    _index: dict = field(default_factory=dict, compare=False, repr=False)
    _tensor: dict = field(default_factory=dict, compare=False, repr=False)
    _cache: dict = field(default_factory=dict, compare=False, repr=False)

    def __post_init__(self):
        idx = {}
        for words in self.layers:
            for w in words:
                idx[w.text] = len(idx)
        object.__setattr__(self, "_index", idx)

    # -- basic queries ---------------------------------------------------
    @property
    def dim(self) -> int:
        return sum(len(words) for words in self.layers)

    @property
    def layer_dims(self) -> list[int]:
        return [len(words) for words in self.layers]

    @property
    def basis(self) -> list[HallWord]:
        return [w for words in self.layers for w in words]

    def index_of(self, text: str) -> int:
        try:
            return self._index[text]
        except KeyError:
            raise AlgebraError(f"{text!r} is not a basis word") from None

    def layer_of_index(self, k: int) -> int:
        acc = 0
        for layer, words in enumerate(self.layers, start=1):
            acc += len(words)
            if k < acc:
                return layer
        raise AlgebraError(f"basis index {k} out of range")

    def layer_slice(self, layer: int) -> tuple[int, int]:
        start = sum(len(w) for w in self.layers[: layer - 1])
        return start, start + len(self.layers[layer - 1])

    # -- vectors ----------------------------------------------------------
    def zero(self) -> "LieVector":
        return LieVector(self, (Fraction(0),) * self.dim)

    def basis_vector(self, k_or_text) -> "LieVector":
        k = k_or_text if isinstance(k_or_text, int) else self.index_of(k_or_text)
        coords = [Fraction(0)] * self.dim
        coords[k] = Fraction(1)
        return LieVector(self, tuple(coords))

    def generator(self, i: int) -> "LieVector":
        if not 1 <= i <= self.rank:
            raise AlgebraError(f"generator index {i} out of range 1..{self.rank}")
        return self.basis_vector(i - 1)

    def vector(self, coords) -> "LieVector":
        coords = tuple(coords)
        if len(coords) != self.dim:
            raise AlgebraError(f"expected {self.dim} coordinates, got {len(coords)}")
        scalar_mode(coords)
        return LieVector(self, coords)

    def bracket_indices(self, i: int, j: int) -> dict[int, Fraction]:
        if i == j:
            return {}
        if i < j:
            return self.structure.get((i, j), {})
        return {k: -c for k, c in self.structure.get((j, i), {}).items()}

    def word_vector(self, text: str) -> "LieVector":
        """Evaluate a bracket-word string into basis coordinates (right-nested)."""
        tree = parse_text(text, self.rank)
        return self.tree_vector(tree)

    def tree_vector(self, tree: Tree) -> "LieVector":
        if isinstance(tree, int):
            return self.generator(tree)
        if tree_degree(tree) > self.step:
            return self.zero()
        return bracket(self.tree_vector(tree[0]), self.tree_vector(tree[1]))

    def dual_covector(self, coords) -> "DualCovector":
        coords = tuple(coords)
        if len(coords) != self.dim:
            raise AlgebraError(f"expected {self.dim} coordinates, got {len(coords)}")
        scalar_mode(coords)
        return DualCovector(self, coords)

    def covector_from_words(self, table: dict) -> "DualCovector":
        """Covector with the given dual coordinates on basis words, zero elsewhere."""
        exact = scalar_mode(table.values())
        zero = Fraction(0) if exact else 0.0
        coords = [zero] * self.dim
        for text, value in table.items():
            coords[self.index_of(text)] = value
        return DualCovector(self, tuple(coords))

    # -- tensor expansions (free algebras) --------------------------------
    def basis_tensor(self, k: int) -> dict[tuple[int, ...], Fraction]:
        if not self.is_free:
            raise AlgebraError("tensor expansions exist for free algebras only")
        if k not in self._tensor:
            self._tensor[k] = _expand_tree(self.basis[k].tree)
        return self._tensor[k]


# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class LieVector:
    """Element of a graded algebra in basis coordinates."""

    algebra: GradedAlgebraSpec
    coords: tuple

    @property
    def is_exact(self) -> bool:
        return scalar_mode(self.coords)

    def _check_peer(self, other: "LieVector"):
        if self.algebra is not other.algebra:
            raise AlgebraError("vectors belong to different algebras")
        if self.is_exact != other.is_exact:
            raise ModeError("exact and float vectors mixed; convert explicitly")

    def __add__(self, other: "LieVector") -> "LieVector":
        self._check_peer(other)
        return LieVector(self.algebra, tuple(a + b for a, b in zip(self.coords, other.coords)))

    def __sub__(self, other: "LieVector") -> "LieVector":
        self._check_peer(other)
        return LieVector(self.algebra, tuple(a - b for a, b in zip(self.coords, other.coords)))

    def __neg__(self) -> "LieVector":
        return LieVector(self.algebra, tuple(-a for a in self.coords))

    def __rmul__(self, s) -> "LieVector":
        # ints are mode-neutral; Fractions demand exact, floats demand float
        if isinstance(s, float) and self.is_exact:
            raise ModeError("float scalar on exact vector; convert explicitly")
        if isinstance(s, Fraction) and not self.is_exact:
            raise ModeError("Fraction scalar on float vector; convert explicitly")
        return LieVector(self.algebra, tuple(s * a for a in self.coords))

    def __mul__(self, s) -> "LieVector":
        return self.__rmul__(s)

    def is_zero(self) -> bool:
        return all(c == 0 for c in self.coords)

    def layer_part(self, layer: int) -> "LieVector":
        lo, hi = self.algebra.layer_slice(layer)
        coords = [c * 0 for c in self.coords]
        coords[lo:hi] = self.coords[lo:hi]
        return LieVector(self.algebra, tuple(coords))

    def to_float(self) -> "LieVector":
        return LieVector(self.algebra, tuple(float(c) for c in self.coords))

    def coord(self, text: str):
        return self.coords[self.algebra.index_of(text)]


def bracket(a: LieVector, b: LieVector) -> LieVector:
    """Lie bracket via the structure table; bilinear, exact on rational input."""
    a._check_peer(b)
    alg = a.algebra
    out = [a.coords[0] * 0] * alg.dim
    for i, ca in enumerate(a.coords):
        if ca == 0:
            continue
        for j, cb in enumerate(b.coords):
            if cb == 0 or i == j:
                continue
            for k, c in alg.bracket_indices(i, j).items():
                out[k] = out[k] + ca * cb * c
    return LieVector(alg, tuple(out))


@dataclass(frozen=True)
class DualCovector:
    """Element of the dual space, coordinates on the dual basis."""

    algebra: GradedAlgebraSpec
    coords: tuple

    @property
    def is_exact(self) -> bool:
        return scalar_mode(self.coords)

    def pair(self, vec: LieVector):
        if vec.algebra is not self.algebra:
            raise AlgebraError("covector and vector belong to different algebras")
        return sum(a * b for a, b in zip(self.coords, vec.coords))

    def pair_word(self, text: str):
        """lambda_J for an arbitrary bracket word J (expanded into the basis)."""
        vec = self.algebra.word_vector(text)
        if self.is_exact != vec.is_exact:
            vec = vec if self.is_exact else vec.to_float()
        return self.pair(vec)

    def layer_part(self, layer: int) -> "DualCovector":
        lo, hi = self.algebra.layer_slice(layer)
        coords = [c * 0 for c in self.coords]
        coords[lo:hi] = self.coords[lo:hi]
        return DualCovector(self.algebra, tuple(coords))

    def layer_is_zero(self, layer: int) -> bool:
        lo, hi = self.algebra.layer_slice(layer)
        return all(c == 0 for c in self.coords[lo:hi])

    def to_float(self) -> "DualCovector":
        return DualCovector(self.algebra, tuple(float(c) for c in self.coords))

    def __rmul__(self, s) -> "DualCovector":
        return DualCovector(self.algebra, tuple(s * c for c in self.coords))

    def __add__(self, other: "DualCovector") -> "DualCovector":
        if self.algebra is not other.algebra:
            raise AlgebraError("covectors belong to different algebras")
        return DualCovector(self.algebra, tuple(a + b for a, b in zip(self.coords, other.coords)))

    def is_zero(self) -> bool:
        return all(c == 0 for c in self.coords)


# ---------------------------------------------------------------------------
# free algebra construction


def _tensor_to_basis(level: dict[tuple[int, ...], Fraction], layer_words, expansions):
    """Peel a homogeneous Lie element (tensor form) into Lyndon coordinates.

    Expansions of Lyndon brackets are triangular: the word itself carries
    coefficient 1 and every other word is lexicographically larger.
    """
    residue = dict(level)
    coords: dict[str, Fraction] = {}
    lookup = {w.foliage: w for w in layer_words}
    while residue:
        wmin = min(residue)
        c = residue.pop(wmin)
        if c == 0:
            continue
        hall = lookup.get(wmin)
        if hall is None:
            raise AlgebraError(f"tensor element is not a Lie element (leading word {wmin})")
        coords[hall.text] = coords.get(hall.text, Fraction(0)) + c
        for word, cw in expansions[hall.text].items():
            if word == wmin:
                continue
            residue[word] = residue.get(word, Fraction(0)) - c * cw
            if residue[word] == 0:
                del residue[word]
    return coords


def build_free_algebra(rank: int, step: int, max_dim: int = DEFAULT_MAX_DIM) -> GradedAlgebraSpec:
    """Free nilpotent Lie algebra of the given rank and step, Lyndon basis."""
    if rank < 1 or step < 1:
        raise AlgebraError(f"rank and step must be positive, got {rank}, {step}")
    if rank > 9:
        raise AlgebraError("single-digit generators only (rank <= 9)")
    layers = []
    total = 0
    for k in range(1, step + 1):
        words = tuple(HallWord.from_lyndon(w) for w in lyndon_words(rank, k))
        total += len(words)
        if total > max_dim:
            raise CapacityError(
                f"free({rank},{step}) needs dimension {total}+ > configured maximum {max_dim}"
            )
        layers.append(words)
    layers = tuple(layers)
    basis = [w for words in layers for w in words]
    expansions = {w.text: _expand_tree(w.tree) for w in basis}

    structure: dict[tuple[int, int], dict[int, Fraction]] = {}
    index = {w.text: k for k, w in enumerate(basis)}
    for i, j in combinations(range(len(basis)), 2):
        deg = basis[i].degree + basis[j].degree
        if deg > step:
            continue
        prod: dict[tuple[int, ...], Fraction] = {}
        for wa, ca in expansions[basis[i].text].items():
            for wb, cb in expansions[basis[j].text].items():
                c = ca * cb
                prod[wa + wb] = prod.get(wa + wb, Fraction(0)) + c
                prod[wb + wa] = prod.get(wb + wa, Fraction(0)) - c
        prod = {w: c for w, c in prod.items() if c != 0}
        coords = _tensor_to_basis(prod, layers[deg - 1], expansions)
        if coords:
            structure[(i, j)] = {index[t]: c for t, c in coords.items()}

    return GradedAlgebraSpec(rank=rank, step=step, layers=layers, structure=structure, is_free=True)


# ---------------------------------------------------------------------------
# validation and (de)serialization


def validate_structure(alg: GradedAlgebraSpec) -> None:
    """Check grading, antisymmetry (by table shape) and Jacobi on all basis triples."""
    n = alg.dim
    for (i, j), row in alg.structure.items():
        if not i < j:
            raise StructureError(f"structure table keys must have i < j, got ({i},{j})")
        deg = alg.layer_of_index(i) + alg.layer_of_index(j)
        for k, c in row.items():
            if c == 0:
                continue
            if deg > alg.step or alg.layer_of_index(k) != deg:
                wi, wj, wk = alg.basis[i].text, alg.basis[j].text, alg.basis[k].text
                raise StructureError(f"grading violated on [{wi},{wj}] -> {wk}")
    for i, j, k in combinations(range(n), 3):
        acc = [Fraction(0)] * n
        for a, b, c in ((i, j, k), (j, k, i), (k, i, j)):
            inner = alg.bracket_indices(b, c)
            for m, cm in inner.items():
                for out, co in alg.bracket_indices(a, m).items():
                    acc[out] += cm * co
        if any(x != 0 for x in acc):
            wi, wj, wk = alg.basis[i].text, alg.basis[j].text, alg.basis[k].text
            raise StructureError(f"Jacobi identity fails on triple ({wi},{wj},{wk})")
    lo, hi = alg.layer_slice(1)
    if hi - lo != alg.rank:
        raise StructureError(f"first layer must have dimension rank={alg.rank}")


def scalar_to_json(x) -> str | float:
    if isinstance(x, Fraction):
        return str(x)
    if isinstance(x, int):
        return str(Fraction(x))
    return float(x)


def scalar_from_json(x):
    if isinstance(x, str):
        return Fraction(x)
    if isinstance(x, float):
        return x
    if isinstance(x, int):
        return Fraction(x)
    raise AlgebraError(f"cannot parse scalar {x!r}")


def algebra_to_json(alg: GradedAlgebraSpec) -> dict:
    return {
        "rank": alg.rank,
        "step": alg.step,
        "layers": [[w.text for w in words] for words in alg.layers],
        "structure": [
            {
                "i": alg.basis[i].text,
                "j": alg.basis[j].text,
                "out": {alg.basis[k].text: scalar_to_json(c) for k, c in sorted(row.items())},
            }
            for (i, j), row in sorted(alg.structure.items())
        ],
        "is_free": alg.is_free,
    }


def algebra_from_json(data: dict, validate: bool = True) -> GradedAlgebraSpec:
    try:
        rank = int(data["rank"])
        step = int(data["step"])
        layer_texts = data["layers"]
        structure_rows = data["structure"]
    except (KeyError, TypeError) as exc:
        raise AlgebraError(f"malformed algebra spec: {exc}") from exc
    if len(layer_texts) != step:
        raise AlgebraError(f"expected {step} layers, got {len(layer_texts)}")
    layers = []
    for k, texts in enumerate(layer_texts, start=1):
        words = []
        for text in texts:
            hw = HallWord.from_text(text, rank)
            if hw.degree != k:
                raise AlgebraError(f"word {text!r} has degree {hw.degree}, expected {k}")
            words.append(hw)
        layers.append(tuple(words))
    alg = GradedAlgebraSpec(
        rank=rank,
        step=step,
        layers=tuple(layers),
        structure={},
        is_free=bool(data.get("is_free", False)),
    )
    index = alg._index
    structure: dict[tuple[int, int], dict[int, Fraction]] = {}
    for row in structure_rows:
        i, j = index[row["i"]], index[row["j"]]
        if i == j:
            raise StructureError(f"bracket of {row['i']} with itself must be omitted")
        entries = {index[t]: scalar_from_json(v) for t, v in row["out"].items()}
        entries = {k: v for k, v in entries.items() if v != 0}
        if not entries:
            continue
        if i < j:
            key, sign = (i, j), 1
        else:
            key, sign = (j, i), -1
        add = {k: sign * v for k, v in entries.items()}
        if key in structure and structure[key] != add:
            raise StructureError(f"conflicting entries for bracket ({row['i']},{row['j']})")
        structure[key] = add
    alg = GradedAlgebraSpec(
        rank=rank, step=step, layers=alg.layers, structure=structure, is_free=alg.is_free
    )
    if validate:
        validate_structure(alg)
    return alg


def load_algebra(path) -> GradedAlgebraSpec:
    with open(path) as fh:
        return algebra_from_json(json.load(fh))


def save_algebra(alg: GradedAlgebraSpec, path) -> None:
    with open(path, "w") as fh:
        json.dump(algebra_to_json(alg), fh, indent=2, sort_keys=True)
        fh.write("\n")
