"""Symbolic stratified controllability check for the driftless manipulation system.

On stratum ``S_I`` (robot touching the objects in ``I``) the inputs are the
robot's cartesian velocities; grasped objects move with the robot:

    x' = g1(I) u1 + g2(I) u2

``g1`` has a 1 in ``x_R`` and in ``x_Oi`` for ``i`` in ``I``; ``g2`` likewise in
the ``y`` coordinates. Rank decisions use exact rational arithmetic.
"""

from __future__ import annotations

import itertools
import random
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Iterable, Sequence

import sympy as sp
from sympy import QQ
from sympy.polys.matrices import DomainMatrix

from .strata import ContactSet


class ControllabilityError(ValueError):
    pass


@lru_cache(maxsize=None)
def variables(dim: int) -> tuple[sp.Symbol, ...]:
    return sp.symbols(f"x0:{dim}")


@dataclass(frozen=True)
class VectorField:
    components: tuple[sp.Expr, ...]

    def __post_init__(self):
        object.__setattr__(
            self, "components", tuple(sp.expand(sp.sympify(c)) for c in self.components)
        )

    @property
    def dim(self) -> int:
        return len(self.components)

    @classmethod
    def constant(cls, values: Sequence) -> "VectorField":
        return cls(tuple(sp.Rational(v) for v in values))

    def is_zero(self) -> bool:
        return all(c == 0 for c in self.components)

    def is_constant(self) -> bool:
        return not any(c.free_symbols for c in self.components)

    def at(self, point: Sequence) -> list:
        xs = variables(self.dim)
        sub = dict(zip(xs, point))
        return [c.subs(sub) if c.free_symbols else c for c in self.components]

    def __add__(self, other: "VectorField") -> "VectorField":
        return VectorField(tuple(a + b for a, b in zip(self.components, other.components)))

    def scale(self, k) -> "VectorField":
        return VectorField(tuple(k * a for a in self.components))


@dataclass(frozen=True)
class StratifiedSystem:
    ambient_dim: int
    strata: dict = field(hash=False)  # ContactSet -> (g1, g2)


@dataclass
class Distribution:
    generators: list[VectorField]
    point: tuple
    rank: int
    constant_rank: bool
    depth: int


@dataclass
class Verdict:
    controllable: bool
    total_rank: int
    ambient_dim: int
    certificate: list[list]

    def to_dict(self) -> dict:
        return {
            "controllable": self.controllable,
            "total_rank": self.total_rank,
            "ambient_dim": self.ambient_dim,
            "certificate": [[str(v) for v in row] for row in self.certificate],
        }


def _coord(k: int, axis: int) -> int:
    """Index of body k (0 = robot, i+1 = object i) along axis 0 (x) or 1 (y)."""
    return 2 * k + axis


def build_system(n: int, contacted_universe: Iterable[ContactSet]) -> StratifiedSystem:
    if n < 1:
        raise ControllabilityError("need at least one object")
    dim = 2 * (1 + n)
    strata = {}
    for cs in [ContactSet(), *contacted_universe]:
        if any(not 0 <= i < n for i in cs):
            raise ControllabilityError(f"contact set {cs.members} out of range for n={n}")
        g1 = [0] * dim
        g2 = [0] * dim
        for body in [0, *(i + 1 for i in cs)]:
            g1[_coord(body, 0)] = 1
            g2[_coord(body, 1)] = 1
        strata[cs] = (VectorField.constant(g1), VectorField.constant(g2))
    return StratifiedSystem(dim, strata)


def _jacobian(f: VectorField) -> sp.Matrix:
    return sp.Matrix(f.components).jacobian(variables(f.dim))


def lie_bracket(f: VectorField, g: VectorField) -> VectorField:
    """[f, g] = (dg/dx) f - (df/dx) g."""
    if f.dim != g.dim:
        raise ControllabilityError(f"dimension mismatch: {f.dim} vs {g.dim}")
    if f.is_constant() and g.is_constant():
        return VectorField((0,) * f.dim)
    fv = sp.Matrix(f.components)
    gv = sp.Matrix(g.components)
    out = _jacobian(g) * fv - _jacobian(f) * gv
    return VectorField(tuple(out))


def _rank_at(fields: Sequence[VectorField], point: Sequence) -> int:
    if not fields:
        return 0
    return _rank(sp.Matrix([f.at(point) for f in fields]))


def _rank(M: sp.Matrix) -> int:
    """Exact rank; rational matrices go through the faster domain arithmetic."""
    if all(e.is_Rational for e in M):
        return DomainMatrix.from_Matrix(M).convert_to(QQ).rank()
    return M.rank()


def _as_rational_point(x0, dim: int) -> tuple:
    if x0 is None:
        return tuple(sp.Integer(0) for _ in range(dim))
    if len(x0) != dim:
        raise ControllabilityError(f"point has {len(x0)} coordinates, expected {dim}")
    return tuple(sp.Rational(v) if not isinstance(v, sp.Basic) else v for v in x0)


def involutive_closure(gens: Sequence[VectorField], x0=None, samples: int = 10, seed: int = 0) -> Distribution:
    """Append Lie brackets until the rank at ``x0`` stops growing.

    Depth is capped at twice the ambient dimension. The constant-rank
    hypothesis is checked on ``samples`` perturbed points.
    """
    gens = [g for g in gens]
    if not gens:
        raise ControllabilityError("empty generator set")
    dim = gens[0].dim
    point = _as_rational_point(x0, dim)
    fields: list[VectorField] = []
    for g in gens:
        if g not in fields:
            fields.append(g)
    rank = _rank_at(fields, point)
    frontier = list(fields)
    depth = 0
    while frontier and depth < 2 * dim:
        depth += 1
        new = []
        for f in frontier:
            for g in fields:
                b = lie_bracket(f, g)
                if not b.is_zero() and b not in fields and b not in new:
                    new.append(b)
        fields.extend(new)
        new_rank = _rank_at(fields, point)
        frontier = new
        if new_rank == rank:
            break
        rank = new_rank

    rng = random.Random(seed)
    constant = True
    for _ in range(samples):
        p = tuple(c + sp.Rational(rng.randint(-1000, 1000), 1000) for c in point)
        if _rank_at(fields, p) != rank:
            constant = False
            break
    return Distribution(fields, point, rank, constant, depth)


def _normalise_sequence(sequence: Sequence[ContactSet]) -> list[ContactSet]:
    seq = sorted(sequence, key=len)
    if not seq or seq[0] != ContactSet():
        seq = [ContactSet()] + seq
    for a, b in zip(seq, seq[1:]):
        if len(b) != len(a) + 1 or not a.issubset(b):
            raise ControllabilityError(
                f"non-nested sequence: {a.members} does not precede {b.members}"
            )
    return seq


def check_stratified(
    system: StratifiedSystem,
    sequence: Sequence[ContactSet],
    x0=None,
    ambient: str = "leaf",
) -> Verdict:
    """Sum the involutive closures along a nested chain and compare the rank
    with the dimension of the declared ambient manifold.

    ``ambient="leaf"`` uses the manifold of the robot plus the deepest contact
    set's objects (dimension 2 + 2p); ``ambient="full"`` uses all of C.
    """
    seq = _normalise_sequence(sequence)
    deepest = seq[-1]
    if ambient == "leaf":
        coords = [0, 1] + [c for i in deepest for c in (_coord(i + 1, 0), _coord(i + 1, 1))]
    elif ambient == "full":
        coords = list(range(system.ambient_dim))
    else:
        raise ControllabilityError(f"unknown ambient {ambient!r}")
    point = _as_rational_point(x0, system.ambient_dim)

    rows = []
    for cs in seq:
        if cs not in system.strata:
            raise ControllabilityError(f"stratum {cs.members} missing from system")
        dist = _closure_cached(system, cs, point)
        rows.extend(f.at(point) for f in dist.generators)
    M = sp.Matrix(rows)
    outside = [c for c in range(system.ambient_dim) if c not in coords]
    tangent = all(M[:, c].is_zero_matrix for c in outside)
    rank = _rank(M)
    basis = _independent_rows(M)
    controllable = tangent and rank == len(coords)
    return Verdict(controllable, rank, len(coords), basis)


_closure_memo: dict = {}


def _closure_cached(system: StratifiedSystem, cs: ContactSet, point) -> Distribution:
    g1, g2 = system.strata[cs]
    key = (g1, g2, point)
    if key not in _closure_memo:
        _closure_memo[key] = involutive_closure([g1, g2], point)
    return _closure_memo[key]


def _independent_rows(M: sp.Matrix) -> list[list]:
    if all(e.is_Rational for e in M):
        _, pivots = DomainMatrix.from_Matrix(M.T).convert_to(QQ).rref()
    else:
        _, pivots = M.T.rref()
    return [list(M.row(i)) for i in pivots]


def enumerate_sequences(n: int, m: int) -> list[list[ContactSet]]:
    """All chains ∅ ⊂ {i1} ⊂ {i1,i2} ⊂ … of length m + 1."""
    if not 1 <= m <= n:
        raise ControllabilityError(f"need 1 <= m <= n, got m={m}, n={n}")
    chains = []
    for order in itertools.permutations(range(n), m):
        chains.append([ContactSet(tuple(sorted(order[:k]))) for k in range(m + 1)])
    return chains


def check_all(n: int, m: int, ambient: str = "leaf", x0=None) -> dict:
    """Run ``check_stratified`` on every chain of ``enumerate_sequences(n, m)``."""
    chains = enumerate_sequences(n, m)
    universe = {cs for chain in chains for cs in chain}
    system = build_system(n, universe)
    verdicts = [check_stratified(system, chain, x0, ambient) for chain in chains]
    return {
        "n": n,
        "m": m,
        "ambient": ambient,
        "controllable": all(v.controllable for v in verdicts),
        "chains": [
            {"sequence": [list(cs.members) for cs in chain], **v.to_dict()}
            for chain, v in zip(chains, verdicts)
        ],
    }
