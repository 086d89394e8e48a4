"""Finite generator/arrow models of CFK-infinity over GF(2).

A generator x sits on the diagonal j - i = A(x). An arrow x -> y with u-power a
is the component of the differential from [x, i, j] to [y, i - a, j - b], where
the vertical drop b = A(x) - A(y) + a is derived from the gradings.
"""
from __future__ import annotations

import json
from collections import Counter, defaultdict
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from f2linalg import BitMatrix, homology_rank, inverse, is_invertible, rank


class CfkError(ValueError):
    pass


class ParseError(CfkError):
    pass


class InvariantViolation(CfkError):
    def __init__(self, invariant: str, subject: str, detail: str = ""):
        self.invariant = invariant
        self.subject = subject
        super().__init__(f"{invariant} violated at {subject}" + (f": {detail}" if detail else ""))


class EmptyComplex(CfkError):
    pass


class FlipUnavailable(CfkError):
    pass


FLIP_KINDS = ("involution", "explicit", "identity")
SLICE_OPS = ("all", "=", "<", ">=", ">")


@dataclass(frozen=True)
class Generator:
    id: str
    alexander: int
    maslov: int


@dataclass(frozen=True)
class Arrow:
    source: str
    target: str
    u_power: int


@dataclass(frozen=True)
class Flip:
    kind: str
    mapping: Optional[Dict[str, str]] = None
    matrix: Optional[BitMatrix] = None


@dataclass(frozen=True)
class CfkModel:
    name: str
    generators: Tuple[Generator, ...]
    arrows: Tuple[Arrow, ...]
    flip: Flip = field(default_factory=lambda: Flip("identity"))

    @property
    def ids(self) -> List[str]:
        return [g.id for g in self.generators]

    def index(self) -> Dict[str, int]:
        return {g.id: k for k, g in enumerate(self.generators)}

    def alexander(self, gid: str) -> int:
        return self._by_id()[gid].alexander

    def maslov(self, gid: str) -> int:
        return self._by_id()[gid].maslov

    def _by_id(self) -> Dict[str, Generator]:
        return {g.id: g for g in self.generators}

    def drops(self, arrow: Arrow) -> Tuple[int, int]:
        gens = self._by_id()
        b = gens[arrow.source].alexander - gens[arrow.target].alexander + arrow.u_power
        return arrow.u_power, b

    def flip_matrix(self) -> BitMatrix:
        """The flip C{j=0} -> C{i=0} as a matrix over generators (columns -> rows)."""
        n = len(self.generators)
        if self.flip.kind == "identity":
            return BitMatrix.identity(n)
        if self.flip.kind == "explicit":
            return self.flip.matrix
        index = self.index()
        arr = np.zeros((n, n), dtype=np.uint8)
        for src, dst in self.flip.mapping.items():
            arr[index[dst], index[src]] = 1
        return BitMatrix.from_array(arr.reshape(n, n))


@dataclass(frozen=True)
class GradedComplex:
    ids: Tuple[str, ...]
    gradings: Tuple[int, ...]
    differential: BitMatrix

    @property
    def dim(self) -> int:
        return len(self.ids)

    def is_complex(self) -> bool:
        return (self.differential @ self.differential).is_zero()

    def homology_rank(self) -> int:
        return homology_rank(self.differential)


@dataclass(frozen=True)
class ChainMap:
    source: GradedComplex
    target: GradedComplex
    matrix: BitMatrix

    def is_chain_map(self) -> bool:
        left = self.matrix @ self.source.differential
        right = self.target.differential @ self.matrix
        return left == right

    def rank(self) -> int:
        return rank(self.matrix)


# --------------------------------------------------------------
# parsing and validation
# --------------------------------------------------------------
def _require(payload: Dict[str, Any], key: str, kind: type, where: str) -> Any:
    if key not in payload:
        raise ParseError(f"{where}: missing '{key}'")
    value = payload[key]
    if kind is int and (isinstance(value, bool) or not isinstance(value, int)):
        raise ParseError(f"{where}: '{key}' must be an integer")
    if kind is not int and not isinstance(value, kind):
        raise ParseError(f"{where}: '{key}' must be {kind.__name__}")
    return value


def model_from_dict(payload: Any) -> CfkModel:
    if not isinstance(payload, dict):
        raise ParseError("model document must be an object")
    name = str(_require(payload, "name", str, "model"))
    generators = []
    for k, item in enumerate(_require(payload, "generators", list, name)):
        if not isinstance(item, dict):
            raise ParseError(f"{name}: generator #{k} must be an object")
        where = f"{name}: generator #{k}"
        generators.append(
            Generator(
                id=str(_require(item, "id", str, where)),
                alexander=_require(item, "alexander", int, where),
                maslov=_require(item, "maslov", int, where),
            )
        )
    arrows = []
    for k, item in enumerate(payload.get("arrows") or []):
        if not isinstance(item, dict):
            raise ParseError(f"{name}: arrow #{k} must be an object")
        where = f"{name}: arrow #{k}"
        arrows.append(
            Arrow(
                source=str(_require(item, "from", str, where)),
                target=str(_require(item, "to", str, where)),
                u_power=_require(item, "u_power", int, where),
            )
        )
    flip_payload = payload.get("flip") or {"kind": "identity"}
    if not isinstance(flip_payload, dict):
        raise ParseError(f"{name}: flip must be an object")
    kind = str(flip_payload.get("kind") or "")
    if kind not in FLIP_KINDS:
        raise ParseError(f"{name}: unknown flip kind '{kind}'")
    if kind == "involution":
        mapping = _require(flip_payload, "map", dict, f"{name}: flip")
        flip = Flip(kind, mapping={str(k): str(v) for k, v in mapping.items()})
    elif kind == "explicit":
        rows = _require(flip_payload, "matrix", list, f"{name}: flip")
        try:
            flip = Flip(kind, matrix=BitMatrix.from_array(rows if rows else np.zeros((0, 0))))
        except ValueError as exc:
            raise ParseError(f"{name}: flip matrix {exc}") from exc
    else:
        flip = Flip(kind)
    return CfkModel(name=name, generators=tuple(generators), arrows=tuple(arrows), flip=flip)


def model_to_dict(c: CfkModel) -> Dict[str, Any]:
    flip: Dict[str, Any] = {"kind": c.flip.kind}
    if c.flip.kind == "involution":
        flip["map"] = dict(sorted(c.flip.mapping.items()))
    elif c.flip.kind == "explicit":
        flip["matrix"] = c.flip.matrix.to_lists()
    return {
        "name": c.name,
        "generators": [{"id": g.id, "alexander": g.alexander, "maslov": g.maslov} for g in c.generators],
        "arrows": [
            {"from": a.source, "to": a.target, "u_power": a.u_power}
            for a in sorted(c.arrows, key=lambda a: (a.source, a.target))
        ],
        "flip": flip,
    }


def validate(c: CfkModel) -> CfkModel:
    ids = c.ids
    duplicates = [gid for gid, count in Counter(ids).items() if count > 1]
    if duplicates:
        raise InvariantViolation("unique_ids", duplicates[0])
    gens = {g.id: g for g in c.generators}

    seen = set()
    for arrow in c.arrows:
        label = f"{arrow.source}->{arrow.target}"
        for end in (arrow.source, arrow.target):
            if end not in gens:
                raise InvariantViolation("arrow_endpoints", label, f"unknown generator '{end}'")
        if (arrow.source, arrow.target) in seen:
            raise InvariantViolation("duplicate_arrow", label)
        seen.add((arrow.source, arrow.target))
        a, b = c.drops(arrow)
        if a < 0 or b < 0:
            raise InvariantViolation("nonnegative_drops", label, f"(a,b)=({a},{b})")
        expected = gens[arrow.source].maslov - 1 + 2 * a
        if gens[arrow.target].maslov != expected:
            raise InvariantViolation(
                "maslov_constraint", label, f"M({arrow.target})={gens[arrow.target].maslov}, expected {expected}"
            )

    paths: Counter = Counter()
    outgoing: Dict[str, List[Arrow]] = defaultdict(list)
    for arrow in c.arrows:
        outgoing[arrow.source].append(arrow)
    for first in c.arrows:
        for second in outgoing[first.target]:
            paths[(first.source, second.target, first.u_power + second.u_power)] += 1
    for (x, z, t), count in sorted(paths.items()):
        if count % 2:
            raise InvariantViolation("d_squared_zero", f"{x}->{z}", f"{count} paths at u-power {t}")

    _validate_flip(c, gens)
    return c


def _validate_flip(c: CfkModel, gens: Dict[str, Generator]) -> None:
    n = len(c.generators)
    if c.flip.kind == "explicit":
        m = c.flip.matrix
        if m.shape != (n, n):
            raise InvariantViolation("flip_shape", c.name, f"{m.shape} for {n} generators")
        if not is_invertible(m):
            raise InvariantViolation("flip_invertible", c.name)
        return
    if c.flip.kind != "involution":
        return
    iota = c.flip.mapping
    for gid in gens:
        if gid not in iota or iota[gid] not in gens:
            raise InvariantViolation("flip_involution", gid, "missing or unknown image")
        if iota[iota[gid]] != gid:
            raise InvariantViolation("flip_involution", gid, "map is not an involution")
        if gens[iota[gid]].alexander != -gens[gid].alexander:
            raise InvariantViolation("flip_symmetry", gid, "A(flip x) != -A(x)")
    present = {(a.source, a.target, a.u_power) for a in c.arrows}
    for arrow in c.arrows:
        _, b = c.drops(arrow)
        if (iota[arrow.source], iota[arrow.target], b) not in present:
            raise InvariantViolation("flip_arrows", f"{arrow.source}->{arrow.target}", "swapped image missing")


def parse_and_validate(text: str) -> CfkModel:
    try:
        payload = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"invalid model document: {exc}") from exc
    return validate(model_from_dict(payload))


def load_model(path: str | Path) -> CfkModel:
    with open(path, "r", encoding="utf-8") as fp:
        return parse_and_validate(fp.read())


# --------------------------------------------------------------
# reduction and mirroring
# --------------------------------------------------------------
def _first_trivial_arrow(arrows: Dict[Tuple[str, str], int], alex: Dict[str, int]) -> Optional[Tuple[str, str]]:
    candidates = [key for key, a in arrows.items() if a == 0 and alex[key[0]] == alex[key[1]]]
    return min(candidates) if candidates else None


def _transport_flip(
    flip: BitMatrix,
    order: List[str],
    arrows: Dict[Tuple[str, str], int],
    alex: Dict[str, int],
    x: str,
    y: str,
) -> BitMatrix:
    # f_B . F . g_H with the cancellation data of the vertical and horizontal complexes
    index = {gid: k for k, gid in enumerate(order)}
    kept = [gid for gid in order if gid not in (x, y)]
    n, m = len(order), len(kept)
    g = np.zeros((n, m), dtype=np.uint8)
    f = np.zeros((m, n), dtype=np.uint8)
    for k, w in enumerate(kept):
        g[index[w], k] = 1
        f[k, index[w]] = 1
        a = arrows.get((w, y))
        if a is not None and alex[w] - alex[y] + a == 0:
            g[index[x], k] ^= 1
        if arrows.get((x, w)) == 0:
            f[k, index[y]] ^= 1
    return BitMatrix.from_array(f.reshape(m, n)) @ flip @ BitMatrix.from_array(g.reshape(n, m))


def _as_involution(matrix: BitMatrix, order: List[str]) -> Optional[Dict[str, str]]:
    arr = matrix.to_array()
    if arr.size and not (arr.sum(axis=0) == 1).all():
        return None
    mapping = {order[j]: order[int(np.flatnonzero(arr[:, j])[0])] for j in range(len(order))}
    if any(mapping[mapping[gid]] != gid for gid in mapping):
        return None
    return mapping


def reduce_model(c: CfkModel) -> CfkModel:
    """Cancel (0,0) arrows, lexicographically first each time, until none remain."""
    alex = {g.id: g.alexander for g in c.generators}
    order = c.ids
    arrows: Dict[Tuple[str, str], int] = {(a.source, a.target): a.u_power for a in c.arrows}
    flip = c.flip_matrix()
    cancelled = 0
    while True:
        pair = _first_trivial_arrow(arrows, alex)
        if pair is None:
            break
        x, y = pair
        flip = _transport_flip(flip, order, arrows, alex, x, y)
        into_y = [(z, a) for (z, t), a in arrows.items() if t == y and z != x]
        out_x = [(w, a) for (s, w), a in arrows.items() if s == x and w != y]
        arrows = {key: a for key, a in arrows.items() if x not in key and y not in key}
        for z, a1 in into_y:
            for w, a2 in out_x:
                if (z, w) in arrows:
                    del arrows[(z, w)]
                else:
                    arrows[(z, w)] = a1 + a2
        order = [gid for gid in order if gid not in (x, y)]
        cancelled += 1
    if not cancelled:
        return c

    if c.flip.kind == "identity":
        new_flip = Flip("identity")
    else:
        mapping = _as_involution(flip, order) if c.flip.kind == "involution" else None
        new_flip = Flip("involution", mapping=mapping) if mapping is not None else Flip("explicit", matrix=flip)
    kept = set(order)
    return CfkModel(
        name=c.name,
        generators=tuple(g for g in c.generators if g.id in kept),
        arrows=tuple(Arrow(s, t, a) for (s, t), a in sorted(arrows.items())),
        flip=new_flip,
    )


def is_reduced(c: CfkModel) -> bool:
    return all(c.drops(a) != (0, 0) for a in c.arrows)


def mirror(c: CfkModel) -> CfkModel:
    """Dual complex: arrows reversed, gradings negated, drops kept."""
    if c.flip.kind == "explicit":
        flip = Flip("explicit", matrix=inverse(c.flip.matrix).transpose())
    else:
        flip = c.flip
    return CfkModel(
        name=f"mirror({c.name})" if not c.name.startswith("mirror(") else c.name[len("mirror("):-1],
        generators=tuple(Generator(g.id, -g.alexander, -g.maslov) for g in c.generators),
        arrows=tuple(Arrow(a.target, a.source, a.u_power) for a in c.arrows),
        flip=flip,
    )


# --------------------------------------------------------------
# rank invariants
# --------------------------------------------------------------
def genus(c: CfkModel) -> int:
    reduced = reduce_model(c)
    if not reduced.generators:
        raise EmptyComplex(f"{c.name}: reduction leaves no generators")
    return max(abs(g.alexander) for g in reduced.generators)


def hfk_ranks(c: CfkModel) -> Dict[int, int]:
    counts = Counter(g.alexander for g in reduce_model(c).generators)
    return {s: counts[s] for s in sorted(counts)}


def hf_rank(c: CfkModel) -> int:
    return b_slice(c, "all").homology_rank()


def _slice_test(op: str, s: int) -> Callable[[int], bool]:
    tests = {
        "all": lambda j: True,
        "=": lambda j: j == s,
        "<": lambda j: j < s,
        "<=": lambda j: j <= s,
        ">=": lambda j: j >= s,
        ">": lambda j: j > s,
    }
    if op not in tests:
        raise CfkError(f"unknown slice predicate '{op}'")
    return tests[op]


def _complex_on(c: CfkModel, members: Sequence[str], place: Dict[str, Tuple[int, int]], grading: Dict[str, int]) -> GradedComplex:
    index = {gid: k for k, gid in enumerate(members)}
    n = len(members)
    arr = np.zeros((n, n), dtype=np.uint8)
    for arrow in c.arrows:
        if arrow.source not in index or arrow.target not in index:
            continue
        a, b = c.drops(arrow)
        i, j = place[arrow.source]
        if (i - a, j - b) == place[arrow.target]:
            arr[index[arrow.target], index[arrow.source]] ^= 1
    return GradedComplex(
        ids=tuple(members),
        gradings=tuple(grading[gid] for gid in members),
        differential=BitMatrix.from_array(arr.reshape(n, n)),
    )


def b_slice(c: CfkModel, op: str = "all", s: int = 0) -> GradedComplex:
    """Span of B = C{i=0} generators whose grading j = A(x) satisfies the predicate."""
    test = _slice_test(op, s)
    members = [g.id for g in c.generators if test(g.alexander)]
    place = {g.id: (0, g.alexander) for g in c.generators}
    return _complex_on(c, members, place, {g.id: g.alexander for g in c.generators})


def a_placement(c: CfkModel, t: int) -> Dict[str, Tuple[int, int]]:
    return {
        g.id: (0, g.alexander) if g.alexander <= t else (t - g.alexander, t)
        for g in c.generators
    }


def build_A(c: CfkModel, t: int) -> GradedComplex:
    place = a_placement(c, t)
    return _complex_on(c, c.ids, place, {gid: ij[1] for gid, ij in place.items()})


def edge_maps(c: CfkModel, t: int) -> Tuple[ChainMap, ChainMap]:
    source = build_A(c, t)
    target = b_slice(c, "all")
    n = len(c.generators)
    alex = [g.alexander for g in c.generators]

    v = np.zeros((n, n), dtype=np.uint8)
    for k in range(n):
        if alex[k] <= t:
            v[k, k] = 1
    flip = c.flip_matrix().to_array()
    h = np.zeros((n, n), dtype=np.uint8)
    for k in range(n):
        if alex[k] >= t:
            h[:, k] = flip[:, k]

    v_map = ChainMap(source, target, BitMatrix.from_array(v.reshape(n, n)))
    h_map = ChainMap(source, target, BitMatrix.from_array(h.reshape(n, n)))
    if not v_map.is_chain_map():
        raise InvariantViolation("chain_map_v", f"{c.name} t={t}")
    if not h_map.is_chain_map():
        raise FlipUnavailable(f"{c.name}: flip kind '{c.flip.kind}' does not induce a chain map h at t={t}")
    return v_map, h_map
