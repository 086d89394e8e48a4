"""Combinatorial rational surgery from the four maps between H_inf, H_1 and H_0.

H_inf is the knot Floer homology of the model (the grading slices of the
reduced B). H_1 and H_0 are the homologies of the cones C_1(s) and C_0(s) of
the lower slices of B included into B. The maps phi, phibar: H_inf -> H_1 and
psi, psibar: H_1 -> H_0 feed the complex whose homology has the rank of HF-hat
of p/q surgery, and the block normal forms of these maps give the closed-form
rank bookkeeping.
"""
from __future__ import annotations

import math
import os
import sys
from dataclasses import dataclass
from typing import Any, Dict, Iterator, List, Optional, Tuple

import numpy as np

from cfk import CfkModel, GradedComplex, b_slice, genus, hfk_ranks, reduce_model
from f2linalg import (
    BitMatrix,
    HomologyBasis,
    assemble_blocks,
    complete_basis,
    homology_basis,
    inverse,
    normalize_projection,
    pivot_columns,
    projection_form,
    rank,
)
from surgery import SurgerySpec, _restriction, cone_into


class RationalError(RuntimeError):
    pass


class ValidationFailure(RationalError):
    def __init__(self, invariant: str, lhs: Any = None, rhs: Any = None, subject: str = ""):
        self.invariant = invariant
        self.lhs = lhs
        self.rhs = rhs
        where = f" ({subject})" if subject else ""
        super().__init__(f"{invariant} failed{where}: {lhs} != {rhs}")


class NoSolution(RationalError):
    pass


class NormalizationFailure(RationalError):
    pass


class IdentityMismatch(RationalError):
    def __init__(self, identity: str, lhs: int, rhs: int, context: Optional[Dict[str, Any]] = None):
        self.identity = identity
        self.lhs = lhs
        self.rhs = rhs
        self.context = context or {}
        super().__init__(f"{identity}: direct rank {lhs} != block formula {rhs}")


def _log(message: str) -> None:
    print(message, file=sys.stderr)


def search_max_bits() -> int:
    try:
        value = int(os.getenv("FLOER_SEARCH_MAX_BITS", "16"))
    except ValueError:
        value = 16
    return max(4, min(value, 22))


def random_seed() -> int:
    try:
        return int(os.getenv("FLOER_RANDOM_SEED", "20240601"))
    except ValueError:
        return 20240601


# --------------------------------------------------------------
# data types
# --------------------------------------------------------------
@dataclass(frozen=True)
class HTriple:
    h_inf: Dict[int, int]
    h_one: Dict[int, int]
    h_zero: int

    def __post_init__(self) -> None:
        for s, dim in self.h_inf.items():
            if self.h_inf.get(-s, 0) != dim:
                raise ValidationFailure("h_inf_symmetry", dim, self.h_inf.get(-s, 0), subject=f"s={s}")

    @property
    def total_inf(self) -> int:
        return sum(self.h_inf.values())

    @property
    def total_one(self) -> int:
        return sum(self.h_one.values())

    def to_dict(self) -> Dict[str, Any]:
        return {
            "h_inf": {str(s): v for s, v in sorted(self.h_inf.items())},
            "h_one": {str(s): v for s, v in sorted(self.h_one.items())},
            "h_zero": self.h_zero,
        }


@dataclass(frozen=True)
class FourMaps:
    phi: BitMatrix
    phibar: BitMatrix
    psi: BitMatrix
    psibar: BitMatrix


@dataclass(frozen=True)
class BlockForms:
    """Blocks of phibar = [[a, b], [c, d]] and psi = [[m, n], [l, k]] in the normalizing bases."""

    a: BitMatrix
    b: BitMatrix
    c: BitMatrix
    d: BitMatrix
    m: BitMatrix
    n: BitMatrix
    l: BitMatrix
    k: BitMatrix
    r_phi: int
    r_psibar: int
    basis_inf: Optional[BitMatrix] = None
    basis_one: Optional[BitMatrix] = None
    basis_zero: Optional[BitMatrix] = None

    def __post_init__(self) -> None:
        r, e, f = self.r_phi, self.d.rows, self.d.cols
        rp, g = self.r_psibar, self.l.rows
        expected = {
            "a": (r, r), "b": (r, f), "c": (e, r), "d": (e, f),
            "m": (rp, r), "n": (rp, e), "l": (g, r), "k": (g, e),
        }
        for name, shape in expected.items():
            if getattr(self, name).shape != shape:
                raise NormalizationFailure(f"block {name} has shape {getattr(self, name).shape}, expected {shape}")
        if rp != e:
            raise NormalizationFailure(f"rank psibar {rp} != dim H_1 - rank phi {e}")

    @property
    def h_inf(self) -> int:
        return self.r_phi + self.d.cols

    @property
    def h_one(self) -> int:
        return self.r_phi + self.d.rows

    @property
    def h_zero(self) -> int:
        return self.r_psibar + self.l.rows

    def phi_normal(self) -> BitMatrix:
        return projection_form(self.h_one, self.h_inf, self.r_phi)

    def phibar_normal(self) -> BitMatrix:
        return assemble_blocks(
            [(0, 0, self.a), (0, 1, self.b), (1, 0, self.c), (1, 1, self.d)],
            row_bands=[self.r_phi, self.d.rows],
            col_bands=[self.r_phi, self.d.cols],
        )

    def psibar_normal(self) -> BitMatrix:
        return assemble_blocks(
            [(0, 1, BitMatrix.identity(self.r_psibar))],
            row_bands=[self.r_psibar, self.l.rows],
            col_bands=[self.r_phi, self.d.rows],
        )

    def psi_normal(self) -> BitMatrix:
        return assemble_blocks(
            [(0, 0, self.m), (0, 1, self.n), (1, 0, self.l), (1, 1, self.k)],
            row_bands=[self.r_psibar, self.l.rows],
            col_bands=[self.r_phi, self.d.rows],
        )


@dataclass(frozen=True)
class XZReport:
    x_table: List[int]
    z_table: List[int]
    x_pq: int
    z_pq: int
    y_value: int
    rank_big_phi: Optional[int] = None
    rank_big_psi: Optional[int] = None

    def to_dict(self) -> Dict[str, Any]:
        return {
            "x_table": list(self.x_table),
            "z_table": list(self.z_table),
            "x_pq": self.x_pq,
            "z_pq": self.z_pq,
            "y_value": self.y_value,
            "rank_big_phi": self.rank_big_phi,
            "rank_big_psi": self.rank_big_psi,
        }


# --------------------------------------------------------------
# H_1 and H_0: cones of the slices B{<=s} included into B
# --------------------------------------------------------------
@dataclass(frozen=True)
class SliceCone:
    """cone(B{<=s} (+) B{<=t} -> B) with a basis of its homology.

    Chain ids carry the part they live in: "Q1:", "Q2:" for the legs and "B:"
    for the target copy of B.
    """

    s: int
    complex: GradedComplex
    legs: Tuple[GradedComplex, GradedComplex]
    basis: HomologyBasis

    @property
    def rank(self) -> int:
        return self.basis.dim

    def leg_part(self, leg: int, vector: np.ndarray, alexander: Dict[str, int], level: int) -> Dict[str, int]:
        """Generators of `vector` in leg 1 or 2 whose Alexander grading is `level`."""
        offset = 0 if leg == 1 else self.legs[0].dim
        part = self.legs[leg - 1]
        return {
            gid: int(vector[offset + k])
            for k, gid in enumerate(part.ids)
            if alexander[gid] == level and vector[offset + k]
        }

    def class_of(self, source: "SliceCone", k: int) -> np.ndarray:
        """Class in this cone of the k-th basis cycle of a subcone."""
        chain = _restriction(source.complex, self.complex).apply(source.basis.reps.column(k))
        return self.basis.coordinates(chain)


def slice_cone(model: CfkModel, s: int, t: int) -> Tuple[GradedComplex, Tuple[GradedComplex, GradedComplex]]:
    whole = b_slice(model, "all")
    legs = (b_slice(model, "<=", s), b_slice(model, "<=", t))
    d = cone_into(list(legs), whole, f"{model.name} cone({s},{t})")
    parts = (("Q1", legs[0]), ("Q2", legs[1]), ("B", whole))
    ids = tuple(f"{tag}:{gid}" for tag, part in parts for gid in part.ids)
    gradings = tuple(grading for _, part in parts for grading in part.gradings)
    return GradedComplex(ids=ids, gradings=gradings, differential=d), legs


def _cone_groups(model: CfkModel, window: range, shift: int) -> Dict[int, SliceCone]:
    groups: Dict[int, SliceCone] = {}
    for s in window:
        cone, legs = slice_cone(model, s, -s - shift)
        basis = homology_basis(cone.differential)
        if basis.dim:
            groups[s] = SliceCone(s=s, complex=cone, legs=legs, basis=basis)
    return groups


def h1_groups(c: CfkModel) -> Dict[int, SliceCone]:
    """Nonzero homology groups of C_1(s) = cone(B{<=s} (+) B{<=-s} -> B)."""
    model = reduce_model(c)
    g = genus(model)
    return _cone_groups(model, range(-g - 1, g + 2), 0)


def h0_groups(c: CfkModel) -> Dict[int, SliceCone]:
    """Nonzero homology groups of C_0(s) = cone(B{<=s} (+) B{<=-s-1} -> B).

    C_0(s) sits inside C_1(s) with quotient B{-s} and inside C_1(s+1) with
    quotient B{s+1}.
    """
    model = reduce_model(c)
    g = genus(model)
    return _cone_groups(model, range(-g - 1, g + 1), 1)


@dataclass(frozen=True)
class HomologyData:
    model: CfkModel
    inf_ids: Tuple[str, ...]
    one: Dict[int, SliceCone]
    zero: Dict[int, SliceCone]

    @property
    def h_inf(self) -> int:
        return len(self.inf_ids)

    @property
    def h_one(self) -> int:
        return sum(group.rank for group in self.one.values())

    @property
    def h_zero(self) -> int:
        return sum(group.rank for group in self.zero.values())

    @staticmethod
    def offsets(groups: Dict[int, SliceCone]) -> Dict[int, int]:
        out, total = {}, 0
        for s in sorted(groups):
            out[s] = total
            total += groups[s].rank
        return out


def homology_data(c: CfkModel) -> HomologyData:
    model = reduce_model(c)
    inf_ids = tuple(g.id for g in sorted(model.generators, key=lambda g: (g.alexander, g.id)))
    return HomologyData(model=model, inf_ids=inf_ids, one=h1_groups(model), zero=h0_groups(model))


def htriple(data: HomologyData) -> HTriple:
    return HTriple(
        h_inf=hfk_ranks(data.model),
        h_one={s: group.rank for s, group in sorted(data.one.items())},
        h_zero=data.h_zero,
    )


# --------------------------------------------------------------
# the four maps
# --------------------------------------------------------------
def phi_maps(c: CfkModel, data: Optional[HomologyData] = None) -> Tuple[BitMatrix, BitMatrix]:
    """Transposes of the quotients C_1(s) -> B{s} through either leg.

    phi reads the first leg at grading s; phibar reads the second leg at
    grading -s and moves it to B{s} with the flip.
    """
    data = data or homology_data(c)
    model = data.model
    alex = {g.id: g.alexander for g in model.generators}
    position = {gid: k for k, gid in enumerate(data.inf_ids)}
    index = model.index()
    flip = model.flip_matrix()

    def on_inf(values: Dict[str, int]) -> np.ndarray:
        out = np.zeros(data.h_inf, dtype=np.uint8)
        for gid, bit in values.items():
            out[position[gid]] ^= bit
        return out

    rows_phi, rows_phibar = [], []
    for s in sorted(data.one):
        group = data.one[s]
        for k in range(group.rank):
            cycle = group.basis.reps.column(k)
            rows_phi.append(on_inf(group.leg_part(1, cycle, alex, s)))
            lower = np.zeros(len(model.ids), dtype=np.uint8)
            for gid, bit in group.leg_part(2, cycle, alex, -s).items():
                lower[index[gid]] = bit
            rows_phibar.append(on_inf(dict(zip(model.ids, flip.apply(lower).tolist()))))
    phi = BitMatrix.from_columns(rows_phi, data.h_inf).T
    phibar = BitMatrix.from_columns(rows_phibar, data.h_inf).T
    if rank(phi) != rank(phibar):
        raise ValidationFailure("phi_rank_symmetry", rank(phi), rank(phibar), subject=c.name)
    return phi, phibar


def _inclusion_matrix(data: HomologyData, step: int) -> BitMatrix:
    """H_0 -> H_1 induced by C_0(s) inside C_1(s + step)."""
    offsets = HomologyData.offsets(data.one)
    columns = []
    for s in sorted(data.zero):
        group = data.zero[s]
        target = data.one.get(s + step)
        for k in range(group.rank):
            column = np.zeros(data.h_one, dtype=np.uint8)
            if target is not None:
                start = offsets[s + step]
                column[start:start + target.rank] = target.class_of(group, k)
            columns.append(column)
    return BitMatrix.from_columns(columns, data.h_one)


def _complement_coordinates(f: BitMatrix) -> BitMatrix:
    """Rows giving coordinates modulo im f in a completion of an image basis."""
    pivots = pivot_columns(f)
    frame = complete_basis(f.select_columns(pivots))
    return inverse(frame).block(len(pivots), f.rows, 0, f.rows)


def psi_maps(
    c: CfkModel,
    data: Optional[HomologyData] = None,
    phi: Optional[BitMatrix] = None,
    phibar: Optional[BitMatrix] = None,
) -> Tuple[BitMatrix, BitMatrix]:
    """Transposes of the inclusions C_0(s-1) -> C_1(s) (psibar) and C_0(s) -> C_1(s) (psi).

    Each inclusion has B{s} (resp. B{-s}) as quotient, so its transpose is
    exact against phi (resp. phibar).
    """
    data = data or homology_data(c)
    if phi is None or phibar is None:
        phi, phibar = phi_maps(c, data)
    psibar = _inclusion_matrix(data, 1).T
    psi = _inclusion_matrix(data, 0).T
    maps = FourMaps(phi=phi, phibar=phibar, psi=psi, psibar=psibar)
    validate_four_maps(maps, htriple(data), subject=c.name)
    return psi, psibar


def validate_four_maps(maps: FourMaps, h: HTriple, subject: str = "") -> None:
    h_inf, h_one, h_zero = h.total_inf, h.total_one, h.h_zero
    shapes = {
        "phi": (h_one, h_inf), "phibar": (h_one, h_inf),
        "psi": (h_zero, h_one), "psibar": (h_zero, h_one),
    }
    for name, shape in shapes.items():
        if getattr(maps, name).shape != shape:
            raise ValidationFailure(f"{name}_shape", getattr(maps, name).shape, shape, subject)
    r_phi, r_phibar = rank(maps.phi), rank(maps.phibar)
    r_psi, r_psibar = rank(maps.psi), rank(maps.psibar)
    checks = [
        ("psibar_phi_zero", int(not (maps.psibar @ maps.phi).is_zero()), 0),
        ("psi_phibar_zero", int(not (maps.psi @ maps.phibar).is_zero()), 0),
        ("exact_ker_psibar", h_one - r_psibar, r_phi),
        ("exact_ker_psi", h_one - r_psi, r_phibar),
        ("cone_phi_rank", h_one + h_inf - 2 * r_phi, h_zero),
        ("cone_psi_rank", h_one + h_zero - 2 * r_psi, h_inf),
        ("rank_phi_formula", 2 * r_phi, h_inf + h_one - h_zero),
        ("rank_psibar_formula", 2 * r_psibar, h_zero + h_one - h_inf),
    ]
    for invariant, lhs, rhs in checks:
        if lhs != rhs:
            raise ValidationFailure(invariant, lhs, rhs, subject)


def _patterns(rows: int, cols: int, max_bits: int) -> Iterator[BitMatrix]:
    bits = rows * cols
    if bits > max_bits:
        raise NoSolution(f"search space of {bits} bits exceeds {max_bits}")
    shifts = np.arange(bits, dtype=np.int64)
    for code in range(1 << bits):
        yield BitMatrix.from_array(((code >> shifts) & 1).reshape(rows, cols))


def constraint_search(
    h: HTriple, phi: BitMatrix, phibar: BitMatrix, max_bits: Optional[int] = None
) -> Tuple[BitMatrix, BitMatrix]:
    """Enumerate psibar, then psi, in a fixed order until every invariant holds.

    Both maps must vanish on the image of their partner and be injective on the
    complement, so each is a matrix times the complement coordinates. Among
    valid psi, the first one maximizing rank [psibar | psi] is kept.
    """
    max_bits = search_max_bits() if max_bits is None else max_bits
    h_inf, h_one, h_zero = h.total_inf, h.total_one, h.h_zero
    if h_zero > h_one + h_inf:
        raise NoSolution(f"dim H_0 = {h_zero} exceeds dim H_1 + dim H_inf = {h_one + h_inf}")
    r, rbar = rank(phi), rank(phibar)
    if h_one + h_inf - 2 * r != h_zero or h_one + h_zero - 2 * (h_one - rbar) != h_inf:
        raise NoSolution(f"dimensions ({h_inf},{h_one},{h_zero}) are inconsistent with ranks {r},{rbar}")
    coker = _complement_coordinates(phi)
    rest = _complement_coordinates(phibar)

    psibar = None
    for pattern in _patterns(h_zero, coker.rows, max_bits):
        if rank(pattern) == coker.rows:
            psibar = pattern @ coker
            break
    if psibar is None:
        raise NoSolution("no injective psibar on coker phi")

    best, best_rank = None, -1
    for pattern in _patterns(h_zero, rest.rows, max_bits):
        if rank(pattern) != rest.rows:
            continue
        candidate = pattern @ rest
        joint = rank(BitMatrix.hstack([psibar, candidate], rows=h_zero))
        if joint > best_rank:
            best, best_rank = candidate, joint
            if joint == h_zero:
                break
    if best is None:
        raise NoSolution("no injective psi on coker phibar")
    validate_four_maps(FourMaps(phi, phibar, best, psibar), h, subject="constraint_search")
    return best, psibar


def four_maps(c: CfkModel) -> Tuple[FourMaps, HTriple]:
    data = homology_data(c)
    phi, phibar = phi_maps(c, data)
    h = htriple(data)
    try:
        psi, psibar = psi_maps(c, data, phi, phibar)
    except ValidationFailure as exc:
        _log(f"[RATIONAL][FALLBACK] model={c.name} invariant={exc.invariant} lhs={exc.lhs} rhs={exc.rhs}")
        psi, psibar = constraint_search(h, phi, phibar)
    return FourMaps(phi=phi, phibar=phibar, psi=psi, psibar=psibar), h


# --------------------------------------------------------------
# the rational surgery complex
# --------------------------------------------------------------
def big_phi(phi: BitMatrix, phibar: BitMatrix, spec: SurgerySpec) -> BitMatrix:
    """(+)^q H_inf -> (+)^{p+q} H_1 with phi^i into H_1(i) and phibar^i into H_1(i+p)."""
    p, q = spec.p, spec.q
    blocks = []
    for i in range(q):
        blocks.append((i, i, phi))
        blocks.append((i + p, i, phibar))
    return assemble_blocks(blocks, row_bands=[phi.rows] * (p + q), col_bands=[phi.cols] * q)


def big_psi(psi: BitMatrix, psibar: BitMatrix, spec: SurgerySpec) -> BitMatrix:
    """(+)^{p+q} H_1 -> (+)^p H_0 with psibar^j from H_1(j) and psi^j from H_1(j+q)."""
    p, q = spec.p, spec.q
    blocks = []
    for j in range(p):
        blocks.append((j, j, psibar))
        blocks.append((j, j + q, psi))
    return assemble_blocks(blocks, row_bands=[psi.rows] * p, col_bands=[psi.cols] * (p + q))


def assemble_and_rank(c: CfkModel, spec: SurgerySpec, maps: Optional[FourMaps] = None) -> int:
    if maps is None:
        maps, _ = four_maps(c)
    phi_part = big_phi(maps.phi, maps.phibar, spec)
    psi_part = big_psi(maps.psi, maps.psibar, spec)
    bands = [phi_part.cols, phi_part.rows, psi_part.rows]
    d = assemble_blocks([(1, 0, phi_part), (2, 1, psi_part)], row_bands=bands, col_bands=bands)
    if not (d @ d).is_zero():
        raise ValidationFailure("d_squared_zero", 1, 0, subject=f"{c.name} {spec.label}")
    value = d.rows - 2 * (rank(phi_part) + rank(psi_part))
    _log(f"[RATIONAL][COMPLEX] model={c.name} slope={spec.label} dim={d.rows} rank={value}")
    return value


# --------------------------------------------------------------
# block normal forms and the x/z bookkeeping
# --------------------------------------------------------------
def normalize_blocks(maps: FourMaps) -> BlockForms:
    if not (maps.psibar @ maps.phi).is_zero():
        raise NormalizationFailure("psibar . phi != 0, im phi is not inside ker psibar")
    change, r = normalize_projection(maps.phi)
    h_inf, h_one, h_zero = maps.phi.cols, maps.phi.rows, maps.psi.rows
    basis_one = inverse(change.left)
    rest = basis_one.select_columns(list(range(r, h_one)))
    images = maps.psibar @ rest
    if rank(images) != rest.cols:
        raise NormalizationFailure(f"psibar has rank {rank(images)} on a complement of im phi of dim {rest.cols}")
    basis_zero = complete_basis(images)
    zero_inv = inverse(basis_zero)

    phibar_n = change.apply(maps.phibar)
    psi_n = zero_inv @ maps.psi @ basis_one
    rp = rest.cols
    forms = BlockForms(
        a=phibar_n.block(0, r, 0, r),
        b=phibar_n.block(0, r, r, h_inf),
        c=phibar_n.block(r, h_one, 0, r),
        d=phibar_n.block(r, h_one, r, h_inf),
        m=psi_n.block(0, rp, 0, r),
        n=psi_n.block(0, rp, r, h_one),
        l=psi_n.block(rp, h_zero, 0, r),
        k=psi_n.block(rp, h_zero, r, h_one),
        r_phi=r,
        r_psibar=rp,
        basis_inf=change.right,
        basis_one=basis_one,
        basis_zero=basis_zero,
    )
    if change.apply(maps.phi) != forms.phi_normal():
        raise NormalizationFailure("phi did not reach [[I,0],[0,0]]")
    if zero_inv @ maps.psibar @ basis_one != forms.psibar_normal():
        raise NormalizationFailure("psibar did not reach [[0,I],[0,0]]")
    return forms


def build_A_i(a: BitMatrix, b: BitMatrix, c: BitMatrix, d: BitMatrix, i: int) -> BitMatrix:
    """Row bands (d 0 ..), (cb d ..), .., (c a^{i-1} b .. d) over the closing band (a^i b .. b)."""
    e, f, r = d.rows, d.cols, a.rows
    blocks = []
    for row in range(i + 1):
        for col in range(row):
            blocks.append((row, col, c @ a.power(row - col - 1) @ b))
        blocks.append((row, row, d))
    for col in range(i + 1):
        blocks.append((i + 1, col, a.power(i - col) @ b))
    return assemble_blocks(blocks, row_bands=[e] * (i + 1) + [r], col_bands=[f] * (i + 1))


def _mixed(table: List[int], count: int, total: int, top: int) -> int:
    # count copies of table[top] and (total - count) of table[top - 1], with table[-1] = 0
    below = table[top - 1] if top >= 1 else 0
    return count * table[top] + (total - count) * below


def xz_ranks(blocks: BlockForms, spec: SurgerySpec, check: bool = True) -> XZReport:
    p, q = spec.p, spec.q
    i, r = divmod(q, p)
    j, s = divmod(p, q)
    x_table = [rank(build_A_i(blocks.a, blocks.b, blocks.c, blocks.d, t)) for t in range(i + 1)]
    z_table = [
        rank(build_A_i(blocks.n.T, blocks.k.T, blocks.m.T, blocks.l.T, t)) for t in range(j + 1)
    ]
    x_pq = _mixed(x_table, r, p, i)
    z_pq = _mixed(z_table, s, q, j)
    y_value = p * blocks.h_inf + q * blocks.h_zero - 2 * (x_pq + z_pq)

    rank_phi_direct = rank_psi_direct = None
    if check:
        rank_phi_direct = rank(big_phi(blocks.phi_normal(), blocks.phibar_normal(), spec))
        expected = q * blocks.r_phi + x_pq
        context = {"p": p, "q": q, "x_table": x_table, "z_table": z_table}
        if rank_phi_direct != expected:
            raise IdentityMismatch("rank_big_phi", rank_phi_direct, expected, context)
        rank_psi_direct = rank(big_psi(blocks.psi_normal(), blocks.psibar_normal(), spec))
        expected = p * blocks.r_psibar + z_pq
        if rank_psi_direct != expected:
            raise IdentityMismatch("rank_big_psi", rank_psi_direct, expected, context)
    return XZReport(
        x_table=x_table,
        z_table=z_table,
        x_pq=x_pq,
        z_pq=z_pq,
        y_value=y_value,
        rank_big_phi=rank_phi_direct,
        rank_big_psi=rank_psi_direct,
    )


def simple_block_checks(blocks: BlockForms, depth: int) -> Dict[str, bool]:
    """Matrix facts forced on simple knots: x_i = x_0, d = c a^i b = 0, l = k n^i m = 0."""
    x_table = [rank(build_A_i(blocks.a, blocks.b, blocks.c, blocks.d, t)) for t in range(depth + 1)]
    d_zero = blocks.d.is_zero() and all(
        (blocks.c @ blocks.a.power(t) @ blocks.b).is_zero() for t in range(depth + 1)
    )
    l_zero = blocks.l.is_zero() and all(
        (blocks.k @ blocks.n.power(t) @ blocks.m).is_zero() for t in range(depth + 1)
    )
    return {"x_constant": all(x == x_table[0] for x in x_table), "d_vanishes": d_zero, "l_vanishes": l_zero}


def _coprime_slopes(limit: int) -> List[Tuple[int, int]]:
    return [(p, q) for p in range(1, limit + 1) for q in range(1, limit + 1) if math.gcd(p, q) == 1]


def random_block_sweep(count: int = 200, seed: Optional[int] = None, max_dim: int = 4) -> List[Dict[str, Any]]:
    """Check both block rank identities on random blocks; returns the mismatches."""
    rng = np.random.default_rng(random_seed() if seed is None else seed)
    slopes = _coprime_slopes(5)

    def draw(rows: int, cols: int) -> BitMatrix:
        return BitMatrix.from_array(rng.integers(0, 2, size=(rows, cols)).reshape(rows, cols))

    mismatches: List[Dict[str, Any]] = []
    for index in range(count):
        p, q = slopes[int(rng.integers(len(slopes)))]
        r, e, f, g = (int(v) for v in rng.integers(0, max_dim + 1, size=4))
        blocks = BlockForms(
            a=draw(r, r), b=draw(r, f), c=draw(e, r), d=draw(e, f),
            m=draw(e, r), n=draw(e, e), l=draw(g, r), k=draw(g, e),
            r_phi=r, r_psibar=e,
        )
        try:
            xz_ranks(blocks, SurgerySpec(p, q))
        except IdentityMismatch as exc:
            finding = {"instance": index, "identity": exc.identity, "lhs": exc.lhs, "rhs": exc.rhs, **exc.context}
            _log(f"[RATIONAL][FINDING] {finding}")
            mismatches.append(finding)
    _log(f"[RATIONAL][SWEEP] instances={count} mismatches={len(mismatches)}")
    return mismatches
