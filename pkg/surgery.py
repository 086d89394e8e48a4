"""Surgery mapping cones over a CFK model.

`hf_surgery_rank` evaluates the truncated cone D = h^p + v for HF-hat of the
p/q surgery; `hfk_surgery_ranks` evaluates the per-Spin^c cones for the core
knot of n-surgery; the `simple_*` helpers give the closed forms used when the
knot Floer homology is as small as HF-hat.
"""
from __future__ import annotations

import math
import os
import sys
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Tuple, Union

import numpy as np

from cfk import (
    ChainMap,
    CfkModel,
    GradedComplex,
    b_slice,
    build_A,
    edge_maps,
    genus,
    hf_rank,
    hfk_ranks,
    reduce_model,
)
from f2linalg import BitMatrix, assemble_blocks, homology_rank, is_invertible


class SurgeryError(RuntimeError):
    pass


class InvalidSurgery(SurgeryError, ValueError):
    pass


class WindowTooSmall(SurgeryError):
    pass


class ConventionFailure(SurgeryError):
    pass


class NotSimple(SurgeryError):
    pass


ROUTES = ("cone21", "cone22", "combinatorial23", "closed_form")


def _log(message: str) -> None:
    print(message, file=sys.stderr)


def cone_margin() -> int:
    try:
        value = int(os.getenv("FLOER_CONE_MARGIN", "2"))
    except ValueError:
        value = 2
    return max(1, min(value, 6))


def stability_check_enabled() -> bool:
    return os.getenv("FLOER_STABILITY_CHECK", "1").strip().lower() not in ("0", "false", "no", "off")


@dataclass(frozen=True)
class SurgerySpec:
    p: int
    q: int = 1

    def __post_init__(self) -> None:
        if self.p < 1 or self.q < 1:
            raise InvalidSurgery(f"surgery coefficient {self.p}/{self.q} must be positive")
        if math.gcd(self.p, self.q) != 1:
            raise InvalidSurgery(f"surgery coefficient {self.p}/{self.q} is not in lowest terms")

    @property
    def label(self) -> str:
        return f"{self.p}/{self.q}"


@dataclass(frozen=True)
class ConeComplex:
    summands: List[Tuple[Tuple[str, int], GradedComplex]]
    edges: List[Tuple[Tuple[str, int], Tuple[str, int], ChainMap]]
    assembled: GradedComplex
    window: Tuple[int, int]

    def homology_rank(self) -> int:
        return self.assembled.homology_rank()


@dataclass(frozen=True)
class RankReport:
    route: str
    value: Union[int, Dict[int, int]]
    window: Optional[Tuple[int, int]] = None
    details: Dict[str, Any] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.route not in ROUTES:
            raise SurgeryError(f"unknown route '{self.route}'")

    @property
    def total(self) -> int:
        if isinstance(self.value, dict):
            return sum(self.value.values())
        return self.value

    def to_dict(self) -> Dict[str, Any]:
        value: Any = self.value
        if isinstance(value, dict):
            value = {str(s): r for s, r in sorted(value.items())}
        return {
            "route": self.route,
            "value": value,
            "total": self.total,
            "window": list(self.window) if self.window is not None else None,
            "details": self.details,
        }


# --------------------------------------------------------------
# integer and rational surgery: HF-hat
# --------------------------------------------------------------
def build_truncated_cone(c: CfkModel, spec: SurgerySpec, margin: int) -> ConeComplex:
    if margin < 1:
        raise WindowTooSmall(f"margin {margin} < 1")
    model = reduce_model(c)
    g = genus(model)
    p, q = spec.p, spec.q
    bound = q * (g + margin) + p
    a_labels = list(range(-bound, bound + 1))
    b_labels = list(range(-bound + p, bound + 1))

    # summands beyond the window pair off through v (top) and h (bottom)
    top, bottom = (bound + 1) // q, (-bound - 1) // q
    if not is_invertible(edge_maps(model, top)[0].matrix):
        raise WindowTooSmall(f"{c.name} {spec.label}: v at t={top} is not an isomorphism")
    if not is_invertible(edge_maps(model, bottom)[1].matrix):
        raise WindowTooSmall(f"{c.name} {spec.label}: h at t={bottom} is not an isomorphism")

    b_complex = b_slice(model, "all")
    a_cache: Dict[int, GradedComplex] = {}
    map_cache: Dict[int, Tuple[ChainMap, ChainMap]] = {}
    summands: List[Tuple[Tuple[str, int], GradedComplex]] = []
    edges: List[Tuple[Tuple[str, int], Tuple[str, int], ChainMap]] = []
    blocks = []
    n_a = len(a_labels)
    b_band = {u: n_a + k for k, u in enumerate(b_labels)}
    for k, s in enumerate(a_labels):
        t = s // q
        if t not in a_cache:
            a_cache[t] = build_A(model, t)
            map_cache[t] = edge_maps(model, t)
        summands.append((("A", s), a_cache[t]))
        blocks.append((k, k, a_cache[t].differential))
        v, h = map_cache[t]
        for target, cmap in ((s, v), (s + p, h)):
            if target in b_band:
                edges.append((("A", s), ("B", target), cmap))
                blocks.append((b_band[target], k, cmap.matrix))
    for u in b_labels:
        summands.append((("B", u), b_complex))
        blocks.append((b_band[u], b_band[u], b_complex.differential))

    bands = [len(model.generators)] * (n_a + len(b_labels))
    d = assemble_blocks(blocks, row_bands=bands, col_bands=bands)
    if not (d @ d).is_zero():
        raise ConventionFailure(f"{c.name} {spec.label}: assembled cone differential does not square to zero")
    ids = tuple(f"{kind}{s}:{gid}" for (kind, s), part in summands for gid in part.ids)
    gradings = tuple(s for (_, s), part in summands for _ in part.ids)
    assembled = GradedComplex(ids=ids, gradings=gradings, differential=d)
    return ConeComplex(summands=summands, edges=edges, assembled=assembled, window=(-bound, bound))


def hf_surgery_rank(c: CfkModel, spec: SurgerySpec, margin: Optional[int] = None) -> int:
    margin = cone_margin() if margin is None else margin
    cone = build_truncated_cone(c, spec, margin)
    value = cone.homology_rank()
    if stability_check_enabled():
        again = build_truncated_cone(c, spec, margin + 1).homology_rank()
        if again != value:
            raise WindowTooSmall(
                f"{c.name} {spec.label}: rank {value} at margin {margin} but {again} at margin {margin + 1}"
            )
    _log(f"[SURGERY][CONE] model={c.name} slope={spec.label} margin={margin} window={cone.window} rank={value}")
    return value


def cone21_report(c: CfkModel, spec: SurgerySpec, margin: Optional[int] = None) -> RankReport:
    margin = cone_margin() if margin is None else margin
    value = hf_surgery_rank(c, spec, margin)
    bound = spec.q * (genus(c) + margin) + spec.p
    return RankReport("cone21", value, window=(-bound, bound), details={"margin": margin})


# --------------------------------------------------------------
# knot Floer homology of the core of n-surgery
# --------------------------------------------------------------
def _restriction(source: GradedComplex, target: GradedComplex) -> BitMatrix:
    index = {gid: k for k, gid in enumerate(source.ids)}
    arr = np.zeros((target.dim, source.dim), dtype=np.uint8)
    for row, gid in enumerate(target.ids):
        if gid in index:
            arr[row, index[gid]] = 1
    return BitMatrix.from_array(arr.reshape(target.dim, source.dim))


def cone_differential(source: GradedComplex, targets: List[GradedComplex], label: str) -> BitMatrix:
    """Differential of the cone of source -> (+) targets, each leg the identity on shared generators."""
    blocks = [(0, 0, source.differential)]
    for k, target in enumerate(targets, start=1):
        blocks.append((k, k, target.differential))
        blocks.append((k, 0, _restriction(source, target)))
    bands = [source.dim] + [t.dim for t in targets]
    d = assemble_blocks(blocks, row_bands=bands, col_bands=bands)
    if not (d @ d).is_zero():
        raise ConventionFailure(f"{label}: cone differential does not square to zero")
    return d


def cone_into(sources: List[GradedComplex], target: GradedComplex, label: str) -> BitMatrix:
    """Differential of the cone of (+) sources -> target, each leg the inclusion on shared generators."""
    k = len(sources)
    blocks = [(k, k, target.differential)]
    for n, source in enumerate(sources):
        blocks.append((n, n, source.differential))
        blocks.append((k, n, _restriction(source, target)))
    bands = [source.dim for source in sources] + [target.dim]
    d = assemble_blocks(blocks, row_bands=bands, col_bands=bands)
    if not (d @ d).is_zero():
        raise ConventionFailure(f"{label}: cone differential does not square to zero")
    return d


def cone_rank(source: GradedComplex, targets: List[GradedComplex], label: str) -> int:
    return homology_rank(cone_differential(source, targets, label))


def hfk_surgery_ranks(c: CfkModel, n: int, variant: str = "quotient") -> Dict[int, int]:
    """Per-s ranks of C_n(s); zero entries are omitted.

    The default reads the cone legs as the quotient projections
    B -> B{>=s} (+) B{>n-s}. `variant="subcomplex"` evaluates the alternative
    cone B{j<s} -> B{j>s-n}, which never stabilizes to zero for negative s and
    is reported on the window [-g-n+1, n+g] only.
    """
    if n < 1:
        raise InvalidSurgery(f"n={n} must be positive")
    model = reduce_model(c)
    g = genus(model)
    whole = b_slice(model, "all")
    ranks: Dict[int, int] = {}
    if variant == "quotient":
        window = range(-g + 1, n + g + 1)
    elif variant == "subcomplex":
        window = range(-g - n + 1, n + g + 1)
    else:
        raise SurgeryError(f"unknown variant '{variant}'")
    for s in window:
        label = f"{c.name} n={n} s={s}"
        if variant == "quotient":
            value = cone_rank(whole, [b_slice(model, ">=", s), b_slice(model, ">", n - s)], label)
        else:
            value = cone_rank(b_slice(model, "<", s), [b_slice(model, ">", s - n)], label)
        if value:
            ranks[s] = value
    _log(f"[SURGERY][KNOT] model={c.name} n={n} variant={variant} total={sum(ranks.values())}")
    return ranks


def cone22_report(c: CfkModel, n: int, variant: str = "quotient") -> RankReport:
    ranks = hfk_surgery_ranks(c, n, variant=variant)
    window = (min(ranks), max(ranks)) if ranks else None
    return RankReport("cone22", ranks, window=window, details={"n": n, "variant": variant})


# --------------------------------------------------------------
# closed forms for simple knots
# --------------------------------------------------------------
def simple_cone_ranks(c: CfkModel, n: int) -> Dict[int, int]:
    """Ranks of M(B{j<s} -> B{j>n-s}) for s in [-g+1, n+g], zeros omitted."""
    if n < 0:
        raise InvalidSurgery(f"n={n} must be non-negative")
    model = reduce_model(c)
    g = genus(model)
    ranks: Dict[int, int] = {}
    for s in range(-g + 1, n + g + 1):
        value = cone_rank(b_slice(model, "<", s), [b_slice(model, ">", n - s)], f"{c.name} n={n} s={s}")
        if value:
            ranks[s] = value
    return ranks


def closed_form_h0(c: CfkModel) -> int:
    return sum(simple_cone_ranks(c, 0).values())


def _require_simple(c: CfkModel) -> None:
    total = sum(hfk_ranks(c).values())
    rank = hf_rank(c)
    if total != rank:
        raise NotSimple(f"{c.name}: rank HFK {total} != rank HF {rank}")


def simple_h(c: CfkModel, n: int) -> int:
    if n == 0:
        return closed_form_h0(c)
    return hf_surgery_rank(c, SurgerySpec(n, 1))


def simple_y_rank(c: CfkModel, spec: SurgerySpec) -> int:
    _require_simple(c)
    p, q = spec.p, spec.q
    if q == 1:
        return simple_h(c, p)
    low, high = p // q, -(-p // q)
    value = (p - q * low) * simple_h(c, high) + (q * high - p) * simple_h(c, low)
    if p < q:
        cone = hf_surgery_rank(c, spec)
        if cone != value:
            _log(f"[SURGERY][FINDING] model={c.name} slope={spec.label} split={value} cone={cone}")
    return value
