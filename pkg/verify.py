"""Consistency checks over CFK models: the rank inequality, route agreement,
simple-knot identities and the corpus runner."""
from __future__ import annotations

import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor, as_completed
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple

from cfk import (
    CfkModel,
    genus,
    hf_rank,
    hfk_ranks,
    load_model,
    mirror,
    model_to_dict,
    reduce_model,
)
from check_diagnostics import run_check
from f2linalg import rank
from rational import (
    assemble_and_rank,
    build_A_i,
    four_maps,
    normalize_blocks,
    simple_block_checks,
    xz_ranks,
)
from surgery import (
    NotSimple,
    SurgerySpec,
    build_truncated_cone,
    closed_form_h0,
    hf_surgery_rank,
    hfk_surgery_ranks,
    simple_cone_ranks,
)


class VerifyError(RuntimeError):
    pass


class StructureContradiction(VerifyError):
    pass


def _log(message: str) -> None:
    print(message, file=sys.stderr)


def corpus_workers() -> int:
    try:
        value = int(os.getenv("CORPUS_WORKERS", "4"))
    except ValueError:
        value = 4
    return max(1, min(value, 16))


@dataclass(frozen=True)
class CheckResult:
    check_id: str
    passed: bool
    lhs: Any = None
    rhs: Any = None
    context: Dict[str, Any] = field(default_factory=dict)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "check": self.check_id,
            "passed": self.passed,
            "lhs": self.lhs,
            "rhs": self.rhs,
            "context": self.context,
        }


@dataclass(frozen=True)
class Verdict:
    model: str
    checks: List[CheckResult] = field(default_factory=list)

    @property
    def overall(self) -> bool:
        return all(check.passed for check in self.checks)

    def failing(self) -> List[CheckResult]:
        return [check for check in self.checks if not check.passed]

    def to_dict(self) -> Dict[str, Any]:
        return {
            "model": self.model,
            "overall": self.overall,
            "checks": [check.to_dict() for check in self.checks],
        }


def _check(model: str, check_id: str, evaluate: Callable[[], Dict[str, Any]]) -> CheckResult:
    outcome = run_check(model, check_id, evaluate)
    return CheckResult(
        check_id=check_id,
        passed=outcome["passed"],
        lhs=outcome["lhs"],
        rhs=outcome["rhs"],
        context=outcome["context"],
    )


def _equal(lhs: Any, rhs: Any, **context: Any) -> Dict[str, Any]:
    return {"passed": lhs == rhs, "lhs": lhs, "rhs": rhs, "context": context}


def _slopes(pmax: int, qmax: int) -> List[Tuple[int, int]]:
    return [(p, q) for p in range(1, pmax + 1) for q in range(1, qmax + 1) if math.gcd(p, q) == 1]


# --------------------------------------------------------------
# single-model predicates
# --------------------------------------------------------------
def is_simple(c: CfkModel) -> bool:
    if sum(hfk_ranks(c).values()) != hf_rank(c):
        return False
    reduced = reduce_model(c)
    for arrow in reduced.arrows:
        a, b = reduced.drops(arrow)
        if a == 0 or b == 0:
            raise StructureContradiction(
                f"{c.name}: ranks agree but arrow {arrow.source}->{arrow.target} with drops ({a},{b}) survives"
            )
    return True


def ni_trivial(c: CfkModel) -> bool:
    return genus(c) == 0


def main_theorem_check(c: CfkModel) -> Verdict:
    def evaluate() -> Dict[str, Any]:
        g = genus(c)
        total = sum(hfk_ranks(c).values())
        hf = hf_rank(c)
        passed = total == hf if g == 0 else total > hf
        if not passed:
            _log(f"[VERIFY][FINDING] model={c.name} genus={g} hfk={total} hf={hf}")
        return {"passed": passed, "lhs": total, "rhs": hf, "context": {"genus": g}}

    return Verdict(c.name, [_check(c.name, "main_theorem", evaluate)])


def cross_route_check(c: CfkModel, pmax: int, qmax: int) -> Verdict:
    checks: List[CheckResult] = []
    state: Dict[str, Any] = {}

    def prepare() -> Dict[str, Any]:
        maps, h = four_maps(c)
        state["maps"] = maps
        state["blocks"] = normalize_blocks(maps)
        return {"passed": True, "lhs": h.to_dict(), "rhs": None, "context": {}}

    checks.append(_check(c.name, "four_maps", prepare))
    if "maps" not in state:
        return Verdict(c.name, checks)

    for p, q in _slopes(pmax, qmax):
        spec = SurgerySpec(p, q)
        values: Dict[str, int] = {}

        def closed() -> Dict[str, Any]:
            values["complex"] = assemble_and_rank(c, spec, state["maps"])
            report = xz_ranks(state["blocks"], spec)
            return _equal(report.y_value, values["complex"], slope=spec.label, **report.to_dict())

        def routes() -> Dict[str, Any]:
            return _equal(hf_surgery_rank(c, spec), values.get("complex"), slope=spec.label)

        checks.append(_check(c.name, f"xz_closed_form {spec.label}", closed))
        checks.append(_check(c.name, f"route_agreement {spec.label}", routes))
    return Verdict(c.name, checks)


def simple_identities_check(c: CfkModel, nmax: int) -> Verdict:
    """Closed-form identities for simple knots.

    h_2 = 2 h_1 - h_0 uses the closed-form h_0 of the n = 0 cone; the formula
    h_j = j h_inf + h_0 - 2 (x_0 + z_{j-1}) uses dim H_0 from the four maps.
    """
    if not is_simple(c):
        raise NotSimple(f"{c.name} is not simple")
    h = {j: hf_surgery_rank(c, SurgerySpec(j, 1)) for j in range(1, max(nmax, 2) + 2)}
    h_inf = sum(hfk_ranks(c).values())
    maps, triple = four_maps(c)
    blocks = normalize_blocks(maps)
    x0 = rank(build_A_i(blocks.a, blocks.b, blocks.c, blocks.d, 0))
    g = genus(c)

    checks = [
        _check(c.name, "h2_relation", lambda: _equal(h[2], 2 * h[1] - closed_form_h0(c))),
    ]
    for j in range(1, nmax + 1):
        z_prev = rank(build_A_i(blocks.n.T, blocks.k.T, blocks.m.T, blocks.l.T, j - 1))
        rhs = j * h_inf + triple.h_zero - 2 * (x0 + z_prev)
        checks.append(
            _check(c.name, f"h_formula {j}", lambda: _equal(h[j], rhs, x0=x0, z=z_prev))
        )
    for j in range(max(1, g), nmax + 1):
        checks.append(_check(c.name, f"growth {j}", lambda: _equal(h[j + 1] - h[j], h_inf)))
    for name, held in sorted(simple_block_checks(blocks, nmax).items()):
        checks.append(_check(c.name, f"blocks {name}", lambda: _equal(held, True)))
    for n in range(1, nmax + 1):
        checks.append(
            _check(c.name, f"knot_surgery_total {n}", lambda: _equal(sum(hfk_surgery_ranks(c, n).values()), h[n]))
        )
        checks.append(
            _check(c.name, f"simple_cone_total {n}", lambda: _equal(sum(simple_cone_ranks(c, n).values()), h[n]))
        )
    return Verdict(c.name, checks)


def window_stability_check(c: CfkModel, slopes: Sequence[Tuple[int, int]], margins: Sequence[int] = (1, 2, 3)) -> Verdict:
    checks = []
    for p, q in slopes:
        spec = SurgerySpec(p, q)

        def evaluate() -> Dict[str, Any]:
            ranks = [build_truncated_cone(c, spec, m).homology_rank() for m in margins]
            return {"passed": len(set(ranks)) == 1, "lhs": ranks, "rhs": ranks[:1] * len(ranks), "context": {}}

        checks.append(_check(c.name, f"window_stability {spec.label}", evaluate))
    return Verdict(c.name, checks)


def parity_check(c: CfkModel, slopes: Sequence[Tuple[int, int]]) -> Verdict:
    def model_parity() -> Dict[str, Any]:
        total = sum(hfk_ranks(c).values())
        hf = hf_rank(c)
        return {"passed": hf % 2 == 1 and total % 2 == hf % 2, "lhs": total % 2, "rhs": hf % 2, "context": {}}

    checks = [_check(c.name, "parity", model_parity)]
    for p, q in slopes:
        spec = SurgerySpec(p, q)
        checks.append(
            _check(
                c.name,
                f"surgery_parity {spec.label}",
                lambda: _equal(hf_surgery_rank(c, spec) % 2, spec.p % 2),
            )
        )
    return Verdict(c.name, checks)


def mirror_check(c: CfkModel) -> Verdict:
    def evaluate() -> Dict[str, Any]:
        m = mirror(c)
        lhs = {"hf": hf_rank(m), "hfk": {str(s): v for s, v in sorted(hfk_ranks(m).items())}}
        rhs = {"hf": hf_rank(c), "hfk": {str(-s): v for s, v in sorted(hfk_ranks(c).items())}}
        return {"passed": lhs == rhs, "lhs": lhs, "rhs": rhs, "context": {}}

    def involution() -> Dict[str, Any]:
        twice = model_to_dict(mirror(mirror(c)))
        return {"passed": twice == model_to_dict(c), "lhs": twice["name"], "rhs": c.name, "context": {}}

    return Verdict(c.name, [_check(c.name, "mirror_symmetry", evaluate), _check(c.name, "mirror_involution", involution)])


# --------------------------------------------------------------
# corpus
# --------------------------------------------------------------
def verify_file(path: Path, pmax: int = 4, qmax: int = 4) -> Verdict:
    name = path.stem
    state: Dict[str, CfkModel] = {}

    def load() -> Dict[str, Any]:
        state["model"] = load_model(path)
        return {"passed": True, "lhs": state["model"].name, "rhs": None, "context": {"path": path.name}}

    loaded = _check(name, "validate", load)
    if "model" not in state:
        return Verdict(name, [loaded])
    c = state["model"]
    grid = _slopes(6, 6)
    checks = [loaded]
    for verdict in (
        main_theorem_check(c),
        cross_route_check(c, pmax, qmax),
        window_stability_check(c, grid, margins=(1, 2, 3, 4)),
        parity_check(c, grid),
        mirror_check(c),
    ):
        checks.extend(verdict.checks)
    return Verdict(c.name, checks)


def corpus_run(directory: str | Path, pmax: int = 4, qmax: int = 4, workers: Optional[int] = None) -> List[Verdict]:
    paths = sorted(Path(directory).glob("*.json"))
    workers = corpus_workers() if workers is None else workers
    verdicts: Dict[Path, Verdict] = {}
    with ThreadPoolExecutor(max_workers=workers) as executor:
        futures = {executor.submit(verify_file, path, pmax, qmax): path for path in paths}
        for future in as_completed(futures):
            path = futures[future]
            try:
                verdicts[path] = future.result()
            except Exception as exc:
                verdicts[path] = Verdict(
                    path.stem,
                    [CheckResult("validate", False, context={"error_type": type(exc).__name__, "error_message": str(exc)})],
                )
    ordered = [verdicts[path] for path in paths]
    passed = sum(1 for verdict in ordered if verdict.overall)
    _log(f"[VERIFY][STATS] models={len(ordered)} passed={passed} failed={len(ordered) - passed}")
    return ordered
