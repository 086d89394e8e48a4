import json
import os
import sys
import threading
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Callable, Dict


_write_lock = threading.Lock()


def _now() -> str:
    return datetime.now(timezone.utc).isoformat()


def _status(outcome: Dict[str, Any]) -> str:
    return "pass" if outcome.get("passed") else "fail"


def _append(record: dict, diagnostics_path: str | Path | None) -> None:
    raw_path = diagnostics_path or os.getenv("VERDICT_LOG_PATH", "")
    if not raw_path:
        return
    path = Path(raw_path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with _write_lock, path.open("a", encoding="utf-8") as fp:
        fp.write(json.dumps(record, ensure_ascii=False, sort_keys=True, default=str) + "\n")


def run_check(
    model: str,
    check_id: str,
    evaluate: Callable[[], Dict[str, Any]],
    *,
    diagnostics_path: str | Path | None = None,
) -> Dict[str, Any]:
    """Run one check, turning any exception into a failing outcome.

    `evaluate` returns {"passed", "lhs", "rhs", "context"}; the returned outcome
    carries those keys plus "status" and, on failure by exception, the error.
    """
    started_at = _now()
    try:
        outcome = dict(evaluate() or {})
        outcome["passed"] = bool(outcome.get("passed"))
        error_type = ""
        error_message = ""
    except Exception as exc:
        error_type = type(exc).__name__
        error_message = str(exc)
        outcome = {
            "passed": False,
            "lhs": getattr(exc, "lhs", None),
            "rhs": getattr(exc, "rhs", None),
            "context": {"error_type": error_type, "error_message": error_message},
        }
    outcome.setdefault("lhs", None)
    outcome.setdefault("rhs", None)
    outcome.setdefault("context", {})
    outcome["status"] = _status(outcome) if not error_type else "error"
    diagnostic = {
        "model": model,
        "check": check_id,
        "started_at": started_at,
        "finished_at": _now(),
        "status": outcome["status"],
        "lhs": outcome["lhs"],
        "rhs": outcome["rhs"],
        "error_type": error_type,
        "error_message": error_message,
    }
    _append(diagnostic, diagnostics_path)
    print("[VERDICT_DIAGNOSTIC] " + json.dumps(diagnostic, ensure_ascii=False, default=str), file=sys.stderr)
    return outcome
