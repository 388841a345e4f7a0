"""Resumable parameter sweeps over the (p, delta) square.

The store is line-delimited JSON, one record per evaluated cell, appended by
a single writer. A cell is identified by the spec hash and its grid indices;
re-running a spec only evaluates cells missing from the store. Each cell's
seed is a stable hash of the master seed and the grid indices, so the set of
records does not depend on interruptions or on the number of threads.
"""

from __future__ import annotations

import csv
import hashlib
import json
import logging
import time
from concurrent.futures import ThreadPoolExecutor, as_completed
from dataclasses import dataclass, field
from datetime import datetime, timezone
from fractions import Fraction
from pathlib import Path

from .errors import ContractViolation
from .estimators.criterion import CriterionConfig, finite_size_criterion
from .estimators.mc import estimate_crossing, estimate_theta
from .estimators.runner import default_threads
from .rng import stable_hash
from .sdp import DestructionRule, SdpParams

log = logging.getLogger(__name__)

QUANTITIES = ("theta", "crossing", "criterion")
CSV_HEADER = ["p", "delta", "n", "point", "ci_low", "ci_high", "n_samples", "seed"]
# fields that vary between otherwise identical runs
VOLATILE = ("wall_time_s", "timestamp")


@dataclass(frozen=True)
class SweepSpec:
    p_grid: tuple[float, ...]
    delta_grid: tuple[float, ...]
    scales: tuple[int, ...]
    rule: DestructionRule
    samples_per_cell: int
    master_seed: int
    quantity: str = "theta"
    rho: Fraction | None = None  # crossing only
    alpha: float = 0.005  # criterion only

    def __post_init__(self) -> None:
        for name in ("p_grid", "delta_grid", "scales"):
            vals = tuple(getattr(self, name))
            object.__setattr__(self, name, vals)
            if not vals:
                raise ContractViolation(f"{name} is empty")
            if list(vals) != sorted(vals):
                raise ContractViolation(f"{name} must be sorted ascending")
        for v in self.p_grid + self.delta_grid:
            if not 0.0 <= v <= 1.0:
                raise ContractViolation(f"grid value {v} outside [0, 1]")
        if any(n < 1 for n in self.scales):
            raise ContractViolation("scales must be positive")
        if self.samples_per_cell < 1:
            raise ContractViolation("samples_per_cell must be positive")
        if self.quantity not in QUANTITIES:
            raise ContractViolation(f"unknown quantity {self.quantity!r}")
        if self.quantity == "crossing":
            if self.rho is None:
                raise ContractViolation("crossing sweeps need rho")
            object.__setattr__(self, "rho", Fraction(self.rho))
        if self.quantity == "criterion":
            CriterionConfig(self.alpha, 1)

    @property
    def quantity_label(self) -> str:
        if self.quantity == "crossing":
            return f"crossing(rho={self.rho})"
        return self.quantity

    def to_dict(self) -> dict:
        return {
            "p_grid": list(self.p_grid),
            "delta_grid": list(self.delta_grid),
            "scales": list(self.scales),
            "rule": self.rule.kind.value,
            "k": self.rule.k,
            "samples_per_cell": self.samples_per_cell,
            "master_seed": self.master_seed,
            "quantity": self.quantity,
            "rho": None if self.rho is None else str(self.rho),
            "alpha": self.alpha if self.quantity == "criterion" else None,
        }

    @property
    def spec_hash(self) -> str:
        blob = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()[:16]

    def cells(self) -> list[tuple[int, int, int]]:
        return [
            (ip, jd, kn)
            for ip in range(len(self.p_grid))
            for jd in range(len(self.delta_grid))
            for kn in range(len(self.scales))
        ]

    def cell_seed(self, ip: int, jd: int, kn: int) -> int:
        return stable_hash(self.master_seed, ip, jd, kn)


def evaluate_cell(spec: SweepSpec, cell: tuple[int, int, int], threads: int = 1) -> dict:
    ip, jd, kn = cell
    params = SdpParams(spec.p_grid[ip], spec.delta_grid[jd])
    n = spec.scales[kn]
    seed = spec.cell_seed(*cell)
    t0 = time.perf_counter()
    verdict = None
    if spec.quantity == "theta":
        est = estimate_theta(params, n, spec.rule, spec.samples_per_cell, seed, threads)
    elif spec.quantity == "crossing":
        est = estimate_crossing(params, spec.rho, n, spec.rule, spec.samples_per_cell, seed, threads)
    else:
        v = finite_size_criterion(
            params, CriterionConfig(spec.alpha, n), spec.rule, spec.samples_per_cell, seed, threads
        )
        est = v.f3n
        verdict = v.to_dict()
    record = {
        "kind": "cell",
        "spec_hash": spec.spec_hash,
        "quantity": spec.quantity_label,
        "rule": str(spec.rule),
        "cell": {"p": params.p, "delta": params.delta, "n": n, "ip": ip, "id": jd, "in": kn},
        "estimate": est.to_dict(),
        "wall_time_s": time.perf_counter() - t0,
        "timestamp": datetime.now(timezone.utc).isoformat(timespec="seconds"),
    }
    if verdict is not None:
        record["verdict"] = verdict
    return record


def load_store(path: str | Path) -> list[dict]:
    """All well-formed records; corrupt lines are skipped with a warning."""
    path = Path(path)
    if not path.exists():
        return []
    out = []
    with path.open(encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip():
                continue
            try:
                rec = json.loads(line)
                if not isinstance(rec, dict) or "spec_hash" not in rec:
                    raise ValueError("record without spec_hash")
                if rec.get("kind", "cell") == "cell":
                    c = rec["cell"]
                    (c["ip"], c["id"], c["in"], rec["estimate"]["point"])
            except (ValueError, KeyError, TypeError) as exc:
                log.warning("%s:%d: skipping corrupt record (%s)", path, lineno, exc)
                continue
            out.append(rec)
    return out


def cell_records(records: list[dict], spec_hash: str | None = None) -> list[dict]:
    return [
        r
        for r in records
        if r.get("kind", "cell") == "cell" and (spec_hash is None or r["spec_hash"] == spec_hash)
    ]


def stable_view(records: list[dict]) -> list[str]:
    """Records without run-dependent fields, canonically serialised and sorted."""
    return sorted(
        json.dumps({k: v for k, v in r.items() if k not in VOLATILE}, sort_keys=True) for r in records
    )


class StoreWriter:
    def __init__(self, path: str | Path):
        self.path = Path(path)
        self.path.parent.mkdir(parents=True, exist_ok=True)
        # a torn last line must not swallow the next record
        if self.path.exists() and self.path.stat().st_size:
            with self.path.open("rb") as fh:
                fh.seek(-1, 2)
                torn = fh.read(1) != b"\n"
        else:
            torn = False
        self._fh = self.path.open("a", encoding="utf-8")
        if torn:
            self._fh.write("\n")

    def append(self, record: dict) -> None:
        self._fh.write(json.dumps(record, sort_keys=True) + "\n")
        self._fh.flush()

    def close(self) -> None:
        self._fh.close()

    def __enter__(self) -> "StoreWriter":
        return self

    def __exit__(self, *exc) -> None:
        self.close()


@dataclass
class SweepReport:
    spec_hash: str
    evaluated: int = 0
    skipped: int = 0
    remaining: int = 0
    cells: list[tuple[int, int, int]] = field(default_factory=list)


def run_sweep(
    spec: SweepSpec,
    store: str | Path,
    threads: int | None = None,
    max_evaluations: int | None = None,
) -> SweepReport:
    """Evaluate every cell of ``spec`` not yet in ``store``.

    ``max_evaluations`` stops after that many new cells, leaving a valid
    partial store (used to exercise resume).
    """
    threads = threads or default_threads()
    h = spec.spec_hash
    done = {
        (r["cell"]["ip"], r["cell"]["id"], r["cell"]["in"]) for r in cell_records(load_store(store), h)
    }
    todo = [c for c in spec.cells() if c not in done]
    rep = SweepReport(h, skipped=len(spec.cells()) - len(todo))
    if max_evaluations is not None:
        todo = todo[:max_evaluations]
    with StoreWriter(store) as writer:
        if threads == 1:
            for cell in todo:
                writer.append(_logged(evaluate_cell(spec, cell)))
                rep.evaluated += 1
                rep.cells.append(cell)
        else:
            with ThreadPoolExecutor(max_workers=threads) as pool:
                futures = {pool.submit(evaluate_cell, spec, c): c for c in todo}
                for fut in as_completed(futures):
                    writer.append(_logged(fut.result()))
                    rep.evaluated += 1
                    rep.cells.append(futures[fut])
    rep.remaining = len(spec.cells()) - rep.skipped - rep.evaluated
    return rep


def _logged(rec: dict) -> dict:
    c = rec["cell"]
    e = rec["estimate"]
    log.info(
        "cell p=%g delta=%g n=%d: %s = %.6g [%.6g, %.6g] (%.2fs)",
        c["p"], c["delta"], c["n"], rec["quantity"], e["point"], e["ci_low"], e["ci_high"], rec["wall_time_s"],
    )
    return rec


def record_pc(store: str | Path, pc: dict) -> dict:
    """Append a critical-point estimate so later heatmaps can mark it."""
    blob = json.dumps({k: pc[k] for k in ("s", "samples", "seed")}, sort_keys=True)
    rec = {
        "kind": "pc",
        "spec_hash": "pc-" + hashlib.sha256(blob.encode()).hexdigest()[:12],
        "pc": pc,
        "timestamp": datetime.now(timezone.utc).isoformat(timespec="seconds"),
    }
    with StoreWriter(store) as w:
        w.append(rec)
    return rec


def stored_pc(records: list[dict]) -> float | None:
    pcs = [r for r in records if r.get("kind") == "pc"]
    return float(pcs[-1]["pc"]["point"]) if pcs else None


def export_csv(store: str | Path, out: str | Path, spec_hash: str | None = None) -> int:
    """Write one row per cell, sorted by (p, delta, n); returns the row count.

    Floats are written with ``repr`` so they parse back to identical values.
    """
    rows = []
    for r in cell_records(load_store(store), spec_hash):
        c, e = r["cell"], r["estimate"]
        rows.append((c["p"], c["delta"], c["n"], e["point"], e["ci_low"], e["ci_high"], e["n_samples"], e["seed"]))
    rows.sort(key=lambda t: (t[0], t[1], t[2]))
    with open(out, "w", newline="", encoding="utf-8") as fh:
        wr = csv.writer(fh, lineterminator="\n")
        wr.writerow(CSV_HEADER)
        for row in rows:
            wr.writerow([repr(v) if isinstance(v, float) else v for v in row])
    return len(rows)


def read_csv(path: str | Path) -> list[dict]:
    with open(path, newline="", encoding="utf-8") as fh:
        rd = csv.DictReader(fh)
        return [
            {
                "p": float(r["p"]),
                "delta": float(r["delta"]),
                "n": int(r["n"]),
                "point": float(r["point"]),
                "ci_low": float(r["ci_low"]),
                "ci_high": float(r["ci_high"]),
                "n_samples": int(r["n_samples"]),
                "seed": int(r["seed"]),
            }
            for r in rd
        ]
