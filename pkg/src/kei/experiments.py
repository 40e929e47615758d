"""Suppressant-budget sweeps over synthetic pools.

For every (pool size, alpha, seed) a pool is generated and the best
cycle/chain packing is computed for each budget h.  Rows are appended to
``results.csv`` as soon as a pool finishes, in a fixed task order, so a
crashed run keeps every completed pool and a rerun is byte-identical.

Budgets are solved from the largest down.  Each solve prefers, among the
optimal packings, one that uses the fewest suppressants; if that packing
uses k of them, it is also optimal for every budget in [k, h], so those
budgets need no separate solve.
"""

from __future__ import annotations

import csv
import io
import json
import logging
import math
import statistics
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path
from typing import Iterable, Iterator, Mapping, Optional, Sequence, Union

from . import __version__
from .core import Allocation, BloodType, KeiInstance
from .generator import GeneratorConfig, generate_pool
from .picef import PicefModel, extract_solution, picef_model, with_budget
from .schemes import SchemeKind, WeightScheme
from .solver import BACKENDS, SolveStatus, solve_exact

LOGGER = logging.getLogger(__name__)

SPEC_VERSION = 1
CATEGORIES = ("O", "A", "B", "AB", "sens")
RESULT_COLUMNS = (
    "size",
    "alpha",
    "seed",
    "h",
    "M_h",
    "pct_baseline",
    *(f"pct_matched_{c}" for c in CATEGORIES),
    "status",
)
SUMMARY_BUDGETS = (0, 10, 20, 50)
NA = "NA"


class SpecError(ValueError):
    pass


@dataclass(frozen=True)
class ExperimentSpec:
    sizes: tuple[int, ...] = (64,)
    alphas: tuple[float, ...] = (0.2,)
    h_max: int = 20
    replicates: int = 10
    cycle_cap: int = 3
    chain_cap: int = 3
    scheme: str = SchemeKind.MAX_TR.value
    seeds: Optional[tuple[int, ...]] = None  # defaults to base_seed .. base_seed + replicates - 1
    base_seed: int = 0
    extra_budgets: tuple[int, ...] = ()
    generator: Mapping[str, object] = field(default_factory=dict)  # GeneratorConfig overrides
    backend: str = "highs"
    time_limit: Optional[float] = None
    workers: int = 1

    def __post_init__(self) -> None:
        if self.h_max < 0:
            raise SpecError(f"h_max must be non-negative, got {self.h_max}")
        if self.replicates < 1:
            raise SpecError(f"replicates must be at least 1, got {self.replicates}")
        if self.seeds is not None and len(self.seeds) != self.replicates:
            raise SpecError("seeds must list exactly one seed per replicate")
        if any(b < 0 for b in self.extra_budgets):
            raise SpecError("extra budgets must be non-negative")
        if self.cycle_cap < 1 or self.chain_cap < 0:
            raise SpecError("cycle cap must be >= 1 and chain cap >= 0")
        if self.backend not in BACKENDS:
            raise SpecError(f"unknown backend {self.backend!r}; choose from {sorted(BACKENDS)}")
        if self.workers < 1:
            raise SpecError("workers must be at least 1")
        SchemeKind(self.scheme)
        forbidden = {"n_vertices", "alpha", "seed"} & set(self.generator)
        if forbidden:
            raise SpecError(f"generator overrides may not set {sorted(forbidden)}")
        self.generator_config(0, 0.0, 0)  # validates the overrides

    @property
    def seed_list(self) -> tuple[int, ...]:
        if self.seeds is not None:
            return tuple(self.seeds)
        return tuple(range(self.base_seed, self.base_seed + self.replicates))

    @property
    def budgets(self) -> tuple[int, ...]:
        return tuple(sorted(set(range(self.h_max + 1)) | set(self.extra_budgets)))

    def generator_config(self, size: int, alpha: float, seed: int) -> GeneratorConfig:
        return GeneratorConfig(n_vertices=size, alpha=alpha, seed=seed, **self.generator)

    def tasks(self) -> list[tuple[int, float, int]]:
        return [(s, a, seed) for s in self.sizes for a in self.alphas for seed in self.seed_list]

    def to_json(self) -> dict:
        out = asdict(self)
        out["generator"] = dict(self.generator)
        return {"version": SPEC_VERSION, **out}

    @classmethod
    def from_json(cls, data: Mapping) -> "ExperimentSpec":
        data = dict(data)
        version = data.pop("version", None)
        if version != SPEC_VERSION:
            raise SpecError(f"unsupported experiment spec version {version!r}")
        unknown = set(data) - set(cls.__dataclass_fields__)
        if unknown:
            raise SpecError(f"unknown experiment spec keys: {sorted(unknown)}")
        for key in ("sizes", "alphas", "seeds", "extra_budgets"):
            if data.get(key) is not None:
                data[key] = tuple(data[key])
        return cls(**data)


def load_spec(path: Union[str, Path]) -> ExperimentSpec:
    return ExperimentSpec.from_json(json.loads(Path(path).read_text()))


# -- solving -------------------------------------------------------------------


@dataclass(frozen=True)
class BudgetPoint:
    h: int
    value: int  # M_h
    allocation: Allocation
    suppressants: int
    status: str


def _fewest_suppressants(model: PicefModel) -> PicefModel:
    """Same feasible set; ties on the objective go to fewer half edges."""
    scale = sum(1 for e in model.graph.edges if e.half) + 1
    half = {e.index for e in model.graph.edges if e.half}
    objective = {}
    for v in model.variables:
        if v[0] != "u":
            continue
        w = scale * model.objective.get(v, 0) - (1 if v[1] in half else 0)
        if w:
            objective[v] = w
    return replace(model, objective=objective)


def budget_curve(
    inst: KeiInstance,
    budgets: Sequence[int],
    cycle_cap: int = 3,
    chain_cap: int = 3,
    scheme: Optional[WeightScheme] = None,
    backend: str = "highs",
    time_limit: Optional[float] = None,
) -> dict[int, BudgetPoint]:
    """Optimal packing value for every budget in ``budgets``."""
    base = picef_model(inst, cycle_cap, chain_cap, None, scheme)
    points: dict[int, BudgetPoint] = {}
    todo = sorted(set(budgets), reverse=True)
    while todo:
        h = todo.pop(0)
        model = with_budget(base, h)
        result = solve_exact(_fewest_suppressants(model), time_limit=time_limit, backend=backend)
        solution, alloc = extract_solution(model, result.assignment, inst)
        status = SolveStatus.OPTIMAL.value if result.optimal else SolveStatus.FEASIBLE.value
        point = BudgetPoint(h, solution.objective, alloc, solution.suppressants, status)
        points[h] = point
        if result.optimal:
            covered = [b for b in todo if b >= solution.suppressants]
            for b in covered:
                points[b] = replace(point, h=b)
            todo = [b for b in todo if b < solution.suppressants]
    return points


def _category_shares(inst: KeiInstance, alloc: Allocation) -> dict[str, Optional[float]]:
    totals = {c: 0 for c in CATEGORIES}
    matched = {c: 0 for c in CATEGORIES}
    for r in inst.recipients:
        cats = []
        if r.blood is not None:
            cats.append(r.blood.value)
        if r.sensitized:
            cats.append("sens")
        for c in cats:
            totals[c] += 1
            matched[c] += r.id in alloc.assignment
    return {c: (100.0 * matched[c] / totals[c] if totals[c] else None) for c in CATEGORIES}


def _fmt(x: Optional[float]) -> str:
    return NA if x is None else f"{x:.4f}"


def run_task(spec: ExperimentSpec, size: int, alpha: float, seed: int) -> list[dict[str, str]]:
    """All result rows for one pool; a failing pool yields rows with status ``error``."""
    budgets = spec.budgets
    try:
        inst = generate_pool(spec.generator_config(size, alpha, seed))
        scheme = WeightScheme.of(spec.scheme)
        points = budget_curve(
            inst, budgets, spec.cycle_cap, spec.chain_cap, scheme, spec.backend, spec.time_limit
        )
    except Exception:  # one bad pool must not stop the sweep
        LOGGER.exception("pool size=%s alpha=%s seed=%s failed", size, alpha, seed)
        return [
            _row(size, alpha, seed, h, None, None, dict.fromkeys(CATEGORIES), "error") for h in budgets
        ]
    m0 = points[0].value if 0 in points else None
    if m0 == 0:
        LOGGER.warning("pool size=%s alpha=%s seed=%s has M_0 = 0; %%Baseline is NA", size, alpha, seed)
    rows = []
    for h in budgets:
        p = points[h]
        pct = 100.0 * (p.value - m0) / m0 if m0 else None
        rows.append(_row(size, alpha, seed, h, p.value, pct, _category_shares(inst, p.allocation), p.status))
    return rows


def _row(size, alpha, seed, h, value, pct, shares, status) -> dict[str, str]:
    row = {
        "size": str(size),
        "alpha": repr(float(alpha)),
        "seed": str(seed),
        "h": str(h),
        "M_h": NA if value is None else str(value),
        "pct_baseline": _fmt(pct),
    }
    row.update({f"pct_matched_{c}": _fmt(shares[c]) for c in CATEGORIES})
    row["status"] = status
    return row


def _task_rows(args: tuple[ExperimentSpec, int, float, int]) -> list[dict[str, str]]:
    return run_task(*args)


def _ordered(spec: ExperimentSpec, tasks: list[tuple[int, float, int]]) -> Iterator[list[dict[str, str]]]:
    jobs = [(spec, *t) for t in tasks]
    if spec.workers == 1 or len(jobs) <= 1:
        for job in jobs:
            yield _task_rows(job)
        return
    with ProcessPoolExecutor(max_workers=spec.workers) as pool:
        # map() yields in submission order, which keeps the file deterministic
        yield from pool.map(_task_rows, jobs)


# -- sweep ---------------------------------------------------------------------


@dataclass
class SweepReport:
    rows: list[dict[str, str]]
    errors: int
    out_dir: Path

    @property
    def ok(self) -> bool:
        return self.errors == 0


def _task_key(row: Mapping[str, str]) -> tuple[str, str, str]:
    return row["size"], row["alpha"], row["seed"]


def _completed(path: Path, spec: ExperimentSpec) -> dict[tuple[str, str, str], list[dict[str, str]]]:
    """Finished pools of an earlier, interrupted run with the same spec."""
    if not path.exists():
        return {}
    with path.open(newline="") as fh:
        reader = csv.DictReader(fh)
        if tuple(reader.fieldnames or ()) != RESULT_COLUMNS:
            return {}
        groups: dict[tuple[str, str, str], list[dict[str, str]]] = {}
        for row in reader:
            groups.setdefault(_task_key(row), []).append(row)
    n = len(spec.budgets)
    return {k: rows for k, rows in groups.items() if len(rows) == n and all(r["status"] != "error" for r in rows)}


def run_sweep(spec: ExperimentSpec, out_dir: Union[str, Path], resume: bool = False) -> SweepReport:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    results = out / "results.csv"
    done = _completed(results, spec) if resume else {}
    tasks = spec.tasks()
    keyed = [(str(s), repr(float(a)), str(seed)) for s, a, seed in tasks]

    # keep the prefix of finished pools, recompute the rest in task order
    prefix = 0
    while prefix < len(tasks) and keyed[prefix] in done:
        prefix += 1
    all_rows: list[dict[str, str]] = []
    errors = 0
    with results.open("w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=RESULT_COLUMNS, lineterminator="\n")
        writer.writeheader()
        for key in keyed[:prefix]:
            writer.writerows(done[key])
            all_rows.extend(done[key])
        fh.flush()
        for rows in _ordered(spec, tasks[prefix:]):
            writer.writerows(rows)
            fh.flush()
            all_rows.extend(rows)
            if any(r["status"] == "error" for r in rows):
                errors += 1
    write_metadata(spec, out / "metadata.json")
    summary = summarize(all_rows)
    write_summary(summary, out / "summary.csv")
    (out / "curves.svg").write_text(render_svg(summary))
    return SweepReport(all_rows, errors, out)


def write_metadata(spec: ExperimentSpec, path: Path) -> None:
    meta = {
        "package_version": __version__,
        "spec": spec.to_json(),
        "generator_defaults": GeneratorConfig().to_json(),
        "assumptions": [
            f"cycle cap D={spec.cycle_cap} and chain cap L={spec.chain_cap} are assumed caps",
            "pools are synthetic; blood type, sensitization and crossmatch rates are configurable stand-ins",
            "pct_baseline is NA when M_0 = 0 and such pools are left out of medians",
            "budgets are solved largest first; a packing using k suppressants fills every budget in [k, h]",
            "among optimal packings the solver prefers the fewest suppressants",
        ],
        "columns": list(RESULT_COLUMNS),
    }
    path.write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n")


# -- summary ---------------------------------------------------------------------


@dataclass(frozen=True)
class CurvePoint:
    size: int
    alpha: float
    h: int
    replicates: int
    median: Optional[float]
    low: Optional[float]
    high: Optional[float]
    median_M: Optional[float]
    categories: Mapping[str, Optional[float]]


def _num(x: str) -> Optional[float]:
    return None if x == NA else float(x)


def summarize(rows: Iterable[Mapping[str, str]]) -> list[CurvePoint]:
    """Median and min/max %Baseline per (size, alpha, h), NA pools excluded."""
    groups: dict[tuple[int, float, int], list[Mapping[str, str]]] = {}
    for r in rows:
        if r["status"] == "error":
            continue
        groups.setdefault((int(r["size"]), float(r["alpha"]), int(r["h"])), []).append(r)
    out = []
    for (size, alpha, h), rs in sorted(groups.items()):
        pct = [v for v in (_num(r["pct_baseline"]) for r in rs) if v is not None]
        ms = [float(r["M_h"]) for r in rs if r["M_h"] != NA]
        cats = {}
        for c in CATEGORIES:
            vals = [v for v in (_num(r[f"pct_matched_{c}"]) for r in rs) if v is not None]
            cats[c] = statistics.median(vals) if vals else None
        out.append(
            CurvePoint(
                size,
                alpha,
                h,
                len(pct),
                statistics.median(pct) if pct else None,
                min(pct) if pct else None,
                max(pct) if pct else None,
                statistics.median(ms) if ms else None,
                cats,
            )
        )
    return out


SUMMARY_COLUMNS = (
    "size",
    "alpha",
    "h",
    "replicates",
    "median_pct_baseline",
    "min_pct_baseline",
    "max_pct_baseline",
    "median_M_h",
    *(f"median_pct_matched_{c}" for c in CATEGORIES),
    "category_budget",
)


def write_summary(points: Sequence[CurvePoint], path: Path) -> None:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(SUMMARY_COLUMNS)
    for p in points:
        writer.writerow(
            [
                p.size,
                repr(p.alpha),
                p.h,
                p.replicates,
                _fmt(p.median),
                _fmt(p.low),
                _fmt(p.high),
                _fmt(p.median_M),
                *(_fmt(p.categories[c]) for c in CATEGORIES),
                "yes" if p.h in SUMMARY_BUDGETS else "no",
            ]
        )
    path.write_text(buf.getvalue())


_PALETTE = ("#1b6ca8", "#d1495b", "#2e933c", "#edae49", "#6a4c93", "#00798c")


def render_svg(points: Sequence[CurvePoint], width: int = 640, height: int = 400) -> str:
    """Line chart of median %Baseline with a shaded min-max band per series."""
    series: dict[tuple[int, float], list[CurvePoint]] = {}
    for p in points:
        if p.median is not None:
            series.setdefault((p.size, p.alpha), []).append(p)
    left, right, top, bottom = 60, 150, 20, 50
    pw, ph = width - left - right, height - top - bottom
    hs = [p.h for ps in series.values() for p in ps] or [0, 1]
    ys = [v for ps in series.values() for p in ps for v in (p.low, p.high)] or [0.0, 1.0]
    x_lo, x_hi = min(hs), max(max(hs), min(hs) + 1)
    y_lo, y_hi = min(0.0, min(ys)), max(ys)
    if y_hi <= y_lo:
        y_hi = y_lo + 1.0

    def sx(h: float) -> float:
        return left + pw * (h - x_lo) / (x_hi - x_lo)

    def sy(v: float) -> float:
        return top + ph * (1 - (v - y_lo) / (y_hi - y_lo))

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="11">',
        f'<rect x="0" y="0" width="{width}" height="{height}" fill="white"/>',
        f'<line x1="{left}" y1="{top + ph}" x2="{left + pw}" y2="{top + ph}" stroke="black"/>',
        f'<line x1="{left}" y1="{top}" x2="{left}" y2="{top + ph}" stroke="black"/>',
    ]
    for i in range(6):
        h = x_lo + (x_hi - x_lo) * i / 5
        v = y_lo + (y_hi - y_lo) * i / 5
        out.append(f'<text x="{sx(h):.1f}" y="{top + ph + 15}" text-anchor="middle">{h:g}</text>')
        out.append(f'<text x="{left - 6}" y="{sy(v) + 4:.1f}" text-anchor="end">{v:.1f}</text>')
    out.append(f'<text x="{left + pw / 2}" y="{height - 12}" text-anchor="middle">budget h</text>')
    out.append(
        f'<text x="14" y="{top + ph / 2}" text-anchor="middle" '
        f'transform="rotate(-90 14 {top + ph / 2})">%Baseline</text>'
    )
    for k, ((size, alpha), ps) in enumerate(sorted(series.items())):
        color = _PALETTE[k % len(_PALETTE)]
        ps = sorted(ps, key=lambda p: p.h)
        band = [(sx(p.h), sy(p.high)) for p in ps] + [(sx(p.h), sy(p.low)) for p in reversed(ps)]
        line = [(sx(p.h), sy(p.median)) for p in ps]
        out.append(
            f'<polygon points="{" ".join(f"{x:.1f},{y:.1f}" for x, y in band)}" '
            f'fill="{color}" fill-opacity="0.2" stroke="none"/>'
        )
        out.append(
            f'<polyline points="{" ".join(f"{x:.1f},{y:.1f}" for x, y in line)}" '
            f'fill="none" stroke="{color}" stroke-width="2"/>'
        )
        ly = top + 14 * (k + 1)
        out.append(f'<line x1="{left + pw + 10}" y1="{ly - 4}" x2="{left + pw + 28}" y2="{ly - 4}" stroke="{color}" stroke-width="2"/>')
        out.append(f'<text x="{left + pw + 32}" y="{ly}">n={size}, α={alpha:g}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"
