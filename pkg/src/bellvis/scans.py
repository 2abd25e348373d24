"""Batch drivers: evenly spaced scans, random-settings scans, CHSH subset detection."""
from __future__ import annotations

import hashlib
import itertools
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Optional

import numpy as np

from .lp import OPTIMAL, LpProblem, SolverError, solve
from .predictions import SettingsSpec, build_prediction_matrix, correlation_table

INV_SQRT2 = 1 / math.sqrt(2)
TSIRELSON = 2 * math.sqrt(2)
GUARD_TOL = 1e-7
CLASSIFY_TOL = 1e-6

EVEN = "even_spaced"
RANDOM_COPLANAR = "random_coplanar"
RANDOM_VECTOR = "random_vector"

# odd number of minus signs on (Q11, Q12, Q21, Q22)
CHSH_PATTERNS = np.array([s for s in itertools.product((1, -1), repeat=4) if s.count(-1) % 2 == 1],
                         dtype=float)


@dataclass
class ScanConfig:
    kind: str
    n: int = 5
    m: int = 5
    count: int = 1000
    seed: int = 0
    range_a: tuple[float, float] = (0.0, math.pi)
    range_b: tuple[float, float] = (0.0, math.pi)
    n_range: tuple[int, int] = (2, 7)
    v_cap: float = 4.0
    tolerance: float = 1e-9
    backend: str = "auto"

    def __post_init__(self):
        if self.kind not in (EVEN, RANDOM_COPLANAR, RANDOM_VECTOR):
            raise ValueError(f"unknown scan kind {self.kind!r}")
        if self.kind != EVEN and self.count < 1:
            raise ValueError("random scans need count >= 1")
        if self.n < 1 or self.m < 1:
            raise ValueError("n and m must be positive")
        lo, hi = self.n_range
        if not 1 <= lo <= hi:
            raise ValueError(f"invalid n_range {self.n_range}")
        self.range_a = tuple(float(x) for x in self.range_a)
        self.range_b = tuple(float(x) for x in self.range_b)
        self.n_range = (int(lo), int(hi))


@dataclass
class ScanRecord:
    index: int
    n: int
    m: int
    digest: str
    critical_v: Optional[float]
    status: str
    chsh_subset: Optional[tuple[int, int, int, int]] = None
    error: Optional[str] = None


@dataclass
class ScanReport:
    config: ScanConfig
    records: list[ScanRecord]
    summary: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {"config": asdict(self.config),
                "records": [asdict(r) for r in self.records],
                "summary": self.summary}

    @property
    def guard_fired(self) -> bool:
        return self.summary.get("below_threshold", 0) > 0


def settings_digest(spec: SettingsSpec) -> str:
    h = hashlib.sha256()
    for side in (spec.a, spec.b):
        h.update(np.ascontiguousarray(side, dtype="<f8").tobytes())
        h.update(b"|")
    return h.hexdigest()[:16]


def chsh_value(q2: np.ndarray) -> float:
    """Largest |CHSH combination| of a 2x2 correlation block."""
    return float(np.max(np.abs(CHSH_PATTERNS @ np.asarray(q2, dtype=float).ravel())))


def detect_chsh_subset(spec: SettingsSpec, tol: float = 1e-9):
    """Indices ``(i1, i2, j1, j2)`` (0-based) of a 2x2 sub-grid reaching 2*sqrt(2), else None."""
    q = correlation_table(spec.a, spec.b)
    n, m = q.shape
    for i1, i2 in itertools.combinations(range(n), 2):
        for j1, j2 in itertools.combinations(range(m), 2):
            if chsh_value(q[np.ix_((i1, i2), (j1, j2))]) >= TSIRELSON - tol:
                return i1, i2, j1, j2
    return None


def even_settings(n: int, interval=(0.0, math.pi)) -> np.ndarray:
    lo, hi = interval
    return lo + (hi - lo) * np.arange(n) / n


def random_directions(rng: np.random.Generator, k: int) -> np.ndarray:
    z = rng.uniform(-1.0, 1.0, k)
    phi = rng.uniform(0.0, 2 * math.pi, k)
    r = np.sqrt(1.0 - z * z)
    return np.column_stack([r * np.cos(phi), r * np.sin(phi), z])


def _run_trial(args):
    index, spec, v_cap, tol, backend = args
    n, m = spec.shape
    rec = ScanRecord(index, n, m, settings_digest(spec), None, "error")
    try:
        res = solve(LpProblem(build_prediction_matrix(spec).values, v_cap, tol), backend=backend)
    except (SolverError, ValueError) as exc:
        rec.error = f"{type(exc).__name__}: {exc}"
        return rec
    rec.critical_v = res.critical_v
    rec.status = res.status
    found = detect_chsh_subset(spec)
    rec.chsh_subset = tuple(int(i) for i in found) if found else None
    return rec


def _summarize(records: list[ScanRecord]) -> dict:
    vs = [r.critical_v for r in records if r.critical_v is not None and r.status == OPTIMAL]
    below = [r.index for r in records if r.critical_v is not None and r.critical_v < INV_SQRT2 - GUARD_TOL]
    # subset found => V* = 1/sqrt(2); not found => V* >= 1/sqrt(2)
    misclassified = [
        r.index for r in records if r.critical_v is not None and (
            (r.chsh_subset is not None and abs(r.critical_v - INV_SQRT2) > CLASSIFY_TOL)
            or (r.chsh_subset is None and r.critical_v < INV_SQRT2 - GUARD_TOL))
    ]
    return {
        "trials": len(records),
        "solved": len(vs),
        "errors": sum(r.status == "error" for r in records),
        "min_v": min(vs) if vs else None,
        "max_v": max(vs) if vs else None,
        "mean_v": float(np.mean(vs)) if vs else None,
        "below_threshold": len(below),
        "below_threshold_trials": below,
        "classification_violations": misclassified,
    }


def _run(cfg: ScanConfig, specs: list[SettingsSpec], workers: int) -> ScanReport:
    jobs = [(i, s, cfg.v_cap, cfg.tolerance, cfg.backend) for i, s in enumerate(specs)]
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            records = list(pool.map(_run_trial, jobs, chunksize=max(1, len(jobs) // (4 * workers))))
    else:
        records = [_run_trial(j) for j in jobs]
    return ScanReport(cfg, records, _summarize(records))


def run_even_spaced_scan(cfg: ScanConfig, workers: int = 1) -> ScanReport:
    """Solve N x N scans with alpha_i = beta_i evenly spaced over ``range_a``, one per N."""
    if cfg.kind != EVEN:
        raise ValueError(f"expected an {EVEN!r} config, got {cfg.kind!r}")
    lo, hi = cfg.n_range
    specs = []
    for n in range(lo, hi + 1):
        angles = even_settings(n, cfg.range_a)
        specs.append(SettingsSpec(angles, angles.copy()))
    report = _run(cfg, specs, workers)
    trend = [(r.n, r.critical_v) for r in report.records
             if r.chsh_subset is None and r.critical_v is not None]
    report.summary["no_chsh_trend"] = trend
    report.summary["no_chsh_trend_non_increasing"] = all(
        later <= earlier + GUARD_TOL for (_, earlier), (_, later) in zip(trend, trend[1:]))
    return report


def draw_settings(cfg: ScanConfig) -> list[SettingsSpec]:
    rng = np.random.default_rng(cfg.seed)
    specs = []
    for _ in range(cfg.count):
        if cfg.kind == RANDOM_VECTOR:
            specs.append(SettingsSpec(random_directions(rng, cfg.n), random_directions(rng, cfg.m)))
        else:
            specs.append(SettingsSpec(rng.uniform(*cfg.range_a, cfg.n), rng.uniform(*cfg.range_b, cfg.m)))
    return specs


def run_random_scan(cfg: ScanConfig, workers: int = 1) -> ScanReport:
    """Solve ``cfg.count`` random settings draws; deterministic for a given seed."""
    if cfg.kind not in (RANDOM_COPLANAR, RANDOM_VECTOR):
        raise ValueError(f"expected a random scan config, got {cfg.kind!r}")
    return _run(cfg, draw_settings(cfg), workers)
