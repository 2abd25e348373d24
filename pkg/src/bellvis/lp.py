"""Critical visibility of a correlation matrix.

The critical visibility ``V*`` of ``Q`` is the largest ``V`` for which ``V Q``
is a convex combination of deterministic strategy matrices ``a b^T``.  Two
backends solve the same LP: :func:`solve_dense` prices every canonical
strategy at each pivot, :func:`solve_column_generation` grows a restricted
master problem with best-response pricing.  Both return a primal
:class:`LhvModel` and a dual :class:`BellWitness`.
"""
from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from ._simplex import ColumnPool, NonterminationError, Simplex, SolverError
from .predictions import PredictionMatrix
from .strategies import (
    DENSE_CAP,
    MAX_LENGTH,
    SizeError,
    StrategyPair,
    StrategySpace,
    best_response,
    canonicalize,
    extend_pair,
    pair_index,
    top_responses,
)

__all__ = [
    "OPTIMAL", "CAPPED", "DEGENERATE",
    "LpProblem", "LhvModel", "BellWitness", "SolveResult",
    "ModelReport", "WitnessReport",
    "SolverError", "NonterminationError", "StallError", "SizeError",
    "solve", "solve_dense", "solve_column_generation",
    "verify_model", "verify_witness", "extend_model",
]

OPTIMAL = "optimal"
CAPPED = "capped_at_v_cap"
DEGENERATE = "degenerate_zero_matrix"

AUTO_DENSE_LIMIT = 18
MODEL_TOL = 1e-7
WITNESS_BOUND_TOL = 1e-9
WITNESS_GAP_TOL = 1e-7


class StallError(SolverError):
    pass


@dataclass
class LpProblem:
    q: np.ndarray
    v_cap: float = 4.0
    tolerance: float = 1e-9

    def __post_init__(self):
        if isinstance(self.q, PredictionMatrix):
            self.q = self.q.values
        self.q = PredictionMatrix(self.q).values
        if not self.v_cap > 0:
            raise ValueError(f"v_cap must be positive, got {self.v_cap}")
        if not 0 < self.tolerance < 1e-3:
            raise ValueError(f"tolerance must lie in (0, 1e-3), got {self.tolerance}")

    @property
    def shape(self) -> tuple[int, int]:
        return self.q.shape


@dataclass
class LhvModel:
    """Probability distribution over canonical strategy pairs."""

    support: list[tuple[StrategyPair, float]]
    achieved_v: float

    def correlations(self) -> np.ndarray:
        return sum(p * pair.matrix() for pair, p in self.support)


@dataclass
class BellWitness:
    """Linear functional ``sum c_ij E_ij`` bounded by 1 over all LHV models."""

    coefficients: np.ndarray
    lhv_bound: float
    quantum_value: float


@dataclass
class SolveResult:
    critical_v: float
    status: str
    q: np.ndarray
    model: Optional[LhvModel] = None
    witness: Optional[BellWitness] = None
    diagnostics: dict = field(default_factory=dict)
    v_cap: float = 4.0


@dataclass
class ModelReport:
    max_deviation: float
    sum_deviation: float
    passed: bool


@dataclass
class WitnessReport:
    lhv_bound: float
    quantum_value: float
    gap: float
    method: str
    passed: bool
    failures: list[str] = field(default_factory=list)


def _as_problem(prob) -> LpProblem:
    return prob if isinstance(prob, LpProblem) else LpProblem(prob)


def _degenerate(prob: LpProblem, backend: str, start: float) -> SolveResult:
    return SolveResult(
        critical_v=float("inf"),
        status=DEGENERATE,
        q=prob.q,
        diagnostics={"backend": backend, "iterations": 0, "columns_generated": 0,
                     "wall_time": time.perf_counter() - start},
        v_cap=prob.v_cap,
    )


def _finish(prob, lp: Simplex, basis, x, y, pair_of, backend, start, extra_diag) -> SolveResult:
    q, tol = prob.q, prob.tolerance
    n, m = q.shape
    pos_v = np.flatnonzero(basis == 0)
    v = float(x[pos_v[0]]) if pos_v.size else 0.0

    struct = np.flatnonzero(basis >= lp.offset)
    keep = [i for i in struct if x[i] > tol]
    total = sum(x[i] for i in keep)
    support = [(pair_of(basis[i] - lp.offset), float(x[i] / total)) for i in keep]
    model = LhvModel(support, v)

    if v >= prob.v_cap - tol:
        status, critical = CAPPED, prob.v_cap
        witness = None
    else:
        status, critical = OPTIMAL, v
        witness = _witness_from_duals(y, q)

    diag = {"backend": backend, "iterations": lp.iterations,
            "wall_time": time.perf_counter() - start}
    diag.update(extra_diag)
    return SolveResult(critical, status, q, model, witness, diag, prob.v_cap)


def _witness_from_duals(y: np.ndarray, q: np.ndarray) -> Optional[BellWitness]:
    n, m = q.shape
    c = -y[: n * m].reshape(n, m)
    bound, _ = best_response(c, threads=1)
    if bound <= 0:
        return None
    c = c / bound
    lhv, _ = best_response(c, threads=1)
    return BellWitness(c, lhv, float(np.sum(c * q)))


def _check_dense(n: int, m: int, cap: int) -> None:
    if n + m > cap:
        raise SizeError(f"n + m = {n + m} exceeds the dense cap {cap}; use column generation")


def solve_dense(prob, dense_cap: int = DENSE_CAP, max_iter: int = 100_000) -> SolveResult:
    """Simplex over all ``2**(N+M-1)`` canonical strategy columns."""
    start = time.perf_counter()
    prob = _as_problem(prob)
    n, m = prob.shape
    _check_dense(n, m, dense_cap)
    if np.max(np.abs(prob.q)) <= prob.tolerance:
        return _degenerate(prob, "dense", start)
    space = StrategySpace(n, m, cap=dense_cap)
    lp = Simplex(prob.q, prob.v_cap, space, prob.tolerance, max_iter)
    top = (1 << (n - 1)) - 1
    j_plus = top * (1 << m) + (1 << m) - 1
    j_minus = top * (1 << m)
    purge = lp.offset + np.array([pair_index(p) for p in _seed_pairs(n, m)])
    basis, x, y = lp.solve(lp.start_basis(j_plus, j_minus), purge=purge)
    return _finish(prob, lp, basis, x, y, space.pair, "dense", start,
                   {"columns_generated": len(space)})


def _seed_pairs(n: int, m: int) -> list[StrategyPair]:
    """All-ones, its B-side negation, and every (single flip or none) x (single flip or none).

    The outer products of ``{1, flip_i} x {1, flip_j}`` span all N x M
    matrices (``1 - flip_i = 2 e_i``), so these columns can replace every
    artificial in the start basis with a pivot of order one.
    """
    def flips(k):
        yield (1,) * k
        for i in range(k):
            v = [1] * k
            v[i] = -1
            yield tuple(v)

    seeds = [StrategyPair((1,) * n, (1,) * m), StrategyPair((1,) * n, (-1,) * m)]
    seeds += [canonicalize(StrategyPair(a, b)) for a in flips(n) for b in flips(m)]
    return list(dict.fromkeys(seeds))


def solve_column_generation(prob, columns_per_round: int = 8, max_rounds: int = 10_000,
                            stall_window: int = 500, threads: Optional[int] = None,
                            max_iter: int = 1_000_000) -> SolveResult:
    """Restricted master problem grown by best-response pricing.

    Stops when no strategy has reduced cost above the tolerance.  Raises
    :class:`StallError` when the objective has not improved for
    ``stall_window`` rounds.
    """
    start = time.perf_counter()
    prob = _as_problem(prob)
    n, m = prob.shape
    if min(n, m) > MAX_LENGTH:
        raise SizeError(f"pricing enumerates the smaller side; min(n, m) = {min(n, m)} > {MAX_LENGTH}")
    if np.max(np.abs(prob.q)) <= prob.tolerance:
        return _degenerate(prob, "column_generation", start)

    pool = ColumnPool(n, m)
    pool.add(_seed_pairs(n, m))
    lp = Simplex(prob.q, prob.v_cap, pool, prob.tolerance, max_iter)
    basis = lp.start_basis(pool.index(StrategyPair((1,) * n, (1,) * m)),
                           pool.index(StrategyPair((1,) * n, (-1,) * m)))
    purge = lp.offset + np.arange(len(pool))
    best_v, last_progress = -1.0, 0
    for rounds in range(1, max_rounds + 1):
        basis, x, y = lp.solve(basis, purge=purge)
        pos_v = np.flatnonzero(basis == 0)
        v = float(x[pos_v[0]]) if pos_v.size else 0.0
        if v > best_v + prob.tolerance:
            best_v, last_progress = v, rounds
        elif rounds - last_progress >= stall_window:
            raise StallError(f"no progress in {stall_window} column generation rounds (V = {v})")

        w = -y[: n * m].reshape(n, m)
        mu = y[n * m]
        found = [p for val, p in top_responses(w, columns_per_round, threads)
                 if val - mu > prob.tolerance]
        if not found or pool.add(found) == 0:
            break
    else:
        raise NonterminationError(f"column generation did not converge in {max_rounds} rounds")

    return _finish(prob, lp, basis, x, y, pool.pair, "column_generation", start,
                   {"columns_generated": len(pool), "rounds": rounds})


def solve(prob, backend: str = "auto", threads: Optional[int] = None,
          dense_limit: int = AUTO_DENSE_LIMIT) -> SolveResult:
    """Solve with the dense backend when ``N + M <= dense_limit``, else column generation."""
    prob = _as_problem(prob)
    n, m = prob.shape
    if backend == "auto":
        backend = "dense" if n + m <= dense_limit else "column_generation"
    if backend == "dense":
        return solve_dense(prob)
    if backend in ("column_generation", "cg"):
        return solve_column_generation(prob, threads=threads)
    raise ValueError(f"unknown backend {backend!r}")


def verify_model(model: LhvModel, q) -> ModelReport:
    """Rebuild the correlations of ``model`` and compare with ``achieved_v * q``."""
    q = q.values if isinstance(q, PredictionMatrix) else np.asarray(q, dtype=float)
    if not model.support:
        raise ValueError("model support is empty")
    total = np.zeros_like(q)
    psum = 0.0
    for pair, p in model.support:
        if pair.shape != q.shape:
            raise ValueError(f"strategy shape {pair.shape} does not match matrix shape {q.shape}")
        total += p * pair.matrix()
        psum += p
    dev = float(np.max(np.abs(total - model.achieved_v * q)))
    sdev = abs(psum - 1.0)
    negative = any(p < 0 for _, p in model.support)
    return ModelReport(dev, sdev, dev <= MODEL_TOL and sdev <= MODEL_TOL and not negative)


def verify_witness(w: BellWitness, q, v_star: float, exhaustive_cap: int = DENSE_CAP) -> WitnessReport:
    """Check dual feasibility over every strategy and the duality gap ``|c.Q - 1/V*|``."""
    q = q.values if isinstance(q, PredictionMatrix) else np.asarray(q, dtype=float)
    c = np.asarray(w.coefficients, dtype=float)
    if c.shape != q.shape:
        raise ValueError(f"witness shape {c.shape} does not match matrix shape {q.shape}")
    n, m = q.shape
    if n + m <= exhaustive_cap:
        bound = float(np.max(StrategySpace(n, m, cap=exhaustive_cap).products(c)))
        method = "exhaustive"
    else:
        bound = best_response(c)[0]
        method = "pricing"
    value = float(np.sum(c * q))
    gap = abs(value - 1.0 / v_star) if v_star > 0 else float("inf")
    failures = []
    if bound > 1.0 + WITNESS_BOUND_TOL:
        failures.append(f"lhv bound {bound!r} exceeds 1")
    if not gap <= WITNESS_GAP_TOL:
        failures.append(f"quantum value {value!r} differs from 1/V* by {gap!r}")
    return WitnessReport(bound, value, gap, method, not failures, failures)


def extend_model(model: LhvModel, a_map, b_map) -> LhvModel:
    """Carry an LHV model over to settings that are signed copies of solved ones.

    See :func:`bellvis.strategies.extend_pair` for the map format; pairs that
    coincide after extension are merged.
    """
    merged: dict[StrategyPair, float] = {}
    for pair, p in model.support:
        new = extend_pair(pair, a_map, b_map)
        merged[new] = merged.get(new, 0.0) + p
    return LhvModel(list(merged.items()), model.achieved_v)
