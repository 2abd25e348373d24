"""Revised simplex for the critical-visibility LP.

    maximize    V
    subject to  sum_k p_k S_k - V Q = 0      (N*M rows)
                sum_k p_k           = 1
                V + t               = v_cap
                p, V, t >= 0

Variable layout: 0 is V, 1 is the cap slack t, then one artificial per
correlation row except the first, then the strategy columns of the source.

The start basis is {J, -J, t} plus artificials, where J is the all-ones
strategy matrix: p_J = p_-J = 1/2 reproduces V = 0.  Artificials start at
zero and are never allowed to move off zero, so no phase one is needed.
"""
from __future__ import annotations

import numpy as np
from scipy.linalg import lu_factor, lu_solve

from .strategies import StrategyPair

# direction entries below PIVOT_TOL * max(1, |u|_inf) are treated as zero
PIVOT_TOL = 1e-9
# artificials whose best replacement pivot is below this stay basic
PURGE_TOL = 1e-7
DEGENERATE_STEP = 1e-12
LEX_TOL = 1e-10


class SolverError(RuntimeError):
    pass


class NonterminationError(SolverError):
    pass


class ColumnPool:
    """An explicit, append-only set of strategy columns."""

    def __init__(self, n: int, m: int):
        self.n, self.m = n, m
        self.pairs: list[StrategyPair] = []
        self._index: dict[StrategyPair, int] = {}
        self._cols = np.empty((n * m, 0))

    def __len__(self):
        return len(self.pairs)

    def __contains__(self, pair):
        return pair in self._index

    def add(self, pairs) -> int:
        new = [p for p in dict.fromkeys(pairs) if p not in self._index]
        if new:
            for p in new:
                self._index[p] = len(self.pairs)
                self.pairs.append(p)
            block = np.stack([np.outer(p.a, p.b).ravel() for p in new], axis=1).astype(float)
            self._cols = np.hstack([self._cols, block])
        return len(new)

    def index(self, pair: StrategyPair) -> int:
        return self._index[pair]

    def products(self, w: np.ndarray) -> np.ndarray:
        return w.ravel() @ self._cols

    def block(self, idx) -> np.ndarray:
        return self._cols[:, np.atleast_1d(idx)]

    def pair(self, k: int) -> StrategyPair:
        return self.pairs[int(k)]


class Simplex:
    def __init__(self, q: np.ndarray, v_cap: float, source, tol: float = 1e-9,
                 max_iter: int = 100_000):
        self.q = np.asarray(q, dtype=float)
        self.n, self.m = self.q.shape
        self.nm = self.n * self.m
        self.rows = self.nm + 2
        self.v_cap = float(v_cap)
        self.source = source
        self.tol = tol
        self.max_iter = max_iter
        self.n_art = self.nm - 1
        self.offset = 2 + self.n_art
        self.rhs = np.zeros(self.rows)
        self.rhs[self.nm] = 1.0
        self.rhs[self.nm + 1] = self.v_cap
        self.iterations = 0

        extra = np.zeros((self.rows, self.offset))
        extra[: self.nm, 0] = -self.q.ravel()
        extra[self.nm + 1, 0] = 1.0
        extra[self.nm + 1, 1] = 1.0
        for i in range(self.n_art):
            extra[i + 1, 2 + i] = 1.0
        self.extra = extra
        self.extra_cost = np.zeros(self.offset)
        self.extra_cost[0] = 1.0

    def start_basis(self, j_plus: int, j_minus: int) -> np.ndarray:
        # rows 0 and nm are covered by J and -J, the rest by artificials
        basis = np.empty(self.rows, dtype=np.int64)
        basis[0] = self.offset + j_plus
        basis[1: self.nm] = 2 + np.arange(self.n_art)
        basis[self.nm] = self.offset + j_minus
        basis[self.nm + 1] = 1
        return basis

    def columns(self, idx: np.ndarray) -> np.ndarray:
        idx = np.asarray(idx, dtype=np.int64)
        out = np.zeros((self.rows, len(idx)))
        ext = idx < self.offset
        out[:, ext] = self.extra[:, idx[ext]]
        st = ~ext
        if st.any():
            out[: self.nm, st] = self.source.block(idx[st] - self.offset)
            out[self.nm, st] = 1.0
        return out

    def is_artificial(self, j) -> bool:
        return 2 <= j < self.offset

    def reduced_costs(self, y: np.ndarray):
        """Reduced costs (maximization sense) of extra and strategy columns."""
        d_extra = self.extra_cost - y @ self.extra
        d_extra[2:] = -np.inf
        d_struct = -(self.source.products(y[: self.nm].reshape(self.n, self.m)) + y[self.nm])
        return d_extra, d_struct

    def purge_artificials(self, basis: np.ndarray, candidates) -> np.ndarray:
        """Pivot basic artificials out at zero step, largest available pivot first.

        ``candidates`` are column ids tried as replacements.  Artificials sit
        at zero, so each swap keeps the basic solution unchanged.
        """
        candidates = np.asarray(candidates, dtype=np.int64)
        cols = self.columns(candidates)
        basis = basis.copy()
        stuck: set[int] = set()
        while True:
            rows = [r for r in np.flatnonzero((basis >= 2) & (basis < self.offset)) if r not in stuck]
            if not rows:
                return basis
            lu = lu_factor(self.columns(basis))
            r = rows[0]
            e = np.zeros(self.rows)
            e[r] = 1.0
            entries = lu_solve(lu, e, trans=1) @ cols
            entries[np.isin(candidates, basis)] = 0.0
            best = int(np.argmax(np.abs(entries)))
            if abs(entries[best]) > PURGE_TOL:
                basis[r] = candidates[best]
            else:
                stuck.add(r)

    def solve(self, basis: np.ndarray, purge=None):
        """Run primal simplex from a feasible ``basis``; returns (basis, x_B, y).

        ``purge`` optionally lists columns used to drive artificials out of the
        basis before pivoting starts.  Entering: largest reduced cost.
        Leaving: lexicographic ratio test relative to a reference basis, which
        rules out cycling.  The reference is reset whenever an artificial is
        forced out, which happens at most once per artificial.
        """
        basis = np.array(basis, dtype=np.int64)
        if purge is not None:
            basis = self.purge_artificials(basis, purge)
        ref = self.columns(basis)
        seen: set[bytes] = set()
        while True:
            bmat = self.columns(basis)
            lu = lu_factor(bmat)
            x = lu_solve(lu, self.rhs)
            x = np.where(x < 0, 0.0, x)
            cost = np.where(basis < self.offset, self.extra_cost[np.minimum(basis, self.offset - 1)], 0.0)
            y = lu_solve(lu, cost, trans=1)

            d_extra, d_struct = self.reduced_costs(y)
            d_extra[basis[basis < self.offset]] = -np.inf
            d_struct[basis[basis >= self.offset] - self.offset] = -np.inf

            entering = self._choose_entering(d_extra, d_struct)
            if entering is None:
                return basis, x, y
            if self.iterations >= self.max_iter:
                raise NonterminationError(
                    f"simplex did not terminate within {self.max_iter} iterations"
                )
            self.iterations += 1

            u = lu_solve(lu, self.columns([entering])[:, 0])
            leave, forced = self._ratio_test(basis, x, u, lu, ref)
            if leave is None:
                raise SolverError("LP is unbounded; the visibility cap row is missing")
            basis[leave] = entering
            if forced:
                ref = self.columns(basis)
                seen.clear()
            key = np.sort(basis).tobytes()
            if key in seen:
                raise NonterminationError("simplex revisited a basis (numerical cycling)")
            seen.add(key)

    def _choose_entering(self, d_extra, d_struct):
        je = int(np.argmax(d_extra))
        best, entering = d_extra[je], je
        if d_struct.size:
            js = int(np.argmax(d_struct))
            if d_struct[js] > best:
                best, entering = d_struct[js], js + self.offset
        return entering if best > self.tol else None

    def _ratio_test(self, basis, x, u, lu, ref):
        piv = PIVOT_TOL * max(1.0, float(np.max(np.abs(u))))
        art = (basis >= 2) & (basis < self.offset)
        # artificials are pinned at zero: any nonzero direction entry forces one out
        forced = np.flatnonzero(art & (np.abs(u) > piv))
        if forced.size:
            return int(forced[np.argmax(np.abs(u[forced]))]), True
        blocking = np.flatnonzero(u > piv)
        if not blocking.size:
            return None, False
        ratios = x[blocking] / u[blocking]
        tied = blocking[ratios <= ratios.min() + DEGENERATE_STEP]
        if tied.size == 1:
            return int(tied[0]), False
        # lexicographic tie-break on rows of B^-1 * ref scaled by u
        unit = np.zeros((self.rows, tied.size))
        unit[tied, np.arange(tied.size)] = 1.0
        lex = (lu_solve(lu, unit, trans=1).T @ ref) / u[tied][:, None]
        cand = np.arange(tied.size)
        for col in range(self.rows):
            vals = lex[cand, col]
            cand = cand[vals <= vals.min() + LEX_TOL]
            if cand.size == 1:
                break
        return int(tied[cand[np.argmin(basis[tied[cand]])]]), False
