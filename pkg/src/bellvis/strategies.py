"""Deterministic local strategies and their canonical representatives.

A sign vector of length ``n`` is packed into an integer code: entry ``i`` is
``+1`` when bit ``i`` is set and ``-1`` otherwise.  A strategy pair ``(a, b)``
and its global negation ``(-a, -b)`` give the same correlation matrix, so only
pairs with ``a[0] = +1`` are kept.

Canonical pairs are indexed A-side major, B-side minor::

    index = (a_code >> 1) * 2**m + b_code
"""
from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Iterator, Optional

import numpy as np

MAX_LENGTH = 30
DENSE_CAP = 22
CHUNK = 1 << 15


class SizeError(ValueError):
    """Raised when an enumeration would exceed a configured bound."""


def _check_length(length: int, name: str = "length") -> None:
    if not 1 <= length <= MAX_LENGTH:
        raise SizeError(f"{name} must lie in [1, {MAX_LENGTH}], got {length}")


def pack_signs(signs) -> int:
    code = 0
    for i, s in enumerate(signs):
        if s == 1:
            code |= 1 << i
        elif s != -1:
            raise ValueError(f"sign entries must be +1 or -1, got {s!r}")
    return code


def unpack_signs(code: int, length: int) -> tuple[int, ...]:
    return tuple(1 if (code >> i) & 1 else -1 for i in range(length))


def signs_from_codes(codes: np.ndarray, length: int) -> np.ndarray:
    """Rows of +-1 entries for an array of integer codes."""
    bits = (np.asarray(codes, dtype=np.int64)[:, None] >> np.arange(length)) & 1
    return (2 * bits - 1).astype(float)


def sign_table(length: int, canonical: bool = False) -> np.ndarray:
    """All sign vectors of ``length`` in counting order.

    With ``canonical=True`` only vectors whose first entry is +1 are listed.
    """
    _check_length(length)
    if canonical:
        codes = 2 * np.arange(1 << (length - 1), dtype=np.int64) + 1
    else:
        codes = np.arange(1 << length, dtype=np.int64)
    return signs_from_codes(codes, length)


def format_signs(signs) -> str:
    return "".join("+" if s == 1 else "-" for s in signs)


def parse_signs(text: str) -> tuple[int, ...]:
    out = []
    for ch in text:
        if ch == "+":
            out.append(1)
        elif ch in "-−":
            out.append(-1)
        else:
            raise ValueError(f"invalid sign character {ch!r} in {text!r}")
    if not out:
        raise ValueError("empty sign string")
    return tuple(out)


@dataclass(frozen=True)
class StrategyPair:
    a: tuple[int, ...]
    b: tuple[int, ...]

    def __post_init__(self):
        a = tuple(int(s) for s in self.a)
        b = tuple(int(s) for s in self.b)
        for name, v in (("a", a), ("b", b)):
            _check_length(len(v), f"len({name})")
            if any(s not in (-1, 1) for s in v):
                raise ValueError(f"{name} must contain only +1/-1 entries, got {v}")
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)

    @property
    def shape(self) -> tuple[int, int]:
        return len(self.a), len(self.b)

    @property
    def is_canonical(self) -> bool:
        return self.a[0] == 1

    def negated(self) -> "StrategyPair":
        return StrategyPair(tuple(-s for s in self.a), tuple(-s for s in self.b))

    def matrix(self) -> np.ndarray:
        return np.outer(self.a, self.b).astype(float)

    def __str__(self):
        return f"{format_signs(self.a)}|{format_signs(self.b)}"


def canonicalize(pair: StrategyPair) -> StrategyPair:
    return pair if pair.a[0] == 1 else pair.negated()


def extend_pair(pair: StrategyPair, a_map, b_map) -> StrategyPair:
    """Build a strategy on new settings, each a signed copy of an old one.

    ``a_map[i] = (j, s)`` gives the new i-th A outcome as ``s * pair.a[j]``.
    """
    a = tuple(int(s) * pair.a[j] for j, s in a_map)
    b = tuple(int(s) * pair.b[j] for j, s in b_map)
    return canonicalize(StrategyPair(a, b))


def pair_index(pair: StrategyPair) -> int:
    """Position of the canonical form of ``pair`` in enumeration order."""
    p = canonicalize(pair)
    return (pack_signs(p.a) >> 1) * (1 << len(p.b)) + pack_signs(p.b)


def pair_from_index(k: int, n: int, m: int) -> StrategyPair:
    if not 0 <= k < 1 << (n + m - 1):
        raise IndexError(f"strategy index {k} out of range for n={n}, m={m}")
    a_code = 2 * (k >> m) + 1
    b_code = k & ((1 << m) - 1)
    return StrategyPair(unpack_signs(a_code, n), unpack_signs(b_code, m))


def enumerate_canonical(n: int, m: int, cap: int = DENSE_CAP) -> Iterator[StrategyPair]:
    """Yield all ``2**(n+m-1)`` canonical strategy pairs in index order."""
    _check_length(n, "n")
    _check_length(m, "m")
    if n + m > cap:
        raise SizeError(f"n + m = {n + m} exceeds the enumeration cap {cap}")
    b_all = [unpack_signs(code, m) for code in range(1 << m)]
    for t in range(1 << (n - 1)):
        a = unpack_signs(2 * t + 1, n)
        for b in b_all:
            yield StrategyPair(a, b)


def strategy_column(pair: StrategyPair, n: int, m: int) -> np.ndarray:
    """Flattened (row-major) correlation matrix ``a_i * b_j`` of ``pair``."""
    if pair.shape != (n, m):
        raise ValueError(f"pair has shape {pair.shape}, expected ({n}, {m})")
    return np.outer(pair.a, pair.b).ravel().astype(float)


class StrategySpace:
    """The full set of canonical strategy columns, generated on demand."""

    def __init__(self, n: int, m: int, cap: int = DENSE_CAP):
        _check_length(n, "n")
        _check_length(m, "m")
        if n + m > cap:
            raise SizeError(f"n + m = {n + m} exceeds the dense cap {cap}")
        self.n, self.m = n, m
        self._a = sign_table(n, canonical=True)
        self._b = sign_table(m)

    def __len__(self):
        return self._a.shape[0] * self._b.shape[0]

    def products(self, w: np.ndarray) -> np.ndarray:
        """``sum_ij w_ij a_i b_j`` for every canonical pair, in index order."""
        return ((self._a @ w) @ self._b.T).ravel()

    def block(self, idx) -> np.ndarray:
        idx = np.atleast_1d(np.asarray(idx, dtype=np.int64))
        a = self._a[idx >> self.m]
        b = self._b[idx & ((1 << self.m) - 1)]
        return (a[:, :, None] * b[:, None, :]).reshape(len(idx), -1).T

    def pair(self, k: int) -> StrategyPair:
        return pair_from_index(int(k), self.n, self.m)


def _respond_chunk(w: np.ndarray, start: int, stop: int, length: int, k: int):
    signs = signs_from_codes(2 * np.arange(start, stop, dtype=np.int64) + 1, length)
    field_ = signs @ w
    values = np.abs(field_).sum(axis=1)
    order = np.argsort(-values, kind="stable")
    return [(values[i], start + int(i), signs[i], np.where(field_[i] >= 0, 1.0, -1.0)) for i in order[:k]]


def top_responses(w: np.ndarray, k: int = 1, threads: Optional[int] = None):
    """Best sign-vector pairs for the bilinear form ``a^T w b``.

    The smaller side is enumerated over canonical sign vectors; the other
    side is the entrywise sign of the induced linear form, zeros mapped to +1.
    Returns up to ``k`` tuples ``(value, pair)`` sorted by value, ties broken by
    enumeration position.  Chunk boundaries do not depend on ``threads``, so
    the result is identical for any worker count.
    """
    w = np.asarray(w, dtype=float)
    n, m = w.shape
    transpose = m < n
    mat = w.T if transpose else w
    length = mat.shape[0]
    _check_length(length)
    total = 1 << (length - 1)
    bounds = [(s, min(s + CHUNK, total)) for s in range(0, total, CHUNK)]
    if threads is None:
        threads = os.cpu_count() or 1
    if threads > 1 and len(bounds) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(lambda se: _respond_chunk(mat, se[0], se[1], length, k), bounds))
    else:
        parts = [_respond_chunk(mat, s, e, length, k) for s, e in bounds]
    best = sorted((c for part in parts for c in part), key=lambda c: (-c[0], c[1]))[:k]
    out = []
    for value, _, small, large in best:
        a, b = (large, small) if transpose else (small, large)
        out.append((float(value), canonicalize(StrategyPair(a.astype(int), b.astype(int)))))
    return out


def best_response(w: np.ndarray, threads: Optional[int] = None) -> tuple[float, StrategyPair]:
    """Maximum of ``a^T w b`` over all sign vectors, with a maximizing pair."""
    return top_responses(w, 1, threads)[0]
