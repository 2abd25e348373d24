"""Quantum predictions for the two-particle singlet correlation experiment.

Settings are either coplanar angles (radians) or unit 3-vectors.  A side's
settings are stored as a numpy array: shape ``(N,)`` for angles and
``(N, 3)`` for vectors.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Literal, Optional

import numpy as np

QUANTUM = "quantum"
EXPERIMENTAL = "experimental"

Origin = Literal["quantum", "experimental"]

UNIT_NORM_TOL = 1e-6
QUANTUM_RANGE_TOL = 1e-9
EXPERIMENTAL_RANGE_TOL = 1e-6


def _as_setting(x):
    arr = np.asarray(x, dtype=float)
    if arr.ndim == 0:
        if not np.isfinite(arr):
            raise ValueError(f"angle must be finite, got {x!r}")
        return float(arr)
    if arr.shape != (3,):
        raise ValueError(f"setting must be an angle or a 3-vector, got shape {arr.shape}")
    return _normalize(arr[None, :])[0]


def _normalize(vectors: np.ndarray) -> np.ndarray:
    norms = np.linalg.norm(vectors, axis=1)
    bad = np.flatnonzero(np.abs(norms - 1.0) > UNIT_NORM_TOL)
    if bad.size:
        raise ValueError(
            f"setting {bad[0]} has norm {norms[bad[0]]:.9g}, not within {UNIT_NORM_TOL} of 1"
        )
    return vectors / norms[:, None]


def _side(values, name: str) -> np.ndarray:
    arr = np.array(values, dtype=float)
    if arr.ndim == 0:
        arr = arr[None]
    if arr.ndim == 1:
        if not np.all(np.isfinite(arr)):
            raise ValueError(f"{name}: angles must be finite")
    elif arr.ndim == 2 and arr.shape[1] == 3:
        arr = _normalize(arr)
    else:
        raise ValueError(f"{name}: expected angles (N,) or vectors (N, 3), got shape {arr.shape}")
    if arr.shape[0] < 1:
        raise ValueError(f"{name}: at least one setting is required")
    return arr


@dataclass(frozen=True)
class SettingsSpec:
    """Measurement settings for both sides of the experiment."""

    a: np.ndarray
    b: np.ndarray

    def __post_init__(self):
        a = _side(self.a, "a")
        b = _side(self.b, "b")
        if a.ndim != b.ndim:
            raise ValueError("both sides must use the same representation (angles or vectors)")
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)

    @classmethod
    def from_degrees(cls, a, b) -> "SettingsSpec":
        return cls(np.radians(np.asarray(a, dtype=float)), np.radians(np.asarray(b, dtype=float)))

    @property
    def coplanar(self) -> bool:
        return self.a.ndim == 1

    @property
    def shape(self) -> tuple[int, int]:
        return self.a.shape[0], self.b.shape[0]


@dataclass
class PredictionMatrix:
    """An N x M matrix of correlation values.

    ``origin`` is ``"quantum"`` for matrices built from settings and
    ``"experimental"`` for measured data, which carries no settings.
    """

    values: np.ndarray
    origin: Origin = EXPERIMENTAL
    settings: Optional[SettingsSpec] = field(default=None, repr=False)

    def __post_init__(self):
        values = np.array(self.values, dtype=float)
        if values.ndim != 2 or 0 in values.shape:
            raise ValueError(f"prediction matrix must be a non-empty 2-D array, got shape {values.shape}")
        if not np.all(np.isfinite(values)):
            raise ValueError("prediction matrix entries must be finite")
        if self.origin == QUANTUM:
            tol = QUANTUM_RANGE_TOL
        elif self.origin == EXPERIMENTAL:
            tol = EXPERIMENTAL_RANGE_TOL
            if self.settings is not None:
                raise ValueError("experimental matrices carry no settings")
        else:
            raise ValueError(f"unknown origin {self.origin!r}")
        worst = np.unravel_index(np.argmax(np.abs(values)), values.shape)
        if abs(values[worst]) > 1 + tol:
            raise ValueError(
                f"entry {worst} = {values[worst]!r} lies outside [-1, 1] (tolerance {tol})"
            )
        self.values = values

    @property
    def shape(self) -> tuple[int, int]:
        return self.values.shape

    def require_settings(self) -> SettingsSpec:
        if self.origin != QUANTUM or self.settings is None:
            raise ValueError("operation needs measurement settings; experimental data has none")
        return self.settings


def _dot(a, b) -> float:
    a = _as_setting(a)
    b = _as_setting(b)
    if isinstance(a, float) != isinstance(b, float):
        raise ValueError("cannot mix angle and vector settings")
    if isinstance(a, float):
        return float(np.cos(a - b))
    return float(np.dot(a, b))


def joint_probability(m: int, l: int, a, b, v: float = 1.0) -> float:
    """Probability of outcomes ``m`` at A and ``l`` at B with visibility ``v``.

    Returns ``(1 - m*l*v*(a.b)) / 4``; for angles ``a.b = cos(a - b)``.
    """
    if m not in (-1, 1) or l not in (-1, 1):
        raise ValueError(f"outcomes must be +1 or -1, got m={m!r}, l={l!r}")
    if not 0.0 <= v <= 1.0:
        raise ValueError(f"visibility must lie in [0, 1], got {v!r}")
    return (1.0 - m * l * v * _dot(a, b)) / 4.0


def correlation(a, b) -> float:
    """Singlet correlation ``E(a, b) = -a.b`` (``-cos(alpha - beta)`` for angles)."""
    return -_dot(a, b)


def correlation_table(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    if a.ndim == 1:
        return -np.cos(a[:, None] - b[None, :])
    return -(a @ b.T)


def build_prediction_matrix(spec: SettingsSpec) -> PredictionMatrix:
    q = np.clip(correlation_table(spec.a, spec.b), -1.0, 1.0)
    return PredictionMatrix(q, QUANTUM, spec)


def fold_angles(angles, tol: float = 1e-12) -> tuple[np.ndarray, list[tuple[int, int]]]:
    """Reduce coplanar angles onto ``[0, pi)``.

    Setting ``alpha + pi`` measures the negated observable of ``alpha``, so only
    the reduced angles need solving.  Returns the distinct reduced angles and,
    for every input angle, ``(index into reduced, sign)``; the sign map feeds
    :func:`bellvis.lp.extend_model`.
    """
    reduced: list[float] = []
    sources = []
    for x in np.asarray(angles, dtype=float).ravel():
        k = math.floor(x / math.pi)
        r, sign = x - k * math.pi, (-1) ** (k % 2)
        if r >= math.pi - tol:
            r, sign = r - math.pi, -sign
        if abs(r) < tol:
            r = 0.0
        for i, y in enumerate(reduced):
            if abs(y - r) <= tol:
                break
        else:
            i = len(reduced)
            reduced.append(r)
        sources.append((i, sign))
    return np.array(reduced), sources
