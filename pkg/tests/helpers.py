"""Test-side helpers: controlled embedding providers and float engineering."""

from __future__ import annotations

import math

import numpy as np

from joinscaffold.embedding import TrigramEmbeddingProvider


class FixedProvider(TrigramEmbeddingProvider):
    """Trigram provider with exact vector overrides for chosen names."""

    def __init__(self, overrides: dict[str, np.ndarray], dimension: int = 64):
        super().__init__(dimension)
        self.overrides = {}
        for k, v in overrides.items():
            vec = np.zeros(dimension, dtype=np.float64)
            arr = np.asarray(v, dtype=np.float64)
            vec[: arr.shape[0]] = arr  # zero padding keeps dots/norms bit-exact
            self.overrides[k] = vec

    def embed(self, text: str) -> np.ndarray:
        if text in self.overrides:
            return self.overrides[text]
        return super().embed(text)


def engineer_cosine_pair(c: float, dimension: int = 64) -> tuple[np.ndarray, np.ndarray]:
    """Two vectors whose cosine under the production formula is exactly ``c``.

    a = (1, 0, ...) has norm exactly 1. b = (c, y, 0, ...) with y ulp-searched
    until the production cosine (np.dot over np.linalg.norm) returns exactly
    the float ``c``.
    """
    from joinscaffold.embedding import cosine

    a = np.zeros(dimension)
    a[0] = 1.0
    y = math.sqrt(max(0.0, 1.0 - c * c))
    b = np.zeros(dimension)
    b[0] = c
    for direction in (0.0, 2.0):
        y_try = y
        for _ in range(10_000):
            b[1] = y_try
            if cosine(a, b) == c:
                return a, b.copy()
            y_try = math.nextafter(y_try, direction)
    raise AssertionError(f"could not engineer cosine {c}")


def engineer_similarity_cosine(target: float, sim_alpha: float = 0.85) -> float:
    """Float c with sim_alpha * c == target exactly (type-mismatch path)."""
    c = target / sim_alpha
    for _ in range(10_000):
        value = sim_alpha * c
        if value == target:
            return c
        c = math.nextafter(c, 0.0 if value > target else 2.0)
    raise AssertionError(f"could not engineer similarity {target}")
