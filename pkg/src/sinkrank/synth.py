"""Planted-matching benchmark with injected hub items.

Scores follow an additive model::

    score(q, j) = noise_sigma * z[q, j]
                + match_strength * [j == match(q)]
                + hub_strength * [j in hubs]

``match`` is a uniformly random injection from queries to items and
``hubs`` a uniformly random item subset (it may overlap the matched items).
When ``hub_strength`` exceeds ``match_strength`` the hubs win most raw
argmaxes, which is exactly the failure mode rescoring is meant to repair.
All draws come from :mod:`sinkrank.rng`, so outputs are bit-reproducible.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import rng
from .errors import ConfigError
from .matrix import SimilarityMatrix
from .metrics import GroundTruth

__all__ = ["SynthConfig", "generate", "hub_indices"]


@dataclass(frozen=True)
class SynthConfig:
    n_queries: int = 200
    n_items: int = 200
    n_hubs: int = 20
    match_strength: float = 1.0
    hub_strength: float = 1.2
    noise_sigma: float = 0.3
    seed: int = 7

    def __post_init__(self):
        if self.n_queries < 1 or self.n_items < 1:
            raise ConfigError("n_queries and n_items must be positive")
        if self.n_queries > self.n_items:
            raise ConfigError(f"n_queries ({self.n_queries}) exceeds n_items ({self.n_items})")
        if not 0 <= self.n_hubs <= self.n_items:
            raise ConfigError(f"n_hubs must lie in [0, {self.n_items}], got {self.n_hubs}")
        if not self.match_strength > 0:
            raise ConfigError(f"match_strength must be positive, got {self.match_strength}")
        if self.hub_strength < 0:
            raise ConfigError(f"hub_strength must be non-negative, got {self.hub_strength}")
        if self.noise_sigma < 0:
            raise ConfigError(f"noise_sigma must be non-negative, got {self.noise_sigma}")


def hub_indices(cfg: SynthConfig) -> np.ndarray:
    """The hub items ``generate(cfg)`` plants, ascending."""
    return rng.sample_without_replacement(rng.stream(cfg.seed, rng.SYNTH_HUBS), cfg.n_items, cfg.n_hubs)


def generate(cfg: SynthConfig = SynthConfig()) -> tuple[SimilarityMatrix, GroundTruth]:
    nq, ni = cfg.n_queries, cfg.n_items
    noise = rng.gaussians(rng.stream(cfg.seed, rng.SYNTH_NOISE), nq * ni).reshape(nq, ni)
    scores = cfg.noise_sigma * noise
    match = rng.permutation(rng.stream(cfg.seed, rng.SYNTH_MATCH), ni)[:nq]
    scores[np.arange(nq), match] += cfg.match_strength
    scores[:, hub_indices(cfg)] += cfg.hub_strength
    gt = GroundTruth({q: frozenset([int(j)]) for q, j in enumerate(match)})
    return SimilarityMatrix(scores), gt
