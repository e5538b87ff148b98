"""Explanation property metrics: local stability, local infidelity, sparsity.

Local stability is the largest observed rate of change of the explanation
under input perturbations within a radius; local infidelity is the zero-one
disagreement between the classifier and the thresholded linear surrogate the
attribution defines, over a sampled neighborhood; sparsity counts nonzero
attribution entries (weights and intercept).
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import Attribution, RngStream

__all__ = [
    "StabilityConfig",
    "InfidelityConfig",
    "sample_in_ball",
    "local_stability",
    "local_infidelity",
    "sparsity",
    "surrogate_predict",
]


@dataclass(frozen=True)
class StabilityConfig:
    """Perturbation locality and sample counts for the stability estimate.

    The max over the perturbation ball is estimated from `n_samples` random
    draws plus a deterministic grid of axis-aligned probes at geometrically
    shrinking scales (radius * 2^-k for k < probe_scales), which reliably
    detects jumps of piecewise explainers near region boundaries.
    """

    radius: float
    n_samples: int = 256
    probe_scales: int = 7

    def __post_init__(self):
        if self.radius <= 0:
            raise ValueError("radius must be positive")
        if self.n_samples < 1:
            raise ValueError("n_samples must be >= 1")


@dataclass(frozen=True)
class InfidelityConfig:
    """Neighborhood and sample count for the infidelity estimate."""

    radius: float = 0.1
    n_samples: int = 200

    def __post_init__(self):
        if self.radius <= 0:
            raise ValueError("radius must be positive")
        if self.n_samples < 1:
            raise ValueError("n_samples must be >= 1")


def sample_in_ball(rng: np.random.Generator, center, radius: float, n: int) -> np.ndarray:
    """n points uniform in the L2 ball around `center`, clipped to [0,1]^D."""
    center = np.asarray(center, dtype=float)
    D = center.shape[0]
    dirs = rng.normal(size=(n, D))
    norms = np.linalg.norm(dirs, axis=1, keepdims=True)
    norms[norms == 0] = 1.0
    dirs /= norms
    radii = radius * rng.random(n) ** (1.0 / D)
    return np.clip(center + dirs * radii[:, None], 0.0, 1.0)


def surrogate_predict(attribution: Attribution, X) -> np.ndarray:
    """Binary surrogate defined by an attribution: 1 where the affine score
    (intercept folded in) is positive."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    scores = X @ attribution.weights + attribution.intercept
    return (scores > 0).astype(int)


def _axis_probes(x: np.ndarray, radius: float, scales: int) -> np.ndarray:
    probes = []
    for d in range(x.shape[0]):
        step = radius
        for _ in range(scales):
            for sign in (1.0, -1.0):
                p = x.copy()
                p[d] = min(1.0, max(0.0, p[d] + sign * step))
                probes.append(p)
            step *= 0.5
    return np.array(probes)


def local_stability(explainer, f, x, cfg: StabilityConfig, rng: RngStream) -> float:
    """max over sampled x' of ||E(x) - E(x')|| / ||x - x'|| within the radius.

    `explainer` maps an input to an Attribution; distances use all D+1
    attribution entries.  Perturbations that clip back onto x exactly are
    skipped (the ratio is undefined at zero distance).  A constant explainer
    scores exactly 0.
    """
    x = np.asarray(x, dtype=float)
    base = explainer(x).as_vector()
    gen = rng.generator
    pts = sample_in_ball(gen, x, cfg.radius, cfg.n_samples)
    pts = np.vstack([pts, _axis_probes(x, cfg.radius, cfg.probe_scales)])
    best = 0.0
    seen_valid = False
    for p in pts:
        dist = float(np.linalg.norm(x - p))
        if dist == 0.0:
            continue
        seen_valid = True
        other = explainer(p).as_vector()
        num = float(np.linalg.norm(base - other))
        if num == 0.0:
            continue
        best = max(best, num / dist)
    if not seen_valid:
        raise RuntimeError("all perturbations collapsed onto the base input")
    return best


def local_infidelity(attribution: Attribution, f, x, cfg: InfidelityConfig,
                     rng: RngStream) -> float:
    """Mean zero-one disagreement between f and the thresholded surrogate over
    a sampled, domain-clipped ball around x."""
    x = np.asarray(x, dtype=float)
    if x.shape != attribution.weights.shape:
        raise ValueError("input and attribution dimensions differ")
    pts = sample_in_ball(rng.generator, x, cfg.radius, cfg.n_samples)
    truth = np.asarray(f(pts), dtype=int)
    guess = surrogate_predict(attribution, pts)
    return float(np.mean(truth != guess))


def sparsity(attribution: Attribution) -> int:
    """Number of nonzero entries over all D+1 entries (weights + intercept).

    The zero test is exact: explanations are constructed, not estimated, so
    zeros are literal.
    """
    return int(np.sum(attribution.weights != 0.0) + (attribution.intercept != 0.0))
