"""Decision tasks over the ground-truth classifiers.

Two tasks: forward prediction (guess the classifier's output) and forbidden
features (judge whether the classifier's local rule used a designated
feature).  This module owns ground-truth labels, training-point selection,
instance construction, and the three-way categorization used to assemble
study test sets.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from .core import Attribution, RngStream, round_sig_vec
from .explainers import Explainer, ExplainerKind
from .proxy import MemoryModel, build_human_input

__all__ = [
    "TaskKind",
    "TaskInstance",
    "TestCategory",
    "InsufficientCategoryError",
    "label_forward",
    "label_forbidden",
    "sample_training_points",
    "make_instances",
    "categorize_test_points",
    "select_study_test_set",
]


@dataclass(frozen=True)
class TaskKind:
    """Forward prediction, or forbidden features with the off-limits feature."""

    name: str
    forbidden_feature: int | None = None

    @classmethod
    def forward(cls) -> "TaskKind":
        return cls("forward")

    @classmethod
    def forbidden(cls, feature: int) -> "TaskKind":
        if feature < 1:
            raise ValueError("feature indices are 1-based")
        return cls("forbidden", feature)

    @property
    def is_forbidden(self) -> bool:
        return self.name == "forbidden"

    def __str__(self) -> str:
        if self.is_forbidden:
            return f"forbidden[{self.forbidden_feature}]"
        return self.name


class TestCategory(enum.Enum):
    __test__ = False  # not a pytest class, despite the name

    SAME = "same"
    BEST_BETTER = "best_better"
    BEST_WORSE = "best_worse"

    def __str__(self) -> str:
        return self.value


@dataclass(frozen=True)
class TaskInstance:
    """One decision: the input, what the proxy sees, and the right answer."""

    x: np.ndarray
    attribution: Attribution
    human_input: np.ndarray
    label: int
    provenance: dict = field(default_factory=dict)


def label_forward(f, X) -> np.ndarray:
    """Ground truth for forward prediction: the classifier's own output."""
    return np.asarray(f(X), dtype=int)


def label_forbidden(f, X, feature: int) -> np.ndarray:
    """1 where the local rule at each input uses the designated feature."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    if not 1 <= feature <= f.dimension:
        raise ValueError(f"feature index {feature} out of range 1..{f.dimension}")
    W = getattr(f, "W", None)
    if W is not None:
        regions = f.region_index(X) - 1
        return (W[regions, feature - 1] != 0).astype(int)
    if feature == f.switch_feature:
        return np.ones(len(X), dtype=int)
    active = f.active_feature(f.region_index(X))
    return (active == feature).astype(int)


def task_labels(f, task: TaskKind, X) -> np.ndarray:
    if task.is_forbidden:
        return label_forbidden(f, X, task.forbidden_feature)
    return label_forward(f, X)


# ---------------------------------------------------------------------------
# training-point selection
# ---------------------------------------------------------------------------

REGION_QUOTAS = (2, 3, 3, 2)  # interior pieces border two cuts: sample them more
ANNULUS_LO = 0.045
ANNULUS_HI = 0.1
EASY_MARGIN = 0.2


class SamplingError(RuntimeError):
    pass


def _rejection_pool(f, rng: np.random.Generator, accept, target: int,
                    batch: int = 512, max_batches: int = 400) -> np.ndarray:
    kept = []
    for _ in range(max_batches):
        cand = rng.random((batch, f.dimension))
        mask = accept(cand)
        kept.extend(cand[mask])
        if len(kept) >= target:
            break
    if not kept:
        raise SamplingError("acceptance rate too low; widen the margins")
    return np.asarray(kept)


def _rounded_boundary_distance(f, X) -> np.ndarray:
    """Boundary distance of the rounded (proxy-visible) coordinates."""
    return f.boundary_distance(round_sig_vec(X))


def _sample_annulus(f, task, n, rng, lo, hi, min_per_label) -> np.ndarray:
    def accept(X):
        d = _rounded_boundary_distance(f, X)
        return (d > lo) & (d <= hi)
    pool = _rejection_pool(f, rng, accept, target=80 * n)
    labels = task_labels(f, task, pool)
    ones_avail = int(labels.sum())
    zeros_avail = len(labels) - ones_avail
    want_ones = max(min(min_per_label, ones_avail), n - zeros_avail)
    want_ones = min(want_ones, ones_avail, n)
    want_zeros = n - want_ones
    picked, c1, c0 = [], 0, 0
    for p, lab in zip(pool, labels):
        if lab == 1 and c1 < want_ones:
            picked.append(p)
            c1 += 1
        elif lab == 0 and c0 < want_zeros:
            picked.append(p)
            c0 += 1
        if len(picked) == n:
            break
    if len(picked) < n:
        raise SamplingError("could not fill the training set; widen the margins")
    return np.asarray(picked)


def _sample_region_coverage(f, n, rng, quotas) -> np.ndarray:
    if sum(quotas) != n:
        raise ValueError("region quotas must sum to the training-set size")
    buckets = [[] for _ in quotas]
    for _ in range(400):
        cand = rng.random((256, f.dimension))
        regions = f.region_index(cand) - 1
        for p, r in zip(cand, regions):
            if len(buckets[r]) < quotas[r]:
                buckets[r].append(p)
        if all(len(b) >= q for b, q in zip(buckets, quotas)):
            break
    if not all(len(b) >= q for b, q in zip(buckets, quotas)):
        raise SamplingError("could not cover every region")
    out = []
    for b, q in zip(buckets, quotas):
        out.extend(b[:q])
    return np.asarray(out)


def _sample_study_mix(f, task, n, rng, boundary_ratio, lo, hi, easy_margin) -> np.ndarray:
    n_boundary = int(round(boundary_ratio * n))
    n_easy = n - n_boundary
    def accept_boundary(X):
        d = _rounded_boundary_distance(f, X)
        return (d > lo) & (d <= hi)
    def accept_easy(X):
        return f.boundary_distance(X) >= easy_margin
    parts = []
    if n_boundary:
        parts.append(_rejection_pool(f, rng, accept_boundary, 10 * n_boundary)[:n_boundary])
    if n_easy:
        parts.append(_rejection_pool(f, rng, accept_easy, 10 * n_easy)[:n_easy])
    pts = np.vstack(parts)
    return pts[rng.permutation(len(pts))]


def sample_training_points(f, task: TaskKind, n: int, rng: RngStream,
                           scheme: str | None = None,
                           delta: float = ANNULUS_HI,
                           min_per_label: int = 4,
                           quotas=REGION_QUOTAS,
                           boundary_ratio: float = 0.5) -> np.ndarray:
    """Draw the proxy's training inputs.

    Schemes:
      * "boundary_annulus" (forward default) - points whose rounded
        coordinates sit near, but not on, a decision boundary, with at least
        `min_per_label` points per reachable label.
      * "region_coverage" (forbidden default) - fixed per-region quotas,
        uniform within each region; covers every behavioral piece of the
        classifier (and balances usage labels as a byproduct).
      * "boundary" - plain rejection sampling at boundary distance <= delta,
        at least one point per reachable label.
      * "study_mix" - half easy cases far from the boundary, half
        near-boundary cases; the mix shown to study participants.
    """
    if n < 1:
        raise ValueError("need at least one training point")
    gen = rng.generator
    if scheme is None:
        scheme = "region_coverage" if task.is_forbidden else "boundary_annulus"
    if scheme == "boundary_annulus":
        return _sample_annulus(f, task, n, gen, ANNULUS_LO, delta, min_per_label)
    if scheme == "region_coverage":
        return _sample_region_coverage(f, n, gen, quotas)
    if scheme == "study_mix":
        return _sample_study_mix(f, task, n, gen, boundary_ratio,
                                 ANNULUS_LO, delta, EASY_MARGIN)
    if scheme == "boundary":
        def accept(X):
            return f.boundary_distance(X) <= delta
        pool = _rejection_pool(f, gen, accept, target=40 * n)
        picked = pool[:n].copy()
        labels = task_labels(f, task, picked)
        if labels.min() == labels.max():
            want = 1 - int(labels[0])
            rest = pool[n:]
            rest_labels = task_labels(f, task, rest) if len(rest) else np.array([])
            hits = rest[rest_labels == want] if len(rest) else []
            if len(hits):
                picked[-1] = hits[0]
        return picked
    raise ValueError(f"unknown sampling scheme {scheme!r}")


# ---------------------------------------------------------------------------
# instances and categorization
# ---------------------------------------------------------------------------

def make_instances(f, explainer: Explainer, memory: MemoryModel, task: TaskKind,
                   points) -> list[TaskInstance]:
    """Attribution + human input + ground-truth label for each point."""
    points = np.atleast_2d(np.asarray(points, dtype=float))
    if points.size == 0:
        return []
    labels = task_labels(f, task, points)
    preds = np.asarray(f(points), dtype=int) if task.is_forbidden else None
    out = []
    for i, x in enumerate(points):
        attr = explainer(x)
        h = build_human_input(
            x, attr, memory,
            prediction=None if preds is None else int(preds[i]),
            forbidden_feature=task.forbidden_feature)
        out.append(TaskInstance(
            x=x, attribution=attr, human_input=h, label=int(labels[i]),
            provenance={"function": f.name, "kind": str(explainer.kind)}))
    return out


def categorize_test_points(proxies: dict, human_inputs: dict, labels,
                           best_kind: ExplainerKind) -> list[TestCategory]:
    """Three-way split of candidate points by proxy correctness.

    SAME: every proxy is right or every proxy is wrong; BEST_BETTER: the
    designated best kind is right while some other kind is wrong; BEST_WORSE:
    the best kind is wrong while some other kind is right.
    """
    labels = np.asarray(labels, dtype=int)
    kinds = list(proxies)
    if best_kind not in proxies:
        raise ValueError("best kind has no trained proxy")
    correct = {}
    for kind in kinds:
        H = np.atleast_2d(np.asarray(human_inputs[kind], dtype=float))
        preds = np.array([proxies[kind].predict(h) for h in H])
        correct[kind] = preds == labels
    out = []
    for i in range(len(labels)):
        best_ok = bool(correct[best_kind][i])
        others = [bool(correct[k][i]) for k in kinds if k != best_kind]
        if all(o == best_ok for o in others):
            out.append(TestCategory.SAME)
        elif best_ok:
            out.append(TestCategory.BEST_BETTER)
        else:
            out.append(TestCategory.BEST_WORSE)
    return out


class InsufficientCategoryError(RuntimeError):
    """A category has fewer candidates than requested; carries the counts so
    the caller can enlarge the candidate pool."""

    def __init__(self, counts: dict, per_category: int):
        self.counts = {str(k): v for k, v in counts.items()}
        self.per_category = per_category
        super().__init__(
            f"need {per_category} per category, have {self.counts}")


def select_study_test_set(categories: list[TestCategory], per_category: int,
                          rng: RngStream) -> list[int]:
    """Uniformly pick `per_category` point indices from each category, without
    replacement, and return them in a shuffled order."""
    by_cat = {c: [] for c in TestCategory}
    for i, c in enumerate(categories):
        by_cat[c].append(i)
    counts = {c: len(v) for c, v in by_cat.items()}
    if any(v < per_category for v in counts.values()):
        raise InsufficientCategoryError(counts, per_category)
    gen = rng.generator
    chosen = []
    for c in TestCategory:
        idx = by_cat[c]
        pick = gen.choice(len(idx), size=per_category, replace=False)
        chosen.extend(idx[i] for i in sorted(pick))
    chosen = [chosen[i] for i in gen.permutation(len(chosen))]
    return chosen
