"""The four property-optimized explanation families.

Each family exploits full knowledge of the ground-truth classifier:

* faithful   - the best local linear surrogate around the queried input.  For
  a piecewise-linear classifier this is the exact active row; for the step
  classifier it is selected from least-squares candidates fit on a sampled
  neighborhood, scored on a tighter locality sample.
* robust     - one global least-squares fit of the classifier's outputs,
  returned unchanged everywhere (so its stability is exactly zero).
* sparse     - a single feature plus intercept.  The exact-row case keeps the
  dominant row entry verbatim; the fitted case refits the surrogate on the
  dominant feature alone.
* sparse+robust - the global fit reduced to its dominant feature and refit
  globally on that support; constant across queries.

Fitted attributions are rounded to one significant figure.  Because the
thresholded surrogate is scale-invariant, the rounding is applied at the
scale (from a fixed grid) that best preserves the surrogate's local
agreement, preferring candidates that classify the queried point itself
correctly.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .core import Attribution, RngStream, round_sig, round_sig_vec
from .properties import sample_in_ball

__all__ = [
    "ExplainerKind",
    "LocalFitConfig",
    "Explainer",
    "make_explainers",
    "export_explanations",
]


class ExplainerKind(enum.Enum):
    FAITHFUL = "faithful"
    ROBUST = "robust"
    SPARSE = "sparse"
    SPARSE_ROBUST = "sparse_robust"

    def __str__(self) -> str:
        return self.value


@dataclass(frozen=True)
class LocalFitConfig:
    """Sampling and rounding parameters for the fitted explainers.

    fit_radius controls the neighborhood the surrogate is fit on; the
    selection sample (select_radius) scores rounded candidates at the
    locality the explanation is meant to describe.  When a fit neighborhood
    contains a single label, the sampling radius doubles up to
    max_escalations times until both labels appear (used by the sparse
    family, which must always produce a two-entry surrogate).
    """

    fit_radius: float = 0.4
    n_fit: int = 512
    select_radius: float = 0.1
    n_select: int = 384
    n_scales: int = 25
    global_fit_samples: int = 4096
    max_escalations: int = 8

    def __post_init__(self):
        if min(self.fit_radius, self.select_radius) <= 0:
            raise ValueError("radii must be positive")
        if min(self.n_fit, self.n_select, self.n_scales, self.global_fit_samples) < 1:
            raise ValueError("sample counts must be positive")


def _lstsq_affine(X: np.ndarray, targets: np.ndarray, columns=None):
    """Least-squares affine fit of targets on X (optionally restricted to
    `columns`); returns full-width (weights, intercept).

    Coefficients at solver-noise level are snapped to exact zero so that
    degenerate fits (constant targets) produce literal zeros.
    """
    D = X.shape[1]
    cols = list(range(D)) if columns is None else list(columns)
    A = np.hstack([X[:, cols], np.ones((len(X), 1))])
    coef, *_ = np.linalg.lstsq(A, targets, rcond=None)
    tol = 1e-9 * max(1.0, float(np.max(np.abs(coef))))
    coef[np.abs(coef) < tol] = 0.0
    weights = np.zeros(D)
    weights[cols] = coef[:-1]
    return weights, float(coef[-1])


def _scale_grid(weights: np.ndarray, intercept: float, n_scales: int) -> np.ndarray:
    """Candidate rounding scales, ordered so the unit-max scale comes first
    (ties during selection then favor it)."""
    m = max(float(np.max(np.abs(weights))) if weights.size else 0.0, abs(intercept))
    if m == 0.0:
        return np.array([1.0])
    base = 1.0 / m
    scales = base * np.logspace(-0.7, 0.7, n_scales)
    order = np.argsort(np.abs(np.log(scales / base)), kind="stable")
    return scales[order]


class _FitContext:
    """Sampled neighborhoods and candidate scoring around one input."""

    def __init__(self, f, x: np.ndarray, cfg: LocalFitConfig, rng: RngStream):
        self.f = f
        self.x = x
        self.cfg = cfg
        gen = rng.substream("fit/" + x.tobytes().hex()).generator
        self._gen = gen
        self.wide = sample_in_ball(gen, x, cfg.fit_radius, cfg.n_fit)
        self.y_wide = np.asarray(f(self.wide), dtype=int)
        self.sel = sample_in_ball(gen, x, cfg.select_radius, cfg.n_select)
        self.y_sel = np.asarray(f(self.sel), dtype=int)
        self.center_label = int(np.asarray(f(x[None, :]), dtype=int)[0])
        self._escalated = None

    @property
    def degenerate(self) -> bool:
        return self.y_wide.min() == self.y_wide.max()

    def escalated(self):
        """(points, labels) from a widened ball containing both labels, or
        None when the function is constant as far as we can see."""
        if self._escalated is None:
            radius = self.cfg.fit_radius
            for _ in range(self.cfg.max_escalations):
                radius *= 2.0
                pts = sample_in_ball(self._gen, self.x, radius, self.cfg.n_fit)
                ys = np.asarray(self.f(pts), dtype=int)
                if ys.min() != ys.max():
                    self._escalated = (pts, ys)
                    break
        return self._escalated

    def fit_points(self):
        if not self.degenerate:
            return self.wide, self.y_wide
        return self.escalated() or (None, None)

    def signed_fit(self, pts, ys, columns=None):
        if pts is None or ys.min() == ys.max():
            return None
        return _lstsq_affine(pts, 2.0 * ys - 1.0, columns)

    def select_rounded(self, raw_fits, include_constants: bool) -> Attribution:
        """Round each raw fit at every candidate scale and return the winner.

        Candidates are ranked by (classifies the queried point correctly,
        agreement on the locality sample); earlier candidates win ties, so
        the ordering of `raw_fits` expresses preference.
        """
        D = self.x.shape[0]
        candidates = []
        for fit in raw_fits:
            if fit is None:
                continue
            w, b = fit
            for c in _scale_grid(w, b, self.cfg.n_scales):
                candidates.append(np.append(round_sig_vec(w * c), round_sig(b * c)))
        if include_constants:
            zero = np.zeros(D)
            candidates.append(np.append(zero, 0.0))
            candidates.append(np.append(zero, 1.0))
        if not candidates:
            return Attribution(np.zeros(D), float(self.center_label))
        C = np.asarray(candidates)                      # (n_cand, D+1)
        sel_aug = np.hstack([self.sel, np.ones((len(self.sel), 1))])
        preds = (sel_aug @ C.T > 0).astype(int)         # (n_sel, n_cand)
        agreement = np.mean(preds == self.y_sel[:, None], axis=0)
        x_aug = np.append(self.x, 1.0)
        center_ok = ((C @ x_aug > 0).astype(int) == self.center_label)
        # lexicographic: center-correct first, then agreement, then order
        rank = center_ok.astype(float) * 2.0 + agreement
        best = int(np.argmax(rank))                     # argmax keeps first on ties
        return Attribution(C[best, :D], float(C[best, D]))


class Explainer:
    """One explanation family bound to a ground-truth function.

    Calling the explainer with an input yields an Attribution.  Results are
    cached per input, and identical (seed, input) pairs reproduce identical
    attributions across runs.
    """

    def __init__(self, kind: ExplainerKind, f, cfg: LocalFitConfig,
                 rng: RngStream, constant_attribution: Attribution | None = None):
        self.kind = kind
        self.f = f
        self.cfg = cfg
        self._rng = rng
        self._constant = constant_attribution
        self._cache: dict[bytes, Attribution] = {}

    @property
    def is_constant(self) -> bool:
        return self._constant is not None

    def __call__(self, x) -> Attribution:
        x = np.asarray(x, dtype=float)
        if self._constant is not None:
            return self._constant
        key = x.tobytes()
        hit = self._cache.get(key)
        if hit is None:
            hit = self._explain(x)
            self._cache[key] = hit
        return hit

    def _explain(self, x: np.ndarray) -> Attribution:
        rows = getattr(self.f, "row_attribution", None)
        if rows is not None:
            region = int(self.f.region_index(x[None, :])[0])
            exact = self.f.row_attribution(region)
            if self.kind is ExplainerKind.FAITHFUL:
                return exact
            return _truncate_to_top_feature(exact)
        ctx = _FitContext(self.f, x, self.cfg, self._rng)
        if self.kind is ExplainerKind.FAITHFUL:
            return _faithful_from_fit(ctx)
        return _sparse_from_fit(ctx)


def _truncate_to_top_feature(attr: Attribution) -> Attribution:
    w = attr.weights
    if np.all(w == 0):
        return attr
    j = int(np.argmax(np.abs(w)))
    kept = np.zeros_like(w)
    kept[j] = w[j]
    return Attribution(kept, attr.intercept)


def _faithful_from_fit(ctx: _FitContext) -> Attribution:
    if ctx.degenerate:
        # locally constant as sampled: zero weights, intercept = the label
        return Attribution(np.zeros(ctx.x.shape[0]), float(ctx.y_wide[0]))
    D = ctx.x.shape[0]
    fits = [ctx.signed_fit(ctx.wide, ctx.y_wide)]
    fits += [ctx.signed_fit(ctx.wide, ctx.y_wide, [j]) for j in range(D)]
    return ctx.select_rounded(fits, include_constants=True)


def _sparse_from_fit(ctx: _FitContext) -> Attribution:
    pts, ys = ctx.fit_points()
    if pts is None:
        return Attribution(np.zeros(ctx.x.shape[0]), float(ctx.y_wide[0]))
    dense = ctx.signed_fit(pts, ys)
    j = int(np.argmax(np.abs(dense[0])))
    single = ctx.signed_fit(pts, ys, [j])
    return ctx.select_rounded([single], include_constants=False)


def _global_fit(f, dimension: int, cfg: LocalFitConfig, rng: RngStream,
                sparse: bool) -> Attribution:
    """Raw-label global least-squares fit, optionally reduced to its dominant
    feature and refit on that support, rounded at the best global scale."""
    gen = rng.substream(f"global/{'sparse' if sparse else 'dense'}").generator
    pts = gen.random((cfg.global_fit_samples, dimension))
    ys = np.asarray(f(pts), dtype=int)
    targets = ys.astype(float)
    w, b = _lstsq_affine(pts, targets)
    if sparse:
        j = int(np.argmax(np.abs(w)))
        w, b = _lstsq_affine(pts, targets, [j])
    best = None
    best_acc = -1.0
    for c in _scale_grid(w, b, cfg.n_scales):
        wr, br = round_sig_vec(w * c), round_sig(b * c)
        acc = float(np.mean((pts @ wr + br > 0).astype(int) == ys))
        if acc > best_acc:
            best_acc = acc
            best = (wr, br)
    return Attribution(best[0], best[1])


def make_explainers(f, cfg: LocalFitConfig, rng: RngStream) -> dict:
    """Build all four explainer families for a ground-truth function."""
    robust = _global_fit(f, f.dimension, cfg, rng, sparse=False)
    sparse_robust = _global_fit(f, f.dimension, cfg, rng, sparse=True)
    return {
        ExplainerKind.FAITHFUL: Explainer(ExplainerKind.FAITHFUL, f, cfg, rng),
        ExplainerKind.ROBUST: Explainer(ExplainerKind.ROBUST, f, cfg, rng,
                                        constant_attribution=robust),
        ExplainerKind.SPARSE: Explainer(ExplainerKind.SPARSE, f, cfg, rng),
        ExplainerKind.SPARSE_ROBUST: Explainer(ExplainerKind.SPARSE_ROBUST, f, cfg, rng,
                                               constant_attribution=sparse_robust),
    }


def export_explanations(path: str | Path, f, explainers: dict, points) -> None:
    """Write one line per (input, kind): tab-separated input entries, the kind
    name, then the D+1 attribution entries.  Auditable flat text."""
    points = np.atleast_2d(np.asarray(points, dtype=float))
    lines = ["\t".join(
        [*(f"x{i+1}" for i in range(f.dimension)), "kind",
         *(f"w{i+1}" for i in range(f.dimension)), "intercept"])]
    for x in points:
        for kind, explainer in explainers.items():
            attr = explainer(x)
            cells = [f"{v:.17g}" for v in x] + [str(kind)] + \
                    [f"{v:.17g}" for v in attr.weights] + [f"{attr.intercept:.17g}"]
            lines.append("\t".join(cells))
    Path(path).write_text("\n".join(lines) + "\n")
