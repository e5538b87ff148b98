"""Ground-truth binary classifiers with queryable structure.

Two classifiers are provided:

* `BoxFunction` - 3 inputs.  Feature 3 selects which of features 1 and 2 is
  tested against 0.5; the region cut points on feature 3 are (0.25, 0.5, 0.75).
* `PiecewiseFunction` - 10 inputs.  Feature 1 selects one of four linear rules;
  the prediction is 1 when the active rule's affine score is positive.

Both expose region membership, the active local linear rule (where one
exists), and a feature-usage oracle.  The defining constants ship as a
versioned plain-text file under `expsim/data/` so the ground truth is
auditable bit for bit.
"""
from __future__ import annotations

from dataclasses import dataclass
from importlib import resources
from pathlib import Path

import numpy as np

from .core import Attribution

__all__ = [
    "RegionInfo",
    "BoxFunction",
    "PiecewiseFunction",
    "load_ground_truth",
    "DEFAULT_DATA_FILE",
]

DEFAULT_DATA_FILE = "ground_truth_v1.txt"


@dataclass(frozen=True)
class RegionInfo:
    """Which region an input falls in and the local rule active there.

    `active_weights` is None for classifiers with no closed-form local linear
    rule (the box classifier's step rule).
    """

    index: int
    active_features: tuple
    active_weights: Attribution | None


def _check_input(x, dimension: int) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.ndim != 1 or x.shape[0] != dimension:
        raise ValueError(f"expected a {dimension}-dimensional input, got shape {x.shape}")
    return x


def _check_batch(X, dimension: int) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[None, :]
    if X.ndim != 2 or X.shape[1] != dimension:
        raise ValueError(f"expected inputs of dimension {dimension}, got shape {X.shape}")
    return X


class BoxFunction:
    """Step classifier on 3 features; feature 3 switches the tested feature.

    Regions by feature 3 with half-open intervals exactly as defined:
    region 1: x3 <= 0.25, region 2: 0.25 < x3 <= 0.5,
    region 3: 0.5 < x3 <= 0.75, region 4: 0.75 < x3.
    Regions 1 and 3 test feature 2 > 0.5; regions 2 and 4 test feature 1 > 0.5.
    """

    name = "box"
    dimension = 3
    switch_feature = 3  # 1-based

    def __init__(self, cuts=(0.25, 0.5, 0.75), threshold=0.5):
        self.cuts = tuple(float(c) for c in cuts)
        self.threshold = float(threshold)

    def region_index(self, X) -> np.ndarray:
        X = _check_batch(X, self.dimension)
        return 1 + np.searchsorted(self.cuts, X[:, 2], side="left")

    def active_feature(self, region_index) -> np.ndarray:
        """1-based active feature per region: 2 in regions 1,3; 1 in 2,4."""
        region_index = np.asarray(region_index)
        return np.where(region_index % 2 == 1, 2, 1)

    def predict(self, X) -> np.ndarray:
        X = _check_batch(X, self.dimension)
        act = self.active_feature(self.region_index(X)) - 1
        return (X[np.arange(len(X)), act] > self.threshold).astype(int)

    def __call__(self, X) -> np.ndarray:
        return self.predict(X)

    def region_of(self, x) -> RegionInfo:
        x = _check_input(x, self.dimension)
        idx = int(self.region_index(x[None, :])[0])
        act = int(self.active_feature(idx))
        # no closed-form linear rule exists for a step classifier
        return RegionInfo(index=idx, active_features=(act,), active_weights=None)

    def uses_feature(self, x, d: int) -> bool:
        """True when feature d influences the local prediction.

        The switch feature is consulted for every input, so it counts as used
        everywhere; otherwise only the region's active feature is used.
        """
        if not 1 <= d <= self.dimension:
            raise ValueError(f"feature index {d} out of range 1..{self.dimension}")
        if d == self.switch_feature:
            return True
        info = self.region_of(x)
        return d in info.active_features

    def boundary_distance(self, X) -> np.ndarray:
        """Distance to the nearest decision structure: the active feature's
        threshold or a cut on the switch feature."""
        X = _check_batch(X, self.dimension)
        act = self.active_feature(self.region_index(X)) - 1
        d_act = np.abs(X[np.arange(len(X)), act] - self.threshold)
        d_cut = np.min(np.abs(X[:, [2]] - np.asarray(self.cuts)[None, :]), axis=1)
        return np.minimum(d_act, d_cut)


class PiecewiseFunction:
    """Four-piece linear classifier on 10 features.

    Feature 1 selects the piece (same cut points as the box classifier);
    the prediction is 1 when the piece's affine score is positive.  Row i of
    the weight matrix holds 10 feature weights plus an intercept in the last
    column.  Column 1 is all zeros: the piece-selecting feature never carries
    weight itself.
    """

    name = "piece"
    dimension = 10
    switch_feature = 1  # 1-based

    def __init__(self, weight_rows, cuts=(0.25, 0.5, 0.75)):
        W = np.asarray(weight_rows, dtype=float)
        if W.shape != (4, 11):
            raise ValueError(f"expected a 4x11 weight matrix, got {W.shape}")
        W.setflags(write=False)
        self.W = W
        self.cuts = tuple(float(c) for c in cuts)

    def region_index(self, X) -> np.ndarray:
        X = _check_batch(X, self.dimension)
        return 1 + np.searchsorted(self.cuts, X[:, 0], side="left")

    def scores(self, X) -> np.ndarray:
        X = _check_batch(X, self.dimension)
        reg = self.region_index(X) - 1
        return np.einsum("ij,ij->i", X, self.W[reg, :10]) + self.W[reg, 10]

    def predict(self, X) -> np.ndarray:
        return (self.scores(X) > 0).astype(int)

    def __call__(self, X) -> np.ndarray:
        return self.predict(X)

    def row_attribution(self, region_index: int) -> Attribution:
        row = self.W[region_index - 1]
        return Attribution(row[:10].copy(), float(row[10]))

    def region_of(self, x) -> RegionInfo:
        x = _check_input(x, self.dimension)
        idx = int(self.region_index(x[None, :])[0])
        attr = self.row_attribution(idx)
        active = tuple(int(d + 1) for d in np.nonzero(attr.weights)[0])
        return RegionInfo(index=idx, active_features=active, active_weights=attr)

    def uses_feature(self, x, d: int) -> bool:
        if not 1 <= d <= self.dimension:
            raise ValueError(f"feature index {d} out of range 1..{self.dimension}")
        info = self.region_of(x)
        return bool(info.active_weights.weights[d - 1] != 0)

    def boundary_distance(self, X) -> np.ndarray:
        """Distance to the nearest decision structure: |affine score| or a cut
        on the piece-selecting feature."""
        X = _check_batch(X, self.dimension)
        d_cut = np.min(np.abs(X[:, [0]] - np.asarray(self.cuts)[None, :]), axis=1)
        return np.minimum(np.abs(self.scores(X)), d_cut)


def _parse_ground_truth(text: str):
    cuts = None
    threshold = None
    rows = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        key = parts[0]
        if key == "cuts":
            cuts = tuple(float(v) for v in parts[1:])
        elif key == "box_threshold":
            threshold = float(parts[1])
        elif key == "piece_row":
            idx = int(parts[1])
            vals = [float(v) for v in parts[2:]]
            if len(vals) != 11:
                raise ValueError(f"line {lineno}: piece_row needs 11 values, got {len(vals)}")
            rows[idx] = vals
        else:
            raise ValueError(f"line {lineno}: unknown key {key!r}")
    if cuts is None or threshold is None or sorted(rows) != [1, 2, 3, 4]:
        raise ValueError("ground-truth file is incomplete")
    W = np.array([rows[i] for i in (1, 2, 3, 4)], dtype=float)
    return cuts, threshold, W


def load_ground_truth(path: str | Path | None = None):
    """Load (BoxFunction, PiecewiseFunction) from the packaged constants file
    or an explicit path."""
    if path is None:
        text = resources.files("expsim.data").joinpath(DEFAULT_DATA_FILE).read_text()
    else:
        text = Path(path).read_text()
    cuts, threshold, W = _parse_ground_truth(text)
    return BoxFunction(cuts=cuts, threshold=threshold), PiecewiseFunction(W, cuts=cuts)
