"""Computational stand-in for a study participant.

A proxy decision-maker sees a preprocessed feature vector (the "human
input"): the rounded raw input, the rounded attribution entries, and a
derived inner-product feature summarizing how the advice weighs the
measurements.  A limited memory budget truncates the inner product to the
two largest-magnitude attribution entries; an unlimited budget uses all of
them.  Decisions come from a depth-limited binary decision tree trained on a
handful of labeled examples.
"""
from __future__ import annotations

import enum
import re
from dataclasses import dataclass

import numpy as np

from .core import Attribution, round_sig, round_sig_vec

__all__ = [
    "MemoryModel",
    "build_human_input",
    "human_input_layout",
    "DecisionTree",
    "TreeNode",
    "train_proxy",
    "predict_proxy",
    "evaluate_proxy",
    "exhaustive_best_depth2",
]


class MemoryModel(enum.Enum):
    """How much mental arithmetic the proxy can spend on the advice."""

    LIMITED = "limited"
    UNLIMITED = "unlimited"

    def __str__(self) -> str:
        return self.value


def human_input_layout(dimension: int, forbidden: bool) -> list[str]:
    """Feature names for the human-input vector, in canonical order.

    The layout is frozen so trained trees stay portable: raw inputs, then
    attribution weights, the intercept, the inner-product feature, and (for
    the forbidden-feature task) the function's prediction and the magnitude
    of the forbidden feature's attribution entry.
    """
    names = [f"x{i+1}" for i in range(dimension)]
    names += [f"w{i+1}" for i in range(dimension)]
    names += ["intercept", "inner_product"]
    if forbidden:
        names += ["prediction", "forbidden_weight_mag"]
    return names


def build_human_input(x, attribution: Attribution, memory: MemoryModel,
                      prediction: int | None = None,
                      forbidden_feature: int | None = None,
                      sig_figures: int = 1) -> np.ndarray:
    """Construct the proxy's feature vector for one decision.

    Every entry passes significant-figure rounding, including the inner
    product itself (it is computed from the already-rounded values, then
    remembered at the same precision).  With limited memory the inner product
    keeps only the two largest-magnitude attribution entries; the intercept
    competes for those slots like any other entry (it multiplies a constant
    1).  Passing `forbidden_feature` appends the function's prediction and
    the magnitude of that feature's rounded attribution entry.
    """
    x = np.asarray(x, dtype=float)
    if x.shape != attribution.weights.shape:
        raise ValueError("input and attribution dimensions differ")
    xr = round_sig_vec(x, sig_figures)
    wr = round_sig_vec(attribution.weights, sig_figures)
    br = round_sig(attribution.intercept, sig_figures)
    if memory is MemoryModel.UNLIMITED:
        inner = float(xr @ wr + br)
    else:
        entries = np.append(wr, br)
        against = np.append(xr, 1.0)
        order = sorted(range(len(entries)), key=lambda i: (-abs(entries[i]), i))
        keep = order[:2]
        inner = float(sum(entries[i] * against[i] for i in keep))
    inner = round_sig(inner, sig_figures)
    feats = np.concatenate([xr, wr, [br, inner]])
    if forbidden_feature is not None:
        if prediction is None:
            raise ValueError("forbidden-feature inputs need the function's prediction")
        if not 1 <= forbidden_feature <= len(x):
            raise ValueError(f"forbidden feature {forbidden_feature} out of range")
        feats = np.concatenate(
            [feats, [float(prediction), abs(wr[forbidden_feature - 1])]])
    return feats


# ---------------------------------------------------------------------------
# depth-limited decision tree
# ---------------------------------------------------------------------------

@dataclass
class TreeNode:
    label: int | None = None
    feature: int | None = None
    threshold: float | None = None
    left: "TreeNode | None" = None
    right: "TreeNode | None" = None

    @property
    def is_leaf(self) -> bool:
        return self.feature is None


class DecisionTree:
    """Axis-aligned binary tree of depth <= max_depth with 0/1 leaf labels."""

    def __init__(self, root: TreeNode, max_depth: int):
        self.root = root
        self.max_depth = max_depth

    def predict(self, h) -> int:
        h = np.asarray(h, dtype=float)
        node = self.root
        while not node.is_leaf:
            if node.feature >= h.shape[0]:
                raise ValueError("human input shorter than the training layout")
            node = node.left if h[node.feature] <= node.threshold else node.right
        return int(node.label)

    def depth(self) -> int:
        def walk(node):
            if node.is_leaf:
                return 0
            return 1 + max(walk(node.left), walk(node.right))
        return walk(self.root)

    def node_counts(self):
        internal = leaves = 0
        stack = [self.root]
        while stack:
            node = stack.pop()
            if node.is_leaf:
                leaves += 1
            else:
                internal += 1
                stack.extend([node.left, node.right])
        return internal, leaves

    def to_text(self) -> str:
        """Nested plain-text form: (feature=i threshold=t LEFT RIGHT) / (leaf y)."""
        def walk(node):
            if node.is_leaf:
                return f"(leaf {node.label})"
            return (f"(feature={node.feature} threshold={node.threshold:.17g} "
                    f"{walk(node.left)} {walk(node.right)})")
        return walk(self.root)

    @classmethod
    def from_text(cls, text: str, max_depth: int = 2) -> "DecisionTree":
        tokens = re.findall(r"\(|\)|[^\s()]+", text)
        pos = 0

        def parse():
            nonlocal pos
            if tokens[pos] != "(":
                raise ValueError("malformed tree text")
            pos += 1
            if tokens[pos] == "leaf":
                label = int(tokens[pos + 1])
                pos += 2
                if tokens[pos] != ")":
                    raise ValueError("malformed leaf")
                pos += 1
                return TreeNode(label=label)
            feature = int(tokens[pos].split("=")[1])
            threshold = float(tokens[pos + 1].split("=")[1])
            pos += 2
            left = parse()
            right = parse()
            if tokens[pos] != ")":
                raise ValueError("malformed node")
            pos += 1
            return TreeNode(feature=feature, threshold=threshold, left=left, right=right)

        return cls(parse(), max_depth)


def _majority(y: np.ndarray) -> int:
    ones = int(y.sum())
    zeros = len(y) - ones
    return 1 if ones > zeros else 0  # tie -> 0


def _misses(y: np.ndarray) -> int:
    ones = int(y.sum())
    return min(ones, len(y) - ones)


def _weighted_gini(y_left: np.ndarray, y_right: np.ndarray) -> float:
    def side(y):
        n = len(y)
        if n == 0:
            return 0.0
        ones = int(y.sum())
        return 2.0 * ones * (n - ones) / n
    return side(y_left) + side(y_right)


def _split_candidates(X: np.ndarray):
    for j in range(X.shape[1]):
        vals = np.unique(X[:, j])
        for t in (vals[:-1] + vals[1:]) / 2.0:
            yield j, float(t)


def _best_split_gini(X: np.ndarray, y: np.ndarray):
    """Split minimizing weighted Gini; zero-gain splits are allowed (a later
    level may still separate the labels).  Ties prefer the most derived
    feature (highest index), then the smallest threshold."""
    best = None
    best_key = None
    for j, t in _split_candidates(X):
        mask = X[:, j] <= t
        if mask.all() or not mask.any():
            continue
        key = (_weighted_gini(y[mask], y[~mask]), -j, t)
        if best_key is None or key < best_key:
            best_key, best = key, (j, t)
    return best


def _best_split_misses(X: np.ndarray, y: np.ndarray):
    """Split minimizing leaf misclassifications; None without strict
    improvement.  Used at the final level, where maximizing immediate
    accuracy is the whole job."""
    base = _misses(y)
    best = None
    best_key = None
    for j, t in _split_candidates(X):
        mask = X[:, j] <= t
        if mask.all() or not mask.any():
            continue
        misses = _misses(y[mask]) + _misses(y[~mask])
        if misses >= base:
            continue
        key = (misses, _weighted_gini(y[mask], y[~mask]), -j, t)
        if best_key is None or key < best_key:
            best_key, best = key, (j, t)
    return best


def _grow(X: np.ndarray, y: np.ndarray, depth: int, max_depth: int) -> TreeNode:
    if depth >= max_depth or y.min() == y.max():
        return TreeNode(label=_majority(y))
    split = (_best_split_misses(X, y) if depth == max_depth - 1
             else _best_split_gini(X, y))
    if split is None:
        return TreeNode(label=_majority(y))
    j, t = split
    mask = X[:, j] <= t
    return TreeNode(feature=j, threshold=t,
                    left=_grow(X[mask], y[mask], depth + 1, max_depth),
                    right=_grow(X[~mask], y[~mask], depth + 1, max_depth))


def train_proxy(inputs, labels, max_depth: int = 2) -> DecisionTree:
    """Greedy induction of a depth-limited tree.

    Pairs are sorted canonically first, so the tree is invariant to training
    order.  Leaf labels are majorities with ties resolved to 0.
    """
    X = np.atleast_2d(np.asarray(inputs, dtype=float))
    y = np.asarray(labels, dtype=int)
    if len(X) == 0:
        raise ValueError("training set is empty")
    if len(X) != len(y):
        raise ValueError("inputs and labels differ in length")
    if not np.isin(y, (0, 1)).all():
        raise ValueError("labels must be binary")
    order = np.lexsort(np.vstack([X.T[::-1], y[None, :]])[::-1])
    X, y = X[order], y[order]
    return DecisionTree(_grow(X, y, 0, max_depth), max_depth)


def predict_proxy(tree: DecisionTree, human_input) -> int:
    return tree.predict(human_input)


def evaluate_proxy(tree: DecisionTree, inputs, labels) -> float:
    X = np.atleast_2d(np.asarray(inputs, dtype=float))
    y = np.asarray(labels, dtype=int)
    if len(X) == 0:
        raise ValueError("test set is empty")
    preds = np.array([tree.predict(h) for h in X])
    return float(np.mean(preds == y))


def greedy_gap_report(n_instances: int = 200, seed: int = 99,
                      max_points: int = 12, max_features: int = 4) -> str:
    """Compare greedy induction against exhaustive depth-1/depth-2 optima on
    random instances; returns a plain-text report.

    Guarantees checked: greedy training accuracy never falls below the best
    single split, and equals the exhaustive depth-2 optimum whenever greedy's
    root matches an optimal root.  The depth-2 shortfall on other instances
    is the (expected) price of greedy root selection.
    """
    from .core import RngStream
    depth1_viol = same_root = same_root_equal = gaps = 0
    gap_sizes = []
    for i in range(n_instances):
        gen = RngStream(seed, f"oracle/{i}").generator
        n = int(gen.integers(4, max_points + 1))
        d = int(gen.integers(2, max_features + 1))
        X = np.round(gen.random((n, d)), 2)
        y = gen.integers(0, 2, n)
        if y.min() == y.max():
            y[0] = 1 - y[0]
        tree = train_proxy(X, y)
        acc = evaluate_proxy(tree, X, y)
        best1, best2, root2 = exhaustive_best_depth2(X, y)
        if acc < best1 - 1e-12:
            depth1_viol += 1
        if acc < best2 - 1e-12:
            gaps += 1
            gap_sizes.append(best2 - acc)
        groot = (None if tree.root.is_leaf
                 else (tree.root.feature, tree.root.threshold))
        if groot is not None and groot == root2:
            same_root += 1
            if abs(acc - best2) < 1e-12:
                same_root_equal += 1
    lines = [
        f"instances: {n_instances} (<= {max_points} points, <= {max_features} features)",
        f"greedy below depth-1 optimum: {depth1_viol} (must be 0)",
        f"greedy below depth-2 optimum: {gaps} "
        f"(mean shortfall {np.mean(gap_sizes):.4f})" if gap_sizes else
        f"greedy below depth-2 optimum: {gaps}",
        f"same root as an optimal tree: {same_root}; "
        f"of those, equal accuracy: {same_root_equal} (must match)",
    ]
    return "\n".join(lines)


def exhaustive_best_depth2(inputs, labels):
    """Brute-force training-accuracy optima over all depth-1 and depth-2 trees
    built from midpoint splits.

    Returns (best_depth1_accuracy, best_depth2_accuracy, best_depth2_root);
    the root reported is the first optimum in (feature desc, threshold asc)
    preference order, mirroring the greedy tie-breaks.
    """
    X = np.atleast_2d(np.asarray(inputs, dtype=float))
    y = np.asarray(labels, dtype=int)
    n = len(y)
    splits = list(_split_candidates(X))

    def best_child_misses(Xc, yc):
        best = _misses(yc)
        for j, t in splits:
            mask = Xc[:, j] <= t
            if mask.all() or not mask.any():
                continue
            best = min(best, _misses(yc[mask]) + _misses(yc[~mask]))
        return best

    best1 = _misses(y)
    best2 = _misses(y)
    best2_root = None
    best2_key = None
    for j, t in splits:
        mask = X[:, j] <= t
        if mask.all() or not mask.any():
            continue
        m1 = _misses(y[mask]) + _misses(y[~mask])
        best1 = min(best1, m1)
        m2 = best_child_misses(X[mask], y[mask]) + best_child_misses(X[~mask], y[~mask])
        key = (m2, -j, t)
        if best2_key is None or key < best2_key:
            best2_key = key
            best2_root = (j, t)
        best2 = min(best2, m2)
    return (n - best1) / n, (n - best2) / n, best2_root
