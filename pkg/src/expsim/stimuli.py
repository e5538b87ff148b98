"""Study stimulus construction and the columnar stimulus file.

A stimulus set packages what the study server needs: per-kind training items
(with answers) and a categorized 30-item test set, all with rounded display
values.  The file format is flat TSV, one row per (item, explainer kind).
"""
from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .core import RngStream, round_sig_vec
from .explainers import ExplainerKind, LocalFitConfig, make_explainers
from .ground_truth import load_ground_truth
from .proxy import MemoryModel, train_proxy
from .tasks import (TaskKind, categorize_test_points, make_instances,
                    sample_training_points, select_study_test_set, task_labels)

__all__ = [
    "StimulusItem",
    "StimulusSet",
    "StudySpec",
    "build_study_stimuli",
    "write_stimulus_file",
    "read_stimulus_file",
]


@dataclass(frozen=True)
class StimulusItem:
    """One displayable case for one explanation condition."""

    item_id: str
    phase: str                    # "training" | "test"
    category: str                 # test category, or "training"
    kind: str                     # explainer kind
    label: int                    # correct answer (withheld from test payloads)
    prediction: int               # classifier output shown in auditing tasks
    inputs: tuple                 # rounded display measurements
    weights: tuple                # rounded advice weights
    intercept: float


@dataclass
class StimulusSet:
    function: str
    task: str
    memory: str
    best_kind: str
    items: list

    def for_kind(self, kind: str, phase: str) -> list:
        return [it for it in self.items if it.kind == kind and it.phase == phase]


@dataclass(frozen=True)
class StudySpec:
    """What to generate stimuli for; seeds pin the draw."""

    function: str = "box"
    task: str = "forward"
    forbidden_feature: int | None = None
    memory: str = "limited"
    best_kind: str = "sparse"
    n_train: int = 10
    per_category: int = 10
    pool_size: int = 1000
    seed: int = 42
    training_scheme: str = "study_mix"
    boundary_ratio: float = 0.5

    def task_kind(self) -> TaskKind:
        if self.task == "forward":
            return TaskKind.forward()
        return TaskKind.forbidden(self.forbidden_feature)

    @classmethod
    def from_text(cls, text: str) -> "StudySpec":
        values = {}
        for lineno, raw in enumerate(text.splitlines(), start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise ValueError(f"stimulus config line {lineno}: expected 'key = value'")
            key, _, val = line.partition("=")
            values[key.strip()] = val.strip()
        kwargs = {}
        for key, val in values.items():
            if key in ("function", "task", "memory", "best_kind", "training_scheme"):
                kwargs[key] = val
            elif key in ("forbidden_feature", "n_train", "per_category", "pool_size", "seed"):
                kwargs[key] = int(val)
            elif key == "boundary_ratio":
                kwargs[key] = float(val)
            else:
                raise ValueError(f"unknown stimulus config key {key!r}")
        return cls(**kwargs)


def build_study_stimuli(spec: StudySpec, fit: LocalFitConfig | None = None) -> StimulusSet:
    """Generate training and categorized test stimuli for one study.

    Proxies are trained per explainer kind on the study's training points;
    the candidate pool is categorized against the designated best kind and
    `per_category` points are drawn from each category.
    """
    box, piece = load_ground_truth()
    f = {"box": box, "piece": piece}[spec.function]
    task = spec.task_kind()
    fit = fit or LocalFitConfig()
    root = RngStream(spec.seed, f"study/{spec.function}/{spec.task}")
    explainers = make_explainers(f, fit, root.substream("explainers"))
    memory = MemoryModel(spec.memory)
    best_kind = ExplainerKind(spec.best_kind)

    X_train = sample_training_points(f, task, spec.n_train, root.substream("train"),
                                     scheme=spec.training_scheme,
                                     boundary_ratio=spec.boundary_ratio)
    pool = root.substream("pool").generator.random((spec.pool_size, f.dimension))
    pool_labels = task_labels(f, task, pool)

    proxies = {}
    human_inputs = {}
    for kind, explainer in explainers.items():
        train = make_instances(f, explainer, memory, task, X_train)
        proxies[kind] = train_proxy([t.human_input for t in train],
                                    [t.label for t in train])
        test_instances = make_instances(f, explainer, memory, task, pool)
        human_inputs[kind] = [t.human_input for t in test_instances]

    categories = categorize_test_points(proxies, human_inputs, pool_labels, best_kind)
    chosen = select_study_test_set(categories, spec.per_category, root.substream("select"))

    items = []
    train_labels = task_labels(f, task, X_train)
    train_preds = np.asarray(f(X_train), dtype=int)
    pool_preds = np.asarray(f(pool), dtype=int)
    for kind, explainer in explainers.items():
        for i, x in enumerate(X_train):
            attr = explainer(x).rounded()
            items.append(StimulusItem(
                item_id=f"train-{i:02d}", phase="training", category="training",
                kind=str(kind), label=int(train_labels[i]), prediction=int(train_preds[i]),
                inputs=tuple(round_sig_vec(x)), weights=tuple(attr.weights),
                intercept=attr.intercept))
        for rank, idx in enumerate(chosen):
            x = pool[idx]
            attr = explainer(x).rounded()
            items.append(StimulusItem(
                item_id=f"test-{rank:02d}", phase="test", category=str(categories[idx]),
                kind=str(kind), label=int(pool_labels[idx]), prediction=int(pool_preds[idx]),
                inputs=tuple(round_sig_vec(x)), weights=tuple(attr.weights),
                intercept=attr.intercept))
    return StimulusSet(function=spec.function, task=spec.task, memory=spec.memory,
                       best_kind=spec.best_kind, items=items)


_HEADER_PREFIX = "# expsim-stimuli v1"


def write_stimulus_file(path: str | Path, stimuli: StimulusSet) -> None:
    dim = len(stimuli.items[0].inputs) if stimuli.items else 0
    lines = [
        _HEADER_PREFIX,
        f"# function={stimuli.function} task={stimuli.task} "
        f"memory={stimuli.memory} best_kind={stimuli.best_kind}",
        "\t".join(["item_id", "phase", "category", "kind", "label", "prediction",
                   *(f"x{i+1}" for i in range(dim)),
                   *(f"w{i+1}" for i in range(dim)), "intercept"]),
    ]
    for it in stimuli.items:
        lines.append("\t".join([
            it.item_id, it.phase, it.category, it.kind, str(it.label), str(it.prediction),
            *(f"{v:.17g}" for v in it.inputs),
            *(f"{v:.17g}" for v in it.weights),
            f"{it.intercept:.17g}",
        ]))
    Path(path).write_text("\n".join(lines) + "\n")


def read_stimulus_file(path: str | Path) -> StimulusSet:
    lines = Path(path).read_text().splitlines()
    if not lines or not lines[0].startswith(_HEADER_PREFIX):
        raise ValueError("not a stimulus file")
    meta = {}
    for part in lines[1].lstrip("# ").split():
        key, _, val = part.partition("=")
        meta[key] = val
    header = lines[2].split("\t")
    dim = sum(1 for h in header if h.startswith("x"))
    items = []
    for raw in lines[3:]:
        if not raw.strip():
            continue
        cells = raw.split("\t")
        inputs = tuple(float(v) for v in cells[6:6 + dim])
        weights = tuple(float(v) for v in cells[6 + dim:6 + 2 * dim])
        items.append(StimulusItem(
            item_id=cells[0], phase=cells[1], category=cells[2], kind=cells[3],
            label=int(cells[4]), prediction=int(cells[5]),
            inputs=inputs, weights=weights, intercept=float(cells[-1])))
    return StimulusSet(function=meta.get("function", ""), task=meta.get("task", ""),
                       memory=meta.get("memory", ""), best_kind=meta.get("best_kind", ""),
                       items=items)
