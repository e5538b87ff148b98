"""Experiment orchestration: seeded trials, property tables, accuracy tables,
deterministic serialization, and expectation checking.

A task experiment resamples training and test points each trial, trains one
proxy per explanation family, and reports mean accuracy with 95% CIs over
trials.  A property experiment evaluates the three explanation metrics on a
fixed set of uniform inputs and reports means with CIs over inputs.  Given
the same config and master seed, every emitted byte is identical across
runs.
"""
from __future__ import annotations

import hashlib
import io
from dataclasses import dataclass, field, replace

from .core import RngStream, SummaryStat, mean_ci95
from .explainers import ExplainerKind, LocalFitConfig, make_explainers, export_explanations
from .ground_truth import load_ground_truth
from .properties import InfidelityConfig, StabilityConfig, local_infidelity, local_stability, sparsity
from .proxy import MemoryModel, train_proxy, evaluate_proxy
from .tasks import TaskKind, make_instances, sample_training_points, task_labels

__all__ = [
    "ExperimentConfig",
    "ResultTable",
    "ExpectationReport",
    "ExpectationParseError",
    "STABILITY_RADIUS",
    "DEFAULT_FORBIDDEN_FEATURE",
    "run_trial",
    "run_task_experiment",
    "run_property_experiment",
    "run_experiment",
    "emit_table",
    "check_expectations",
]

STABILITY_RADIUS = {"box": 0.1, "piece": 2.0}
DEFAULT_FORBIDDEN_FEATURE = {"box": 3, "piece": 4}

KIND_ORDER = [ExplainerKind.FAITHFUL, ExplainerKind.ROBUST,
              ExplainerKind.SPARSE, ExplainerKind.SPARSE_ROBUST]


@dataclass(frozen=True)
class ExperimentConfig:
    """Everything a run needs; hashable to a config fingerprint."""

    functions: tuple = ("box", "piece")
    tasks: tuple = ("forward", "forbidden")
    memories: tuple = ("limited", "unlimited")
    experiment: str = "both"          # tasks | properties | both
    n_trials: int = 10
    n_train: int = 10
    n_test: int = 100
    n_property_inputs: int = 100
    infidelity_radius: float = 0.1
    infidelity_samples: int = 200
    stability_samples: int = 256
    master_seed: int = 7
    forbidden_features: dict = field(default_factory=lambda: dict(DEFAULT_FORBIDDEN_FEATURE))
    fit: LocalFitConfig = field(default_factory=LocalFitConfig)

    def config_hash(self) -> str:
        text = self.to_text()
        return hashlib.sha256(text.encode("utf-8")).hexdigest()[:16]

    def to_text(self) -> str:
        lines = [
            f"functions = {','.join(self.functions)}",
            f"tasks = {','.join(self.tasks)}",
            f"memories = {','.join(self.memories)}",
            f"experiment = {self.experiment}",
            f"n_trials = {self.n_trials}",
            f"n_train = {self.n_train}",
            f"n_test = {self.n_test}",
            f"n_property_inputs = {self.n_property_inputs}",
            f"infidelity_radius = {self.infidelity_radius:.17g}",
            f"infidelity_samples = {self.infidelity_samples}",
            f"stability_samples = {self.stability_samples}",
            f"master_seed = {self.master_seed}",
        ]
        for fn in sorted(self.forbidden_features):
            lines.append(f"forbidden_feature_{fn} = {self.forbidden_features[fn]}")
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "ExperimentConfig":
        values = {}
        for lineno, raw in enumerate(text.splitlines(), start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise ValueError(f"config line {lineno}: expected 'key = value'")
            key, _, val = line.partition("=")
            values[key.strip()] = val.strip()
        cfg = cls()
        kwargs = {}
        for key, val in values.items():
            if key in ("functions", "tasks", "memories"):
                kwargs[key] = tuple(v.strip() for v in val.split(",") if v.strip())
            elif key == "experiment":
                kwargs[key] = val
            elif key in ("n_trials", "n_train", "n_test", "n_property_inputs",
                         "infidelity_samples", "stability_samples", "master_seed"):
                kwargs[key] = int(val)
            elif key == "infidelity_radius":
                kwargs[key] = float(val)
            elif key.startswith("forbidden_feature_"):
                ff = dict(kwargs.get("forbidden_features", cfg.forbidden_features))
                ff[key.removeprefix("forbidden_feature_")] = int(val)
                kwargs["forbidden_features"] = ff
            else:
                raise ValueError(f"unknown config key {key!r}")
        return replace(cfg, **kwargs)


@dataclass
class ResultTable:
    """Cells keyed by (function, condition, explainer kind)."""

    entries: dict
    config_hash: str

    def cell(self, function: str, condition: str, kind: str) -> SummaryStat:
        return self.entries[(function, condition, kind)]

    def sorted_keys(self) -> list:
        kind_rank = {str(k): i for i, k in enumerate(KIND_ORDER)}
        return sorted(self.entries,
                      key=lambda k: (k[0], k[1], kind_rank.get(k[2], 99), k[2]))

    def to_csv(self) -> str:
        out = io.StringIO()
        out.write("# expsim-results v1\n")
        out.write(f"# config_hash={self.config_hash}\n")
        out.write("function,condition,kind,mean,ci95_halfwidth,n\n")
        for key in self.sorted_keys():
            s = self.entries[key]
            out.write(f"{key[0]},{key[1]},{key[2]},"
                      f"{s.mean:.17g},{s.ci95_halfwidth:.17g},{s.n}\n")
        return out.getvalue()

    @classmethod
    def from_csv(cls, text: str) -> "ResultTable":
        entries = {}
        config_hash = ""
        for raw in text.splitlines():
            line = raw.strip()
            if not line:
                continue
            if line.startswith("#"):
                if "config_hash=" in line:
                    config_hash = line.split("config_hash=", 1)[1].strip()
                continue
            if line.startswith("function,"):
                continue
            fn, cond, kind, mean, hw, n = line.split(",")
            entries[(fn, cond, kind)] = SummaryStat(float(mean), float(hw), int(n))
        return cls(entries, config_hash)

    def to_markdown(self) -> str:
        """Explainer kinds as columns, one row per (function, condition)."""
        kinds = [str(k) for k in KIND_ORDER]
        rows = sorted({(k[0], k[1]) for k in self.entries})
        lines = ["| function | condition | " + " | ".join(kinds) + " |",
                 "|---|---|" + "---|" * len(kinds)]
        for fn, cond in rows:
            cells = []
            for kind in kinds:
                s = self.entries.get((fn, cond, kind))
                cells.append("" if s is None else f"{s.mean:.2f} ± {s.ci95_halfwidth:.2f}")
            lines.append(f"| {fn} | {cond} | " + " | ".join(cells) + " |")
        return "\n".join(lines) + "\n"

    def merged_with(self, other: "ResultTable") -> "ResultTable":
        entries = dict(self.entries)
        entries.update(other.entries)
        return ResultTable(entries, self.config_hash)


def _function_by_name(name: str):
    box, piece = load_ground_truth()
    table = {"box": box, "piece": piece}
    if name not in table:
        raise ValueError(f"unknown function {name!r}")
    return table[name]


def _task_for(config: ExperimentConfig, function_name: str, task_name: str) -> TaskKind:
    if task_name == "forward":
        return TaskKind.forward()
    if task_name == "forbidden":
        return TaskKind.forbidden(config.forbidden_features[function_name])
    raise ValueError(f"unknown task {task_name!r}")


def run_trial(f, task: TaskKind, memory: MemoryModel, explainers: dict,
              config: ExperimentConfig, trial_index: int, root: RngStream) -> dict:
    """One trial: fresh training and test points; accuracy per explainer kind.

    Identical (config, trial_index) pairs reproduce identical outputs because
    every random draw comes from substreams keyed on the trial identity.
    """
    label = f"trial/{f.name}/{task}/{memory}/{trial_index}"
    train_rng = root.substream(label + "/train")
    test_rng = root.substream(label + "/test")
    X_train = sample_training_points(f, task, config.n_train, train_rng)
    X_test = test_rng.generator.random((config.n_test, f.dimension))
    test_labels = task_labels(f, task, X_test)
    out = {}
    for kind, explainer in explainers.items():
        train = make_instances(f, explainer, memory, task, X_train)
        test = make_instances(f, explainer, memory, task, X_test)
        tree = train_proxy([t.human_input for t in train], [t.label for t in train])
        acc = evaluate_proxy(tree, [t.human_input for t in test], test_labels)
        out[kind] = acc
    return out


def run_task_experiment(config: ExperimentConfig) -> ResultTable:
    root = RngStream(config.master_seed)
    entries = {}
    for fn_name in config.functions:
        f = _function_by_name(fn_name)
        explainers = make_explainers(f, config.fit, root.substream(f"explainers/{fn_name}"))
        for task_name in config.tasks:
            task = _task_for(config, fn_name, task_name)
            for mem_name in config.memories:
                memory = MemoryModel(mem_name)
                per_kind = {kind: [] for kind in explainers}
                for t in range(config.n_trials):
                    result = run_trial(f, task, memory, explainers, config, t, root)
                    for kind, acc in result.items():
                        per_kind[kind].append(acc)
                for kind, accs in per_kind.items():
                    key = (fn_name, f"{task_name}/{mem_name}", str(kind))
                    entries[key] = mean_ci95(accs)
    return ResultTable(entries, config.config_hash())


def run_property_experiment(config: ExperimentConfig) -> ResultTable:
    root = RngStream(config.master_seed)
    entries = {}
    for fn_name in config.functions:
        f = _function_by_name(fn_name)
        explainers = make_explainers(f, config.fit, root.substream(f"explainers/{fn_name}"))
        inputs = root.substream(f"property-inputs/{fn_name}").generator.random(
            (config.n_property_inputs, f.dimension))
        stab_cfg = StabilityConfig(radius=STABILITY_RADIUS[fn_name],
                                   n_samples=config.stability_samples)
        infid_cfg = InfidelityConfig(radius=config.infidelity_radius,
                                     n_samples=config.infidelity_samples)
        for kind, explainer in explainers.items():
            infid, stab, spars = [], [], []
            for i, x in enumerate(inputs):
                attr = explainer(x)
                infid.append(local_infidelity(
                    attr, f, x, infid_cfg,
                    root.substream(f"infid/{fn_name}/{kind}/{i}")))
                spars.append(sparsity(attr))
                if explainer.is_constant:
                    stab.append(0.0)
                else:
                    stab.append(local_stability(
                        explainer, f, x, stab_cfg,
                        root.substream(f"stab/{fn_name}/{kind}/{i}")))
            entries[(fn_name, "local_infidelity", str(kind))] = mean_ci95(infid)
            entries[(fn_name, "local_stability", str(kind))] = mean_ci95(stab)
            entries[(fn_name, "sparsity", str(kind))] = mean_ci95(spars)
    return ResultTable(entries, config.config_hash())


def run_experiment(config: ExperimentConfig) -> ResultTable:
    """Dispatch on config.experiment and merge the resulting tables."""
    if config.experiment == "tasks":
        return run_task_experiment(config)
    if config.experiment == "properties":
        return run_property_experiment(config)
    if config.experiment == "both":
        return run_property_experiment(config).merged_with(run_task_experiment(config))
    raise ValueError(f"unknown experiment mode {config.experiment!r}")


def emit_table(table: ResultTable, fmt: str = "csv") -> str:
    if fmt == "csv":
        return table.to_csv()
    if fmt == "markdown":
        return table.to_markdown()
    raise ValueError(f"unknown format {fmt!r}")


def export_run(config: ExperimentConfig, table: ResultTable, out_dir) -> None:
    """Write the deterministic run artifacts into a directory."""
    from pathlib import Path
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "results.csv").write_text(table.to_csv())
    (out / "results.md").write_text(table.to_markdown())
    (out / "config.txt").write_text(config.to_text())
    root = RngStream(config.master_seed)
    for fn_name in config.functions:
        f = _function_by_name(fn_name)
        explainers = make_explainers(f, config.fit, root.substream(f"explainers/{fn_name}"))
        pts = root.substream(f"export-inputs/{fn_name}").generator.random((10, f.dimension))
        export_explanations(out / f"explanations_{fn_name}.tsv", f, explainers, pts)


# ---------------------------------------------------------------------------
# expectation checking
# ---------------------------------------------------------------------------

class ExpectationParseError(ValueError):
    def __init__(self, lineno: int, message: str):
        self.lineno = lineno
        super().__init__(f"line {lineno}: {message}")


@dataclass
class ExpectationReport:
    lines: list          # (lineno, text, passed, detail)

    @property
    def passed(self) -> bool:
        return all(ok for _, _, ok, _ in self.lines)

    def __str__(self) -> str:
        out = []
        for lineno, text, ok, detail in self.lines:
            out.append(f"{'PASS' if ok else 'FAIL'}  {text}    [{detail}]")
        out.append(f"{'ALL PASS' if self.passed else 'FAILURES PRESENT'}")
        return "\n".join(out)


_OPS = {
    ">=": lambda a, b: a >= b,
    "<=": lambda a, b: a <= b,
    ">": lambda a, b: a > b,
    "<": lambda a, b: a < b,
    "==": lambda a, b: a == b,
}


def _resolve(table: ResultTable, token: str, lineno: int) -> float:
    try:
        return float(token)
    except ValueError:
        pass
    parts = token.split("/")
    if len(parts) < 3:
        raise ExpectationParseError(lineno, f"cell key {token!r} needs function/condition/kind")
    key = (parts[0], "/".join(parts[1:-1]), parts[-1])
    if key not in table.entries:
        raise KeyError(f"missing key {token!r}")
    return table.entries[key].mean


def check_expectations(table: ResultTable, expect_text: str) -> ExpectationReport:
    """Evaluate ordering / threshold assertions against a result table.

    Each non-comment line reads `LHS OP RHS [+ MARGIN]`, where LHS and RHS
    are either numbers or cell keys `function/condition/kind` (conditions may
    contain slashes).  An empty file passes vacuously; a missing cell fails
    that line with a "missing key" detail.
    """
    report_lines = []
    for lineno, raw in enumerate(expect_text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        tokens = line.split()
        op_positions = [i for i, t in enumerate(tokens) if t in _OPS]
        if len(op_positions) != 1:
            raise ExpectationParseError(lineno, "expected exactly one comparison operator")
        pos = op_positions[0]
        lhs_tokens, rhs_tokens = tokens[:pos], tokens[pos + 1:]
        if len(lhs_tokens) != 1 or len(rhs_tokens) not in (1, 3):
            raise ExpectationParseError(lineno, "expected 'LHS OP RHS [+ MARGIN]'")
        margin = 0.0
        if len(rhs_tokens) == 3:
            if rhs_tokens[1] != "+":
                raise ExpectationParseError(lineno, "only '+ margin' adjustments are supported")
            try:
                margin = float(rhs_tokens[2])
            except ValueError:
                raise ExpectationParseError(lineno, f"bad margin {rhs_tokens[2]!r}")
        op = tokens[pos]
        try:
            lhs = _resolve(table, lhs_tokens[0], lineno)
            rhs = _resolve(table, rhs_tokens[0], lineno) + margin
        except KeyError as exc:
            report_lines.append((lineno, line, False, f"missing key: {exc.args[0]}"))
            continue
        ok = _OPS[op](lhs, rhs)
        report_lines.append((lineno, line, bool(ok), f"{lhs:.4f} {op} {rhs:.4f}"))
    return ExpectationReport(report_lines)
