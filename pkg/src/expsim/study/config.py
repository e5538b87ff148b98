"""Study definition and display content.

The study definition is a small key = value file; display content (scenario
copy, trait names, comprehension questions, survey items) lives in an
editable JSON file so the wording can change without touching code.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

__all__ = ["StudyConfig", "StudyContent", "DEFAULT_TRAITS"]

DEFAULT_TRAITS = ["glow", "hue", "tremor", "pulse", "chirp",
                  "shimmer", "drift", "crackle", "bloom", "murmur"]


@dataclass(frozen=True)
class StudyConfig:
    study_id: str = "study"
    task: str = "forward"                  # forward | forbidden
    function: str = "box"
    kinds: tuple = ("faithful", "robust", "sparse", "sparse_robust")
    participants_per_kind: int = 8
    n_training: int = 10
    n_test: int = 30
    time_pressure: bool = True
    total_test_seconds: int = 600
    comprehension_pass_threshold: float = 1.0
    comprehension_attempts: int = 3        # first try + two retries
    seed: int = 42

    @property
    def cohort_size(self) -> int:
        return self.participants_per_kind * len(self.kinds)

    @property
    def recommended_seconds(self) -> float:
        return self.total_test_seconds / self.n_test

    @classmethod
    def from_text(cls, text: str) -> "StudyConfig":
        values = {}
        for lineno, raw in enumerate(text.splitlines(), start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise ValueError(f"study config line {lineno}: expected 'key = value'")
            key, _, val = line.partition("=")
            values[key.strip()] = val.strip()
        kwargs = {}
        for key, val in values.items():
            if key in ("study_id", "task", "function"):
                kwargs[key] = val
            elif key == "kinds":
                kwargs[key] = tuple(v.strip() for v in val.split(",") if v.strip())
            elif key in ("participants_per_kind", "n_training", "n_test",
                         "total_test_seconds", "comprehension_attempts", "seed"):
                kwargs[key] = int(val)
            elif key == "comprehension_pass_threshold":
                kwargs[key] = float(val)
            elif key == "time_pressure":
                kwargs[key] = val.lower() in ("1", "true", "yes", "on")
            else:
                raise ValueError(f"unknown study config key {key!r}")
        return cls(**kwargs)

    def to_text(self) -> str:
        return "\n".join([
            f"study_id = {self.study_id}",
            f"task = {self.task}",
            f"function = {self.function}",
            f"kinds = {','.join(self.kinds)}",
            f"participants_per_kind = {self.participants_per_kind}",
            f"n_training = {self.n_training}",
            f"n_test = {self.n_test}",
            f"time_pressure = {str(self.time_pressure).lower()}",
            f"total_test_seconds = {self.total_test_seconds}",
            f"comprehension_pass_threshold = {self.comprehension_pass_threshold:.17g}",
            f"comprehension_attempts = {self.comprehension_attempts}",
            f"seed = {self.seed}",
        ]) + "\n"


@dataclass(frozen=True)
class StudyContent:
    """Editable display copy.  Trait names map positionally onto features."""

    traits: tuple
    scenario: str
    consent: str
    instructions: str
    decision_labels: tuple            # index = answer value
    comprehension: tuple              # question dicts
    exit_survey: tuple                # question dicts

    @classmethod
    def default(cls, dimension: int, task: str) -> "StudyContent":
        traits = tuple(DEFAULT_TRAITS[:dimension])
        if task == "forbidden":
            decisions = ("Did not use the forbidden trait", "Used the forbidden trait")
            scenario = ("A doctor has been diagnosing aliens. One trait is off-limits. "
                        "Using the researcher's notes on how each trait mattered, decide "
                        "whether the doctor relied on the forbidden trait for each case.")
        else:
            decisions = ("Not healthy", "Healthy")
            scenario = ("You are diagnosing aliens from their measured traits. "
                        "An alien researcher left advice on how each trait affects "
                        "health. Decide whether each alien is healthy.")
        comprehension = (
            {
                "id": "biggest-effect",
                "kind": "biggest_effect",
                "text": ("According to the researcher, which measurement would have "
                         "the biggest effect on the outcome?"),
            },
            {
                "id": "advice-sign",
                "kind": "static",
                "text": "A negative advice value means the trait pushes the outcome toward...",
                "options": ("the 0 answer", "the 1 answer"),
                "answer": "the 0 answer",
            },
        )
        survey = (
            {"id": "strategy", "kind": "text", "text": "Briefly describe your strategy."},
            {"id": "confidence", "kind": "likert", "text": "How confident were you?",
             "scale": 5},
        )
        return cls(traits=traits, scenario=scenario,
                   consent="You are joining a short decision study. Your responses "
                           "are recorded anonymously. Continue to take part.",
                   instructions="Each case shows measurements and the researcher's "
                                "advice. Larger advice magnitudes matter more; the sign "
                                "gives the direction. Answer every case.",
                   decision_labels=decisions,
                   comprehension=comprehension, exit_survey=survey)

    @classmethod
    def from_file(cls, path: str | Path, dimension: int, task: str) -> "StudyContent":
        data = json.loads(Path(path).read_text())
        base = cls.default(dimension, task)
        return cls(
            traits=tuple(data.get("traits", base.traits)),
            scenario=data.get("scenario", base.scenario),
            consent=data.get("consent", base.consent),
            instructions=data.get("instructions", base.instructions),
            decision_labels=tuple(data.get("decision_labels", base.decision_labels)),
            comprehension=tuple(data.get("comprehension", base.comprehension)),
            exit_survey=tuple(data.get("exit_survey", base.exit_survey)),
        )
