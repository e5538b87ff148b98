"""HTTP+JSON study server.

Phase flow per session: consent -> instructions -> comprehension (graded,
with limited retries) -> training (answers shown) -> timed test -> exit
survey -> done.  Every accepted mutation is durably appended to the record
log before the response is acknowledged; restarting the server replays the
log and continues where it left off.

Endpoints:
    POST /studies/{study_id}/sessions
    GET  /sessions/{session_id}/phase
    POST /sessions/{session_id}/comprehension
    POST /sessions/{session_id}/responses
    POST /sessions/{session_id}/advance
    GET  /studies/{study_id}/export
"""
from __future__ import annotations

import io
import os
import secrets
import threading
from pathlib import Path

from fastapi import FastAPI, HTTPException
from fastapi.responses import PlainTextResponse

from ..core import RngStream
from ..stimuli import StimulusSet, read_stimulus_file
from .config import StudyConfig, StudyContent
from .log import RecordLog
from .state import Phase, StudyState, now_ms

__all__ = ["StudyService", "create_app", "create_app_from_objects"]


class StudyService:
    """All study operations behind one lock; the HTTP layer stays thin."""

    def __init__(self, config: StudyConfig, content: StudyContent,
                 stimuli: StimulusSet, log: RecordLog, clock=now_ms):
        self.config = config
        self.content = content
        self.stimuli = stimuli
        self.log = log
        self.clock = clock
        self.state = StudyState(config)
        self._lock = threading.RLock()
        self._assign_rng = RngStream(config.seed, f"assign/{config.study_id}")
        self._items_by_kind = {}
        for kind in config.kinds:
            training = sorted(stimuli.for_kind(kind, "training"), key=lambda it: it.item_id)
            test = sorted(stimuli.for_kind(kind, "test"), key=lambda it: it.item_id)
            if len(training) != config.n_training or len(test) != config.n_test:
                raise ValueError(
                    f"stimulus file provides {len(training)} training / {len(test)} test "
                    f"items for kind {kind}, study expects "
                    f"{config.n_training}/{config.n_test}")
            self._items_by_kind[kind] = {
                "training": training,
                "test": {it.item_id: it for it in test},
                "test_ids": [it.item_id for it in test],
            }
        for record in self.log.replay():
            self.state.apply(record)

    # ---- helpers ----

    def _append(self, record: dict) -> None:
        """Durable append, then fold into memory; callers respond only after
        this returns."""
        self.log.append(record)
        self.state.apply(record)

    def _session(self, session_id: str):
        s = self.state.sessions.get(session_id)
        if s is None:
            raise HTTPException(status_code=404, detail="unknown session")
        return s

    def _advance_record(self, session_id: str, phase: Phase) -> dict:
        return {"type": "phase_advanced", "session_id": session_id,
                "phase": phase.value, "ts": self.clock()}

    def _item_payload(self, item, index: int, total: int, with_answer: bool) -> dict:
        traits = self.content.traits
        payload = {
            "item_id": item.item_id,
            "index": index,
            "total": total,
            "measurements": [
                {"trait": traits[i], "value": v} for i, v in enumerate(item.inputs)],
            "advice": [
                {"trait": traits[i], "value": v} for i, v in enumerate(item.weights)
            ] + [{"trait": "baseline", "value": item.intercept}],
            "decision_labels": list(self.content.decision_labels),
        }
        if self.config.task == "forbidden":
            payload["prediction"] = item.prediction
        if with_answer:
            payload["correct_answer"] = item.label
        return payload

    def _comprehension_questions(self, session) -> list:
        """Question payloads; the biggest-effect question is asked about the
        session's first training case, whose advice ships with the question."""
        first = self._items_by_kind[session.kind]["training"][0]
        questions = []
        for q in self.content.comprehension:
            entry = {"id": q["id"], "text": q["text"]}
            if q["kind"] == "biggest_effect":
                entry["options"] = list(self.content.traits[:len(first.weights)])
                entry["advice"] = [
                    {"trait": self.content.traits[i], "value": v}
                    for i, v in enumerate(first.weights)]
            else:
                entry["options"] = list(q["options"])
            questions.append(entry)
        return questions

    def _comprehension_key(self, session) -> dict:
        first = self._items_by_kind[session.kind]["training"][0]
        key = {}
        for q in self.content.comprehension:
            if q["kind"] == "biggest_effect":
                weights = list(first.weights)
                best = max(range(len(weights)), key=lambda i: (abs(weights[i]), -i))
                key[q["id"]] = self.content.traits[best]
            else:
                key[q["id"]] = q["answer"]
        return key

    # ---- operations ----

    def create_session(self, study_id: str) -> dict:
        if study_id != self.config.study_id:
            raise HTTPException(status_code=404, detail="unknown study")
        with self._lock:
            if self.state.cohort_full():
                raise HTTPException(status_code=409, detail="study closed")
            kind_probe = self.state.pick_kind(self._assign_rng.substream(
                f"pick/{len(self.state.sessions)}"))
            record = {
                "type": "session_created",
                "session_id": secrets.token_hex(16),
                "kind": kind_probe,
                "test_order": self._test_order_for_new_session(),
                "ts": self.clock(),
            }
            self._append(record)
            return {"session_id": record["session_id"], "phase": Phase.CONSENT.value}

    def _test_order_for_new_session(self) -> list:
        kind_ids = self._items_by_kind[self.config.kinds[0]]["test_ids"]
        order_rng = self._assign_rng.substream(f"order/{len(self.state.sessions)}")
        perm = order_rng.generator.permutation(len(kind_ids))
        return [kind_ids[i] for i in perm]

    def phase_payload(self, session_id: str) -> dict:
        with self._lock:
            s = self._session(session_id)
            payload = {"phase": s.phase.value, "kind": s.kind,
                       "screened_out": s.screened_out}
            if s.screened_out:
                payload["detail"] = "screened out during comprehension"
                return payload
            items = self._items_by_kind[s.kind]
            if s.phase is Phase.CONSENT:
                payload["consent"] = self.content.consent
            elif s.phase is Phase.INSTRUCTIONS:
                payload["scenario"] = self.content.scenario
                payload["instructions"] = self.content.instructions
                payload["traits"] = list(self.content.traits)
            elif s.phase is Phase.COMPREHENSION:
                payload["questions"] = self._comprehension_questions(s)
                payload["attempts_used"] = s.comprehension_attempts
                payload["attempts_allowed"] = self.config.comprehension_attempts
            elif s.phase is Phase.TRAINING:
                item = items["training"][s.training_cursor]
                payload["item"] = self._item_payload(
                    item, s.training_cursor, self.config.n_training, with_answer=True)
            elif s.phase is Phase.TEST:
                item_id = s.test_order[s.test_cursor]
                item = items["test"][item_id]
                payload["item"] = self._item_payload(
                    item, s.test_cursor, self.config.n_test, with_answer=False)
                if self.config.time_pressure:
                    elapsed = (self.clock() - s.test_started_ms) / 1000.0
                    payload["timer"] = {
                        "total_seconds": self.config.total_test_seconds,
                        "remaining_seconds": max(
                            0.0, self.config.total_test_seconds - elapsed),
                        "recommended_seconds": self.config.recommended_seconds,
                    }
            elif s.phase is Phase.EXIT_SURVEY:
                payload["questions"] = [dict(q) for q in self.content.exit_survey]
            else:
                payload["summary"] = {
                    "responses": len(s.responses),
                    "test_items": self.config.n_test,
                }
            return payload

    def advance(self, session_id: str, body: dict | None = None) -> dict:
        with self._lock:
            s = self._session(session_id)
            if s.screened_out:
                raise HTTPException(status_code=409, detail="session screened out")
            if s.phase is Phase.CONSENT:
                self._append(self._advance_record(session_id, Phase.INSTRUCTIONS))
            elif s.phase is Phase.INSTRUCTIONS:
                self._append(self._advance_record(session_id, Phase.COMPREHENSION))
            elif s.phase is Phase.EXIT_SURVEY:
                self._append({"type": "survey_recorded", "session_id": session_id,
                              "payload": (body or {}).get("survey", {}),
                              "ts": self.clock()})
                self._append(self._advance_record(session_id, Phase.DONE))
            else:
                raise HTTPException(
                    status_code=409,
                    detail=f"cannot advance out of phase {s.phase.value} directly")
            return {"phase": self.state.sessions[session_id].phase.value}

    def submit_comprehension(self, session_id: str, answers: dict) -> dict:
        with self._lock:
            s = self._session(session_id)
            if s.screened_out:
                raise HTTPException(status_code=409, detail="session screened out")
            if s.phase is not Phase.COMPREHENSION:
                raise HTTPException(status_code=409, detail="not in the comprehension phase")
            key = self._comprehension_key(s)
            correctness = {qid: answers.get(qid) == expected
                           for qid, expected in key.items()}
            n_right = sum(correctness.values())
            passed = n_right >= self.config.comprehension_pass_threshold * len(key)
            self._append({"type": "comprehension_submitted", "session_id": session_id,
                          "answers": answers, "correct": correctness,
                          "passed": passed, "ts": self.clock()})
            if passed:
                self._append(self._advance_record(session_id, Phase.TRAINING))
                return {"passed": True, "phase": Phase.TRAINING.value,
                        "correct": correctness}
            s = self.state.sessions[session_id]
            if s.comprehension_attempts >= self.config.comprehension_attempts:
                self._append({"type": "session_screened", "session_id": session_id,
                              "ts": self.clock()})
                return {"passed": False, "screened_out": True, "correct": correctness}
            return {"passed": False, "screened_out": False, "correct": correctness,
                    "attempts_used": s.comprehension_attempts,
                    "attempts_allowed": self.config.comprehension_attempts}

    def submit_response(self, session_id: str, item_id: str, answer: int,
                        elapsed_ms: int) -> dict:
        if answer not in (0, 1):
            raise HTTPException(status_code=422, detail="answer must be 0 or 1")
        with self._lock:
            s = self._session(session_id)
            if s.screened_out:
                raise HTTPException(status_code=409, detail="session screened out")
            if s.phase is Phase.TRAINING:
                expected = self._items_by_kind[s.kind]["training"][s.training_cursor].item_id
            elif s.phase is Phase.TEST:
                expected = s.test_order[s.test_cursor]
            else:
                raise HTTPException(status_code=409,
                                    detail=f"no responses accepted in phase {s.phase.value}")
            if item_id in s.responses:
                raise HTTPException(status_code=409, detail="item already answered")
            if item_id != expected:
                raise HTTPException(status_code=422,
                                    detail=f"expected item {expected}, got {item_id}")
            self._append({"type": "response_recorded", "session_id": session_id,
                          "item_id": item_id, "phase": s.phase.value,
                          "answer": int(answer), "elapsed_ms": int(elapsed_ms),
                          "ts": self.clock()})
            s = self.state.sessions[session_id]
            if s.phase is Phase.TRAINING and s.training_cursor >= self.config.n_training:
                self._append(self._advance_record(session_id, Phase.TEST))
            elif s.phase is Phase.TEST and s.test_cursor >= self.config.n_test:
                self._append(self._advance_record(session_id, Phase.EXIT_SURVEY))
            return {"accepted": True,
                    "phase": self.state.sessions[session_id].phase.value}

    def export_csv(self, study_id: str, include_screened: bool = False) -> str:
        if study_id != self.config.study_id:
            raise HTTPException(status_code=404, detail="unknown study")
        with self._lock:
            out = io.StringIO()
            out.write("session_id,kind,item_id,category,answer,correct,"
                      "elapsed_ms,timestamp_ms\n")
            for sid in sorted(self.state.sessions):
                s = self.state.sessions[sid]
                if s.screened_out and not include_screened:
                    continue
                items = self._items_by_kind[s.kind]["test"]
                for item_id in s.test_order:
                    r = s.responses.get(item_id)
                    if r is None or r["phase"] != Phase.TEST.value:
                        continue
                    item = items[item_id]
                    correct = int(r["answer"] == item.label)
                    out.write(f"{sid},{s.kind},{item_id},{item.category},"
                              f"{r['answer']},{correct},{r['elapsed_ms']},{r['ts']}\n")
            return out.getvalue()


def create_app_from_objects(config: StudyConfig, content: StudyContent,
                            stimuli: StimulusSet, data_dir: str | Path,
                            clock=now_ms) -> FastAPI:
    log = RecordLog(Path(data_dir) / "records.jsonl")
    service = StudyService(config, content, stimuli, log, clock=clock)
    app = FastAPI(title="expsim study server")
    app.state.service = service

    @app.post("/studies/{study_id}/sessions", status_code=201)
    def create_session(study_id: str):
        return service.create_session(study_id)

    @app.get("/sessions/{session_id}/phase")
    def phase(session_id: str):
        return service.phase_payload(session_id)

    @app.post("/sessions/{session_id}/comprehension")
    def comprehension(session_id: str, body: dict):
        return service.submit_comprehension(session_id, body.get("answers", {}))

    @app.post("/sessions/{session_id}/responses")
    def responses(session_id: str, body: dict):
        missing = [k for k in ("item_id", "answer", "elapsed_ms") if k not in body]
        if missing:
            raise HTTPException(status_code=422, detail=f"missing fields: {missing}")
        return service.submit_response(session_id, body["item_id"],
                                       body["answer"], body["elapsed_ms"])

    @app.post("/sessions/{session_id}/advance")
    def advance(session_id: str, body: dict | None = None):
        return service.advance(session_id, body)

    @app.get("/studies/{study_id}/export")
    def export(study_id: str, include_screened: bool = False):
        return PlainTextResponse(service.export_csv(study_id, include_screened),
                                 media_type="text/csv")

    return app


def create_app(study_dir: str | Path) -> FastAPI:
    """Build the app from a study directory: study.txt, stimuli.tsv, and an
    optional content.json.  Records go to $EXPSIM_STUDY_DATA or the study
    directory itself."""
    study_dir = Path(study_dir)
    config = StudyConfig.from_text((study_dir / "study.txt").read_text())
    stimuli = read_stimulus_file(study_dir / "stimuli.tsv")
    dimension = len(stimuli.items[0].inputs)
    content_path = study_dir / "content.json"
    if content_path.exists():
        content = StudyContent.from_file(content_path, dimension, config.task)
    else:
        content = StudyContent.default(dimension, config.task)
    data_dir = Path(os.environ.get("EXPSIM_STUDY_DATA", study_dir))
    return create_app_from_objects(config, content, stimuli, data_dir)
