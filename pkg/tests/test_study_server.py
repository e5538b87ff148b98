import pytest
from fastapi.testclient import TestClient

from expsim.stimuli import StudySpec, build_study_stimuli
from expsim.study.config import StudyConfig, StudyContent
from expsim.study.log import RecordLog
from expsim.study.server import create_app_from_objects


@pytest.fixture(scope="module")
def stimuli():
    # small pool keeps generation quick; still 10 training + 30 test items
    return build_study_stimuli(StudySpec(function="box", task="forward",
                                         memory="limited", best_kind="sparse",
                                         per_category=10, pool_size=1000, seed=7))


def make_config(**overrides):
    base = dict(study_id="s1", task="forward", function="box",
                participants_per_kind=2, n_training=10, n_test=30,
                time_pressure=True, total_test_seconds=600, seed=5)
    base.update(overrides)
    return StudyConfig(**base)


@pytest.fixture()
def client(tmp_path, stimuli):
    config = make_config()
    content = StudyContent.default(3, "forward")
    app = create_app_from_objects(config, content, stimuli, tmp_path)
    return TestClient(app)


def comprehension_answers(payload):
    """Derive the correct answers from the served payload alone."""
    answers = {}
    for q in payload["questions"]:
        if "advice" in q:
            best = max(q["advice"], key=lambda a: abs(a["value"]))
            answers[q["id"]] = best["trait"]
        else:
            answers[q["id"]] = "the 0 answer"
    return answers


def walk_to_training(client, sid):
    client.post(f"/sessions/{sid}/advance")      # consent -> instructions
    client.post(f"/sessions/{sid}/advance")      # instructions -> comprehension
    payload = client.get(f"/sessions/{sid}/phase").json()
    answers = comprehension_answers(payload)
    r = client.post(f"/sessions/{sid}/comprehension", json={"answers": answers})
    assert r.json()["passed"], r.json()
    return r


def answer_current_items(client, sid, n):
    for _ in range(n):
        payload = client.get(f"/sessions/{sid}/phase").json()
        item = payload["item"]
        r = client.post(f"/sessions/{sid}/responses",
                        json={"item_id": item["item_id"], "answer": 1,
                              "elapsed_ms": 1500})
        assert r.status_code == 200, r.text


class TestSessionLifecycle:
    def test_full_session_flow(self, client):
        r = client.post("/studies/s1/sessions")
        assert r.status_code == 201
        sid = r.json()["session_id"]
        assert r.json()["phase"] == "consent"

        walk_to_training(client, sid)
        assert client.get(f"/sessions/{sid}/phase").json()["phase"] == "training"
        answer_current_items(client, sid, 10)
        payload = client.get(f"/sessions/{sid}/phase").json()
        assert payload["phase"] == "test"
        assert payload["timer"]["recommended_seconds"] == 20.0
        answer_current_items(client, sid, 30)
        assert client.get(f"/sessions/{sid}/phase").json()["phase"] == "exit_survey"
        client.post(f"/sessions/{sid}/advance", json={"survey": {"strategy": "advice"}})
        done = client.get(f"/sessions/{sid}/phase").json()
        assert done["phase"] == "done"
        assert done["summary"]["responses"] == 40

        export = client.get("/studies/s1/export").text
        rows = [line for line in export.splitlines()[1:] if line.startswith(sid)]
        assert len(rows) == 30

    def test_training_payload_has_answer_test_never(self, client):
        def keys_of(obj):
            if isinstance(obj, dict):
                for k, v in obj.items():
                    yield k
                    yield from keys_of(v)
            elif isinstance(obj, list):
                for v in obj:
                    yield from keys_of(v)

        sid = client.post("/studies/s1/sessions").json()["session_id"]
        walk_to_training(client, sid)
        training = client.get(f"/sessions/{sid}/phase").json()
        assert "correct_answer" in training["item"]
        answer_current_items(client, sid, 10)
        for _ in range(30):
            payload = client.get(f"/sessions/{sid}/phase").json()
            assert not {"correct_answer", "label"} & set(keys_of(payload))
            client.post(f"/sessions/{sid}/responses",
                        json={"item_id": payload["item"]["item_id"],
                              "answer": 0, "elapsed_ms": 10})

    def test_unknown_session_404(self, client):
        assert client.get("/sessions/nope/phase").status_code == 404

    def test_test_orders_differ_between_sessions(self, tmp_path, stimuli):
        config = make_config(participants_per_kind=8)
        app = create_app_from_objects(config, StudyContent.default(3, "forward"),
                                      stimuli, tmp_path)
        c = TestClient(app)
        service = app.state.service
        sids = [c.post("/studies/s1/sessions").json()["session_id"] for _ in range(6)]
        orders = {tuple(service.state.sessions[s].test_order) for s in sids}
        assert len(orders) > 1

    def test_test_order_permutations_look_uniform(self, tmp_path, stimuli):
        # 1000 simulated session orders: all distinct, and the first slot is
        # roughly uniform over the 30 items
        import numpy as np
        config = make_config(participants_per_kind=8)
        app = create_app_from_objects(config, StudyContent.default(3, "forward"),
                                      stimuli, tmp_path)
        service = app.state.service
        orders = []
        for i in range(1000):
            service.state.sessions[f"fake-{i}"] = None  # advance the order substream
            orders.append(tuple(service._test_order_for_new_session()))
        service.state.sessions.clear()
        assert len(set(orders)) == 1000
        firsts = np.array([o[0] for o in orders])
        _, counts = np.unique(firsts, return_counts=True)
        # expected 1000/30 = 33.3 per item; allow a generous band
        assert counts.min() > 10 and counts.max() < 70


class TestAssignmentBalance:
    def test_balanced_prefixes_and_cohort_close(self, tmp_path, stimuli):
        config = make_config(participants_per_kind=8)
        app = create_app_from_objects(config, StudyContent.default(3, "forward"),
                                      stimuli, tmp_path)
        c = TestClient(app)
        service = app.state.service
        for i in range(32):
            r = c.post("/studies/s1/sessions")
            assert r.status_code == 201
            load = service.state.kind_load()
            assert max(load.values()) - min(load.values()) <= 1, f"prefix {i + 1}"
        load = service.state.kind_load()
        assert all(v == 8 for v in load.values())
        assert c.post("/studies/s1/sessions").status_code == 409

    def test_first_cycle_covers_every_kind(self, tmp_path, stimuli):
        config = make_config(participants_per_kind=8)
        app = create_app_from_objects(config, StudyContent.default(3, "forward"),
                                      stimuli, tmp_path)
        c = TestClient(app)
        service = app.state.service
        for _ in range(4):
            c.post("/studies/s1/sessions")
        assert set(service.state.kind_load().values()) == {1}


class TestProtocolErrors:
    def test_duplicate_and_out_of_order(self, client, tmp_path):
        sid = client.post("/studies/s1/sessions").json()["session_id"]
        walk_to_training(client, sid)
        item = client.get(f"/sessions/{sid}/phase").json()["item"]
        ok = client.post(f"/sessions/{sid}/responses",
                         json={"item_id": item["item_id"], "answer": 1, "elapsed_ms": 5})
        assert ok.status_code == 200
        dup = client.post(f"/sessions/{sid}/responses",
                          json={"item_id": item["item_id"], "answer": 1, "elapsed_ms": 5})
        assert dup.status_code == 409
        wrong = client.post(f"/sessions/{sid}/responses",
                            json={"item_id": "test-27", "answer": 1, "elapsed_ms": 5})
        assert wrong.status_code == 422

    def test_responses_rejected_outside_item_phases(self, client):
        sid = client.post("/studies/s1/sessions").json()["session_id"]
        r = client.post(f"/sessions/{sid}/responses",
                        json={"item_id": "train-00", "answer": 1, "elapsed_ms": 5})
        assert r.status_code == 409

    def test_advance_cannot_skip_item_phases(self, client):
        sid = client.post("/studies/s1/sessions").json()["session_id"]
        walk_to_training(client, sid)
        assert client.post(f"/sessions/{sid}/advance").status_code == 409

    def test_bad_answer_rejected(self, client):
        sid = client.post("/studies/s1/sessions").json()["session_id"]
        walk_to_training(client, sid)
        item = client.get(f"/sessions/{sid}/phase").json()["item"]
        r = client.post(f"/sessions/{sid}/responses",
                        json={"item_id": item["item_id"], "answer": 5, "elapsed_ms": 5})
        assert r.status_code == 422


class TestComprehension:
    def test_retry_then_screen_out(self, tmp_path, stimuli):
        config = make_config(comprehension_attempts=2)
        app = create_app_from_objects(config, StudyContent.default(3, "forward"),
                                      stimuli, tmp_path)
        c = TestClient(app)
        sid = c.post("/studies/s1/sessions").json()["session_id"]
        c.post(f"/sessions/{sid}/advance")
        c.post(f"/sessions/{sid}/advance")
        wrong = {"biggest-effect": "definitely-wrong", "advice-sign": "the 1 answer"}
        first = c.post(f"/sessions/{sid}/comprehension", json={"answers": wrong}).json()
        assert first == {"passed": False, "screened_out": False,
                         "correct": {"biggest-effect": False, "advice-sign": False},
                         "attempts_used": 1, "attempts_allowed": 2}
        second = c.post(f"/sessions/{sid}/comprehension", json={"answers": wrong}).json()
        assert second["screened_out"] is True
        # screened sessions stop counting toward the cohort and refuse actions
        assert app.state.service.state.kind_load()[
            app.state.service.state.sessions[sid].kind] == 0
        assert c.post(f"/sessions/{sid}/comprehension",
                      json={"answers": wrong}).status_code == 409
        export = c.get("/studies/s1/export").text
        assert sid not in export
        export_all = c.get("/studies/s1/export", params={"include_screened": True}).text
        assert export_all.startswith("session_id")

    def test_wrong_phase_rejected(self, client):
        sid = client.post("/studies/s1/sessions").json()["session_id"]
        r = client.post(f"/sessions/{sid}/comprehension", json={"answers": {}})
        assert r.status_code == 409


class TestDurabilityAndReplay:
    def test_ack_only_after_durable_append(self, tmp_path, stimuli):
        config = make_config()
        log_path = tmp_path / "records.jsonl"
        app = create_app_from_objects(config, StudyContent.default(3, "forward"),
                                      stimuli, tmp_path)
        c = TestClient(app)
        sid = c.post("/studies/s1/sessions").json()["session_id"]
        n_before = len(list(RecordLog(log_path).replay()))
        walk_to_training(c, sid)
        item = c.get(f"/sessions/{sid}/phase").json()["item"]
        c.post(f"/sessions/{sid}/responses",
               json={"item_id": item["item_id"], "answer": 1, "elapsed_ms": 9})
        records = list(RecordLog(log_path).replay())
        assert len(records) > n_before
        assert records[-1]["type"] == "response_recorded"
        assert records[-1]["item_id"] == item["item_id"]
        # a rejected mutation leaves the log untouched
        n = len(records)
        c.post(f"/sessions/{sid}/responses",
               json={"item_id": item["item_id"], "answer": 1, "elapsed_ms": 9})
        assert len(list(RecordLog(log_path).replay())) == n

    def test_replay_reconstructs_sessions(self, tmp_path, stimuli):
        config = make_config()
        content = StudyContent.default(3, "forward")
        app = create_app_from_objects(config, content, stimuli, tmp_path)
        c = TestClient(app)
        sid = c.post("/studies/s1/sessions").json()["session_id"]
        walk_to_training(c, sid)
        answer_current_items(c, sid, 10)
        answer_current_items(c, sid, 3)
        before = c.get(f"/sessions/{sid}/phase").json()
        export_before = c.get("/studies/s1/export", params={"include_screened": True}).text

        # "restart": a fresh service over the same log
        app2 = create_app_from_objects(config, content, stimuli, tmp_path)
        c2 = TestClient(app2)
        after = c2.get(f"/sessions/{sid}/phase").json()
        assert after["phase"] == before["phase"] == "test"
        assert after["item"]["item_id"] == before["item"]["item_id"]
        assert c2.get("/studies/s1/export",
                      params={"include_screened": True}).text == export_before

    def test_replay_tolerates_torn_tail(self, tmp_path, stimuli):
        config = make_config()
        app = create_app_from_objects(config, StudyContent.default(3, "forward"),
                                      stimuli, tmp_path)
        c = TestClient(app)
        c.post("/studies/s1/sessions")
        log_path = tmp_path / "records.jsonl"
        with log_path.open("ab") as fh:
            fh.write(b'{"type": "response_rec')   # simulated crash mid-write
        app2 = create_app_from_objects(config, StudyContent.default(3, "forward"),
                                       stimuli, tmp_path)
        assert len(app2.state.service.state.sessions) == 1


class TestTimer:
    def test_no_timer_without_time_pressure(self, tmp_path, stimuli):
        config = make_config(time_pressure=False)
        app = create_app_from_objects(config, StudyContent.default(3, "forward"),
                                      stimuli, tmp_path)
        c = TestClient(app)
        sid = c.post("/studies/s1/sessions").json()["session_id"]
        walk_to_training(c, sid)
        answer_current_items(c, sid, 10)
        payload = c.get(f"/sessions/{sid}/phase").json()
        assert payload["phase"] == "test"
        assert "timer" not in payload

    def test_timer_counts_down_and_accepts_late_answers(self, tmp_path, stimuli):
        fake_now = [1_000_000]
        config = make_config(total_test_seconds=60)
        app = create_app_from_objects(config, StudyContent.default(3, "forward"),
                                      stimuli, tmp_path, clock=lambda: fake_now[0])
        c = TestClient(app)
        sid = c.post("/studies/s1/sessions").json()["session_id"]
        walk_to_training(c, sid)
        answer_current_items(c, sid, 10)
        payload = c.get(f"/sessions/{sid}/phase").json()
        assert payload["timer"]["remaining_seconds"] == 60.0
        assert payload["timer"]["recommended_seconds"] == 2.0
        fake_now[0] += 90_000      # blow way past the budget
        payload = c.get(f"/sessions/{sid}/phase").json()
        assert payload["timer"]["remaining_seconds"] == 0.0
        r = c.post(f"/sessions/{sid}/responses",
                   json={"item_id": payload["item"]["item_id"], "answer": 1,
                         "elapsed_ms": 90_000})
        assert r.status_code == 200   # soft deadline: late answers still count
