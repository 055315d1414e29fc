from __future__ import annotations

import json
import time

import pytest
from fastapi.testclient import TestClient

from markloop.fixtures import PHLOEM_ANSWER_TEXT, TEACHER_SUGGESTIONS
from markloop.service import AppConfig, create_app, seed_directory

TEACHER = {"Authorization": "Bearer token-t-ada"}
OTHER_TEACHER = {"Authorization": "Bearer token-t-bo"}
STUDENT = {"Authorization": "Bearer token-s-kim"}
STUDENT2 = {"Authorization": "Bearer token-s-lee"}
STUDENT3 = {"Authorization": "Bearer token-s-raj"}


@pytest.fixture
def env(tmp_path):
    config_path = seed_directory(tmp_path, corpus_n=3)
    config = AppConfig.from_file(config_path)
    apps = []

    def make_client() -> TestClient:
        app = create_app(AppConfig.from_file(config_path))
        apps.append(app)
        return TestClient(app)

    yield type("Env", (), {"config": config, "config_path": config_path,
                           "tmp_path": tmp_path, "make_client": staticmethod(make_client),
                           "apps": apps})
    for app in apps:
        app.state.service.close()


def submit_answer(client: TestClient, headers: dict, text: str = PHLOEM_ANSWER_TEXT,
                  **extra_headers) -> str:
    resp = client.post(
        "/api/quizzes/quiz-demo/answers",
        json={"question_id": "q-phloem", "text": text},
        headers={**headers, **extra_headers},
    )
    assert resp.status_code == 202, resp.text
    return resp.json()["answer_id"]


def wait_feedback(client: TestClient, headers: dict, answer_id: str,
                  timeout: float = 10.0) -> dict:
    deadline = time.monotonic() + timeout
    while time.monotonic() < deadline:
        resp = client.get(f"/api/answers/{answer_id}/feedback", headers=headers)
        assert resp.status_code == 200, resp.text
        body = resp.json()
        if body["status"] not in ("pending",):
            return body
        time.sleep(0.02)
    raise AssertionError("pipeline did not finish in time")


class TestAuth:
    def test_missing_token_is_401(self, env):
        client = env.make_client()
        assert client.get("/api/topics").status_code == 401

    def test_unknown_token_is_401(self, env):
        client = env.make_client()
        resp = client.get("/api/topics", headers={"Authorization": "Bearer nope"})
        assert resp.status_code == 401

    def test_me_reports_role_and_groups(self, env):
        client = env.make_client()
        body = client.get("/api/me", headers=STUDENT).json()
        assert body["role"] == "student"
        assert "g-demo" in body["groups"]


class TestSubmissionPipeline:
    def test_submit_then_poll_feedback(self, env):
        client = env.make_client()
        answer_id = submit_answer(client, STUDENT)
        body = wait_feedback(client, STUDENT, answer_id)
        assert body["status"] == "ready"
        feedback = body["feedback"]
        assert feedback["total_mark"] == 3
        assert [i["awarded_mark"] for i in feedback["items"]] == [0, 1, 0, 1, 1]
        assert feedback["verification"]["scores"] == {
            "accuracy": 5, "specificity": 5, "clarity": 4,
        }
        assert feedback["safety_passed"] is True
        assert len(feedback["provenance"]) == 1
        assert body["assessment"]["final_score"] == 3

    def test_assessment_endpoint(self, env):
        client = env.make_client()
        answer_id = submit_answer(client, STUDENT)
        wait_feedback(client, STUDENT, answer_id)
        body = client.get(f"/api/answers/{answer_id}/assessment",
                          headers=STUDENT).json()
        assert body["status"] == "ready"
        assert [c["matched"] for c in body["assessment"]["concepts"]] == \
               [False, True, False, True, True]

    def test_student_cannot_read_anothers_feedback(self, env):
        client = env.make_client()
        answer_id = submit_answer(client, STUDENT)
        wait_feedback(client, STUDENT, answer_id)
        resp = client.get(f"/api/answers/{answer_id}/feedback", headers=STUDENT2)
        assert resp.status_code == 403

    def test_teacher_of_group_can_read(self, env):
        client = env.make_client()
        answer_id = submit_answer(client, STUDENT)
        body = wait_feedback(client, TEACHER, answer_id)
        assert body["status"] in ("ready", "withheld")

    def test_empty_answer_rejected(self, env):
        client = env.make_client()
        resp = client.post(
            "/api/quizzes/quiz-demo/answers",
            json={"question_id": "q-phloem", "text": "   "},
            headers=STUDENT,
        )
        assert resp.status_code == 422

    def test_question_not_in_quiz_rejected(self, env):
        client = env.make_client()
        resp = client.post(
            "/api/quizzes/quiz-demo/answers",
            json={"question_id": "q-photo", "text": "answer"},
            headers=STUDENT,
        )
        assert resp.status_code == 422

    def test_unknown_quiz_404(self, env):
        client = env.make_client()
        resp = client.post(
            "/api/quizzes/ghost/answers",
            json={"question_id": "q-phloem", "text": "answer"},
            headers=STUDENT,
        )
        assert resp.status_code == 404

    def test_duplicate_submission_409(self, env):
        client = env.make_client()
        submit_answer(client, STUDENT)
        resp = client.post(
            "/api/quizzes/quiz-demo/answers",
            json={"question_id": "q-phloem", "text": PHLOEM_ANSWER_TEXT},
            headers=STUDENT,
        )
        assert resp.status_code == 409

    def test_idempotency_key_replays_same_answer(self, env):
        client = env.make_client()
        first = client.post(
            "/api/quizzes/quiz-demo/answers",
            json={"question_id": "q-phloem", "text": PHLOEM_ANSWER_TEXT},
            headers={**STUDENT, "Idempotency-Key": "abc-1"},
        )
        second = client.post(
            "/api/quizzes/quiz-demo/answers",
            json={"question_id": "q-phloem", "text": PHLOEM_ANSWER_TEXT},
            headers={**STUDENT, "Idempotency-Key": "abc-1"},
        )
        assert first.status_code == 202 and second.status_code == 202
        assert first.json()["answer_id"] == second.json()["answer_id"]
        assert second.json()["replayed"] is True

    def test_teacher_cannot_submit(self, env):
        client = env.make_client()
        resp = client.post(
            "/api/quizzes/quiz-demo/answers",
            json={"question_id": "q-phloem", "text": "answer"},
            headers=TEACHER,
        )
        assert resp.status_code == 403


class TestRevision:
    def test_single_revision_appends_version_with_parent(self, env):
        client = env.make_client()
        answer_id = submit_answer(client, STUDENT)
        original = wait_feedback(client, TEACHER, answer_id)["feedback"]
        resp = client.post(
            f"/api/feedback/{original['id']}/revise",
            json={"suggestion": TEACHER_SUGGESTIONS, "scope": "single"},
            headers=TEACHER,
        )
        assert resp.status_code == 200, resp.text
        (revised,) = resp.json()["revised"]
        assert revised["parent_version_id"] == original["id"]
        assert revised["origin"] == "teacher_revision"
        assert [i["awarded_mark"] for i in revised["items"]] == \
               [i["awarded_mark"] for i in original["items"]]
        assert revised["total_mark"] == original["total_mark"] == 3
        assert [i["comment"] for i in revised["items"]] != \
               [i["comment"] for i in original["items"]]
        history = client.get(f"/api/answers/{answer_id}/feedback/history",
                             headers=TEACHER).json()["versions"]
        assert [v["id"] for v in history] == [original["id"], revised["id"]]

    def test_student_cannot_revise(self, env):
        client = env.make_client()
        answer_id = submit_answer(client, STUDENT)
        original = wait_feedback(client, TEACHER, answer_id)["feedback"]
        resp = client.post(
            f"/api/feedback/{original['id']}/revise",
            json={"suggestion": "x", "scope": "single"},
            headers=STUDENT,
        )
        assert resp.status_code == 403

    def test_quiz_wide_revision_touches_every_answered_question(self, env):
        client = env.make_client()
        ids = [
            submit_answer(client, STUDENT),
            submit_answer(client, STUDENT2),
            submit_answer(client, STUDENT3),
        ]
        originals = {i: wait_feedback(client, TEACHER, i)["feedback"] for i in ids}
        resp = client.post(
            f"/api/feedback/{originals[ids[0]]['id']}/revise",
            json={"suggestion": TEACHER_SUGGESTIONS, "scope": "quiz_wide"},
            headers=TEACHER,
        )
        assert resp.status_code == 200, resp.text
        body = resp.json()
        assert len(body["revised"]) == 3
        assert body["failures"] == []
        revised_by_answer = {v["answer_id"]: v for v in body["revised"]}
        for answer_id in ids:
            assert revised_by_answer[answer_id]["parent_version_id"] == \
                   originals[answer_id]["id"]

    def test_empty_suggestion_rejected(self, env):
        client = env.make_client()
        answer_id = submit_answer(client, STUDENT)
        original = wait_feedback(client, TEACHER, answer_id)["feedback"]
        resp = client.post(
            f"/api/feedback/{original['id']}/revise",
            json={"suggestion": "   ", "scope": "single"},
            headers=TEACHER,
        )
        assert resp.status_code == 422

    def test_unknown_version_404(self, env):
        client = env.make_client()
        resp = client.post(
            "/api/feedback/ghost/revise",
            json={"suggestion": "x", "scope": "single"},
            headers=TEACHER,
        )
        assert resp.status_code == 404


class TestWithheldFeedback:
    @pytest.fixture
    def strict_env(self, tmp_path):
        config_path = seed_directory(tmp_path, corpus_n=3)
        script_path = tmp_path / "script.json"
        script = json.loads(script_path.read_text())
        script["rules"] = [
            {"contains": "TASK: safety-check", "response": "REJECT | sarcastic tone"},
            {"contains": "TASK: comment-rewrite", "response": "A gentler wording."},
        ] + script["rules"]
        script_path.write_text(json.dumps(script))
        app = create_app(AppConfig.from_file(config_path))
        yield TestClient(app)
        app.state.service.close()

    def test_student_sees_pending_review_teacher_sees_draft(self, strict_env):
        client = strict_env
        answer_id = submit_answer(client, STUDENT)
        teacher_view = wait_feedback(client, TEACHER, answer_id)
        assert teacher_view["status"] == "withheld"
        assert teacher_view["feedback"]["safety_passed"] is False
        assert teacher_view["feedback"]["safety_notes"]
        student_view = client.get(f"/api/answers/{answer_id}/feedback",
                                  headers=STUDENT).json()
        assert student_view["status"] == "pending_review"
        assert student_view["feedback"] is None

    def test_withheld_version_flagged_for_attention(self, strict_env):
        client = strict_env
        answer_id = submit_answer(client, STUDENT)
        wait_feedback(client, TEACHER, answer_id)
        flags = client.get("/api/groups/g-demo/attention", headers=TEACHER).json()["flags"]
        assert any(f["answer_id"] == answer_id and "withheld" in f["reason"]
                   for f in flags)


class TestAnalytics:
    def test_overview_cell_from_scored_answer(self, env):
        client = env.make_client()
        answer_id = submit_answer(client, STUDENT)
        wait_feedback(client, STUDENT, answer_id)
        body = client.get("/api/groups/g-demo/analytics/overview",
                          headers=TEACHER).json()
        (cell,) = body["cells"]
        assert cell["student_id"] == "s-kim"
        assert cell["topic_id"] == "bio-transport"
        assert cell["mean_normalised_score"] == pytest.approx(0.6)

    def test_non_member_teacher_denied(self, env):
        client = env.make_client()
        resp = client.get("/api/groups/g-demo/analytics/overview",
                          headers={"Authorization": "Bearer token-s-kim"})
        assert resp.status_code == 403

    def test_clean_run_not_flagged(self, env):
        client = env.make_client()
        answer_id = submit_answer(client, STUDENT)
        wait_feedback(client, STUDENT, answer_id)
        flags = client.get("/api/groups/g-demo/attention", headers=TEACHER).json()["flags"]
        assert flags == []

    def test_usage_summary_counts_calls(self, env):
        client = env.make_client()
        answer_id = submit_answer(client, STUDENT)
        wait_feedback(client, STUDENT, answer_id)
        usage = client.get("/api/usage", headers=TEACHER).json()
        assert usage["count"] > 0
        assert usage["total_cost"] > 0
        assert "assessor_judge" in usage["per_role"]


class TestAuthoringFlow:
    def test_generated_question_requires_approval_for_quiz(self, env):
        client = env.make_client()
        script_path = env.tmp_path / "script.json"
        script = json.loads(script_path.read_text())
        script["rules"] = [
            {"contains": "TASK: question-author",
             "response": "QUESTION: Explain diffusion in the lungs. | MARKS: 3"},
            {"contains": "TASK: scheme-author",
             "response": "1: names diffusion\n1: high to low concentration\n1: across the alveoli"},
        ] + script["rules"]
        script_path.write_text(json.dumps(script))
        client = env.make_client()

        created = client.post(
            "/api/questions",
            json={"topic_id": "bio-transport", "mode": "generated",
                  "requirements": "foundation tier"},
            headers=TEACHER,
        ).json()
        assert created["needs_approval"] is True
        question_id = created["question"]["id"]

        scheme_resp = client.post(f"/api/questions/{question_id}/mark-scheme",
                                  headers=TEACHER).json()
        assert scheme_resp["needs_approval"] is True
        assert scheme_resp["grounding_missing"] is False

        denied = client.post(
            "/api/quizzes",
            json={"group_id": "g-demo", "question_ids": [question_id]},
            headers=TEACHER,
        )
        assert denied.status_code == 422

        client.post(f"/api/questions/{question_id}/approve", headers=TEACHER)
        still_denied = client.post(
            "/api/quizzes",
            json={"group_id": "g-demo", "question_ids": [question_id]},
            headers=TEACHER,
        )
        assert still_denied.status_code == 422

        client.post(f"/api/questions/{question_id}/mark-scheme/approve",
                    headers=TEACHER)
        allowed = client.post(
            "/api/quizzes",
            json={"group_id": "g-demo", "question_ids": [question_id]},
            headers=TEACHER,
        )
        assert allowed.status_code == 201

    def test_bank_question_listing(self, env):
        client = env.make_client()
        bank = client.get("/api/topics/bio-transport/bank", headers=TEACHER).json()
        assert [q["id"] for q in bank] == ["q-phloem"]

    def test_student_cannot_author(self, env):
        client = env.make_client()
        resp = client.post(
            "/api/questions",
            json={"topic_id": "bio-photo", "mode": "custom",
                  "text": "Why?", "max_marks": 2},
            headers=STUDENT,
        )
        assert resp.status_code == 403

    def test_group_creation_and_membership(self, env):
        client = env.make_client()
        created = client.post(
            "/api/groups",
            json={"subject": "chemistry", "year_level": 11,
                  "teacher_ids": ["t-ada"], "student_ids": ["s-lee"]},
            headers=TEACHER,
        )
        assert created.status_code == 201
        group_id = created.json()["id"]
        updated = client.put(
            f"/api/groups/{group_id}/membership",
            json={"student_ids": ["s-lee", "s-raj"]},
            headers=TEACHER,
        )
        assert sorted(updated.json()["student_ids"]) == ["s-lee", "s-raj"]
        denied = client.put(
            f"/api/groups/{group_id}/membership",
            json={"student_ids": []},
            headers=OTHER_TEACHER,
        )
        assert denied.status_code == 403


class TestDurability:
    def test_entities_survive_restart(self, env):
        client = env.make_client()
        answer_id = submit_answer(client, STUDENT)
        before = wait_feedback(client, TEACHER, answer_id)
        group_before = client.get("/api/groups/g-demo", headers=TEACHER).json()

        client2 = env.make_client()  # fresh app over the same database file
        after = client2.get(f"/api/answers/{answer_id}/feedback",
                            headers=TEACHER).json()
        assert after["feedback"] == before["feedback"]
        assert client2.get("/api/groups/g-demo", headers=TEACHER).json() == group_before

    def test_memory_nodes_reload_on_restart(self, env):
        client = env.make_client()
        answer_id = submit_answer(client, STUDENT)
        wait_feedback(client, STUDENT, answer_id)
        first = env.apps[-1].state.service
        count_before = len(first.runtime.concept_store)
        assert count_before > 0

        env.make_client()
        second = env.apps[-1].state.service
        assert len(second.runtime.concept_store) == count_before
        assert second.runtime.concept_store.export_lines() == \
               first.runtime.concept_store.export_lines()

    def test_concurrent_revisions_form_linear_chain(self, env):
        import threading

        client = env.make_client()
        answer_id = submit_answer(client, STUDENT)
        original = wait_feedback(client, TEACHER, answer_id)["feedback"]

        results = []

        def revise(tag: str) -> None:
            resp = client.post(
                f"/api/feedback/{original['id']}/revise",
                json={"suggestion": f"be clearer ({tag})", "scope": "single"},
                headers=TEACHER,
            )
            results.append(resp.status_code)

        threads = [threading.Thread(target=revise, args=(t,)) for t in ("a", "b")]
        for t in threads:
            t.start()
        for t in threads:
            t.join()
        assert results == [200, 200]

        history = client.get(f"/api/answers/{answer_id}/feedback/history",
                             headers=TEACHER).json()["versions"]
        assert len(history) == 3
        # Linear chain: each version's parent is exactly the previous one.
        assert history[0]["parent_version_id"] is None
        assert history[1]["parent_version_id"] == history[0]["id"]
        assert history[2]["parent_version_id"] == history[1]["id"]
