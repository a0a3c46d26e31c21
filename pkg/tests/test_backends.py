"""Scripted and synthetic backend tests, plus answer-marker detection."""

from __future__ import annotations

import json

import pytest

from helpers import A30, P11, UNIFORM4, make_step, synthetic_schedule
from entroduction.backends import (
    BackendError,
    FinishReason,
    GenerationRequest,
    ScriptedBackend,
    StepGeneration,
    SyntheticBackend,
    SyntheticStep,
    detect_answer_marker,
    dump_fixture,
    load_fixture,
    logits_for_normalized_entropy,
)
from entroduction.backends.scripted import step_to_json
from entroduction.metrics import TokenRecord, compute_step_metrics


def request(prior=()) -> GenerationRequest:
    return GenerationRequest(system_prompt="sys", task="q", prior_steps=tuple(prior))


class TestDetectAnswerMarker:
    def test_default_pattern(self):
        assert detect_answer_marker("So the answer is 42.") == "42."

    def test_no_marker(self):
        assert detect_answer_marker("We should consider both cases.") is None

    def test_configured_pattern(self):
        assert detect_answer_marker("Answer: (B)", marker="Answer:") == "(B)"

    def test_case_insensitive_last_occurrence(self):
        text = "The Answer Is maybe. THE ANSWER IS 7"
        assert detect_answer_marker(text) == "7"

    def test_marker_without_remainder(self):
        assert detect_answer_marker("the answer is") is None


class TestScriptedBackend:
    def test_playback_order_and_identity(self, tmp_path):
        steps = [
            make_step("first step", UNIFORM4),
            make_step("The answer is 9", A30, FinishReason.ANSWER_MARKER),
        ]
        path = tmp_path / "fixture.jsonl"
        dump_fixture(steps, path)
        backend = ScriptedBackend.from_jsonl(path)
        replayed = [backend.generate_step(request()) for _ in range(2)]
        assert replayed == steps
        assert [json.dumps(step_to_json(s)) for s in replayed] == [
            json.dumps(step_to_json(s)) for s in steps
        ]

    def test_two_loads_byte_identical(self, tmp_path):
        steps = [make_step("alpha beta", P11)]
        path = tmp_path / "fixture.jsonl"
        dump_fixture(steps, path)
        first = path.read_bytes()
        dump_fixture(load_fixture(path), path)
        assert path.read_bytes() == first

    def test_exhaustion(self, tmp_path):
        backend = ScriptedBackend([make_step("only", UNIFORM4)])
        backend.generate_step(request())
        with pytest.raises(BackendError, match="exhausted"):
            backend.generate_step(request())

    def test_alternatives_roundtrip(self, tmp_path):
        token = TokenRecord(
            "x", -0.2, top_alternatives=(("x", -0.2), ("y", -1.7))
        )
        step = StepGeneration("x", (token,), FinishReason.STOP_SEQUENCE)
        path = tmp_path / "f.jsonl"
        dump_fixture([step], path)
        loaded = load_fixture(path)[0]
        assert loaded.tokens[0].top_alternatives == (("x", -0.2), ("y", -1.7))

    def test_bad_fixture_line(self, tmp_path):
        path = tmp_path / "bad.jsonl"
        path.write_text('{"text": "x"}\n', encoding="utf-8")
        with pytest.raises(BackendError, match="bad fixture line 1"):
            load_fixture(path)

    def test_reset(self):
        steps = [make_step("s1", UNIFORM4), make_step("s2", UNIFORM4)]
        backend = ScriptedBackend(steps)
        backend.generate_step(request())
        backend.reset()
        assert backend.generate_step(request()) == steps[0]


class TestSyntheticBackend:
    def test_entropy_targets_hit(self):
        targets = [0.9, 0.55, 0.2]
        backend = SyntheticBackend(
            [SyntheticStep(target_normalized_entropy=t, n_tokens=12) for t in targets]
        )
        prior: tuple[str, ...] = ()
        for target in targets:
            step = backend.generate_step(request(prior))
            metrics = compute_step_metrics(step.tokens)
            assert metrics.normalized_entropy == pytest.approx(target, abs=1e-6)
            prior = prior + (step.text,)

    def test_monotone_schedule_realized(self):
        targets = [0.95, 0.8, 0.6, 0.4, 0.15]
        backend = SyntheticBackend(
            [SyntheticStep(target_normalized_entropy=t) for t in targets]
        )
        prior: tuple[str, ...] = ()
        observed = []
        for _ in targets:
            step = backend.generate_step(request(prior))
            observed.append(compute_step_metrics(step.tokens).normalized_entropy)
            prior = prior + (step.text,)
        assert all(a > b for a, b in zip(observed, observed[1:]))

    def test_explicit_logprob_entries(self):
        backend = SyntheticBackend(synthetic_schedule([UNIFORM4, A30]))
        first = backend.generate_step(request())
        second = backend.generate_step(request(("s1",)))
        m1 = compute_step_metrics(first.tokens)
        m2 = compute_step_metrics(second.tokens)
        assert m1.entropy_bits == pytest.approx(2.0, abs=1e-12)
        assert m2.entropy_bits < m1.entropy_bits

    def test_schedule_reuse_past_end(self):
        backend = SyntheticBackend(synthetic_schedule([UNIFORM4]))
        step = backend.generate_step(request(("a", "b", "c", "d")))
        assert compute_step_metrics(step.tokens).entropy_bits == pytest.approx(2.0, abs=1e-12)

    def test_token_texts_reconstruct_text(self):
        backend = SyntheticBackend(
            [SyntheticStep(logprobs=UNIFORM4, text="The answer is 4")]
        )
        step = backend.generate_step(request())
        assert "".join(t.text for t in step.tokens) == step.text
        assert step.finish_reason is FinishReason.ANSWER_MARKER
        assert detect_answer_marker(step.text) == "4"

    def test_keyed_by_depth_not_call_count(self):
        backend = SyntheticBackend(synthetic_schedule([UNIFORM4, A30, P11]))
        # Two calls with the same prior depth get the same entry.
        one = backend.generate_step(request(("x",)))
        two = backend.generate_step(request(("y",)))
        assert [t.chosen_logprob for t in one.tokens] == [
            t.chosen_logprob for t in two.tokens
        ]

    def test_bad_entry_rejected(self):
        with pytest.raises(ValueError):
            SyntheticStep()
        with pytest.raises(ValueError):
            SyntheticStep(logprobs=UNIFORM4, target_normalized_entropy=0.5)
        with pytest.raises(ValueError):
            SyntheticBackend([])


class TestLogitsForTarget:
    @pytest.mark.parametrize("target", [1.0, 0.9, 0.5, 0.21, 0.05])
    @pytest.mark.parametrize("n", [2, 5, 16])
    def test_targets(self, target, n):
        import math

        from entroduction.metrics import step_entropy, step_softmax

        logits = logits_for_normalized_entropy(target, n)
        realized = step_entropy(step_softmax(logits)) / math.log2(n)
        assert realized == pytest.approx(target, abs=1e-6)

    def test_invalid_targets(self):
        with pytest.raises(ValueError):
            logits_for_normalized_entropy(0.0, 4)
        with pytest.raises(ValueError):
            logits_for_normalized_entropy(1.2, 4)
        with pytest.raises(ValueError):
            logits_for_normalized_entropy(0.5, 1)


class TestGenerationRequest:
    def test_defaults(self):
        req = GenerationRequest(system_prompt="s", task="t")
        assert req.temperature == 0.7
        assert req.max_tokens == 128
        assert req.top_logprobs == 5

    def test_validation(self):
        with pytest.raises(ValueError):
            GenerationRequest(system_prompt="s", task="t", temperature=-1.0)
        with pytest.raises(ValueError):
            GenerationRequest(system_prompt="s", task="t", max_tokens=0)


class TestStepGenerationInvariant:
    def test_token_concat_must_match(self):
        tokens = (TokenRecord("ab", -0.5), TokenRecord("cd", -0.5))
        with pytest.raises(ValueError, match="concatenate"):
            StepGeneration("abXcd", tokens, FinishReason.STOP_SEQUENCE)

    def test_nonempty_text_requires_tokens(self):
        with pytest.raises(ValueError, match="tokens"):
            StepGeneration("abc", (), FinishReason.STOP_SEQUENCE)
