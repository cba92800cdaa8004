import json

import pytest

from conftest import FIXTURES, make_post
from wildfire_triage import taxonomy
from wildfire_triage.evaluation import UNPARSEABLE
from wildfire_triage.zeroshot import (BACKENDS, PromptPair,
                                      RecordedResponseClient, TransportError,
                                      VlmSettings, build_prompt,
                                      classify_zeroshot, parse_response,
                                      save_response_log)


class TestBuildPrompt:
    def test_matches_golden_file(self):
        golden = (FIXTURES / "prompt_golden.txt").read_text(encoding="utf-8")
        system, user = golden.split("\n---\n")
        prompt = build_prompt()
        assert prompt.system == system
        assert prompt.user == user.rstrip("\n")

    def test_key_phrases(self):
        prompt = build_prompt()
        assert "A. Evacuees (information relating to evacuees" in prompt.user
        assert "created during a natural disaster event" in prompt.system
        assert prompt.user.endswith("You may only answer with the chosen option's letter.")

    def test_options_in_canonical_order(self):
        lines = build_prompt().user.split("\n")[1:-1]
        assert len(lines) == 13
        for line, label in zip(lines, taxonomy.canonical_order()):
            assert line.startswith(f"{label.letter}. ")

    def test_pure(self):
        assert build_prompt() == build_prompt()


class TestParseResponse:
    def test_plain_letter(self):
        assert parse_response("B").name == "General Information"

    def test_whitespace_and_punctuation(self):
        assert parse_response(" m.\n").name == "Other"
        assert parse_response("A)").name == "Evacuees"
        assert parse_response("'K'").name == "Smoke and Air Quality"

    def test_sentences_are_unparseable(self):
        assert parse_response("I think it's smoke") == UNPARSEABLE
        assert parse_response("The answer is B.") == UNPARSEABLE
        assert parse_response("") == UNPARSEABLE

    def test_letters_outside_range_unparseable(self):
        assert parse_response("N") == UNPARSEABLE
        assert parse_response("Z.") == UNPARSEABLE

    def test_round_trip_all_thirteen_letters(self):
        for label in taxonomy.canonical_order():
            assert parse_response(label.letter) == label
            assert parse_response(label.letter.lower()) == label


class TestClassifyZeroshot:
    def test_empty_input(self):
        results = classify_zeroshot([], RecordedResponseClient({}))
        assert results == []

    def test_recorded_fixture_run(self):
        posts = [make_post(f"z{i}") for i in range(5)]
        client = RecordedResponseClient({f"z{i}": letter
                                         for i, letter in enumerate("ABCDE")})
        results = classify_zeroshot(posts, client)
        assert [r.label.letter for r in results] == list("ABCDE")
        assert [r.post_id for r in results] == [p.id for p in posts]

    def test_malformed_response_counted_unparseable(self):
        posts = [make_post(f"z{i}") for i in range(5)]
        responses = {f"z{i}": letter for i, letter in enumerate("ABCD")}
        responses["z4"] = "no idea, sorry"
        results = classify_zeroshot(posts, RecordedResponseClient(responses))
        labels = [r.label for r in results]
        assert labels[:4] == [taxonomy.label_from_letter(l) for l in "ABCD"]
        assert labels[4] == UNPARSEABLE

    def test_transport_failure_retried_then_recorded(self):
        posts = [make_post("z0"), make_post("z1")]

        class FlakyClient:
            def __init__(self):
                self.calls = 0

            def classify(self, post, prompt, settings):
                if post.id == "z0":
                    self.calls += 1
                    if self.calls < 3:
                        raise TransportError("down")
                    return "A"
                raise TransportError("always down")

        results = classify_zeroshot(posts, FlakyClient(), max_retries=2)
        assert results[0].label.letter == "A"
        assert results[0].retries == 2
        assert results[1].label == UNPARSEABLE
        assert results[1].error is not None

    def test_output_length_always_matches_input(self):
        posts = [make_post(f"z{i}") for i in range(7)]
        client = RecordedResponseClient({})  # nothing recorded: all transport errors
        results = classify_zeroshot(posts, client)
        assert len(results) == len(posts)

    def test_settings_defaults(self):
        settings = VlmSettings()
        assert settings.temperature == 0.1
        assert settings.num_beams == 1
        assert settings.max_new_tokens == 1024

    def test_shipped_fixture_against_expected(self):
        from wildfire_triage.corpus import load_posts
        posts = load_posts(FIXTURES / "posts_50.jsonl").posts
        client = RecordedResponseClient.from_file(
            FIXTURES / "zeroshot_responses_50.jsonl")
        expected = json.loads((FIXTURES / "zeroshot_expected_50.json").read_text())
        results = classify_zeroshot(posts, client)
        got = [r.label.letter if r.label != UNPARSEABLE else UNPARSEABLE
               for r in results]
        assert got == expected
        assert got.count(UNPARSEABLE) == 5

    def test_response_log_format(self, tmp_path):
        posts = [make_post("z0")]
        results = classify_zeroshot(posts, RecordedResponseClient({"z0": "  C.  "}))
        path = tmp_path / "log.jsonl"
        save_response_log(results, path)
        rec = json.loads(path.read_text().strip())
        assert rec == {"post_id": "z0", "raw": "  C.  ", "parsed_letter": "C"}


def test_backend_adapters_declared():
    assert set(BACKENDS) == {"gpt-4o-mini", "llava-v1.5-13b", "qwen2.5-vl-7b",
                             "smolvlm-2b"}
    assert BACKENDS["gpt-4o-mini"].auth_env == "OPENAI_API_KEY"
