import json

import httpx
import pytest

from chromactl.errors import BackendUnavailable, NoColorFound
from chromactl.pumpcode import check_program, parse_program, render_program
from chromactl.pumps import flow_rate
from chromactl.request import normalize_request, parse_request
from chromactl.planner import plan_mix
from chromactl.translate import (
    LlmBackend,
    RuleBasedBackend,
    generate_dataset,
    write_dataset,
)


@pytest.fixture
def pipeline_args(mix_cfg, models3, limits, fresh_state):
    return dict(
        cfg=mix_cfg, models=models3, limits=limits, state=fresh_state
    )


def rule_translate(text, a):
    return RuleBasedBackend().translate(
        text, a["cfg"], a["models"], a["limits"], a["state"]
    )


class TestRuleBased:
    def test_bright_orange(self, pipeline_args):
        out = rule_translate("I need a bright orange", pipeline_args)
        assert out.provenance == "rule_based"
        assert out.program.text.endswith("setVolume(5);")
        assert out.plan.residual <= 1e-9

    def test_cyan_single_pump(self, pipeline_args):
        out = rule_translate("make 5 ml of cyan", pipeline_args)
        lines = out.program.text.splitlines()
        assert lines[1] == "Pump2.write(0);"
        assert lines[2] == "Pump3.write(0);"
        assert lines[3] == "setVolume(5);"
        # only pump 1 flows
        flows = [
            flow_rate(m, sp)
            for m, sp in zip(pipeline_args["models"], out.plan.setpoints)
        ]
        assert flows[0] > 0 and flows[1] == flows[2] == 0.0

    def test_always_checked(self, pipeline_args):
        out = rule_translate("2 ml of dark teal", pipeline_args)
        report = check_program(
            out.program,
            pipeline_args["limits"],
            pipeline_args["state"],
            pipeline_args["models"],
        )
        assert report.ok

    def test_error_propagates(self, pipeline_args):
        with pytest.raises(NoColorFound):
            rule_translate("nothing to see here", pipeline_args)


def mock_llm(replies):
    """httpx transport yielding canned assistant messages in order."""
    replies = iter(replies)

    def handler(request: httpx.Request) -> httpx.Response:
        content = next(replies)
        return httpx.Response(
            200,
            json={"choices": [{"message": {"content": content}}]},
        )

    return httpx.MockTransport(handler)


def make_llm(transport, fallback=True):
    return LlmBackend(
        endpoint="http://llm.test/v1/chat/completions",
        model="test-model",
        api_key="k",
        transport=transport,
        fallback=fallback,
    )


class TestLlmBackend:
    def test_valid_reply_passes_through(self, pipeline_args):
        good = rule_translate("make 5 ml of cyan", pipeline_args)
        reply = f"```\n{render_program(good.program)}\n```"
        backend = make_llm(mock_llm([reply]))
        out = backend.translate(
            "make 5 ml of cyan", **{k: pipeline_args[k] for k in pipeline_args}
        )
        assert out.provenance == "llm"
        assert out.program == good.program

    def test_invalid_then_valid_retries(self, pipeline_args):
        good = rule_translate("make 5 ml of cyan", pipeline_args)
        backend = make_llm(mock_llm(["hello", render_program(good.program)]))
        out = backend.translate("make 5 ml of cyan", **pipeline_args)
        assert out.provenance == "llm"

    def test_double_failure_falls_back(self, pipeline_args):
        backend = make_llm(mock_llm(["hello", "still not a program"]))
        out = backend.translate("make 5 ml of cyan", **pipeline_args)
        assert out.provenance == "rule_based-fallback"
        assert out.plan is not None
        expected = rule_translate("make 5 ml of cyan", pipeline_args)
        assert out.program == expected.program

    def test_unsafe_program_rejected(self, pipeline_args):
        unsafe = "Pump1.write(999);\nsetVolume(5);"
        backend = make_llm(mock_llm([unsafe, unsafe]))
        out = backend.translate("make 5 ml of cyan", **pipeline_args)
        assert out.provenance == "rule_based-fallback"

    def test_fallback_disabled_raises(self, pipeline_args):
        backend = make_llm(mock_llm(["hello", "hello"]), fallback=False)
        with pytest.raises(BackendUnavailable):
            backend.translate("make 5 ml of cyan", **pipeline_args)

    def test_no_endpoint_configured(self, pipeline_args, monkeypatch):
        monkeypatch.delenv("CHROMACTL_LLM_ENDPOINT", raising=False)
        backend = LlmBackend(fallback=False)
        with pytest.raises(BackendUnavailable):
            backend.translate("make 5 ml of cyan", **pipeline_args)


class TestDataset:
    def test_single_record_reproducible(self, pipeline_args):
        a = generate_dataset(1, 7, **pipeline_args)
        b = generate_dataset(1, 7, **pipeline_args)
        assert a == b

    def test_records_parse_and_check(self, pipeline_args):
        records = generate_dataset(50, 1, **pipeline_args)
        for rec in records:
            prog = parse_program(rec.completion)
            report = check_program(
                prog,
                pipeline_args["limits"],
                pipeline_args["state"],
                pipeline_args["models"],
            )
            assert report.ok, rec.prompt

    def test_prompts_unique(self, pipeline_args):
        records = generate_dataset(200, 2, **pipeline_args)
        prompts = [r.prompt for r in records]
        assert len(set(prompts)) == 200

    def test_export_byte_identical(self, pipeline_args, tmp_path):
        records = generate_dataset(50, 3, **pipeline_args)
        p1, p2 = tmp_path / "a.jsonl", tmp_path / "b.jsonl"
        write_dataset(records, str(p1))
        write_dataset(generate_dataset(50, 3, **pipeline_args), str(p2))
        assert p1.read_bytes() == p2.read_bytes()

    def test_jsonl_format(self, pipeline_args, tmp_path):
        path = tmp_path / "d.jsonl"
        write_dataset(generate_dataset(5, 4, **pipeline_args), str(path))
        lines = path.read_text().splitlines()
        assert len(lines) == 5
        for line in lines:
            rec = json.loads(line)
            assert set(rec) == {"prompt", "completion", "meta"}

    def test_residual_reproducible_from_prompt(self, pipeline_args):
        records = generate_dataset(30, 5, **pipeline_args)
        for rec in records:
            req = normalize_request(parse_request(rec.prompt))
            plan = plan_mix(req, pipeline_args["cfg"], pipeline_args["models"])
            assert abs(plan.residual - rec.meta["residual"]) <= 1e-9
