"""Turning raw text into validated pump programs.

Two backends share one contract: the deterministic rule-based pipeline
(parse -> normalize -> plan -> codegen), which doubles as the ground-truth
oracle, and an external chat-completion client whose output is validated
against the program grammar and safety checker, with one retry and a
rule-based fallback. The module also exports the fine-tuning dataset:
newline-delimited JSON records pairing request sentences with canonical
program text.
"""

from __future__ import annotations

import json
import os
import random
import re
import time
from dataclasses import dataclass

import httpx

from .colors import Color, Modifier, NAME_TABLE, render_color_literal
from .errors import BackendUnavailable
from .planner import MixConfig, MixPlan, plan_mix
from .pumpcode import (
    DeviceLimits,
    PumpProgram,
    check_program,
    generate_program,
    parse_program,
    render_program,
)
from .pumps import PumpModel
from .request import normalize_request, parse_request

__all__ = [
    "Translation",
    "DatasetRecord",
    "RuleBasedBackend",
    "LlmBackend",
    "translate",
    "generate_dataset",
    "write_dataset",
]

ENV_ENDPOINT = "CHROMACTL_LLM_ENDPOINT"
ENV_MODEL = "CHROMACTL_LLM_MODEL"
ENV_KEY = "CHROMACTL_LLM_KEY"

PROMPT_TEMPLATE = """You compile color requests into pump-control programs.

The program grammar is exactly:
  write  := "Pump" INT "." "write" "(" NUMBER ")" ";"
  setvol := "setVolume" "(" NUMBER ")" ";"
One write per pump in index order, then one setVolume. Output only the
program, nothing else.

Examples:
{examples}
"""

_CODE_BLOCK_RE = re.compile(r"```(?:[a-zA-Z]*\n)?(.*?)```", re.DOTALL)


@dataclass(frozen=True)
class Translation:
    program: PumpProgram
    plan: MixPlan | None
    provenance: str  # rule_based | llm | rule_based-fallback
    latency_s: float = 0.0


@dataclass(frozen=True)
class DatasetRecord:
    prompt: str
    completion: str
    meta: dict


class RuleBasedBackend:
    """Deterministic parse -> plan -> codegen pipeline; the oracle."""

    kind = "rule_based"

    def translate(
        self,
        text: str,
        cfg: MixConfig,
        models: list[PumpModel],
        limits: DeviceLimits,
        state,
        default_volume_ml: float = 5.0,
    ) -> Translation:
        start = time.perf_counter()
        req = normalize_request(parse_request(text), default_volume_ml)
        plan = plan_mix(req, cfg, models)
        program = generate_program(plan)
        return Translation(
            program=program,
            plan=plan,
            provenance=self.kind,
            latency_s=time.perf_counter() - start,
        )


def _few_shot_examples(cfg: MixConfig, models, limits, state) -> str:
    rule = RuleBasedBackend()
    prompts = [
        "make 5 ml of cyan",
        "I need a bright orange",
        "2 ml of dark teal",
        "rgb(255, 0, 0)",
    ]
    blocks = []
    for p in prompts:
        program = rule.translate(p, cfg, models, limits, state).program
        blocks.append(f"Request: {p}\nProgram:\n{render_program(program)}")
    return "\n\n".join(blocks)


class LlmBackend:
    """Chat-completion client with grammar validation and rule fallback.

    Endpoint, model name, and API key come from the environment; a custom
    httpx transport can be injected for testing.
    """

    kind = "llm"

    def __init__(
        self,
        endpoint: str | None = None,
        model: str | None = None,
        api_key: str | None = None,
        timeout_s: float = 10.0,
        fallback: bool = True,
        transport: httpx.BaseTransport | None = None,
    ):
        self.endpoint = endpoint or os.environ.get(ENV_ENDPOINT)
        self.model = model or os.environ.get(ENV_MODEL, "")
        self.api_key = api_key or os.environ.get(ENV_KEY, "")
        self.timeout_s = timeout_s
        self.fallback = fallback
        self._transport = transport

    def _complete(self, system: str, user: str) -> str:
        if not self.endpoint:
            raise BackendUnavailable(f"{ENV_ENDPOINT} is not set")
        headers = {"Content-Type": "application/json"}
        if self.api_key:
            headers["Authorization"] = f"Bearer {self.api_key}"
        payload = {
            "model": self.model,
            "messages": [
                {"role": "system", "content": system},
                {"role": "user", "content": user},
            ],
        }
        try:
            with httpx.Client(
                timeout=self.timeout_s, transport=self._transport
            ) as client:
                resp = client.post(self.endpoint, json=payload, headers=headers)
                resp.raise_for_status()
                body = resp.json()
            return body["choices"][0]["message"]["content"]
        except (httpx.HTTPError, KeyError, IndexError, ValueError) as exc:
            raise BackendUnavailable(f"LLM endpoint failed: {exc}") from exc

    @staticmethod
    def _extract_program_text(reply: str) -> str:
        m = _CODE_BLOCK_RE.search(reply)
        return (m.group(1) if m else reply).strip()

    def translate(
        self,
        text: str,
        cfg: MixConfig,
        models: list[PumpModel],
        limits: DeviceLimits,
        state,
        default_volume_ml: float = 5.0,
    ) -> Translation:
        start = time.perf_counter()
        system = PROMPT_TEMPLATE.format(
            examples=_few_shot_examples(cfg, models, limits, state)
        )
        user = text
        last_error: Exception | None = None
        for _attempt in range(2):
            try:
                reply = self._complete(system, user)
                program = parse_program(self._extract_program_text(reply))
                report = check_program(program, limits, state, models)
                if not report.ok:
                    raise ValueError(
                        "; ".join(v.code for v in report.violations)
                    )
                return Translation(
                    program=program,
                    plan=None,
                    provenance=self.kind,
                    latency_s=time.perf_counter() - start,
                )
            except BackendUnavailable as exc:
                last_error = exc
                break  # endpoint down: retrying the same call is pointless
            except Exception as exc:  # validation failure: retry with the error
                last_error = exc
                user = f"{text}\n\nYour previous output was invalid: {exc}"
        if not self.fallback:
            raise BackendUnavailable(f"LLM translation failed: {last_error}")
        fb = RuleBasedBackend().translate(
            text, cfg, models, limits, state, default_volume_ml
        )
        return Translation(
            program=fb.program,
            plan=fb.plan,
            provenance="rule_based-fallback",
            latency_s=time.perf_counter() - start,
        )


def translate(
    text: str,
    backend,
    cfg: MixConfig,
    models: list[PumpModel],
    limits: DeviceLimits,
    state,
    default_volume_ml: float = 5.0,
) -> Translation:
    """Translate text through the given backend; the result is always a
    parsed, checker-accepted program."""
    return backend.translate(text, cfg, models, limits, state, default_volume_ml)


# --- dataset generation -----------------------------------------------------

_SENTENCE_TEMPLATES = [
    "{color}",
    "I need {article}{color}",
    "make {color}",
    "please mix {color}",
    "I want some {color}",
]
_VOLUME_TEMPLATES = [
    "{volume:g} ml of {color}",
    "make {volume:g} ml of {color}",
    "I need {volume:g} milliliters of {color}",
]
_VOLUMES_ML = [1.0, 2.0, 2.5, 5.0, 10.0, 20.0]


def _random_color_phrase(rng: random.Random) -> str:
    roll = rng.random()
    if roll < 0.6:
        return rng.choice(sorted(NAME_TABLE))
    if roll < 0.8:
        return render_color_literal(
            Color(rng.randrange(256) / 255, rng.randrange(256) / 255, rng.randrange(256) / 255)
        )
    return f"rgb({rng.randrange(256)},{rng.randrange(256)},{rng.randrange(256)})"


def _random_prompt(rng: random.Random) -> str:
    phrase = _random_color_phrase(rng)
    mods = rng.sample([m.value for m in Modifier], k=rng.choice([0, 0, 0, 1, 1, 2]))
    colored = " ".join(mods + [phrase])
    if rng.random() < 0.4:
        template = rng.choice(_VOLUME_TEMPLATES)
        return template.format(volume=rng.choice(_VOLUMES_ML), color=colored)
    template = rng.choice(_SENTENCE_TEMPLATES)
    article = "a " if rng.random() < 0.5 else ""
    return template.format(color=colored, article=article)


def generate_dataset(
    n: int,
    seed: int,
    cfg: MixConfig,
    models: list[PumpModel],
    limits: DeviceLimits,
    state,
    default_volume_ml: float = 5.0,
) -> list[DatasetRecord]:
    """Sample n unique prompts from the request grammar and pair each with
    the rule-based pipeline's canonical program text."""
    if n < 1:
        raise ValueError("n must be >= 1")
    rng = random.Random(seed)
    rule = RuleBasedBackend()
    records: list[DatasetRecord] = []
    seen: set[str] = set()
    while len(records) < n:
        prompt = _random_prompt(rng)
        if prompt in seen:
            continue
        seen.add(prompt)
        result = rule.translate(prompt, cfg, models, limits, state, default_volume_ml)
        assert result.plan is not None
        target = normalize_request(parse_request(prompt), default_volume_ml).target
        records.append(
            DatasetRecord(
                prompt=prompt,
                completion=render_program(result.program),
                meta={
                    "target_rgb": [target.r, target.g, target.b],
                    "residual": result.plan.residual,
                },
            )
        )
    return records


def write_dataset(records: list[DatasetRecord], path: str) -> None:
    """Newline-delimited JSON, stable key order, byte-identical per seed."""
    with open(path, "w", encoding="utf-8") as fh:
        for rec in records:
            fh.write(
                json.dumps(
                    {"prompt": rec.prompt, "completion": rec.completion, "meta": rec.meta},
                    sort_keys=True,
                )
                + "\n"
            )
