"""Agent backends: live chat-completions client, transcript replay, scripted policies.

Scripted policies stand in for induced personas when no model is available:
they rank pending tasks by category weights and so give a known ground truth
for the analysis pipeline.
"""

from __future__ import annotations

import json
import logging
import os
import threading
import time
import zlib
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import httpx
import numpy as np

from personaseq.errors import (
    AuthError,
    ConfigurationError,
    ContractViolation,
    MalformedResponse,
    RequestTimeout,
    TransportError,
)

log = logging.getLogger(__name__)

BACKENDS = ("chat", "replay", "scripted")


@dataclass(frozen=True)
class AgentConfig:
    backend: str = "scripted"
    model_id: str = "scripted"
    temperature: float = 0.0
    endpoint: str = "https://api.openai.com/v1/chat/completions"
    auth_env: str = "OPENAI_API_KEY"  # name of the variable holding the token, never the token
    rate_limit: float = 60.0  # requests per minute; 0 disables
    timeout: float = 30.0
    max_attempts: int = 3
    backoff: float = 1.0  # seconds, doubled per attempt
    # scripted backend
    seed: int = 0
    policies: dict = field(default_factory=dict, compare=False)  # label -> overrides of the default table
    noise_per_temperature: float = 0.0
    # replay backend
    transcripts: str | None = None

    def __post_init__(self):
        if self.backend not in BACKENDS:
            raise ConfigurationError(f"backend must be one of {BACKENDS}, got {self.backend!r}")
        if not 0.0 <= self.temperature <= 2.0:
            raise ConfigurationError(f"temperature {self.temperature} outside [0.0, 2.0]")
        if self.max_attempts < 1:
            raise ConfigurationError("max_attempts must be at least 1")
        if self.rate_limit < 0 or self.timeout <= 0:
            raise ConfigurationError("rate_limit must be >= 0 and timeout > 0")

    def to_dict(self) -> dict:
        # auth_env is a variable name, so it is safe to persist
        return {
            "backend": self.backend, "model_id": self.model_id, "temperature": self.temperature,
            "endpoint": self.endpoint, "auth_env": self.auth_env, "rate_limit": self.rate_limit,
            "timeout": self.timeout, "max_attempts": self.max_attempts, "backoff": self.backoff,
            "seed": self.seed, "policies": self.policies,
            "noise_per_temperature": self.noise_per_temperature, "transcripts": self.transcripts,
        }


# --- rate limiting -------------------------------------------------------------

class RateLimiter:
    """Spaces calls at least ``60 / per_minute`` seconds apart across threads."""

    def __init__(self, per_minute: float, clock=time.monotonic, sleep=time.sleep):
        self.interval = 60.0 / per_minute if per_minute > 0 else 0.0
        self._clock = clock
        self._sleep = sleep
        self._lock = threading.Lock()
        self._next = 0.0

    def acquire(self) -> None:
        if not self.interval:
            return
        with self._lock:
            now = self._clock()
            wait = self._next - now
            self._next = max(now, self._next) + self.interval
        if wait > 0:
            self._sleep(wait)


# --- chat ----------------------------------------------------------------------

def _auth_headers(config: AgentConfig) -> dict:
    token = os.environ.get(config.auth_env, "") if config.auth_env else ""
    return {"Authorization": f"Bearer {token}"} if token else {}


def chat_select(prompt: str, config: AgentConfig, client: httpx.Client | None = None,
                limiter: RateLimiter | None = None, sleep=time.sleep) -> str:
    """One chat-completion request; returns the first choice's content untouched."""
    body = {
        "model": config.model_id,
        "messages": [{"role": "user", "content": prompt}],
        "temperature": config.temperature,
    }
    own_client = client is None
    client = client or httpx.Client(timeout=config.timeout)
    last_error: TransportError | None = None
    try:
        for attempt in range(1, config.max_attempts + 1):
            if limiter is not None:
                limiter.acquire()
            try:
                resp = client.post(config.endpoint, json=body, headers=_auth_headers(config),
                                   timeout=config.timeout)
            except httpx.TimeoutException as exc:
                last_error = RequestTimeout(f"attempt {attempt}: timed out ({exc})")
            except httpx.TransportError as exc:
                last_error = TransportError(f"attempt {attempt}: {exc}")
            else:
                if resp.status_code in (401, 403):
                    raise AuthError(f"endpoint rejected credentials (HTTP {resp.status_code})")
                if resp.status_code == 429 or resp.status_code >= 500:
                    last_error = TransportError(f"attempt {attempt}: HTTP {resp.status_code}")
                elif resp.status_code >= 400:
                    raise TransportError(f"HTTP {resp.status_code}: {resp.text[:200]}")
                else:
                    try:
                        content = resp.json()["choices"][0]["message"]["content"]
                    except (ValueError, KeyError, IndexError, TypeError):
                        raise MalformedResponse(f"unexpected response body: {resp.text[:200]}") from None
                    if not isinstance(content, str):
                        raise MalformedResponse("message content is not text")
                    return content
            log.warning("chat request failed: %s", last_error)
            if attempt < config.max_attempts and config.backoff > 0:
                sleep(config.backoff * 2 ** (attempt - 1))
        raise last_error
    finally:
        if own_client:
            client.close()


class ChatAgent:
    serial = False  # concurrent calls are fine; the shared limiter is the only lock

    def __init__(self, config: AgentConfig, client: httpx.Client | None = None,
                 limiter: RateLimiter | None = None):
        self.config = config
        self.client = client or httpx.Client(timeout=config.timeout)
        self.limiter = limiter if limiter is not None else RateLimiter(config.rate_limit)

    def select(self, prompt, state, cycle_index) -> str:
        return chat_select(prompt, self.config, self.client, self.limiter)

    def close(self):
        self.client.close()


# --- scripted ------------------------------------------------------------------

@dataclass(frozen=True)
class ScriptedPolicy:
    category_weights: dict
    noise: float = 0.0
    seed: int = 0
    position_weight: float = 0.0  # penalty per place down the pending list

    def __post_init__(self):
        if not any(w > 0 for w in self.category_weights.values()):
            raise ConfigurationError("scripted policy needs at least one positive weight")
        if self.noise < 0:
            raise ConfigurationError("noise must be non-negative")

    def with_noise(self, noise: float) -> "ScriptedPolicy":
        return ScriptedPolicy(self.category_weights, noise, self.seed, self.position_weight)


def _cycle_rng(policy: ScriptedPolicy, state) -> np.random.Generator:
    key = zlib.crc32(state.schedule.schedule_id.encode("utf-8"))
    return np.random.default_rng([policy.seed, key, len(state.completed)])


def scripted_scores(state, policy: ScriptedPolicy) -> np.ndarray:
    w = policy.category_weights
    base = np.array([sum(w.get(c, 0.0) for c in t.categories) for t in state.pending], dtype=float)
    base -= policy.position_weight * np.arange(len(state.pending))
    if policy.noise > 0:
        spread = float(base.max() - base.min()) or 1.0
        base += policy.noise * spread * _cycle_rng(policy, state).random(len(base))
    return base


def scripted_select(state, policy: ScriptedPolicy) -> str:
    """Uid of the best-scoring pending task; ties go to the earliest position."""
    if not state.pending:
        raise ContractViolation("no pending tasks")
    return state.pending[int(np.argmax(scripted_scores(state, policy)))].uid


class ScriptedAgent:
    serial = False

    def __init__(self, policy: ScriptedPolicy):
        self.policy = policy

    def select(self, prompt, state, cycle_index) -> str:
        return scripted_select(state, self.policy)


def default_policy_table() -> dict:
    text = resources.files("personaseq").joinpath("data/synthetic_policies.json").read_text(encoding="utf-8")
    return json.loads(text)


def policy_for(label: str, config: AgentConfig, temperature: float | None = None) -> ScriptedPolicy:
    """Synthetic persona for a condition label, with noise coupled to temperature."""
    table = default_policy_table()
    table.update(config.policies)
    if label not in table:
        raise ConfigurationError(f"no scripted policy for condition {label!r}")
    spec = table[label]
    tau = config.temperature if temperature is None else temperature
    return ScriptedPolicy(
        category_weights=dict(spec["weights"]),
        noise=float(spec.get("noise", 0.0)) + config.noise_per_temperature * tau,
        seed=config.seed,
        position_weight=float(spec.get("position_weight", 0.0)),
    )


# --- replay --------------------------------------------------------------------

def replay_select(transcript, cycle_index: int) -> str:
    if not 0 <= cycle_index < len(transcript.cycles):
        raise IndexError(f"cycle {cycle_index} out of range for a {len(transcript.cycles)}-cycle transcript")
    return transcript.cycles[cycle_index].raw_reply


class ReplayAgent:
    serial = False

    def __init__(self, transcript):
        self.transcript = transcript

    def select(self, prompt, state, cycle_index) -> str:
        return replay_select(self.transcript, cycle_index)


class TranscriptIndex:
    """Finished run logs in a directory, keyed by (schedule, condition, model, temperature)."""

    def __init__(self, directory):
        from personaseq.runlog import read_header

        self.paths = {}
        for path in sorted(Path(directory).glob("*.jsonl")):
            h = read_header(path)
            self.paths[(h["schedule"]["schedule_id"], h["condition"], h["model_id"], float(h["temperature"]))] = path

    def load(self, schedule_id: str, condition: str, model_id: str, temperature: float):
        from personaseq.runlog import read_run_log

        path = self.paths.get((schedule_id, condition, model_id, float(temperature)))
        if path is None:
            raise ConfigurationError(f"no transcript for {schedule_id}/{condition}/{model_id}/{temperature}")
        return read_run_log(path)[0]
