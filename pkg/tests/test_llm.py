import json

import pytest
from hypothesis import given
from hypothesis import strategies as st

from routebench.llm import (
    AuthError,
    ChatMessage,
    FixtureError,
    ModelConfig,
    PricingTable,
    RecordingClient,
    RemoteClient,
    ReplayClient,
    ScriptedClient,
    TransportError,
    Usage,
    cost,
    read_transcript,
    record_transcript,
    request_digest,
)

CFG = ModelConfig("m1")
ASK = [ChatMessage("user", "route please")]
ASK2 = [ChatMessage("user", "again")]


def _record(tmp_path, replies, asks):
    rec = RecordingClient(ScriptedClient(replies))
    for ask in asks:
        rec.complete(ask, CFG)
    return record_transcript(rec, tmp_path / "t.jsonl")


def test_replay_serves_in_order(tmp_path):
    path = _record(tmp_path, ["one", "two"], [ASK, ASK2])
    client = ReplayClient(path)
    assert client.complete(ASK, CFG).text == "one"
    assert client.complete(ASK2, CFG).text == "two"
    assert client.remaining == 0


def test_replay_mismatch(tmp_path):
    client = ReplayClient(_record(tmp_path, ["one"], [ASK]))
    with pytest.raises(FixtureError, match="mismatch"):
        client.complete(ASK2, CFG)


def test_replay_temperature_is_part_of_key(tmp_path):
    client = ReplayClient(_record(tmp_path, ["one"], [ASK]))
    with pytest.raises(FixtureError):
        client.complete(ASK, ModelConfig("m1", temperature=0.7))


def test_replay_detects_tampering(tmp_path):
    path = _record(tmp_path, ["one"], [ASK])
    data = json.loads(path.read_text())
    data["messages"][0]["content"] = "edited"
    path.write_text(json.dumps(data) + "\n")
    with pytest.raises(FixtureError, match="altered"):
        ReplayClient(path).complete(ASK, CFG)


def test_replay_exhaustion(tmp_path):
    client = ReplayClient(_record(tmp_path, ["one"], [ASK]))
    client.complete(ASK, CFG)
    with pytest.raises(FixtureError, match="exhausted"):
        client.complete(ASK, CFG)


def test_empty_transcript(tmp_path):
    path = tmp_path / "empty.jsonl"
    path.write_text("")
    assert read_transcript(path) == []
    with pytest.raises(FixtureError):
        ReplayClient(path).complete(ASK, CFG)


def test_digest_depends_on_every_field():
    base = request_digest("m1", 0.2, ASK)
    assert base == request_digest("m1", 0.2, list(ASK))
    assert base != request_digest("m2", 0.2, ASK)
    assert base != request_digest("m1", 0.3, ASK)
    assert base != request_digest("m1", 0.2, ASK2)


def test_missing_credential_fails_before_transport():
    def transport(*_):
        raise AssertionError("transport must not be called")

    client = RemoteClient(transport=transport, env={})
    with pytest.raises(AuthError, match="OPENAI_API_KEY"):
        client.complete(ASK, CFG)


def _ok(text="hi"):
    return {"choices": [{"message": {"content": text}}], "usage": {"prompt_tokens": 3, "completion_tokens": 1}}


def test_remote_client_parses_response():
    seen = {}

    def transport(url, headers, payload, timeout):
        seen.update(url=url, auth=headers["Authorization"], payload=payload)
        return _ok()

    out = RemoteClient(transport=transport, env={"OPENAI_API_KEY": "k"}).complete(ASK, CFG)
    assert out.text == "hi" and out.usage == Usage(3, 1)
    assert seen["url"].endswith("/chat/completions") and seen["auth"] == "Bearer k"
    assert seen["payload"]["temperature"] == 0.2


def test_retry_backoff_then_success():
    delays, calls = [], []

    def transport(*_):
        calls.append(1)
        if len(calls) < 3:
            raise TransportError("503")
        return _ok("done")

    client = RemoteClient(transport=transport, env={"OPENAI_API_KEY": "k"}, sleep=delays.append)
    assert client.complete(ASK, CFG).text == "done"
    assert delays == [1.0, 2.0]


def test_retry_gives_up():
    def transport(*_):
        raise TransportError("down")

    cfg = ModelConfig("m1", max_retries=2)
    client = RemoteClient(transport=transport, env={"OPENAI_API_KEY": "k"}, sleep=lambda _: None)
    with pytest.raises(TransportError, match="3 attempts"):
        client.complete(ASK, cfg)


def test_auth_rejection_is_not_retried():
    calls = []

    def transport(*_):
        calls.append(1)
        raise AuthError("401")

    client = RemoteClient(transport=transport, env={"OPENAI_API_KEY": "k"}, sleep=lambda _: None)
    with pytest.raises(AuthError):
        client.complete(ASK, CFG)
    assert len(calls) == 1


PRICES = PricingTable({"m1": (10.0, 30.0), "free": (0.0, 0.0)})


@pytest.mark.parametrize("usage, model, expected", [
    (Usage(1_000_000, 0), "m1", 10.0),
    (Usage(0, 0), "m1", 0.0),
    (Usage(500_000, 500_000), "m1", 20.0),
    (Usage(123, 456), "free", 0.0),
])
def test_cost_examples(usage, model, expected):
    assert cost(usage, model, PRICES) == pytest.approx(expected)


def test_unknown_model_cost_is_none():
    assert cost(Usage(10, 10), "mystery", PRICES) is None


counts = st.integers(0, 10**7)


@given(counts, counts, counts, counts)
def test_cost_additive(a, b, c, d):
    u, v = Usage(a, b), Usage(c, d)
    assert cost(u + v, "m1", PRICES) == pytest.approx(cost(u, "m1", PRICES) + cost(v, "m1", PRICES))


def test_pricing_load(tmp_path):
    path = tmp_path / "p.json"
    path.write_text(json.dumps({"m1": {"prompt": 1.5, "completion": 2}}))
    assert PricingTable.load(path).prices == {"m1": (1.5, 2.0)}


def test_config_validation():
    with pytest.raises(ValueError):
        ModelConfig("m", temperature=-1)
    with pytest.raises(ValueError):
        ModelConfig("m", provider="replay")
    with pytest.raises(ValueError):
        ChatMessage("user", "")
