"""Context assets: formulations, pseudo-codes and paper summaries, keyed by variant.

Layout under an assets root::

    formulations/<KIND>.txt
    pseudocode/<KIND>/<asset_id>.json   {"text": ..., "approach": ..., "provenance": ...}
    papers/<KIND>/<asset_id>.json       {"summary": ... | null, "paper_text": ... | null, ...}

Paper slots ship empty. A slot is usable once it carries a summary, or a
``paper_text`` whose summary sits in the summary cache (see
:func:`summarize_paper`).
"""

from __future__ import annotations

import enum
import hashlib
import json
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Sequence

from ..core import VariantKind
from ..llm import ChatClient, ChatMessage, ModelConfig, Role, Usage


class AssetError(LookupError):
    """A requested context asset is missing or unusable (a configuration error)."""


class ContextKind(str, enum.Enum):
    NONE = "NONE"
    MATH_FORMULATION = "MATH_FORMULATION"
    PSEUDO_CODE = "PSEUDO_CODE"
    PAPER_SUMMARY = "PAPER_SUMMARY"


@dataclass(frozen=True)
class ContextSpec:
    kind: ContextKind = ContextKind.NONE
    asset_id: str | None = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "kind", ContextKind(self.kind))
        needs_id = self.kind in (ContextKind.PSEUDO_CODE, ContextKind.PAPER_SUMMARY)
        if needs_id and not self.asset_id:
            raise ValueError(f"context {self.kind.value} needs an asset_id")
        if not needs_id and self.asset_id is not None:
            raise ValueError(f"context {self.kind.value} takes no asset_id")

    @property
    def label(self) -> str:
        return self.kind.value if self.asset_id is None else f"{self.kind.value}:{self.asset_id}"

    @classmethod
    def parse(cls, text: str) -> "ContextSpec":
        """Parse ``KIND`` or ``KIND:asset_id`` (kind is case-insensitive)."""
        kind, _, asset = text.partition(":")
        return cls(ContextKind(kind.strip().upper()), asset.strip() or None)

    def to_dict(self) -> dict:
        return {"kind": self.kind.value, "asset_id": self.asset_id}

    @classmethod
    def from_dict(cls, data: dict) -> "ContextSpec":
        return cls(ContextKind(data["kind"]), data.get("asset_id"))


def default_assets_root() -> Path:
    return Path(str(resources.files("routebench") / "assets"))


def content_hash(text: str) -> str:
    return hashlib.sha256(text.encode()).hexdigest()


class AssetRegistry:
    def __init__(self, root: str | Path | None = None, summary_cache: str | Path | None = None):
        self.root = Path(root) if root is not None else default_assets_root()
        self.summary_cache = Path(summary_cache) if summary_cache is not None else self.root / "summaries"

    def _json(self, path: Path) -> dict:
        if not path.is_file():
            raise AssetError(f"missing asset file {path}")
        try:
            return json.loads(path.read_text())
        except json.JSONDecodeError as exc:
            raise AssetError(f"asset file {path} is not valid JSON: {exc}") from None

    def formulation(self, kind: VariantKind) -> str:
        path = self.root / "formulations" / f"{VariantKind(kind).value}.txt"
        if not path.is_file():
            raise AssetError(f"no formulation asset for {VariantKind(kind).value} ({path})")
        return path.read_text()

    def asset_ids(self, context: ContextKind, kind: VariantKind) -> list[str]:
        sub = {ContextKind.PSEUDO_CODE: "pseudocode", ContextKind.PAPER_SUMMARY: "papers"}.get(ContextKind(context))
        if sub is None:
            return []
        folder = self.root / sub / VariantKind(kind).value
        return sorted(p.stem for p in folder.glob("*.json")) if folder.is_dir() else []

    def pseudo_code(self, kind: VariantKind, asset_id: str) -> dict:
        return self._json(self.root / "pseudocode" / VariantKind(kind).value / f"{asset_id}.json")

    def paper_slot(self, kind: VariantKind, asset_id: str) -> dict:
        return self._json(self.root / "papers" / VariantKind(kind).value / f"{asset_id}.json")

    def cached_summary(self, paper_text: str) -> str | None:
        path = self.summary_cache / f"{content_hash(paper_text)}.json"
        if not path.is_file():
            return None
        return self._json(path)["summary"]

    def paper_summary(self, kind: VariantKind, asset_id: str) -> str:
        slot = self.paper_slot(kind, asset_id)
        if slot.get("summary"):
            return slot["summary"]
        if slot.get("paper_text"):
            cached = self.cached_summary(slot["paper_text"])
            if cached:
                return cached
        raise AssetError(
            f"paper slot {VariantKind(kind).value}/{asset_id} has no summary yet; "
            "fill in its paper_text and run the summarize command"
        )

    def context_text(self, context: ContextSpec, kind: VariantKind) -> str:
        if context.kind is ContextKind.MATH_FORMULATION:
            return self.formulation(kind)
        if context.kind is ContextKind.PSEUDO_CODE:
            record = self.pseudo_code(kind, context.asset_id)
            if not record.get("text"):
                raise AssetError(f"pseudo-code asset {kind}/{context.asset_id} has no text")
            return record["text"]
        if context.kind is ContextKind.PAPER_SUMMARY:
            return self.paper_summary(kind, context.asset_id)
        raise AssetError("the NONE context has no text")


SUMMARY_INSTRUCTION = (
    "Summarize the following research paper for a programmer who must implement its method. "
    "Cover the problem it solves, the algorithm step by step, and any details needed to "
    "reproduce it. Be concise."
)


@dataclass(frozen=True)
class SummaryAsset:
    digest: str
    summary: str
    model: str
    usage: Usage
    cached: bool

    def to_dict(self) -> dict:
        return {"digest": self.digest, "summary": self.summary, "model": self.model, "usage": self.usage.to_dict()}


def summary_messages(paper_text: str) -> Sequence[ChatMessage]:
    return (
        ChatMessage(Role.SYSTEM, SUMMARY_INSTRUCTION),
        ChatMessage(Role.USER, paper_text),
    )


def summarize_paper(
    paper_text: str, client: ChatClient, config: ModelConfig, cache_dir: str | Path
) -> SummaryAsset:
    """Summarize once per distinct paper text; repeats are served from ``cache_dir``."""
    if not paper_text or not paper_text.strip():
        raise ValueError("paper text must be nonempty")
    digest = content_hash(paper_text)
    path = Path(cache_dir) / f"{digest}.json"
    if path.is_file():
        data = json.loads(path.read_text())
        return SummaryAsset(digest, data["summary"], data["model"], Usage.from_dict(data.get("usage", {})), True)
    result = client.complete(summary_messages(paper_text), config)
    asset = SummaryAsset(digest, result.text, config.model_name, result.usage, False)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(asset.to_dict(), indent=2, sort_keys=True) + "\n")
    return asset
