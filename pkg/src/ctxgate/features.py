"""Context feature extraction.

Three hashed bag-of-token vectors describe a sensitive request: `who`
(attributes of the triggering widget), `when` (entry-point signatures and
events), and `what` (all window texts with their grid positions), plus a
small dense block of structural values. Each set hashes into its own
65,536-bucket space; the set tag is part of the hash preimage so identical
tokens never collide across sets.
"""

from __future__ import annotations

from dataclasses import dataclass

from .analyzer import EntryKind, EntryPointRecord
from .render import WindowSnapshot
from .textproc import HASH_DIM, hash_token, normalize, split_identifier

FEATURE_SETS = ("who", "when", "what")
DENSE_SIZE = 9
TOTAL_DIM = 3 * HASH_DIM + DENSE_SIZE

# dense block layout
DENSE_FIELDS = (
    "size_fraction",
    "is_password",
    "is_clickable",
    "is_long_clickable",
    "is_checkable",
    "is_scrollable",
    "entry_is_lifecycle",
    "entry_is_listener",
    "has_trigger_widget",
)

_SET_OFFSET = {"who": 0, "when": HASH_DIM, "what": 2 * HASH_DIM}


@dataclass(frozen=True)
class ContextFeatures:
    who: dict[int, float]
    when: dict[int, float]
    what: dict[int, float]
    dense: tuple[float, ...]

    def __post_init__(self):
        if len(self.dense) != DENSE_SIZE:
            raise ValueError(f"dense block must have {DENSE_SIZE} values")

    def vector(self, name: str) -> dict[int, float]:
        return getattr(self, name)

    def indexed(self) -> list[tuple[int, float]]:
        """(global index, value) pairs over the combined space, index-sorted
        within each section; zero-valued dense slots are skipped."""
        pairs: list[tuple[int, float]] = []
        for name in FEATURE_SETS:
            offset = _SET_OFFSET[name]
            vec = self.vector(name)
            pairs.extend((offset + i, vec[i]) for i in sorted(vec))
        base = 3 * HASH_DIM
        pairs.extend(
            (base + j, v) for j, v in enumerate(self.dense) if v != 0.0
        )
        return pairs

    def mask(self, enabled_sets: frozenset[str]) -> "ContextFeatures":
        check_enabled_sets(enabled_sets)
        return ContextFeatures(
            who=dict(self.who) if "who" in enabled_sets else {},
            when=dict(self.when) if "when" in enabled_sets else {},
            what=dict(self.what) if "what" in enabled_sets else {},
            dense=self.dense,
        )

    def to_doc(self) -> dict:
        return {
            "who": [[i, c] for i, c in sorted(self.who.items())],
            "when": [[i, c] for i, c in sorted(self.when.items())],
            "what": [[i, c] for i, c in sorted(self.what.items())],
            "dense": list(self.dense),
        }

    @classmethod
    def from_doc(cls, doc: dict) -> "ContextFeatures":
        return cls(
            who={int(i): float(c) for i, c in doc["who"]},
            when={int(i): float(c) for i, c in doc["when"]},
            what={int(i): float(c) for i, c in doc["what"]},
            dense=tuple(float(v) for v in doc["dense"]),
        )


def empty_features() -> ContextFeatures:
    return ContextFeatures(who={}, when={}, what={}, dense=(0.0,) * DENSE_SIZE)


def check_enabled_sets(enabled_sets: frozenset[str]) -> None:
    if not enabled_sets:
        raise ValueError("at least one feature set must be enabled")
    unknown = set(enabled_sets) - set(FEATURE_SETS)
    if unknown:
        raise ValueError(f"unknown feature set(s): {sorted(unknown)}")


def _bump(vec: dict[int, float], set_tag: str, token: str) -> None:
    idx = hash_token(set_tag, token)
    vec[idx] = vec.get(idx, 0.0) + 1.0


def extract_who(
    snapshot: WindowSnapshot | None, widget_id: str | None
) -> tuple[dict[int, float], tuple[float, ...]]:
    """Trigger-widget vector plus its dense contributions.

    Dense part: (size_fraction, is_password, is_clickable, is_long_clickable,
    is_checkable, is_scrollable, has_trigger_widget). Without a trigger
    widget the vector stays empty and every dense slot is zero.
    """
    widget = snapshot.widget(widget_id) if snapshot is not None and widget_id else None
    if widget is None:
        return {}, (0.0,) * 7
    vec: dict[int, float] = {}
    for source in (widget.widget_id, widget.class_name, widget.resolved_text):
        for token in normalize(source):
            _bump(vec, "who", token)
    _bump(vec, "who", f"cell{widget.cell}")
    dense = (
        widget.size_fraction,
        float(widget.flags.is_password),
        float(widget.flags.is_clickable),
        float(widget.flags.is_long_clickable),
        float(widget.flags.is_checkable),
        float(widget.flags.is_scrollable),
        1.0,
    )
    return vec, dense


def extract_when(entries: tuple[EntryPointRecord, ...]) -> dict[int, float]:
    """Entry signature, event and kind tokens; raw identifier splits (no
    stopword filtering or stemming, so "on"/"click" idioms survive)."""
    vec: dict[int, float] = {}
    for record in entries:
        for token in split_identifier(record.entry.signature):
            _bump(vec, "when", token)
        if record.event_type:
            for token in split_identifier(record.event_type):
                _bump(vec, "when", token)
        _bump(vec, "when", record.kind.value.lower())
    return vec


def extract_what(snapshot: WindowSnapshot | None) -> dict[int, float]:
    """Window theme: for every widget with text, its stems plus the
    position-conditioned form "cell<k>:<stem>"."""
    vec: dict[int, float] = {}
    if snapshot is None:
        return vec
    for widget in snapshot.widgets:
        if not widget.resolved_text:
            continue
        for stem in normalize(widget.resolved_text):
            _bump(vec, "what", stem)
            _bump(vec, "what", f"cell{widget.cell}:{stem}")
    return vec


def assemble_features(
    snapshot: WindowSnapshot | None,
    entries: tuple[EntryPointRecord, ...],
    trigger_widget: str | None,
    enabled_sets: frozenset[str] = frozenset(FEATURE_SETS),
) -> ContextFeatures:
    check_enabled_sets(enabled_sets)
    who, who_dense = extract_who(snapshot, trigger_widget)
    when = extract_when(entries)
    what = extract_what(snapshot)
    dense = who_dense[:6] + (
        float(any(r.kind is EntryKind.LIFECYCLE for r in entries)),
        float(any(r.kind is EntryKind.LISTENER for r in entries)),
        who_dense[6],
    )
    return ContextFeatures(
        who=who if "who" in enabled_sets else {},
        when=when if "when" in enabled_sets else {},
        what=what if "what" in enabled_sets else {},
        dense=dense,
    )
