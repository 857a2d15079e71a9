"""Offline localization of sensitive call sites and their UI bindings.

For each call-graph edge into a permission-protected API this finds the
entry points (lifecycle callbacks and event listeners) that can reach the
calling method, the widget whose handler binding triggers a listener
entry, and the Activity window hosting that widget. Results are
deterministic: sites, entries and serialized output are all ordered.
"""

from __future__ import annotations

import json
from collections import deque
from dataclasses import dataclass, replace
from enum import Enum

from .appmodel import (
    AppPackage,
    ComponentKind,
    LIFECYCLE_METHODS,
    LISTENER_EVENTS,
    MethodSig,
    PermissionType,
    SensitiveApiMap,
)


class AmbiguityError(Exception):
    """Two handler bindings claim the same (event, listener) pair."""


class EntryKind(Enum):
    LIFECYCLE = "Lifecycle"
    LISTENER = "Listener"


@dataclass(frozen=True)
class SensitiveCallSite:
    site_id: str
    api: MethodSig
    permission: PermissionType
    containing_method: MethodSig


@dataclass(frozen=True)
class EntryPointRecord:
    entry: MethodSig
    kind: EntryKind
    event_type: str | None = None
    bound_widget: str | None = None


@dataclass(frozen=True)
class ContextBinding:
    site: SensitiveCallSite
    entries: tuple[EntryPointRecord, ...]
    trigger_widget: str | None
    host_activity: str | None


def entry_kind_of(sig: MethodSig) -> EntryKind | None:
    if sig.method_name in LISTENER_EVENTS:
        return EntryKind.LISTENER
    if sig.method_name in LIFECYCLE_METHODS:
        return EntryKind.LIFECYCLE
    return None


def find_sensitive_sites(pkg: AppPackage, api_map: SensitiveApiMap) -> list[SensitiveCallSite]:
    """One site per (containing method, api) edge whose callee is mapped."""
    found: dict[tuple[str, str], SensitiveCallSite] = {}
    for caller, callee in pkg.call_graph.edges:
        perm = api_map.permission_of(callee)
        if perm is None:
            continue
        key = (caller.signature, callee.signature)
        if key in found:
            continue
        found[key] = SensitiveCallSite(
            site_id=f"{pkg.package_id}!{caller.signature}=>{callee.signature}",
            api=callee,
            permission=perm,
            containing_method=caller,
        )
    return [found[key] for key in sorted(found)]


def _reverse_adjacency(pkg: AppPackage) -> dict[MethodSig, set[MethodSig]]:
    rev: dict[MethodSig, set[MethodSig]] = {}
    for caller, callee in pkg.call_graph.edges:
        rev.setdefault(callee, set()).add(caller)
    return rev


def find_entry_points(pkg: AppPackage, site: SensitiveCallSite) -> list[EntryPointRecord]:
    """All catalog methods that reach the site's containing method.

    Reverse BFS from the containing method (which itself counts, zero-hop);
    catalog methods found along the way are each reported, and traversal
    continues through them so entries reachable only via other entries are
    not lost.
    """
    rev = _reverse_adjacency(pkg)
    seen = {site.containing_method}
    queue = deque([site.containing_method])
    while queue:
        node = queue.popleft()
        for pred in rev.get(node, ()):
            if pred not in seen:
                seen.add(pred)
                queue.append(pred)
    records = []
    for sig in seen:
        kind = entry_kind_of(sig)
        if kind is None:
            continue
        records.append(
            EntryPointRecord(
                entry=sig,
                kind=kind,
                event_type=sig.method_name if kind is EntryKind.LISTENER else None,
            )
        )
    records.sort(key=lambda r: r.entry.signature)
    return records


def resolve_trigger_widget(pkg: AppPackage, entry: EntryPointRecord) -> str | None:
    """Widget whose handler binding targets this listener entry, if any."""
    if entry.kind is not EntryKind.LISTENER:
        return None
    matches = [
        b.widget_id
        for b in pkg.call_graph.handler_bindings
        if b.listener == entry.entry and b.event_type == entry.event_type
    ]
    if len(matches) > 1:
        raise AmbiguityError(
            f"widgets {sorted(matches)} all bind ({entry.event_type}, "
            f"{entry.entry.signature}); cannot pick a trigger"
        )
    return matches[0] if matches else None


def resolve_host_window(
    pkg: AppPackage,
    widget_id: str | None = None,
    entries: tuple[EntryPointRecord, ...] = (),
) -> str | None:
    """Activity whose layout declares the widget; for widget-less sites the
    Activity owning a lifecycle entry; absent for pure-Service sites."""
    if widget_id is not None:
        layout_id = pkg.layout_of_widget(widget_id)
        if layout_id is not None:
            for c in pkg.components:
                if c.kind is ComponentKind.ACTIVITY and c.layout_id == layout_id:
                    return c.component_id
        return None
    for record in entries:
        if record.kind is not EntryKind.LIFECYCLE:
            continue
        comp = pkg.component(record.entry.class_name)
        if comp is not None and comp.kind is ComponentKind.ACTIVITY:
            return comp.component_id
    return None


def extract_bindings(pkg: AppPackage, api_map: SensitiveApiMap) -> list[ContextBinding]:
    """Full static pass: one ContextBinding per sensitive call site."""
    bindings = []
    for site in find_sensitive_sites(pkg, api_map):
        entries = find_entry_points(pkg, site)
        resolved = []
        trigger = None
        for record in entries:
            widget = resolve_trigger_widget(pkg, record)
            resolved.append(replace(record, bound_widget=widget))
            if trigger is None and widget is not None:
                trigger = widget
        host = resolve_host_window(pkg, widget_id=trigger) if trigger else None
        if host is None:
            host = resolve_host_window(pkg, entries=tuple(resolved))
        bindings.append(
            ContextBinding(
                site=site,
                entries=tuple(resolved),
                trigger_widget=trigger,
                host_activity=host,
            )
        )
    return bindings


@dataclass(frozen=True)
class ReviewList:
    """Manual filter applied after extraction: keep `allow` (when given),
    then drop `deny`, both keyed by site_id."""

    allow: frozenset[str] | None = None
    deny: frozenset[str] = frozenset()

    @classmethod
    def parse(cls, text: str) -> "ReviewList":
        doc = json.loads(text)
        allow = doc.get("allow")
        return cls(
            allow=frozenset(allow) if allow is not None else None,
            deny=frozenset(doc.get("deny", [])),
        )


def apply_review(bindings: list[ContextBinding], review: ReviewList) -> list[ContextBinding]:
    kept = bindings
    if review.allow is not None:
        kept = [b for b in kept if b.site.site_id in review.allow]
    return [b for b in kept if b.site.site_id not in review.deny]


def _entry_doc(r: EntryPointRecord) -> dict:
    doc = {"entry": r.entry.signature, "kind": r.kind.value}
    if r.event_type is not None:
        doc["event_type"] = r.event_type
    if r.bound_widget is not None:
        doc["bound_widget"] = r.bound_widget
    return doc


def serialize_bindings(bindings: list[ContextBinding]) -> str:
    """One record per site per line, in site order."""
    lines = []
    for b in sorted(bindings, key=lambda b: b.site.site_id):
        lines.append(
            json.dumps(
                {
                    "site": {
                        "site_id": b.site.site_id,
                        "api": b.site.api.signature,
                        "permission": b.site.permission.value,
                        "containing_method": b.site.containing_method.signature,
                    },
                    "entries": [_entry_doc(r) for r in b.entries],
                    "trigger_widget": b.trigger_widget,
                    "host_activity": b.host_activity,
                }
            )
        )
    return "\n".join(lines) + ("\n" if lines else "")


def parse_bindings(text: str) -> list[ContextBinding]:
    out = []
    for line in text.splitlines():
        if not line.strip():
            continue
        doc = json.loads(line)
        site = doc["site"]
        out.append(
            ContextBinding(
                site=SensitiveCallSite(
                    site_id=site["site_id"],
                    api=MethodSig.parse(site["api"]),
                    permission=PermissionType(site["permission"]),
                    containing_method=MethodSig.parse(site["containing_method"]),
                ),
                entries=tuple(
                    EntryPointRecord(
                        entry=MethodSig.parse(e["entry"]),
                        kind=EntryKind(e["kind"]),
                        event_type=e.get("event_type"),
                        bound_widget=e.get("bound_widget"),
                    )
                    for e in doc["entries"]
                ),
                trigger_widget=doc.get("trigger_widget"),
                host_activity=doc.get("host_activity"),
            )
        )
    return out
