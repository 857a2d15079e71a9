"""Test-side oracles and generators, kept independent of the library's
traversal code: the analyzer oracle enumerates call paths outright instead
of reverse BFS."""

from __future__ import annotations

import json
import random

from ctxgate.appmodel import (
    LIFECYCLE_METHODS,
    LISTENER_EVENTS,
    AppPackage,
    SensitiveApiMap,
    parse_package,
)


def path_exists(edges: list[tuple[str, str]], src: str, dst: str) -> bool:
    """Exhaustive simple-path search (cycle-safe DFS over signatures)."""
    if src == dst:
        return True
    adjacency: dict[str, list[str]] = {}
    for a, b in edges:
        adjacency.setdefault(a, []).append(b)
    stack = [src]
    seen = {src}
    while stack:
        node = stack.pop()
        for nxt in adjacency.get(node, ()):
            if nxt == dst:
                return True
            if nxt not in seen:
                seen.add(nxt)
                stack.append(nxt)
    return False


def oracle_bindings(pkg: AppPackage, api_map: SensitiveApiMap) -> list[dict]:
    """Reference result: for every (caller, mapped callee) edge, every
    catalog method with a path to the caller, plus trigger/host resolved
    by direct scanning. Returned as comparable plain dicts."""
    edges = [(a.signature, b.signature) for a, b in pkg.call_graph.edges]
    sites = {}
    for caller, callee in pkg.call_graph.edges:
        perm = api_map.permission_of(callee)
        if perm is None:
            continue
        sites[(caller.signature, callee.signature)] = (caller, callee, perm)

    out = []
    for key in sorted(sites):
        caller, callee, perm = sites[key]
        entries = []
        for node in sorted(pkg.call_graph.nodes, key=lambda n: n.signature):
            if node.method_name in LISTENER_EVENTS:
                kind = "Listener"
            elif node.method_name in LIFECYCLE_METHODS:
                kind = "Lifecycle"
            else:
                continue
            if not path_exists(edges, node.signature, caller.signature):
                continue
            widget = None
            if kind == "Listener":
                matches = [
                    b.widget_id
                    for b in pkg.call_graph.handler_bindings
                    if b.listener == node and b.event_type == node.method_name
                ]
                assert len(matches) <= 1, "oracle does not resolve ambiguous bindings"
                widget = matches[0] if matches else None
            entries.append(
                {
                    "entry": node.signature,
                    "kind": kind,
                    "event_type": node.method_name if kind == "Listener" else None,
                    "bound_widget": widget,
                }
            )
        trigger = next((e["bound_widget"] for e in entries if e["bound_widget"]), None)
        host = None
        if trigger is not None:
            layout_id = pkg.layout_of_widget(trigger)
            for c in pkg.components:
                if c.layout_id == layout_id and c.kind.value == "Activity":
                    host = c.component_id
                    break
        if host is None:
            for e in entries:
                if e["kind"] != "Lifecycle":
                    continue
                cls = e["entry"].split(".")[0]
                comp = pkg.component(cls)
                if comp is not None and comp.kind.value == "Activity":
                    host = comp.component_id
                    break
        out.append(
            {
                "containing": caller.signature,
                "api": callee.signature,
                "permission": perm.value,
                "entries": entries,
                "trigger_widget": trigger,
                "host_activity": host,
            }
        )
    return out


def binding_views(bindings) -> list[dict]:
    """Project library ContextBindings onto the oracle's dict shape."""
    return [
        {
            "containing": b.site.containing_method.signature,
            "api": b.site.api.signature,
            "permission": b.site.permission.value,
            "entries": [
                {
                    "entry": e.entry.signature,
                    "kind": e.kind.value,
                    "event_type": e.event_type,
                    "bound_widget": e.bound_widget,
                }
                for e in b.entries
            ],
            "trigger_widget": b.trigger_widget,
            "host_activity": b.host_activity,
        }
        for b in bindings
    ]


_CATALOG_NAMES = sorted(LISTENER_EVENTS | LIFECYCLE_METHODS)


def random_package(rng: random.Random, max_nodes: int = 30) -> AppPackage:
    """Arbitrary valid package: random call graph (cycles allowed), random
    widget tree, random bindings without (event, listener) duplicates."""
    pkg_id = f"com.rand.p{rng.randrange(10 ** 6)}"
    n_plain = rng.randint(1, max(1, max_nodes - 6))
    plain = [f"Cls{i}.m{i}()" for i in range(n_plain)]
    n_catalog = rng.randint(1, 5)
    catalog = []
    for i in range(n_catalog):
        name = rng.choice(_CATALOG_NAMES)
        owner = rng.choice([f"Cls{i}", "MainActivity", "Helper"])
        sig = f"{owner}.{name}()"
        if sig not in catalog:
            catalog.append(sig)
    apis = ["SmsManager.sendTextMessage()", "TelephonyManager.getDeviceId()"]
    nodes = plain + catalog

    n_widgets = rng.randint(1, 4)
    widget_ids = [f"{pkg_id}:id/w{i}" for i in range(n_widgets)]
    widgets = [
        {
            "widget_id": wid,
            "class_name": "Button",
            "text": rng.choice(["Send", "Go", "Scan", ""]) or None,
            "bounds": [40 * i, 40 * i, 40 * i + 200, 40 * i + 100],
            "flags": {"is_clickable": True},
        }
        for i, wid in enumerate(widget_ids)
    ]
    for w in widgets:
        if w["text"] is None:
            del w["text"]

    edges = []
    n_edges = rng.randint(0, max_nodes)
    for _ in range(n_edges):
        a = rng.choice(nodes)
        b = rng.choice(nodes + apis)
        edges.append([a, b])

    bindings = []
    used_pairs = set()
    for sig in catalog:
        name = sig.split(".")[1].split("(")[0]
        if name not in LISTENER_EVENTS or rng.random() < 0.3:
            continue
        pair = (name, sig)
        if pair in used_pairs:
            continue
        used_pairs.add(pair)
        bindings.append([rng.choice(widget_ids), name, sig])

    doc = {
        "format": "apkg/1",
        "package_id": pkg_id,
        "declared_permissions": ["SEND_SMS", "DEVICE_ID"],
        "components": [
            {"component_id": "MainActivity", "kind": "Activity", "layout_id": "main"},
            {"component_id": "Worker", "kind": "Service"},
        ],
        "layouts": {
            "main": {"screen_size": [720, 1280], "widgets": widgets}
        },
        "call_graph": {
            "nodes": nodes,
            "edges": edges,
            "handler_bindings": bindings,
        },
    }
    return parse_package(json.dumps(doc))
