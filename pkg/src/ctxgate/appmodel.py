"""Declarative app-package model.

An `.apkg` document describes one app the way a desk-scale analysis needs
to see it: components, widget trees with pixel bounds, the call graph with
handler bindings and runtime text assignments, and declared permissions.
Documents are JSON (hierarchical key/value with arrays); field names match
the domain types one-to-one. Parsing cross-validates every reference and
returns immutable values that are safe to share between threads.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from enum import Enum
from importlib import resources
from typing import Any, Iterator

SENSITIVE_API_VERSION = "v1"

LISTENER_EVENTS = frozenset(
    {"onClick", "onLongClick", "onCheckedChanged", "onItemSelected", "onScroll", "onTouch"}
)
LIFECYCLE_METHODS = frozenset(
    {
        "onCreate",
        "onStart",
        "onResume",
        "onPause",
        "onStop",
        "onDestroy",
        "onFinishInflate",
        "onCreateView",
    }
)

WIDGET_ATTRIBUTES = frozenset({"text"})


class PackageError(Exception):
    """Base class for package document problems."""


class PackageSyntaxError(PackageError):
    def __init__(self, message: str, line: int, col: int):
        super().__init__(f"syntax error at line {line}, column {col}: {message}")
        self.line = line
        self.col = col


class PackageSchemaError(PackageError):
    """A field is missing, has the wrong type, or is not a known field."""


class PackageReferenceError(PackageError):
    def __init__(self, ref_id: str, message: str):
        super().__init__(f"{message}: {ref_id!r}")
        self.ref_id = ref_id


class BoundsViolationError(PackageError):
    pass


class ApiMapError(Exception):
    """Bad sensitive-API map document."""


class PermissionType(Enum):
    DEVICE_ID = "DEVICE_ID"
    LOCATION = "LOCATION"
    CAMERA = "CAMERA"
    RECORD_AUDIO = "RECORD_AUDIO"
    BLUETOOTH = "BLUETOOTH"
    NFC = "NFC"
    SEND_SMS = "SEND_SMS"


class ComponentKind(Enum):
    ACTIVITY = "Activity"
    SERVICE = "Service"


@dataclass(frozen=True, order=True)
class MethodSig:
    class_name: str
    method_name: str
    param_types: tuple[str, ...] = ()

    def __post_init__(self):
        if not self.class_name or not self.method_name:
            raise PackageSchemaError("method signature needs a class and method name")

    @property
    def signature(self) -> str:
        return f"{self.class_name}.{self.method_name}({','.join(self.param_types)})"

    @classmethod
    def parse(cls, text: str) -> "MethodSig":
        """Parse "Class.method(T1,T2)"; parentheses may be omitted."""
        text = text.strip()
        params: tuple[str, ...] = ()
        if "(" in text:
            head, _, rest = text.partition("(")
            if not rest.endswith(")"):
                raise PackageSchemaError(f"unterminated parameter list in {text!r}")
            inner = rest[:-1].strip()
            if inner:
                params = tuple(p.strip() for p in inner.split(","))
                if any(not p for p in params):
                    raise PackageSchemaError(f"empty parameter type in {text!r}")
        else:
            head = text
        cls_name, dot, method = head.rpartition(".")
        if not dot:
            raise PackageSchemaError(f"signature {text!r} must look like Class.method(..)")
        return cls(cls_name, method, params)


@dataclass(frozen=True)
class WidgetFlags:
    is_password: bool = False
    is_clickable: bool = False
    is_long_clickable: bool = False
    is_checkable: bool = False
    is_scrollable: bool = False


@dataclass(frozen=True)
class Rect:
    x0: int
    y0: int
    x1: int
    y1: int

    def __post_init__(self):
        if self.x0 > self.x1 or self.y0 > self.y1:
            raise BoundsViolationError(f"degenerate bounds {self.as_tuple()}")

    def as_tuple(self) -> tuple[int, int, int, int]:
        return (self.x0, self.y0, self.x1, self.y1)

    def contains(self, other: "Rect") -> bool:
        return (
            self.x0 <= other.x0
            and self.y0 <= other.y0
            and other.x1 <= self.x1
            and other.y1 <= self.y1
        )

    @property
    def area(self) -> int:
        return (self.x1 - self.x0) * (self.y1 - self.y0)


@dataclass(frozen=True)
class WidgetDecl:
    widget_id: str
    class_name: str
    bounds: Rect
    text: str | None = None
    flags: WidgetFlags = field(default_factory=WidgetFlags)
    owner_package: str = ""
    children: tuple["WidgetDecl", ...] = ()

    def walk(self) -> Iterator["WidgetDecl"]:
        """Document-order (pre-order) traversal of the subtree."""
        yield self
        for child in self.children:
            yield from child.walk()


@dataclass(frozen=True)
class LayoutTemplate:
    layout_id: str
    screen_size: tuple[int, int]
    widgets: tuple[WidgetDecl, ...]

    def walk(self) -> Iterator[WidgetDecl]:
        for root in self.widgets:
            yield from root.walk()


@dataclass(frozen=True)
class Component:
    component_id: str
    kind: ComponentKind
    layout_id: str | None = None
    exported: bool = False


@dataclass(frozen=True)
class HandlerBinding:
    widget_id: str
    event_type: str
    listener: MethodSig


@dataclass(frozen=True)
class RuntimeAssignment:
    widget_id: str
    attribute: str
    value: str


@dataclass(frozen=True)
class CallGraph:
    nodes: frozenset[MethodSig]
    edges: tuple[tuple[MethodSig, MethodSig], ...]
    handler_bindings: tuple[HandlerBinding, ...] = ()
    runtime_assignments: tuple[RuntimeAssignment, ...] = ()


@dataclass(frozen=True)
class AppPackage:
    package_id: str
    components: tuple[Component, ...]
    layouts: dict[str, LayoutTemplate]
    call_graph: CallGraph
    declared_permissions: frozenset[PermissionType]
    resources: dict[str, str] = field(default_factory=dict)

    def component(self, component_id: str) -> Component | None:
        for c in self.components:
            if c.component_id == component_id:
                return c
        return None

    def widget(self, widget_id: str) -> WidgetDecl | None:
        for layout in self.layouts.values():
            for w in layout.walk():
                if w.widget_id == widget_id:
                    return w
        return None

    def layout_of_widget(self, widget_id: str) -> str | None:
        for layout_id, layout in self.layouts.items():
            if any(w.widget_id == widget_id for w in layout.walk()):
                return layout_id
        return None

    def resolve_text(self, text: str | None) -> str:
        if text is None:
            return ""
        if text.startswith("@@"):
            return text[1:]
        if text.startswith("@"):
            ref = text[1:]
            if ref not in self.resources:
                raise PackageReferenceError(ref, "unresolved resource reference")
            return self.resources[ref]
        return text


@dataclass(frozen=True)
class SensitiveApiMap:
    entries: dict[MethodSig, PermissionType]

    def permission_of(self, api: MethodSig) -> PermissionType | None:
        return self.entries.get(api)

    def __len__(self) -> int:
        return len(self.entries)


# --------------------------------------------------------------------------
# document parsing

_TOP_FIELDS = {
    "format",
    "package_id",
    "components",
    "layouts",
    "call_graph",
    "declared_permissions",
    "resources",
}
_COMPONENT_FIELDS = {"component_id", "kind", "layout_id", "exported"}
_LAYOUT_FIELDS = {"screen_size", "widgets"}
_WIDGET_FIELDS = {"widget_id", "class_name", "text", "bounds", "flags", "owner_package", "children"}
_FLAG_FIELDS = {"is_password", "is_clickable", "is_long_clickable", "is_checkable", "is_scrollable"}
_GRAPH_FIELDS = {"nodes", "edges", "handler_bindings", "runtime_assignments"}

FORMAT_TAG = "apkg/1"


def _check_fields(obj: dict, allowed: set[str], where: str) -> None:
    if not isinstance(obj, dict):
        raise PackageSchemaError(f"{where} must be an object")
    unknown = set(obj) - allowed
    if unknown:
        raise PackageSchemaError(f"unknown field(s) {sorted(unknown)} in {where}")


def _req(obj: dict, key: str, where: str) -> Any:
    if key not in obj:
        raise PackageSchemaError(f"missing field {key!r} in {where}")
    return obj[key]


def _parse_widget(doc: dict, owner_package: str, parent_bounds: Rect | None,
                  screen: Rect, seen_ids: set[str]) -> WidgetDecl:
    _check_fields(doc, _WIDGET_FIELDS, "widget")
    widget_id = _req(doc, "widget_id", "widget")
    if not isinstance(widget_id, str) or not widget_id:
        raise PackageSchemaError("widget_id must be a non-empty string")
    if widget_id in seen_ids:
        raise PackageReferenceError(widget_id, "duplicate widget_id")
    seen_ids.add(widget_id)
    class_name = _req(doc, "class_name", f"widget {widget_id}")
    if not isinstance(class_name, str) or not class_name:
        raise PackageSchemaError(f"widget {widget_id}: class_name must be a non-empty string")
    raw_bounds = _req(doc, "bounds", f"widget {widget_id}")
    if not (isinstance(raw_bounds, list) and len(raw_bounds) == 4
            and all(isinstance(v, int) for v in raw_bounds)):
        raise PackageSchemaError(f"widget {widget_id}: bounds must be [x0, y0, x1, y1] ints")
    bounds = Rect(*raw_bounds)
    container = parent_bounds if parent_bounds is not None else screen
    if not container.contains(bounds):
        raise BoundsViolationError(
            f"widget {widget_id}: bounds {bounds.as_tuple()} exceed "
            f"{'parent' if parent_bounds is not None else 'screen'} {container.as_tuple()}"
        )
    text = doc.get("text")
    if text is not None and not isinstance(text, str):
        raise PackageSchemaError(f"widget {widget_id}: text must be a string")
    flags_doc = doc.get("flags", {})
    _check_fields(flags_doc, _FLAG_FIELDS, f"widget {widget_id} flags")
    if any(not isinstance(v, bool) for v in flags_doc.values()):
        raise PackageSchemaError(f"widget {widget_id}: flags must be booleans")
    owner = doc.get("owner_package", owner_package)
    if not isinstance(owner, str) or not owner:
        raise PackageSchemaError(f"widget {widget_id}: owner_package must be a non-empty string")
    children = tuple(
        _parse_widget(c, owner_package, bounds, screen, seen_ids)
        for c in doc.get("children", [])
    )
    return WidgetDecl(
        widget_id=widget_id,
        class_name=class_name,
        bounds=bounds,
        text=text,
        flags=WidgetFlags(**flags_doc),
        owner_package=owner,
        children=children,
    )


def _parse_sig_entry(value: Any, where: str) -> MethodSig:
    if not isinstance(value, str):
        raise PackageSchemaError(f"{where}: method signature must be a string")
    return MethodSig.parse(value)


def parse_package(text: str) -> AppPackage:
    """Parse and fully cross-validate one package document."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as e:
        raise PackageSyntaxError(e.msg, e.lineno, e.colno) from None
    _check_fields(doc, _TOP_FIELDS, "package document")
    fmt = doc.get("format", FORMAT_TAG)
    if fmt != FORMAT_TAG:
        raise PackageSchemaError(f"unsupported document format {fmt!r}")

    package_id = _req(doc, "package_id", "package document")
    if not isinstance(package_id, str) or not package_id:
        raise PackageSchemaError("package_id must be a non-empty string")

    resources_doc = doc.get("resources", {})
    if not isinstance(resources_doc, dict) or not all(
        isinstance(k, str) and isinstance(v, str) for k, v in resources_doc.items()
    ):
        raise PackageSchemaError("resources must map string names to string values")

    raw_perms = doc.get("declared_permissions", [])
    perms = set()
    for p in raw_perms:
        try:
            perms.add(PermissionType(p))
        except ValueError:
            raise PackageSchemaError(f"unknown permission token {p!r}") from None

    layouts: dict[str, LayoutTemplate] = {}
    seen_widget_ids: set[str] = set()
    layouts_doc = _req(doc, "layouts", "package document")
    if not isinstance(layouts_doc, dict):
        raise PackageSchemaError("layouts must map layout_id to layout objects")
    for layout_id, ldoc in layouts_doc.items():
        _check_fields(ldoc, _LAYOUT_FIELDS, f"layout {layout_id}")
        size = _req(ldoc, "screen_size", f"layout {layout_id}")
        if not (isinstance(size, list) and len(size) == 2
                and all(isinstance(v, int) and v > 0 for v in size)):
            raise PackageSchemaError(f"layout {layout_id}: screen_size must be [w, h] > 0")
        screen = Rect(0, 0, size[0], size[1])
        widgets = tuple(
            _parse_widget(w, package_id, None, screen, seen_widget_ids)
            for w in _req(ldoc, "widgets", f"layout {layout_id}")
        )
        layouts[layout_id] = LayoutTemplate(layout_id, (size[0], size[1]), widgets)

    components: list[Component] = []
    seen_components: set[str] = set()
    for cdoc in _req(doc, "components", "package document"):
        _check_fields(cdoc, _COMPONENT_FIELDS, "component")
        cid = _req(cdoc, "component_id", "component")
        if not isinstance(cid, str) or not cid:
            raise PackageSchemaError("component_id must be a non-empty string")
        if cid in seen_components:
            raise PackageReferenceError(cid, "duplicate component_id")
        seen_components.add(cid)
        try:
            kind = ComponentKind(_req(cdoc, "kind", f"component {cid}"))
        except ValueError:
            raise PackageSchemaError(f"component {cid}: unknown kind") from None
        layout_id = cdoc.get("layout_id")
        if kind is ComponentKind.ACTIVITY:
            if layout_id is None:
                raise PackageSchemaError(f"Activity {cid} must declare a layout_id")
            if layout_id not in layouts:
                raise PackageReferenceError(layout_id, f"Activity {cid} references unknown layout")
        elif layout_id is not None:
            raise PackageSchemaError(f"Service {cid} must not declare a layout_id")
        exported = cdoc.get("exported", False)
        if not isinstance(exported, bool):
            raise PackageSchemaError(f"component {cid}: exported must be a boolean")
        components.append(Component(cid, kind, layout_id, exported))

    graph_doc = doc.get("call_graph", {})
    _check_fields(graph_doc, _GRAPH_FIELDS, "call_graph")
    nodes: set[MethodSig] = set()
    for n in graph_doc.get("nodes", []):
        nodes.add(_parse_sig_entry(n, "call_graph.nodes"))
    edges: list[tuple[MethodSig, MethodSig]] = []
    for e in graph_doc.get("edges", []):
        if not (isinstance(e, list) and len(e) == 2):
            raise PackageSchemaError("call_graph edge must be [caller, callee]")
        caller = _parse_sig_entry(e[0], "call_graph.edges")
        callee = _parse_sig_entry(e[1], "call_graph.edges")
        edges.append((caller, callee))
        nodes.add(caller)
        nodes.add(callee)
    bindings: list[HandlerBinding] = []
    for b in graph_doc.get("handler_bindings", []):
        if not (isinstance(b, list) and len(b) == 3):
            raise PackageSchemaError("handler binding must be [widget_id, event_type, listener]")
        widget_id, event_type, listener = b
        if widget_id not in seen_widget_ids:
            raise PackageReferenceError(widget_id, "handler binding references undeclared widget")
        if event_type not in LISTENER_EVENTS:
            raise PackageSchemaError(
                f"event type {event_type!r} not in listener catalog {sorted(LISTENER_EVENTS)}"
            )
        sig = _parse_sig_entry(listener, "handler_bindings")
        nodes.add(sig)
        bindings.append(HandlerBinding(widget_id, event_type, sig))
    assignments: list[RuntimeAssignment] = []
    for a in graph_doc.get("runtime_assignments", []):
        if not (isinstance(a, list) and len(a) == 3):
            raise PackageSchemaError("runtime assignment must be [widget_id, attribute, value]")
        widget_id, attribute, value = a
        if widget_id not in seen_widget_ids:
            raise PackageReferenceError(widget_id, "runtime assignment targets undeclared widget")
        if attribute not in WIDGET_ATTRIBUTES:
            raise PackageSchemaError(f"unknown widget attribute {attribute!r}")
        if not isinstance(value, str):
            raise PackageSchemaError("runtime assignment value must be a string")
        assignments.append(RuntimeAssignment(widget_id, attribute, value))

    pkg = AppPackage(
        package_id=package_id,
        components=tuple(components),
        layouts=layouts,
        call_graph=CallGraph(
            nodes=frozenset(nodes),
            edges=tuple(edges),
            handler_bindings=tuple(bindings),
            runtime_assignments=tuple(assignments),
        ),
        declared_permissions=frozenset(perms),
        resources=dict(resources_doc),
    )

    # texts (declared and assigned) must resolve through the resource map
    for layout in pkg.layouts.values():
        for w in layout.walk():
            pkg.resolve_text(w.text)
    for a in assignments:
        pkg.resolve_text(a.value)
    return pkg


def _widget_doc(w: WidgetDecl, package_id: str) -> dict:
    doc: dict[str, Any] = {
        "widget_id": w.widget_id,
        "class_name": w.class_name,
        "bounds": list(w.bounds.as_tuple()),
    }
    if w.text is not None:
        doc["text"] = w.text
    flags = {
        name: getattr(w.flags, name)
        for name in sorted(_FLAG_FIELDS)
        if getattr(w.flags, name)
    }
    if flags:
        doc["flags"] = flags
    if w.owner_package and w.owner_package != package_id:
        doc["owner_package"] = w.owner_package
    if w.children:
        doc["children"] = [_widget_doc(c, package_id) for c in w.children]
    return doc


def serialize_package(pkg: AppPackage) -> str:
    """Canonical document form; parse(serialize(pkg)) == pkg."""
    doc: dict[str, Any] = {
        "format": FORMAT_TAG,
        "package_id": pkg.package_id,
        "declared_permissions": sorted(p.value for p in pkg.declared_permissions),
        "components": [
            {
                "component_id": c.component_id,
                "kind": c.kind.value,
                **({"layout_id": c.layout_id} if c.layout_id is not None else {}),
                "exported": c.exported,
            }
            for c in pkg.components
        ],
        "layouts": {
            layout_id: {
                "screen_size": list(layout.screen_size),
                "widgets": [_widget_doc(w, pkg.package_id) for w in layout.widgets],
            }
            for layout_id, layout in pkg.layouts.items()
        },
        "call_graph": {
            "nodes": sorted(n.signature for n in pkg.call_graph.nodes),
            "edges": [[a.signature, b.signature] for a, b in pkg.call_graph.edges],
            "handler_bindings": [
                [b.widget_id, b.event_type, b.listener.signature]
                for b in pkg.call_graph.handler_bindings
            ],
            "runtime_assignments": [
                [a.widget_id, a.attribute, a.value]
                for a in pkg.call_graph.runtime_assignments
            ],
        },
    }
    if pkg.resources:
        doc["resources"] = dict(sorted(pkg.resources.items()))
    return json.dumps(doc, indent=2) + "\n"


def load_sensitive_api_map(text: str) -> SensitiveApiMap:
    """Parse "signature -> PERMISSION" lines; '#' starts a comment."""
    entries: dict[MethodSig, PermissionType] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        line = line.replace("→", "->")
        sig_text, sep, perm_text = line.partition("->")
        if not sep:
            raise ApiMapError(f"line {lineno}: expected 'signature -> PERMISSION'")
        try:
            sig = MethodSig.parse(sig_text)
        except PackageSchemaError as e:
            raise ApiMapError(f"line {lineno}: {e}") from None
        perm_token = perm_text.strip()
        try:
            perm = PermissionType(perm_token)
        except ValueError:
            raise ApiMapError(f"line {lineno}: unknown permission token {perm_token!r}") from None
        if sig in entries:
            raise ApiMapError(f"line {lineno}: duplicate signature {sig.signature}")
        entries[sig] = perm
    return SensitiveApiMap(entries)


def default_sensitive_api_map() -> SensitiveApiMap:
    text = (
        resources.files("ctxgate.data")
        .joinpath(f"sensitive_api_{SENSITIVE_API_VERSION}.map")
        .read_text(encoding="utf-8")
    )
    return load_sensitive_api_map(text)
