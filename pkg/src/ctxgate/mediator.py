"""Online mediation runtime.

Replays device event traces against loaded packages: tracks the foreground
Activity, the latest invoked widget and Activity-to-Service origins;
attributes each sensitive call to its UI context from the call stack and
those records; scores it with the per-permission model; and applies the
three-way policy (allow / deny / ask the user). User answers to prompts
feed straight back into the model.

The runtime is a single-writer event loop over one DeviceState; anything
that mutates state (trace replay, prompt resolution) must be serialized by
the caller, reads are safe alongside each other.
"""

from __future__ import annotations

import json
import math
import time
from dataclasses import dataclass, field
from enum import Enum

from .analyzer import EntryKind, EntryPointRecord, entry_kind_of
from .appmodel import (
    AppPackage,
    ComponentKind,
    MethodSig,
    PermissionType,
    SensitiveApiMap,
)
from .features import ContextFeatures, FEATURE_SETS, assemble_features, empty_features
from .learners import Label, PermissionModel, TrainExample
from .render import WindowSnapshot, render_window


class MediatorError(Exception):
    pass


class TraceOrderError(MediatorError):
    pass


class UnknownIdError(MediatorError):
    pass


class UnknownApiError(MediatorError):
    pass


class UnknownTicketError(MediatorError):
    pass


class AlreadyResolvedError(MediatorError):
    pass


class NotExpiredError(MediatorError):
    pass


class TraceReplayError(MediatorError):
    def __init__(self, index: int, cause: Exception):
        super().__init__(f"event {index}: {cause}")
        self.index = index
        self.cause = cause


class EventKind(Enum):
    LAUNCH_ACTIVITY = "LaunchActivity"
    LIFECYCLE_CALLBACK = "LifecycleCallback"
    LISTENER_INVOKE = "ListenerInvoke"
    START_SERVICE = "StartService"
    SENSITIVE_CALL = "SensitiveCall"
    OVERLAY_SHOW = "OverlayShow"
    STOP_COMPONENT = "StopComponent"


class Verdict(Enum):
    ALLOW = "Allow"
    DENY = "Deny"
    PROMPTED = "Prompted"


class DecisionSource(Enum):
    MODEL = "Model"
    USER = "User"
    TIMEOUT_POLICY = "TimeoutPolicy"


class BackgroundPolicy(Enum):
    PROMPT = "prompt"
    ALWAYS_DENY = "always-deny"


@dataclass(frozen=True)
class TraceEvent:
    time: int
    kind: EventKind
    package: str = ""
    component: str = ""
    widget_id: str = ""
    method: str = ""
    stack: tuple[MethodSig, ...] = ()

    def to_doc(self) -> dict:
        doc: dict = {"time": self.time, "kind": self.kind.value}
        if self.package:
            doc["package"] = self.package
        if self.component:
            doc["component"] = self.component
        if self.widget_id:
            doc["widget_id"] = self.widget_id
        if self.method:
            doc["method"] = self.method
        if self.stack:
            doc["stack"] = [s.signature for s in self.stack]
        return doc

    @classmethod
    def from_doc(cls, doc: dict) -> "TraceEvent":
        return cls(
            time=int(doc["time"]),
            kind=EventKind(doc["kind"]),
            package=doc.get("package", ""),
            component=doc.get("component", ""),
            widget_id=doc.get("widget_id", ""),
            method=doc.get("method", ""),
            stack=tuple(MethodSig.parse(s) for s in doc.get("stack", [])),
        )


def serialize_trace(events: list[TraceEvent]) -> str:
    return "".join(json.dumps(e.to_doc()) + "\n" for e in events)


def parse_trace(text: str) -> list[TraceEvent]:
    events = []
    for line in text.splitlines():
        if line.strip():
            events.append(TraceEvent.from_doc(json.loads(line)))
    return events


@dataclass(frozen=True)
class RequestRecord:
    request_id: str
    permission: PermissionType
    package_id: str
    features: ContextFeatures
    verdict: Verdict
    decision_source: DecisionSource
    p_legal: float
    latency_ms: float
    time: int

    def to_doc(self) -> dict:
        return {
            "request_id": self.request_id,
            "permission": self.permission.value,
            "package_id": self.package_id,
            "verdict": self.verdict.value,
            "decision_source": self.decision_source.value,
            "p_legal": self.p_legal,
            "latency_ms": self.latency_ms,
            "time": self.time,
            "features": self.features.to_doc(),
        }


@dataclass
class PromptTicket:
    ticket_id: str
    permission: PermissionType
    package_id: str
    features: ContextFeatures
    snapshot: WindowSnapshot | None
    highlighted_widget: str | None
    entry_event: str
    created_at: int
    p_legal: float
    latency_ms: float

    def summary(self) -> dict:
        return {
            "ticket_id": self.ticket_id,
            "permission": self.permission.value,
            "package_id": self.package_id,
            "snapshot_id": self.snapshot.snapshot_id if self.snapshot else None,
            "highlighted_widget": self.highlighted_widget,
            "entry_event": self.entry_event,
            "created_at": self.created_at,
        }


@dataclass
class MediatorConfig:
    background_policy: BackgroundPolicy = BackgroundPolicy.PROMPT
    prompt_timeout: float = 30.0  # trace-clock seconds
    enabled_sets: frozenset[str] = frozenset(FEATURE_SETS)


@dataclass
class DeviceState:
    packages: dict[str, AppPackage]
    api_map: SensitiveApiMap
    models: dict[PermissionType, PermissionModel]
    config: MediatorConfig = field(default_factory=MediatorConfig)
    clock: int = -1
    foreground: tuple[str, str] | None = None  # (package, activity)
    latest_widget: tuple[str, str] | None = None  # (widget_id, owner package)
    latest_snapshot: WindowSnapshot | None = None
    service_origin: dict[tuple[str, str], str] = field(default_factory=dict)
    pending: dict[str, PromptTicket] = field(default_factory=dict)
    resolved: set[str] = field(default_factory=set)
    records: list[RequestRecord] = field(default_factory=list)
    snapshots: dict[str, WindowSnapshot] = field(default_factory=dict)
    request_counter: int = 0
    ticket_counter: int = 0

    def package(self, package_id: str) -> AppPackage:
        if package_id not in self.packages:
            raise UnknownIdError(f"no loaded package {package_id!r}")
        return self.packages[package_id]

    def model_for(self, permission: PermissionType) -> PermissionModel:
        if permission not in self.models:
            raise UnknownIdError(f"no model loaded for {permission.value}")
        return self.models[permission]


def extract_entry_from_stack(stack: tuple[MethodSig, ...]) -> EntryPointRecord | None:
    """Outermost stack frame (given first) that is a catalog method."""
    for sig in stack:
        kind = entry_kind_of(sig)
        if kind is not None:
            return EntryPointRecord(
                entry=sig,
                kind=kind,
                event_type=sig.method_name if kind is EntryKind.LISTENER else None,
            )
    return None


def _set_foreground(state: DeviceState, package_id: str, activity_id: str) -> None:
    pkg = state.package(package_id)
    comp = pkg.component(activity_id)
    if comp is None or comp.kind is not ComponentKind.ACTIVITY:
        raise UnknownIdError(f"no Activity {activity_id!r} in {package_id!r}")
    state.foreground = (package_id, activity_id)
    snapshot = render_window(pkg, activity_id, rendered_at=state.clock)
    state.latest_snapshot = snapshot
    state.snapshots[snapshot.snapshot_id] = snapshot


def _clear_widget_if_hosted_by(state: DeviceState, package_id: str, component_id: str) -> None:
    if state.latest_widget is None:
        return
    widget_id, owner = state.latest_widget
    if owner != package_id:
        return
    pkg = state.packages.get(owner)
    if pkg is None:
        state.latest_widget = None
        return
    layout_id = pkg.layout_of_widget(widget_id)
    comp = pkg.component(component_id)
    if layout_id is None or (comp is not None and comp.layout_id == layout_id):
        state.latest_widget = None


def apply_event(state: DeviceState, event: TraceEvent) -> None:
    """Fold one non-sensitive event into the state; sensitive calls go
    through on_sensitive_call."""
    if event.time <= state.clock:
        raise TraceOrderError(
            f"event time {event.time} does not advance past {state.clock}"
        )
    state.clock = event.time
    kind = event.kind
    if kind is EventKind.LAUNCH_ACTIVITY:
        _set_foreground(state, event.package, event.component)
    elif kind is EventKind.LIFECYCLE_CALLBACK:
        pkg = state.package(event.package)
        comp = pkg.component(event.component)
        if comp is None:
            raise UnknownIdError(f"no component {event.component!r} in {event.package!r}")
        if comp.kind is ComponentKind.ACTIVITY and event.method in ("onCreate", "onStart", "onResume"):
            _set_foreground(state, event.package, event.component)
    elif kind is EventKind.LISTENER_INVOKE:
        pkg = state.package(event.package)
        if pkg.widget(event.widget_id) is None:
            raise UnknownIdError(f"no widget {event.widget_id!r} in {event.package!r}")
        state.latest_widget = (event.widget_id, event.package)
    elif kind is EventKind.START_SERVICE:
        pkg = state.package(event.package)
        comp = pkg.component(event.component)
        if comp is None or comp.kind is not ComponentKind.SERVICE:
            raise UnknownIdError(f"no Service {event.component!r} in {event.package!r}")
        if state.foreground is not None:
            state.service_origin[(event.package, event.component)] = state.foreground[1]
    elif kind is EventKind.OVERLAY_SHOW:
        # foreign package need not be loaded; the widget is recorded with
        # its true owner so attribution can reject it later
        state.latest_widget = (event.widget_id, event.package)
    elif kind is EventKind.STOP_COMPONENT:
        _clear_widget_if_hosted_by(state, event.package, event.component)
        if state.foreground == (event.package, event.component):
            state.foreground = None
            state.latest_snapshot = None
        state.service_origin.pop((event.package, event.component), None)
    elif kind is EventKind.SENSITIVE_CALL:
        raise MediatorError("sensitive calls must go through on_sensitive_call")
    else:  # pragma: no cover
        raise MediatorError(f"unhandled event kind {kind}")


@dataclass(frozen=True)
class AttributedContext:
    snapshot: WindowSnapshot | None
    trigger_widget: str | None
    entries: tuple[EntryPointRecord, ...]
    orphan_service: bool = False


def attribute_context(state: DeviceState, event: TraceEvent) -> AttributedContext:
    """Recover the foreground context of one sensitive call.

    Service-originated calls borrow the snapshot of the Activity that
    started the service; a service without a recorded origin has no
    context at all. Widgets owned by a package other than the requester
    are dropped (GUI spoofing defense)."""
    pkg = state.package(event.package)
    stack = event.stack
    entry = extract_entry_from_stack(stack)
    outer_comp = pkg.component(stack[0].class_name) if stack else None
    if outer_comp is not None and outer_comp.kind is ComponentKind.SERVICE:
        origin = state.service_origin.get((event.package, outer_comp.component_id))
        if origin is None:
            return AttributedContext(None, None, (), orphan_service=True)
        snapshot = render_window(pkg, origin, rendered_at=state.clock)
        state.snapshots[snapshot.snapshot_id] = snapshot
        return AttributedContext(snapshot, None, (entry,) if entry else ())

    snapshot = state.latest_snapshot
    trigger = None
    if state.latest_widget is not None and snapshot is not None:
        widget_id, owner = state.latest_widget
        if owner == event.package and snapshot.widget(widget_id) is not None:
            trigger = widget_id
    return AttributedContext(snapshot, trigger, (entry,) if entry else ())


def decide(p_legal: float, thresholds: tuple[float, float]) -> Verdict:
    if not 0.0 <= p_legal <= 1.0:
        raise ValueError(f"p_legal {p_legal} out of [0, 1]")
    tau_lo, tau_hi = thresholds
    if p_legal >= tau_hi:
        return Verdict.ALLOW
    if p_legal <= tau_lo:
        return Verdict.DENY
    return Verdict.PROMPTED


def _next_request_id(state: DeviceState) -> str:
    state.request_counter += 1
    return f"r{state.request_counter:06d}"


def _close_record(
    state: DeviceState,
    record: RequestRecord,
) -> RequestRecord:
    state.records.append(record)
    return record


def on_sensitive_call(
    state: DeviceState, event: TraceEvent
) -> RequestRecord | PromptTicket:
    """Mediate one sensitive call: attribute, featurize, score, decide."""
    if event.time <= state.clock:
        raise TraceOrderError(
            f"event time {event.time} does not advance past {state.clock}"
        )
    state.clock = event.time
    if not event.stack:
        raise MediatorError("sensitive call event carries no stack")
    api = event.stack[-1]
    permission = state.api_map.permission_of(api)
    if permission is None:
        raise UnknownApiError(f"{api.signature} is not a mapped sensitive API")

    started = time.perf_counter()
    ctx = attribute_context(state, event)
    if ctx.orphan_service:
        features = empty_features()
        latency = (time.perf_counter() - started) * 1000.0
        if state.config.background_policy is BackgroundPolicy.ALWAYS_DENY:
            return _close_record(
                state,
                RequestRecord(
                    request_id=_next_request_id(state),
                    permission=permission,
                    package_id=event.package,
                    features=features,
                    verdict=Verdict.DENY,
                    decision_source=DecisionSource.TIMEOUT_POLICY,
                    p_legal=0.0,
                    latency_ms=latency,
                    time=event.time,
                ),
            )
        return _enqueue_prompt(
            state, event, permission, features, None, None,
            entry_event="background", p_legal=0.5, latency_ms=latency,
        )

    features = assemble_features(
        ctx.snapshot, ctx.entries, ctx.trigger_widget, state.config.enabled_sets
    )
    model = state.model_for(permission)
    p_legal = model.predict(features)
    verdict = decide(p_legal, model.thresholds)
    latency = (time.perf_counter() - started) * 1000.0

    if verdict is Verdict.PROMPTED:
        entry_event = "background"
        if ctx.entries:
            first = ctx.entries[0]
            entry_event = first.event_type or first.entry.method_name
        return _enqueue_prompt(
            state, event, permission, features, ctx.snapshot, ctx.trigger_widget,
            entry_event=entry_event, p_legal=p_legal, latency_ms=latency,
        )
    return _close_record(
        state,
        RequestRecord(
            request_id=_next_request_id(state),
            permission=permission,
            package_id=event.package,
            features=features,
            verdict=verdict,
            decision_source=DecisionSource.MODEL,
            p_legal=p_legal,
            latency_ms=latency,
            time=event.time,
        ),
    )


def _enqueue_prompt(
    state: DeviceState,
    event: TraceEvent,
    permission: PermissionType,
    features: ContextFeatures,
    snapshot: WindowSnapshot | None,
    highlighted_widget: str | None,
    entry_event: str,
    p_legal: float,
    latency_ms: float,
) -> PromptTicket:
    state.ticket_counter += 1
    ticket = PromptTicket(
        ticket_id=f"t{state.ticket_counter:06d}",
        permission=permission,
        package_id=event.package,
        features=features,
        snapshot=snapshot,
        highlighted_widget=highlighted_widget,
        entry_event=entry_event,
        created_at=event.time,
        p_legal=p_legal,
        latency_ms=latency_ms,
    )
    if snapshot is not None:
        state.snapshots[snapshot.snapshot_id] = snapshot
    state.pending[ticket.ticket_id] = ticket
    return ticket


def _take_pending(state: DeviceState, ticket_id: str) -> PromptTicket:
    if ticket_id not in state.pending:
        if ticket_id in state.resolved:
            raise AlreadyResolvedError(f"ticket {ticket_id} was already resolved")
        raise UnknownTicketError(f"no pending ticket {ticket_id}")
    return state.pending[ticket_id]


def resolve_prompt(
    state: DeviceState, ticket_id: str, user_allows: bool
) -> RequestRecord:
    """Close a prompt with the user's answer and fold it into the model."""
    ticket = _take_pending(state, ticket_id)
    model = state.model_for(ticket.permission)
    model.update(
        TrainExample(
            features=ticket.features,
            label=Label.LEGAL if user_allows else Label.ILLEGAL,
            permission=ticket.permission,
        )
    )
    del state.pending[ticket_id]
    state.resolved.add(ticket_id)
    return _close_record(
        state,
        RequestRecord(
            request_id=_next_request_id(state),
            permission=ticket.permission,
            package_id=ticket.package_id,
            features=ticket.features,
            verdict=Verdict.ALLOW if user_allows else Verdict.DENY,
            decision_source=DecisionSource.USER,
            p_legal=ticket.p_legal,
            latency_ms=ticket.latency_ms,
            time=ticket.created_at,
        ),
    )


def expire_prompt(state: DeviceState, ticket_id: str) -> RequestRecord:
    """Fail-closed timeout: deny without updating the model."""
    ticket = _take_pending(state, ticket_id)
    timeout = state.config.prompt_timeout
    if math.isinf(timeout) or state.clock - ticket.created_at < timeout:
        raise NotExpiredError(
            f"ticket {ticket_id} created at {ticket.created_at} has not "
            f"exceeded the {timeout}s timeout at clock {state.clock}"
        )
    del state.pending[ticket_id]
    state.resolved.add(ticket_id)
    return _close_record(
        state,
        RequestRecord(
            request_id=_next_request_id(state),
            permission=ticket.permission,
            package_id=ticket.package_id,
            features=ticket.features,
            verdict=Verdict.DENY,
            decision_source=DecisionSource.TIMEOUT_POLICY,
            p_legal=ticket.p_legal,
            latency_ms=ticket.latency_ms,
            time=ticket.created_at,
        ),
    )


def override_decision(
    state: DeviceState, request_id: str, user_allows: bool
) -> RequestRecord:
    """Let the user correct a closed automatic decision after the fact.

    Emits a corrective record and feeds the model exactly like a prompt
    answer would; the original record stays in the log."""
    original = next((r for r in state.records if r.request_id == request_id), None)
    if original is None:
        raise UnknownIdError(f"no request record {request_id!r}")
    if original.decision_source is DecisionSource.USER:
        raise AlreadyResolvedError(f"{request_id} was already decided by the user")
    model = state.model_for(original.permission)
    model.update(
        TrainExample(
            features=original.features,
            label=Label.LEGAL if user_allows else Label.ILLEGAL,
            permission=original.permission,
        )
    )
    return _close_record(
        state,
        RequestRecord(
            request_id=_next_request_id(state),
            permission=original.permission,
            package_id=original.package_id,
            features=original.features,
            verdict=Verdict.ALLOW if user_allows else Verdict.DENY,
            decision_source=DecisionSource.USER,
            p_legal=original.p_legal,
            latency_ms=0.0,
            time=original.time,
        ),
    )


def run_trace(
    state: DeviceState,
    events: list[TraceEvent],
    prompt_handler=None,
) -> list[RequestRecord]:
    """Replay a time-ordered trace; returns the records closed on the way.

    `prompt_handler(ticket) -> bool | None` may answer prompts inline (a
    simulated user); unanswered tickets stay pending on the state."""
    closed: list[RequestRecord] = []
    for index, event in enumerate(events):
        try:
            if event.kind is EventKind.SENSITIVE_CALL:
                outcome = on_sensitive_call(state, event)
                if isinstance(outcome, RequestRecord):
                    closed.append(outcome)
                elif prompt_handler is not None:
                    answer = prompt_handler(outcome)
                    if answer is not None:
                        closed.append(resolve_prompt(state, outcome.ticket_id, bool(answer)))
            else:
                apply_event(state, event)
        except MediatorError as e:
            raise TraceReplayError(index, e) from e
    return closed


def write_decision_log(records: list[RequestRecord], path) -> None:
    with open(path, "a", encoding="utf-8") as f:
        for r in records:
            f.write(json.dumps(r.to_doc()) + "\n")
