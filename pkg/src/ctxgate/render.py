"""Window rendering: layout templates to resolved snapshots.

Applies the runtime text assignments recorded in the call graph, resolves
resource references, and maps absolute pixel geometry to resolution-free
form: a 3x3 grid cell per widget plus the fraction of screen area it
covers. Rendering is pure; snapshot identity comes from the caller's run
context.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

from .appmodel import AppPackage, ComponentKind, Rect, WidgetFlags


class RenderError(Exception):
    pass


class UnknownActivityError(RenderError):
    pass


GRID_SIDE = 3


def grid_map(bounds: Rect, screen: tuple[int, int]) -> int:
    """Row-major 3x3 cell index of the widget's center point.

    Integer arithmetic on the doubled center keeps the mapping exact and
    invariant under uniform scaling. Intervals are half-open; a center
    sitting on the far screen edge clamps into the last row/column.
    """
    w, h = screen
    col = (GRID_SIDE * (bounds.x0 + bounds.x1)) // (2 * w)
    row = (GRID_SIDE * (bounds.y0 + bounds.y1)) // (2 * h)
    col = min(col, GRID_SIDE - 1)
    row = min(row, GRID_SIDE - 1)
    return GRID_SIDE * row + col


@dataclass(frozen=True)
class RenderedWidget:
    widget_id: str
    class_name: str
    resolved_text: str
    cell: int
    size_fraction: float
    flags: WidgetFlags
    owner_package: str
    bounds: Rect


@dataclass(frozen=True)
class WindowSnapshot:
    snapshot_id: str
    package_id: str
    activity_id: str
    screen_size: tuple[int, int]
    widgets: tuple[RenderedWidget, ...]
    rendered_at: int

    def widget(self, widget_id: str) -> RenderedWidget | None:
        for w in self.widgets:
            if w.widget_id == widget_id:
                return w
        return None


def render_window(
    pkg: AppPackage,
    activity_id: str,
    rendered_at: int = 0,
    snapshot_id: str | None = None,
) -> WindowSnapshot:
    """Render one Activity: assignments applied, texts resolved, geometry
    mapped to grid cells. Widgets appear in document order of the layout."""
    component = pkg.component(activity_id)
    if component is None or component.kind is not ComponentKind.ACTIVITY:
        raise UnknownActivityError(f"no Activity {activity_id!r} in {pkg.package_id}")
    layout = pkg.layouts[component.layout_id]
    declared = {w.widget_id for w in layout.walk()}

    all_ids = {w.widget_id for layout_ in pkg.layouts.values() for w in layout_.walk()}
    # last assignment wins, mirroring execution order
    overrides: dict[str, str] = {}
    for a in pkg.call_graph.runtime_assignments:
        if a.widget_id not in all_ids:
            raise RenderError(f"runtime assignment targets undeclared widget {a.widget_id!r}")
        if a.widget_id in declared and a.attribute == "text":
            overrides[a.widget_id] = a.value

    w_px, h_px = layout.screen_size
    screen_area = w_px * h_px
    widgets = []
    for decl in layout.walk():
        if decl.widget_id in overrides:
            text = pkg.resolve_text(overrides[decl.widget_id])
        else:
            text = pkg.resolve_text(decl.text)
        widgets.append(
            RenderedWidget(
                widget_id=decl.widget_id,
                class_name=decl.class_name,
                resolved_text=text,
                cell=grid_map(decl.bounds, layout.screen_size),
                size_fraction=decl.bounds.area / screen_area,
                flags=decl.flags,
                owner_package=decl.owner_package or pkg.package_id,
                bounds=decl.bounds,
            )
        )
    # ids stay free of '/' so they can ride in URL paths
    if snapshot_id is None:
        snapshot_id = f"{pkg.package_id}:{activity_id}@{rendered_at}"
    return WindowSnapshot(
        snapshot_id=snapshot_id,
        package_id=pkg.package_id,
        activity_id=activity_id,
        screen_size=layout.screen_size,
        widgets=tuple(widgets),
        rendered_at=rendered_at,
    )


def snapshot_to_doc(snapshot: WindowSnapshot) -> dict:
    return {
        "format": "snap/1",
        "snapshot_id": snapshot.snapshot_id,
        "package_id": snapshot.package_id,
        "activity_id": snapshot.activity_id,
        "screen_size": list(snapshot.screen_size),
        "rendered_at": snapshot.rendered_at,
        "widgets": [
            {
                "widget_id": w.widget_id,
                "class_name": w.class_name,
                "resolved_text": w.resolved_text,
                "cell": w.cell,
                "size_fraction": w.size_fraction,
                "flags": {
                    "is_password": w.flags.is_password,
                    "is_clickable": w.flags.is_clickable,
                    "is_long_clickable": w.flags.is_long_clickable,
                    "is_checkable": w.flags.is_checkable,
                    "is_scrollable": w.flags.is_scrollable,
                },
                "owner_package": w.owner_package,
                "bounds": list(w.bounds.as_tuple()),
            }
            for w in snapshot.widgets
        ],
    }


def snapshot_from_doc(doc: dict) -> WindowSnapshot:
    if doc.get("format", "snap/1") != "snap/1":
        raise RenderError(f"unsupported snapshot format {doc.get('format')!r}")
    return WindowSnapshot(
        snapshot_id=doc["snapshot_id"],
        package_id=doc["package_id"],
        activity_id=doc["activity_id"],
        screen_size=tuple(doc["screen_size"]),
        rendered_at=doc["rendered_at"],
        widgets=tuple(
            RenderedWidget(
                widget_id=w["widget_id"],
                class_name=w["class_name"],
                resolved_text=w["resolved_text"],
                cell=w["cell"],
                size_fraction=w["size_fraction"],
                flags=WidgetFlags(**w["flags"]),
                owner_package=w["owner_package"],
                bounds=Rect(*w["bounds"]),
            )
            for w in doc["widgets"]
        ),
    )


def serialize_snapshot(snapshot: WindowSnapshot) -> str:
    return json.dumps(snapshot_to_doc(snapshot), indent=2) + "\n"


def parse_snapshot(text: str) -> WindowSnapshot:
    return snapshot_from_doc(json.loads(text))
