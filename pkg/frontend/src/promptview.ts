// View model for one pending prompt: everything the DOM layer materializes,
// computed from the ticket and its snapshot so it stays testable headless.

import type { Snapshot, TicketSummary } from "./api.js";
import { Box, GridLines, Viewport, gridLines, scaleBounds, windowBox } from "./layout.js";

export interface WidgetBox {
  widgetId: string;
  label: string;
  box: Box;
  highlighted: boolean;
  clickable: boolean;
}

export interface PromptView {
  ticketId: string;
  meta: { permission: string; packageId: string; entryEvent: string };
  banner: string | null;
  rawFields: Record<string, string> | null;
  window: Box | null;
  widgets: WidgetBox[];
  grid: GridLines | null;
}

export function widgetLabel(w: { resolved_text: string; class_name: string }): string {
  return w.resolved_text !== "" ? w.resolved_text : `<${w.class_name}>`;
}

export function buildPromptView(
  ticket: TicketSummary,
  snapshot: Snapshot | null,
  viewport: Viewport,
): PromptView {
  const meta = {
    permission: ticket.permission,
    packageId: ticket.package_id,
    entryEvent: ticket.entry_event,
  };
  if (ticket.snapshot_id === null) {
    return {
      ticketId: ticket.ticket_id,
      meta,
      banner: "background request, no foreground context",
      rawFields: null,
      window: null,
      widgets: [],
      grid: null,
    };
  }
  if (snapshot === null) {
    // snapshot not retrievable: degrade to the raw ticket fields
    return {
      ticketId: ticket.ticket_id,
      meta,
      banner: null,
      rawFields: {
        ticket_id: ticket.ticket_id,
        permission: ticket.permission,
        package_id: ticket.package_id,
        snapshot_id: ticket.snapshot_id,
        entry_event: ticket.entry_event,
        highlighted_widget: ticket.highlighted_widget ?? "(none)",
      },
      window: null,
      widgets: [],
      grid: null,
    };
  }
  const widgets = snapshot.widgets.map((w) => ({
    widgetId: w.widget_id,
    label: widgetLabel(w),
    box: scaleBounds(w.bounds, snapshot.screen_size, viewport),
    highlighted: w.widget_id === ticket.highlighted_widget,
    clickable: w.flags.is_clickable,
  }));
  return {
    ticketId: ticket.ticket_id,
    meta,
    banner: null,
    rawFields: null,
    window: windowBox(snapshot.screen_size, viewport),
    widgets,
    grid: gridLines(snapshot.screen_size, viewport),
  };
}
