// Console wiring: a poll loop over /v1/pending, one prompt on screen at a
// time, decisions submitted optimistically with rollback on failure. All
// durable state lives server-side; refreshing the page loses nothing.

import { ApiError, GatewayClient, Snapshot, TicketSummary } from "./api.js";
import {
  renderError,
  renderIdle,
  renderLastDecision,
  renderPrompt,
  renderStats,
} from "./dom.js";
import { buildPromptView } from "./promptview.js";
import {
  ConsoleState,
  currentTicket,
  decisionFailed,
  decisionSucceeded,
  initialState,
  mergePending,
  optimisticRemove,
} from "./state.js";

const POLL_INTERVAL_MS = 1000;
const VIEWPORT = { width: 360, height: 640 };

const client = new GatewayClient("");
let state: ConsoleState = initialState();
let gridVisible = false;
const snapshotCache = new Map<string, Snapshot>();

const promptRoot = document.getElementById("prompt")!;
const statsRoot = document.getElementById("stats")!;
const errorRoot = document.getElementById("errors")!;
const decisionRoot = document.getElementById("decision")!;

async function snapshotFor(ticket: TicketSummary): Promise<Snapshot | null> {
  if (ticket.snapshot_id === null) {
    return null;
  }
  const cached = snapshotCache.get(ticket.snapshot_id);
  if (cached) {
    return cached;
  }
  try {
    const snapshot = await client.getSnapshot(ticket.snapshot_id);
    snapshotCache.set(ticket.snapshot_id, snapshot);
    return snapshot;
  } catch {
    return null;
  }
}

async function redraw(): Promise<void> {
  renderError(errorRoot, state.error);
  renderLastDecision(decisionRoot, state.lastDecision);
  const ticket = currentTicket(state);
  if (ticket === null) {
    renderIdle(promptRoot);
    return;
  }
  const snapshot = await snapshotFor(ticket);
  const view = buildPromptView(ticket, snapshot, VIEWPORT);
  renderPrompt(promptRoot, view, gridVisible, submitDecision, () => {
    gridVisible = !gridVisible;
    void redraw();
  });
}

function submitDecision(ticketId: string, allow: boolean): void {
  const ticket = state.tickets.find((t) => t.ticket_id === ticketId);
  if (!ticket) {
    return;
  }
  state = optimisticRemove(state, ticketId);
  void redraw();
  client
    .submitDecision(ticketId, allow)
    .then((response) => {
      state = decisionSucceeded(state, ticketId, allow, response.post_p_legal);
      return refreshStats();
    })
    .catch((err: unknown) => {
      const conflict = err instanceof ApiError && (err.status === 404 || err.status === 409);
      const message = err instanceof Error ? err.message : String(err);
      state = decisionFailed(state, ticket, message, conflict);
    })
    .finally(() => {
      void redraw();
    });
}

async function refreshStats(): Promise<void> {
  try {
    renderStats(statsRoot, await client.getStats());
  } catch {
    // stats are cosmetic; keep the queue usable if they fail
  }
}

async function poll(): Promise<void> {
  try {
    const pending = await client.getPending();
    state = mergePending(state, pending);
    if (state.error?.startsWith("gateway unreachable")) {
      state = { ...state, error: null };
    }
  } catch (err: unknown) {
    const message = err instanceof Error ? err.message : String(err);
    state = { ...state, error: `gateway unreachable: ${message}` };
  }
  await redraw();
}

void refreshStats();
void poll();
window.setInterval(() => {
  void poll();
  void refreshStats();
}, POLL_INTERVAL_MS);
