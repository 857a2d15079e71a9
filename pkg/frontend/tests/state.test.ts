import { describe, expect, it } from "vitest";

import type { TicketSummary } from "../src/api.js";
import {
  currentTicket,
  decisionFailed,
  decisionSucceeded,
  initialState,
  mergePending,
  optimisticRemove,
} from "../src/state.js";

function ticket(id: string, createdAt: number): TicketSummary {
  return {
    ticket_id: id,
    permission: "LOCATION",
    package_id: "com.app",
    snapshot_id: `snap-${id}`,
    highlighted_widget: null,
    entry_event: "onClick",
    created_at: createdAt,
  };
}

describe("mergePending", () => {
  it("orders tickets oldest first", () => {
    const state = mergePending(initialState(), [ticket("b", 5), ticket("a", 1)]);
    expect(state.tickets.map((t) => t.ticket_id)).toEqual(["a", "b"]);
    expect(currentTicket(state)?.ticket_id).toBe("a");
  });

  it("keeps in-flight tickets hidden while polling", () => {
    let state = mergePending(initialState(), [ticket("a", 1), ticket("b", 2)]);
    state = optimisticRemove(state, "a");
    state = mergePending(state, [ticket("a", 1), ticket("b", 2)]);
    expect(state.tickets.map((t) => t.ticket_id)).toEqual(["b"]);
  });

  it("empty queue yields idle state", () => {
    const state = mergePending(initialState(), []);
    expect(currentTicket(state)).toBeNull();
  });
});

describe("decision flow", () => {
  it("optimistic removal then success records the post-update score", () => {
    let state = mergePending(initialState(), [ticket("a", 1)]);
    state = optimisticRemove(state, "a");
    expect(state.tickets).toEqual([]);
    state = decisionSucceeded(state, "a", false, 0.07);
    expect(state.inFlight).toEqual([]);
    expect(state.lastDecision).toEqual({ ticketId: "a", allow: false, postPLegal: 0.07 });
    expect(state.error).toBeNull();
  });

  it("rolls back on transport failure", () => {
    const t = ticket("a", 1);
    let state = mergePending(initialState(), [t]);
    state = optimisticRemove(state, "a");
    state = decisionFailed(state, t, "gateway unreachable", false);
    expect(state.tickets.map((x) => x.ticket_id)).toEqual(["a"]);
    expect(state.error).toBe("gateway unreachable");
  });

  it("does not resurrect a ticket on 404/409", () => {
    const t = ticket("a", 1);
    let state = mergePending(initialState(), [t]);
    state = optimisticRemove(state, "a");
    state = decisionFailed(state, t, "ticket already resolved", true);
    expect(state.tickets).toEqual([]);
    expect(state.error).toBe("ticket already resolved");
  });
});
