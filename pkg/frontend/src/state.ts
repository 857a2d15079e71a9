// Console queue state. The server is the source of truth; the only local
// knowledge is which tickets have a decision in flight (optimistic
// removal) so polling does not resurrect them mid-submit.

import type { TicketSummary } from "./api.js";

export interface LastDecision {
  ticketId: string;
  allow: boolean;
  postPLegal: number;
}

export interface ConsoleState {
  tickets: TicketSummary[];
  inFlight: string[];
  error: string | null;
  lastDecision: LastDecision | null;
}

export function initialState(): ConsoleState {
  return { tickets: [], inFlight: [], error: null, lastDecision: null };
}

/** Fold a poll result in: server order wins, in-flight tickets stay hidden. */
export function mergePending(state: ConsoleState, fromServer: TicketSummary[]): ConsoleState {
  const hidden = new Set(state.inFlight);
  const tickets = [...fromServer]
    .sort((a, b) => a.created_at - b.created_at)
    .filter((t) => !hidden.has(t.ticket_id));
  return { ...state, tickets };
}

export function currentTicket(state: ConsoleState): TicketSummary | null {
  return state.tickets.length > 0 ? state.tickets[0] : null;
}

export function optimisticRemove(state: ConsoleState, ticketId: string): ConsoleState {
  return {
    ...state,
    tickets: state.tickets.filter((t) => t.ticket_id !== ticketId),
    inFlight: [...state.inFlight, ticketId],
    error: null,
  };
}

export function decisionSucceeded(
  state: ConsoleState,
  ticketId: string,
  allow: boolean,
  postPLegal: number,
): ConsoleState {
  return {
    ...state,
    inFlight: state.inFlight.filter((id) => id !== ticketId),
    lastDecision: { ticketId, allow, postPLegal },
    error: null,
  };
}

/** Roll an optimistic removal back and surface the failure inline. */
export function decisionFailed(
  state: ConsoleState,
  ticket: TicketSummary,
  message: string,
  conflict: boolean,
): ConsoleState {
  const inFlight = state.inFlight.filter((id) => id !== ticket.ticket_id);
  if (conflict) {
    // 404/409: the ticket is genuinely gone; do not restore it
    return { ...state, inFlight, error: message };
  }
  const tickets = [...state.tickets, ticket].sort((a, b) => a.created_at - b.created_at);
  return { ...state, tickets, inFlight, error: message };
}
