import { describe, expect, it } from "vitest";

import { ApiError, GatewayClient } from "../src/api.js";

interface Call {
  url: string;
  init?: RequestInit;
}

function stubFetch(status: number, payload: unknown) {
  const calls: Call[] = [];
  const fetchFn = (url: string, init?: RequestInit) => {
    calls.push({ url, init });
    return Promise.resolve(
      new Response(JSON.stringify(payload), {
        status,
        headers: { "Content-Type": "application/json" },
      }),
    );
  };
  return { calls, fetchFn };
}

describe("GatewayClient", () => {
  it("reads the pending queue", async () => {
    const { calls, fetchFn } = stubFetch(200, { tickets: [{ ticket_id: "t1" }] });
    const client = new GatewayClient("http://gw", fetchFn);
    const tickets = await client.getPending();
    expect(tickets).toHaveLength(1);
    expect(calls[0].url).toBe("http://gw/v1/pending");
  });

  it("posts decisions with the expected body", async () => {
    const { calls, fetchFn } = stubFetch(200, {
      record: { verdict: "Deny" },
      post_p_legal: 0.05,
    });
    const client = new GatewayClient("", fetchFn);
    const response = await client.submitDecision("t9", false);
    expect(response.post_p_legal).toBeCloseTo(0.05);
    expect(calls[0].url).toBe("/v1/decisions");
    expect(calls[0].init?.method).toBe("POST");
    expect(JSON.parse(String(calls[0].init?.body))).toEqual({
      ticket_id: "t9",
      allow: false,
    });
  });

  it("maps error bodies onto ApiError with status", async () => {
    const { fetchFn } = stubFetch(409, { error: "ticket t9 was already resolved" });
    const client = new GatewayClient("", fetchFn);
    await expect(client.submitDecision("t9", true)).rejects.toMatchObject({
      name: "ApiError",
      status: 409,
      message: "ticket t9 was already resolved",
    });
  });

  it("fetches snapshots by id", async () => {
    const { calls, fetchFn } = stubFetch(200, { snapshot_id: "s1", widgets: [] });
    const client = new GatewayClient("", fetchFn);
    await client.getSnapshot("s1");
    expect(calls[0].url).toBe("/v1/snapshots/s1");
  });

  it("posts traces", async () => {
    const { calls, fetchFn } = stubFetch(200, { record_ids: [], ticket_ids: ["t1"] });
    const client = new GatewayClient("", fetchFn);
    const res = await client.postTrace([{ time: 1, kind: "LaunchActivity" }]);
    expect(res.ticket_ids).toEqual(["t1"]);
    expect(calls[0].url).toBe("/v1/traces");
  });

  it("ApiError is a real Error", () => {
    const err = new ApiError(404, "nope");
    expect(err).toBeInstanceOf(Error);
    expect(err.status).toBe(404);
  });
});
