// HTTP client for the proxy's consent API. Works in the browser and in
// Node 20 (global fetch + web streams), which keeps it testable headlessly.

import type {
  AuditRecordView,
  DecideResult,
  InvariantDiagnostics,
  PendingAskView,
  PolicyView,
} from "./types.js";

export class StaleAskError extends Error {}

export class InvariantRejected extends Error {
  constructor(public diagnostics: InvariantDiagnostics) {
    super(diagnostics.error);
  }
}

export class ApiClient {
  constructor(private base: string) {}

  private url(path: string): string {
    return this.base.replace(/\/$/, "") + path;
  }

  async getPending(): Promise<PendingAskView | null> {
    const resp = await fetch(this.url("/pending"));
    const body = (await resp.json()) as { pending: PendingAskView | null };
    return body.pending;
  }

  async decide(askId: number, option: number): Promise<DecideResult> {
    const resp = await fetch(this.url("/decide"), {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify({ ask_id: askId, option }),
    });
    if (resp.status === 409) {
      throw new StaleAskError(`ask ${askId} is no longer pending`);
    }
    if (!resp.ok) {
      throw new Error(`decide failed: ${resp.status}`);
    }
    return (await resp.json()) as DecideResult;
  }

  async getPolicy(): Promise<PolicyView> {
    const resp = await fetch(this.url("/policy"));
    return (await resp.json()) as PolicyView;
  }

  async submitInvariant(text: string): Promise<{ id: string }> {
    const resp = await fetch(this.url("/invariants"), {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify({ text }),
    });
    if (resp.status === 422) {
      throw new InvariantRejected((await resp.json()) as InvariantDiagnostics);
    }
    if (!resp.ok) {
      throw new Error(`invariant submission failed: ${resp.status}`);
    }
    return (await resp.json()) as { id: string };
  }

  async deleteRule(ruleId: string): Promise<void> {
    const resp = await fetch(this.url(`/rules/${ruleId}`), { method: "DELETE" });
    if (!resp.ok) {
      throw new Error(`delete failed: ${resp.status}`);
    }
  }

  /** Consume the audit SSE stream, invoking onRecord per event. Returns a
   * cancel function. */
  streamAudit(
    onRecord: (record: AuditRecordView) => void,
    onError?: (err: unknown) => void,
  ): () => void {
    const controller = new AbortController();
    void (async () => {
      try {
        const resp = await fetch(this.url("/audit/stream"), {
          signal: controller.signal,
        });
        if (!resp.body) throw new Error("no stream body");
        const reader = resp.body.getReader();
        const decoder = new TextDecoder();
        let buffer = "";
        for (;;) {
          const { done, value } = await reader.read();
          if (done) break;
          buffer += decoder.decode(value, { stream: true });
          const { events, rest } = drainSseEvents(buffer);
          buffer = rest;
          for (const data of events) {
            onRecord(JSON.parse(data) as AuditRecordView);
          }
        }
      } catch (err) {
        if (!controller.signal.aborted && onError) onError(err);
      }
    })();
    return () => controller.abort();
  }
}

/** Split complete SSE events (terminated by a blank line) off the buffer.
 * Comment lines (leading ':') are keep-alives and yield no event. */
export function drainSseEvents(buffer: string): { events: string[]; rest: string } {
  const events: string[] = [];
  let rest = buffer;
  for (;;) {
    const cut = rest.indexOf("\n\n");
    if (cut < 0) break;
    const chunk = rest.slice(0, cut);
    rest = rest.slice(cut + 2);
    const dataLines = chunk
      .split("\n")
      .filter((l) => l.startsWith("data:"))
      .map((l) => l.slice(5).trimStart());
    if (dataLines.length > 0) {
      events.push(dataLines.join("\n"));
    }
  }
  return { events, rest };
}
