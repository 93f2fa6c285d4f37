// Panel state, kept free of DOM concerns so it runs (and is tested) headless.
//
// Option ordering and indices mirror the server's list exactly: the POSTed
// index is the only thing that identifies a choice, so the panel never
// reorders or invents options. Decisions are effective exactly once per ask
// (in-flight guard keyed by ask id).

import { ApiClient, InvariantRejected, StaleAskError } from "./client.js";
import type {
  AuditRecordView,
  PendingAskView,
  PolicyView,
  RuleView,
} from "./types.js";

export interface InvariantEditorState {
  buffer: string;
  error: string | null;
  errorOffset: number | null;
  expected: string[];
  accepted: string | null; // id of the last accepted invariant
}

const AUDIT_FEED_LIMIT = 500;

export class PanelModel {
  pending: PendingAskView | null = null;
  policy: PolicyView = { invariants: [], rules: [] };
  audit: AuditRecordView[] = [];
  editor: InvariantEditorState = {
    buffer: "",
    error: null,
    errorOffset: null,
    expected: [],
    accepted: null,
  };
  lastError: string | null = null;

  private decidedAsk: number | null = null;
  private inFlight = false;

  constructor(private client: ApiClient) {}

  // -- pending ask ------------------------------------------------------

  async refreshPending(): Promise<void> {
    const fresh = await this.client.getPending();
    if (fresh === null) {
      this.pending = null;
      return;
    }
    if (this.pending === null || this.pending.ask_id !== fresh.ask_id) {
      this.pending = fresh;
    }
  }

  /** True when the option buttons should accept input. */
  get decidable(): boolean {
    return (
      this.pending !== null &&
      !this.inFlight &&
      this.decidedAsk !== this.pending.ask_id
    );
  }

  async choose(optionIndex: number): Promise<boolean> {
    if (this.pending === null || !this.decidable) {
      return false; // double-click or stale render: ignored
    }
    const askId = this.pending.ask_id;
    this.inFlight = true;
    this.decidedAsk = askId;
    try {
      await this.client.decide(askId, optionIndex);
      this.pending = null;
      await this.refreshPolicy();
      return true;
    } catch (err) {
      if (err instanceof StaleAskError) {
        this.pending = null; // view refreshes on the next poll
        return false;
      }
      this.decidedAsk = null; // decision did not take effect; allow retry
      this.lastError = String(err);
      return false;
    } finally {
      this.inFlight = false;
    }
  }

  // -- policy list --------------------------------------------------------

  async refreshPolicy(): Promise<void> {
    this.policy = await this.client.getPolicy();
  }

  async revoke(ruleId: string): Promise<void> {
    await this.client.deleteRule(ruleId);
    await this.refreshPolicy();
  }

  get rules(): RuleView[] {
    return [...this.policy.invariants, ...this.policy.rules];
  }

  // -- audit feed ------------------------------------------------------------

  startAuditFeed(): () => void {
    return this.client.streamAudit(
      (record) => {
        this.audit.push(record);
        if (this.audit.length > AUDIT_FEED_LIMIT) {
          this.audit.splice(0, this.audit.length - AUDIT_FEED_LIMIT);
        }
      },
      (err) => {
        this.lastError = `audit stream: ${String(err)}`;
      },
    );
  }

  // -- invariant editor ---------------------------------------------------------

  setBuffer(text: string): void {
    this.editor.buffer = text;
  }

  async submitInvariant(): Promise<boolean> {
    const text = this.editor.buffer.trim();
    if (!text) {
      return false; // empty submission is a no-op
    }
    try {
      const result = await this.client.submitInvariant(text);
      this.editor = {
        buffer: "",
        error: null,
        errorOffset: null,
        expected: [],
        accepted: result.id,
      };
      await this.refreshPolicy();
      return true;
    } catch (err) {
      if (err instanceof InvariantRejected) {
        this.editor.error = err.diagnostics.error;
        this.editor.errorOffset = err.diagnostics.offset;
        this.editor.expected = err.diagnostics.expected;
        return false; // buffer stays editable
      }
      this.lastError = String(err);
      return false;
    }
  }

  /** Buffer split at the error offset, for inline caret rendering. */
  errorSplit(): { before: string; after: string } | null {
    if (this.editor.error === null || this.editor.errorOffset === null) {
      return null;
    }
    const at = Math.min(this.editor.errorOffset, this.editor.buffer.length);
    return {
      before: this.editor.buffer.slice(0, at),
      after: this.editor.buffer.slice(at),
    };
  }
}
