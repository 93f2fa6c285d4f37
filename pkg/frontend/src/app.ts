// DOM wiring: polls the pending ask, renders options, streams the audit
// feed, hosts the invariant editor. All state logic lives in PanelModel.

import { ApiClient } from "./client.js";
import { describeBoundary, describeParams, describeSide } from "./describe.js";
import { PanelModel } from "./viewmodel.js";
import type { AuditRecordView, RuleView } from "./types.js";

const POLL_MS = 500;

function el(tag: string, cls?: string, text?: string): HTMLElement {
  const node = document.createElement(tag);
  if (cls) node.className = cls;
  if (text !== undefined) node.textContent = text;
  return node;
}

function renderPending(model: PanelModel, root: HTMLElement): void {
  root.textContent = "";
  const ask = model.pending;
  if (ask === null) {
    root.appendChild(el("p", "idle", "No pending request. The agent is running."));
    return;
  }
  const card = el("div", "ask-card");
  card.appendChild(el("h2", undefined, `${ask.call.tool_ref}`));
  card.appendChild(el("p", "params", describeParams(ask.call.params)));
  card.appendChild(el("p", "boundary", describeBoundary(ask.boundary)));
  if (ask.degraded) {
    card.appendChild(el("p", "degraded",
      "This call could not be analyzed; only one-time choices are offered."));
  }
  const list = el("div", "options");
  for (const opt of ask.options) {
    const cls = `option ${opt.action.toLowerCase()} ${opt.durable ? "durable" : "once"}`;
    const button = el("button", cls) as HTMLButtonElement;
    button.textContent = opt.label;
    button.title = describeBoundary(opt.boundary);
    button.disabled = !model.decidable;
    button.addEventListener("click", () => {
      void model.choose(opt.index).then(() => refresh());
    });
    list.appendChild(button);
  }
  card.appendChild(list);
  root.appendChild(card);
}

function renderRules(model: PanelModel, root: HTMLElement): void {
  root.textContent = "";
  const render = (rule: RuleView) => {
    const row = el("div", `rule ${rule.origin}`);
    row.appendChild(el("span", "rule-id", rule.id));
    row.appendChild(el("span", "rule-action", rule.action));
    row.appendChild(el("span", "rule-text", describeBoundary(rule.boundary)));
    if (rule.origin === "user") {
      const drop = el("button", "revoke", "revoke") as HTMLButtonElement;
      drop.addEventListener("click", () => {
        void model.revoke(rule.id).then(() => refresh());
      });
      row.appendChild(drop);
    }
    root.appendChild(row);
  };
  model.policy.invariants.forEach(render);
  model.policy.rules.forEach(render);
}

function renderAudit(model: PanelModel, root: HTMLElement): void {
  root.textContent = "";
  for (const rec of model.audit.slice(-50).reverse()) {
    const row = el("div", `audit ${rec.verdict.toLowerCase()}`);
    row.appendChild(el("span", "audit-step", `#${rec.step}`));
    row.appendChild(el("span", "audit-verdict", rec.verdict));
    row.appendChild(el("span", "audit-tool", rec.tool_ref));
    row.appendChild(el("span", "audit-flow",
      `${describeSide(rec.boundary.input)} -> ${describeSide(rec.boundary.output)}`));
    if (rec.option) {
      row.appendChild(el("span", "audit-option", rec.option));
    }
    root.appendChild(row);
  }
}

function renderEditor(model: PanelModel, root: HTMLElement): void {
  const feedback = root.querySelector(".editor-feedback") as HTMLElement;
  feedback.textContent = "";
  const split = model.errorSplit();
  if (split !== null) {
    feedback.appendChild(el("span", "editor-ok-part", split.before));
    feedback.appendChild(el("span", "editor-caret", "^"));
    feedback.appendChild(el("span", "editor-bad-part", split.after));
    feedback.appendChild(el("div", "editor-error",
      `${model.editor.error}` +
      (model.editor.expected.length
        ? ` (expected: ${model.editor.expected.join(", ")})` : "")));
  } else if (model.editor.accepted) {
    feedback.appendChild(el("div", "editor-accepted",
      `invariant ${model.editor.accepted} active`));
  }
}

let model: PanelModel;
let refresh: () => void = () => undefined;

export function start(base: string = ""): void {
  const client = new ApiClient(base || window.location.origin);
  model = new PanelModel(client);

  const pendingRoot = document.getElementById("pending")!;
  const rulesRoot = document.getElementById("rules")!;
  const auditRoot = document.getElementById("audit")!;
  const editorRoot = document.getElementById("editor")!;
  const input = editorRoot.querySelector("textarea")! as HTMLTextAreaElement;
  const submit = editorRoot.querySelector("button")! as HTMLButtonElement;

  refresh = () => {
    renderPending(model, pendingRoot);
    renderRules(model, rulesRoot);
    renderAudit(model, auditRoot);
    renderEditor(model, editorRoot);
  };

  input.addEventListener("input", () => model.setBuffer(input.value));
  submit.addEventListener("click", () => {
    void model.submitInvariant().then((ok) => {
      if (ok) input.value = "";
      refresh();
    });
  });

  model.startAuditFeed();
  void model.refreshPolicy().then(refresh);
  window.setInterval(() => {
    void model.refreshPending().then(refresh);
  }, POLL_MS);
  window.setInterval(refresh, POLL_MS);
}

if (typeof window !== "undefined" && typeof document !== "undefined") {
  window.addEventListener("DOMContentLoaded", () => start());
}
