// Plain-language rendering of boundary dimensions.
//
// Fixed templates only: the lattice truth lives in the engine, the panel
// just phrases it. Compound grants (e.g. binding files and recipients at
// once) are not synthesized here; the engine offers single-axis options and
// the user narrows the other axis on the follow-up prompt.

import type { BoundSide, BoundaryView } from "./types.js";

const CLASS_PHRASE: Record<string, string> = {
  exact: "a file you referenced",
  parent: "inside the working directory",
  local: "on the local filesystem",
  ctxt: "the assistant's context",
  intnet: "on the internal network",
  extnet: "on the external network",
};

export function describeSide(side: BoundSide): string {
  const base = CLASS_PHRASE[side.class] ?? side.class;
  if (side.guard === null) {
    return `anywhere ${base}`;
  }
  if (side.guard.includes("*")) {
    return `resources matching ${side.guard} (${base})`;
  }
  return `${side.guard} (${base})`;
}

export function describeTaint(taint: string[]): string {
  const hasTainted = taint.includes("tainted");
  const hasUntainted = taint.includes("untainted");
  if (hasTainted && hasUntainted) return "sensitive or ordinary data";
  if (hasTainted) return "sensitive data";
  return "ordinary data";
}

const EFFECT_ORDER = ["read", "write", "del", "exec", "spawn"];
const EFFECT_PHRASE: Record<string, string> = {
  read: "read",
  write: "write",
  del: "delete",
  exec: "run commands",
  spawn: "start processes",
};

export function describeEffects(effects: string[]): string {
  const ordered = EFFECT_ORDER.filter((e) => effects.includes(e));
  if (ordered.length === 1 && ordered[0] === "read") return "read-only";
  return ordered.map((e) => EFFECT_PHRASE[e] ?? e).join(" + ");
}

export function describeBoundary(b: BoundaryView): string {
  return (
    `${describeEffects(b.effects)} flow of ${describeTaint(b.taint)}` +
    ` from ${describeSide(b.input)} to ${describeSide(b.output)}`
  );
}

export function describeParams(params: Record<string, unknown>): string {
  const parts = Object.entries(params).map(([k, v]) => `${k}=${String(v)}`);
  return parts.join("  ");
}
