/** Palette view-model: manifest entries grouped by stage phase. */

import type { PaletteEntry } from "./types.js";

export const PHASE_ORDER = ["input", "preprocess", "feature", "model", "predict", "output"];

export interface PaletteGroup {
  phase: string;
  entries: PaletteEntry[];
}

export interface PaletteModel {
  groups: PaletteGroup[];
  warnings: string[];
  total: number;
}

/** Group by phase in stage order; unknown phases collect under "other". */
export function buildPalette(manifest: PaletteEntry[]): PaletteModel {
  const byPhase = new Map<string, PaletteEntry[]>();
  const warnings: string[] = [];
  for (const entry of manifest) {
    const phase = PHASE_ORDER.includes(entry.phase) ? entry.phase : "other";
    if (phase === "other") {
      warnings.push(`component ${entry.kind} has unknown phase ${entry.phase}`);
    }
    const bucket = byPhase.get(phase) ?? [];
    bucket.push(entry);
    byPhase.set(phase, bucket);
  }
  const groups: PaletteGroup[] = [];
  for (const phase of [...PHASE_ORDER, "other"]) {
    const entries = byPhase.get(phase);
    if (entries) {
      entries.sort((a, b) => a.kind.localeCompare(b.kind));
      groups.push({ phase, entries });
    }
  }
  return { groups, warnings, total: manifest.length };
}
