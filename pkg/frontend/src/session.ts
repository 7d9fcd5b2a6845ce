// Design-session state: current offsets plus an append-only history of
// predictions, each optionally enriched with a simulation result.

import type { Offsets } from './api.js';

export const OFFSET_LIMIT = 3.5;

export interface HistoryEntry {
  x: Offsets;
  dnnKwh: number;
  cnnKwh: number;
  simulatedKwh: number | null;
  timestamp: string;
}

export function clampOffset(value: number): number {
  if (Number.isNaN(value)) return 0;
  return Math.min(OFFSET_LIMIT, Math.max(-OFFSET_LIMIT, value));
}

export function offsetsInRange(x: Offsets): boolean {
  return x.every((v) => v >= -OFFSET_LIMIT && v <= OFFSET_LIMIT);
}

export class DesignSession {
  current: Offsets = [0, 0, 0, 0];
  readonly history: HistoryEntry[] = [];
  selectedIndex: number | null = null;

  setOffset(index: number, value: number): void {
    const next = [...this.current] as Offsets;
    next[index] = clampOffset(value);
    this.current = next;
  }

  addPrediction(x: Offsets, dnnKwh: number, cnnKwh: number, now?: string): HistoryEntry {
    const entry: HistoryEntry = {
      x: [...x] as Offsets,
      dnnKwh,
      cnnKwh,
      simulatedKwh: null,
      timestamp: now ?? new Date().toISOString(),
    };
    this.history.push(entry);
    this.selectedIndex = this.history.length - 1;
    return entry;
  }

  attachSimulation(index: number, totalKwh: number): void {
    const entry = this.history[index];
    if (entry) {
      entry.simulatedKwh = totalKwh;
    }
  }

  exportJson(): string {
    return JSON.stringify(
      {
        format: 'shapenergy-session/1',
        current: this.current,
        selectedIndex: this.selectedIndex,
        history: this.history,
      },
      null,
      2,
    );
  }

  static importJson(text: string): DesignSession {
    const raw = JSON.parse(text);
    if (raw.format !== 'shapenergy-session/1') {
      throw new Error(`unknown session format: ${raw.format}`);
    }
    const session = new DesignSession();
    session.current = raw.current;
    session.selectedIndex = raw.selectedIndex;
    for (const entry of raw.history) {
      session.history.push(entry);
    }
    return session;
  }
}
