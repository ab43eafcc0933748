// Selection model for the teaching widget. A teachable card lists the
// executed turns that followed a refused utterance; the user drags over
// them to mark the span that accomplished it. The model only ever holds
// an anchor and a focus inside one gap-free run of consecutive turns, so
// every selection it can express is a contiguous range of non-refused
// turns — the server-side span invariants hold by construction.

import { AnnotationJson, TeachableJson } from "./types.js";

export interface SpanChoice {
  start: number; // inclusive episode turn index
  end: number;   // inclusive episode turn index
}

export class SpanSelection {
  readonly targetTurn: number;
  private turns: number[];   // selectable turn indices, strictly increasing
  private runIds: number[];  // id of the consecutive-turn run each position sits in
  private anchor: number | null = null;
  private focus: number | null = null;

  constructor(targetTurn: number, followerTurns: number[]) {
    this.targetTurn = targetTurn;
    this.turns = [];
    this.runIds = [];
    let run = 0;
    for (const turn of followerTurns) {
      if (!Number.isInteger(turn) || turn <= targetTurn) {
        continue; // never selectable: it could not belong to a valid span
      }
      const last = this.turns[this.turns.length - 1];
      if (last !== undefined) {
        if (turn <= last) {
          continue;
        }
        if (turn !== last + 1) {
          run += 1; // a refused turn sits between: start a new run
        }
      }
      this.turns.push(turn);
      this.runIds.push(run);
    }
  }

  static fromCard(card: TeachableJson): SpanSelection {
    return new SpanSelection(card.turn, card.following.map((f) => f.turn));
  }

  get size(): number {
    return this.turns.length;
  }

  turnAt(pos: number): number | null {
    return this.turns[pos] ?? null;
  }

  // Begin a fresh selection at one action chip.
  press(pos: number): void {
    const clamped = this.clampToList(pos);
    if (clamped === null) {
      return;
    }
    this.anchor = clamped;
    this.focus = clamped;
  }

  // Grow (or shrink) the selection toward a chip. The focus never leaves
  // the anchor's run, so the range cannot jump across a refused turn.
  extendTo(pos: number): void {
    if (this.anchor === null) {
      this.press(pos);
      return;
    }
    const clamped = this.clampToList(pos);
    if (clamped === null) {
      return;
    }
    this.focus = this.clampToRun(clamped, this.runIds[this.anchor]);
  }

  clear(): void {
    this.anchor = null;
    this.focus = null;
  }

  isSelected(pos: number): boolean {
    if (this.anchor === null || this.focus === null) {
      return false;
    }
    return pos >= Math.min(this.anchor, this.focus) && pos <= Math.max(this.anchor, this.focus);
  }

  selectedPositions(): number[] {
    const out: number[] = [];
    if (this.anchor === null || this.focus === null) {
      return out;
    }
    const lo = Math.min(this.anchor, this.focus);
    const hi = Math.max(this.anchor, this.focus);
    for (let pos = lo; pos <= hi; pos++) {
      out.push(pos);
    }
    return out;
  }

  choice(): SpanChoice | null {
    if (this.anchor === null || this.focus === null) {
      return null;
    }
    const lo = Math.min(this.anchor, this.focus);
    const hi = Math.max(this.anchor, this.focus);
    return { start: this.turns[lo], end: this.turns[hi] };
  }

  annotation(): AnnotationJson | null {
    const span = this.choice();
    if (span === null) {
      return null;
    }
    return { target_turn: this.targetTurn, span: [span.start, span.end] };
  }

  private clampToList(pos: number): number | null {
    if (this.turns.length === 0 || !Number.isFinite(pos)) {
      return null;
    }
    const index = Math.trunc(pos);
    return Math.min(Math.max(index, 0), this.turns.length - 1);
  }

  private clampToRun(pos: number, run: number): number {
    let clamped = pos;
    while (this.runIds[clamped] > run) {
      clamped -= 1;
    }
    while (this.runIds[clamped] < run) {
      clamped += 1;
    }
    return clamped;
  }
}
