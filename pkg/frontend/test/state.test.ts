import { describe, expect, it } from "vitest";

import {
  ACTIONS,
  PHASES,
  applyAction,
  initialRecorderState,
  tick,
  transition,
  type RecorderAction,
  type RecorderPhase,
} from "../src/state.js";

// The complete 4x4 transition table: target phase, or null for a hinted no-op.
const TABLE: Record<RecorderPhase, Record<RecorderAction, RecorderPhase | null>> = {
  idle: { start: "recording", pause: null, stop: null, reset: null },
  recording: { start: null, pause: "paused", stop: "stopped", reset: null },
  paused: { start: "recording", pause: null, stop: "stopped", reset: null },
  stopped: { start: null, pause: null, stop: null, reset: "idle" },
};

describe("recorder state machine", () => {
  it("matches the transition table for every state and action", () => {
    for (const phase of PHASES) {
      for (const action of ACTIONS) {
        const expected = TABLE[phase][action];
        const result = transition(phase, action);
        if (expected === null) {
          expect(result.changed, `${phase}+${action}`).toBe(false);
          expect(result.phase, `${phase}+${action}`).toBe(phase);
          expect(result.hint).toBe("recorder.hint.invalid");
        } else {
          expect(result.changed, `${phase}+${action}`).toBe(true);
          expect(result.phase, `${phase}+${action}`).toBe(expected);
          expect(result.hint).toBeUndefined();
        }
      }
    }
  });

  it("covers exactly 16 combinations", () => {
    expect(PHASES.length * ACTIONS.length).toBe(16);
  });

  it("resets elapsed time only when returning to idle", () => {
    let state = initialRecorderState();
    state = applyAction(state, "start").state;
    state = tick(state, 5);
    expect(state.elapsedSeconds).toBe(5);

    state = applyAction(state, "pause").state;
    expect(tick(state, 5).elapsedSeconds).toBe(5); // paused time does not count

    state = applyAction(state, "stop").state;
    expect(state.elapsedSeconds).toBe(5);

    state = applyAction(state, "reset").state;
    expect(state.phase).toBe("idle");
    expect(state.elapsedSeconds).toBe(0);
  });

  it("keeps state on illegal actions and reports the hint", () => {
    const state = initialRecorderState();
    const result = applyAction(state, "reset");
    expect(result.changed).toBe(false);
    expect(result.state).toBe(state);
    expect(result.hint).toBe("recorder.hint.invalid");
  });
});
