// Recorder state machine. Exactly these transitions are legal:
//   idle -> recording (start)
//   recording -> paused (pause), recording -> stopped (stop)
//   paused -> recording (start), paused -> stopped (stop)
//   stopped -> idle (reset)
// Every other action is a no-op that surfaces a hint instead of changing
// state.

export type RecorderPhase = "idle" | "recording" | "paused" | "stopped";
export type RecorderAction = "start" | "pause" | "stop" | "reset";

export const PHASES: readonly RecorderPhase[] = ["idle", "recording", "paused", "stopped"];
export const ACTIONS: readonly RecorderAction[] = ["start", "pause", "stop", "reset"];

export interface TransitionResult {
  phase: RecorderPhase;
  changed: boolean;
  hint?: string;
}

const LEGAL: Record<RecorderPhase, Partial<Record<RecorderAction, RecorderPhase>>> = {
  idle: { start: "recording" },
  recording: { pause: "paused", stop: "stopped" },
  paused: { start: "recording", stop: "stopped" },
  stopped: { reset: "idle" },
};

export function transition(phase: RecorderPhase, action: RecorderAction): TransitionResult {
  const next = LEGAL[phase][action];
  if (next === undefined) {
    return { phase, changed: false, hint: "recorder.hint.invalid" };
  }
  return { phase: next, changed: true };
}

export interface RecorderState {
  phase: RecorderPhase;
  elapsedSeconds: number;
}

export function initialRecorderState(): RecorderState {
  return { phase: "idle", elapsedSeconds: 0 };
}

export function applyAction(state: RecorderState, action: RecorderAction): {
  state: RecorderState;
  changed: boolean;
  hint?: string;
} {
  const result = transition(state.phase, action);
  if (!result.changed) {
    return { state, changed: false, hint: result.hint };
  }
  const elapsedSeconds = result.phase === "idle" ? 0 : state.elapsedSeconds;
  return { state: { phase: result.phase, elapsedSeconds }, changed: true };
}

export function tick(state: RecorderState, seconds: number): RecorderState {
  if (state.phase !== "recording") {
    return state;
  }
  return { ...state, elapsedSeconds: state.elapsedSeconds + seconds };
}
