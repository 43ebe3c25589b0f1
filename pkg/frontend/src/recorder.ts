// MediaRecorder glue around the state machine. Long recordings are
// segmented client-side (mobile platforms cap microphone listening time);
// segments upload as separate parts and are never merged.

import { applyAction, initialRecorderState, type RecorderState } from "./state.js";

export interface RecorderEvents {
  onState?: (state: RecorderState) => void;
  onHint?: (hintKey: string) => void;
  onSegment?: (blob: Blob, partIndex: number) => void;
  onPermissionDenied?: () => void;
}

export function speechCapabilityAvailable(): boolean {
  if (typeof window === "undefined") {
    return false;
  }
  const w = window as unknown as Record<string, unknown>;
  return Boolean(w["SpeechRecognition"] ?? w["webkitSpeechRecognition"]);
}

const SPEECH_LOCALES: Record<string, string> = { en: "en-US", de: "de-DE" };

/** Streams interim transcript text while recording, when the browser has a
 * speech capability. Without one, recording still works and the transcript
 * arrives after upload via the backend engine. */
export class LiveTranscript {
  private recognition: { start(): void; stop(): void } | null = null;

  constructor(
    private onText: (text: string, final: boolean) => void,
    private language: "en" | "de" = "en",
  ) {}

  get available(): boolean {
    return speechCapabilityAvailable();
  }

  start(): boolean {
    if (!this.available) {
      return false;
    }
    const w = window as unknown as Record<string, unknown>;
    const Recognition = (w["SpeechRecognition"] ?? w["webkitSpeechRecognition"]) as new () => {
      continuous: boolean;
      interimResults: boolean;
      lang: string;
      onresult: ((event: { results: ArrayLike<ArrayLike<{ transcript: string }> & { isFinal: boolean }> }) => void) | null;
      start(): void;
      stop(): void;
    };
    const recognition = new Recognition();
    recognition.continuous = true;
    recognition.interimResults = true;
    recognition.lang = SPEECH_LOCALES[this.language] ?? "en-US";
    recognition.onresult = (event) => {
      const pieces: string[] = [];
      let sawFinal = false;
      for (let index = 0; index < event.results.length; index += 1) {
        const result = event.results[index]!;
        pieces.push(result[0]?.transcript ?? "");
        sawFinal = sawFinal || result.isFinal;
      }
      this.onText(pieces.join(" ").trim(), sawFinal);
    };
    recognition.start();
    this.recognition = recognition;
    return true;
  }

  stop(): void {
    this.recognition?.stop();
    this.recognition = null;
  }
}

export class RecorderController {
  state: RecorderState = initialRecorderState();
  private stream: MediaStream | null = null;
  private recorder: MediaRecorder | null = null;
  private chunks: BlobPart[] = [];
  private partIndex = 0;
  private segmentTimer: ReturnType<typeof setTimeout> | null = null;

  constructor(
    private events: RecorderEvents = {},
    private maxSegmentSeconds = 55,
  ) {}

  private emitState(): void {
    this.events.onState?.(this.state);
  }

  private dispatch(action: "start" | "pause" | "stop" | "reset"): boolean {
    const result = applyAction(this.state, action);
    if (!result.changed) {
      if (result.hint) {
        this.events.onHint?.(result.hint);
      }
      return false;
    }
    this.state = result.state;
    this.emitState();
    return true;
  }

  async start(): Promise<void> {
    if (this.state.phase === "paused") {
      if (this.dispatch("start")) {
        this.recorder?.resume();
      }
      return;
    }
    if (this.state.phase !== "idle") {
      this.dispatch("start");
      return;
    }
    let stream: MediaStream;
    try {
      stream = await navigator.mediaDevices.getUserMedia({ audio: true });
    } catch {
      this.events.onPermissionDenied?.();
      return;
    }
    if (!this.dispatch("start")) {
      stream.getTracks().forEach((track) => track.stop());
      return;
    }
    this.stream = stream;
    this.chunks = [];
    this.recorder = new MediaRecorder(stream);
    this.recorder.ondataavailable = (event) => this.chunks.push(event.data);
    this.recorder.start();
    this.armSegmentTimer();
  }

  pause(): void {
    if (this.dispatch("pause")) {
      this.recorder?.pause();
      this.clearSegmentTimer();
    }
  }

  async stop(): Promise<Blob | null> {
    if (!this.dispatch("stop")) {
      return null;
    }
    this.clearSegmentTimer();
    const blob = await this.finishRecorder();
    this.stream?.getTracks().forEach((track) => track.stop());
    this.stream = null;
    if (blob) {
      this.events.onSegment?.(blob, this.partIndex);
      this.partIndex += 1;
    }
    return blob;
  }

  reset(): void {
    if (this.dispatch("reset")) {
      this.chunks = [];
      this.partIndex = 0;
    }
  }

  private armSegmentTimer(): void {
    this.clearSegmentTimer();
    this.segmentTimer = setTimeout(() => {
      void this.rollSegment();
    }, this.maxSegmentSeconds * 1000);
  }

  private clearSegmentTimer(): void {
    if (this.segmentTimer !== null) {
      clearTimeout(this.segmentTimer);
      this.segmentTimer = null;
    }
  }

  /** Close the current segment and keep recording into the next one. */
  private async rollSegment(): Promise<void> {
    if (this.state.phase !== "recording" || !this.stream) {
      return;
    }
    const blob = await this.finishRecorder();
    if (blob) {
      this.events.onSegment?.(blob, this.partIndex);
      this.partIndex += 1;
    }
    this.chunks = [];
    this.recorder = new MediaRecorder(this.stream);
    this.recorder.ondataavailable = (event) => this.chunks.push(event.data);
    this.recorder.start();
    this.armSegmentTimer();
  }

  private finishRecorder(): Promise<Blob | null> {
    const recorder = this.recorder;
    if (!recorder || recorder.state === "inactive") {
      return Promise.resolve(null);
    }
    return new Promise((resolve) => {
      recorder.onstop = () => {
        resolve(new Blob(this.chunks, { type: recorder.mimeType || "audio/webm" }));
      };
      recorder.stop();
    });
  }
}
