// Wire types for the /v1 HTTP API. Field names mirror the backend JSON.

export type Language = "en" | "de";
export type FeedbackMode = "free_form" | "baseline";
export type CaptureModule = "speech_to_text" | "audio_sentiment";
export type NoiseSetting = "office" | "field";

export interface RecordingUpload {
  id: string;
  audio_b64: string;
  media_type?: string;
  duration_seconds?: number;
  language?: Language;
  mode?: FeedbackMode;
  capture?: CaptureModule;
  setting?: NoiseSetting | null;
  run?: string | null;
}

export interface UploadResult {
  id: string;
  status: string;
  created: boolean;
}

export interface LoginResult {
  token: string;
  role: string;
  language: Language;
  expires_at: number;
}

export interface TranscriptPayload {
  recording_id: string;
  text: string;
  language: Language;
  engine_id: string;
  edited: boolean;
}

export interface TranscriptResponse {
  status: string;
  transcript?: TranscriptPayload;
}

export interface RecordingRow {
  id: string;
  speaker: string;
  mode: FeedbackMode;
  capture: CaptureModule;
  setting: NoiseSetting | null;
  run_id: string | null;
  status: string;
  duration: number;
  created_at: number;
}

export interface ApiErrorBody {
  error: string;
  detail: string;
}
