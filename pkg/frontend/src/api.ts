// Client for the backend /v1 HTTP/JSON API. The UI talks to the service
// exclusively through this module.

import type {
  ApiErrorBody,
  LoginResult,
  RecordingRow,
  RecordingUpload,
  TranscriptResponse,
  UploadResult,
} from "./types.js";
import type { UploadOutcome } from "./queue.js";

export class ApiError extends Error {
  constructor(
    public status: number,
    public code: string,
    detail: string,
  ) {
    super(`${code}: ${detail}`);
  }
}

type FetchLike = typeof fetch;

export class ApiClient {
  token: string | null = null;

  constructor(
    public baseUrl: string,
    private fetchImpl: FetchLike = fetch,
  ) {}

  private headers(): Record<string, string> {
    const headers: Record<string, string> = { "Content-Type": "application/json" };
    if (this.token) {
      headers["Authorization"] = `Bearer ${this.token}`;
    }
    return headers;
  }

  private async request(method: string, path: string, body?: unknown): Promise<Response> {
    const response = await this.fetchImpl(`${this.baseUrl}${path}`, {
      method,
      headers: this.headers(),
      body: body === undefined ? undefined : JSON.stringify(body),
    });
    if (!response.ok) {
      let code = "HttpError";
      let detail = response.statusText;
      try {
        const parsed = (await response.json()) as ApiErrorBody;
        code = parsed.error ?? code;
        detail = parsed.detail ?? detail;
      } catch {
        // non-JSON error body; keep the status text
      }
      throw new ApiError(response.status, code, detail);
    }
    return response;
  }

  async login(name: string, credential: string): Promise<LoginResult> {
    const response = await this.request("POST", "/v1/login", { name, credential });
    const result = (await response.json()) as LoginResult;
    this.token = result.token;
    return result;
  }

  async uploadRecording(recording: RecordingUpload): Promise<UploadResult> {
    const response = await this.request("POST", "/v1/recordings", recording);
    return (await response.json()) as UploadResult;
  }

  /** Uploader shape the offline queue expects: idempotent-duplicate
   * responses (200 with created=false) count as success. */
  queueUploader(): (recording: RecordingUpload) => Promise<UploadOutcome> {
    return async (recording) => {
      try {
        await this.uploadRecording(recording);
        return { ok: true };
      } catch (error) {
        if (error instanceof ApiError) {
          return { ok: false, status: error.status };
        }
        return { ok: false };
      }
    };
  }

  async listRecordings(): Promise<RecordingRow[]> {
    const response = await this.request("GET", "/v1/recordings");
    return ((await response.json()) as { recordings: RecordingRow[] }).recordings;
  }

  async getTranscript(recordingId: string): Promise<TranscriptResponse> {
    const response = await this.request("GET", `/v1/recordings/${recordingId}/transcript`);
    return (await response.json()) as TranscriptResponse;
  }

  async editTranscript(recordingId: string, text: string): Promise<void> {
    await this.request("PUT", `/v1/recordings/${recordingId}/transcript`, { text });
  }

  async getAnalysis(recordingId: string): Promise<{ status: string; analysis?: unknown }> {
    const response = await this.request("GET", `/v1/recordings/${recordingId}/analysis`);
    return (await response.json()) as { status: string; analysis?: unknown };
  }

  async submitFeedback(
    recordingId: string,
    choice: "transcript" | "audio",
    editedText?: string,
  ): Promise<void> {
    await this.request("POST", "/v1/submissions", {
      recording_id: recordingId,
      choice,
      edited_text: editedText,
    });
  }

  /** Raw report bytes; the download must be byte-identical to the backend
   * response, so no JSON round-trip happens here. */
  async getReportBytes(run: string, format: "json" | "csv" = "json"): Promise<Uint8Array> {
    const response = await this.request("GET", `/v1/reports/${run}?format=${format}`);
    return new Uint8Array(await response.arrayBuffer());
  }

  async deleteData(scope: string): Promise<Record<string, number>> {
    const response = await this.request("DELETE", `/v1/data?scope=${encodeURIComponent(scope)}`);
    return ((await response.json()) as { deleted: Record<string, number> }).deleted;
  }
}
