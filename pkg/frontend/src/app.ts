// Browser composition root: wires login, recorder controls, mode and module
// toggles, the live transcript panel, the offline queue, and report
// download into a minimal DOM shell. All recorder state changes flow
// through the state machine; uploads and queue flushes are async side
// tasks that never mutate it directly.

import { ApiClient, ApiError } from "./api.js";
import { I18n } from "./i18n.js";
import { OfflineQueue, browserStorage } from "./queue.js";
import { LiveTranscript, RecorderController } from "./recorder.js";
import { downloadBytes, reportTable, type ReportJson } from "./report.js";
import { registerServiceWorker } from "./pwa.js";
import type { CaptureModule, FeedbackMode, NoiseSetting } from "./types.js";

interface AppConfig {
  baseUrl: string;
  root: HTMLElement;
}

async function blobToBase64(blob: Blob): Promise<string> {
  const buffer = new Uint8Array(await blob.arrayBuffer());
  let binary = "";
  buffer.forEach((byte) => {
    binary += String.fromCharCode(byte);
  });
  return btoa(binary);
}

export class App {
  readonly i18n = new I18n("en");
  readonly client: ApiClient;
  readonly queue = new OfflineQueue(browserStorage());
  mode: FeedbackMode = "free_form";
  captureModule: CaptureModule = "speech_to_text";
  setting: NoiseSetting | null = null;
  baselineRun = "default";
  private liveText = "";
  private recorder: RecorderController;
  private live: LiveTranscript;
  private root: HTMLElement;

  constructor(config: AppConfig) {
    this.client = new ApiClient(config.baseUrl);
    this.root = config.root;
    this.recorder = new RecorderController({
      onState: () => {
        this.syncLiveTranscript();
        this.render();
      },
      onHint: (key) => this.showHint(this.i18n.t(key)),
      onSegment: (blob, part) => {
        void this.queueSegment(blob, part);
      },
      onPermissionDenied: () => this.showHint(this.i18n.t("recorder.micDenied")),
    });
    this.live = new LiveTranscript((text) => {
      this.liveText = text;
      const panel = this.root.querySelector("#live-transcript");
      if (panel) {
        panel.textContent = text;
      }
    }, this.i18n.language);
  }

  async startup(): Promise<void> {
    await registerServiceWorker();
    window.addEventListener("online", () => {
      void this.flushQueue();
    });
    this.render();
  }

  /** Live text streams only while recording under the speech-to-text
   * module and only when the browser has the capability; otherwise the
   * transcript arrives from the backend after upload. */
  private syncLiveTranscript(): void {
    const recording = this.recorder.state.phase === "recording";
    if (recording && this.captureModule === "speech_to_text" && this.live.available) {
      this.live.start();
    } else {
      this.live.stop();
    }
  }

  private async queueSegment(blob: Blob, part: number): Promise<void> {
    const id = `${crypto.randomUUID()}.part${part}`;
    this.queue.enqueue({
      id,
      audio_b64: await blobToBase64(blob),
      media_type: blob.type || "audio/webm",
      language: this.i18n.language,
      mode: this.mode,
      capture: this.captureModule,
      setting: this.setting,
      run: this.mode === "baseline" ? this.baselineRun : null,
    });
    await this.flushQueue();
  }

  async flushQueue(): Promise<void> {
    if (!navigator.onLine) {
      this.render();
      return;
    }
    await this.queue.flush(this.client.queueUploader());
    this.render();
  }

  setMode(mode: FeedbackMode): void {
    this.mode = mode;
    if (mode === "free_form") {
      this.setting = null;
    }
    this.render();
  }

  setModule(captureModule: CaptureModule): void {
    this.captureModule = captureModule;
    this.syncLiveTranscript();
    this.render();
  }

  async downloadReport(run: string, format: "json" | "csv"): Promise<void> {
    try {
      const bytes = await this.client.getReportBytes(run, format);
      const media = format === "json" ? "application/json" : "text/csv";
      downloadBytes(bytes, `report-${run}.${format}`, media);
    } catch (error) {
      if (error instanceof ApiError && error.status === 409) {
        this.showHint(this.i18n.t("report.pending"));
      } else {
        throw error;
      }
    }
  }

  async renderReport(run: string): Promise<void> {
    const element = this.root.querySelector("#report");
    if (!element) {
      return;
    }
    let report: ReportJson;
    try {
      const bytes = await this.client.getReportBytes(run, "json");
      report = JSON.parse(new TextDecoder().decode(bytes)) as ReportJson;
    } catch (error) {
      if (error instanceof ApiError && error.status === 409) {
        element.textContent = this.i18n.t("report.pending");
        return;
      }
      throw error;
    }
    const table = reportTable(report, this.i18n);
    const head = table.header.map((cell) => `<th>${cell}</th>`).join("");
    const body = table.rows
      .map((row) => `<tr>${row.map((cell) => `<td>${cell}</td>`).join("")}</tr>`)
      .join("");
    element.innerHTML = `<table><thead><tr>${head}</tr></thead><tbody>${body}</tbody></table>`;
  }

  private showHint(message: string): void {
    const hint = this.root.querySelector("#hint");
    if (hint) {
      hint.textContent = message;
    }
  }

  handleControl(action: "start" | "pause" | "stop" | "reset"): void {
    switch (action) {
      case "start":
        void this.recorder.start();
        break;
      case "pause":
        this.recorder.pause();
        break;
      case "stop":
        void this.recorder.stop();
        break;
      case "reset":
        this.liveText = "";
        this.recorder.reset();
        break;
    }
  }

  render(): void {
    const t = (key: string) => this.i18n.t(key);
    const phase = this.recorder.state.phase;
    const queued = this.queue.size;
    const asaActive = this.captureModule === "audio_sentiment";
    this.root.querySelector("#chrome")!.innerHTML = `
      <h1>${t("app.title")}</h1>
      <nav>
        <button id="tab-record" ${asaActive ? "" : "disabled"}>${t("nav.record")}</button>
        <button id="tab-asa" ${asaActive ? "disabled" : ""}>${t("nav.asa")}</button>
        <button id="tab-reports">${t("nav.reports")}</button>
        <button id="lang-toggle">${t("language.toggle")}</button>
      </nav>
      <section id="toggles">
        <label>${t("mode.label")}
          <select id="mode-select">
            <option value="free_form" ${this.mode === "free_form" ? "selected" : ""}>
              ${t("mode.free_form")}</option>
            <option value="baseline" ${this.mode === "baseline" ? "selected" : ""}>
              ${t("mode.baseline")}</option>
          </select>
        </label>
        ${this.mode === "baseline" ? `
        <label>${t("setting.office")} / ${t("setting.field")}
          <select id="setting-select">
            <option value="office" ${this.setting === "office" ? "selected" : ""}>
              ${t("setting.office")}</option>
            <option value="field" ${this.setting === "field" ? "selected" : ""}>
              ${t("setting.field")}</option>
          </select>
        </label>
        <p id="baseline-instructions">${t("baseline.readAloud")}</p>` : ""}
        <span id="module-state">${t(`module.${this.captureModule}`)}</span>
      </section>
      <section id="controls" data-phase="${phase}">
        <button data-action="start">${t("recorder.start")}</button>
        <button data-action="pause">${t("recorder.pause")}</button>
        <button data-action="stop">${t("recorder.stop")}</button>
        <button data-action="reset">${t("recorder.reset")}</button>
      </section>
      <section>
        <h2>${t("transcript.title")}</h2>
        <p id="live-transcript">${this.liveText}</p>
      </section>
      <p id="queue-state">${queued ? `${queued} ${t("queue.pending")}` : t("queue.empty")}</p>
      <p id="hint"></p>
      <section id="report-actions">
        <button id="report-json">${t("report.download")}</button>
        <button id="report-csv">${t("report.downloadCsv")}</button>
      </section>
      <section id="report"></section>
    `;
    this.root.querySelectorAll("#controls button").forEach((button) => {
      button.addEventListener("click", () => {
        const action = (button as HTMLButtonElement).dataset["action"] as
          | "start" | "pause" | "stop" | "reset";
        this.handleControl(action);
      });
    });
    this.root.querySelector("#tab-record")?.addEventListener("click", () => {
      this.setModule("speech_to_text");
    });
    this.root.querySelector("#tab-asa")?.addEventListener("click", () => {
      this.setModule("audio_sentiment");
    });
    this.root.querySelector("#tab-reports")?.addEventListener("click", () => {
      void this.renderReport(this.baselineRun);
    });
    this.root.querySelector("#mode-select")?.addEventListener("change", (event) => {
      this.setMode((event.target as HTMLSelectElement).value as FeedbackMode);
    });
    this.root.querySelector("#setting-select")?.addEventListener("change", (event) => {
      this.setting = (event.target as HTMLSelectElement).value as NoiseSetting;
    });
    this.root.querySelector("#report-json")?.addEventListener("click", () => {
      void this.downloadReport(this.baselineRun, "json");
    });
    this.root.querySelector("#report-csv")?.addEventListener("click", () => {
      void this.downloadReport(this.baselineRun, "csv");
    });
    this.root.querySelector("#lang-toggle")?.addEventListener("click", () => {
      this.i18n.toggle();
      this.render();
    });
  }
}

export function mount(baseUrl: string, rootId = "app"): App {
  const root = document.getElementById(rootId);
  if (!root) {
    throw new Error(`no element with id ${rootId}`);
  }
  root.innerHTML = '<div id="chrome"></div>';
  const app = new App({ baseUrl, root });
  void app.startup();
  return app;
}
