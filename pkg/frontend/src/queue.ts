// Offline upload queue. Queued recordings survive page reloads via the
// injected storage (localStorage in the browser); client-generated ids make
// re-uploads idempotent, so a flush that races or repeats can never create
// duplicates server-side.

import type { RecordingUpload } from "./types.js";

export interface KeyValueStorage {
  getItem(key: string): string | null;
  setItem(key: string, value: string): void;
  removeItem(key: string): void;
}

export class MemoryStorage implements KeyValueStorage {
  private data = new Map<string, string>();

  getItem(key: string): string | null {
    return this.data.has(key) ? (this.data.get(key) as string) : null;
  }

  setItem(key: string, value: string): void {
    this.data.set(key, value);
  }

  removeItem(key: string): void {
    this.data.delete(key);
  }
}

export function browserStorage(): KeyValueStorage {
  if (typeof localStorage === "undefined") {
    return new MemoryStorage();
  }
  return localStorage;
}

export interface UploadOutcome {
  ok: boolean;
  status?: number;
}

export type Uploader = (recording: RecordingUpload) => Promise<UploadOutcome>;

export interface FlushResult {
  uploaded: string[];
  failed: string[];
  remaining: number;
}

const DEFAULT_KEY = "agrivoice.queue.v1";

export class OfflineQueue {
  private flushing = false;

  constructor(
    private storage: KeyValueStorage = browserStorage(),
    private key: string = DEFAULT_KEY,
  ) {}

  items(): RecordingUpload[] {
    const raw = this.storage.getItem(this.key);
    if (raw === null) {
      return [];
    }
    return JSON.parse(raw) as RecordingUpload[];
  }

  get size(): number {
    return this.items().length;
  }

  enqueue(recording: RecordingUpload): void {
    const items = this.items();
    if (!items.some((item) => item.id === recording.id)) {
      items.push(recording);
    }
    this.persist(items);
  }

  /** Upload queued recordings in order. An item leaves the queue only on an
   * acknowledged success; failed items stay queued for the next flush. */
  async flush(uploader: Uploader): Promise<FlushResult> {
    if (this.flushing) {
      return { uploaded: [], failed: [], remaining: this.size };
    }
    this.flushing = true;
    try {
      const uploaded: string[] = [];
      const failed: string[] = [];
      for (const item of this.items()) {
        let outcome: UploadOutcome;
        try {
          outcome = await uploader(item);
        } catch {
          outcome = { ok: false };
        }
        if (outcome.ok) {
          uploaded.push(item.id);
          this.persist(this.items().filter((queued) => queued.id !== item.id));
        } else {
          failed.push(item.id);
        }
      }
      return { uploaded, failed, remaining: this.size };
    } finally {
      this.flushing = false;
    }
  }

  private persist(items: RecordingUpload[]): void {
    if (items.length === 0) {
      this.storage.removeItem(this.key);
    } else {
      this.storage.setItem(this.key, JSON.stringify(items));
    }
  }
}
