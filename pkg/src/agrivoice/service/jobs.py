"""At-least-once job queue with idempotent consumers keyed by recording id.

Workers poll the store for pending jobs; handler failures requeue the job up
to a retry cap, after which it parks as failed with the recording still in
pending state. ``stop(drain=True)`` lets in-flight jobs finish before the
threads exit.
"""

from __future__ import annotations

import logging
import threading
import time
from typing import Callable

from .store import Store

log = logging.getLogger(__name__)

MAX_ATTEMPTS = 3


class JobRunner:
    def __init__(
        self,
        store: Store,
        handlers: dict[str, Callable[[dict], None]],
        *,
        workers: int = 2,
        poll_interval: float = 0.05,
    ):
        self.store = store
        self.handlers = handlers
        self.workers = max(1, workers)
        self.poll_interval = poll_interval
        self._stop = threading.Event()
        self._threads: list[threading.Thread] = []

    def start(self) -> None:
        self.store.reset_running_jobs()
        for index in range(self.workers):
            thread = threading.Thread(
                target=self._run, name=f"agrivoice-worker-{index}", daemon=True
            )
            thread.start()
            self._threads.append(thread)

    def stop(self, drain: bool = True) -> None:
        if drain:
            deadline = time.time() + 30.0
            while self.store.pending_jobs() and time.time() < deadline:
                time.sleep(self.poll_interval)
        self._stop.set()
        for thread in self._threads:
            thread.join(timeout=5.0)
        self._threads.clear()

    def _run(self) -> None:
        while not self._stop.is_set():
            job = self.store.claim_job()
            if job is None:
                self._stop.wait(self.poll_interval)
                continue
            handler = self.handlers.get(job["kind"])
            if handler is None:
                log.error("no handler for job kind %s", job["kind"])
                self.store.finish_job(job["id"], "failed")
                continue
            try:
                handler(job)
            except Exception as exc:  # noqa: BLE001 - jobs must never kill a worker
                if job["attempts"] + 1 < MAX_ATTEMPTS:
                    log.warning("job %s failed (%s); requeueing", job["id"], exc)
                    self.store.requeue_job(job["id"])
                else:
                    log.error("job %s failed permanently: %s", job["id"], exc)
                    self.store.finish_job(job["id"], "failed")
