// App-shell service worker registration; keeps the UI reachable with poor
// connectivity. Uploads themselves go through the offline queue.

export async function registerServiceWorker(path = "/sw.js"): Promise<boolean> {
  if (typeof navigator === "undefined" || !("serviceWorker" in navigator)) {
    return false;
  }
  try {
    await navigator.serviceWorker.register(path);
    return true;
  } catch {
    return false;
  }
}
