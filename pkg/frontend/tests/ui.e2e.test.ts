/** End-to-end acceptance: the UI against a live phantom-backed service.
 *
 * Covers the release criteria for the browser surface: a threshold "+"
 * click shrinks-or-holds the overlay mask and triggers exactly one
 * debounced commit; Enter accepts and advances; Delete routes the image to
 * failed/; and a full reload rebuilds an identical view from the API alone.
 */

import { existsSync } from "node:fs";
import { join } from "node:path";

import { PNG } from "pngjs";
import { afterAll, beforeAll, beforeEach, describe, expect, it } from "vitest";

import { ApiClient } from "../src/api.js";
import { App, COMMIT_DEBOUNCE_MS } from "../src/app.js";
import { mountShell } from "./dom.js";
import { startPhantomServer, type TestServer } from "./server.js";

let server: TestServer;

beforeAll(async () => {
  server = await startPhantomServer(3, 5, { withDegenerate: true });
  // the bundle is served from the same origin as the API; mirror that here
  // so happy-dom's same-origin policy sees first-party requests
  (window as unknown as { happyDOM: { setURL(url: string): void } }).happyDOM.setURL(
    `${server.base}/`,
  );
});

afterAll(async () => {
  await server.stop();
});

beforeEach(() => {
  mountShell(document);
});

function nucleusPixels(png: Uint8Array): number {
  const decoded = PNG.sync.read(Buffer.from(png));
  let on = 0;
  for (let i = 0; i < decoded.data.length; i += 4) {
    if (decoded.data[i] > 127) on += 1;
  }
  return on;
}

async function startApp(): Promise<App> {
  const app = new App(document, new ApiClient(server.base));
  await app.start();
  await app.idle();
  return app;
}

function sleep(ms: number): Promise<void> {
  return new Promise((resolve) => setTimeout(resolve, ms));
}

function press(key: string): void {
  document.dispatchEvent(new KeyboardEvent("keydown", { key, bubbles: true }));
}

async function resetSession(app: App): Promise<void> {
  // walk the cursor back and clear any committed offset so tests are independent
  const records = await app.api.records();
  for (const record of records) {
    if (record.user_offset !== 0) {
      await app.api.commitOffset(record.image_id, -record.user_offset);
    }
  }
  while ((await app.api.session()).cursor > 0) {
    await app.api.moveCursor("prev");
  }
}

describe("annotation surface against a live service", () => {
  it("boots from the API with the first pending image", async () => {
    const app = await startApp();
    expect(app.vm).not.toBeNull();
    expect(app.vm!.imageId).toBe("img_0001.png");
    expect(app.vm!.thresholds).not.toBeNull();
    expect(app.lastMaskBytes).not.toBeNull();
    expect(document.getElementById("banner")!.hidden).toBe(true);
    expect(document.getElementById("image-name")!.textContent).toBe("img_0001.png");
    await resetSession(app);
  });

  it("threshold + click shrinks-or-holds the overlay and commits exactly once", async () => {
    const app = await startApp();
    const before = nucleusPixels(app.lastMaskBytes!);

    let offsetPosts = 0;
    const realFetch = globalThis.fetch;
    globalThis.fetch = ((input: RequestInfo | URL, init?: RequestInit) => {
      if (String(input).endsWith("/offset") && init?.method === "POST") offsetPosts += 1;
      return realFetch(input, init);
    }) as typeof fetch;

    try {
      const plus = document.getElementById("threshold-plus") as HTMLButtonElement;
      for (let i = 0; i < 5; i++) plus.click(); // one rapid burst
      await app.idle();

      expect(app.vm!.pendingOffset).toBe(5);
      const after = nucleusPixels(app.lastMaskBytes!);
      expect(after).toBeLessThanOrEqual(before); // higher threshold never grows the mask

      await sleep(COMMIT_DEBOUNCE_MS + 150);
      await app.idle();
      expect(offsetPosts).toBe(1); // a burst of five clicks -> exactly one POST
      expect(app.vm!.committedOffset).toBe(5);
    } finally {
      globalThis.fetch = realFetch;
    }
    await resetSession(app);
  });

  it("Enter accepts the current image and advances to the next", async () => {
    const app = await startApp();
    expect(app.vm!.imageId).toBe("img_0001.png");

    press("Enter");
    await app.idle();

    expect(app.vm!.imageId).toBe("img_0002.png");
    expect(app.vm!.progress.accepted).toBe(1);
    expect(existsSync(join(server.folder, "masks", "img_0001.png"))).toBe(true);
    const summary = await app.api.session();
    expect(summary.accepted).toBe(1);
    expect(summary.cursor).toBe(1);
  });

  it("Delete routes the current image to failed/", async () => {
    const app = await startApp();
    const victim = app.vm!.imageId;

    press("Delete");
    await app.idle();

    expect(existsSync(join(server.folder, "failed", victim))).toBe(true);
    expect(app.vm!.progress.failed).toBe(1);
    expect(app.vm!.imageId).not.toBe(victim);
  });

  it("a full reload reconstructs the identical view from the API", async () => {
    const first = await startApp();
    // put the session into a non-trivial state: scrub, commit, and re-render
    first.onThresholdClick(-1, true);
    first.onThresholdClick(-1, false);
    await first.idle();
    await sleep(COMMIT_DEBOUNCE_MS + 150);
    await first.idle();

    const snapshot = {
      vm: structuredClone(first.vm),
      mask: nucleusPixels(first.lastMaskBytes!),
      name: document.getElementById("image-name")!.textContent,
      thresholds: document.getElementById("threshold-readout")!.textContent,
      offset: document.getElementById("offset-readout")!.textContent,
      progress: document.getElementById("progress-text")!.textContent,
    };

    mountShell(document); // fresh DOM, fresh App: simulates the browser reload
    const second = await startApp();

    expect(second.vm).toEqual(snapshot.vm);
    expect(nucleusPixels(second.lastMaskBytes!)).toBe(snapshot.mask);
    expect(document.getElementById("image-name")!.textContent).toBe(snapshot.name);
    expect(document.getElementById("threshold-readout")!.textContent).toBe(snapshot.thresholds);
    expect(document.getElementById("offset-readout")!.textContent).toBe(snapshot.offset);
    expect(document.getElementById("progress-text")!.textContent).toBe(snapshot.progress);
    await resetSession(second);
  });

  it("arrow keys navigate with saturation and reset the scrub offset", async () => {
    const app = await startApp();
    const firstId = app.vm!.imageId;

    press("ArrowLeft"); // already at the first image
    await app.idle();
    expect(app.vm!.imageId).toBe(firstId);

    press("ArrowRight");
    await app.idle();
    expect(app.vm!.imageId).not.toBe(firstId);
    expect(app.vm!.pendingOffset).toBe(app.vm!.committedOffset);
    await resetSession(app);
  });

  it("navigating away mid-scrub flushes the pending commit first", async () => {
    const app = await startApp();
    const scrubbed = app.vm!.imageId;
    app.onThresholdClick(1, false);
    app.onThresholdClick(1, false);
    await app.idle();
    await app.onNavigate("next"); // before the 300 ms debounce fires
    await app.idle();

    const records = await app.api.records();
    const record = records.find((r) => r.image_id === scrubbed)!;
    expect(record.user_offset).toBe(2); // the burst was committed, not lost
    await resetSession(app);
  });

  it("a degenerate image shows the banner and suggests failing it", async () => {
    const app = await startApp();
    for (let hops = 0; app.vm!.imageId !== "zz_flat.png" && hops < 10; hops++) {
      await app.onNavigate("next");
      await app.idle();
    }
    expect(app.vm!.imageId).toBe("zz_flat.png");
    expect(app.vm!.degenerate).toBe(true);
    expect(app.vm!.thresholds).toBeNull();
    expect(app.lastMaskBytes).toBeNull();

    const banner = document.getElementById("banner")!;
    expect(banner.hidden).toBe(false);
    expect(document.getElementById("banner-message")!.textContent).toContain(
      "no segmentable histogram",
    );
    expect((document.getElementById("accept") as HTMLButtonElement).disabled).toBe(true);
    expect((document.getElementById("threshold-plus") as HTMLButtonElement).disabled).toBe(true);
    expect(document.getElementById("fail")!.classList.contains("suggested")).toBe(true);
    await resetSession(app);
  });
});
