/** DOM wiring for the annotation surface.
 *
 * One App instance owns one view: the image at the session cursor, its mask
 * preview at the scrubbed offset, threshold readout, and progress. Preview
 * scrubbing is read-only; the only writes are the debounced offset commit
 * and the accept / fail / navigate actions, each an explicit user gesture.
 */

import { ApiClient, ApiError } from "./api.js";
import { debounce } from "./debounce.js";
import { OverlayRenderer } from "./overlay.js";
import { progressOf, stepEnabled, stepOffset, viewModelFor, type ViewModel } from "./state.js";

export const COMMIT_DEBOUNCE_MS = 300;

interface Elements {
  banner: HTMLElement;
  bannerMessage: HTMLElement;
  retry: HTMLButtonElement;
  canvas: HTMLCanvasElement;
  sideBySide: HTMLElement;
  sourceImage: HTMLImageElement;
  maskImage: HTMLImageElement;
  imageName: HTMLElement;
  statusBadge: HTMLElement;
  thresholds: HTMLElement;
  offsetReadout: HTMLElement;
  progressBar: HTMLElement;
  progressText: HTMLElement;
  minus: HTMLButtonElement;
  plus: HTMLButtonElement;
  minusCoarse: HTMLButtonElement;
  plusCoarse: HTMLButtonElement;
  accept: HTMLButtonElement;
  fail: HTMLButtonElement;
  prev: HTMLButtonElement;
  next: HTMLButtonElement;
  overlayToggle: HTMLInputElement;
}

function grab(doc: Document): Elements {
  const byId = <T extends HTMLElement>(id: string): T => {
    const el = doc.getElementById(id);
    if (!el) throw new Error(`missing #${id} in the page shell`);
    return el as T;
  };
  return {
    banner: byId("banner"),
    bannerMessage: byId("banner-message"),
    retry: byId("retry"),
    canvas: byId<HTMLCanvasElement>("viewer-canvas"),
    sideBySide: byId("side-by-side"),
    sourceImage: byId<HTMLImageElement>("source-image"),
    maskImage: byId<HTMLImageElement>("mask-image"),
    imageName: byId("image-name"),
    statusBadge: byId("status-badge"),
    thresholds: byId("threshold-readout"),
    offsetReadout: byId("offset-readout"),
    progressBar: byId("progress-bar"),
    progressText: byId("progress-text"),
    minus: byId<HTMLButtonElement>("threshold-minus"),
    plus: byId<HTMLButtonElement>("threshold-plus"),
    minusCoarse: byId<HTMLButtonElement>("threshold-minus-coarse"),
    plusCoarse: byId<HTMLButtonElement>("threshold-plus-coarse"),
    accept: byId<HTMLButtonElement>("accept"),
    fail: byId<HTMLButtonElement>("fail"),
    prev: byId<HTMLButtonElement>("nav-prev"),
    next: byId<HTMLButtonElement>("nav-next"),
    overlayToggle: byId<HTMLInputElement>("overlay-toggle"),
  };
}

export class App {
  vm: ViewModel | null = null;
  /** raw PNG bytes of the last successfully fetched preview mask */
  lastMaskBytes: Uint8Array | null = null;

  private readonly els: Elements;
  private readonly overlay: OverlayRenderer;
  private previewAbort: AbortController | null = null;
  private readonly commitDebounced: ReturnType<typeof debounce<[]>>;
  private commitPromise: Promise<void> | null = null;
  private inflight = 0;
  private idleWaiters: Array<() => void> = [];

  constructor(
    private readonly doc: Document,
    readonly api: ApiClient,
  ) {
    this.els = grab(doc);
    this.overlay = new OverlayRenderer(this.els.canvas);
    this.commitDebounced = debounce(() => {
      this.commitPromise = this.track(this.commitOffset());
    }, COMMIT_DEBOUNCE_MS);
    this.bind();
  }

  /** Resolves once every in-flight request has settled. */
  idle(): Promise<void> {
    if (this.inflight === 0) return Promise.resolve();
    return new Promise((resolve) => this.idleWaiters.push(resolve));
  }

  private track<T>(work: Promise<T>): Promise<T> {
    this.inflight += 1;
    const settle = () => {
      this.inflight -= 1;
      if (this.inflight === 0) {
        this.idleWaiters.forEach((w) => w());
        this.idleWaiters = [];
      }
    };
    work.then(settle, settle);
    return work;
  }

  start(): Promise<void> {
    return this.track(this.reloadFromServer());
  }

  // -- data flow -----------------------------------------------------------

  /** Rebuild the whole view from the API; the server cursor decides what shows. */
  private async reloadFromServer(): Promise<void> {
    try {
      const [summary, records] = await Promise.all([this.api.session(), this.api.records()]);
      this.vm = viewModelFor(records, summary);
      this.lastMaskBytes = null;
      this.hideBanner();
      await this.refreshPreview();
    } catch (err) {
      this.showError(err);
    }
    this.render();
  }

  /** Fetch the mask at the scrubbed offset; newer requests cancel older ones. */
  private async refreshPreview(): Promise<void> {
    const vm = this.vm;
    if (!vm) return;
    this.previewAbort?.abort();
    const abort = new AbortController();
    this.previewAbort = abort;
    try {
      const preview = await this.api.fetchMask(vm.imageId, vm.pendingOffset, abort.signal);
      if (abort.signal.aborted) return;
      vm.thresholds = preview.thresholds;
      vm.degenerate = false;
      this.lastMaskBytes = preview.bytes;
      this.hideBanner();
      await this.drawView();
    } catch (err) {
      if (err instanceof Error && err.name === "AbortError") return;
      if (err instanceof ApiError && err.code === "degenerate_image") {
        vm.degenerate = true;
        vm.thresholds = null;
        this.lastMaskBytes = null;
        this.showBanner("no segmentable histogram - mark the image failed or skip it");
        await this.drawView();
      } else {
        this.showError(err); // previous overlay stays on screen
      }
    }
    this.render();
  }

  private async drawView(): Promise<void> {
    const vm = this.vm;
    if (!vm) return;
    const url = this.api.imageUrl(vm.imageId);
    this.els.sourceImage.src = url;
    this.els.maskImage.src = this.api.maskUrl(vm.imageId, vm.pendingOffset);
    if (this.els.overlayToggle.checked) {
      await this.overlay
        .draw(url, this.lastMaskBytes, !vm.degenerate)
        .catch(() => undefined);
    }
  }

  // -- gestures -------------------------------------------------------------

  onThresholdClick(direction: 1 | -1, coarse: boolean): void {
    const vm = this.vm;
    if (!vm || !stepEnabled(vm, direction)) return;
    vm.pendingOffset = stepOffset(vm, direction, coarse);
    this.render();
    void this.track(this.refreshPreview());
    this.commitDebounced();
  }

  private async commitOffset(): Promise<void> {
    const vm = this.vm;
    if (!vm) return;
    const delta = vm.pendingOffset - vm.committedOffset;
    if (delta === 0) return;
    try {
      const response = await this.api.commitOffset(vm.imageId, delta);
      vm.committedOffset = response.record.user_offset;
      vm.pendingOffset = response.record.user_offset;
      vm.status = response.record.status;
      vm.progress = progressOf(response.summary);
    } catch (err) {
      this.showError(err);
    }
    this.render();
  }

  onAccept(): Promise<void> {
    return this.track(this.acceptCurrent());
  }

  private async acceptCurrent(): Promise<void> {
    const vm = this.vm;
    if (!vm || vm.degenerate) return;
    this.commitDebounced.flush();
    await this.settledCommit();
    try {
      await this.api.accept(vm.imageId);
      await this.reloadFromServer();
    } catch (err) {
      this.showError(err);
      this.render();
    }
  }

  onFail(): Promise<void> {
    return this.track(this.failCurrent());
  }

  private async failCurrent(): Promise<void> {
    const vm = this.vm;
    if (!vm) return;
    this.commitDebounced.cancel();
    try {
      await this.api.fail(vm.imageId);
      await this.reloadFromServer();
    } catch (err) {
      this.showError(err);
      this.render();
    }
  }

  onNavigate(direction: "next" | "prev"): Promise<void> {
    return this.track(this.navigate(direction));
  }

  private async navigate(direction: "next" | "prev"): Promise<void> {
    if (!this.vm) return;
    this.commitDebounced.flush();
    await this.settledCommit();
    try {
      await this.api.moveCursor(direction);
      await this.reloadFromServer(); // pendingOffset resets to the new record's committed offset
    } catch (err) {
      this.showError(err);
      this.render();
    }
  }

  /** Wait for a just-flushed offset commit to settle before acting on the record. */
  private async settledCommit(): Promise<void> {
    if (this.commitPromise) await this.commitPromise;
  }

  // -- rendering ----------------------------------------------------------------

  private render(): void {
    const vm = this.vm;
    const els = this.els;
    if (!vm) {
      els.imageName.textContent = "no session";
      return;
    }
    els.imageName.textContent = vm.imageId;
    els.statusBadge.textContent = vm.degenerate ? "degenerate" : vm.status;
    els.statusBadge.dataset.status = vm.degenerate ? "failed" : vm.status;

    const t = vm.thresholds;
    els.thresholds.textContent = t
      ? `THV1 ${t.thv1.toFixed(0)} | THV2 ${t.thv2.toFixed(0)} | ` +
        `UTHV ${t.uthv.toFixed(1)} | effective ${t.effective.toFixed(1)}`
      : "no thresholds";
    els.offsetReadout.textContent =
      vm.pendingOffset === vm.committedOffset
        ? `${vm.pendingOffset}`
        : `${vm.pendingOffset} (committing...)`;

    const { pending, accepted, failed, total } = vm.progress;
    els.progressText.textContent = `${accepted} accepted, ${failed} failed, ${pending} pending of ${total}`;
    const done = total === 0 ? 0 : Math.round(((accepted + failed) / total) * 100);
    els.progressBar.style.width = `${done}%`;

    els.plus.disabled = !stepEnabled(vm, 1);
    els.plusCoarse.disabled = !stepEnabled(vm, 1);
    els.minus.disabled = !stepEnabled(vm, -1);
    els.minusCoarse.disabled = !stepEnabled(vm, -1);
    els.accept.disabled = vm.degenerate || vm.orphaned;
    els.fail.classList.toggle("suggested", vm.degenerate);

    els.canvas.hidden = !els.overlayToggle.checked;
    els.sideBySide.hidden = els.overlayToggle.checked;
  }

  private showBanner(message: string): void {
    this.els.bannerMessage.textContent = message;
    this.els.banner.hidden = false;
  }

  private hideBanner(): void {
    this.els.banner.hidden = true;
    this.els.bannerMessage.textContent = "";
  }

  private showError(err: unknown): void {
    const message = err instanceof Error ? err.message : String(err);
    this.showBanner(message);
  }

  // -- events --------------------------------------------------------------------

  private bind(): void {
    const els = this.els;
    els.plus.addEventListener("click", () => this.onThresholdClick(1, false));
    els.minus.addEventListener("click", () => this.onThresholdClick(-1, false));
    els.plusCoarse.addEventListener("click", () => this.onThresholdClick(1, true));
    els.minusCoarse.addEventListener("click", () => this.onThresholdClick(-1, true));
    els.accept.addEventListener("click", () => void this.onAccept());
    els.fail.addEventListener("click", () => void this.onFail());
    els.next.addEventListener("click", () => void this.onNavigate("next"));
    els.prev.addEventListener("click", () => void this.onNavigate("prev"));
    els.retry.addEventListener("click", () => void this.track(this.reloadFromServer()));
    els.overlayToggle.addEventListener("change", () => {
      this.render();
      void this.track(this.drawView());
    });

    this.doc.addEventListener("keydown", (event) => {
      const key = (event as KeyboardEvent).key;
      const shift = (event as KeyboardEvent).shiftKey;
      switch (key) {
        case "ArrowRight":
          void this.onNavigate("next");
          break;
        case "ArrowLeft":
          void this.onNavigate("prev");
          break;
        case "Enter":
          void this.onAccept();
          break;
        case "Delete":
          void this.onFail();
          break;
        case "+":
        case "=":
          this.onThresholdClick(1, shift);
          break;
        case "-":
        case "_":
          this.onThresholdClick(-1, shift);
          break;
      }
    });
  }
}

export function boot(doc: Document, base = ""): App {
  const app = new App(doc, new ApiClient(base));
  void app.start();
  return app;
}
