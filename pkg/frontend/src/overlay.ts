/** Canvas compositing: the original image with the server's mask tinted on top.
 *
 * The mask PNG is composited 1:1 - the browser never re-derives segmentation.
 * In DOM environments without 2D canvas (tests), drawing is skipped; state
 * and fetches behave identically.
 */

const MASK_TINT: [number, number, number] = [255, 64, 64];
const MASK_ALPHA = 110;

export class OverlayRenderer {
  private ctx: CanvasRenderingContext2D | null;

  constructor(private canvas: HTMLCanvasElement) {
    this.ctx = canvas.getContext ? canvas.getContext("2d") : null;
  }

  get available(): boolean {
    return this.ctx !== null && typeof createImageBitmap === "function";
  }

  async draw(imageUrl: string, maskBytes: Uint8Array | null, showMask: boolean): Promise<void> {
    if (!this.available) return;
    const ctx = this.ctx!;
    const image = await this.loadBitmap(await (await fetch(imageUrl)).blob());
    this.canvas.width = image.width;
    this.canvas.height = image.height;
    ctx.drawImage(image, 0, 0);
    if (!showMask || maskBytes === null) return;

    const mask = await this.loadBitmap(new Blob([maskBytes as BlobPart], { type: "image/png" }));
    const scratch = document.createElement("canvas");
    scratch.width = mask.width;
    scratch.height = mask.height;
    const sctx = scratch.getContext("2d")!;
    sctx.drawImage(mask, 0, 0);
    const pixels = sctx.getImageData(0, 0, mask.width, mask.height);
    const data = pixels.data;
    for (let i = 0; i < data.length; i += 4) {
      const on = data[i] > 127;
      data[i] = MASK_TINT[0];
      data[i + 1] = MASK_TINT[1];
      data[i + 2] = MASK_TINT[2];
      data[i + 3] = on ? MASK_ALPHA : 0;
    }
    sctx.putImageData(pixels, 0, 0);
    ctx.drawImage(scratch, 0, 0);
  }

  private loadBitmap(blob: Blob): Promise<ImageBitmap> {
    return createImageBitmap(blob);
  }
}
