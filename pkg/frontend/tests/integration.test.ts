/**
 * End-to-end checks against a live session service. Skipped unless
 * TRIMAPPER_SERVICE_URL points at a running `trimapper serve` instance:
 *
 *   trimapper serve --port 8011 &
 *   TRIMAPPER_SERVICE_URL=http://127.0.0.1:8011 npm test
 */

import { PNG } from "pngjs";
import { describe, expect, it } from "vitest";

import { SessionApi, type ClassLetter } from "../src/api.js";
import { canvasToNative, fitTransform, nativeToCanvas, zoomAt } from "../src/coords.js";
import { decodeRle } from "../src/rle.js";

const BASE = process.env.TRIMAPPER_SERVICE_URL;

function testImagePng(width: number, height: number): Buffer {
  const png = new PNG({ width, height });
  for (let y = 0; y < height; y++) {
    for (let x = 0; x < width; x++) {
      const i = (y * width + x) * 4;
      png.data[i] = Math.round((255 * x) / (width - 1));
      png.data[i + 1] = Math.round((255 * y) / (height - 1));
      png.data[i + 2] = 96;
      png.data[i + 3] = 255;
    }
  }
  return PNG.sync.write(png);
}

/** Server trimap PNG (0/128/255 gray) -> class codes (F=0, B=1, U=2). */
function decodeTrimapPng(b64: string): Uint8Array {
  const png = PNG.sync.read(Buffer.from(b64, "base64"));
  const out = new Uint8Array(png.width * png.height);
  for (let i = 0; i < out.length; i++) {
    const gray = png.data[i * 4]!;
    out[i] = gray < 64 ? 1 : gray >= 192 ? 0 : 2;
  }
  return out;
}

describe.skipIf(!BASE)("live service", () => {
  const api = new SessionApi(BASE!);

  it("runs the interactive smoke: upload, 5 clicks, live alpha, 300ms budget", async () => {
    const image = new Blob([testImagePng(64, 64)], { type: "image/png" });
    let state = await api.createSession(image);
    expect(state.width).toBe(64);
    expect(state.height).toBe(64);
    expect(state.clicks).toEqual([]);

    // scripted canvas clicks at three zoom levels, mapped like the UI does
    const fit = fitTransform(64, 64, 960, 720);
    const transforms = [fit, zoomAt(fit, 2, 480, 360, fit.scale), zoomAt(fit, 4, 200, 300, fit.scale)];
    const script: Array<{ x: number; y: number; label: ClassLetter }> = [
      { x: 32, y: 32, label: "F" },
      { x: 2, y: 3, label: "B" },
      { x: 61, y: 60, label: "B" },
      { x: 20, y: 40, label: "U" },
      { x: 50, y: 11, label: "F" },
    ];
    let previousAlpha = state.alpha_png;
    for (let i = 0; i < script.length; i++) {
      const target = script[i]!;
      const t = transforms[i % transforms.length]!;
      const canvasPoint = nativeToCanvas(t, target.x, target.y);
      const mapped = canvasToNative(t, canvasPoint.x, canvasPoint.y, 64, 64)!;
      expect(mapped).toEqual({ x: target.x, y: target.y }); // 0-pixel mapping

      const started = performance.now();
      state = await api.addClick(state.id, mapped.x, mapped.y, target.label);
      const elapsed = performance.now() - started;
      expect(elapsed).toBeLessThan(300);

      const echoed = state.clicks[state.clicks.length - 1]!;
      expect({ x: echoed.x, y: echoed.y, label: echoed.label }).toEqual(target);
      expect(state.alpha_png.length).toBeGreaterThan(0);
      expect(state.alpha_png).not.toBe(previousAlpha); // preview updated
      previousAlpha = state.alpha_png;
    }
    expect(state.clicks.map((c) => c.ordinal)).toEqual([0, 1, 2, 3, 4]);
  }, 30_000);

  it("serves identical rasters through PNG and RLE", async () => {
    const image = new Blob([testImagePng(48, 32)], { type: "image/png" });
    let state = await api.createSession(image);
    state = await api.addClick(state.id, 24, 16, "F");
    state = await api.addClick(state.id, 1, 1, "B");
    const full = await api.getState(state.id);
    expect(full.trimap_rle).toBeDefined();
    const fromRle = decodeRle(full.trimap_rle!);
    const fromPng = decodeTrimapPng(full.trimap_png);
    expect(fromRle).toEqual(fromPng);
  }, 30_000);

  it("undo restores the previous overlay", async () => {
    const image = new Blob([testImagePng(32, 32)], { type: "image/png" });
    let state = await api.createSession(image);
    state = await api.addClick(state.id, 16, 16, "F");
    const before = { trimap: state.trimap_png, alpha: state.alpha_png };
    await api.addClick(state.id, 2, 2, "B");
    const undone = await api.undo(state.id);
    expect(undone.trimap_png).toBe(before.trimap);
    expect(undone.alpha_png).toBe(before.alpha);
  }, 30_000);
});
