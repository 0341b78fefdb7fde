/**
 * Canvas <-> native image coordinate mapping with letterbox fit, zoom and
 * pan. Native pixel (x, y) occupies the canvas rectangle
 * [offsetX + x*scale, offsetX + (x+1)*scale) x [...y...), so converting a
 * canvas point back to a pixel index is a floor division and round-trips
 * with zero error at any zoom level.
 */

export interface ViewTransform {
  scale: number; // canvas pixels per native pixel
  offsetX: number; // canvas x of the left edge of native pixel column 0
  offsetY: number;
}

export interface PixelPoint {
  x: number;
  y: number;
}

/** Letterbox fit: image fully visible, centered, aspect preserved. */
export function fitTransform(
  imageW: number,
  imageH: number,
  canvasW: number,
  canvasH: number,
): ViewTransform {
  const scale = Math.min(canvasW / imageW, canvasH / imageH);
  return {
    scale,
    offsetX: (canvasW - imageW * scale) / 2,
    offsetY: (canvasH - imageH * scale) / 2,
  };
}

/** Native pixel index under a canvas point, or null when outside the image. */
export function canvasToNative(
  t: ViewTransform,
  canvasX: number,
  canvasY: number,
  imageW: number,
  imageH: number,
): PixelPoint | null {
  const x = Math.floor((canvasX - t.offsetX) / t.scale);
  const y = Math.floor((canvasY - t.offsetY) / t.scale);
  if (x < 0 || y < 0 || x >= imageW || y >= imageH) return null;
  return { x, y };
}

/** Canvas position of the CENTER of native pixel (x, y). */
export function nativeToCanvas(t: ViewTransform, x: number, y: number): { x: number; y: number } {
  return {
    x: t.offsetX + (x + 0.5) * t.scale,
    y: t.offsetY + (y + 0.5) * t.scale,
  };
}

/** Rescale around a fixed canvas point (e.g. the wheel cursor). */
export function zoomAt(
  t: ViewTransform,
  factor: number,
  canvasX: number,
  canvasY: number,
  minScale: number,
  maxScale = 64,
): ViewTransform {
  const scale = Math.min(maxScale, Math.max(minScale, t.scale * factor));
  const ratio = scale / t.scale;
  return {
    scale,
    offsetX: canvasX - (canvasX - t.offsetX) * ratio,
    offsetY: canvasY - (canvasY - t.offsetY) * ratio,
  };
}

export function pan(t: ViewTransform, dx: number, dy: number): ViewTransform {
  return { scale: t.scale, offsetX: t.offsetX + dx, offsetY: t.offsetY + dy };
}
