/**
 * Trimap overlay rasterization. Class colors follow the click convention
 * used everywhere in this project: foreground red, background blue,
 * unknown green. The overlay is built strictly from the server-provided
 * raster; the client never predicts anything itself.
 */

export const CLASS_COLORS: Record<number, [number, number, number]> = {
  0: [255, 64, 64], // foreground
  1: [64, 96, 255], // background
  2: [64, 220, 96], // unknown
};

export const CLASS_LETTERS: Record<string, number> = { F: 0, B: 1, U: 2 };

/**
 * RGBA bytes (length w*h*4) for a semi-transparent three-color overlay.
 * `opacity` in [0, 1]; 0 yields a fully transparent overlay (raw image).
 */
export function trimapOverlayRgba(labels: Uint8Array, opacity: number) {
  const out = new Uint8ClampedArray(labels.length * 4);
  const a = Math.round(255 * Math.min(1, Math.max(0, opacity)));
  for (let i = 0; i < labels.length; i++) {
    const color = CLASS_COLORS[labels[i]!];
    if (!color) throw new Error(`unknown trimap label ${labels[i]}`);
    out[i * 4] = color[0];
    out[i * 4 + 1] = color[1];
    out[i * 4 + 2] = color[2];
    out[i * 4 + 3] = a;
  }
  return out;
}

export function cssColor(label: number, alpha = 1): string {
  const c = CLASS_COLORS[label];
  if (!c) throw new Error(`unknown trimap label ${label}`);
  return `rgba(${c[0]}, ${c[1]}, ${c[2]}, ${alpha})`;
}
