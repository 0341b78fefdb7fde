/**
 * Canvas UI for the interactive trimap loop: upload an image, place
 * foreground/background/unknown clicks, and watch the live trimap overlay
 * and alpha preview. All rasters come from the server; one mutation is in
 * flight at a time.
 */

import { ApiError, SessionApi, type ClassLetter, type SessionState } from "./api.js";
import {
  canvasToNative,
  fitTransform,
  nativeToCanvas,
  pan,
  zoomAt,
  type ViewTransform,
} from "./coords.js";
import { CLASS_LETTERS, cssColor, trimapOverlayRgba } from "./overlay.js";
import { decodeRle } from "./rle.js";

const api = new SessionApi("");

interface UiState {
  session: SessionState | null;
  imageBitmap: ImageBitmap | null;
  overlayCanvas: HTMLCanvasElement | null;
  alphaUrl: string | null;
  selectedClass: ClassLetter;
  transform: ViewTransform;
  overlayOpacity: number;
  showOverlay: boolean;
  busy: boolean;
  ghost: { x: number; y: number; label: ClassLetter } | null;
  gtTrimap: File | null;
  gtAlpha: File | null;
}

const state: UiState = {
  session: null,
  imageBitmap: null,
  overlayCanvas: null,
  alphaUrl: null,
  selectedClass: "F",
  transform: { scale: 1, offsetX: 0, offsetY: 0 },
  overlayOpacity: 0.45,
  showOverlay: true,
  busy: false,
  ghost: null,
  gtTrimap: null,
  gtAlpha: null,
};

const $ = <T extends HTMLElement>(id: string): T => {
  const el = document.getElementById(id);
  if (!el) throw new Error(`missing element #${id}`);
  return el as T;
};

const canvas = $<HTMLCanvasElement>("view");
const ctx = canvas.getContext("2d")!;
const alphaImg = $<HTMLImageElement>("alpha-preview");
const statusEl = $<HTMLSpanElement>("status");
const metricsEl = $<HTMLDivElement>("metrics");

function setStatus(text: string, isError = false) {
  statusEl.textContent = text;
  statusEl.className = isError ? "error" : "";
}

function setBusy(busy: boolean) {
  state.busy = busy;
  document.body.classList.toggle("busy", busy);
}

function rebuildOverlay() {
  const s = state.session;
  if (!s || !s.trimap_rle) {
    state.overlayCanvas = null;
    return;
  }
  const labels = decodeRle(s.trimap_rle);
  const rgba = trimapOverlayRgba(labels, 1.0); // opacity applied at draw time
  const off = document.createElement("canvas");
  off.width = s.width;
  off.height = s.height;
  off.getContext("2d")!.putImageData(new ImageData(rgba, s.width, s.height), 0, 0);
  state.overlayCanvas = off;
}

function draw() {
  const { width: cw, height: ch } = canvas;
  ctx.clearRect(0, 0, cw, ch);
  const bitmap = state.imageBitmap;
  const s = state.session;
  if (!bitmap || !s) return;
  const t = state.transform;
  ctx.imageSmoothingEnabled = t.scale < 1;
  ctx.drawImage(bitmap, t.offsetX, t.offsetY, s.width * t.scale, s.height * t.scale);
  if (state.showOverlay && state.overlayCanvas && state.overlayOpacity > 0) {
    ctx.globalAlpha = state.overlayOpacity;
    ctx.imageSmoothingEnabled = false;
    ctx.drawImage(state.overlayCanvas, t.offsetX, t.offsetY, s.width * t.scale, s.height * t.scale);
    ctx.globalAlpha = 1;
  }
  for (const click of s.clicks) {
    const p = nativeToCanvas(t, click.x, click.y);
    ctx.beginPath();
    ctx.arc(p.x, p.y, 5, 0, Math.PI * 2);
    ctx.fillStyle = cssColor(CLASS_LETTERS[click.label]!, 0.95);
    ctx.fill();
    ctx.lineWidth = 1.5;
    ctx.strokeStyle = "white";
    ctx.stroke();
  }
  if (state.ghost) {
    const p = nativeToCanvas(t, state.ghost.x, state.ghost.y);
    ctx.beginPath();
    ctx.setLineDash([4, 3]);
    ctx.arc(p.x, p.y, 8, 0, Math.PI * 2);
    ctx.strokeStyle = cssColor(CLASS_LETTERS[state.ghost.label]!, 1);
    ctx.lineWidth = 2.5;
    ctx.stroke();
    ctx.setLineDash([]);
  }
}

function renderMetrics() {
  const m = state.session?.metrics ?? null;
  if (!m) {
    metricsEl.textContent = state.session ? "no ground truth loaded" : "";
    return;
  }
  const fmt = (v: number | null, digits: number) => (v === null ? "-" : v.toFixed(digits));
  metricsEl.innerHTML =
    `<span>MSE&times;10&sup3; <b>${fmt(m.mse, 3)}</b></span>` +
    `<span>SAD/10&sup3; <b>${fmt(m.sad, 4)}</b></span>` +
    `<span>MAD <b>${fmt(m.mad, 4)}</b></span>` +
    `<span>pixel err <b>${fmt(m.pixel_err, 4)}</b></span>`;
}

async function applyState(s: SessionState) {
  state.session = s;
  state.ghost = null;
  rebuildOverlay();
  if (state.alphaUrl) URL.revokeObjectURL(state.alphaUrl);
  const alphaBytes = Uint8Array.from(atob(s.alpha_png), (c) => c.charCodeAt(0));
  state.alphaUrl = URL.createObjectURL(new Blob([alphaBytes], { type: "image/png" }));
  alphaImg.src = state.alphaUrl;
  renderMetrics();
  $<HTMLButtonElement>("undo").disabled = s.clicks.length === 0;
  $<HTMLButtonElement>("suggest").disabled = !s.has_gt;
  draw();
}

function resetView() {
  const s = state.session;
  if (!s) return;
  state.transform = fitTransform(s.width, s.height, canvas.width, canvas.height);
  draw();
}

async function mutate(action: () => Promise<SessionState>, label: string) {
  if (state.busy || !state.session) return;
  setBusy(true);
  const started = performance.now();
  try {
    await applyState(await action());
    setStatus(`${label} (${Math.round(performance.now() - started)} ms)`);
  } catch (err) {
    setStatus(err instanceof ApiError ? `${err.code}: ${err.message}` : String(err), true);
  } finally {
    setBusy(false);
  }
}

async function uploadImage(file: File) {
  setBusy(true);
  setStatus("uploading...");
  try {
    const s = await api.createSession(
      file,
      state.gtAlpha ?? undefined,
      state.gtTrimap ?? undefined,
    );
    const bytes = Uint8Array.from(atob(s.trimap_png), (c) => c.charCodeAt(0));
    void bytes; // trimap raster comes from the RLE; png stays available for export
    state.imageBitmap = await createImageBitmap(file);
    await applyState(s);
    resetView();
    setStatus(`session ${s.id.slice(0, 8)}… ${s.width}x${s.height}, predictor ${s.predictor}`);
  } catch (err) {
    setStatus(err instanceof ApiError ? `${err.code}: ${err.message}` : String(err), true);
  } finally {
    setBusy(false);
  }
}

function selectClass(letter: ClassLetter) {
  state.selectedClass = letter;
  for (const input of document.querySelectorAll<HTMLInputElement>("input[name=cls]")) {
    input.checked = input.value === letter;
  }
}

function wireEvents() {
  $<HTMLInputElement>("image-file").addEventListener("change", (ev) => {
    const file = (ev.target as HTMLInputElement).files?.[0];
    if (file) void uploadImage(file);
  });
  $<HTMLInputElement>("gt-trimap-file").addEventListener("change", (ev) => {
    state.gtTrimap = (ev.target as HTMLInputElement).files?.[0] ?? null;
  });
  $<HTMLInputElement>("gt-alpha-file").addEventListener("change", (ev) => {
    state.gtAlpha = (ev.target as HTMLInputElement).files?.[0] ?? null;
  });

  canvas.addEventListener("click", (ev) => {
    const s = state.session;
    if (!s || state.busy) return;
    const rect = canvas.getBoundingClientRect();
    const point = canvasToNative(
      state.transform,
      ev.clientX - rect.left,
      ev.clientY - rect.top,
      s.width,
      s.height,
    );
    if (!point) return; // outside the image area
    void mutate(
      () => api.addClick(s.id, point.x, point.y, state.selectedClass),
      `${state.selectedClass} click at (${point.x}, ${point.y})`,
    );
  });

  canvas.addEventListener("wheel", (ev) => {
    if (!state.session) return;
    ev.preventDefault();
    const rect = canvas.getBoundingClientRect();
    const fit = fitTransform(state.session.width, state.session.height, canvas.width, canvas.height);
    state.transform = zoomAt(
      state.transform,
      ev.deltaY < 0 ? 1.25 : 0.8,
      ev.clientX - rect.left,
      ev.clientY - rect.top,
      fit.scale,
    );
    draw();
  });

  let dragging: { x: number; y: number } | null = null;
  canvas.addEventListener("pointerdown", (ev) => {
    if (ev.button === 1 || ev.shiftKey) {
      dragging = { x: ev.clientX, y: ev.clientY };
      ev.preventDefault();
    }
  });
  window.addEventListener("pointermove", (ev) => {
    if (!dragging) return;
    state.transform = pan(state.transform, ev.clientX - dragging.x, ev.clientY - dragging.y);
    dragging = { x: ev.clientX, y: ev.clientY };
    draw();
  });
  window.addEventListener("pointerup", () => {
    dragging = null;
  });

  window.addEventListener("keydown", (ev) => {
    if (ev.target instanceof HTMLInputElement) return;
    if (ev.key === "f" || ev.key === "F") selectClass("F");
    else if (ev.key === "b" || ev.key === "B") selectClass("B");
    else if (ev.key === "u" || ev.key === "U") selectClass("U");
    else if (ev.key === "Tab") {
      ev.preventDefault();
      const order: ClassLetter[] = ["F", "B", "U"];
      selectClass(order[(order.indexOf(state.selectedClass) + 1) % 3]!);
    } else if (ev.key === "z" && (ev.ctrlKey || ev.metaKey)) {
      ev.preventDefault();
      $<HTMLButtonElement>("undo").click();
    }
  });

  for (const input of document.querySelectorAll<HTMLInputElement>("input[name=cls]")) {
    input.addEventListener("change", () => selectClass(input.value as ClassLetter));
  }

  $<HTMLButtonElement>("undo").addEventListener("click", () => {
    const s = state.session;
    if (s) void mutate(() => api.undo(s.id), "undo");
  });
  $<HTMLButtonElement>("reset").addEventListener("click", () => {
    const s = state.session;
    if (s) void mutate(() => api.reset(s.id), "reset");
  });
  $<HTMLButtonElement>("fit").addEventListener("click", resetView);

  $<HTMLButtonElement>("suggest").addEventListener("click", async () => {
    const s = state.session;
    if (!s || state.busy) return;
    try {
      const suggestion = await api.suggest(s.id);
      if (suggestion.converged || !suggestion.click) {
        setStatus("simulator: converged, nothing left to correct");
        state.ghost = null;
      } else {
        state.ghost = {
          x: suggestion.click.x,
          y: suggestion.click.y,
          label: suggestion.click.label,
        };
        setStatus(
          `simulator suggests a ${suggestion.click.label} click at ` +
            `(${suggestion.click.x}, ${suggestion.click.y})`,
        );
      }
      draw();
    } catch (err) {
      setStatus(err instanceof ApiError ? `${err.code}: ${err.message}` : String(err), true);
    }
  });

  const opacity = $<HTMLInputElement>("opacity");
  opacity.addEventListener("input", () => {
    state.overlayOpacity = Number(opacity.value) / 100;
    draw();
  });
  $<HTMLInputElement>("show-overlay").addEventListener("change", (ev) => {
    state.showOverlay = (ev.target as HTMLInputElement).checked;
    draw();
  });
}

wireEvents();
selectClass("F");
setStatus("upload an image to start (optional: ground-truth trimap/alpha for metrics & suggestions)");
