import type { Segment } from "./api.js";
import { renderBoxOverlays } from "./overlay.js";

export type FrameViewOptions = {
  frameUrl(mediaId: string, frameNo: number): string;
  displayWidth: number;
  frameWidth?: number;
};

export type FrameView = {
  show(mediaId: string, segment: Segment): void;
  step(delta: number): void;
  currentFrame(): number | null;
};

// Single-frame inspector for a selected video segment: seek to the start
// frame, step within [start_frame, end_frame], always overlay the segment's
// peak box. A frame that fails to load is replaced by a placeholder whose
// Retry button re-requests the bytes with a cache-busting query.
export function createFrameView(root: HTMLElement, opts: FrameViewOptions): FrameView {
  let mediaId: string | null = null;
  let segment: Segment | null = null;
  let frameNo = 0;
  let attempt = 0;

  function paintOverlay(layer: HTMLElement, frameWidth: number): void {
    if (segment === null) return;
    renderBoxOverlays(layer, [segment.peak_box], opts.displayWidth / frameWidth, {
      bestBox: segment.peak_box,
      label: segment.peak_score.toFixed(3),
    });
  }

  function render(): void {
    root.textContent = "";
    if (mediaId === null || segment === null) return;

    const holder = document.createElement("div");
    holder.className = "frame-holder";
    holder.style.position = "relative";
    holder.style.width = `${opts.displayWidth}px`;

    const img = document.createElement("img");
    const url = opts.frameUrl(mediaId, frameNo);
    img.src = attempt === 0 ? url : `${url}?r=${attempt}`;
    img.alt = `${mediaId} frame ${frameNo}`;
    img.width = opts.displayWidth;

    const layer = document.createElement("div");
    layer.className = "overlay";
    layer.style.position = "absolute";
    layer.style.left = "0";
    layer.style.top = "0";

    if (opts.frameWidth !== undefined) {
      paintOverlay(layer, opts.frameWidth);
    } else {
      img.addEventListener("load", () => {
        if (img.naturalWidth > 0) paintOverlay(layer, img.naturalWidth);
      });
    }
    img.addEventListener("error", () => {
      const placeholder = document.createElement("div");
      placeholder.className = "placeholder";
      placeholder.textContent = `frame ${frameNo} unavailable `;
      const retry = document.createElement("button");
      retry.type = "button";
      retry.className = "retry";
      retry.textContent = "Retry";
      retry.addEventListener("click", () => {
        attempt += 1;
        render();
      });
      placeholder.appendChild(retry);
      holder.textContent = "";
      holder.appendChild(placeholder);
    });

    holder.append(img, layer);

    const controls = document.createElement("div");
    controls.className = "frame-controls";
    const prev = document.createElement("button");
    prev.type = "button";
    prev.className = "step-prev";
    prev.textContent = "<";
    prev.addEventListener("click", () => step(-1));
    const counter = document.createElement("span");
    counter.className = "frame-counter";
    counter.textContent = `frame ${frameNo} of ${segment.start_frame}-${segment.end_frame}`;
    const next = document.createElement("button");
    next.type = "button";
    next.className = "step-next";
    next.textContent = ">";
    next.addEventListener("click", () => step(1));
    controls.append(prev, counter, next);

    root.append(holder, controls);
  }

  function show(id: string, seg: Segment): void {
    mediaId = id;
    segment = seg;
    frameNo = seg.start_frame;
    attempt = 0;
    render();
  }

  function step(delta: number): void {
    if (segment === null) return;
    const lo = segment.start_frame;
    const hi = segment.end_frame;
    const next = Math.min(hi, Math.max(lo, frameNo + delta));
    if (next === frameNo) return;
    frameNo = next;
    attempt = 0;
    render();
  }

  return {
    show,
    step,
    currentFrame: () => (segment === null ? null : frameNo),
  };
}
