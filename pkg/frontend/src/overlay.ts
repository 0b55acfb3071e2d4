import type { Box } from "./api.js";

export type Rect = { left: number; top: number; width: number; height: number };

// Boxes arrive as [x0, y0, x1, y1] in frame pixels; display positions are the
// same coordinates under a uniform scale. No geometry is recomputed client-side.
export function scaleBox(box: Box, scale: number): Rect {
  const [x0, y0, x1, y1] = box;
  return {
    left: x0 * scale,
    top: y0 * scale,
    width: (x1 - x0) * scale,
    height: (y1 - y0) * scale,
  };
}

function sameBox(a: Box, b: Box): boolean {
  return a[0] === b[0] && a[1] === b[1] && a[2] === b[2] && a[3] === b[3];
}

export type OverlayOptions = {
  bestBox?: Box;
  label?: string;
};

// Positioned-div overlay over the frame image. The layer element must be
// absolutely positioned over the <img> by the caller.
export function renderBoxOverlays(
  layer: HTMLElement,
  boxes: Box[],
  scale: number,
  opts: OverlayOptions = {}
): void {
  layer.textContent = "";
  for (const box of boxes) {
    const best = opts.bestBox !== undefined && sameBox(box, opts.bestBox);
    const r = scaleBox(box, scale);
    const el = document.createElement("div");
    el.className = best ? "box box-best" : "box";
    el.style.position = "absolute";
    el.style.left = `${r.left}px`;
    el.style.top = `${r.top}px`;
    el.style.width = `${r.width}px`;
    el.style.height = `${r.height}px`;
    if (best && opts.label) {
      const chip = document.createElement("span");
      chip.className = "box-label";
      chip.textContent = opts.label;
      el.appendChild(chip);
    }
    layer.appendChild(el);
  }
}
