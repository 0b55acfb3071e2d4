import type { SearchHit } from "./api.js";
import { renderBoxOverlays } from "./overlay.js";

export type GridOptions = {
  frameUrl(mediaId: string, frameNo: number): string;
  // Width every card image is displayed at, in CSS pixels.
  displayWidth: number;
  // Frame pixel width when known up front (tests, fixed-size corpora).
  // Otherwise the overlay waits for the image to load and uses naturalWidth.
  frameWidth?: number;
};

export function renderResultCard(hit: SearchHit, opts: GridOptions): HTMLElement {
  const card = document.createElement("figure");
  card.className = "card";

  const holder = document.createElement("div");
  holder.className = "frame-holder";
  holder.style.position = "relative";
  holder.style.width = `${opts.displayWidth}px`;

  const img = document.createElement("img");
  img.src = opts.frameUrl(hit.media_id, hit.frame_no);
  img.alt = `${hit.media_id} frame ${hit.frame_no}`;
  img.width = opts.displayWidth;

  const layer = document.createElement("div");
  layer.className = "overlay";
  layer.style.position = "absolute";
  layer.style.left = "0";
  layer.style.top = "0";

  const paint = (frameWidth: number) => {
    renderBoxOverlays(layer, hit.boxes, opts.displayWidth / frameWidth, {
      bestBox: hit.best_box,
      label: hit.score.toFixed(3),
    });
  };
  if (opts.frameWidth !== undefined) {
    paint(opts.frameWidth);
  } else {
    img.addEventListener("load", () => {
      if (img.naturalWidth > 0) paint(img.naturalWidth);
    });
  }

  holder.append(img, layer);

  const caption = document.createElement("figcaption");
  caption.textContent = `${hit.media_id} #${hit.frame_no} score ${hit.score.toFixed(3)}`;

  card.append(holder, caption);
  return card;
}

// Cards appear in API order: ranking is server truth, the client never sorts.
export function renderResultsGrid(
  root: HTMLElement,
  hits: SearchHit[],
  opts: GridOptions
): void {
  root.textContent = "";
  if (hits.length === 0) {
    const empty = document.createElement("p");
    empty.className = "empty";
    empty.textContent = "No results";
    root.appendChild(empty);
    return;
  }
  for (const hit of hits) {
    root.appendChild(renderResultCard(hit, opts));
  }
}

export function renderSearchError(root: HTMLElement, message: string): void {
  root.textContent = "";
  const el = document.createElement("p");
  el.className = "error";
  el.textContent = `Search failed: ${message}`;
  root.appendChild(el);
}
