import type { MediaRecord, SearchApi } from "./api.js";
import { debounce } from "./debounce.js";
import { createFrameView } from "./frameView.js";
import { renderResultsGrid, renderSearchError } from "./grid.js";
import { renderTimeline } from "./timeline.js";

export const SLIDER_DEBOUNCE_MS = 150;
export const PAGE_SIZE = 24;
export const DISPLAY_WIDTH = 240;
export const SLIDER_MIN = 0;
export const SLIDER_MAX = 2;
export const SLIDER_STEP = 0.05;

export type ViewMode = "images" | "video";

export type ViewState = {
  className: string;
  threshold: number;
  mode: ViewMode;
  page: number;
  mediaId: string | null;
};

export type ConsoleOptions = {
  debounceMs?: number;
  displayWidth?: number;
  // Frame pixel width when the corpus is fixed-size; otherwise overlays are
  // scaled from each image's naturalWidth once it loads.
  frameWidth?: number;
};

export type Console = {
  init(): Promise<void>;
  refresh(): Promise<void>;
  getState(): ViewState;
};

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  className?: string,
  text?: string
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  if (className) node.className = className;
  if (text !== undefined) node.textContent = text;
  return node;
}

// The search console: pick a class, tune the threshold, browse ranked image
// results, or walk a video's segments. Queries are debounced while the slider
// moves and responses for superseded queries are dropped by sequence token.
export function createConsole(
  root: HTMLElement,
  api: SearchApi,
  opts: ConsoleOptions = {}
): Console {
  const displayWidth = opts.displayWidth ?? DISPLAY_WIDTH;
  const state: ViewState = {
    className: "",
    threshold: 0.5,
    mode: "images",
    page: 0,
    mediaId: null,
  };
  let videos: MediaRecord[] = [];
  let lastTotal = 0;
  let seq = 0;

  root.textContent = "";
  const container = el("div", "console");

  const controls = el("header", "controls");
  const classLabel = el("label", undefined, "class ");
  const classSelect = el("select", "class-select");
  classLabel.appendChild(classSelect);

  const thresholdLabel = el("label", undefined, "threshold ");
  const slider = el("input", "threshold");
  slider.type = "range";
  slider.min = String(SLIDER_MIN);
  slider.max = String(SLIDER_MAX);
  slider.step = String(SLIDER_STEP);
  slider.value = String(state.threshold);
  const readout = el("output", "threshold-value", state.threshold.toFixed(2));
  thresholdLabel.append(slider, readout);

  const modes = el("nav", "modes");
  const imagesBtn = el("button", "mode-images", "Images");
  imagesBtn.type = "button";
  const videoBtn = el("button", "mode-video", "Video");
  videoBtn.type = "button";
  modes.append(imagesBtn, videoBtn);

  const videoPicker = el("label", "video-picker hidden", "video ");
  const videoSelect = el("select", "video-select");
  videoPicker.appendChild(videoSelect);

  controls.append(classLabel, thresholdLabel, modes, videoPicker);

  const status = el("p", "status");
  const results = el("div", "results");
  const timeline = el("div", "timeline hidden");
  const frameRoot = el("div", "frame-view hidden");

  const pager = el("nav", "pager");
  const prevBtn = el("button", "page-prev", "Prev");
  prevBtn.type = "button";
  const pageLabel = el("span", "page-label", "page 1");
  const nextBtn = el("button", "page-next", "Next");
  nextBtn.type = "button";
  pager.append(prevBtn, pageLabel, nextBtn);

  container.append(controls, status, results, timeline, frameRoot, pager);
  root.appendChild(container);

  const frameView = createFrameView(frameRoot, {
    frameUrl: (id, n) => api.frameUrl(id, n),
    displayWidth,
    frameWidth: opts.frameWidth,
  });

  function setMode(mode: ViewMode): void {
    state.mode = mode;
    imagesBtn.setAttribute("aria-pressed", String(mode === "images"));
    videoBtn.setAttribute("aria-pressed", String(mode === "video"));
    results.classList.toggle("hidden", mode !== "images");
    pager.classList.toggle("hidden", mode !== "images");
    timeline.classList.toggle("hidden", mode !== "video");
    frameRoot.classList.toggle("hidden", mode !== "video");
    videoPicker.classList.toggle("hidden", mode !== "video");
  }

  function updatePager(): void {
    prevBtn.disabled = state.page === 0;
    nextBtn.disabled = (state.page + 1) * PAGE_SIZE >= lastTotal;
    pageLabel.textContent = `page ${state.page + 1}`;
  }

  function selectedVideo(): MediaRecord | undefined {
    return videos.find((m) => m.media_id === state.mediaId);
  }

  async function refresh(): Promise<void> {
    if (!state.className) return;
    const token = ++seq;
    try {
      if (state.mode === "images") {
        const page = await api.searchImages(
          state.className,
          state.threshold,
          PAGE_SIZE,
          state.page * PAGE_SIZE
        );
        if (token !== seq) return;
        lastTotal = page.total;
        renderResultsGrid(results, page.results, {
          frameUrl: (id, n) => api.frameUrl(id, n),
          displayWidth,
          frameWidth: opts.frameWidth,
        });
        status.textContent = `${page.total} match(es)`;
        updatePager();
      } else {
        const video = selectedVideo();
        if (video === undefined) {
          timeline.textContent = "";
          status.textContent = "no video selected";
          return;
        }
        const segs = await api.segments(
          video.media_id,
          state.className,
          state.threshold
        );
        if (token !== seq) return;
        renderTimeline(timeline, segs, {
          durationSeconds: video.frame_count / video.fps,
          onSeek: (seg) => frameView.show(video.media_id, seg),
        });
        status.textContent = `${segs.length} segment(s)`;
      }
    } catch (err) {
      if (token !== seq) return;
      const target = state.mode === "images" ? results : timeline;
      renderSearchError(target, err instanceof Error ? err.message : String(err));
      status.textContent = "error";
    }
  }

  const debouncedRefresh = debounce(() => {
    void refresh();
  }, opts.debounceMs ?? SLIDER_DEBOUNCE_MS);

  slider.addEventListener("input", () => {
    state.threshold = Number(slider.value);
    readout.textContent = state.threshold.toFixed(2);
    state.page = 0;
    debouncedRefresh();
  });
  classSelect.addEventListener("change", () => {
    state.className = classSelect.value;
    state.page = 0;
    debouncedRefresh.cancel();
    void refresh();
  });
  videoSelect.addEventListener("change", () => {
    state.mediaId = videoSelect.value;
    debouncedRefresh.cancel();
    void refresh();
  });
  imagesBtn.addEventListener("click", () => {
    setMode("images");
    debouncedRefresh.cancel();
    void refresh();
  });
  videoBtn.addEventListener("click", () => {
    setMode("video");
    debouncedRefresh.cancel();
    void refresh();
  });
  prevBtn.addEventListener("click", () => {
    if (state.page === 0) return;
    state.page -= 1;
    void refresh();
  });
  nextBtn.addEventListener("click", () => {
    if ((state.page + 1) * PAGE_SIZE >= lastTotal) return;
    state.page += 1;
    void refresh();
  });

  async function init(): Promise<void> {
    const [classes, media] = await Promise.all([api.classes(), api.listMedia()]);
    classSelect.textContent = "";
    for (const name of classes) {
      const option = document.createElement("option");
      option.value = name;
      option.textContent = name;
      classSelect.appendChild(option);
    }
    videos = media.filter((m) => m.kind === "video");
    videoSelect.textContent = "";
    for (const video of videos) {
      const option = document.createElement("option");
      option.value = video.media_id;
      option.textContent = video.media_id;
      videoSelect.appendChild(option);
    }
    state.className = classes[0] ?? "";
    state.mediaId = videos[0]?.media_id ?? null;
    setMode(state.mode);
    await refresh();
  }

  return {
    init,
    refresh,
    getState: () => ({ ...state }),
  };
}
