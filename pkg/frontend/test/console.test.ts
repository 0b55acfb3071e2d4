import { afterEach, describe, expect, it, vi } from "vitest";

import type { SearchApi, SearchPage } from "../src/api.js";
import { createConsole } from "../src/console.js";
import {
  DISPLAY_WIDTH,
  FRAME_WIDTH,
  fakeApi,
  flushMicrotasks,
  twoHits,
} from "./fixtures.js";

const OPTS = { displayWidth: DISPLAY_WIDTH, frameWidth: FRAME_WIDTH };

function mount(): HTMLElement {
  return document.createElement("div");
}

function slider(root: HTMLElement): HTMLInputElement {
  return root.querySelector<HTMLInputElement>("input.threshold")!;
}

function moveSlider(root: HTMLElement, value: string): void {
  const input = slider(root);
  input.value = value;
  input.dispatchEvent(new Event("input"));
}

afterEach(() => {
  vi.useRealTimers();
});

describe("search console", () => {
  it("rapid slider movement emits exactly one search request", async () => {
    vi.useFakeTimers();
    const { api, searchCalls } = fakeApi();
    const root = mount();
    const ui = createConsole(root, api, OPTS);
    await ui.init();
    const before = searchCalls.length;

    for (const value of ["0.60", "0.70", "0.80"]) {
      moveSlider(root, value);
      vi.advanceTimersByTime(50);
    }
    expect(searchCalls.length).toBe(before);

    vi.advanceTimersByTime(150);
    expect(searchCalls.length).toBe(before + 1);
    expect(searchCalls.at(-1)!.minScore).toBeCloseTo(0.8, 10);
  });

  it("raising the threshold above every score empties the grid; lowering restores it", async () => {
    vi.useFakeTimers();
    const { api } = fakeApi();
    const root = mount();
    const ui = createConsole(root, api, OPTS);
    await ui.init();
    expect(root.querySelectorAll(".card")).toHaveLength(2);

    moveSlider(root, "2");
    vi.advanceTimersByTime(200);
    await flushMicrotasks();
    expect(root.querySelectorAll(".card")).toHaveLength(0);
    expect(root.querySelector(".results .empty")).not.toBeNull();

    moveSlider(root, "0.10");
    vi.advanceTimersByTime(200);
    await flushMicrotasks();
    expect(root.querySelectorAll(".card")).toHaveLength(2);
  });

  it("discards in-flight responses for superseded queries", async () => {
    const deferred: { resolve(page: SearchPage): void }[] = [];
    const { api: base } = fakeApi();
    const api: SearchApi = {
      ...base,
      searchImages: (_cls, _minScore, _limit, _offset) =>
        new Promise((resolve) => deferred.push({ resolve })),
    };
    const root = mount();
    const ui = createConsole(root, api, OPTS);
    const started = ui.init();
    await flushMicrotasks();
    deferred[0].resolve({ results: twoHits, total: 2 });
    await started;
    expect(root.querySelectorAll(".card")).toHaveLength(2);

    const first = ui.refresh();
    const second = ui.refresh();
    deferred[2].resolve({ results: [], total: 0 });
    await second;
    expect(root.querySelectorAll(".card")).toHaveLength(0);

    // The older request resolves last; its payload must not repaint the grid.
    deferred[1].resolve({ results: twoHits, total: 2 });
    await first;
    expect(root.querySelectorAll(".card")).toHaveLength(0);
    expect(root.querySelector(".results .empty")).not.toBeNull();
  });

  it("video mode lists segments and a marker click opens the start frame", async () => {
    const { api, segmentCalls } = fakeApi();
    const root = mount();
    const ui = createConsole(root, api, OPTS);
    await ui.init();

    root.querySelector<HTMLButtonElement>(".mode-video")!.click();
    await flushMicrotasks();
    expect(segmentCalls).toEqual([{ mediaId: "clip", minScore: 0.5 }]);

    const marker = root.querySelector<HTMLElement>(".timeline .marker")!;
    expect(marker.style.left).toBe("20%");
    expect(root.querySelector(".status")!.textContent).toBe("1 segment(s)");

    marker.click();
    const img = root.querySelector<HTMLImageElement>(".frame-view img")!;
    expect(img.src).toContain("/media/clip/frame/20");
  });

  it("pages through results without re-sorting them", async () => {
    const many = Array.from({ length: 30 }, (_, i) => ({
      media_id: `im${String(i).padStart(2, "0")}.pgm`,
      frame_no: 0,
      score: 1.5 - i * 0.01,
      best_box: [0, 0, 40, 40] as [number, number, number, number],
      boxes: [[0, 0, 40, 40] as [number, number, number, number]],
    }));
    const { api, searchCalls } = fakeApi(many);
    const root = mount();
    const ui = createConsole(root, api, OPTS);
    await ui.init();
    expect(root.querySelectorAll(".card")).toHaveLength(24);
    expect(searchCalls.at(-1)).toEqual({ minScore: 0.5, limit: 24, offset: 0 });

    root.querySelector<HTMLButtonElement>(".page-next")!.click();
    await flushMicrotasks();
    expect(searchCalls.at(-1)).toEqual({ minScore: 0.5, limit: 24, offset: 24 });
    expect(root.querySelectorAll(".card")).toHaveLength(6);
    expect(root.querySelector(".page-label")!.textContent).toBe("page 2");
    const firstCaption = root.querySelector("figcaption")!.textContent!;
    expect(firstCaption).toContain("im24.pgm");

    root.querySelector<HTMLButtonElement>(".page-prev")!.click();
    await flushMicrotasks();
    expect(root.querySelectorAll(".card")).toHaveLength(24);
    expect(root.querySelector(".page-label")!.textContent).toBe("page 1");
  });

  it("an unreachable service surfaces a visible error state", async () => {
    const { api: base } = fakeApi();
    const api: SearchApi = {
      ...base,
      searchImages: async () => {
        throw new Error("connection refused");
      },
    };
    const root = mount();
    const ui = createConsole(root, api, OPTS);
    await ui.init();
    expect(root.querySelector(".results .error")!.textContent).toContain(
      "connection refused"
    );
    expect(root.querySelector(".status")!.textContent).toBe("error");
  });
});
