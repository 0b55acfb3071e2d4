import { describe, expect, it } from "vitest";

import type { Segment } from "../src/api.js";
import { renderTimeline } from "../src/timeline.js";
import { segment2035 } from "./fixtures.js";

function mount(): HTMLElement {
  return document.createElement("div");
}

describe("video timeline", () => {
  it("places the marker at 20% for a segment starting at frame 20 of 100", () => {
    const root = mount();
    renderTimeline(root, [segment2035], {
      durationSeconds: 10,
      onSeek: () => {},
    });
    const marker = root.querySelector<HTMLElement>(".marker")!;
    expect(marker.style.left).toBe("20%");
    expect(marker.style.width).toBe("15%");
    expect(root.innerHTML).toMatchSnapshot();
  });

  it("clicking a marker seeks to that segment", () => {
    const root = mount();
    const seen: Segment[] = [];
    renderTimeline(root, [segment2035], {
      durationSeconds: 10,
      onSeek: (seg) => seen.push(seg),
    });
    root.querySelector<HTMLButtonElement>(".marker")!.click();
    expect(seen).toHaveLength(1);
    expect(seen[0].start_frame).toBe(20);
  });

  it("renders explanatory text when there are no segments", () => {
    const root = mount();
    renderTimeline(root, [], { durationSeconds: 10, onSeek: () => {} });
    expect(root.querySelector(".marker")).toBeNull();
    expect(root.querySelector(".empty")!.textContent).toBe(
      "No segments above the threshold"
    );
    expect(root.innerHTML).toMatchSnapshot();
  });
});
