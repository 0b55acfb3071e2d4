import type { Segment } from "./api.js";

export type TimelineOptions = {
  durationSeconds: number;
  onSeek(segment: Segment): void;
};

// One button per segment, positioned on the track at start_time / duration.
export function renderTimeline(
  root: HTMLElement,
  segments: Segment[],
  opts: TimelineOptions
): void {
  root.textContent = "";
  if (segments.length === 0) {
    const empty = document.createElement("p");
    empty.className = "empty";
    empty.textContent = "No segments above the threshold";
    root.appendChild(empty);
    return;
  }
  const track = document.createElement("div");
  track.className = "track";
  track.style.position = "relative";
  for (const seg of segments) {
    const marker = document.createElement("button");
    marker.type = "button";
    marker.className = "marker";
    marker.style.position = "absolute";
    marker.style.left = `${(seg.start_time / opts.durationSeconds) * 100}%`;
    marker.style.width = `${((seg.end_time - seg.start_time) / opts.durationSeconds) * 100}%`;
    marker.title =
      `frames ${seg.start_frame}-${seg.end_frame}, ` +
      `peak ${seg.peak_score.toFixed(3)} at ${seg.peak_frame}`;
    marker.addEventListener("click", () => opts.onSeek(seg));
    track.appendChild(marker);
  }
  root.appendChild(track);
}
