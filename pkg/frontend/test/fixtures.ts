import type {
  MediaRecord,
  SearchApi,
  SearchHit,
  SearchPage,
  Segment,
} from "../src/api.js";

// Frame pixels are 240 wide in every fixture; tests display at 120 so the
// overlay scale is exactly 0.5 and positions are easy to read.
export const FRAME_WIDTH = 240;
export const DISPLAY_WIDTH = 120;

export const twoHits: SearchHit[] = [
  {
    media_id: "im03.pgm",
    frame_no: 0,
    score: 1.034,
    best_box: [16, 8, 48, 40],
    boxes: [
      [16, 8, 48, 40],
      [60, 20, 100, 80],
    ],
  },
  {
    media_id: "im07.pgm",
    frame_no: 0,
    score: 0.871,
    best_box: [0, 0, 40, 40],
    boxes: [
      [0, 0, 40, 40],
      [10, 10, 50, 50],
      [80, 40, 140, 100],
    ],
  },
];

// 100-frame video at 10 fps: duration 10 s, so a segment starting at frame 20
// (start_time 2.0 s) sits at 20% of the track.
export const video100: MediaRecord = {
  media_id: "clip",
  kind: "video",
  frame_count: 100,
  fps: 10.0,
};

export const stillImage: MediaRecord = {
  media_id: "im03.pgm",
  kind: "image",
  frame_count: 1,
  fps: 0.0,
};

export const segment2035: Segment = {
  media_id: "clip",
  class: "ltile",
  start_frame: 20,
  end_frame: 35,
  start_time: 2.0,
  end_time: 3.5,
  peak_score: 1.034,
  peak_frame: 23,
  peak_box: [10, 10, 50, 50],
};

export const gridOpts = {
  frameUrl: (id: string, n: number) => `/media/${id}/frame/${n}`,
  displayWidth: DISPLAY_WIDTH,
  frameWidth: FRAME_WIDTH,
};

export type FakeApi = {
  api: SearchApi;
  searchCalls: { minScore: number; limit: number; offset: number }[];
  segmentCalls: { mediaId: string; minScore: number }[];
};

// Test double backed by the fixtures: filtering by min_score preserves the
// service's monotonicity, paging slices the filtered list.
export function fakeApi(
  hits: SearchHit[] = twoHits,
  segments: Segment[] = [segment2035],
  media: MediaRecord[] = [video100, stillImage]
): FakeApi {
  const searchCalls: FakeApi["searchCalls"] = [];
  const segmentCalls: FakeApi["segmentCalls"] = [];
  const api: SearchApi = {
    classes: async () => ["ltile"],
    listMedia: async () => media,
    searchImages: async (_cls, minScore, limit, offset): Promise<SearchPage> => {
      searchCalls.push({ minScore, limit, offset });
      const all = hits.filter((h) => h.score >= minScore);
      return { results: all.slice(offset, offset + limit), total: all.length };
    },
    segments: async (mediaId, _cls, minScore) => {
      segmentCalls.push({ mediaId, minScore });
      return segments.filter((s) => s.peak_score >= minScore);
    },
    frameUrl: (id, n) => `/media/${id}/frame/${n}`,
  };
  return { api, searchCalls, segmentCalls };
}

// Flush chained promise continuations without touching timers.
export async function flushMicrotasks(turns = 6): Promise<void> {
  for (let i = 0; i < turns; i += 1) {
    await Promise.resolve();
  }
}
