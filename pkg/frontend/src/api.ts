// Typed client for the avsearch JSON API. The console is read-only: it
// queries, it never ingests media or starts indexing jobs.

export type Box = [number, number, number, number];

export type SearchHit = {
  media_id: string;
  frame_no: number;
  score: number;
  best_box: Box;
  boxes: Box[];
};

export type SearchPage = {
  results: SearchHit[];
  total: number;
};

export type MediaRecord = {
  media_id: string;
  kind: "image" | "video";
  frame_count: number;
  fps: number;
};

export type Segment = {
  media_id: string;
  class: string;
  start_frame: number;
  end_frame: number;
  start_time: number;
  end_time: number;
  peak_score: number;
  peak_frame: number;
  peak_box: Box;
};

export interface SearchApi {
  classes(): Promise<string[]>;
  listMedia(): Promise<MediaRecord[]>;
  searchImages(
    className: string,
    minScore: number,
    limit: number,
    offset: number
  ): Promise<SearchPage>;
  segments(mediaId: string, className: string, minScore: number): Promise<Segment[]>;
  frameUrl(mediaId: string, frameNo: number): string;
}

async function getJson<T>(url: string): Promise<T> {
  const res = await fetch(url);
  if (!res.ok) {
    const detail = await res.text();
    throw new Error(`GET ${url} failed (${res.status}): ${detail}`);
  }
  return (await res.json()) as T;
}

export function createApi(baseUrl: string): SearchApi {
  const base = baseUrl.replace(/\/$/, "");
  return {
    async classes() {
      const body = await getJson<{ classes: string[] }>(`${base}/classes`);
      return body.classes;
    },
    async listMedia() {
      const body = await getJson<{ media: MediaRecord[] }>(`${base}/media`);
      return body.media;
    },
    async searchImages(className, minScore, limit, offset) {
      const q = new URLSearchParams({
        class: className,
        min_score: String(minScore),
        limit: String(limit),
        offset: String(offset),
      });
      return getJson<SearchPage>(`${base}/search/images?${q}`);
    },
    async segments(mediaId, className, minScore) {
      const q = new URLSearchParams({
        class: className,
        min_score: String(minScore),
      });
      const url = `${base}/media/${encodeURIComponent(mediaId)}/segments?${q}`;
      const body = await getJson<{ segments: Segment[] }>(url);
      return body.segments;
    },
    frameUrl(mediaId, frameNo) {
      return `${base}/media/${encodeURIComponent(mediaId)}/frame/${frameNo}`;
    },
  };
}
