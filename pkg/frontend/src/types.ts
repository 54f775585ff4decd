/** Session metadata as returned by POST /sessions and GET /sessions/{id}. */
export interface SessionMeta {
  id: string;
  labels: string[];
  n_sources: number;
  duration_s: number;
  sample_rate: number;
  bins: number;
  frames: number;
  last_gains: number[];
}

/** GET /sessions/{id} adds a pooled magnitude thumbnail (rows = bins). */
export interface SessionDetail extends SessionMeta {
  thumbnail: number[][];
}

/** Error with the HTTP status and the service's plain-text detail. */
export class ApiError extends Error {
  constructor(
    readonly status: number,
    detail: string,
  ) {
    super(detail);
    this.name = "ApiError";
  }
}
