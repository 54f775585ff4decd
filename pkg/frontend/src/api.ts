/**
 * Thin client for the remix service. Every method maps to one endpoint and
 * throws ApiError with the server's detail text on non-2xx responses.
 */
import { ApiError, type SessionDetail, type SessionMeta } from "./types.js";

export interface StemUpload {
  name: string;
  data: Blob;
}

async function errorFrom(resp: Response): Promise<ApiError> {
  let detail = `${resp.status} ${resp.statusText}`;
  try {
    const body = await resp.json();
    if (body && typeof body.detail === "string") detail = body.detail;
  } catch {
    /* non-JSON error body; keep the status line */
  }
  return new ApiError(resp.status, detail);
}

export class RemixApi {
  constructor(
    private readonly baseUrl: string = "",
    private readonly fetchImpl: typeof fetch = fetch,
  ) {}

  /** Upload a mixture plus either a mask-set file or two-plus stems. */
  async createSession(
    mix: Blob,
    sources: { masks?: Blob; stems?: StemUpload[] },
  ): Promise<SessionMeta> {
    const form = new FormData();
    form.append("mix", mix, "mix.wav");
    if (sources.masks !== undefined) {
      form.append("masks", sources.masks, "masks.tfmk");
    }
    for (const stem of sources.stems ?? []) {
      form.append("stems", stem.data, stem.name);
    }
    const resp = await this.fetchImpl(`${this.baseUrl}/sessions`, {
      method: "POST",
      body: form,
    });
    if (!resp.ok) throw await errorFrom(resp);
    return (await resp.json()) as SessionMeta;
  }

  async getSession(id: string): Promise<SessionDetail> {
    const resp = await this.fetchImpl(`${this.baseUrl}/sessions/${id}`);
    if (!resp.ok) throw await errorFrom(resp);
    return (await resp.json()) as SessionDetail;
  }

  /** Render with the full slider vector; resolves to a WAV blob. */
  async renderRemix(id: string, gains: number[]): Promise<Blob> {
    const resp = await this.fetchImpl(`${this.baseUrl}/sessions/${id}/remix`, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify({ gains }),
    });
    if (!resp.ok) throw await errorFrom(resp);
    return await resp.blob();
  }

  async deleteSession(id: string): Promise<void> {
    const resp = await this.fetchImpl(`${this.baseUrl}/sessions/${id}`, {
      method: "DELETE",
    });
    if (!resp.ok && resp.status !== 404) throw await errorFrom(resp);
  }
}
