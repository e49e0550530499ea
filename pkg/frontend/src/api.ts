/** Typed client for the annotation service HTTP API. */

export interface Summary {
  image_count: number;
  pending: number;
  accepted: number;
  failed: number;
  cursor: number;
  default_alpha: number;
  orphaned: number;
}

export interface RecordInfo {
  image_id: string;
  status: "pending" | "accepted" | "failed";
  alpha: number;
  thv1: number | null;
  thv2: number | null;
  uthv: number | null;
  user_offset: number;
  mask_path: string | null;
  updated_at: string;
  orphaned: boolean;
}

export interface Thresholds {
  thv1: number;
  thv2: number;
  uthv: number;
  effective: number;
}

export interface MutationResponse {
  record: RecordInfo;
  cursor: number;
  summary: Summary;
}

export interface MaskPreview {
  bytes: Uint8Array;
  thresholds: Thresholds;
}

/** Error carrying the service's machine-readable code (e.g. degenerate_image). */
export class ApiError extends Error {
  constructor(
    readonly code: string,
    message: string,
    readonly status: number,
  ) {
    super(message);
  }
}

async function parseError(response: Response): Promise<never> {
  let code = "unknown";
  let message = `HTTP ${response.status}`;
  try {
    const body = (await response.json()) as { code?: string; message?: string };
    if (body.code) code = body.code;
    if (body.message) message = body.message;
  } catch {
    // non-JSON error body; keep the defaults
  }
  throw new ApiError(code, message, response.status);
}

export class ApiClient {
  constructor(readonly base: string = "") {}

  imageUrl(imageId: string): string {
    return `${this.base}/api/images/${encodeURIComponent(imageId)}`;
  }

  maskUrl(imageId: string, offset: number): string {
    return `${this.imageUrl(imageId)}/mask?offset=${offset}`;
  }

  private async getJson<T>(path: string): Promise<T> {
    const response = await fetch(`${this.base}${path}`);
    if (!response.ok) await parseError(response);
    return (await response.json()) as T;
  }

  private async postJson<T>(path: string, body: unknown): Promise<T> {
    const response = await fetch(`${this.base}${path}`, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(body),
    });
    if (!response.ok) await parseError(response);
    return (await response.json()) as T;
  }

  session(): Promise<Summary> {
    return this.getJson("/api/session");
  }

  async records(): Promise<RecordInfo[]> {
    const payload = await this.getJson<{ records: RecordInfo[] }>("/api/records");
    return payload.records;
  }

  /** Fetch a mask preview; thresholds ride along in the X- headers. */
  async fetchMask(imageId: string, offset: number, signal?: AbortSignal): Promise<MaskPreview> {
    const response = await fetch(this.maskUrl(imageId, offset), { signal });
    if (!response.ok) await parseError(response);
    const bytes = new Uint8Array(await response.arrayBuffer());
    const header = (name: string) => Number(response.headers.get(name));
    return {
      bytes,
      thresholds: {
        thv1: header("X-THV1"),
        thv2: header("X-THV2"),
        uthv: header("X-UTHV"),
        effective: header("X-Effective"),
      },
    };
  }

  commitOffset(imageId: string, delta: number): Promise<MutationResponse> {
    return this.postJson(`/api/images/${encodeURIComponent(imageId)}/offset`, { delta });
  }

  accept(imageId: string): Promise<MutationResponse> {
    return this.postJson(`/api/images/${encodeURIComponent(imageId)}/accept`, {});
  }

  fail(imageId: string): Promise<MutationResponse> {
    return this.postJson(`/api/images/${encodeURIComponent(imageId)}/fail`, {});
  }

  moveCursor(direction: "next" | "prev"): Promise<Summary> {
    return this.postJson("/api/session/cursor", { direction });
  }
}
