/** Typed client for the stylization service's HTTP/JSON API.
 *
 * Every image travels as a base64 PNG string. Errors arrive in one envelope
 * ({code, message, detail}) and surface as ApiError.
 */

export interface WeightedStyle {
  image: string;
  weight: number;
}

export interface ImageResponse {
  image: string;
  checkpoint: string;
}

export type JobStatus = "queued" | "running" | "done" | "failed";

export interface JobRecord {
  job_id: string;
  kind: string;
  status: JobStatus;
  created_at: number;
  started_at: number | null;
  finished_at: number | null;
  iterations: number;
  loss_samples: Array<Record<string, number>>;
  result_checkpoint: string | null;
  error: string | null;
}

export interface CheckpointRow {
  id: string;
  created_at: number;
  size_bytes: number;
  active?: boolean;
}

export interface FinetuneRequest {
  styleImage: string;
  glyphImage?: string;
  mask?: string;
  iterations?: number;
  seed?: number;
}

export interface FinetuneAccepted {
  job_id: string;
  status: JobStatus;
}

export class ApiError extends Error {
  constructor(
    readonly status: number,
    readonly code: string,
    message: string,
    readonly detail: Record<string, unknown> = {},
  ) {
    super(message);
    this.name = "ApiError";
  }
}

export class TextfxClient {
  constructor(
    readonly baseUrl: string,
    private readonly fetchImpl: typeof fetch = fetch,
  ) {}

  private async request<T>(method: string, path: string, body?: unknown): Promise<T> {
    const response = await this.fetchImpl(`${this.baseUrl}${path}`, {
      method,
      headers: body === undefined ? undefined : { "content-type": "application/json" },
      body: body === undefined ? undefined : JSON.stringify(body),
    });
    const payload: unknown = await response.json();
    if (!response.ok) {
      const envelope = payload as { code?: string; message?: string; detail?: Record<string, unknown> };
      throw new ApiError(
        response.status,
        envelope.code ?? "internal",
        envelope.message ?? `request failed with status ${response.status}`,
        envelope.detail ?? {},
      );
    }
    return payload as T;
  }

  stylize(glyphImage: string, styleImage: string): Promise<ImageResponse> {
    return this.request("POST", "/v1/stylize", {
      glyph_image: glyphImage,
      style_image: styleImage,
    });
  }

  destylize(styleImage: string): Promise<ImageResponse> {
    return this.request("POST", "/v1/destylize", { style_image: styleImage });
  }

  interpolate(glyphImage: string, styles: WeightedStyle[]): Promise<ImageResponse> {
    return this.request("POST", "/v1/interpolate", {
      glyph_image: glyphImage,
      styles,
    });
  }

  finetune(req: FinetuneRequest): Promise<FinetuneAccepted> {
    return this.request("POST", "/v1/finetune", {
      style_image: req.styleImage,
      glyph_image: req.glyphImage ?? null,
      mask: req.mask ?? null,
      iterations: req.iterations ?? 300,
      seed: req.seed ?? 0,
    });
  }

  job(jobId: string): Promise<JobRecord> {
    return this.request("GET", `/v1/jobs/${jobId}`);
  }

  async checkpoints(): Promise<CheckpointRow[]> {
    const body = await this.request<{ checkpoints: CheckpointRow[] }>("GET", "/v1/checkpoints");
    return body.checkpoints;
  }
}
