import { describe, expect, it, vi } from "vitest";

import { ApiError, TextfxClient } from "../src/api.js";

function jsonResponse(status: number, body: unknown): Response {
  return new Response(JSON.stringify(body), {
    status,
    headers: { "content-type": "application/json" },
  });
}

describe("service client", () => {
  it("sends the documented request shapes", async () => {
    const seen: Array<{ url: string; init: RequestInit | undefined }> = [];
    const fetchImpl = vi.fn(async (url: RequestInfo | URL, init?: RequestInit) => {
      seen.push({ url: String(url), init });
      return jsonResponse(200, { image: "abc", checkpoint: "base" });
    });
    const client = new TextfxClient("http://host:1234", fetchImpl as typeof fetch);

    await client.stylize("G", "S");
    await client.interpolate("G", [
      { image: "A", weight: 0.5 },
      { image: "B", weight: 0.5 },
    ]);

    expect(seen[0]!.url).toBe("http://host:1234/v1/stylize");
    expect(JSON.parse(String(seen[0]!.init!.body))).toEqual({
      glyph_image: "G",
      style_image: "S",
    });
    expect(seen[1]!.url).toBe("http://host:1234/v1/interpolate");
    expect(JSON.parse(String(seen[1]!.init!.body))).toEqual({
      glyph_image: "G",
      styles: [
        { image: "A", weight: 0.5 },
        { image: "B", weight: 0.5 },
      ],
    });
  });

  it("fills finetune defaults and naming", async () => {
    const fetchImpl = vi.fn(async (_url: RequestInfo | URL, init?: RequestInit) => {
      const body = JSON.parse(String(init!.body));
      expect(body).toEqual({
        style_image: "S",
        glyph_image: null,
        mask: "M",
        iterations: 300,
        seed: 0,
      });
      return jsonResponse(200, { job_id: "j1", status: "queued" });
    });
    const client = new TextfxClient("http://host", fetchImpl as typeof fetch);
    const accepted = await client.finetune({ styleImage: "S", mask: "M" });
    expect(accepted.job_id).toBe("j1");
  });

  it("raises a typed error from the service envelope", async () => {
    const fetchImpl = vi.fn(async () =>
      jsonResponse(400, { code: "bad_request", message: "weights must sum to 1", detail: {} }),
    );
    const client = new TextfxClient("http://host", fetchImpl as typeof fetch);
    const err = await client.stylize("G", "S").catch((e: unknown) => e);
    expect(err).toBeInstanceOf(ApiError);
    expect((err as ApiError).status).toBe(400);
    expect((err as ApiError).code).toBe("bad_request");
    expect((err as ApiError).message).toMatch(/sum to 1/);
  });

  it("unwraps the checkpoint listing", async () => {
    const fetchImpl = vi.fn(async () =>
      jsonResponse(200, {
        checkpoints: [
          { id: "base", created_at: 1, size_bytes: 10 },
          { id: "tuned", created_at: 2, size_bytes: 11, active: true },
        ],
      }),
    );
    const client = new TextfxClient("http://host", fetchImpl as typeof fetch);
    const rows = await client.checkpoints();
    expect(rows.map((r) => r.id)).toEqual(["base", "tuned"]);
    expect(rows[1]!.active).toBe(true);
  });
});
