/** Finetune job polling. */

import type { JobRecord, TextfxClient } from "./api.js";

export interface PollOptions {
  intervalMs?: number;
  timeoutMs?: number;
  onUpdate?: (record: JobRecord) => void;
}

function sleep(ms: number): Promise<void> {
  return new Promise((resolve) => setTimeout(resolve, ms));
}

/** Resolve when the job completes; reject on failure or timeout. */
export async function pollJob(
  client: TextfxClient,
  jobId: string,
  options: PollOptions = {},
): Promise<JobRecord> {
  const interval = options.intervalMs ?? 500;
  const deadline = Date.now() + (options.timeoutMs ?? 10 * 60 * 1000);
  for (;;) {
    const record = await client.job(jobId);
    options.onUpdate?.(record);
    if (record.status === "done") {
      return record;
    }
    if (record.status === "failed") {
      throw new Error(`finetune job ${jobId} failed: ${record.error ?? "unknown error"}`);
    }
    if (Date.now() >= deadline) {
      throw new Error(`finetune job ${jobId} still ${record.status} at timeout`);
    }
    await sleep(interval);
  }
}
