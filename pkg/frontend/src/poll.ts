/** Poll a refinement job until it settles or the deadline passes. */

import { CompletionPayload, JobStatusPayload } from "./types.js";

export interface JobSource {
  jobStatus(sessionId: string, jobId: string): Promise<JobStatusPayload>;
}

export interface PollOptions {
  intervalMs?: number;
  timeoutMs?: number;
  onPhase?: (status: JobStatusPayload["status"]) => void;
}

export class JobFailed extends Error {
  constructor(readonly jobId: string, detail: string) {
    super(`job ${jobId} failed: ${detail}`);
    this.name = "JobFailed";
  }
}

export class PollTimeout extends Error {
  constructor(readonly jobId: string, timeoutMs: number) {
    super(`job ${jobId} still running after ${timeoutMs}ms`);
    this.name = "PollTimeout";
  }
}

const sleep = (ms: number) => new Promise<void>((resolve) => setTimeout(resolve, ms));

export async function pollJob(
  source: JobSource,
  sessionId: string,
  jobId: string,
  options: PollOptions = {},
): Promise<CompletionPayload> {
  const intervalMs = options.intervalMs ?? 150;
  const timeoutMs = options.timeoutMs ?? 30_000;
  const deadline = Date.now() + timeoutMs;
  let lastPhase: JobStatusPayload["status"] | null = null;
  for (;;) {
    const status = await source.jobStatus(sessionId, jobId);
    if (status.status !== lastPhase) {
      lastPhase = status.status;
      options.onPhase?.(status.status);
    }
    if (status.status === "done") {
      if (!status.completion) {
        throw new JobFailed(jobId, "done without a completion payload");
      }
      return status.completion;
    }
    if (status.status === "failed") {
      throw new JobFailed(jobId, status.error ?? "unknown error");
    }
    if (Date.now() >= deadline) {
      throw new PollTimeout(jobId, timeoutMs);
    }
    await sleep(intervalMs);
  }
}
