import { describe, expect, it } from "vitest";
import { JobFailed, pollJob, PollTimeout } from "../src/poll.js";
import { CompletionPayload, JobStatusPayload } from "../src/types.js";

const completion: CompletionPayload = {
  job_id: "j1",
  trigger_version: 2,
  delta: {
    delta_schema: 1,
    from_version: 1,
    to_version: 2,
    interactions: [],
    prompt_adjustment: null,
  },
  inferences: [],
  report: { report_schema: 1, version: 2, components: [] },
  diff: { changed_anchors: [], changes: [] },
  provenance: [],
  scope_violations: [],
};

function source(statuses: JobStatusPayload[]) {
  let i = 0;
  return {
    jobStatus: async () => statuses[Math.min(i++, statuses.length - 1)]!,
  };
}

describe("pollJob", () => {
  it("resolves with the completion once the job is done", async () => {
    const phases: string[] = [];
    const result = await pollJob(
      source([
        { job_id: "j1", status: "pending", error: null },
        { job_id: "j1", status: "reasoning", error: null },
        { job_id: "j1", status: "refining", error: null },
        { job_id: "j1", status: "done", error: null, completion },
      ]),
      "s",
      "j1",
      { intervalMs: 1, onPhase: (p) => phases.push(p) },
    );
    expect(result).toEqual(completion);
    expect(phases).toEqual(["pending", "reasoning", "refining", "done"]);
  });

  it("rejects with JobFailed carrying the error detail", async () => {
    await expect(
      pollJob(
        source([
          { job_id: "j1", status: "reasoning", error: null },
          { job_id: "j1", status: "failed", error: "backend exploded" },
        ]),
        "s",
        "j1",
        { intervalMs: 1 },
      ),
    ).rejects.toThrow(/backend exploded/);
  });

  it("rejects with JobFailed when done arrives without a completion", async () => {
    await expect(
      pollJob(source([{ job_id: "j1", status: "done", error: null }]), "s", "j1", {
        intervalMs: 1,
      }),
    ).rejects.toBeInstanceOf(JobFailed);
  });

  it("times out on a job that never settles", async () => {
    await expect(
      pollJob(source([{ job_id: "j1", status: "pending", error: null }]), "s", "j1", {
        intervalMs: 1,
        timeoutMs: 15,
      }),
    ).rejects.toBeInstanceOf(PollTimeout);
  });
});
