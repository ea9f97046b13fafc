/**
 * End-to-end round trip against the real session service with the mock
 * backend: create a session, add a note on the canvas, save, trigger a
 * refinement, poll, and render. The rendered diff spans must equal the
 * revision diff payload one-to-one, the reasoning bubbles must surface the
 * note, and undo must bring back the prior report with no highlights.
 */

import { spawn, ChildProcess } from "node:child_process";
import { mkdtempSync, rmSync } from "node:fs";
import { createServer } from "node:net";
import { tmpdir } from "node:os";
import { join } from "node:path";
import { fileURLToPath } from "node:url";
import { afterAll, beforeAll, describe, expect, it } from "vitest";
import { ApiClient, ApiError } from "../src/api.js";
import { CanvasState } from "../src/canvas.js";
import { pollJob } from "../src/poll.js";
import {
  buildReportView,
  plainReportView,
  sortChanges,
  spansFromView,
} from "../src/report_view.js";
import { ReportPayload } from "../src/types.js";
import { fixtureSnapshot } from "./fixtures.js";

const repoRoot = fileURLToPath(new URL("../..", import.meta.url));

function freePort(): Promise<number> {
  return new Promise((resolve, reject) => {
    const probe = createServer();
    probe.once("error", reject);
    probe.listen(0, "127.0.0.1", () => {
      const address = probe.address();
      if (address === null || typeof address === "string") {
        reject(new Error("no port"));
        return;
      }
      probe.close(() => resolve(address.port));
    });
  });
}

let child: ChildProcess | null = null;
let dataDir = "";
let api: ApiClient;

beforeAll(async () => {
  const port = await freePort();
  dataDir = mkdtempSync(join(tmpdir(), "reportloom-ui-e2e-"));
  child = spawn(
    "python3",
    [
      "-m",
      "reportloom.cli",
      "serve",
      "--host",
      "127.0.0.1",
      "--port",
      String(port),
      "--data-dir",
      dataDir,
      "--backend",
      "mock",
    ],
    { cwd: repoRoot, stdio: ["ignore", "pipe", "pipe"] },
  );
  child.stderr?.on("data", () => {});
  api = new ApiClient(`http://127.0.0.1:${port}`);
  const deadline = Date.now() + 20_000;
  for (;;) {
    try {
      await api.healthz();
      break;
    } catch {
      if (Date.now() > deadline) throw new Error("service did not come up");
      await new Promise((r) => setTimeout(r, 200));
    }
  }
}, 30_000);

afterAll(() => {
  child?.kill();
  if (dataDir !== "") rmSync(dataDir, { recursive: true, force: true });
});

describe("add-note round trip", () => {
  const noteText = "Ask facilities about storm drainage readiness";
  let sessionId = "";
  let noteId = "";
  let initialReport: ReportPayload;

  it("creates a session and generates the initial report", async () => {
    const description = await api.createSession(fixtureSnapshot());
    sessionId = description.session_id;
    initialReport = description.report;
    expect(description.narrated_version).toBe(3);
    expect(initialReport.components.length).toBeGreaterThan(0);
    const view = plainReportView(initialReport);
    expect(spansFromView(view)).toEqual([]);
  }, 30_000);

  it("saves a canvas edit and refines", async () => {
    const description = await api.getSession(sessionId);
    const canvas = new CanvasState(description.workspace);
    noteId = canvas.addNote(noteText, [1200, 50]);
    expect(canvas.membership()[noteId]).toBe("f-other");
    const payload = canvas.serialize();
    const version = await api.putWorkspace(sessionId, payload);
    expect(version).toBe(4);

    const ack = await api.refine(sessionId);
    const phases: string[] = [];
    const completion = await pollJob(api, sessionId, ack.job_id, {
      intervalMs: 100,
      timeoutMs: 25_000,
      onPhase: (p) => phases.push(p),
    });
    expect(phases[phases.length - 1]).toBe("done");
    expect(completion.trigger_version).toBe(4);
    expect(completion.scope_violations).toEqual([]);

    const view = buildReportView(
      initialReport,
      completion.report,
      completion.diff,
      completion.inferences,
      completion.delta,
    );

    // the acceptance equality: rendered spans == diff payload, one-to-one
    const rendered = spansFromView(view);
    expect(rendered).toHaveLength(completion.diff.changes.length);
    expect(sortChanges(rendered)).toEqual(sortChanges(completion.diff.changes));
    expect(completion.diff.changes.length).toBeGreaterThan(0);

    // a reasoning bubble carries the note's intent and anchors to it
    const noteBubbles = view.bubbles.filter((b) => b.subjects.includes(noteId));
    expect(noteBubbles.length).toBeGreaterThan(0);
    expect(
      noteBubbles.some((b) => b.instructions.some((i) => i.includes(noteText))),
    ).toBe(true);
    expect(noteBubbles[0]!.anchorEntity).toBe(noteId);

    // changed sentences are highlighted in the view
    const highlighted = view.blocks.flatMap((b) =>
      [b.heading, ...b.sentences, ...b.tombstones].filter((s) => s.change !== null),
    );
    expect(highlighted.length).toBe(completion.diff.changes.length);
    expect(highlighted.some((s) => s.text.includes(noteText))).toBe(true);
  }, 40_000);

  it("reports nothing to refine when the workspace is unchanged", async () => {
    try {
      await api.refine(sessionId);
      expect.unreachable("second refine must be rejected");
    } catch (err) {
      expect(err).toBeInstanceOf(ApiError);
      expect((err as ApiError).errorName).toBe("NothingToRefine");
      expect((err as ApiError).status).toBe(400);
    }
  });

  it("undo restores the prior report with no highlights", async () => {
    const ack = await api.undo(sessionId);
    expect(ack.report).toEqual(initialReport);
    const view = plainReportView(ack.report);
    expect(spansFromView(view)).toEqual([]);
    const redone = await api.redo(sessionId);
    expect(redone.cursor).toBe(1);
  });

  it("made exactly the trigger-path backend calls", async () => {
    const usage = await api.usage();
    expect(usage.total).toBe(3);
  });
});
