import { WorkspaceSnapshotPayload } from "../src/types.js";

/** A small valid workspace: nested frames, one framed document with a
 * highlight, one loose note. Geometry uses center positions. */
export function fixtureSnapshot(): WorkspaceSnapshotPayload {
  return {
    snapshot_schema: 1,
    version: 3,
    timestamp: "2026-02-01T00:00:00+00:00",
    frames: [
      {
        id: "f-big",
        name: "Operations",
        position: [0, 0],
        size: [800, 600],
        parent: null,
        created_seq: 1,
      },
      {
        id: "f-small",
        name: "Staffing",
        position: [100, 100],
        size: [200, 150],
        parent: "f-big",
        created_seq: 2,
      },
      {
        id: "f-other",
        name: "Vendors",
        position: [1200, 0],
        size: [400, 300],
        parent: null,
        created_seq: 3,
      },
    ],
    documents: [
      {
        id: "d-gate",
        title: "Gate report",
        body: "Queues doubled at the north gate on Saturday.",
        position: [100, 120],
        size: [120, 80],
        highlights: ["h-queues"],
      },
    ],
    notes: [
      {
        id: "n-ops",
        text: "Ask about overtime",
        position: [-200, -100],
        size: [140, 90],
      },
    ],
    highlights: [
      {
        id: "h-queues",
        document: "d-gate",
        span: [0, 6],
        text: "Queues",
        count: 2,
        polarity: "emphasize",
      },
    ],
    prompt_settings: {
      task_description: "Summarize park operations for the week.",
      components: [
        { name: "Summary", kind: "summary" },
        { name: "Findings", kind: "body" },
        { name: "Conclusion", kind: "conclusion" },
      ],
      model_config: { model_name: "offline-mock", temperature: 0.2, max_tokens: 1024 },
    },
  };
}
