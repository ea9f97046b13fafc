/**
 * Wire types for the reportloom service, with zod schemas so every payload
 * crossing the HTTP boundary is validated before the UI trusts it.
 *
 * Shapes mirror the server's canonical JSON exactly; positions are entity
 * centers and sizes are full extents.
 */

import { z } from "zod";

export const Vec2 = z.tuple([z.number(), z.number()]);
export type Vec2 = z.infer<typeof Vec2>;

export const FramePayload = z.object({
  id: z.string(),
  name: z.string(),
  position: Vec2,
  size: Vec2,
  parent: z.string().nullable(),
  created_seq: z.number().int(),
});
export type FramePayload = z.infer<typeof FramePayload>;

export const DocumentPayload = z.object({
  id: z.string(),
  title: z.string(),
  body: z.string(),
  position: Vec2,
  size: Vec2,
  highlights: z.array(z.string()),
});
export type DocumentPayload = z.infer<typeof DocumentPayload>;

export const NotePayload = z.object({
  id: z.string(),
  text: z.string(),
  position: Vec2,
  size: Vec2,
});
export type NotePayload = z.infer<typeof NotePayload>;

export const HighlightPayload = z.object({
  id: z.string(),
  document: z.string(),
  span: z.tuple([z.number().int(), z.number().int()]),
  text: z.string(),
  count: z.number().int(),
  polarity: z.enum(["emphasize", "reject"]),
});
export type HighlightPayload = z.infer<typeof HighlightPayload>;

export const ModelConfigPayload = z.object({
  model_name: z.string(),
  temperature: z.number(),
  max_tokens: z.number().int(),
});
export type ModelConfigPayload = z.infer<typeof ModelConfigPayload>;

export const ComponentSpecPayload = z.object({
  name: z.string(),
  kind: z.enum(["summary", "body", "conclusion"]),
});
export type ComponentSpecPayload = z.infer<typeof ComponentSpecPayload>;

export const PromptSettingsPayload = z.object({
  task_description: z.string(),
  components: z.array(ComponentSpecPayload),
  model_config: ModelConfigPayload,
});
export type PromptSettingsPayload = z.infer<typeof PromptSettingsPayload>;

export const WorkspaceSnapshotPayload = z.object({
  snapshot_schema: z.literal(1),
  version: z.number().int(),
  timestamp: z.string(),
  frames: z.array(FramePayload),
  documents: z.array(DocumentPayload),
  notes: z.array(NotePayload),
  highlights: z.array(HighlightPayload),
  prompt_settings: PromptSettingsPayload,
});
export type WorkspaceSnapshotPayload = z.infer<typeof WorkspaceSnapshotPayload>;

// -- report and revision diff -------------------------------------------------

export const HEADING_INDEX = -1;
export const UNASSIGNED_ANCHOR = "unassigned";

export const ReportComponentPayload = z.object({
  kind: z.enum(["summary", "body", "conclusion"]),
  heading: z.string(),
  sentences: z.array(z.string()),
  anchor: z.string().nullable(),
});
export type ReportComponentPayload = z.infer<typeof ReportComponentPayload>;

export const ReportPayload = z.object({
  report_schema: z.literal(1),
  version: z.number().int(),
  components: z.array(ReportComponentPayload),
});
export type ReportPayload = z.infer<typeof ReportPayload>;

export const SentenceChangePayload = z.object({
  component: z.number().int(),
  sentence: z.number().int(),
  change: z.enum(["inserted", "deleted", "modified"]),
  before: z.string().nullable(),
  after: z.string().nullable(),
});
export type SentenceChangePayload = z.infer<typeof SentenceChangePayload>;

export const RevisionDiffPayload = z.object({
  changed_anchors: z.array(z.string()),
  changes: z.array(SentenceChangePayload),
});
export type RevisionDiffPayload = z.infer<typeof RevisionDiffPayload>;

// -- perception delta ----------------------------------------------------------

export const InteractionPayload = z.object({
  kind: z.string(),
  subject: z.string(),
  order: z.number().int(),
  before: z.record(z.unknown()).nullable(),
  after: z.record(z.unknown()).nullable(),
});
export type InteractionPayload = z.infer<typeof InteractionPayload>;

export const PromptAdjustmentPayload = z.object({
  task_description_changed: z.tuple([z.string(), z.string()]).nullable(),
  components_changed: z.unknown().nullable(),
  model_config_changed: z.unknown().nullable(),
});
export type PromptAdjustmentPayload = z.infer<typeof PromptAdjustmentPayload>;

export const DeltaPayload = z.object({
  delta_schema: z.literal(1),
  from_version: z.number().int(),
  to_version: z.number().int(),
  interactions: z.array(InteractionPayload),
  prompt_adjustment: PromptAdjustmentPayload.nullable(),
});
export type DeltaPayload = z.infer<typeof DeltaPayload>;

// -- intent inferences ----------------------------------------------------------

export const PlanStepPayload = z.object({
  target: z.string(),
  action: z.string(),
  instruction: z.string(),
});
export type PlanStepPayload = z.infer<typeof PlanStepPayload>;

export const InferencePayload = z.object({
  source: z.union([z.array(z.number().int()), z.literal("prompt")]),
  why: z.string(),
  plan: z.array(PlanStepPayload),
});
export type InferencePayload = z.infer<typeof InferencePayload>;

// -- service responses -----------------------------------------------------------

export const CompletionPayload = z.object({
  job_id: z.string(),
  trigger_version: z.number().int(),
  delta: DeltaPayload,
  inferences: z.array(InferencePayload),
  report: ReportPayload,
  diff: RevisionDiffPayload,
  provenance: z.array(z.array(z.union([z.number().int(), z.string()]))),
  scope_violations: z.array(z.string()),
});
export type CompletionPayload = z.infer<typeof CompletionPayload>;

export const SessionDescription = z.object({
  session_id: z.string(),
  workspace: WorkspaceSnapshotPayload,
  report: ReportPayload,
  narrated_version: z.number().int(),
  history_length: z.number().int(),
  cursor: z.number().int(),
  busy: z.boolean(),
  active_job: z.string().nullable(),
});
export type SessionDescription = z.infer<typeof SessionDescription>;

export const JobStatusPayload = z.object({
  job_id: z.string(),
  status: z.enum(["pending", "reasoning", "refining", "done", "failed"]),
  error: z.string().nullable(),
  completion: CompletionPayload.optional(),
});
export type JobStatusPayload = z.infer<typeof JobStatusPayload>;

export const ReplayCheckPayload = z.object({
  job_id: z.string(),
  reproduced: z.boolean(),
  mismatched_fields: z.array(z.string()),
});
export type ReplayCheckPayload = z.infer<typeof ReplayCheckPayload>;
