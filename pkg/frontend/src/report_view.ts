/**
 * Render model for the report pane.
 *
 * Takes the previously displayed report plus a refinement completion and
 * produces blocks of styled spans: inserted and modified sentences carry
 * their change kind for red highlighting, removed sentences appear as
 * struck-through tombstones, and untouched text carries no change mark.
 *
 * The load-bearing property: the set of change-bearing spans reconstructs
 * the revision diff exactly, one span per change record. `spansFromView`
 * performs that reconstruction; tests hold it equal to the wire payload.
 *
 * Diff indexing convention (mirrors the server): deletions index the old
 * report, insertions and modifications index the new one, and components
 * align by label (anchor for body components, kind otherwise). A sentence
 * index of HEADING_INDEX addresses the heading.
 */

import {
  DeltaPayload,
  HEADING_INDEX,
  InferencePayload,
  ReportComponentPayload,
  ReportPayload,
  RevisionDiffPayload,
  SentenceChangePayload,
} from "./types.js";

export type ChangeKind = "inserted" | "deleted" | "modified";

export interface ReportSpan {
  componentIndex: number;
  sentenceIndex: number;
  label: string;
  kind: "heading" | "sentence";
  text: string;
  change: ChangeKind | null;
  before: string | null;
  after: string | null;
}

export interface ComponentBlock {
  label: string;
  anchor: string | null;
  removed: boolean;
  heading: ReportSpan;
  sentences: ReportSpan[];
  /** Sentences deleted from a surviving component, in old order. */
  tombstones: ReportSpan[];
}

export interface ReasoningBubble {
  index: number;
  why: string;
  source: number[] | "prompt";
  /** Workspace entity ids of the triggering interactions. */
  subjects: string[];
  /** Component labels the plan steps aim at. */
  targets: string[];
  instructions: string[];
  /** Entity the bubble anchors to on the canvas, when resolvable. */
  anchorEntity: string | null;
}

export interface ReportView {
  blocks: ComponentBlock[];
  bubbles: ReasoningBubble[];
  changedAnchors: string[];
}

export function componentLabel(component: ReportComponentPayload): string {
  return component.kind === "body" && component.anchor !== null
    ? component.anchor
    : component.kind;
}

const changeKey = (component: number, sentence: number) => `${component}:${sentence}`;

export function buildReportView(
  previous: ReportPayload,
  report: ReportPayload,
  diff: RevisionDiffPayload,
  inferences: InferencePayload[] = [],
  delta?: DeltaPayload,
): ReportView {
  const newLabels = new Map(report.components.map((c, i) => [componentLabel(c), i]));

  // Split the diff: additions and edits attach to new-report positions,
  // deletions resolve through the old report's labels.
  const attached = new Map<string, SentenceChangePayload>();
  const survivorTombstones = new Map<number, SentenceChangePayload[]>();
  const removedByOldIndex = new Map<number, SentenceChangePayload[]>();
  for (const change of diff.changes) {
    if (change.change !== "deleted") {
      const key = changeKey(change.component, change.sentence);
      if (attached.has(key)) {
        throw new Error(`duplicate diff record for position ${key}`);
      }
      attached.set(key, change);
      continue;
    }
    const oldComponent = previous.components[change.component];
    if (oldComponent === undefined) {
      throw new Error(`deletion references old component ${change.component}, not present`);
    }
    const label = componentLabel(oldComponent);
    const newIndex = newLabels.get(label);
    if (newIndex !== undefined) {
      const bucket = survivorTombstones.get(newIndex) ?? [];
      bucket.push(change);
      survivorTombstones.set(newIndex, bucket);
    } else {
      const bucket = removedByOldIndex.get(change.component) ?? [];
      bucket.push(change);
      removedByOldIndex.set(change.component, bucket);
    }
  }

  const consumed = new Set<string>();
  const blocks: ComponentBlock[] = [];

  for (let i = 0; i < report.components.length; i++) {
    const component = report.components[i]!;
    const label = componentLabel(component);
    const headingChange = attached.get(changeKey(i, HEADING_INDEX)) ?? null;
    if (headingChange !== null) consumed.add(changeKey(i, HEADING_INDEX));
    const heading: ReportSpan = {
      componentIndex: i,
      sentenceIndex: HEADING_INDEX,
      label,
      kind: "heading",
      text: component.heading,
      change: headingChange?.change ?? null,
      before: headingChange?.before ?? null,
      after: headingChange?.after ?? null,
    };
    const sentences: ReportSpan[] = component.sentences.map((text, j) => {
      const change = attached.get(changeKey(i, j)) ?? null;
      if (change !== null) consumed.add(changeKey(i, j));
      return {
        componentIndex: i,
        sentenceIndex: j,
        label,
        kind: "sentence" as const,
        text,
        change: change?.change ?? null,
        before: change?.before ?? null,
        after: change?.after ?? null,
      };
    });
    const tombstones: ReportSpan[] = (survivorTombstones.get(i) ?? [])
      .slice()
      .sort((a, b) => a.sentence - b.sentence)
      .map((change) => ({
        componentIndex: change.component,
        sentenceIndex: change.sentence,
        label,
        kind: "sentence" as const,
        text: change.before ?? "",
        change: "deleted" as const,
        before: change.before,
        after: null,
      }));
    blocks.push({ label, anchor: component.anchor, removed: false, heading, sentences, tombstones });
  }

  for (const key of attached.keys()) {
    if (!consumed.has(key)) {
      throw new Error(`diff record at ${key} does not match any rendered position`);
    }
  }

  const removedIndexes = [...removedByOldIndex.keys()].sort((a, b) => a - b);
  for (const oldIndex of removedIndexes) {
    const component = previous.components[oldIndex]!;
    const label = componentLabel(component);
    const changes = removedByOldIndex.get(oldIndex)!;
    const headingChange = changes.find((c) => c.sentence === HEADING_INDEX);
    if (headingChange === undefined) {
      throw new Error(`removed component ${label} has no heading deletion record`);
    }
    const heading: ReportSpan = {
      componentIndex: oldIndex,
      sentenceIndex: HEADING_INDEX,
      label,
      kind: "heading",
      text: headingChange.before ?? "",
      change: "deleted",
      before: headingChange.before,
      after: null,
    };
    const sentences: ReportSpan[] = changes
      .filter((c) => c.sentence !== HEADING_INDEX)
      .sort((a, b) => a.sentence - b.sentence)
      .map((change) => ({
        componentIndex: change.component,
        sentenceIndex: change.sentence,
        label,
        kind: "sentence" as const,
        text: change.before ?? "",
        change: "deleted" as const,
        before: change.before,
        after: null,
      }));
    blocks.push({
      label,
      anchor: component.anchor,
      removed: true,
      heading,
      sentences,
      tombstones: [],
    });
  }

  return {
    blocks,
    bubbles: buildBubbles(inferences, delta),
    changedAnchors: [...diff.changed_anchors].sort(),
  };
}

/** View of a report outside any refinement: every span unchanged. */
export function plainReportView(report: ReportPayload): ReportView {
  return buildReportView(report, report, { changed_anchors: [], changes: [] });
}

function buildBubbles(
  inferences: InferencePayload[],
  delta: DeltaPayload | undefined,
): ReasoningBubble[] {
  const byOrder = new Map((delta?.interactions ?? []).map((i) => [i.order, i]));
  return inferences.map((inference, index) => {
    const subjects: string[] = [];
    if (inference.source !== "prompt") {
      for (const order of inference.source) {
        const interaction = byOrder.get(order);
        if (interaction !== undefined && !subjects.includes(interaction.subject)) {
          subjects.push(interaction.subject);
        }
      }
    }
    return {
      index,
      why: inference.why,
      source: inference.source,
      subjects,
      targets: inference.plan.map((step) => step.target),
      instructions: inference.plan.map((step) => step.instruction),
      anchorEntity: subjects.length > 0 ? subjects[0]! : null,
    };
  });
}

/**
 * Reconstruct the wire diff from a rendered view. Inverse of the
 * construction above: collects every change-bearing span back into a
 * SentenceChange record. Equality with the original payload is the
 * one-to-one rendering guarantee.
 */
export function spansFromView(view: ReportView): SentenceChangePayload[] {
  const out: SentenceChangePayload[] = [];
  const emit = (span: ReportSpan) => {
    if (span.change === null) return;
    out.push({
      component: span.componentIndex,
      sentence: span.sentenceIndex,
      change: span.change,
      before: span.before,
      after: span.after,
    });
  };
  for (const block of view.blocks) {
    emit(block.heading);
    for (const span of block.sentences) emit(span);
    for (const span of block.tombstones) emit(span);
  }
  return out;
}

/** Canonical ordering for diff-record comparison in tests and contracts. */
export function sortChanges(changes: SentenceChangePayload[]): SentenceChangePayload[] {
  return changes
    .slice()
    .sort(
      (a, b) =>
        a.component - b.component ||
        a.sentence - b.sentence ||
        a.change.localeCompare(b.change) ||
        (a.after ?? "").localeCompare(b.after ?? "") ||
        (a.before ?? "").localeCompare(b.before ?? ""),
    );
}
