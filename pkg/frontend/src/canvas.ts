/**
 * Client-side workspace model behind the canvas.
 *
 * Holds a working copy of the server snapshot plus viewport, tool, and
 * selection state. Every gesture becomes a local snapshot edit with its own
 * undo history; nothing here talks to the network. Saving serializes the
 * working copy to the next snapshot version, and that payload must pass the
 * same validation rules the server enforces, so a bad edit fails loudly in
 * the client instead of bouncing off the save endpoint.
 *
 * Geometry convention matches the server: `position` is the entity center,
 * bounds are center plus/minus half the size, and an item belongs to the
 * smallest-area frame containing its center (ties break on created_seq,
 * then id).
 */

import {
  DocumentPayload,
  FramePayload,
  HighlightPayload,
  NotePayload,
  WorkspaceSnapshotPayload,
} from "./types.js";

export type Tool = "select" | "frame" | "note" | "highlight" | "eraser";

export const TOOLS: readonly Tool[] = ["select", "frame", "note", "highlight", "eraser"];

export const MIN_ZOOM = 0.125;
export const MAX_ZOOM = 8.0;

export interface Viewport {
  zoom: number;
  panX: number;
  panY: number;
}

export interface Violation {
  subject: string;
  reason: string;
}

export class CanvasValidationError extends Error {
  constructor(readonly violations: Violation[]) {
    super(violations.map((v) => `${v.subject}: ${v.reason}`).join("; "));
    this.name = "CanvasValidationError";
  }
}

export type Rect = { x0: number; y0: number; x1: number; y1: number };

export function boundsOf(position: [number, number], size: [number, number]): Rect {
  const [x, y] = position;
  const [w, h] = size;
  return { x0: x - w / 2, y0: y - h / 2, x1: x + w / 2, y1: y + h / 2 };
}

function containsPoint(rect: Rect, point: [number, number]): boolean {
  const [x, y] = point;
  return rect.x0 <= x && x <= rect.x1 && rect.y0 <= y && y <= rect.y1;
}

function rectInside(inner: Rect, outer: Rect): boolean {
  return (
    inner.x0 >= outer.x0 && inner.y0 >= outer.y0 && inner.x1 <= outer.x1 && inner.y1 <= outer.y1
  );
}

const clamp = (value: number, lo: number, hi: number) => Math.min(hi, Math.max(lo, value));

const clone = <T>(value: T): T => structuredClone(value);

export interface MinimapEntity {
  id: string;
  kind: "frame" | "document" | "note";
  x: number;
  y: number;
  w: number;
  h: number;
}

export interface MinimapModel {
  entities: MinimapEntity[];
  view: { x: number; y: number; w: number; h: number };
}

export class CanvasState {
  viewport: Viewport = { zoom: 1, panX: 0, panY: 0 };
  tool: Tool = "select";
  selection: string | null = null;

  private working: WorkspaceSnapshotPayload;
  private baseSerial: string;
  private past: string[] = [];
  private future: string[] = [];
  private idCounter = 0;

  constructor(snapshot: WorkspaceSnapshotPayload) {
    this.working = clone(snapshot);
    this.baseSerial = JSON.stringify(this.working);
  }

  /** Replace local state with an authoritative server snapshot. */
  loadSnapshot(snapshot: WorkspaceSnapshotPayload): void {
    this.working = clone(snapshot);
    this.baseSerial = JSON.stringify(this.working);
    this.past = [];
    this.future = [];
    if (this.selection !== null && this.find(this.selection) === null) {
      this.selection = null;
    }
  }

  get snapshot(): WorkspaceSnapshotPayload {
    return this.working;
  }

  // -- viewport -------------------------------------------------------------

  setZoom(zoom: number, anchorX = 0, anchorY = 0): void {
    const next = clamp(zoom, MIN_ZOOM, MAX_ZOOM);
    // keep the world point under the anchor fixed while zooming
    const worldX = (anchorX - this.viewport.panX) / this.viewport.zoom;
    const worldY = (anchorY - this.viewport.panY) / this.viewport.zoom;
    this.viewport.zoom = next;
    this.viewport.panX = anchorX - worldX * next;
    this.viewport.panY = anchorY - worldY * next;
  }

  zoomBy(factor: number, anchorX = 0, anchorY = 0): void {
    this.setZoom(this.viewport.zoom * factor, anchorX, anchorY);
  }

  panBy(dx: number, dy: number): void {
    this.viewport.panX += dx;
    this.viewport.panY += dy;
  }

  contentBounds(): Rect | null {
    const rects: Rect[] = [];
    for (const f of this.working.frames) rects.push(boundsOf(f.position, f.size));
    for (const d of this.working.documents) rects.push(boundsOf(d.position, d.size));
    for (const n of this.working.notes) rects.push(boundsOf(n.position, n.size));
    if (rects.length === 0) return null;
    return rects.reduce((acc, r) => ({
      x0: Math.min(acc.x0, r.x0),
      y0: Math.min(acc.y0, r.y0),
      x1: Math.max(acc.x1, r.x1),
      y1: Math.max(acc.y1, r.y1),
    }));
  }

  zoomToFit(viewW: number, viewH: number, margin = 40): void {
    const content = this.contentBounds();
    if (content === null) return;
    const w = Math.max(content.x1 - content.x0, 1);
    const h = Math.max(content.y1 - content.y0, 1);
    const zoom = clamp(
      Math.min((viewW - 2 * margin) / w, (viewH - 2 * margin) / h),
      MIN_ZOOM,
      MAX_ZOOM,
    );
    this.viewport.zoom = zoom;
    this.viewport.panX = viewW / 2 - ((content.x0 + content.x1) / 2) * zoom;
    this.viewport.panY = viewH / 2 - ((content.y0 + content.y1) / 2) * zoom;
  }

  /** Bird's-eye model: all entities plus the visible window, in world units. */
  minimap(viewW: number, viewH: number): MinimapModel {
    const entities: MinimapEntity[] = [];
    const push = (
      kind: MinimapEntity["kind"],
      e: { id: string; position: [number, number]; size: [number, number] },
    ) => {
      const r = boundsOf(e.position, e.size);
      entities.push({ id: e.id, kind, x: r.x0, y: r.y0, w: r.x1 - r.x0, h: r.y1 - r.y0 });
    };
    for (const f of this.working.frames) push("frame", f);
    for (const d of this.working.documents) push("document", d);
    for (const n of this.working.notes) push("note", n);
    const { zoom, panX, panY } = this.viewport;
    return {
      entities,
      view: { x: -panX / zoom, y: -panY / zoom, w: viewW / zoom, h: viewH / zoom },
    };
  }

  // -- selection and tools ----------------------------------------------------

  setTool(tool: Tool): void {
    this.tool = tool;
  }

  select(id: string | null): void {
    if (id !== null && this.find(id) === null) {
      throw new Error(`no entity with id ${JSON.stringify(id)}`);
    }
    this.selection = id;
  }

  find(
    id: string,
  ):
    | { kind: "frame"; entity: FramePayload }
    | { kind: "document"; entity: DocumentPayload }
    | { kind: "note"; entity: NotePayload }
    | { kind: "highlight"; entity: HighlightPayload }
    | null {
    for (const f of this.working.frames) if (f.id === id) return { kind: "frame", entity: f };
    for (const d of this.working.documents)
      if (d.id === id) return { kind: "document", entity: d };
    for (const n of this.working.notes) if (n.id === id) return { kind: "note", entity: n };
    for (const h of this.working.highlights)
      if (h.id === id) return { kind: "highlight", entity: h };
    return null;
  }

  /** Topmost entity whose bounds contain the world point; frames lose to
   * items, and among frames the smallest area wins so clicks land on the
   * same frame membership would pick. */
  hitTest(worldX: number, worldY: number): string | null {
    const point: [number, number] = [worldX, worldY];
    const items = [...this.working.documents, ...this.working.notes];
    for (const item of items) {
      if (containsPoint(boundsOf(item.position, item.size), point)) return item.id;
    }
    const frames = this.working.frames
      .filter((f) => containsPoint(boundsOf(f.position, f.size), point))
      .sort(
        (a, b) =>
          a.size[0] * a.size[1] - b.size[0] * b.size[1] ||
          a.created_seq - b.created_seq ||
          (a.id < b.id ? -1 : 1),
      );
    return frames.length > 0 ? frames[0]!.id : null;
  }

  // -- membership ---------------------------------------------------------------

  /** Owning frame per document and note id, or null when unframed. */
  membership(): Record<string, string | null> {
    const withBounds = this.working.frames.map((f) => ({
      frame: f,
      rect: boundsOf(f.position, f.size),
    }));
    const out: Record<string, string | null> = {};
    const items: { id: string; position: [number, number] }[] = [
      ...this.working.documents.map((d) => ({ id: d.id, position: d.position })),
      ...this.working.notes.map((n) => ({ id: n.id, position: n.position })),
    ];
    for (const item of items) {
      out[item.id] = this.owningFrameAt(item.position, withBounds);
    }
    return out;
  }

  /** Where the entity would land if dropped at `position`; drives the drag
   * preview outline. */
  membershipPreview(position: [number, number]): string | null {
    const withBounds = this.working.frames.map((f) => ({
      frame: f,
      rect: boundsOf(f.position, f.size),
    }));
    return this.owningFrameAt(position, withBounds);
  }

  private owningFrameAt(
    position: [number, number],
    framed: { frame: FramePayload; rect: Rect }[],
  ): string | null {
    const containing = framed.filter(({ rect }) => containsPoint(rect, position));
    if (containing.length === 0) return null;
    containing.sort((a, b) => {
      const areaA = a.frame.size[0] * a.frame.size[1];
      const areaB = b.frame.size[0] * b.frame.size[1];
      if (areaA !== areaB) return areaA - areaB;
      if (a.frame.created_seq !== b.frame.created_seq) {
        return a.frame.created_seq - b.frame.created_seq;
      }
      return a.frame.id < b.frame.id ? -1 : 1;
    });
    return containing[0]!.frame.id;
  }

  // -- snapshot edits ----------------------------------------------------------

  private gestureBase: string | null = null;

  /** Start a drag: mutations until endGesture() collapse into one undo step. */
  beginGesture(): void {
    if (this.gestureBase === null) {
      this.gestureBase = JSON.stringify(this.working);
    }
  }

  endGesture(): void {
    const base = this.gestureBase;
    this.gestureBase = null;
    if (base !== null && base !== JSON.stringify(this.working)) {
      this.past.push(base);
      this.future = [];
    }
  }

  private pushUndo(): void {
    if (this.gestureBase !== null) return;
    this.past.push(JSON.stringify(this.working));
    this.future = [];
  }

  private freshId(prefix: string): string {
    for (;;) {
      const candidate = `${prefix}-u${this.idCounter++}`;
      if (this.find(candidate) === null) return candidate;
    }
  }

  private requireFrame(id: string): FramePayload {
    const found = this.find(id);
    if (found?.kind !== "frame") throw new Error(`no frame with id ${JSON.stringify(id)}`);
    return found.entity;
  }

  addFrame(
    name: string,
    position: [number, number],
    size: [number, number],
    parent: string | null = null,
  ): string {
    if (parent !== null && this.find(parent)?.kind !== "frame") {
      throw new Error(`parent frame ${JSON.stringify(parent)} does not exist`);
    }
    this.pushUndo();
    const created = Math.max(0, ...this.working.frames.map((f) => f.created_seq)) + 1;
    const id = this.freshId("frame");
    this.working.frames.push({
      id,
      name,
      position: [...position],
      size: [...size],
      parent,
      created_seq: created,
    });
    return id;
  }

  renameFrame(id: string, name: string): void {
    const frame = this.requireFrame(id);
    this.pushUndo();
    frame.name = name;
  }

  resizeFrame(id: string, size: [number, number]): void {
    const frame = this.requireFrame(id);
    this.pushUndo();
    frame.size = [...size];
  }

  /** Move a frame (dragging the whole subtree with its owned items) or a
   * single document or note. */
  moveEntity(id: string, position: [number, number]): void {
    const found = this.find(id);
    if (found === null) throw new Error(`no entity with id ${JSON.stringify(id)}`);
    if (found.kind === "highlight") throw new Error("highlights have no position");
    this.pushUndo();
    if (found.kind !== "frame") {
      found.entity.position = [...position];
      return;
    }
    const dx = position[0] - found.entity.position[0];
    const dy = position[1] - found.entity.position[1];
    const group = this.subtreeIds(id);
    const owned = this.membership();
    for (const f of this.working.frames) {
      if (group.has(f.id)) f.position = [f.position[0] + dx, f.position[1] + dy];
    }
    for (const d of this.working.documents) {
      const owner = owned[d.id];
      if (owner !== null && owner !== undefined && group.has(owner)) {
        d.position = [d.position[0] + dx, d.position[1] + dy];
      }
    }
    for (const n of this.working.notes) {
      const owner = owned[n.id];
      if (owner !== null && owner !== undefined && group.has(owner)) {
        n.position = [n.position[0] + dx, n.position[1] + dy];
      }
    }
  }

  private subtreeIds(rootId: string): Set<string> {
    const group = new Set([rootId]);
    let changed = true;
    while (changed) {
      changed = false;
      for (const f of this.working.frames) {
        if (f.parent !== null && group.has(f.parent) && !group.has(f.id)) {
          group.add(f.id);
          changed = true;
        }
      }
    }
    return group;
  }

  addNote(
    text: string,
    position: [number, number],
    size: [number, number] = [140, 90],
  ): string {
    this.pushUndo();
    const id = this.freshId("note");
    this.working.notes.push({ id, text, position: [...position], size: [...size] });
    return id;
  }

  editNote(id: string, text: string): void {
    const found = this.find(id);
    if (found?.kind !== "note") throw new Error(`no note with id ${JSON.stringify(id)}`);
    this.pushUndo();
    found.entity.text = text;
  }

  addHighlight(documentId: string, span: [number, number]): string {
    const found = this.find(documentId);
    if (found?.kind !== "document") {
      throw new Error(`no document with id ${JSON.stringify(documentId)}`);
    }
    const [start, end] = span;
    const body = found.entity.body;
    if (!(0 <= start && start < end && end <= body.length)) {
      throw new Error(`span [${start}, ${end}] out of range for document body`);
    }
    this.pushUndo();
    const id = this.freshId("hl");
    this.working.highlights.push({
      id,
      document: documentId,
      span: [start, end],
      text: body.slice(start, end),
      count: 1,
      polarity: "emphasize",
    });
    found.entity.highlights.push(id);
    return id;
  }

  /** Badge click: +1 per click, never below 1. */
  incrementHighlight(id: string, delta = 1): void {
    const found = this.find(id);
    if (found?.kind !== "highlight") {
      throw new Error(`no highlight with id ${JSON.stringify(id)}`);
    }
    this.pushUndo();
    found.entity.count = Math.max(1, found.entity.count + delta);
  }

  toggleHighlightPolarity(id: string): void {
    const found = this.find(id);
    if (found?.kind !== "highlight") {
      throw new Error(`no highlight with id ${JSON.stringify(id)}`);
    }
    this.pushUndo();
    found.entity.polarity = found.entity.polarity === "emphasize" ? "reject" : "emphasize";
  }

  /** Eraser. Frames hand their children to the grandparent; documents take
   * their highlights with them. */
  erase(id: string): void {
    const found = this.find(id);
    if (found === null) throw new Error(`no entity with id ${JSON.stringify(id)}`);
    this.pushUndo();
    if (found.kind === "frame") {
      const parent = found.entity.parent;
      for (const f of this.working.frames) {
        if (f.parent === id) f.parent = parent;
      }
      this.working.frames = this.working.frames.filter((f) => f.id !== id);
    } else if (found.kind === "document") {
      this.working.highlights = this.working.highlights.filter((h) => h.document !== id);
      this.working.documents = this.working.documents.filter((d) => d.id !== id);
    } else if (found.kind === "note") {
      this.working.notes = this.working.notes.filter((n) => n.id !== id);
    } else {
      this.working.highlights = this.working.highlights.filter((h) => h.id !== id);
      for (const d of this.working.documents) {
        d.highlights = d.highlights.filter((hid) => hid !== id);
      }
    }
    if (this.selection === id) this.selection = null;
  }

  // -- undo/redo -----------------------------------------------------------------

  get canUndo(): boolean {
    return this.past.length > 0;
  }

  get canRedo(): boolean {
    return this.future.length > 0;
  }

  undo(): boolean {
    const prior = this.past.pop();
    if (prior === undefined) return false;
    this.future.push(JSON.stringify(this.working));
    this.working = JSON.parse(prior);
    return true;
  }

  redo(): boolean {
    const next = this.future.pop();
    if (next === undefined) return false;
    this.past.push(JSON.stringify(this.working));
    this.working = JSON.parse(next);
    return true;
  }

  isDirty(): boolean {
    return JSON.stringify(this.working) !== this.baseSerial;
  }

  // -- validation and serialization -----------------------------------------------

  /** Mirror of the server's snapshot rules, so a save either passes both
   * sides or fails here first with the same complaints. */
  validate(): Violation[] {
    const out: Violation[] = [];
    const s = this.working;
    const seen = new Map<string, string>();
    const register = (label: string, id: string) => {
      const prior = seen.get(id);
      if (prior !== undefined) {
        out.push({ subject: id, reason: `duplicate id (already used by a ${prior})` });
      } else {
        seen.set(id, label);
      }
    };
    for (const f of s.frames) register("frame", f.id);
    for (const d of s.documents) register("document", d.id);
    for (const h of s.highlights) register("highlight", h.id);
    for (const n of s.notes) register("note", n.id);

    const frames = new Map(s.frames.map((f) => [f.id, f]));
    const documents = new Map(s.documents.map((d) => [d.id, d]));
    const highlights = new Map(s.highlights.map((h) => [h.id, h]));

    const cyclic = new Set<string>();
    for (const f of s.frames) {
      if (f.size[0] <= 0 || f.size[1] <= 0) {
        out.push({ subject: f.id, reason: "frame size must be positive" });
      }
      if (f.name.trim() === "") {
        out.push({ subject: f.id, reason: "frame name must be non-empty" });
      }
      if (f.parent !== null && !frames.has(f.parent)) {
        out.push({
          subject: f.id,
          reason: `parent frame ${JSON.stringify(f.parent)} does not exist`,
        });
      }
      const walked = new Set([f.id]);
      let cur = f;
      while (cur.parent !== null && frames.has(cur.parent)) {
        cur = frames.get(cur.parent)!;
        if (walked.has(cur.id)) {
          out.push({ subject: f.id, reason: "frame parent chain contains a cycle" });
          cyclic.add(f.id);
          break;
        }
        walked.add(cur.id);
      }
    }
    for (const f of s.frames) {
      if (f.parent === null || !frames.has(f.parent) || cyclic.has(f.id)) continue;
      const parent = frames.get(f.parent)!;
      if (!rectInside(boundsOf(f.position, f.size), boundsOf(parent.position, parent.size))) {
        out.push({
          subject: f.id,
          reason: `frame bounds extend outside parent ${JSON.stringify(parent.id)}`,
        });
      }
    }

    for (const d of s.documents) {
      if (d.size[0] <= 0 || d.size[1] <= 0) {
        out.push({ subject: d.id, reason: "document size must be positive" });
      }
      for (const hid of d.highlights) {
        const h = highlights.get(hid);
        if (h === undefined) {
          out.push({ subject: d.id, reason: `references missing highlight ${JSON.stringify(hid)}` });
        } else if (h.document !== d.id) {
          out.push({
            subject: d.id,
            reason: `lists highlight ${JSON.stringify(hid)} owned by another document`,
          });
        }
      }
    }

    for (const h of s.highlights) {
      const doc = documents.get(h.document);
      if (doc === undefined) {
        out.push({
          subject: h.id,
          reason: `document ${JSON.stringify(h.document)} does not exist`,
        });
      } else {
        const [start, end] = h.span;
        if (!(0 <= start && start < end && end <= doc.body.length)) {
          out.push({
            subject: h.id,
            reason: `span [${start}, ${end}] out of range for document body`,
          });
        } else if (doc.body.slice(start, end) !== h.text) {
          out.push({ subject: h.id, reason: "text does not match the document span" });
        }
        if (!doc.highlights.includes(h.id)) {
          out.push({ subject: h.id, reason: `not listed on document ${JSON.stringify(doc.id)}` });
        }
      }
      if (h.count < 1) {
        out.push({ subject: h.id, reason: "count must be >= 1" });
      }
    }

    for (const n of s.notes) {
      if (n.text.trim() === "") {
        out.push({ subject: n.id, reason: "note text must be non-empty" });
      }
      if (n.size[0] <= 0 || n.size[1] <= 0) {
        out.push({ subject: n.id, reason: "note size must be positive" });
      }
    }

    return out;
  }

  /**
   * Next snapshot payload for PUT. Throws if local edits violate the rules.
   *
   * Prompt settings are passed through untouched: the canvas never edits
   * them, because the server flags settings smuggled through the workspace
   * endpoint as a scope violation.
   */
  serialize(timestamp?: string): WorkspaceSnapshotPayload {
    const violations = this.validate();
    if (violations.length > 0) {
      throw new CanvasValidationError(violations);
    }
    const base = JSON.parse(this.baseSerial) as WorkspaceSnapshotPayload;
    const payload = clone(this.working);
    payload.version = base.version + 1;
    payload.timestamp = timestamp ?? payload.timestamp;
    return payload;
  }
}
