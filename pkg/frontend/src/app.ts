/**
 * Browser application: wires the canvas model, the API client, and the
 * report view into the page. All reasoning happens server-side; this file
 * is events in, draw calls out.
 */

import { ApiClient, ApiError } from "./api.js";
import { CanvasState, CanvasValidationError, Tool, TOOLS, boundsOf } from "./canvas.js";
import { byId, clear, el } from "./dom.js";
import { pollJob, JobFailed, PollTimeout } from "./poll.js";
import {
  buildReportView,
  plainReportView,
  ReportView,
  ReportSpan,
} from "./report_view.js";
import {
  CompletionPayload,
  PromptSettingsPayload,
  ReportPayload,
  SessionDescription,
  WorkspaceSnapshotPayload,
} from "./types.js";

const FRAME_FILL = "rgba(120, 144, 156, 0.12)";
const FRAME_EDGE = "#78909c";
const DOC_FILL = "#fffde7";
const NOTE_FILL = "#fff59d";
const SELECT_EDGE = "#1e88e5";
const PREVIEW_EDGE = "#43a047";

interface DragState {
  id: string;
  offsetX: number;
  offsetY: number;
}

export class App {
  private readonly api: ApiClient;
  private canvasState: CanvasState | null = null;
  private sessionId: string | null = null;
  private report: ReportPayload | null = null;
  private settingsDraft: PromptSettingsPayload | null = null;
  private view: ReportView | null = null;
  private lastCompletion: CompletionPayload | null = null;
  private drag: DragState | null = null;
  private panFrom: { x: number; y: number } | null = null;
  private previewFrame: string | null = null;
  private refining = false;

  private readonly board: HTMLCanvasElement;
  private readonly minimap: HTMLCanvasElement;
  private readonly ctx: CanvasRenderingContext2D;

  constructor(apiBase: string) {
    this.api = new ApiClient(apiBase);
    this.board = byId<HTMLCanvasElement>("board");
    this.minimap = byId<HTMLCanvasElement>("minimap");
    const ctx = this.board.getContext("2d");
    if (ctx === null) throw new Error("2d canvas unsupported");
    this.ctx = ctx;
  }

  async boot(): Promise<void> {
    this.bindToolbar();
    this.bindCanvas();
    this.bindSidebar();
    const sessions = await this.api.listSessions();
    const picked = sessions.length > 0 ? sessions[sessions.length - 1]! : null;
    if (picked !== null) {
      await this.loadSession(picked);
      this.notify(`loaded session ${picked}`);
    } else {
      this.notify("no sessions yet; create one from a snapshot JSON file");
    }
    this.draw();
  }

  private async loadSession(sessionId: string): Promise<void> {
    const description = await this.api.getSession(sessionId);
    this.adopt(description);
  }

  private adopt(description: SessionDescription): void {
    this.sessionId = description.session_id;
    this.report = description.report;
    this.settingsDraft = structuredClone(description.workspace.prompt_settings);
    if (this.canvasState === null) {
      this.canvasState = new CanvasState(description.workspace);
      this.canvasState.zoomToFit(this.board.width, this.board.height);
    } else {
      this.canvasState.loadSnapshot(description.workspace);
    }
    this.view = plainReportView(description.report);
    this.lastCompletion = null;
    this.renderSidebar();
    this.draw();
  }

  // -- toolbar -----------------------------------------------------------------

  private bindToolbar(): void {
    for (const tool of TOOLS) {
      byId<HTMLButtonElement>(`tool-${tool}`).addEventListener("click", () => {
        this.setTool(tool);
      });
    }
    byId<HTMLButtonElement>("create-session").addEventListener("click", () => {
      void this.createSessionFromFile();
    });
    byId<HTMLButtonElement>("save-workspace").addEventListener("click", () => {
      void this.saveWorkspace();
    });
    byId<HTMLButtonElement>("refine").addEventListener("click", () => {
      void this.refine();
    });
    byId<HTMLButtonElement>("undo-edit").addEventListener("click", () => {
      if (this.canvasState?.undo()) this.draw();
    });
    byId<HTMLButtonElement>("redo-edit").addEventListener("click", () => {
      if (this.canvasState?.redo()) this.draw();
    });
    byId<HTMLButtonElement>("undo-refine").addEventListener("click", () => {
      void this.serverUndo("undo");
    });
    byId<HTMLButtonElement>("redo-refine").addEventListener("click", () => {
      void this.serverUndo("redo");
    });
    byId<HTMLButtonElement>("zoom-fit").addEventListener("click", () => {
      this.canvasState?.zoomToFit(this.board.width, this.board.height);
      this.draw();
    });
  }

  private setTool(tool: Tool): void {
    this.canvasState?.setTool(tool);
    for (const t of TOOLS) {
      byId(`tool-${t}`).classList.toggle("active", t === tool);
    }
  }

  private async createSessionFromFile(): Promise<void> {
    const input = byId<HTMLInputElement>("snapshot-file");
    const file = input.files?.[0];
    if (file === undefined) {
      this.notify("choose a snapshot JSON file first");
      return;
    }
    try {
      const workspace = JSON.parse(await file.text()) as WorkspaceSnapshotPayload;
      const description = await this.api.createSession(workspace);
      this.adopt(description);
      this.notify(`session ${description.session_id} created`);
    } catch (err) {
      this.showError(err);
    }
  }

  private async saveWorkspace(): Promise<void> {
    if (this.canvasState === null || this.sessionId === null) return;
    try {
      const payload = this.canvasState.serialize(new Date().toISOString());
      const version = await this.api.putWorkspace(this.sessionId, payload);
      this.canvasState.loadSnapshot(payload);
      this.notify(`workspace saved at version ${version}`);
    } catch (err) {
      this.showError(err);
    }
    this.draw();
  }

  // -- refinement round trip ------------------------------------------------------

  private async refine(): Promise<void> {
    if (this.sessionId === null || this.refining) return;
    const button = byId<HTMLButtonElement>("refine");
    this.refining = true;
    button.disabled = true;
    button.textContent = "Report Refinement…";
    const previous = this.report;
    try {
      const ack = await this.api.refine(this.sessionId);
      const completion = await pollJob(this.api, this.sessionId, ack.job_id, {
        onPhase: (phase) => this.notify(`refinement: ${phase}`),
      });
      this.report = completion.report;
      this.lastCompletion = completion;
      this.view = buildReportView(
        previous ?? completion.report,
        completion.report,
        completion.diff,
        completion.inferences,
        completion.delta,
      );
      this.notify(
        completion.scope_violations.length === 0
          ? `refined to version ${completion.trigger_version}`
          : `refined with scope repairs: ${completion.scope_violations.join("; ")}`,
      );
    } catch (err) {
      if (err instanceof ApiError && err.errorName === "NothingToRefine") {
        this.notify("nothing to refine: " + err.detail);
      } else if (err instanceof JobFailed || err instanceof PollTimeout) {
        this.showError(err);
      } else {
        this.showError(err);
      }
    } finally {
      this.refining = false;
      button.disabled = false;
      button.textContent = "Report Refinement";
      this.renderSidebar();
      this.draw();
    }
  }

  private async serverUndo(direction: "undo" | "redo"): Promise<void> {
    if (this.sessionId === null) return;
    try {
      const ack =
        direction === "undo"
          ? await this.api.undo(this.sessionId)
          : await this.api.redo(this.sessionId);
      this.report = ack.report;
      this.view = plainReportView(ack.report);
      this.lastCompletion = null;
      const description = await this.api.getSession(this.sessionId);
      this.canvasState?.loadSnapshot(description.workspace);
      this.notify(`${direction} to cursor ${ack.cursor}`);
    } catch (err) {
      this.showError(err);
    }
    this.renderSidebar();
    this.draw();
  }

  // -- canvas input ------------------------------------------------------------------

  private bindCanvas(): void {
    this.board.addEventListener("wheel", (event) => {
      event.preventDefault();
      const factor = event.deltaY < 0 ? 1.1 : 1 / 1.1;
      this.canvasState?.zoomBy(factor, event.offsetX, event.offsetY);
      this.draw();
    });
    this.board.addEventListener("pointerdown", (event) => this.pointerDown(event));
    this.board.addEventListener("pointermove", (event) => this.pointerMove(event));
    this.board.addEventListener("pointerup", (event) => this.pointerUp(event));
    this.board.addEventListener("contextmenu", (event) => {
      event.preventDefault();
      this.contextAction(event);
    });
    this.board.addEventListener("dblclick", (event) => this.doubleClick(event));
    this.minimap.addEventListener("pointerdown", (event) => this.minimapJump(event));
  }

  private toWorld(event: MouseEvent): [number, number] {
    const cs = this.canvasState!;
    return [
      (event.offsetX - cs.viewport.panX) / cs.viewport.zoom,
      (event.offsetY - cs.viewport.panY) / cs.viewport.zoom,
    ];
  }

  private pointerDown(event: PointerEvent): void {
    const cs = this.canvasState;
    if (cs === null) return;
    this.board.setPointerCapture(event.pointerId);
    const [wx, wy] = this.toWorld(event);
    const hit = cs.hitTest(wx, wy);
    if (cs.tool === "select") {
      if (hit === null) {
        cs.select(null);
        this.panFrom = { x: event.offsetX, y: event.offsetY };
      } else {
        cs.select(hit);
        const found = cs.find(hit);
        if (found !== null && found.kind !== "highlight") {
          cs.beginGesture();
          this.drag = {
            id: hit,
            offsetX: wx - found.entity.position[0],
            offsetY: wy - found.entity.position[1],
          };
        }
      }
      this.draw();
      return;
    }
    if (cs.tool === "note") {
      const text = window.prompt("note text");
      if (text !== null && text.trim() !== "") {
        const id = cs.addNote(text, [wx, wy]);
        cs.select(id);
      }
      this.draw();
      return;
    }
    if (cs.tool === "frame") {
      const name = window.prompt("frame name");
      if (name !== null && name.trim() !== "") {
        const id = cs.addFrame(name, [wx, wy], [400, 300]);
        cs.select(id);
      }
      this.draw();
      return;
    }
    if (cs.tool === "eraser") {
      if (hit !== null) {
        cs.erase(hit);
        this.notify(`erased ${hit}`);
      }
      this.draw();
      return;
    }
    if (cs.tool === "highlight" && hit !== null) {
      const found = cs.find(hit);
      if (found?.kind === "document") {
        const wanted = window.prompt("text to highlight", "");
        if (wanted !== null && wanted !== "") {
          const start = found.entity.body.indexOf(wanted);
          if (start < 0) {
            this.notify("that text is not in the document");
          } else {
            cs.addHighlight(hit, [start, start + wanted.length]);
          }
        }
      }
      this.draw();
    }
  }

  private pointerMove(event: PointerEvent): void {
    const cs = this.canvasState;
    if (cs === null) return;
    if (this.panFrom !== null) {
      cs.panBy(event.offsetX - this.panFrom.x, event.offsetY - this.panFrom.y);
      this.panFrom = { x: event.offsetX, y: event.offsetY };
      this.draw();
      return;
    }
    if (this.drag !== null) {
      const [wx, wy] = this.toWorld(event);
      const position: [number, number] = [wx - this.drag.offsetX, wy - this.drag.offsetY];
      const found = cs.find(this.drag.id);
      this.previewFrame =
        found !== null && found.kind !== "frame" && found.kind !== "highlight"
          ? cs.membershipPreview(position)
          : null;
      cs.moveEntity(this.drag.id, position);
      this.draw();
    }
  }

  private pointerUp(event: PointerEvent): void {
    this.board.releasePointerCapture(event.pointerId);
    this.canvasState?.endGesture();
    this.drag = null;
    this.panFrom = null;
    this.previewFrame = null;
    this.draw();
  }

  private doubleClick(event: MouseEvent): void {
    const cs = this.canvasState;
    if (cs === null) return;
    const [wx, wy] = this.toWorld(event);
    const hit = cs.hitTest(wx, wy);
    if (hit === null) return;
    const found = cs.find(hit);
    if (found?.kind === "document") {
      // double-click bumps the first badge on the card
      const first = found.entity.highlights[0];
      if (first !== undefined) {
        cs.incrementHighlight(first);
        this.notify(`highlight ${first} count raised`);
      }
    } else if (found?.kind === "note") {
      const text = window.prompt("note text", found.entity.text);
      if (text !== null && text.trim() !== "") cs.editNote(hit, text);
    } else if (found?.kind === "frame") {
      const name = window.prompt("frame name", found.entity.name);
      if (name !== null && name.trim() !== "") cs.renameFrame(hit, name);
    }
    this.draw();
  }

  private contextAction(event: MouseEvent): void {
    const cs = this.canvasState;
    if (cs === null) return;
    const [wx, wy] = this.toWorld(event);
    const hit = cs.hitTest(wx, wy);
    if (hit === null) return;
    const found = cs.find(hit);
    if (found?.kind === "document" && found.entity.highlights.length > 0) {
      const first = found.entity.highlights[0]!;
      cs.toggleHighlightPolarity(first);
      this.notify(`highlight ${first} polarity toggled`);
      this.draw();
    }
  }

  private minimapJump(event: PointerEvent): void {
    const cs = this.canvasState;
    if (cs === null) return;
    const content = cs.contentBounds();
    if (content === null) return;
    const scaleX = this.minimap.width / (content.x1 - content.x0);
    const scaleY = this.minimap.height / (content.y1 - content.y0);
    const scale = Math.min(scaleX, scaleY);
    const worldX = content.x0 + event.offsetX / scale;
    const worldY = content.y0 + event.offsetY / scale;
    cs.viewport.panX = this.board.width / 2 - worldX * cs.viewport.zoom;
    cs.viewport.panY = this.board.height / 2 - worldY * cs.viewport.zoom;
    this.draw();
  }

  /** Provenance click: center the canvas on a workspace entity. */
  focusEntity(id: string): void {
    const cs = this.canvasState;
    if (cs === null) return;
    const found = cs.find(id);
    if (found === null || found.kind === "highlight") return;
    const [x, y] = found.entity.position;
    cs.viewport.panX = this.board.width / 2 - x * cs.viewport.zoom;
    cs.viewport.panY = this.board.height / 2 - y * cs.viewport.zoom;
    cs.select(id);
    this.draw();
  }

  // -- drawing ------------------------------------------------------------------------

  private draw(): void {
    const cs = this.canvasState;
    const ctx = this.ctx;
    ctx.setTransform(1, 0, 0, 1, 0, 0);
    ctx.clearRect(0, 0, this.board.width, this.board.height);
    if (cs === null) return;
    ctx.setTransform(
      cs.viewport.zoom,
      0,
      0,
      cs.viewport.zoom,
      cs.viewport.panX,
      cs.viewport.panY,
    );
    const snapshot = cs.snapshot;
    const ordered = [...snapshot.frames].sort(
      (a, b) => b.size[0] * b.size[1] - a.size[0] * a.size[1],
    );
    for (const frame of ordered) {
      const r = boundsOf(frame.position, frame.size);
      ctx.fillStyle = FRAME_FILL;
      ctx.strokeStyle = this.previewFrame === frame.id ? PREVIEW_EDGE : FRAME_EDGE;
      ctx.lineWidth = (this.previewFrame === frame.id ? 3 : 1.5) / cs.viewport.zoom;
      ctx.fillRect(r.x0, r.y0, r.x1 - r.x0, r.y1 - r.y0);
      ctx.strokeRect(r.x0, r.y0, r.x1 - r.x0, r.y1 - r.y0);
      ctx.fillStyle = "#455a64";
      ctx.font = `${14 / cs.viewport.zoom}px sans-serif`;
      ctx.fillText(frame.name, r.x0 + 6 / cs.viewport.zoom, r.y0 + 18 / cs.viewport.zoom);
    }
    for (const doc of snapshot.documents) {
      const r = boundsOf(doc.position, doc.size);
      ctx.fillStyle = DOC_FILL;
      ctx.strokeStyle = "#9e9d24";
      ctx.lineWidth = 1 / cs.viewport.zoom;
      ctx.fillRect(r.x0, r.y0, r.x1 - r.x0, r.y1 - r.y0);
      ctx.strokeRect(r.x0, r.y0, r.x1 - r.x0, r.y1 - r.y0);
      ctx.fillStyle = "#33691e";
      ctx.font = `${12 / cs.viewport.zoom}px sans-serif`;
      ctx.fillText(doc.title, r.x0 + 4 / cs.viewport.zoom, r.y0 + 14 / cs.viewport.zoom);
      let badgeY = r.y0;
      for (const hid of doc.highlights) {
        const h = snapshot.highlights.find((x) => x.id === hid);
        if (h === undefined) continue;
        ctx.fillStyle = h.polarity === "emphasize" ? "#ef6c00" : "#b71c1c";
        ctx.beginPath();
        ctx.arc(r.x1, badgeY, 9 / cs.viewport.zoom, 0, Math.PI * 2);
        ctx.fill();
        ctx.fillStyle = "#fff";
        ctx.font = `${10 / cs.viewport.zoom}px sans-serif`;
        ctx.fillText(
          String(h.count),
          r.x1 - 3 / cs.viewport.zoom,
          badgeY + 3 / cs.viewport.zoom,
        );
        badgeY += 22 / cs.viewport.zoom;
      }
    }
    for (const note of snapshot.notes) {
      const r = boundsOf(note.position, note.size);
      ctx.fillStyle = NOTE_FILL;
      ctx.strokeStyle = "#f9a825";
      ctx.lineWidth = 1 / cs.viewport.zoom;
      ctx.fillRect(r.x0, r.y0, r.x1 - r.x0, r.y1 - r.y0);
      ctx.strokeRect(r.x0, r.y0, r.x1 - r.x0, r.y1 - r.y0);
      ctx.fillStyle = "#5d4037";
      ctx.font = `${11 / cs.viewport.zoom}px sans-serif`;
      ctx.fillText(
        note.text.slice(0, 24),
        r.x0 + 4 / cs.viewport.zoom,
        r.y0 + 14 / cs.viewport.zoom,
      );
    }
    if (cs.selection !== null) {
      const found = cs.find(cs.selection);
      if (found !== null && found.kind !== "highlight") {
        const r = boundsOf(found.entity.position, found.entity.size);
        ctx.strokeStyle = SELECT_EDGE;
        ctx.lineWidth = 2.5 / cs.viewport.zoom;
        ctx.strokeRect(r.x0, r.y0, r.x1 - r.x0, r.y1 - r.y0);
      }
    }
    this.drawMinimap();
    byId("dirty-flag").textContent = cs.isDirty() ? "unsaved edits" : "";
  }

  private drawMinimap(): void {
    const cs = this.canvasState;
    const ctx = this.minimap.getContext("2d");
    if (cs === null || ctx === null) return;
    ctx.setTransform(1, 0, 0, 1, 0, 0);
    ctx.clearRect(0, 0, this.minimap.width, this.minimap.height);
    const content = cs.contentBounds();
    if (content === null) return;
    const scale = Math.min(
      this.minimap.width / (content.x1 - content.x0),
      this.minimap.height / (content.y1 - content.y0),
    );
    const model = cs.minimap(this.board.width, this.board.height);
    for (const entity of model.entities) {
      ctx.fillStyle =
        entity.kind === "frame" ? "#b0bec5" : entity.kind === "document" ? "#dce775" : "#ffe082";
      ctx.fillRect(
        (entity.x - content.x0) * scale,
        (entity.y - content.y0) * scale,
        Math.max(entity.w * scale, 2),
        Math.max(entity.h * scale, 2),
      );
    }
    ctx.strokeStyle = "#1e88e5";
    ctx.lineWidth = 1;
    ctx.strokeRect(
      (model.view.x - content.x0) * scale,
      (model.view.y - content.y0) * scale,
      model.view.w * scale,
      model.view.h * scale,
    );
  }

  // -- sidebar ---------------------------------------------------------------------------

  private bindSidebar(): void {
    for (const tab of ["prompt", "model", "report"]) {
      byId(`tab-${tab}`).addEventListener("click", () => {
        for (const other of ["prompt", "model", "report"]) {
          byId(`panel-${other}`).classList.toggle("hidden", other !== tab);
          byId(`tab-${other}`).classList.toggle("active", other === tab);
        }
      });
    }
    byId<HTMLButtonElement>("save-settings").addEventListener("click", () => {
      void this.saveSettings();
    });
  }

  private async saveSettings(): Promise<void> {
    if (this.sessionId === null || this.settingsDraft === null) return;
    const draft = this.settingsDraft;
    draft.task_description = byId<HTMLTextAreaElement>("task-description").value;
    draft.model_config.model_name = byId<HTMLInputElement>("model-name").value;
    draft.model_config.temperature = Number(byId<HTMLInputElement>("temperature").value);
    draft.model_config.max_tokens = Number(byId<HTMLInputElement>("max-tokens").value);
    try {
      const version = await this.api.putSettings(this.sessionId, draft);
      const description = await this.api.getSession(this.sessionId);
      this.canvasState?.loadSnapshot(description.workspace);
      this.notify(`settings saved at version ${version}`);
    } catch (err) {
      this.showError(err);
    }
    this.draw();
  }

  private renderSidebar(): void {
    if (this.settingsDraft !== null) {
      byId<HTMLTextAreaElement>("task-description").value = this.settingsDraft.task_description;
      byId<HTMLInputElement>("model-name").value = this.settingsDraft.model_config.model_name;
      byId<HTMLInputElement>("temperature").value = String(
        this.settingsDraft.model_config.temperature,
      );
      byId<HTMLInputElement>("max-tokens").value = String(
        this.settingsDraft.model_config.max_tokens,
      );
      const list = byId("component-list");
      clear(list);
      for (const component of this.settingsDraft.components) {
        list.appendChild(el("li", "component", `${component.name} (${component.kind})`));
      }
    }
    this.renderReport();
  }

  private renderReport(): void {
    const panel = byId("report-body");
    const bubbles = byId("reasoning-bubbles");
    clear(panel);
    clear(bubbles);
    if (this.view === null) return;
    for (const bubble of this.view.bubbles) {
      const node = el("div", "bubble");
      node.appendChild(el("div", "bubble-why", bubble.why));
      for (const instruction of bubble.instructions) {
        node.appendChild(el("div", "bubble-step", instruction));
      }
      if (bubble.anchorEntity !== null) {
        const link = el("button", "bubble-link", `show ${bubble.anchorEntity}`);
        link.addEventListener("click", () => this.focusEntity(bubble.anchorEntity!));
        node.appendChild(link);
      }
      bubbles.appendChild(node);
    }
    for (const block of this.view.blocks) {
      const section = el("section", block.removed ? "component removed" : "component");
      const heading = el("h3", spanClass(block.heading), block.heading.text);
      if (block.anchor !== null) {
        const link = el("button", "provenance", `⤷ ${block.anchor}`);
        link.addEventListener("click", () => this.focusEntity(block.anchor!));
        heading.appendChild(link);
      }
      section.appendChild(heading);
      const body = el("p");
      for (const span of block.sentences) {
        body.appendChild(el("span", spanClass(span), span.text + " "));
      }
      for (const span of block.tombstones) {
        body.appendChild(el("span", "span-deleted", span.text + " "));
      }
      section.appendChild(body);
      panel.appendChild(section);
    }
  }

  // -- status ----------------------------------------------------------------------------

  private notify(message: string): void {
    byId("status").textContent = message;
    byId("status").classList.remove("error");
  }

  private showError(err: unknown): void {
    const node = byId("status");
    node.classList.add("error");
    if (err instanceof CanvasValidationError) {
      node.textContent =
        "cannot save: " + err.violations.map((v) => `${v.subject}: ${v.reason}`).join("; ");
    } else if (err instanceof ApiError) {
      node.textContent = `${err.errorName}: ${err.detail}`;
    } else {
      node.textContent = String(err);
    }
  }
}

function spanClass(span: ReportSpan): string {
  if (span.change === null) return "span-plain";
  return `span-${span.change}`;
}
