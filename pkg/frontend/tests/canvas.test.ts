import { describe, expect, it } from "vitest";
import {
  CanvasState,
  CanvasValidationError,
  MAX_ZOOM,
  MIN_ZOOM,
} from "../src/canvas.js";
import { WorkspaceSnapshotPayload } from "../src/types.js";
import { fixtureSnapshot } from "./fixtures.js";

const state = () => new CanvasState(fixtureSnapshot());

describe("membership", () => {
  it("assigns items to the smallest containing frame by center point", () => {
    const cs = state();
    const owners = cs.membership();
    // d-gate sits inside both f-big and f-small; the smaller frame wins
    expect(owners["d-gate"]).toBe("f-small");
    expect(owners["n-ops"]).toBe("f-big");
  });

  it("returns null for unframed items", () => {
    const cs = state();
    cs.moveEntity("n-ops", [5000, 5000]);
    expect(cs.membership()["n-ops"]).toBeNull();
  });

  it("breaks area ties on created_seq then id", () => {
    const snapshot = fixtureSnapshot();
    snapshot.frames = [
      { id: "f-z", name: "Z", position: [0, 0], size: [100, 100], parent: null, created_seq: 5 },
      { id: "f-a", name: "A", position: [10, 0], size: [100, 100], parent: null, created_seq: 7 },
    ];
    snapshot.documents = [];
    snapshot.notes = [
      { id: "n-tie", text: "tie", position: [5, 0], size: [10, 10] },
    ];
    snapshot.highlights = [];
    const cs = new CanvasState(snapshot);
    expect(cs.membership()["n-tie"]).toBe("f-z");
  });

  it("previews the owner for a candidate drop position", () => {
    const cs = state();
    expect(cs.membershipPreview([1200, 0])).toBe("f-other");
    expect(cs.membershipPreview([9999, 9999])).toBeNull();
  });
});

describe("edits", () => {
  it("adds a frame with the next created_seq", () => {
    const cs = state();
    const id = cs.addFrame("Wildlife", [2000, 0], [300, 200]);
    const found = cs.find(id);
    expect(found?.kind).toBe("frame");
    if (found?.kind === "frame") {
      expect(found.entity.created_seq).toBe(4);
      expect(found.entity.parent).toBeNull();
    }
  });

  it("moves a frame together with its subtree and owned items", () => {
    const cs = state();
    cs.moveEntity("f-big", [50, 10]);
    const snap = cs.snapshot;
    expect(snap.frames.find((f) => f.id === "f-big")!.position).toEqual([50, 10]);
    expect(snap.frames.find((f) => f.id === "f-small")!.position).toEqual([150, 110]);
    expect(snap.documents[0]!.position).toEqual([150, 130]);
    expect(snap.notes[0]!.position).toEqual([-150, -90]);
    // unrelated top frame stays put
    expect(snap.frames.find((f) => f.id === "f-other")!.position).toEqual([1200, 0]);
  });

  it("moves a document alone", () => {
    const cs = state();
    cs.moveEntity("d-gate", [1200, 0]);
    expect(cs.snapshot.documents[0]!.position).toEqual([1200, 0]);
    expect(cs.membership()["d-gate"]).toBe("f-other");
  });

  it("adds and edits notes", () => {
    const cs = state();
    const id = cs.addNote("Check drainage", [300, 300]);
    cs.editNote(id, "Check drainage twice");
    const found = cs.find(id);
    expect(found?.kind === "note" && found.entity.text).toBe("Check drainage twice");
  });

  it("adds a highlight from a span and lists it on the document", () => {
    const cs = state();
    const id = cs.addHighlight("d-gate", [7, 14]);
    const found = cs.find(id);
    expect(found?.kind).toBe("highlight");
    if (found?.kind === "highlight") {
      expect(found.entity.text).toBe("doubled");
      expect(found.entity.count).toBe(1);
      expect(found.entity.polarity).toBe("emphasize");
    }
    expect(cs.snapshot.documents[0]!.highlights).toContain(id);
    expect(cs.validate()).toEqual([]);
  });

  it("rejects an out-of-range highlight span", () => {
    const cs = state();
    expect(() => cs.addHighlight("d-gate", [40, 90])).toThrow(/out of range/);
  });

  it("increments highlight count with a floor of one", () => {
    const cs = state();
    cs.incrementHighlight("h-queues");
    cs.incrementHighlight("h-queues", -10);
    const found = cs.find("h-queues");
    expect(found?.kind === "highlight" && found.entity.count).toBe(1);
  });

  it("toggles polarity back and forth", () => {
    const cs = state();
    cs.toggleHighlightPolarity("h-queues");
    let found = cs.find("h-queues");
    expect(found?.kind === "highlight" && found.entity.polarity).toBe("reject");
    cs.toggleHighlightPolarity("h-queues");
    found = cs.find("h-queues");
    expect(found?.kind === "highlight" && found.entity.polarity).toBe("emphasize");
  });

  it("erases a note", () => {
    const cs = state();
    cs.erase("n-ops");
    expect(cs.find("n-ops")).toBeNull();
  });

  it("erasing a document removes its highlights too", () => {
    const cs = state();
    cs.erase("d-gate");
    expect(cs.find("d-gate")).toBeNull();
    expect(cs.find("h-queues")).toBeNull();
    expect(cs.validate()).toEqual([]);
  });

  it("erasing a frame reparents children to the grandparent", () => {
    const cs = state();
    cs.erase("f-small");
    expect(cs.find("f-small")).toBeNull();
    expect(cs.validate()).toEqual([]);
    cs.erase("f-big");
    expect(cs.validate()).toEqual([]);
    expect(cs.membership()["d-gate"]).toBeNull();
  });

  it("erasing a highlight delists it from the document", () => {
    const cs = state();
    cs.erase("h-queues");
    expect(cs.snapshot.documents[0]!.highlights).toEqual([]);
    expect(cs.validate()).toEqual([]);
  });
});

describe("undo and redo", () => {
  it("walks edits back and forward", () => {
    const cs = state();
    const before = JSON.stringify(cs.snapshot);
    cs.addNote("first", [0, 0]);
    const afterFirst = JSON.stringify(cs.snapshot);
    cs.addNote("second", [10, 10]);
    expect(cs.canUndo).toBe(true);
    expect(cs.undo()).toBe(true);
    expect(JSON.stringify(cs.snapshot)).toBe(afterFirst);
    expect(cs.undo()).toBe(true);
    expect(JSON.stringify(cs.snapshot)).toBe(before);
    expect(cs.undo()).toBe(false);
    expect(cs.redo()).toBe(true);
    expect(JSON.stringify(cs.snapshot)).toBe(afterFirst);
  });

  it("drops the redo branch on a fresh edit", () => {
    const cs = state();
    cs.addNote("first", [0, 0]);
    cs.undo();
    cs.addNote("other", [5, 5]);
    expect(cs.canRedo).toBe(false);
    expect(cs.redo()).toBe(false);
  });

  it("collapses a drag gesture into one undo step", () => {
    const cs = state();
    const before = JSON.stringify(cs.snapshot);
    cs.beginGesture();
    cs.moveEntity("n-ops", [0, 0]);
    cs.moveEntity("n-ops", [20, 20]);
    cs.moveEntity("n-ops", [40, 40]);
    cs.endGesture();
    expect(cs.snapshot.notes[0]!.position).toEqual([40, 40]);
    expect(cs.undo()).toBe(true);
    expect(JSON.stringify(cs.snapshot)).toBe(before);
    expect(cs.canUndo).toBe(false);
  });

  it("an aborted gesture with no net change records nothing", () => {
    const cs = state();
    cs.beginGesture();
    cs.endGesture();
    expect(cs.canUndo).toBe(false);
  });

  it("tracks dirtiness against the loaded snapshot", () => {
    const cs = state();
    expect(cs.isDirty()).toBe(false);
    cs.addNote("x", [0, 0]);
    expect(cs.isDirty()).toBe(true);
    cs.undo();
    expect(cs.isDirty()).toBe(false);
  });
});

describe("validation mirror", () => {
  const mutate = (fn: (snapshot: WorkspaceSnapshotPayload) => void) => {
    const cs = state();
    fn(cs.snapshot);
    return cs.validate();
  };

  it("passes the clean fixture", () => {
    expect(state().validate()).toEqual([]);
  });

  it("flags duplicate ids across kinds", () => {
    const violations = mutate((s) => {
      s.notes.push({ id: "d-gate", text: "clash", position: [0, 0], size: [10, 10] });
    });
    expect(violations).toContainEqual({
      subject: "d-gate",
      reason: "duplicate id (already used by a document)",
    });
  });

  it("flags a missing parent and a parent cycle", () => {
    let violations = mutate((s) => {
      s.frames[1]!.parent = "f-ghost";
    });
    expect(violations.some((v) => v.reason.includes("does not exist"))).toBe(true);
    violations = mutate((s) => {
      s.frames[0]!.parent = "f-small";
    });
    expect(violations.some((v) => v.reason.includes("cycle"))).toBe(true);
  });

  it("flags a child poking out of its parent", () => {
    const violations = mutate((s) => {
      s.frames[1]!.position = [390, 100];
    });
    expect(
      violations.some((v) => v.subject === "f-small" && v.reason.includes("outside parent")),
    ).toBe(true);
  });

  it("flags highlight text drift when the body changes", () => {
    const violations = mutate((s) => {
      s.documents[0]!.body = "Short.";
    });
    expect(violations.some((v) => v.subject === "h-queues")).toBe(true);
  });

  it("flags a highlight not listed on its document", () => {
    const violations = mutate((s) => {
      s.documents[0]!.highlights = [];
    });
    expect(violations).toContainEqual({
      subject: "h-queues",
      reason: 'not listed on document "d-gate"',
    });
  });

  it("flags empty note text and bad counts", () => {
    let violations = mutate((s) => {
      s.notes[0]!.text = "   ";
    });
    expect(violations.some((v) => v.reason.includes("non-empty"))).toBe(true);
    violations = mutate((s) => {
      s.highlights[0]!.count = 0;
    });
    expect(violations.some((v) => v.reason.includes(">= 1"))).toBe(true);
  });
});

describe("serialization", () => {
  it("bumps the version over the loaded base", () => {
    const cs = state();
    cs.addNote("saved note", [0, 0]);
    const payload = cs.serialize();
    expect(payload.version).toBe(4);
    expect(WorkspaceSnapshotPayload.parse(payload)).toEqual(payload);
    // adopting the saved payload makes the next save bump again
    cs.loadSnapshot(payload);
    expect(cs.serialize().version).toBe(5);
  });

  it("never touches prompt settings", () => {
    const cs = state();
    cs.addFrame("Extra", [3000, 0], [100, 100]);
    cs.erase("n-ops");
    expect(cs.serialize().prompt_settings).toEqual(fixtureSnapshot().prompt_settings);
  });

  it("refuses to serialize an invalid workspace", () => {
    const cs = state();
    cs.snapshot.documents[0]!.body = "Short.";
    try {
      cs.serialize();
      expect.unreachable("serialize must throw");
    } catch (err) {
      expect(err).toBeInstanceOf(CanvasValidationError);
      expect((err as CanvasValidationError).violations.length).toBeGreaterThan(0);
    }
  });

  it("accepts an explicit timestamp", () => {
    const cs = state();
    cs.addNote("stamped", [0, 0]);
    const payload = cs.serialize("2026-02-02T00:00:00+00:00");
    expect(payload.timestamp).toBe("2026-02-02T00:00:00+00:00");
  });
});

describe("viewport", () => {
  it("clamps zoom", () => {
    const cs = state();
    cs.setZoom(1000);
    expect(cs.viewport.zoom).toBe(MAX_ZOOM);
    cs.setZoom(0.000001);
    expect(cs.viewport.zoom).toBe(MIN_ZOOM);
  });

  it("keeps the anchor point fixed while zooming", () => {
    const cs = state();
    cs.viewport.panX = 50;
    cs.viewport.panY = 20;
    const anchor: [number, number] = [300, 200];
    const worldX = (anchor[0] - cs.viewport.panX) / cs.viewport.zoom;
    const worldY = (anchor[1] - cs.viewport.panY) / cs.viewport.zoom;
    cs.setZoom(2, anchor[0], anchor[1]);
    expect(worldX * cs.viewport.zoom + cs.viewport.panX).toBeCloseTo(anchor[0], 9);
    expect(worldY * cs.viewport.zoom + cs.viewport.panY).toBeCloseTo(anchor[1], 9);
  });

  it("zoomToFit brings all content into view", () => {
    const cs = state();
    cs.zoomToFit(1100, 700);
    const content = cs.contentBounds()!;
    const { zoom, panX, panY } = cs.viewport;
    for (const [x, y] of [
      [content.x0, content.y0],
      [content.x1, content.y1],
    ]) {
      const sx = x! * zoom + panX;
      const sy = y! * zoom + panY;
      expect(sx).toBeGreaterThanOrEqual(0);
      expect(sx).toBeLessThanOrEqual(1100);
      expect(sy).toBeGreaterThanOrEqual(0);
      expect(sy).toBeLessThanOrEqual(700);
    }
  });

  it("minimap reports the visible world window", () => {
    const cs = state();
    cs.viewport.zoom = 2;
    cs.viewport.panX = -100;
    cs.viewport.panY = 40;
    const model = cs.minimap(1100, 700);
    expect(model.view).toEqual({ x: 50, y: -20, w: 550, h: 350 });
    expect(model.entities.map((e) => e.id)).toContain("f-big");
  });
});

describe("hit testing and selection", () => {
  it("prefers items over frames and small frames over big ones", () => {
    const cs = state();
    expect(cs.hitTest(100, 120)).toBe("d-gate");
    expect(cs.hitTest(100, 40)).toBe("f-small");
    expect(cs.hitTest(-300, 200)).toBe("f-big");
    expect(cs.hitTest(9000, 9000)).toBeNull();
  });

  it("select validates the id and erase clears a dangling selection", () => {
    const cs = state();
    cs.select("n-ops");
    expect(cs.selection).toBe("n-ops");
    expect(() => cs.select("nope")).toThrow(/no entity/);
    cs.erase("n-ops");
    expect(cs.selection).toBeNull();
  });
});
