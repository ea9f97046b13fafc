/**
 * Thin typed client for the reportloom session service.
 *
 * Every response body passes through a zod schema, so a drifted server
 * surfaces as a loud parse failure here instead of a silent bad render.
 * The fetch implementation is injectable for tests.
 */

import { z } from "zod";
import {
  CompletionPayload,
  JobStatusPayload,
  PromptSettingsPayload,
  ReplayCheckPayload,
  ReportComponentPayload,
  ReportPayload,
  SessionDescription,
  WorkspaceSnapshotPayload,
} from "./types.js";

export type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

export interface ErrorBody {
  error: string;
  detail: string;
  violations?: { subject: string; reason: string }[];
}

export class ApiError extends Error {
  readonly status: number;
  readonly errorName: string;
  readonly detail: string;
  readonly violations: { subject: string; reason: string }[];

  constructor(status: number, body: ErrorBody) {
    super(`${body.error} (${status}): ${body.detail}`);
    this.name = "ApiError";
    this.status = status;
    this.errorName = body.error;
    this.detail = body.detail;
    this.violations = body.violations ?? [];
  }
}

const TriggerAck = z.object({ job_id: z.string(), status: z.string() });
export type TriggerAck = z.infer<typeof TriggerAck>;

const VersionAck = z.object({ version: z.number().int() });
const CursorAck = z.object({ cursor: z.number().int(), report: ReportPayload });
export type CursorAck = z.infer<typeof CursorAck>;

const ReportEnvelope = z.object({
  report: ReportPayload,
  narrated_version: z.number().int(),
});
const SessionList = z.object({ sessions: z.array(z.string()) });
const EventList = z.object({ events: z.array(z.record(z.unknown())) });
const ReplayEnvelope = z.object({ checks: z.array(ReplayCheckPayload) });
const UsageCounts = z.record(z.union([z.number(), z.null()]));

export class ApiClient {
  private readonly base: string;
  private readonly fetchImpl: FetchLike;

  constructor(baseUrl: string, fetchImpl?: FetchLike) {
    this.base = baseUrl.replace(/\/+$/, "");
    this.fetchImpl = fetchImpl ?? ((url, init) => fetch(url, init));
  }

  private async request<T>(
    method: string,
    path: string,
    schema: z.ZodType<T>,
    body?: unknown,
  ): Promise<T> {
    const init: RequestInit = { method, headers: {} };
    if (body !== undefined) {
      init.headers = { "content-type": "application/json" };
      init.body = JSON.stringify(body);
    }
    const response = await this.fetchImpl(this.base + path, init);
    const payload = await response.json();
    if (!response.ok) {
      throw new ApiError(response.status, payload as ErrorBody);
    }
    return schema.parse(payload);
  }

  healthz(): Promise<{ status: string }> {
    return this.request("GET", "/healthz", z.object({ status: z.string() }));
  }

  usage(): Promise<Record<string, number | null>> {
    return this.request("GET", "/usage", UsageCounts);
  }

  createSession(workspace: WorkspaceSnapshotPayload): Promise<SessionDescription> {
    return this.request("POST", "/sessions", SessionDescription, { workspace });
  }

  listSessions(): Promise<string[]> {
    return this.request("GET", "/sessions", SessionList).then((r) => r.sessions);
  }

  getSession(sessionId: string): Promise<SessionDescription> {
    return this.request("GET", `/sessions/${sessionId}`, SessionDescription);
  }

  putWorkspace(sessionId: string, workspace: WorkspaceSnapshotPayload): Promise<number> {
    return this.request("PUT", `/sessions/${sessionId}/workspace`, VersionAck, {
      workspace,
    }).then((r) => r.version);
  }

  putSettings(sessionId: string, settings: PromptSettingsPayload): Promise<number> {
    return this.request("PUT", `/sessions/${sessionId}/settings`, VersionAck, {
      settings,
    }).then((r) => r.version);
  }

  refine(sessionId: string): Promise<TriggerAck> {
    return this.request("POST", `/sessions/${sessionId}/refine`, TriggerAck);
  }

  jobStatus(sessionId: string, jobId: string): Promise<JobStatusPayload> {
    return this.request("GET", `/sessions/${sessionId}/jobs/${jobId}`, JobStatusPayload);
  }

  undo(sessionId: string): Promise<CursorAck> {
    return this.request("POST", `/sessions/${sessionId}/undo`, CursorAck);
  }

  redo(sessionId: string): Promise<CursorAck> {
    return this.request("POST", `/sessions/${sessionId}/redo`, CursorAck);
  }

  getReport(sessionId: string): Promise<z.infer<typeof ReportEnvelope>> {
    return this.request("GET", `/sessions/${sessionId}/report`, ReportEnvelope);
  }

  putReport(sessionId: string, components: ReportComponentPayload[]): Promise<number> {
    return this.request("PUT", `/sessions/${sessionId}/report`, VersionAck, {
      components,
    }).then((r) => r.version);
  }

  getEvents(sessionId: string): Promise<Record<string, unknown>[]> {
    return this.request("GET", `/sessions/${sessionId}/events`, EventList).then(
      (r) => r.events,
    );
  }

  auditReplay(sessionId: string): Promise<ReplayCheckPayload[]> {
    return this.request("GET", `/sessions/${sessionId}/audit/replay`, ReplayEnvelope).then(
      (r) => r.checks,
    );
  }
}

export type { CompletionPayload };
