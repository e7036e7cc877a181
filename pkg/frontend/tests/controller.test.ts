import { describe, expect, it } from "vitest";

import { ApiClient, type CandidateRow, type SessionSummary } from "../src/api.js";
import { Wizard } from "../src/controller.js";

/** Minimal in-memory stand-in for the session service, just enough to
 * exercise the mutate/refetch cycle.
 */
function fakeServer() {
  const candidates: CandidateRow[] = [
    {
      id: "4edd48111a66",
      app: "directleak1",
      classname: "de.ecspride.MainActivity",
      method: "void onCreate(android.os.Bundle)",
      index: 1,
      kind: "source",
      statement: "deviceId = telephonyManager.getDeviceId()",
      selected: true,
      group: null,
    },
    {
      id: "693f3ad1a4ba",
      app: "directleak1",
      classname: "de.ecspride.MainActivity",
      method: "void onCreate(android.os.Bundle)",
      index: 3,
      kind: "sink",
      statement: 'sms.sendTextMessage("+49 1234", null, deviceId, null, null)',
      selected: true,
      group: null,
    },
  ];
  const session = (): SessionSummary => ({
    apps: 1,
    susi_loaded: true,
    candidates: candidates.length,
    selected: candidates.filter((c) => c.selected).length,
    groups: 0,
    cases: 0,
    has_report: false,
  });
  const json = (doc: unknown, status = 200) =>
    new Response(JSON.stringify(doc) + "\n", { status });

  const fetchFn = async (url: string, init?: RequestInit): Promise<Response> => {
    const path = url.replace(/^http:\/\/fake/, "");
    if (path === "/session") return json(session());
    if (path === "/apps")
      return json([{ id: "directleak1", file: "DirectLeak1.apk", classes: 1, statements: 4, hashes: [] }]);
    if (path === "/candidates") return json(candidates);
    if (path === "/cases") return json([]);
    const select = path.match(/^\/candidates\/([^/]+)\/select$/);
    if (select && init?.method === "POST") {
      const row = candidates.find((c) => c.id === select[1]);
      if (!row)
        return json({ error: { code: "session", message: `no such candidate: '${select[1]}'` } }, 404);
      row.selected = Boolean(JSON.parse(String(init.body)).selected);
      return json({ id: row.id, selected: row.selected });
    }
    return json({ error: { code: "not_found", message: `no route for ${path}` } }, 404);
  };
  return { fetchFn, candidates };
}

describe("wizard controller", () => {
  it("mirrors the server after refresh", async () => {
    const { fetchFn } = fakeServer();
    const wizard = new Wizard(new ApiClient("http://fake", fetchFn));
    await wizard.refresh();
    expect(wizard.mirror.session?.apps).toBe(1);
    expect(wizard.mirror.candidates).toHaveLength(2);
    expect(wizard.mirror.report).toBeNull();
    expect(wizard.view.dirty).toBe(false);
  });

  it("refetches after a successful toggle and ends clean", async () => {
    const { fetchFn } = fakeServer();
    const wizard = new Wizard(new ApiClient("http://fake", fetchFn));
    await wizard.refresh();
    const result = await wizard.toggleCandidate("4edd48111a66", false);
    expect(result).toEqual({ id: "4edd48111a66", selected: false });
    expect(wizard.candidateById("4edd48111a66")?.selected).toBe(false);
    expect(wizard.mirror.session?.selected).toBe(1);
    expect(wizard.view.dirty).toBe(false);
    expect(wizard.view.error).toBeNull();
  });

  it("keeps local state and surfaces the message when a write fails", async () => {
    const { fetchFn } = fakeServer();
    const wizard = new Wizard(new ApiClient("http://fake", fetchFn));
    await wizard.refresh();
    const before = wizard.mirror.candidates.map((c) => c.selected);
    const result = await wizard.toggleCandidate("zzzzzzzzzzzz", false);
    expect(result).toBeNull();
    expect(wizard.view.dirty).toBe(true);
    expect(wizard.view.error).toContain("no such candidate");
    // the mirror was not clobbered by a refetch
    expect(wizard.mirror.candidates.map((c) => c.selected)).toEqual(before);
  });

  it("steps through the wizard without skipping", () => {
    const { fetchFn } = fakeServer();
    const wizard = new Wizard(new ApiClient("http://fake", fetchFn));
    expect(wizard.view.step).toBe("Cases");
    wizard.next();
    expect(wizard.view.step).toBe("SourcesSinks");
    wizard.back();
    wizard.back();
    expect(wizard.view.step).toBe("Cases");
  });
});
