import { afterEach, describe, expect, it, vi } from "vitest";

import { ApiError, SessionApi } from "../src/api.js";

const fakeState = {
  id: "abc",
  width: 4,
  height: 3,
  working_size: 448,
  predictor: "geodesic",
  clicks: [],
  trimap_png: "",
  alpha_png: "",
  metrics: null,
  has_gt: false,
};

function mockFetch(status: number, body: unknown) {
  const fn = vi.fn(async () => new Response(JSON.stringify(body), { status }));
  vi.stubGlobal("fetch", fn);
  return fn;
}

afterEach(() => vi.unstubAllGlobals());

describe("SessionApi", () => {
  it("posts clicks as JSON and parses the state", async () => {
    const fetchMock = mockFetch(200, fakeState);
    const api = new SessionApi("http://svc");
    const state = await api.addClick("abc", 3, 4, "U");
    expect(state.id).toBe("abc");
    const [url, init] = fetchMock.mock.calls[0]!;
    expect(url).toBe("http://svc/sessions/abc/clicks");
    expect(init!.method).toBe("POST");
    expect(JSON.parse(init!.body as string)).toEqual({ x: 3, y: 4, label: "U" });
  });

  it("uploads multipart form data on create", async () => {
    const fetchMock = mockFetch(200, fakeState);
    const api = new SessionApi("");
    await api.createSession(new Blob([new Uint8Array([1, 2])]), undefined, new Blob([]));
    const [url, init] = fetchMock.mock.calls[0]!;
    expect(url).toBe("/sessions");
    const form = init!.body as FormData;
    expect(form.has("image")).toBe(true);
    expect(form.has("gt_trimap")).toBe(true);
    expect(form.has("gt_alpha")).toBe(false);
  });

  it("requests state with the rle flag", async () => {
    const fetchMock = mockFetch(200, fakeState);
    await new SessionApi("").getState("abc");
    expect(fetchMock.mock.calls[0]![0]).toBe("/sessions/abc?rle=true");
  });

  it("raises ApiError with the server's code", async () => {
    mockFetch(400, { code: "out_of_bounds", message: "click at (9, 9) is outside" });
    await expect(new SessionApi("").addClick("abc", 9, 9, "F")).rejects.toMatchObject({
      status: 400,
      code: "out_of_bounds",
    });
    mockFetch(404, { code: "not_found", message: "no session" });
    await expect(new SessionApi("").undo("zzz")).rejects.toBeInstanceOf(ApiError);
  });
});
