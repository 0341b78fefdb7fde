import { describe, expect, it } from "vitest";

import { decodeRle } from "../src/rle.js";

describe("decodeRle", () => {
  it("expands runs row-major", () => {
    const out = decodeRle({ width: 3, height: 2, values: [1, 2, 0], lengths: [2, 3, 1] });
    expect(Array.from(out)).toEqual([1, 1, 2, 2, 2, 0]);
  });

  it("handles a single full-raster run", () => {
    const out = decodeRle({ width: 4, height: 4, values: [2], lengths: [16] });
    expect(out.length).toBe(16);
    expect(out.every((v) => v === 2)).toBe(true);
  });

  it("rejects malformed payloads", () => {
    expect(() => decodeRle({ width: 2, height: 2, values: [1], lengths: [3] })).toThrow(/cover/);
    expect(() => decodeRle({ width: 2, height: 2, values: [1], lengths: [5] })).toThrow(/overflow/);
    expect(() => decodeRle({ width: 2, height: 2, values: [1, 0], lengths: [4] })).toThrow(
      /values/,
    );
    expect(() => decodeRle({ width: 2, height: 1, values: [1, 0], lengths: [2, 0] })).toThrow(
      /length/,
    );
  });
});
