/** Row-major run-length trimap raster as served by the session API. */

export interface RleTrimap {
  width: number;
  height: number;
  values: number[];
  lengths: number[];
}

/** Expand runs into one label byte per pixel (row-major). */
export function decodeRle(rle: RleTrimap): Uint8Array {
  if (rle.values.length !== rle.lengths.length) {
    throw new Error(`malformed RLE: ${rle.values.length} values vs ${rle.lengths.length} lengths`);
  }
  const size = rle.width * rle.height;
  const out = new Uint8Array(size);
  let pos = 0;
  for (let i = 0; i < rle.values.length; i++) {
    const value = rle.values[i]!;
    const length = rle.lengths[i]!;
    if (length <= 0) throw new Error(`malformed RLE: run ${i} has length ${length}`);
    if (pos + length > size) throw new Error("malformed RLE: runs overflow the raster");
    out.fill(value, pos, pos + length);
    pos += length;
  }
  if (pos !== size) throw new Error(`malformed RLE: runs cover ${pos} of ${size} pixels`);
  return out;
}
