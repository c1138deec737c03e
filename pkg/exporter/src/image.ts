/** Decoded RGB image: row-major interleaved samples, 3 channels. */
export interface RgbImage {
  width: number
  height: number
  /** length = width * height * 3 */
  pixels: Uint8Array
}

export function makeImage(width: number, height: number, pixels: Uint8Array): RgbImage {
  if (width < 1 || height < 1) {
    throw new Error(`invalid image dimensions ${width}x${height}`)
  }
  if (pixels.length !== width * height * 3) {
    throw new Error(
      `pixel buffer length ${pixels.length} does not match ${width}x${height}x3`,
    )
  }
  return { width, height, pixels }
}

/** Copy the rectangle [x0, x1) x [y0, y1) into a new image. */
export function cropImage(src: RgbImage, x0: number, y0: number, x1: number, y1: number): RgbImage {
  const w = x1 - x0
  const h = y1 - y0
  const out = new Uint8Array(w * h * 3)
  for (let y = 0; y < h; y++) {
    const from = ((y0 + y) * src.width + x0) * 3
    out.set(src.pixels.subarray(from, from + w * 3), y * w * 3)
  }
  return makeImage(w, h, out)
}
