import { PNG } from 'pngjs'

import { RgbImage, makeImage } from './image.js'

/** Decode a PNG (the format public pathology corpora ship in), dropping alpha. */
export function decodePng(data: Buffer): RgbImage {
  const png = PNG.sync.read(data)
  const out = new Uint8Array(png.width * png.height * 3)
  for (let i = 0, j = 0; i < png.data.length; i += 4, j += 3) {
    out[j] = png.data[i]
    out[j + 1] = png.data[i + 1]
    out[j + 2] = png.data[i + 2]
  }
  return makeImage(png.width, png.height, out)
}
