import { RgbImage, makeImage } from './image.js'

/**
 * Bilinear resize with half-pixel centers, matching the training
 * pipeline sample for sample: src = (dst + 0.5) * (in / out) - 0.5
 * clamped to [0, in - 1], 4-neighbour blend in float64, rounded
 * half-away-from-zero to 8 bits.
 */
export function resizeBilinear(src: RgbImage, outW: number, outH: number): RgbImage {
  if (outW < 1 || outH < 1) {
    throw new Error(`target dimensions must be positive, got ${outW}x${outH}`)
  }
  const { width: inW, height: inH, pixels } = src
  const scaleX = inW / outW
  const scaleY = inH / outH
  const out = new Uint8Array(outW * outH * 3)
  for (let oy = 0; oy < outH; oy++) {
    let y = (oy + 0.5) * scaleY - 0.5
    if (y < 0) y = 0
    if (y > inH - 1) y = inH - 1
    const y0 = Math.floor(y)
    const y1 = Math.min(y0 + 1, inH - 1)
    const fy = y - y0
    for (let ox = 0; ox < outW; ox++) {
      let x = (ox + 0.5) * scaleX - 0.5
      if (x < 0) x = 0
      if (x > inW - 1) x = inW - 1
      const x0 = Math.floor(x)
      const x1 = Math.min(x0 + 1, inW - 1)
      const fx = x - x0
      const base00 = (y0 * inW + x0) * 3
      const base01 = (y0 * inW + x1) * 3
      const base10 = (y1 * inW + x0) * 3
      const base11 = (y1 * inW + x1) * 3
      const dst = (oy * outW + ox) * 3
      for (let c = 0; c < 3; c++) {
        const top = pixels[base00 + c] * (1 - fx) + pixels[base01 + c] * fx
        const bot = pixels[base10 + c] * (1 - fx) + pixels[base11 + c] * fx
        out[dst + c] = Math.floor(top * (1 - fy) + bot * fy + 0.5)
      }
    }
  }
  return makeImage(outW, outH, out)
}
