import { RgbImage, makeImage } from './image.js'

const WHITESPACE = new Set([0x20, 0x09, 0x0a, 0x0d, 0x0b, 0x0c])

function skipHeaderSpace(data: Buffer, pos: number): number {
  while (pos < data.length) {
    if (data[pos] === 0x23 /* # */) {
      while (pos < data.length && data[pos] !== 0x0a) pos++
    } else if (WHITESPACE.has(data[pos])) {
      pos++
    } else {
      break
    }
  }
  return pos
}

function readHeaderInt(data: Buffer, pos: number, what: string): [number, number] {
  pos = skipHeaderSpace(data, pos)
  const start = pos
  while (pos < data.length && data[pos] >= 0x30 && data[pos] <= 0x39) pos++
  if (pos === start) {
    throw new Error(`ppm: expected integer for ${what} at byte ${start}`)
  }
  return [parseInt(data.subarray(start, pos).toString('ascii'), 10), pos]
}

/** Decode a binary PPM (magic P6, maxval 255); `#` header comments allowed. */
export function decodeP6(data: Buffer): RgbImage {
  if (data.length < 2 || data[0] !== 0x50 || data[1] !== 0x36) {
    throw new Error('ppm: not a binary PPM (magic is not P6)')
  }
  let pos = 2
  let width: number, height: number, maxval: number
  ;[width, pos] = readHeaderInt(data, pos, 'width')
  ;[height, pos] = readHeaderInt(data, pos, 'height')
  ;[maxval, pos] = readHeaderInt(data, pos, 'maxval')
  if (maxval !== 255) {
    throw new Error(`ppm: unsupported maxval ${maxval}, expected 255`)
  }
  if (pos >= data.length || !WHITESPACE.has(data[pos])) {
    throw new Error(`ppm: expected single whitespace after maxval at byte ${pos}`)
  }
  pos++
  const expected = width * height * 3
  if (data.length - pos < expected) {
    throw new Error(
      `ppm: truncated payload, need ${expected} bytes, have ${data.length - pos}`,
    )
  }
  return makeImage(width, height, new Uint8Array(data.subarray(pos, pos + expected)))
}

/** Encode as binary PPM with the canonical header `P6\n<w> <h>\n255\n`. */
export function encodeP6(image: RgbImage): Buffer {
  const header = Buffer.from(`P6\n${image.width} ${image.height}\n255\n`, 'ascii')
  return Buffer.concat([header, Buffer.from(image.pixels)])
}
