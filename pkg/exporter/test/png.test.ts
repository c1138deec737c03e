import { PNG } from 'pngjs'
import { describe, expect, it } from 'vitest'

import { decodePng } from '../src/png.js'

describe('decodePng', () => {
  it('decodes RGBA to RGB, dropping alpha', () => {
    const png = new PNG({ width: 3, height: 2 })
    for (let i = 0; i < 6; i++) {
      png.data[i * 4] = i * 10
      png.data[i * 4 + 1] = i * 10 + 1
      png.data[i * 4 + 2] = i * 10 + 2
      png.data[i * 4 + 3] = 200 // alpha discarded
    }
    const img = decodePng(PNG.sync.write(png))
    expect(img.width).toBe(3)
    expect(img.height).toBe(2)
    expect([...img.pixels]).toEqual([
      0, 1, 2, 10, 11, 12, 20, 21, 22, 30, 31, 32, 40, 41, 42, 50, 51, 52,
    ])
  })

  it('rejects non-PNG data', () => {
    expect(() => decodePng(Buffer.from('not a png'))).toThrow()
  })
})
