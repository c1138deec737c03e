import { describe, expect, it } from 'vitest'

import { makeImage } from '../src/image.js'
import { InceptionSource, StubSource, loadSource } from '../src/sources.js'

function noisyImage(width: number, height: number, salt: number) {
  const pixels = new Uint8Array(width * height * 3)
  for (let i = 0; i < pixels.length; i++) pixels[i] = (i * 31 + salt) % 256
  return makeImage(width, height, pixels)
}

describe('StubSource', () => {
  it('produces 2048 finite values deterministically', async () => {
    const source = new StubSource(5)
    const img = noisyImage(299, 299, 1)
    const a = await source.extract(img)
    const b = await new StubSource(5).extract(img)
    expect(a).toHaveLength(2048)
    expect([...a].every(Number.isFinite)).toBe(true)
    expect(a).toEqual(b)
  })

  it('depends on the seed and the image', async () => {
    const img = noisyImage(299, 299, 1)
    const a = await new StubSource(1).extract(img)
    const b = await new StubSource(2).extract(img)
    const c = await new StubSource(1).extract(noisyImage(299, 299, 2))
    expect(a).not.toEqual(b)
    expect(a).not.toEqual(c)
  })
})

describe('loadSource', () => {
  it('parses stub identifiers', async () => {
    const plain = await loadSource('stub')
    const seeded = await loadSource('stub:7')
    expect(plain).toBeInstanceOf(StubSource)
    expect((seeded as StubSource).seed).toBe(7)
  })

  it('rejects malformed stub seeds', async () => {
    await expect(loadSource('stub:x')).rejects.toThrow(/stub seed/)
  })
})

describe('InceptionSource', () => {
  it('surfaces weight-loading failures', async () => {
    await expect(
      InceptionSource.load('file:///nonexistent/model.json'),
    ).rejects.toThrow(/failed to load model weights/)
  })
})
