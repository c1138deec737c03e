import { describe, expect, it } from 'vitest'

import { formatFeatureValue } from '../src/format.js'

describe('formatFeatureValue', () => {
  it('formats zero and negative zero distinctly', () => {
    expect(formatFeatureValue(0)).toBe('0.00000000e+00')
    expect(formatFeatureValue(-0)).toBe('-0.00000000e+00')
  })

  it('pads the exponent to two digits', () => {
    expect(formatFeatureValue(1)).toBe('1.00000000e+00')
    expect(formatFeatureValue(-2.5)).toBe('-2.50000000e+00')
    expect(formatFeatureValue(0.1)).toBe('1.00000001e-01') // float32(0.1)
  })

  it('handles float32 extremes and subnormals', () => {
    expect(formatFeatureValue(3.4028235e38)).toBe('3.40282347e+38')
    expect(formatFeatureValue(1.4e-45)).toBe('1.40129846e-45')
    expect(formatFeatureValue(-1.1754944e-38)).toBe('-1.17549435e-38')
  })

  it('rejects values that overflow float32', () => {
    expect(() => formatFeatureValue(1e39)).toThrow(/finite/)
    expect(() => formatFeatureValue(Number.NaN)).toThrow(/finite/)
  })

  it('round-trips random float32 values bit-exactly', () => {
    let state = 0x12345678
    const next = () => {
      // xorshift32, plenty for sampling bit patterns
      state ^= state << 13
      state ^= state >>> 17
      state ^= state << 5
      return state >>> 0
    }
    const buf = new ArrayBuffer(4)
    const u32 = new Uint32Array(buf)
    const f32 = new Float32Array(buf)
    let checked = 0
    while (checked < 20_000) {
      u32[0] = next()
      const v = f32[0]
      if (!Number.isFinite(v)) continue
      const back = Math.fround(Number(formatFeatureValue(v)))
      expect(Object.is(back, v)).toBe(true)
      checked++
    }
  })
})
