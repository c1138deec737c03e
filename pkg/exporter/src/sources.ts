import { RgbImage } from './image.js'
import { FEATURE_DIM } from './cache.js'
import { gridCuts } from './quadtree.js'

/** One pluggable weights/extraction backend; input is the 299x299 patch. */
export interface FeatureSource {
  readonly name: string
  /** recorded as a header comment in the cache file */
  readonly preprocessing: string
  extract(image: RgbImage): Promise<Float32Array>
}

const SM_GAMMA = 0x9e3779b97f4a7c15n
const SM_MIX1 = 0xbf58476d1ce4e5b9n
const SM_MIX2 = 0x94d049bb133111ebn
const MASK64 = (1n << 64n) - 1n

function splitmix64(seed: bigint, count: number): BigUint64Array {
  const out = new BigUint64Array(count)
  let state = seed & MASK64
  for (let i = 0; i < count; i++) {
    state = (state + SM_GAMMA) & MASK64
    let z = state
    z = ((z ^ (z >> 30n)) * SM_MIX1) & MASK64
    z = ((z ^ (z >> 27n)) * SM_MIX2) & MASK64
    out[i] = z ^ (z >> 31n)
  }
  return out
}

const STUB_GRID = 8
const STUB_DESCRIPTOR = STUB_GRID * STUB_GRID * 3

/**
 * Deterministic offline source for fixtures and interop tests: per-channel
 * means over an 8x8 block grid, expanded to 2048 dims by a fixed random
 * projection drawn from a SplitMix64 stream. No model weights needed.
 */
export class StubSource implements FeatureSource {
  readonly name = 'stub'
  readonly preprocessing: string
  private readonly projection: Float64Array

  constructor(readonly seed: number) {
    this.preprocessing = `stub source: 8x8 rgb block means, splitmix64(${seed}) projection`
    const raw = splitmix64(BigInt(seed), FEATURE_DIM * STUB_DESCRIPTOR)
    this.projection = new Float64Array(raw.length)
    for (let i = 0; i < raw.length; i++) {
      this.projection[i] = 2 * (Number(raw[i] >> 11n) * 2 ** -53) - 1
    }
  }

  async extract(image: RgbImage): Promise<Float32Array> {
    const desc = new Float64Array(STUB_DESCRIPTOR)
    const cutsY = gridCuts(image.height, STUB_GRID)
    const cutsX = gridCuts(image.width, STUB_GRID)
    for (let by = 0; by < STUB_GRID; by++) {
      for (let bx = 0; bx < STUB_GRID; bx++) {
        const sums = [0, 0, 0]
        let n = 0
        for (let y = cutsY[by]; y < cutsY[by + 1]; y++) {
          for (let x = cutsX[bx]; x < cutsX[bx + 1]; x++) {
            const base = (y * image.width + x) * 3
            sums[0] += image.pixels[base]
            sums[1] += image.pixels[base + 1]
            sums[2] += image.pixels[base + 2]
            n++
          }
        }
        const at = (by * STUB_GRID + bx) * 3
        for (let c = 0; c < 3; c++) {
          desc[at + c] = n > 0 ? sums[c] / (255 * n) : 0
        }
      }
    }
    const out = new Float32Array(FEATURE_DIM)
    for (let row = 0; row < FEATURE_DIM; row++) {
      let acc = 0
      const base = row * STUB_DESCRIPTOR
      for (let k = 0; k < STUB_DESCRIPTOR; k++) {
        acc += this.projection[base + k] * desc[k]
      }
      out[row] = Math.fround(acc)
    }
    return out
  }
}

/**
 * Pretrained Inception-v3 via a tfjs graph model. Pass the model.json
 * location (http(s) URL or a URL tfjs can fetch); weights must resolve
 * from there. The 2048-dim vector is the final pooled activation: if
 * the model's head was cut after the last pooling layer the output is
 * already [1, 2048], otherwise a spatial [1, h, w, 2048] output is
 * average-pooled.
 */
export class InceptionSource implements FeatureSource {
  readonly name = 'inception-v3'
  readonly preprocessing = 'inception: rgb / 127.5 - 1, 299x299'

  private constructor(
    private readonly tf: typeof import('@tensorflow/tfjs'),
    private readonly model: import('@tensorflow/tfjs').GraphModel,
  ) {}

  static async load(modelUrl: string): Promise<InceptionSource> {
    const tf = await import('@tensorflow/tfjs')
    let model: import('@tensorflow/tfjs').GraphModel
    try {
      model = await tf.loadGraphModel(modelUrl)
    } catch (err) {
      throw new Error(
        `failed to load model weights from ${modelUrl}: ${(err as Error).message}`,
      )
    }
    return new InceptionSource(tf, model)
  }

  async extract(image: RgbImage): Promise<Float32Array> {
    const { tf, model } = this
    const result = tf.tidy(() => {
      const input = tf
        .tensor4d(Float32Array.from(image.pixels), [1, image.height, image.width, 3])
        .div(127.5)
        .sub(1)
      let out = model.predict(input) as import('@tensorflow/tfjs').Tensor
      if (out.rank === 4) {
        out = tf.mean(out, [1, 2])
      }
      return out.reshape([-1])
    })
    try {
      const values = await result.data()
      if (values.length !== FEATURE_DIM) {
        throw new Error(
          `model produced ${values.length} features, expected ${FEATURE_DIM}`,
        )
      }
      return Float32Array.from(values)
    } finally {
      result.dispose()
    }
  }
}

/**
 * Resolve a source identifier: `stub` / `stub:<seed>` for the offline
 * source, anything else is treated as a tfjs graph-model URL.
 */
export async function loadSource(identifier: string): Promise<FeatureSource> {
  if (identifier === 'stub' || identifier.startsWith('stub:')) {
    const seed = identifier === 'stub' ? 0 : Number(identifier.slice(5))
    if (!Number.isInteger(seed)) {
      throw new Error(`bad stub seed in ${identifier}`)
    }
    return new StubSource(seed)
  }
  return InceptionSource.load(identifier)
}
