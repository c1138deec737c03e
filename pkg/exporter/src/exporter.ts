import { readFileSync } from 'fs'
import { dirname, extname, isAbsolute, join } from 'path'

import { FEATURE_DIM, writeCacheFile } from './cache.js'
import { RgbImage } from './image.js'
import { parseManifest } from './manifest.js'
import { decodePng } from './png.js'
import { decodeP6 } from './ppm.js'
import { Level, patchId, splitGrid } from './quadtree.js'
import { resizeBilinear } from './resize.js'
import { FeatureSource } from './sources.js'

export const INPUT_SIZE = 299

export interface ExportJob {
  manifestPath: string
  level: Level
  outPath: string
  source: FeatureSource
  /** restrict to these magnifications; all when absent */
  magnifications?: number[]
}

export function loadImageFile(path: string): RgbImage {
  const data = readFileSync(path)
  const ext = extname(path).toLowerCase()
  if (ext === '.ppm') return decodeP6(data)
  if (ext === '.png') return decodePng(data)
  throw new Error(`unsupported image format ${ext || '(none)'}: ${path}`)
}

/**
 * Extract one feature vector per quadtree patch of every manifest image
 * and write them as a cache file the training pipeline reads verbatim.
 * Patch geometry (floor cut points) and the 299x299 resize replicate
 * the pipeline exactly, so the id space and pixels line up.
 */
export async function exportFeatures(job: ExportJob): Promise<{ count: number }> {
  const manifestText = readFileSync(job.manifestPath, 'ascii')
  let records = parseManifest(manifestText)
  if (job.magnifications) {
    const wanted = new Set(job.magnifications)
    records = records.filter(r => wanted.has(r.magnification))
  }
  const baseDir = dirname(job.manifestPath)

  const vectors = new Map<string, Float32Array>()
  for (const record of records) {
    const imagePath = isAbsolute(record.path) ? record.path : join(baseDir, record.path)
    const image = loadImageFile(imagePath)
    for (const patch of splitGrid(image, job.level)) {
      const id = patchId(record.imageId, job.level, patch.row, patch.col)
      const resized = resizeBilinear(patch.image, INPUT_SIZE, INPUT_SIZE)
      const values = await job.source.extract(resized)
      if (values.length !== FEATURE_DIM) {
        throw new Error(`source produced ${values.length} dims for ${id}`)
      }
      for (const v of values) {
        if (!Number.isFinite(v)) {
          throw new Error(`source produced a non-finite value for ${id}`)
        }
      }
      vectors.set(id, values)
    }
  }

  writeCacheFile(job.outPath, vectors, FEATURE_DIM, [
    `source: ${job.source.name}`,
    `preprocessing: ${job.source.preprocessing}`,
  ])
  return { count: vectors.size }
}
