import { renameSync, writeFileSync } from 'fs'

import { formatFeatureValue } from './format.js'

export const FEATURE_DIM = 2048

/**
 * Write feature records in the training pipeline's cache format:
 * header `# patchfuse-features v1 dim=<n>`, optional `#` comment lines,
 * then one `<id>\t<v0> <v1> ...` line per record sorted by id. ASCII,
 * `\n` newlines. The file is written to a temp path and renamed into
 * place so a crash never leaves a half-written cache.
 */
export function writeCacheFile(
  outPath: string,
  records: Map<string, Float32Array>,
  dim: number = FEATURE_DIM,
  comments: string[] = [],
): void {
  const lines: string[] = [`# patchfuse-features v1 dim=${dim}`]
  for (const comment of comments) {
    lines.push(`# ${comment}`)
  }
  const ids = [...records.keys()].sort()
  for (const id of ids) {
    const values = records.get(id)!
    if (values.length !== dim) {
      throw new Error(`record ${id} has ${values.length} values, expected ${dim}`)
    }
    const tokens = new Array<string>(values.length)
    for (let i = 0; i < values.length; i++) {
      tokens[i] = formatFeatureValue(values[i])
    }
    lines.push(`${id}\t${tokens.join(' ')}`)
  }
  const tmpPath = `${outPath}.tmp-${process.pid}`
  writeFileSync(tmpPath, lines.join('\n') + '\n', { encoding: 'ascii' })
  renameSync(tmpPath, outPath)
}
