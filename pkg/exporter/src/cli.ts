#!/usr/bin/env node
/**
 * Export CNN features into the training pipeline's cache format.
 *
 *   patchfuse-exporter --manifest corpus/manifest.csv --level 2 \
 *       --model https://host/inceptionv3/model.json --out l2.cache
 *
 * --model is either a tfjs graph-model URL (pretrained Inception-v3,
 * output 2048 pooled features) or `stub[:seed]`, a deterministic
 * offline source for fixtures. --device is accepted for interface
 * stability; inference always runs on the tfjs CPU backend here.
 */
import { parseArgs } from 'node:util'
import process from 'node:process'

import { exportFeatures } from './exporter.js'
import { Level } from './quadtree.js'
import { loadSource } from './sources.js'

function usage(message: string): never {
  console.error(`error: ${message}`)
  console.error(
    'usage: patchfuse-exporter --manifest FILE --level 1|2|3 --out FILE ' +
      '--model URL|stub[:seed] [--magnification 40,100] [--device cpu]',
  )
  process.exit(2)
}

export async function main(argv: string[]): Promise<number> {
  let values
  try {
    values = parseArgs({
      args: argv,
      options: {
        manifest: { type: 'string' },
        level: { type: 'string' },
        out: { type: 'string' },
        model: { type: 'string' },
        magnification: { type: 'string' },
        device: { type: 'string' },
      },
      strict: true,
    }).values
  } catch (err) {
    usage((err as Error).message)
  }
  if (!values.manifest || !values.level || !values.out || !values.model) {
    usage('--manifest, --level, --out and --model are required')
  }
  const level = Number(values.level)
  if (![1, 2, 3].includes(level)) {
    usage(`--level must be 1, 2 or 3, got ${values.level}`)
  }
  let magnifications: number[] | undefined
  if (values.magnification) {
    magnifications = values.magnification.split(',').map(Number)
    if (magnifications.some(m => ![40, 100, 200, 400].includes(m))) {
      usage(`bad magnification list ${values.magnification}`)
    }
  }
  if (values.device && values.device !== 'cpu') {
    console.error(`note: --device ${values.device} unsupported, using cpu`)
  }

  const source = await loadSource(values.model)
  const { count } = await exportFeatures({
    manifestPath: values.manifest,
    level: level as Level,
    outPath: values.out,
    source,
    magnifications,
  })
  console.error(`wrote ${count} feature vectors to ${values.out}`)
  return 0
}

const invokedDirectly =
  process.argv[1] && import.meta.url === new URL(`file://${process.argv[1]}`).href
if (invokedDirectly) {
  main(process.argv.slice(2)).then(
    code => process.exit(code),
    err => {
      console.error(`error: ${(err as Error).message}`)
      process.exit(1)
    },
  )
}
