export interface ManifestRecord {
  imageId: string
  path: string
  label: 0 | 1
  magnification: number
  patientId: string
}

const HEADER = 'image_id,path,label,magnification,patient_id'
const MAGNIFICATIONS = new Set([40, 100, 200, 400])

function parseLabel(token: string): 0 | 1 | null {
  const t = token.trim().toLowerCase()
  if (t === 'benign' || t === '0') return 0
  if (t === 'malignant' || t === '1') return 1
  return null
}

/** Parse the shared manifest CSV (same schema the training pipeline reads). */
export function parseManifest(text: string): ManifestRecord[] {
  const lines = text.split('\n')
  if (lines.length === 0 || lines[0].trim() !== HEADER) {
    throw new Error(`manifest line 1: bad header, expected ${HEADER}`)
  }
  const records: ManifestRecord[] = []
  const seen = new Set<string>()
  for (let i = 1; i < lines.length; i++) {
    const line = lines[i].trim()
    if (!line) continue
    const cols = line.split(',')
    if (cols.length !== 5) {
      throw new Error(`manifest line ${i + 1}: expected 5 columns, found ${cols.length}`)
    }
    const [imageId, path, labelTok, magTok, patientId] = cols.map(c => c.trim())
    const label = parseLabel(labelTok)
    if (label === null) {
      throw new Error(`manifest line ${i + 1}: bad label ${labelTok}`)
    }
    const magnification = Number(magTok)
    if (!MAGNIFICATIONS.has(magnification)) {
      throw new Error(`manifest line ${i + 1}: bad magnification ${magTok}`)
    }
    if (!imageId || !path || !patientId) {
      throw new Error(`manifest line ${i + 1}: empty field`)
    }
    if (seen.has(imageId)) {
      throw new Error(`manifest line ${i + 1}: duplicate image_id ${imageId}`)
    }
    seen.add(imageId)
    records.push({ imageId, path, label, magnification, patientId })
  }
  return records
}
