import { RgbImage, cropImage } from './image.js'

export type Level = 1 | 2 | 3

/**
 * Tiling scheme shared with the training pipeline: level L cuts the
 * image into a 2^(L-1) x 2^(L-1) grid with axis cut points
 * floor(dim * i / grid), and each patch is cached under the id
 * `<parentId>#L<level>R<row>C<col>`.
 */
export function gridSize(level: Level): number {
  return 2 ** (level - 1)
}

export function gridCuts(dim: number, parts: number): number[] {
  const cuts: number[] = []
  for (let i = 0; i <= parts; i++) cuts.push(Math.floor((dim * i) / parts))
  return cuts
}

export function patchId(parentId: string, level: Level, row: number, col: number): string {
  return `${parentId}#L${level}R${row}C${col}`
}

export interface GridPatch {
  row: number
  col: number
  image: RgbImage
}

export function splitGrid(image: RgbImage, level: Level): GridPatch[] {
  const g = gridSize(level)
  if (image.width < g || image.height < g) {
    throw new Error(
      `image ${image.width}x${image.height} too small for level ${level}`,
    )
  }
  const cutsY = gridCuts(image.height, g)
  const cutsX = gridCuts(image.width, g)
  const patches: GridPatch[] = []
  for (let r = 0; r < g; r++) {
    for (let c = 0; c < g; c++) {
      patches.push({
        row: r,
        col: c,
        image: cropImage(image, cutsX[c], cutsY[r], cutsX[c + 1], cutsY[r + 1]),
      })
    }
  }
  return patches
}
