/**
 * Feature values are written as `%.8e` (9 significant digits), which is
 * the minimal decimal length that round-trips every finite 32-bit
 * float. Values are truncated to float32 before formatting so the file
 * carries exactly the precision it claims. JavaScript's toExponential
 * produces correctly rounded digits but a bare exponent ("e-4"); the
 * exponent is re-padded to the two-digit form and the sign of negative
 * zero is preserved.
 */
export function formatFeatureValue(value: number): string {
  const f32 = Math.fround(value)
  if (!Number.isFinite(f32)) {
    throw new Error(`feature value is not finite: ${value}`)
  }
  const body = Math.abs(f32).toExponential(8)
  const m = body.match(/^(\d\.\d{8}e)([+-])(\d+)$/)
  if (!m) {
    throw new Error(`unexpected exponential form ${body}`)
  }
  const exp = m[3].length < 2 ? '0' + m[3] : m[3]
  const negative = f32 < 0 || Object.is(f32, -0)
  return (negative ? '-' : '') + m[1] + m[2] + exp
}
