// Fee display math. The node accounts fees in integer gwei; the USD figure
// is gas_used * gas_price * usd_per_gwei rounded half-up to the cent. BigInt
// keeps this exact for any usd_per_gwei the node reports, with no float
// drift between the table the node serves and the receipts we render.

export interface DecimalParts {
  num: bigint;
  scale: number; // value = num / 10^scale
}

export function parseDecimal(text: string): DecimalParts {
  const m = /^(\d+)(?:\.(\d+))?$/.exec(text.trim());
  if (!m) throw new Error(`not a non-negative decimal: ${text}`);
  const frac = m[2] ?? "";
  return { num: BigInt(m[1] + frac), scale: frac.length };
}

/** Whole USD cents for a fee, rounding half-up like the node's reports. */
export function feeUsdCents(gasUsed: number | bigint, gasPrice: number | bigint, usdPerGwei: string): bigint {
  const { num, scale } = parseDecimal(usdPerGwei);
  const numerator = BigInt(gasUsed) * BigInt(gasPrice) * num * 100n;
  const denominator = 10n ** BigInt(scale);
  const q = numerator / denominator;
  const r = numerator % denominator;
  return r * 2n >= denominator ? q + 1n : q;
}

export function formatUsdCents(cents: bigint): string {
  const dollars = cents / 100n;
  const rest = cents % 100n;
  return `$${dollars}.${rest.toString().padStart(2, "0")}`;
}

export function formatGwei(feeGwei: number | bigint): string {
  return `${BigInt(feeGwei).toLocaleString("en-US")} gwei`;
}

/** "123,456 gwei ($0.20)" for a settled receipt. */
export function formatFee(gasUsed: number, gasPrice: number, usdPerGwei: string): string {
  const gwei = BigInt(gasUsed) * BigInt(gasPrice);
  return `${formatGwei(gwei)} (${formatUsdCents(feeUsdCents(gasUsed, gasPrice, usdPerGwei))})`;
}
