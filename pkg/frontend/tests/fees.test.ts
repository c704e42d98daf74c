// @vitest-environment node

import { describe, expect, it } from "vitest";

import { feeUsdCents, formatFee, formatUsdCents, parseDecimal } from "../src/fees";

describe("parseDecimal", () => {
  it("splits integer and fraction exactly", () => {
    expect(parseDecimal("0.00000164534")).toEqual({ num: 164534n, scale: 11 });
    expect(parseDecimal("3")).toEqual({ num: 3n, scale: 0 });
    expect(parseDecimal("1.50")).toEqual({ num: 150n, scale: 2 });
  });

  it("rejects exponents, signs and junk", () => {
    for (const bad of ["1e-5", "-1", "+2", "0x10", "", "1..2"]) {
      expect(() => parseDecimal(bad)).toThrow();
    }
  });
});

describe("feeUsdCents", () => {
  it("rounds half up at the cent boundary", () => {
    // 1 gas * 1 gwei * 0.005 = exactly half a cent
    expect(feeUsdCents(1, 1, "0.005")).toBe(1n);
    expect(feeUsdCents(1, 1, "0.0049999")).toBe(0n);
    expect(feeUsdCents(1, 1, "0.0050001")).toBe(1n);
  });

  it("is exact where floats would drift", () => {
    // 10^15 gas at a tiny rate: float math loses integer cents here
    expect(feeUsdCents(1_000_000_000_000_000, 1, "0.00000164534")).toBe(164534000000n);
  });

  it("formats cents as dollars", () => {
    expect(formatUsdCents(540n)).toBe("$5.40");
    expect(formatUsdCents(88n)).toBe("$0.88");
    expect(formatUsdCents(0n)).toBe("$0.00");
    expect(formatUsdCents(12345n)).toBe("$123.45");
  });

  it("renders a combined gwei and usd fee line", () => {
    expect(formatFee(534_845, 1, "0.00000164534")).toBe("534,845 gwei ($0.88)");
  });
});
