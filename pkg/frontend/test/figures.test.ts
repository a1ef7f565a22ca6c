import { readFileSync } from "fs";
import { join } from "path";
import { describe, expect, it } from "vitest";

import { FigureKind, render } from "../src/figures.js";

const FIX = join(__dirname, "..", "fixtures");

const CASES: [FigureKind, string][] = [
  ["uniformity", "uniformity.csv"],
  ["tau-law", "tau_sweep.csv"],
  ["refinement", "refinement.csv"],
  ["smoothing", "smoothing_history.csv"],
  ["alpha-limit", "alpha_limit.csv"],
];

describe("figure rendering from CLI artifacts", () => {
  for (const [kind, file] of CASES) {
    it(`renders ${kind} from ${file}`, () => {
      const text = readFileSync(join(FIX, file), "utf-8");
      const { svg, fit } = render(kind, text);
      expect(svg.startsWith("<svg")).toBe(true);
      expect(svg.trimEnd().endsWith("</svg>")).toBe(true);
      expect(svg).toContain("<line");
      if (kind === "uniformity") {
        expect(svg).toContain("<rect");
      } else {
        expect(svg).toMatch(/<(polyline|circle)/);
      }
      if (kind === "tau-law" || kind === "refinement") {
        expect(fit).toBeDefined();
        expect(Number.isFinite(fit!.slope)).toBe(true);
      } else {
        expect(fit).toBeUndefined();
      }
    });
  }

  it("rerendering is byte-identical", () => {
    const text = readFileSync(join(FIX, "alpha_limit.csv"), "utf-8");
    expect(render("alpha-limit", text).svg).toBe(render("alpha-limit", text).svg);
  });

  it("schema mismatch names the missing column", () => {
    expect(() => render("tau-law", "a,b\n1,2\n")).toThrow(/missing column 'tau'/);
  });

  it("rejects unknown kinds", () => {
    expect(() => render("pie" as FigureKind, "a\n1\n")).toThrow(/unknown figure kind/);
  });
});
