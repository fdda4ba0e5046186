import { describe, expect, it } from "vitest";

import { curvePath, parseCurveSet, renderCurvePanel, samplePolyline } from "../src/curves.js";
import { CURVE_KEYS, CurveSetDoc } from "../src/types.js";

function makeDoc(fill: (key: string) => number[]): CurveSetDoc {
  const curves = {} as CurveSetDoc["curves"];
  for (const key of CURVE_KEYS) curves[key] = fill(key);
  return { version: 1, curves };
}

describe("parseCurveSet", () => {
  it("round-trips a valid document", () => {
    const doc = makeDoc(() => [0, 0.5, 1]);
    expect(parseCurveSet(JSON.stringify(doc))).toEqual(doc);
  });

  it("rejects malformed JSON", () => {
    expect(() => parseCurveSet("{nope")).toThrow("not valid JSON");
  });

  it("rejects wrong version", () => {
    const doc = { ...makeDoc(() => [0, 1]), version: 7 };
    expect(() => parseCurveSet(JSON.stringify(doc))).toThrow("unsupported curve version");
  });

  it("rejects missing or short curves", () => {
    const doc = makeDoc(() => [0, 1]) as { version: number; curves: Record<string, number[]> };
    doc.curves["r_to_r"] = [0.5];
    expect(() => parseCurveSet(JSON.stringify(doc))).toThrow("r_to_r");
    doc.curves["r_to_r"] = [0, 1];
    delete doc.curves["g_to_b"];
    expect(() => parseCurveSet(JSON.stringify(doc))).toThrow("g_to_b");
  });

  it("rejects non-finite knots", () => {
    const text = JSON.stringify(makeDoc(() => [0, 1])).replace("[0,1]", '[0,"x"]');
    expect(() => parseCurveSet(text)).toThrow();
  });
});

describe("samplePolyline", () => {
  it("reproduces a two-knot diagonal exactly", () => {
    const dense = samplePolyline([0, 1], 65);
    for (let k = 0; k < 65; k++) expect(dense[k]).toBeCloseTo(k / 64, 12);
  });

  it("passes through every knot when sample grid is aligned", () => {
    const knots = [0.1, -0.4, 0.9, 0.2, 0.7];
    const dense = samplePolyline(knots, 65);
    for (let i = 0; i < knots.length; i++) {
      expect(dense[(i * 64) / 4]).toBe(knots[i]);
    }
  });

  it("rejects degenerate inputs", () => {
    expect(() => samplePolyline([1], 64)).toThrow();
    expect(() => samplePolyline([0, 1], 1)).toThrow();
  });
});

describe("renderCurvePanel", () => {
  it("draws 15 flat lines for zero curves", () => {
    const groups = renderCurvePanel(makeDoc(() => [0, 0, 0]));
    let total = 0;
    for (const plots of groups.values()) {
      for (const plot of plots) {
        total += 1;
        expect(plot.points.every((p) => p.y === 0)).toBe(true);
      }
    }
    expect(total).toBe(15);
  });

  it("groups five curves per output channel", () => {
    const groups = renderCurvePanel(makeDoc(() => [0, 1]));
    expect([...groups.keys()]).toEqual(["r", "g", "b"]);
    for (const [output, plots] of groups) {
      expect(plots).toHaveLength(5);
      expect(plots.every((p) => p.key.endsWith(`_to_${output}`))).toBe(true);
    }
  });

  it("plots exactly the served knot values", () => {
    let seed = 1;
    const rand = () => {
      // deterministic LCG so failures are reproducible
      seed = (seed * 48271) % 2147483647;
      return seed / 2147483647 - 0.5;
    };
    const doc = makeDoc((key) => {
      const m = key.startsWith("x") || key.startsWith("y") ? 9 : 17;
      return Array.from({ length: m }, rand);
    });
    const groups = renderCurvePanel(doc);
    for (const plots of groups.values()) {
      for (const plot of plots) {
        const served = doc.curves[plot.key];
        expect(plot.knots.map((k) => k.y)).toEqual(served);
        const step = 64 / (served.length - 1);
        for (let i = 0; i < served.length; i++) {
          expect(plot.points[i * step].y).toBe(served[i]);
        }
      }
    }
  });

  it("requires at least 64 samples", () => {
    expect(() => renderCurvePanel(makeDoc(() => [0, 1]), 32)).toThrow();
  });
});

describe("curvePath", () => {
  it("emits a flipped-y SVG path", () => {
    const groups = renderCurvePanel(makeDoc(() => [0, 1]), 65);
    const plot = groups.get("r")![0];
    const path = curvePath(plot);
    expect(path.startsWith("M0.0000,1.0000")).toBe(true);
    expect(path.endsWith("L1.0000,0.0000")).toBe(true);
  });
});
