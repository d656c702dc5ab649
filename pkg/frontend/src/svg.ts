/**
 * Minimal SVG scene builder.
 *
 * Numeric text falls into three classes the lint understands:
 *   class="tick"        axis scale labels (presentation scaffolding),
 *   class="data"        numbers copied from an input field; must carry
 *                       data-src="<dotted path into the report JSON>",
 *   class="provenance"  the config hash footer.
 * Everything else in a figure is geometry, which the lint ignores.
 */

export const WIDTH = 640;
export const HEIGHT = 420;
export const MARGIN = { left: 64, right: 20, top: 36, bottom: 46 };

/** Fixed number formatting shared by renderer and lint. */
export function fmt(v: number): string {
  if (!isFinite(v)) return String(v);
  if (v !== 0 && (Math.abs(v) < 1e-3 || Math.abs(v) >= 1e5)) {
    return v.toExponential(3);
  }
  return String(Number(v.toPrecision(6)));
}

export interface Scale {
  (v: number): number;
  domain: [number, number];
  log: boolean;
}

export function makeScale(
  domain: [number, number],
  range: [number, number],
  log = false,
): Scale {
  const [d0, d1] = log ? [Math.log10(domain[0]), Math.log10(domain[1])] : domain;
  const span = d1 - d0 || 1;
  const f = ((v: number) => {
    const x = log ? Math.log10(v) : v;
    return range[0] + ((x - d0) / span) * (range[1] - range[0]);
  }) as Scale;
  f.domain = domain;
  f.log = log;
  return f;
}

export function niceTicks(domain: [number, number], n = 5, log = false): number[] {
  if (log) {
    const lo = Math.ceil(Math.log10(domain[0]));
    const hi = Math.floor(Math.log10(domain[1]));
    const out: number[] = [];
    for (let e = lo; e <= hi; e++) out.push(10 ** e);
    if (out.length >= 2) return out;
    // fewer than two decades: fall back to linear ticks
  }
  const span = domain[1] - domain[0] || 1;
  const step = 10 ** Math.floor(Math.log10(span / n));
  const err = span / n / step;
  const mult = err >= 7.5 ? 10 : err >= 3.5 ? 5 : err >= 1.5 ? 2 : 1;
  const s = step * mult;
  const out: number[] = [];
  for (let v = Math.ceil(domain[0] / s) * s; v <= domain[1] + 1e-12; v += s) {
    out.push(Number(v.toPrecision(12)));
  }
  return out;
}

const esc = (s: string) =>
  s.replace(/&/g, "&amp;").replace(/</g, "&lt;").replace(/>/g, "&gt;");

export class Svg {
  private parts: string[] = [];

  line(x1: number, y1: number, x2: number, y2: number, stroke = "#333", dash = "", width = 1) {
    this.parts.push(
      `<line x1="${x1.toFixed(2)}" y1="${y1.toFixed(2)}" x2="${x2.toFixed(2)}" y2="${y2.toFixed(2)}" stroke="${stroke}" stroke-width="${width}"${dash ? ` stroke-dasharray="${dash}"` : ""}/>`,
    );
  }

  polyline(pts: Array<[number, number]>, stroke = "#1f77b4", width = 1.5, opacity = 1) {
    const d = pts.map(([x, y]) => `${x.toFixed(2)},${y.toFixed(2)}`).join(" ");
    this.parts.push(
      `<polyline points="${d}" fill="none" stroke="${stroke}" stroke-width="${width}" opacity="${opacity}"/>`,
    );
  }

  circle(x: number, y: number, r = 3, fill = "#1f77b4") {
    this.parts.push(
      `<circle cx="${x.toFixed(2)}" cy="${y.toFixed(2)}" r="${r}" fill="${fill}"/>`,
    );
  }

  rect(x: number, y: number, w: number, h: number, fill = "#9ecae1") {
    this.parts.push(
      `<rect x="${x.toFixed(2)}" y="${y.toFixed(2)}" width="${w.toFixed(2)}" height="${h.toFixed(2)}" fill="${fill}" stroke="#336"/>`,
    );
  }

  text(x: number, y: number, content: string, cls: string, opts: { anchor?: string; src?: string; size?: number } = {}) {
    const anchor = opts.anchor ?? "middle";
    const src = opts.src ? ` data-src="${opts.src}"` : "";
    const size = opts.size ?? 11;
    this.parts.push(
      `<text x="${x.toFixed(2)}" y="${y.toFixed(2)}" class="${cls}" text-anchor="${anchor}" font-size="${size}" font-family="sans-serif"${src}>${esc(content)}</text>`,
    );
  }

  /** Labeled datum: the visible number is fmt(value) and is lint-checked
   * against the report field named by src. */
  datum(x: number, y: number, label: string, value: number, src: string, anchor = "start") {
    this.text(x, y, label, "label", { anchor });
    const off = label.length * 6.2 + 4;
    this.text(x + (anchor === "start" ? off : 0), y, fmt(value), "data", {
      anchor,
      src,
    });
  }

  axes(
    xs: Scale,
    ys: Scale,
    xLabel: string,
    yLabel: string,
    xTicks?: number[],
    yTicks?: number[],
  ) {
    const x0 = MARGIN.left;
    const x1 = WIDTH - MARGIN.right;
    const y0 = HEIGHT - MARGIN.bottom;
    const y1 = MARGIN.top;
    this.line(x0, y0, x1, y0);
    this.line(x0, y0, x0, y1);
    for (const t of xTicks ?? niceTicks(xs.domain, 6, xs.log)) {
      const px = xs(t);
      if (px < x0 - 0.5 || px > x1 + 0.5) continue;
      this.line(px, y0, px, y0 + 4);
      this.text(px, y0 + 16, fmt(t), "tick");
    }
    for (const t of yTicks ?? niceTicks(ys.domain, 6, ys.log)) {
      const py = ys(t);
      if (py > y0 + 0.5 || py < y1 - 0.5) continue;
      this.line(x0 - 4, py, x0, py);
      this.text(x0 - 7, py + 3.5, fmt(t), "tick", { anchor: "end" });
    }
    this.text((x0 + x1) / 2, HEIGHT - 8, xLabel, "label");
    this.parts.push(
      `<text x="14" y="${(y0 + y1) / 2}" class="label" text-anchor="middle" font-size="11" font-family="sans-serif" transform="rotate(-90 14 ${(y0 + y1) / 2})">${esc(yLabel)}</text>`,
    );
  }

  title(content: string) {
    this.text(WIDTH / 2, 18, content, "title", { size: 13 });
  }

  provenanceFooter(hash: string) {
    this.text(WIDTH - MARGIN.right, HEIGHT - 8, `provenance ${hash}`, "provenance", {
      anchor: "end",
      size: 9,
    });
  }

  render(): string {
    return (
      `<svg xmlns="http://www.w3.org/2000/svg" width="${WIDTH}" height="${HEIGHT}" viewBox="0 0 ${WIDTH} ${HEIGHT}">\n` +
      `<rect width="${WIDTH}" height="${HEIGHT}" fill="white"/>\n` +
      this.parts.join("\n") +
      "\n</svg>\n"
    );
  }
}

export function plotArea(): { x: [number, number]; y: [number, number] } {
  return {
    x: [MARGIN.left, WIDTH - MARGIN.right],
    y: [HEIGHT - MARGIN.bottom, MARGIN.top],
  };
}
