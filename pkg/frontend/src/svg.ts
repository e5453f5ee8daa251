/**
 * Deterministic SVG rendering: no dates, no randomness, fixed number
 * formatting, so the same data always produces byte-identical files.
 */

export interface Rect {
  x: number;
  y: number;
  width: number;
  height: number;
}

export function fmt(value: number): string {
  if (!Number.isFinite(value)) return value > 0 ? "inf" : "-inf";
  if (value === 0) return "0";
  const magnitude = Math.abs(value);
  if (magnitude >= 1000 || magnitude < 0.01) return value.toExponential(2);
  return Number(value.toPrecision(4)).toString();
}

function coord(value: number): string {
  return value.toFixed(2);
}

/** Evenly spaced axis ticks covering [lo, hi]. */
export function ticks(lo: number, hi: number, count = 5): number[] {
  if (!Number.isFinite(lo) || !Number.isFinite(hi) || lo === hi) {
    return [lo];
  }
  const step = (hi - lo) / (count - 1);
  return Array.from({ length: count }, (_, i) => lo + i * step);
}

export class SvgCanvas {
  private parts: string[] = [];

  constructor(
    readonly width: number,
    readonly height: number,
  ) {}

  add(fragment: string): void {
    this.parts.push(fragment);
  }

  line(x1: number, y1: number, x2: number, y2: number, stroke: string, strokeWidth = 1): void {
    this.add(
      `<line x1="${coord(x1)}" y1="${coord(y1)}" x2="${coord(x2)}" y2="${coord(y2)}" stroke="${stroke}" stroke-width="${strokeWidth}"/>`,
    );
  }

  polyline(points: [number, number][], stroke: string, strokeWidth = 1.5): void {
    const path = points.map(([x, y]) => `${coord(x)},${coord(y)}`).join(" ");
    this.add(`<polyline points="${path}" fill="none" stroke="${stroke}" stroke-width="${strokeWidth}"/>`);
  }

  rect(r: Rect, fill: string): void {
    this.add(
      `<rect x="${coord(r.x)}" y="${coord(r.y)}" width="${coord(r.width)}" height="${coord(r.height)}" fill="${fill}"/>`,
    );
  }

  text(x: number, y: number, content: string, options: { size?: number; anchor?: string } = {}): void {
    const size = options.size ?? 11;
    const anchor = options.anchor ?? "start";
    this.add(
      `<text x="${coord(x)}" y="${coord(y)}" font-family="sans-serif" font-size="${size}" text-anchor="${anchor}">${escapeXml(content)}</text>`,
    );
  }

  render(): string {
    return (
      `<svg xmlns="http://www.w3.org/2000/svg" width="${this.width}" height="${this.height}" ` +
      `viewBox="0 0 ${this.width} ${this.height}">\n<rect width="100%" height="100%" fill="white"/>\n` +
      this.parts.join("\n") +
      "\n</svg>\n"
    );
  }
}

function escapeXml(text: string): string {
  return text.replace(/&/g, "&amp;").replace(/</g, "&lt;").replace(/>/g, "&gt;");
}

/** Linear data-to-pixel scale. */
export function scale(domainLo: number, domainHi: number, rangeLo: number, rangeHi: number) {
  const span = domainHi - domainLo;
  return (value: number): number => {
    if (span === 0) return (rangeLo + rangeHi) / 2;
    return rangeLo + ((value - domainLo) / span) * (rangeHi - rangeLo);
  };
}

/** hsl() colour with the given lightness percentage (lower = darker). */
export function shade(hueDegrees: number, lightness: number, saturation = 60): string {
  return `hsl(${Math.round(hueDegrees)}, ${Math.round(saturation)}%, ${Math.round(lightness)}%)`;
}

/** Approximate lightness of a colour produced by {@link shade} (for tests). */
export function lightnessOf(color: string): number {
  const match = /hsl\(\s*\d+\s*,\s*\d+%\s*,\s*(\d+)%\s*\)/.exec(color);
  if (!match) throw new Error(`not an hsl colour: ${color}`);
  return Number(match[1]);
}
