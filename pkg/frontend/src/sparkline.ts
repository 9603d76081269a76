/** Inline SVG sparkline for the depth-register history. */

export function sparklinePath(values: number[], width: number, height: number,
                              lo = 0, hi = 10000): string {
  if (values.length < 2) return "";
  const span = hi - lo || 1;
  const step = width / (values.length - 1);
  return values
    .map((v, i) => {
      const x = (i * step).toFixed(1);
      const y = (height - ((v - lo) / span) * height).toFixed(1);
      return `${i === 0 ? "M" : "L"}${x},${y}`;
    })
    .join(" ");
}

export function sparklineSvg(values: number[], width = 220, height = 48): string {
  const path = sparklinePath(values, width, height);
  const last = values.length ? values[values.length - 1] : null;
  return `<svg viewBox="0 0 ${width} ${height}" width="${width}" height="${height}" class="spark">
  <path d="${path}" fill="none" stroke="currentColor" stroke-width="1.5"/>
  ${last === null ? "" : `<circle r="2.5" cx="${width}" cy="${(height - (last / 10000) * height).toFixed(1)}" fill="currentColor"/>`}
</svg>`;
}
