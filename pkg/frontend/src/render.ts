// Pure DOM builders: footprint SVG with north arrow and dimensions,
// raster preview grid, stacked energy-breakdown bars.

import type { FootprintResponse, SimulateResponse } from './api.js';

const SVG_NS = 'http://www.w3.org/2000/svg';

export function renderFootprintSvg(doc: Document, fp: FootprintResponse): SVGSVGElement {
  const xs = fp.vertices.map((v) => v[0]);
  const ys = fp.vertices.map((v) => v[1]);
  const minX = Math.min(...xs); const maxX = Math.max(...xs);
  const minY = Math.min(...ys); const maxY = Math.max(...ys);
  const pad = 6;
  const width = maxX - minX; const height = maxY - minY;

  const svg = doc.createElementNS(SVG_NS, 'svg') as SVGSVGElement;
  svg.setAttribute('viewBox', `${minX - pad} ${-(maxY + pad)} ${width + 2 * pad} ${height + 2 * pad}`);
  svg.setAttribute('class', 'footprint-svg');

  // y axis points north: flip into SVG's downward coordinates
  const points = fp.vertices.map(([x, y]) => `${x.toFixed(3)},${(-y).toFixed(3)}`).join(' ');
  const polygon = doc.createElementNS(SVG_NS, 'polygon');
  polygon.setAttribute('points', points);
  polygon.setAttribute('class', 'footprint-polygon');
  svg.appendChild(polygon);

  const area = doc.createElementNS(SVG_NS, 'text');
  area.setAttribute('x', `${(minX + maxX) / 2}`);
  area.setAttribute('y', `${-(minY + maxY) / 2}`);
  area.setAttribute('class', 'dim-label area-label');
  area.setAttribute('text-anchor', 'middle');
  area.textContent = `${Math.round(fp.area_m2)} m²`;
  svg.appendChild(area);

  const widthLabel = doc.createElementNS(SVG_NS, 'text');
  widthLabel.setAttribute('x', `${(minX + maxX) / 2}`);
  widthLabel.setAttribute('y', `${-minY + 4.5}`);
  widthLabel.setAttribute('text-anchor', 'middle');
  widthLabel.setAttribute('class', 'dim-label');
  widthLabel.textContent = `${width.toFixed(1)} m`;
  svg.appendChild(widthLabel);

  const heightLabel = doc.createElementNS(SVG_NS, 'text');
  heightLabel.setAttribute('x', `${maxX + 3}`);
  heightLabel.setAttribute('y', `${-(minY + maxY) / 2}`);
  heightLabel.setAttribute('class', 'dim-label');
  heightLabel.textContent = `${height.toFixed(1)} m`;
  svg.appendChild(heightLabel);

  // north arrow in the top-left corner
  const arrowX = minX - pad / 2;
  const arrowTop = -(maxY + pad / 2);
  const arrow = doc.createElementNS(SVG_NS, 'path');
  arrow.setAttribute('d', `M ${arrowX} ${arrowTop + 4} L ${arrowX} ${arrowTop} M ${arrowX - 1} ${arrowTop + 1.2} L ${arrowX} ${arrowTop} L ${arrowX + 1} ${arrowTop + 1.2}`);
  arrow.setAttribute('class', 'north-arrow');
  svg.appendChild(arrow);
  const northLabel = doc.createElementNS(SVG_NS, 'text');
  northLabel.setAttribute('x', `${arrowX + 1.5}`);
  northLabel.setAttribute('y', `${arrowTop + 3}`);
  northLabel.setAttribute('class', 'dim-label north-label');
  northLabel.textContent = 'N';
  svg.appendChild(northLabel);

  return svg;
}

export function renderRasterGrid(doc: Document, raster: number[][]): HTMLElement {
  const grid = doc.createElement('div');
  grid.className = 'raster-grid';
  grid.style.display = 'grid';
  const cols = raster[0]?.length ?? 0;
  grid.style.gridTemplateColumns = `repeat(${cols}, 1fr)`;
  for (const row of raster) {
    for (const value of row) {
      const cell = doc.createElement('div');
      cell.className = value === 1 ? 'raster-cell raster-cell-interior' : 'raster-cell';
      grid.appendChild(cell);
    }
  }
  return grid;
}

export interface BreakdownView {
  container: HTMLElement;
  segmentsKwh: { heating: number; cooling: number; lighting: number };
}

export function renderBreakdownBars(doc: Document, sim: SimulateResponse): BreakdownView {
  const container = doc.createElement('div');
  container.className = 'breakdown';
  const total = sim.total_kwh;
  const parts: Array<[string, number]> = [
    ['heating', sim.heating_kwh],
    ['cooling', sim.cooling_kwh],
    ['lighting', sim.lighting_kwh],
  ];
  const bar = doc.createElement('div');
  bar.className = 'breakdown-bar';
  for (const [name, kwh] of parts) {
    const seg = doc.createElement('div');
    seg.className = `breakdown-segment breakdown-${name}`;
    seg.style.width = total > 0 ? `${(100 * kwh) / total}%` : '0%';
    seg.dataset.kwh = String(kwh);
    seg.title = `${name}: ${Math.round(kwh).toLocaleString()} kWh/yr`;
    bar.appendChild(seg);
  }
  container.appendChild(bar);

  const legend = doc.createElement('div');
  legend.className = 'breakdown-legend';
  for (const [name, kwh] of parts) {
    const item = doc.createElement('span');
    item.className = `legend-${name}`;
    item.textContent = `${name} ${Math.round(kwh).toLocaleString()} kWh/yr`;
    legend.appendChild(item);
  }
  const totalEl = doc.createElement('span');
  totalEl.className = 'legend-total';
  totalEl.textContent = `total ${Math.round(total).toLocaleString()} kWh/yr`;
  legend.appendChild(totalEl);
  container.appendChild(legend);

  return {
    container,
    segmentsKwh: { heating: sim.heating_kwh, cooling: sim.cooling_kwh, lighting: sim.lighting_kwh },
  };
}

export function formatKwh(value: number): string {
  return `${Math.round(value).toLocaleString()} kWh/yr`;
}
