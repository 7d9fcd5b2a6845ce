// Scripted browser test of the explorer loop: slider moves drive exactly
// one debounced prediction, simulation renders a consistent breakdown,
// and out-of-range input warns without touching the network.

import { afterEach, beforeEach, describe, expect, it, vi } from 'vitest';
import { Window } from 'happy-dom';

import { ApiClient, type Offsets } from '../src/api.js';
import { initApp, type App } from '../src/app.js';
import { DesignSession } from '../src/session.js';
import { LivePredictor } from '../src/predictor.js';

const PAGE = `
  <div id="error-banner" class="hidden"></div>
  <input id="slider-x1" type="range" min="-3.5" max="3.5" step="0.05" value="0">
  <input id="num-x1" type="number" value="0">
  <input id="slider-x2" type="range" min="-3.5" max="3.5" step="0.05" value="0">
  <input id="num-x2" type="number" value="0">
  <input id="slider-x3" type="range" min="-3.5" max="3.5" step="0.05" value="0">
  <input id="num-x3" type="number" value="0">
  <input id="slider-x4" type="range" min="-3.5" max="3.5" step="0.05" value="0">
  <input id="num-x4" type="number" value="0">
  <div id="range-warning" class="hidden"></div>
  <span id="dnn-kwh"></span><span id="cnn-kwh"></span><span id="model-delta"></span>
  <button id="simulate-btn"></button>
  <div id="prediction-error"></div>
  <div id="footprint-host"></div>
  <div id="raster-host"></div>
  <div id="breakdown-host"></div>
  <button id="export-btn"></button>
  <ul id="history-list"></ul>
`;

const BASE_RECT_VERTICES: [number, number][] = [
  [0, 0], [44.497, 0], [44.497, 22.249], [0, 22.249],
];

function rasterFixture(): number[][] {
  const grid: number[][] = [];
  for (let r = 0; r < 30; r++) {
    grid.push(new Array(48).fill(r > 5 && r < 24 ? 1 : 0));
  }
  return grid;
}

function footprintBody(mirrored = false) {
  const vertices = mirrored
    ? BASE_RECT_VERTICES.map(([x, y]) => [44.497 - x, y] as [number, number])
    : BASE_RECT_VERTICES;
  return {
    version: '0.1.0',
    vertices,
    area_m2: 990.0,
    perimeter_m: 133.49,
    raster: rasterFixture(),
  };
}

const SIMULATE_BODY = {
  version: '0.1.0',
  heating_kwh: 41824.05,
  cooling_kwh: 665004.6,
  lighting_kwh: 149220.22,
  total_kwh: 856048.87,
};

interface FetchLog {
  calls: Array<{ path: string; body: { x: Offsets } | null }>;
}

function installFetch(
  window: Window,
  predictBody: (n: number) => unknown = (n) => ({ version: '0.1.0', dnn_kwh: 900000 + n, cnn_kwh: 910000 + n }),
): FetchLog {
  const log: FetchLog = { calls: [] };
  let predictCount = 0;
  const fetchMock = vi.fn(async (url: string, init?: { body?: string }) => {
    const body = init?.body ? JSON.parse(init.body) : null;
    log.calls.push({ path: url, body });
    let payload: unknown;
    if (url.endsWith('/api/footprint')) {
      payload = footprintBody(body && body.x[1] !== body.x[3] && body.x[1] < body.x[3]);
    } else if (url.endsWith('/api/predict')) {
      predictCount += 1;
      payload = predictBody(predictCount);
    } else if (url.endsWith('/api/simulate')) {
      payload = SIMULATE_BODY;
    } else {
      payload = { version: '0.1.0' };
    }
    return {
      ok: true,
      status: 200,
      json: async () => payload,
    } as Response;
  });
  (window as unknown as { fetch: typeof fetch }).fetch = fetchMock as unknown as typeof fetch;
  (globalThis as { fetch?: typeof fetch }).fetch = fetchMock as unknown as typeof fetch;
  return log;
}

function predictCalls(log: FetchLog) {
  return log.calls.filter((c) => c.path.endsWith('/api/predict'));
}

async function settle(ms = 400): Promise<void> {
  await vi.advanceTimersByTimeAsync(ms);
  vi.useRealTimers();
  await new Promise((resolve) => setTimeout(resolve, 0));
  vi.useFakeTimers();
}

describe('explorer loop', () => {
  let window: Window;
  let doc: Document;
  let app: App;
  let log: FetchLog;

  beforeEach(async () => {
    vi.useFakeTimers();
    window = new Window();
    window.document.body.innerHTML = PAGE;
    doc = window.document as unknown as Document;
    log = installFetch(window);
    app = initApp(doc, new ApiClient(''), 150);
    await settle();
    log.calls.length = 0; // drop the initial footprint fetch
  });

  afterEach(() => {
    vi.useRealTimers();
  });

  function moveSlider(id: string, value: string): void {
    const slider = doc.getElementById(id) as HTMLInputElement;
    slider.value = value;
    slider.dispatchEvent(new window.Event('input', { bubbles: true }));
  }

  it('one slider move produces exactly one prediction and a history row', async () => {
    moveSlider('slider-x1', '1.5');
    await settle();
    expect(predictCalls(log)).toHaveLength(1);
    expect(predictCalls(log)[0].body?.x).toEqual([1.5, 0, 0, 0]);
    expect(doc.getElementById('dnn-kwh')!.textContent).toContain('kWh/yr');
    expect(doc.getElementById('cnn-kwh')!.textContent).toContain('kWh/yr');
    expect(app.session.history).toHaveLength(1);
  });

  it('rapid moves collapse into one in-flight request', async () => {
    for (const v of ['0.5', '1.0', '1.5', '2.0', '2.5']) {
      moveSlider('slider-x1', v);
      await vi.advanceTimersByTimeAsync(40); // below the debounce window
    }
    await settle();
    expect(predictCalls(log)).toHaveLength(1);
    expect(predictCalls(log)[0].body?.x).toEqual([2.5, 0, 0, 0]);
    expect(app.session.history).toHaveLength(1);
  });

  it('stale responses are discarded by sequence number', async () => {
    const session = new DesignSession();
    const results: number[] = [];
    const resolvers: Array<(v: unknown) => void> = [];
    const api = {
      predict: vi.fn(() => new Promise((resolve) => resolvers.push(resolve))),
    } as unknown as ApiClient;
    const predictor = new LivePredictor(
      api,
      (_x, r) => results.push((r as { dnn_kwh: number }).dnn_kwh),
      () => {},
      0,
    );
    predictor.request([1, 0, 0, 0]);
    await vi.advanceTimersByTimeAsync(1);
    predictor.request([2, 0, 0, 0]);
    await vi.advanceTimersByTimeAsync(1);
    // first request resolves while the second is queued behind it
    resolvers[0]({ version: 'v', dnn_kwh: 111, cnn_kwh: 0 });
    await settle();
    resolvers[1]({ version: 'v', dnn_kwh: 222, cnn_kwh: 0 });
    await settle();
    expect(results).toEqual([111, 222]);
    expect(session.history).toHaveLength(0); // session untouched by this harness

    // now an out-of-order completion: the late reply to an old request
    const resolversB: Array<(v: unknown) => void> = [];
    const apiB = {
      predict: vi.fn(() => new Promise((resolve) => resolversB.push(resolve))),
    } as unknown as ApiClient;
    const shown: number[] = [];
    const predictorB = new LivePredictor(
      apiB,
      (_x, r) => shown.push((r as { dnn_kwh: number }).dnn_kwh),
      () => {},
      0,
    );
    predictorB.request([1, 0, 0, 0]);
    await vi.advanceTimersByTimeAsync(1);
    resolversB[0]({ version: 'v', dnn_kwh: 1, cnn_kwh: 0 });
    await settle();
    predictorB.request([2, 0, 0, 0]);
    await vi.advanceTimersByTimeAsync(1);
    predictorB.request([3, 0, 0,  0]);
    await vi.advanceTimersByTimeAsync(1);
    expect(shown).toEqual([1]);
  });

  it('simulation renders bars that sum to the API total and marks history', async () => {
    moveSlider('slider-x2', '-2.0');
    await settle();
    (doc.getElementById('simulate-btn') as HTMLButtonElement).click();
    await settle();

    const segments = Array.from(doc.querySelectorAll('.breakdown-segment'));
    expect(segments).toHaveLength(3);
    const sum = segments.reduce((acc, el) => acc + Number((el as HTMLElement).dataset.kwh), 0);
    expect(sum).toBeCloseTo(SIMULATE_BODY.total_kwh, 1);

    const entry = app.session.history[app.session.history.length - 1];
    expect(entry.simulatedKwh).toBe(SIMULATE_BODY.total_kwh);

    const errText = doc.getElementById('prediction-error')!.textContent!;
    const predicted = entry.dnnKwh;
    const expectPct = (100 * Math.abs(predicted - SIMULATE_BODY.total_kwh)) / SIMULATE_BODY.total_kwh;
    expect(errText).toContain(`${expectPct.toFixed(2)}%`);
  });

  it('out-of-range input warns without any network call', async () => {
    const num = doc.getElementById('num-x1') as HTMLInputElement;
    num.value = '4.2';
    num.dispatchEvent(new window.Event('input', { bubbles: true }));
    await settle();
    expect(predictCalls(log)).toHaveLength(0);
    expect(log.calls).toHaveLength(0); // no footprint call either
    const warning = doc.getElementById('range-warning')!;
    expect(warning.classList.contains('hidden')).toBe(false);
    expect(warning.textContent).toContain('x1');
  });

  it('raster preview has exactly 30x48 cells', async () => {
    moveSlider('slider-x1', '0.5');
    await settle();
    expect(doc.querySelectorAll('.raster-cell')).toHaveLength(30 * 48);
  });

  it('footprint polygon mirrors when east/west offsets swap', async () => {
    moveSlider('slider-x2', '1.0');
    await settle();
    const first = doc.querySelector('.footprint-polygon')!.getAttribute('points')!;
    moveSlider('slider-x2', '0');
    await settle();
    moveSlider('slider-x4', '1.0');
    await settle();
    const second = doc.querySelector('.footprint-polygon')!.getAttribute('points')!;
    // fixture mirrors x-coordinates about the rectangle's center line
    const xs = (pts: string) => pts.split(' ').map((p) => Number(p.split(',')[0]));
    const mirrored = xs(first).map((x) => 44.497 - x);
    expect(xs(second).sort((a, b) => a - b).map((v) => v.toFixed(2)))
      .toEqual(mirrored.sort((a, b) => a - b).map((v) => v.toFixed(2)));
  });

  it('session export/import round-trips losslessly', async () => {
    moveSlider('slider-x3', '2.5');
    await settle();
    (doc.getElementById('simulate-btn') as HTMLButtonElement).click();
    await settle();
    const exported = app.session.exportJson();
    const imported = DesignSession.importJson(exported);
    expect(imported.exportJson()).toBe(exported);
    expect(imported.history).toEqual(app.session.history);
    expect(imported.current).toEqual(app.session.current);
  });

  it('history is append-only across interactions', async () => {
    moveSlider('slider-x1', '1.0');
    await settle();
    moveSlider('slider-x2', '-1.0');
    await settle();
    const snapshot = JSON.stringify(app.session.history[0]);
    expect(app.session.history).toHaveLength(2);
    expect(JSON.stringify(app.session.history[0])).toBe(snapshot);
  });
});
