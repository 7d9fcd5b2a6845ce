// Wires the explorer page: four offset sliders drive debounced surrogate
// predictions; a button runs the hourly simulation on demand; every shown
// number traces back to one API response.

import { ApiClient, ApiError, type Offsets, type PredictResponse } from './api.js';
import { LivePredictor } from './predictor.js';
import { renderBreakdownBars, renderFootprintSvg, renderRasterGrid, formatKwh } from './render.js';
import { DesignSession, OFFSET_LIMIT, offsetsInRange } from './session.js';

const SLIDER_IDS = ['x1', 'x2', 'x3', 'x4'] as const;

export interface App {
  session: DesignSession;
  refreshFootprint: () => Promise<void>;
  runSimulation: () => Promise<void>;
}

function byId<T extends HTMLElement>(doc: Document, id: string): T {
  const el = doc.getElementById(id);
  if (!el) throw new Error(`missing element #${id}`);
  return el as T;
}

export function initApp(doc: Document, api: ApiClient, predictDelayMs = 150): App {
  const session = new DesignSession();
  const warning = byId<HTMLElement>(doc, 'range-warning');
  const dnnOut = byId<HTMLElement>(doc, 'dnn-kwh');
  const cnnOut = byId<HTMLElement>(doc, 'cnn-kwh');
  const deltaOut = byId<HTMLElement>(doc, 'model-delta');
  const errorBanner = byId<HTMLElement>(doc, 'error-banner');
  const footprintHost = byId<HTMLElement>(doc, 'footprint-host');
  const rasterHost = byId<HTMLElement>(doc, 'raster-host');
  const breakdownHost = byId<HTMLElement>(doc, 'breakdown-host');
  const predictionError = byId<HTMLElement>(doc, 'prediction-error');
  const historyList = byId<HTMLElement>(doc, 'history-list');

  let lastPrediction: PredictResponse | null = null;

  function showError(message: string): void {
    errorBanner.textContent = message;
    errorBanner.classList.remove('hidden');
  }

  function clearError(): void {
    errorBanner.textContent = '';
    errorBanner.classList.add('hidden');
  }

  function renderHistory(): void {
    historyList.textContent = '';
    session.history.forEach((entry, i) => {
      const li = doc.createElement('li');
      li.className = i === session.selectedIndex ? 'history-entry selected' : 'history-entry';
      const sim = entry.simulatedKwh === null ? '' : `, sim ${formatKwh(entry.simulatedKwh)}`;
      li.textContent =
        `[${entry.x.map((v) => v.toFixed(2)).join(', ')}] ` +
        `dnn ${formatKwh(entry.dnnKwh)}, cnn ${formatKwh(entry.cnnKwh)}${sim}`;
      li.addEventListener('click', () => {
        session.selectedIndex = i;
        renderHistory();
      });
      historyList.appendChild(li);
    });
  }

  const predictor = new LivePredictor(
    api,
    (x, r) => {
      lastPrediction = r;
      dnnOut.textContent = formatKwh(r.dnn_kwh);
      cnnOut.textContent = formatKwh(r.cnn_kwh);
      deltaOut.textContent = `Δ ${formatKwh(Math.abs(r.dnn_kwh - r.cnn_kwh))}`;
      session.addPrediction(x, r.dnn_kwh, r.cnn_kwh);
      renderHistory();
      clearError();
    },
    (err) => {
      if (err instanceof ApiError && err.status === 422) {
        warning.textContent = err.message;
        warning.classList.remove('hidden');
      } else {
        showError(err instanceof Error ? err.message : String(err));
      }
    },
    predictDelayMs,
  );

  async function refreshFootprint(): Promise<void> {
    try {
      const fp = await api.footprint(session.current);
      footprintHost.textContent = '';
      footprintHost.appendChild(renderFootprintSvg(doc, fp));
      rasterHost.textContent = '';
      rasterHost.appendChild(renderRasterGrid(doc, fp.raster));
      clearError();
    } catch (err) {
      showError(err instanceof Error ? err.message : String(err));
    }
  }

  function onOffsetChange(index: number, rawValue: string): void {
    const value = Number(rawValue);
    if (Number.isNaN(value) || value < -OFFSET_LIMIT || value > OFFSET_LIMIT) {
      warning.textContent =
        `offset x${index + 1} must be between -${OFFSET_LIMIT} and ${OFFSET_LIMIT} m`;
      warning.classList.remove('hidden');
      return; // no network traffic for an out-of-range value
    }
    warning.classList.add('hidden');
    session.setOffset(index, value);
    if (!offsetsInRange(session.current)) return;
    void refreshFootprint();
    predictor.request(session.current);
  }

  SLIDER_IDS.forEach((name, index) => {
    const slider = byId<HTMLInputElement>(doc, `slider-${name}`);
    const num = byId<HTMLInputElement>(doc, `num-${name}`);
    slider.addEventListener('input', () => {
      num.value = slider.value;
      onOffsetChange(index, slider.value);
    });
    num.addEventListener('input', () => {
      onOffsetChange(index, num.value);
    });
  });

  async function runSimulation(): Promise<void> {
    const entryIndex = session.history.length - 1;
    try {
      const sim = await api.simulate(session.current);
      breakdownHost.textContent = '';
      const view = renderBreakdownBars(doc, sim);
      breakdownHost.appendChild(view.container);
      if (entryIndex >= 0) {
        session.attachSimulation(entryIndex, sim.total_kwh);
        renderHistory();
      }
      if (lastPrediction) {
        const predicted = lastPrediction.dnn_kwh;
        const pct = (100 * Math.abs(predicted - sim.total_kwh)) / sim.total_kwh;
        predictionError.textContent = `dnn error ${pct.toFixed(2)}% of simulated`;
      }
      clearError();
    } catch (err) {
      if (err instanceof ApiError && err.status === 503) {
        showError('models not loaded');
      } else {
        showError(err instanceof Error ? err.message : String(err));
      }
    }
  }

  byId<HTMLButtonElement>(doc, 'simulate-btn').addEventListener('click', () => {
    void runSimulation();
  });

  byId<HTMLButtonElement>(doc, 'export-btn').addEventListener('click', () => {
    const blob = new Blob([session.exportJson()], { type: 'application/json' });
    const a = doc.createElement('a');
    a.href = URL.createObjectURL(blob);
    a.download = 'shapenergy-session.json';
    a.click();
    URL.revokeObjectURL(a.href);
  });

  void refreshFootprint();
  return { session, refreshFootprint, runSimulation };
}
