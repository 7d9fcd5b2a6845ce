// Typed client for the prediction/simulation service.  Every number shown
// in the UI comes from one of these responses; the client never computes
// energy itself.

export type Offsets = [number, number, number, number];

export interface FootprintResponse {
  version: string;
  vertices: [number, number][];
  area_m2: number;
  perimeter_m: number;
  raster: number[][];
}

export interface PredictResponse {
  version: string;
  dnn_kwh: number;
  cnn_kwh: number;
}

export interface SimulateResponse {
  version: string;
  heating_kwh: number;
  cooling_kwh: number;
  lighting_kwh: number;
  total_kwh: number;
}

export interface InfoResponse {
  version: string;
  models: Record<string, { param_count: number }>;
  dataset: { n_samples: number } | null;
}

export class ApiError extends Error {
  constructor(readonly status: number, message: string) {
    super(message);
    this.name = 'ApiError';
  }
}

async function parseError(resp: Response): Promise<ApiError> {
  let message = `${resp.status}`;
  try {
    const body = await resp.json();
    if (body && typeof body.error === 'string') {
      message = body.error;
    }
  } catch {
    // non-JSON error body; keep the status text
  }
  return new ApiError(resp.status, message);
}

export class ApiClient {
  constructor(private readonly baseUrl: string = '') {}

  private async post<T>(path: string, x: Offsets): Promise<T> {
    const resp = await fetch(this.baseUrl + path, {
      method: 'POST',
      headers: { 'Content-Type': 'application/json' },
      body: JSON.stringify({ x }),
    });
    if (!resp.ok) {
      throw await parseError(resp);
    }
    return (await resp.json()) as T;
  }

  async info(): Promise<InfoResponse> {
    const resp = await fetch(this.baseUrl + '/api/info');
    if (!resp.ok) {
      throw await parseError(resp);
    }
    return (await resp.json()) as InfoResponse;
  }

  footprint(x: Offsets): Promise<FootprintResponse> {
    return this.post<FootprintResponse>('/api/footprint', x);
  }

  predict(x: Offsets): Promise<PredictResponse> {
    return this.post<PredictResponse>('/api/predict', x);
  }

  simulate(x: Offsets): Promise<SimulateResponse> {
    return this.post<SimulateResponse>('/api/simulate', x);
  }
}
