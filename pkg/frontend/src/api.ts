import type {
  FieldError,
  PredictionResponse,
  Profile,
  SchemaDoc,
  WhatifOverride,
  WhatifResponse,
} from './types.js';

export class ApiError extends Error {
  constructor(
    public readonly status: number,
    public readonly errors: FieldError[],
  ) {
    super(errors.map((e) => `${e.field}: ${e.message}`).join('; ') || `HTTP ${status}`);
  }
}

type FetchFn = typeof fetch;

export class ApiClient {
  constructor(
    public readonly baseUrl: string,
    private readonly fetchFn: FetchFn = (...args) => fetch(...args),
  ) {}

  private async request<T>(
    path: string,
    init: RequestInit = {},
    signal?: AbortSignal,
  ): Promise<T> {
    const response = await this.fetchFn(`${this.baseUrl}${path}`, {
      ...init,
      signal,
      headers: { 'content-type': 'application/json', ...init.headers },
    });
    const body = await response.json();
    if (!response.ok) {
      throw new ApiError(response.status, (body?.errors ?? []) as FieldError[]);
    }
    return body as T;
  }

  getSchema(signal?: AbortSignal): Promise<SchemaDoc> {
    return this.request<SchemaDoc>('/schema', {}, signal);
  }

  predict(profile: Profile, signal?: AbortSignal): Promise<PredictionResponse> {
    return this.request<PredictionResponse>(
      '/predict',
      { method: 'POST', body: JSON.stringify(profile) },
      signal,
    );
  }

  whatif(
    base: Profile,
    overrides: WhatifOverride[],
    signal?: AbortSignal,
  ): Promise<WhatifResponse> {
    return this.request<WhatifResponse>(
      '/whatif',
      { method: 'POST', body: JSON.stringify({ base, overrides }) },
      signal,
    );
  }
}

/**
 * Single-flight guard: each panel holds one of these so a new request
 * cancels the in-flight one instead of racing it.
 */
export class SingleFlight {
  private controller: AbortController | null = null;

  async run<T>(task: (signal: AbortSignal) => Promise<T>): Promise<T> {
    this.controller?.abort();
    const controller = new AbortController();
    this.controller = controller;
    try {
      return await task(controller.signal);
    } finally {
      if (this.controller === controller) {
        this.controller = null;
      }
    }
  }

  abort(): void {
    this.controller?.abort();
    this.controller = null;
  }
}

export function isAbortError(err: unknown): boolean {
  return err instanceof DOMException
    ? err.name === 'AbortError'
    : err instanceof Error && err.name === 'AbortError';
}
