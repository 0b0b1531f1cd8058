import { ApiClient, SingleFlight, ApiError, isAbortError } from './api.js';
import {
  isComplete,
  predictors,
  selectionFromQuery,
  selectionToQuery,
} from './state.js';
import type { Profile, SchemaDoc } from './types.js';
import { buildGrid, overridesForAttribute } from './whatif.js';
import {
  renderBanner,
  renderErrors,
  renderForm,
  renderPrediction,
  renderWhatifGrid,
} from './view.js';

const DEFAULT_SERVICE = 'http://127.0.0.1:8000';

function serviceBaseUrl(): string {
  const params = new URLSearchParams(window.location.search);
  return params.get('service') ?? DEFAULT_SERVICE;
}

class App {
  private readonly api = new ApiClient(serviceBaseUrl());
  private schema: SchemaDoc | null = null;
  private selection: Profile = {};
  private whatifAttr: string | null = null;
  private readonly predictFlight = new SingleFlight();
  private readonly whatifFlight = new SingleFlight();

  private readonly formHost = document.getElementById('form-host')!;
  private readonly predictionHost = document.getElementById('prediction-host')!;
  private readonly whatifHost = document.getElementById('whatif-host')!;
  private readonly bannerHost = document.getElementById('banner-host')!;

  async start(): Promise<void> {
    this.bannerHost.replaceChildren();
    try {
      this.schema = await this.api.getSchema();
    } catch {
      this.bannerHost.replaceChildren(
        renderBanner(
          document,
          `Cannot reach the decision-support service at ${this.api.baseUrl}`,
          () => void this.start(),
        ),
      );
      return;
    }
    const fromUrl = selectionFromQuery(this.schema, window.location.search);
    this.selection = fromUrl.selection;
    this.whatifAttr = fromUrl.whatifAttr;
    this.renderForm();
    this.renderWhatifChooser();
    if (isComplete(this.schema, this.selection)) {
      void this.predict();
    }
  }

  private syncUrl(): void {
    const params = new URLSearchParams(window.location.search);
    const service = params.get('service');
    let query = selectionToQuery(this.selection, this.whatifAttr ?? undefined);
    if (service) {
      query = `service=${encodeURIComponent(service)}&${query}`;
    }
    window.history.replaceState(null, '', `?${query}`);
  }

  private renderForm(): void {
    if (!this.schema) return;
    this.formHost.replaceChildren(
      renderForm(document, this.schema, this.selection, {
        onChange: (attribute, level) => {
          this.selection = { ...this.selection, [attribute]: level };
          this.syncUrl();
          this.renderForm();
        },
        onSubmit: () => void this.predict(),
      }),
    );
  }

  private renderWhatifChooser(): void {
    if (!this.schema) return;
    const chooser = document.createElement('select');
    chooser.id = 'whatif-attribute';
    const none = document.createElement('option');
    none.value = '';
    none.textContent = '-- what-if attribute --';
    chooser.appendChild(none);
    for (const attr of predictors(this.schema)) {
      const option = document.createElement('option');
      option.value = attr.name;
      option.textContent = attr.name;
      chooser.appendChild(option);
    }
    chooser.value = this.whatifAttr ?? '';
    chooser.addEventListener('change', () => {
      this.whatifAttr = chooser.value || null;
      this.syncUrl();
      void this.runWhatif();
    });
    const label = document.createElement('label');
    label.textContent = 'Compare across: ';
    label.appendChild(chooser);
    this.whatifHost.replaceChildren(label);
  }

  private async predict(): Promise<void> {
    if (!this.schema || !isComplete(this.schema, this.selection)) return;
    try {
      const response = await this.predictFlight.run((signal) =>
        this.api.predict(this.selection, signal),
      );
      this.predictionHost.replaceChildren(renderPrediction(document, response));
      void this.runWhatif();
    } catch (err) {
      if (isAbortError(err)) return;
      const errors = err instanceof ApiError ? err.errors : [{ field: '', message: String(err) }];
      this.predictionHost.replaceChildren(renderErrors(document, errors));
    }
  }

  private async runWhatif(): Promise<void> {
    if (!this.schema) return;
    this.renderWhatifChooser();
    if (!this.whatifAttr || !isComplete(this.schema, this.selection)) return;
    const attribute = this.whatifAttr;
    try {
      const response = await this.whatifFlight.run((signal) =>
        this.api.whatif(this.selection, overridesForAttribute(this.schema!, attribute), signal),
      );
      const grid = buildGrid(this.schema, this.selection, attribute, response);
      this.whatifHost.appendChild(renderWhatifGrid(document, grid));
    } catch (err) {
      if (isAbortError(err)) return;
      const errors = err instanceof ApiError ? err.errors : [{ field: '', message: String(err) }];
      this.whatifHost.appendChild(renderErrors(document, errors));
    }
  }
}

new App().start();
