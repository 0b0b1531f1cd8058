import type { FieldError, PredictionResponse, Profile, SchemaDoc } from './types.js';
import { barWidths, formatDelta, formatProbability, isComplete, predictors } from './state.js';
import type { WhatifGrid } from './whatif.js';

// All renderers take the Document explicitly so they run unchanged in
// the browser and under happy-dom in tests.

const PLACEHOLDER = '-- choose --';

export interface FormHandlers {
  onChange: (attribute: string, level: string) => void;
  onSubmit: () => void;
}

export function renderForm(
  doc: Document,
  schema: SchemaDoc,
  selection: Profile,
  handlers: FormHandlers,
): HTMLElement {
  const form = doc.createElement('form');
  form.className = 'profile-form';
  form.addEventListener('submit', (ev) => {
    ev.preventDefault();
    handlers.onSubmit();
  });

  for (const attr of predictors(schema)) {
    const row = doc.createElement('label');
    row.className = 'form-row';

    const caption = doc.createElement('span');
    caption.className = 'form-label';
    caption.textContent = attr.name;
    row.appendChild(caption);

    const select = doc.createElement('select');
    select.name = attr.name;
    select.dataset.attribute = attr.name;

    const placeholder = doc.createElement('option');
    placeholder.value = '';
    placeholder.textContent = PLACEHOLDER;
    placeholder.disabled = true;
    select.appendChild(placeholder);

    for (const level of attr.levels) {
      const option = doc.createElement('option');
      option.value = level;
      option.textContent = level;
      select.appendChild(option);
    }
    select.value = selection[attr.name] ?? '';
    select.addEventListener('change', () => {
      handlers.onChange(attr.name, select.value);
    });
    row.appendChild(select);
    form.appendChild(row);
  }

  const submit = doc.createElement('button');
  submit.type = 'submit';
  submit.className = 'submit-button';
  submit.textContent = 'Predict';
  submit.disabled = !isComplete(schema, selection);
  form.appendChild(submit);
  return form;
}

export function renderErrors(doc: Document, errors: FieldError[]): HTMLElement {
  const list = doc.createElement('ul');
  list.className = 'field-errors';
  for (const err of errors) {
    const item = doc.createElement('li');
    item.dataset.field = err.field;
    item.textContent = err.field ? `${err.field}: ${err.message}` : err.message;
    list.appendChild(item);
  }
  return list;
}

export function renderBanner(doc: Document, message: string, onRetry?: () => void): HTMLElement {
  const banner = doc.createElement('div');
  banner.className = 'banner';
  const text = doc.createElement('span');
  text.textContent = message;
  banner.appendChild(text);
  if (onRetry) {
    const retry = doc.createElement('button');
    retry.type = 'button';
    retry.className = 'retry-button';
    retry.textContent = 'Retry';
    retry.addEventListener('click', onRetry);
    banner.appendChild(retry);
  }
  return banner;
}

function probabilityBars(
  doc: Document,
  labels: string[],
  probabilities: number[],
): HTMLElement {
  const wrap = doc.createElement('div');
  wrap.className = 'probability-bars';
  const widths = barWidths(probabilities);
  labels.forEach((label, i) => {
    const row = doc.createElement('div');
    row.className = 'bar-row';

    const caption = doc.createElement('span');
    caption.className = 'bar-label';
    caption.textContent = `${label} (${formatProbability(probabilities[i])})`;
    row.appendChild(caption);

    const track = doc.createElement('div');
    track.className = 'bar-track';
    const fill = doc.createElement('div');
    fill.className = 'bar-fill';
    fill.style.width = `${widths[i]}%`;
    fill.dataset.probability = String(probabilities[i]);
    track.appendChild(fill);
    row.appendChild(track);
    wrap.appendChild(row);
  });
  return wrap;
}

export function renderPrediction(doc: Document, response: PredictionResponse): HTMLElement {
  const panel = doc.createElement('section');
  panel.className = 'prediction-panel';

  const model = doc.createElement('p');
  model.className = 'model-class';
  model.textContent = `Model prediction: ${response.model_prediction.class}`;
  panel.appendChild(model);

  const rule = doc.createElement('p');
  rule.className = 'rule-class';
  rule.textContent = `Rule prediction: ${response.rule_prediction.class}`;
  panel.appendChild(rule);

  if (!response.agreement) {
    const badge = doc.createElement('span');
    badge.className = 'disagreement-badge';
    badge.textContent = 'rule and model disagree';
    panel.appendChild(badge);
  }
  if (response.rule_prediction.backoff) {
    const badge = doc.createElement('span');
    badge.className = 'backoff-badge';
    badge.textContent = 'unseen combination: parent-cell majority used';
    panel.appendChild(badge);
  }

  panel.appendChild(
    probabilityBars(
      doc,
      response.model_prediction.class_labels,
      response.model_prediction.probabilities,
    ),
  );

  const ruleText = doc.createElement('pre');
  ruleText.className = 'rule-text';
  ruleText.textContent = response.rule_prediction.rule;
  panel.appendChild(ruleText);
  return panel;
}

export function renderWhatifGrid(doc: Document, grid: WhatifGrid): HTMLElement {
  const table = doc.createElement('table');
  table.className = 'whatif-grid';

  const head = doc.createElement('tr');
  for (const caption of [grid.attribute, 'Predicted class', ...grid.classLabels]) {
    const th = doc.createElement('th');
    th.textContent = caption;
    head.appendChild(th);
  }
  table.appendChild(head);

  for (const cell of grid.cells) {
    const tr = doc.createElement('tr');
    tr.dataset.level = cell.level;
    if (cell.isCurrent) tr.classList.add('current-level');

    const name = doc.createElement('td');
    name.textContent = cell.isCurrent ? `${cell.level} (current)` : cell.level;
    tr.appendChild(name);

    if (cell.status !== 'ok') {
      const td = doc.createElement('td');
      td.className = 'cell-error';
      td.colSpan = 1 + grid.classLabels.length;
      td.appendChild(renderErrors(doc, cell.errors ?? []));
      tr.appendChild(td);
      table.appendChild(tr);
      continue;
    }

    const predicted = doc.createElement('td');
    predicted.className = 'cell-class';
    predicted.textContent = cell.predictedClass ?? '';
    tr.appendChild(predicted);

    grid.classLabels.forEach((label, k) => {
      const td = doc.createElement('td');
      td.className = 'cell-delta';
      td.dataset.class = label;
      td.dataset.probability = String(cell.probabilities?.[k] ?? '');
      td.textContent = formatDelta(cell.delta?.[k] ?? 0);
      if (grid.bestLevelPerClass[k] === cell.level) {
        td.classList.add('best-for-class');
      }
      tr.appendChild(td);
    });
    table.appendChild(tr);
  }
  return table;
}
