/**
 * Application shell: table view (upload + columns), topic view, canvas view,
 * chart editor, and recommendation strip, wired to the session store.
 */

import { DashRlClient } from './api';
import { buildTooltip, describeChart, tooltipLines } from './diff';
import { ChartFormModel } from './form';
import {
  cellKey,
  effectiveGeometry,
  loadOverrides,
  saveOverride,
  toPixels,
} from './grid';
import { SessionStore } from './state';
import type {
  CellDto,
  DashboardPayload,
  DatasetInfo,
  FormField,
  TopicsPayload,
} from './types';
import { FORM_FIELDS } from './types';
import { exportSvg, renderChart } from './vega';

const client = new DashRlClient('');
const store = new SessionStore(client);

let dataset: DatasetInfo | null = null;
let topics: TopicsPayload | null = null;

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  className?: string,
  text?: string,
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  if (className) node.className = className;
  if (text !== undefined) node.textContent = text;
  return node;
}

function byId(id: string): HTMLElement {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing #${id}`);
  return node;
}

// ---------------------------------------------------------------------------
// table view

async function handleUpload(file: File): Promise<void> {
  const text = await file.text();
  dataset = await client.uploadDataset(text, file.name.replace(/\.csv$/i, ''));
  renderTableView();
  const { job_id } = await client.startGeneration(dataset.id);
  const status = byId('generation-status');
  status.textContent = 'generating…';
  await client.pollJob(job_id, (job) => {
    status.textContent = `generation ${job.status}`;
  });
  topics = await client.topics(dataset.id);
  renderTopicView();
}

function renderTableView(): void {
  const host = byId('columns');
  host.replaceChildren();
  if (!dataset) return;
  for (const col of dataset.columns) {
    const row = el('div', 'column-row');
    row.appendChild(el('span', `type-badge type-${col.type}`, col.type[0].toUpperCase()));
    row.appendChild(el('span', 'column-name', col.name));
    host.appendChild(row);
  }
}

// ---------------------------------------------------------------------------
// topic view

function renderTopicView(): void {
  const host = byId('topics');
  host.replaceChildren();
  if (!topics || !dataset) return;
  for (const topic of topics.topics) {
    const group = el('div', 'topic-group');
    group.appendChild(el('h3', 'topic-key', topic.key_column));
    for (const entry of topic.dashboards) {
      const item = el(
        'button',
        'topic-item',
        `return ${entry.return.toFixed(3)} · ${entry.n_charts} charts`,
      );
      item.addEventListener('click', () => {
        void openDashboard(entry.id);
      });
      item.addEventListener('mouseenter', () => {
        void showDiffTooltip(item, entry.id);
      });
      item.addEventListener('mouseleave', hideTooltip);
      group.appendChild(item);
    }
    host.appendChild(group);
  }
}

async function openDashboard(dashboardId: string): Promise<void> {
  if (!dataset) return;
  await store.open(dataset.id, { dashboardId });
}

async function showDiffTooltip(anchor: HTMLElement, dashboardId: string): Promise<void> {
  if (!store.current) return;
  // hovering a sibling result previews its changes against the open dashboard
  const other = await client.dashboard(dashboardId);
  const diff = diffPayloads(store.current, other);
  const tooltip = byId('tooltip');
  tooltip.replaceChildren();
  for (const line of tooltipLines(buildTooltip(diff))) {
    tooltip.appendChild(el('div', 'tooltip-line', line));
  }
  const rect = anchor.getBoundingClientRect();
  tooltip.style.left = `${rect.right + 8}px`;
  tooltip.style.top = `${rect.top}px`;
  tooltip.style.display = 'block';
}

function hideTooltip(): void {
  byId('tooltip').style.display = 'none';
}

/** Client-side structural diff used only for hover previews; committed edits
 * always display the server-computed diff verbatim. */
function diffPayloads(a: DashboardPayload, b: DashboardPayload) {
  const key = (c: object) => JSON.stringify(c);
  const aCharts = new Map(a.state.charts.map((c) => [key(c), c]));
  const bCharts = new Map(b.state.charts.map((c) => [key(c), c]));
  const aIns = new Map(a.insights.map((i) => [`${i.kind}:${i.columns.join(',')}`, i]));
  const bIns = new Map(b.insights.map((i) => [`${i.kind}:${i.columns.join(',')}`, i]));
  return {
    added_charts: [...bCharts.entries()].filter(([k]) => !aCharts.has(k)).map(([, c]) => c),
    removed_charts: [...aCharts.entries()].filter(([k]) => !bCharts.has(k)).map(([, c]) => c),
    gained_insights: [...bIns.entries()].filter(([k]) => !aIns.has(k)).map(([, i]) => i),
    lost_insights: [...aIns.entries()].filter(([k]) => !bIns.has(k)).map(([, i]) => i),
  };
}

// ---------------------------------------------------------------------------
// canvas view

async function renderCanvas(payload: DashboardPayload): Promise<void> {
  const canvas = byId('canvas');
  canvas.replaceChildren();
  const overrides = loadOverrides(localStorage, payload.id);
  const geometry = effectiveGeometry(payload.layout, overrides);
  const width = canvas.clientWidth || 960;
  for (const cell of payload.layout.cells) {
    const geo = geometry.get(cellKey(cell))!;
    const box = toPixels(geo, width);
    const node = el('div', `cell cell-${cell.kind}`);
    Object.assign(node.style, {
      position: 'absolute',
      left: `${box.left}px`,
      top: `${box.top}px`,
      width: `${box.width}px`,
      height: `${box.height}px`,
    });
    if (cell.kind === 'text' && cell.text) {
      node.appendChild(el('h4', 'stat-column', cell.text.column));
      for (const line of cell.text.lines) {
        node.appendChild(el('div', 'stat-line', line));
      }
    } else if (cell.kind === 'chart' && cell.chart_index !== undefined) {
      attachCellControls(node, payload, cell, width);
      const chartHost = el('div', 'chart-host');
      node.appendChild(chartHost);
      void renderChart(chartHost, payload.render_specs[cell.chart_index]);
    }
    canvas.appendChild(node);
  }
}

function attachCellControls(
  node: HTMLElement,
  payload: DashboardPayload,
  cell: CellDto,
  canvasWidth: number,
): void {
  const bar = el('div', 'cell-bar');
  bar.appendChild(el('span', 'cell-title', describeChart(payload.state.charts[cell.chart_index!])));
  const remove = el('button', 'cell-remove', '×');
  remove.addEventListener('click', () => {
    void store.edit({ op: 'remove_chart', index: cell.chart_index! });
  });
  bar.appendChild(remove);
  node.appendChild(bar);
  // drag/resize persistence is geometry-only and local to the browser
  node.addEventListener('dragend', (ev) => {
    const geo = saveOverride(localStorage, payload.id, cellKey(cell), {
      col: Math.round(((ev as DragEvent).offsetX / canvasWidth) * 12),
      row: cell.row,
      width: cell.width,
      height: cell.height,
    })[cellKey(cell)];
    void geo;
    void renderCanvas(payload);
  });
}

// ---------------------------------------------------------------------------
// chart editor + recommendations

const form = new ChartFormModel(async (partial) => client.chartOptions(store.sessionId, partial));

async function renderEditor(): Promise<void> {
  const host = byId('editor');
  host.replaceChildren();
  if (!store.current) return;
  const snapshot = await form.refresh();
  for (const field of FORM_FIELDS) {
    const group = el('div', 'field-group');
    group.appendChild(el('label', 'field-label', field));
    const select = el('select', 'field-select') as HTMLSelectElement;
    select.appendChild(el('option', undefined, '—'));
    for (const option of snapshot.options[field as FormField]) {
      const opt = el('option', undefined, option) as HTMLOptionElement;
      opt.value = option;
      if (snapshot.picks[field as FormField] === option) opt.selected = true;
      select.appendChild(opt);
    }
    select.addEventListener('change', () => {
      void form.pick(field as FormField, select.value).then(() => renderEditor());
    });
    group.appendChild(select);
    host.appendChild(group);
  }
  const submit = el('button', 'submit-chart', 'add chart') as HTMLButtonElement;
  submit.disabled = form.completedChart() === null;
  submit.addEventListener('click', () => {
    const chart = form.completedChart();
    if (chart) {
      void store.edit({ op: 'add_chart', chart }).then(() => form.reset());
    }
  });
  host.appendChild(submit);
}

function renderRecommendations(): void {
  const host = byId('recommendations');
  host.replaceChildren();
  const recs = store.recommendations;
  if (!recs) return;
  if (recs.note) {
    host.appendChild(el('div', 'rec-note', recs.note));
  }
  for (const candidate of recs.candidates) {
    const card = el('div', 'rec-card');
    card.appendChild(el('div', 'rec-title', describeChart(candidate.chart)));
    card.appendChild(el('div', 'rec-gain', `gain ${candidate.gain.toFixed(3)}`));
    const add = el('button', 'rec-add', 'add');
    add.addEventListener('click', () => {
      void store.edit({ op: 'add_chart', chart: candidate.chart });
    });
    card.appendChild(add);
    const preview = el('div', 'rec-preview');
    card.appendChild(preview);
    void renderChart(preview, candidate.render_spec);
    host.appendChild(card);
  }
}

// ---------------------------------------------------------------------------
// wiring

export function boot(): void {
  const input = byId('csv-input') as HTMLInputElement;
  input.addEventListener('change', () => {
    const file = input.files?.[0];
    if (file) void handleUpload(file);
  });
  byId('export-svg').addEventListener('click', () => {
    const svg = exportSvg(byId('canvas'));
    const blob = new Blob([svg], { type: 'image/svg+xml' });
    const a = el('a') as HTMLAnchorElement;
    a.href = URL.createObjectURL(blob);
    a.download = 'dashboard.svg';
    a.click();
  });
  store.subscribe(() => {
    if (store.current) {
      void renderCanvas(store.current);
      void renderEditor();
      const score = byId('score');
      const b = store.current.breakdown;
      score.textContent =
        `cr ${b.cr.toFixed(3)} · diversity ${(b.dr_chart_types + b.dr_columns).toFixed(2)} ` +
        `· parsimony ${b.pr.toFixed(2)} · insights ${b.insight_sum}`;
    }
    renderRecommendations();
  });
}

if (typeof document !== 'undefined' && document.getElementById('csv-input')) {
  boot();
}
