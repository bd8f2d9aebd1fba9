/**
 * Typed client for the dashrl HTTP API, including generation-job polling.
 */

import type {
  ChartDto,
  ChartForm,
  DashboardPayload,
  DatasetInfo,
  JobInfo,
  OptionsPayload,
  RecommendPayload,
  TopicsPayload,
} from './types';

export class ApiError extends Error {
  constructor(
    public status: number,
    public detail: unknown,
  ) {
    super(`API error ${status}: ${JSON.stringify(detail)}`);
  }
}

async function request<T>(url: string, init?: RequestInit): Promise<T> {
  const resp = await fetch(url, init);
  const body = resp.status === 204 ? null : await resp.json();
  if (!resp.ok) {
    throw new ApiError(resp.status, (body as { detail?: unknown })?.detail ?? body);
  }
  return body as T;
}

export class DashRlClient {
  constructor(private base: string = '') {}

  private url(path: string): string {
    return `${this.base}${path}`;
  }

  async uploadDataset(csvText: string, name: string): Promise<DatasetInfo> {
    return request<DatasetInfo>(
      this.url(`/datasets?name=${encodeURIComponent(name)}`),
      { method: 'POST', body: csvText, headers: { 'Content-Type': 'text/csv' } },
    );
  }

  async datasetInfo(datasetId: string): Promise<DatasetInfo> {
    return request<DatasetInfo>(this.url(`/datasets/${datasetId}`));
  }

  async datasetRows(datasetId: string, limit = 50): Promise<{ rows: object[]; total: number }> {
    return request(this.url(`/datasets/${datasetId}/rows?limit=${limit}`));
  }

  async startGeneration(datasetId: string, quota = 1000): Promise<{ job_id: string }> {
    return request(this.url(`/datasets/${datasetId}/generate?quota=${quota}`), {
      method: 'POST',
    });
  }

  async job(jobId: string): Promise<JobInfo> {
    return request<JobInfo>(this.url(`/jobs/${jobId}`));
  }

  /** Poll a generation job until it finishes; reports each status seen. */
  async pollJob(
    jobId: string,
    onUpdate?: (job: JobInfo) => void,
    intervalMs = 500,
  ): Promise<JobInfo> {
    for (;;) {
      const job = await this.job(jobId);
      onUpdate?.(job);
      if (job.status === 'done' || job.status === 'error') {
        return job;
      }
      await new Promise((resolve) => setTimeout(resolve, intervalMs));
    }
  }

  async topics(datasetId: string): Promise<TopicsPayload> {
    return request<TopicsPayload>(this.url(`/datasets/${datasetId}/topics`));
  }

  async dashboard(dashboardId: string): Promise<DashboardPayload> {
    return request<DashboardPayload>(this.url(`/dashboards/${dashboardId}`));
  }

  async createSession(
    datasetId: string,
    opts: { dashboardId?: string; keyColumn?: string } = {},
  ): Promise<DashboardPayload> {
    return request<DashboardPayload>(this.url('/sessions'), {
      method: 'POST',
      headers: { 'Content-Type': 'application/json' },
      body: JSON.stringify({
        dataset_id: datasetId,
        dashboard_id: opts.dashboardId,
        key_column: opts.keyColumn,
      }),
    });
  }

  async session(sessionId: string): Promise<DashboardPayload> {
    return request<DashboardPayload>(this.url(`/sessions/${sessionId}`));
  }

  async edit(
    sessionId: string,
    op:
      | { op: 'add_chart'; chart: ChartDto }
      | { op: 'remove_chart'; index: number }
      | { op: 'modify_chart'; index: number; chart: ChartDto }
      | { op: 'change_key'; key_column: string },
  ): Promise<DashboardPayload> {
    return request<DashboardPayload>(this.url(`/sessions/${sessionId}/edit`), {
      method: 'POST',
      headers: { 'Content-Type': 'application/json' },
      body: JSON.stringify(op),
    });
  }

  async recommend(sessionId: string, steps = 200): Promise<RecommendPayload> {
    return request<RecommendPayload>(
      this.url(`/sessions/${sessionId}/recommend?steps=${steps}`),
      { method: 'POST' },
    );
  }

  async chartOptions(
    sessionId: string,
    partial: Partial<ChartForm>,
  ): Promise<OptionsPayload> {
    return request<OptionsPayload>(this.url(`/sessions/${sessionId}/options`), {
      method: 'POST',
      headers: { 'Content-Type': 'application/json' },
      body: JSON.stringify({ partial }),
    });
  }
}
