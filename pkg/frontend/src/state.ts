/**
 * Client session store.
 *
 * Mirrors the server state (no client-side scoring); every committed edit
 * triggers exactly one recommendation refresh, and a newer edit supersedes
 * any in-flight refresh so at most one recommend call is outstanding.
 */

import type { DashRlClient } from './api';
import type {
  ChartDto,
  DashboardPayload,
  DiffDto,
  RecommendPayload,
} from './types';

type Listener = (store: SessionStore) => void;

export class SessionStore {
  current: DashboardPayload | null = null;
  recommendations: RecommendPayload | null = null;
  lastDiff: DiffDto | null = null;
  recommendInFlight = 0;
  recommendCalls = 0;

  private listeners: Listener[] = [];
  private recommendEpoch = 0;

  constructor(
    private client: DashRlClient,
    public recommendSteps = 200,
  ) {}

  subscribe(listener: Listener): () => void {
    this.listeners.push(listener);
    return () => {
      this.listeners = this.listeners.filter((l) => l !== listener);
    };
  }

  private notify(): void {
    for (const listener of this.listeners) {
      listener(this);
    }
  }

  get sessionId(): string {
    const id = this.current?.session_id;
    if (!id) {
      throw new Error('no active session');
    }
    return id;
  }

  async open(datasetId: string, opts: { dashboardId?: string; keyColumn?: string } = {}) {
    this.current = await this.client.createSession(datasetId, opts);
    this.lastDiff = null;
    this.notify();
    await this.refreshRecommendations();
  }

  async resume(sessionId: string) {
    this.current = await this.client.session(sessionId);
    this.lastDiff = null;
    this.notify();
    await this.refreshRecommendations();
  }

  /** Apply an edit; the server response replaces the local state. */
  async edit(
    op:
      | { op: 'add_chart'; chart: ChartDto }
      | { op: 'remove_chart'; index: number }
      | { op: 'modify_chart'; index: number; chart: ChartDto }
      | { op: 'change_key'; key_column: string },
  ): Promise<void> {
    const updated = await this.client.edit(this.sessionId, op);
    this.current = updated;
    this.lastDiff = updated.diff ?? null;
    this.notify();
    await this.refreshRecommendations();
  }

  /**
   * Refresh the recommendation strip. Each call advances an epoch; a
   * response is dropped when a newer refresh started after it.
   */
  async refreshRecommendations(): Promise<void> {
    const epoch = ++this.recommendEpoch;
    this.recommendCalls += 1;
    this.recommendInFlight += 1;
    try {
      const payload = await this.client.recommend(this.sessionId, this.recommendSteps);
      if (epoch === this.recommendEpoch) {
        this.recommendations = payload;
        this.notify();
      }
    } finally {
      this.recommendInFlight -= 1;
    }
  }
}
