/**
 * Session store contracts: exactly one recommendation refresh per committed
 * edit, and newer refreshes supersede in-flight ones.
 */

import { describe, expect, it } from 'vitest';

import type { DashRlClient } from '../src/api';
import { SessionStore } from '../src/state';
import type { DashboardPayload, RecommendPayload } from '../src/types';

function payload(sessionId: string, nCharts: number): DashboardPayload {
  return {
    id: sessionId,
    dataset_id: 'ds',
    session_id: sessionId,
    state: {
      key_column: 'wind',
      charts: Array.from({ length: nCharts }, (_, i) => ({
        mark: 'point' as const,
        x: { column: 'wind' },
        y: { column: `c${i}` },
      })),
      step: 0,
    },
    layout: { cells: [] },
    render_specs: [],
    breakdown: {
      dr_chart_types: 0, dr_columns: 0, pr: 0, insight_sum: 0, cr: 0, r_immediate: 0,
    },
    insights: [],
    episode_return: null,
  };
}

interface FakeClient {
  recommendResolvers: ((p: RecommendPayload) => void)[];
  editCount: number;
  client: DashRlClient;
  recommendCallCount: () => number;
}

function makeFakeClient(auto = true): FakeClient {
  const resolvers: ((p: RecommendPayload) => void)[] = [];
  let edits = 0;
  let recommends = 0;
  const client = {
    createSession: async () => payload('s1', 0),
    session: async () => payload('s1', 0),
    edit: async () => {
      edits += 1;
      return payload('s1', edits);
    },
    recommend: () => {
      recommends += 1;
      const n = recommends;
      if (auto) {
        return Promise.resolve({ note: `r${n}`, candidates: [] });
      }
      return new Promise<RecommendPayload>((resolve) => {
        resolvers.push((p) => resolve(p));
      });
    },
  } as unknown as DashRlClient;
  return {
    recommendResolvers: resolvers,
    get editCount() {
      return edits;
    },
    client,
    recommendCallCount: () => recommends,
  };
}

describe('session store', () => {
  it('opening a session triggers one recommendation fetch', async () => {
    const fake = makeFakeClient();
    const store = new SessionStore(fake.client);
    await store.open('ds');
    expect(fake.recommendCallCount()).toBe(1);
  });

  it('every committed edit triggers exactly one refresh', async () => {
    const fake = makeFakeClient();
    const store = new SessionStore(fake.client);
    await store.open('ds');
    const before = fake.recommendCallCount();
    await store.edit({ op: 'remove_chart', index: 0 });
    await store.edit({ op: 'change_key', key_column: 'temp_max' });
    await store.edit({ op: 'remove_chart', index: 0 });
    expect(fake.recommendCallCount() - before).toBe(3);
    expect(store.current?.state.charts.length).toBe(3);
  });

  it('a newer edit supersedes an in-flight recommendation', async () => {
    const fake = makeFakeClient(false);
    const store = new SessionStore(fake.client);
    const opening = store.open('ds');
    // resolve the initial fetch so open() completes
    while (fake.recommendResolvers.length < 1) {
      await Promise.resolve();
    }
    fake.recommendResolvers[0]({ note: 'initial', candidates: [] });
    await opening;

    const first = store.edit({ op: 'remove_chart', index: 0 });
    while (fake.recommendResolvers.length < 2) {
      await Promise.resolve();
    }
    const second = store.edit({ op: 'remove_chart', index: 0 });
    while (fake.recommendResolvers.length < 3) {
      await Promise.resolve();
    }
    // stale response arrives after the newer call started: must be dropped
    fake.recommendResolvers[1]({ note: 'stale', candidates: [] });
    fake.recommendResolvers[2]({ note: 'fresh', candidates: [] });
    await Promise.all([first, second]);
    expect(store.recommendations?.note).toBe('fresh');
    expect(store.recommendInFlight).toBe(0);
  });

  it('edit responses carry the server diff verbatim', async () => {
    const diff = {
      added_charts: [{ mark: 'point' as const, x: { column: 'a' }, y: { column: 'b' } }],
      removed_charts: [],
      gained_insights: [],
      lost_insights: [],
    };
    const fake = makeFakeClient();
    const base = fake.client;
    const client = {
      ...base,
      createSession: base.createSession.bind(base),
      edit: async () => ({ ...payload('s1', 1), diff }),
      recommend: base.recommend.bind(base),
    } as unknown as DashRlClient;
    const store = new SessionStore(client);
    await store.open('ds');
    await store.edit({ op: 'remove_chart', index: 0 });
    expect(store.lastDiff).toEqual(diff);
  });
});
