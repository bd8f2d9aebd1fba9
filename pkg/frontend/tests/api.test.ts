import { afterEach, describe, expect, it, vi } from 'vitest';

import { ApiError, DashRlClient } from '../src/api';

function jsonResponse(body: unknown, status = 200): Response {
  return new Response(JSON.stringify(body), {
    status,
    headers: { 'Content-Type': 'application/json' },
  });
}

afterEach(() => {
  vi.unstubAllGlobals();
  vi.useRealTimers();
});

describe('api client', () => {
  it('uploads CSV text and returns dataset info', async () => {
    const fetchMock = vi.fn().mockResolvedValue(
      jsonResponse({ id: 'd1', name: 'w', n_rows: 3, truncated: false, columns: [] }),
    );
    vi.stubGlobal('fetch', fetchMock);
    const client = new DashRlClient('http://api');
    const info = await client.uploadDataset('a,b\n1,2\n', 'w');
    expect(info.id).toBe('d1');
    const [url, init] = fetchMock.mock.calls[0];
    expect(url).toBe('http://api/datasets?name=w');
    expect(init.method).toBe('POST');
    expect(init.body).toBe('a,b\n1,2\n');
  });

  it('maps error payloads to ApiError with detail', async () => {
    vi.stubGlobal(
      'fetch',
      vi.fn().mockImplementation(() =>
        Promise.resolve(jsonResponse({ detail: 'no data rows' }, 422)),
      ),
    );
    const client = new DashRlClient();
    await expect(client.uploadDataset('a,b\n', 'bad')).rejects.toThrowError(ApiError);
    await expect(client.uploadDataset('a,b\n', 'bad')).rejects.toMatchObject({
      status: 422,
      detail: 'no data rows',
    });
  });

  it('polls jobs until terminal state', async () => {
    const states = ['pending', 'running', 'done'];
    let call = 0;
    vi.stubGlobal(
      'fetch',
      vi.fn().mockImplementation(() =>
        Promise.resolve(
          jsonResponse({
            id: 'j1', dataset_id: 'd1', status: states[Math.min(call++, 2)],
            error: null, quota: 100,
          }),
        ),
      ),
    );
    const client = new DashRlClient();
    const seen: string[] = [];
    const job = await client.pollJob('j1', (j) => seen.push(j.status), 1);
    expect(job.status).toBe('done');
    expect(seen).toEqual(['pending', 'running', 'done']);
  });

  it('sends edits as JSON bodies', async () => {
    const fetchMock = vi.fn().mockResolvedValue(jsonResponse({ ok: true }));
    vi.stubGlobal('fetch', fetchMock);
    const client = new DashRlClient();
    await client.edit('s1', { op: 'remove_chart', index: 2 });
    const [url, init] = fetchMock.mock.calls[0];
    expect(url).toBe('/sessions/s1/edit');
    expect(JSON.parse(init.body)).toEqual({ op: 'remove_chart', index: 2 });
  });

  it('passes recommend steps through the query string', async () => {
    const fetchMock = vi.fn().mockResolvedValue(jsonResponse({ note: '', candidates: [] }));
    vi.stubGlobal('fetch', fetchMock);
    const client = new DashRlClient();
    await client.recommend('s1', 321);
    expect(fetchMock.mock.calls[0][0]).toBe('/sessions/s1/recommend?steps=321');
  });
});
