/**
 * Tooltip content equals the engine's diff output for the scripted pairs.
 */

import { describe, expect, it } from 'vitest';

import { buildTooltip, describeChart, describeInsight, tooltipLines } from '../src/diff';
import type { ChartDto, DiffDto, InsightDto } from '../src/types';
import diffPairs from './fixtures/diff_pairs.json';

interface Pair {
  a: { key_column: string; charts: ChartDto[] };
  b: { key_column: string; charts: ChartDto[] };
  diff: DiffDto;
}

const PAIRS = diffPairs as unknown as Pair[];

describe('diff tooltip', () => {
  it('covers 20 scripted pairs', () => {
    expect(PAIRS.length).toBe(20);
  });

  it('renders the server diff verbatim for every scripted pair', () => {
    for (const pair of PAIRS) {
      const model = buildTooltip(pair.diff);
      expect(model.addedCharts).toEqual(pair.diff.added_charts.map(describeChart));
      expect(model.removedCharts).toEqual(pair.diff.removed_charts.map(describeChart));
      expect(model.gainedInsights).toEqual(
        pair.diff.gained_insights.map(describeInsight),
      );
      expect(model.lostInsights).toEqual(pair.diff.lost_insights.map(describeInsight));
      const lines = tooltipLines(model);
      const expectedCount =
        pair.diff.added_charts.length +
        pair.diff.removed_charts.length +
        pair.diff.gained_insights.length +
        pair.diff.lost_insights.length;
      expect(lines.length).toBe(Math.max(1, expectedCount));
    }
  });

  it('diff content is consistent with the states it came from', () => {
    const key = (c: ChartDto) => JSON.stringify(c);
    for (const pair of PAIRS) {
      const aSet = new Set(pair.a.charts.map(key));
      const bSet = new Set(pair.b.charts.map(key));
      for (const added of pair.diff.added_charts) {
        expect(bSet.has(key(added))).toBe(true);
        expect(aSet.has(key(added))).toBe(false);
      }
      for (const removed of pair.diff.removed_charts) {
        expect(aSet.has(key(removed))).toBe(true);
        expect(bSet.has(key(removed))).toBe(false);
      }
    }
  });

  it('empty diff renders the no-change line', () => {
    const empty: DiffDto = {
      added_charts: [],
      removed_charts: [],
      gained_insights: [],
      lost_insights: [],
    };
    expect(tooltipLines(buildTooltip(empty))).toEqual(['no changes']);
  });

  it('chart descriptions show aggregates and limits', () => {
    const chart: ChartDto = {
      mark: 'bar',
      x: { column: 'wind', aggregate: 'mean' },
      y: { column: 'weather' },
      limit: { direction: 'top', k: 10 },
    };
    expect(describeChart(chart)).toBe('bar: mean(wind) × weather [top 10]');
    const insight: InsightDto = {
      kind: 'comparison',
      columns: ['weather', 'wind'],
      chart_indices: [0, 1],
      value: 1,
      reward_weight: 3,
    };
    expect(describeInsight(insight)).toBe('comparison(weather, wind)');
  });
});
