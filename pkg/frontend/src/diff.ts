/**
 * Diff tooltip content: a verbatim rendering of the server's dashboard diff.
 */

import type { ChartDto, DiffDto, InsightDto } from './types';

export interface TooltipModel {
  addedCharts: string[];
  removedCharts: string[];
  gainedInsights: string[];
  lostInsights: string[];
  empty: boolean;
}

export function describeChart(chart: ChartDto): string {
  const enc = (e: { column: string; aggregate?: string }) =>
    e.aggregate && e.aggregate !== 'none' ? `${e.aggregate}(${e.column})` : e.column;
  let text = `${chart.mark}: ${enc(chart.x)} × ${enc(chart.y)}`;
  if (chart.color) {
    text += ` by ${chart.color.column}`;
  }
  if (chart.limit) {
    text += ` [${chart.limit.direction} ${chart.limit.k}]`;
  }
  return text;
}

export function describeInsight(insight: InsightDto): string {
  return `${insight.kind}(${insight.columns.join(', ')})`;
}

/** Build the tooltip payload from a server diff, verbatim and in order. */
export function buildTooltip(diff: DiffDto): TooltipModel {
  const addedCharts = diff.added_charts.map(describeChart);
  const removedCharts = diff.removed_charts.map(describeChart);
  const gainedInsights = diff.gained_insights.map(describeInsight);
  const lostInsights = diff.lost_insights.map(describeInsight);
  return {
    addedCharts,
    removedCharts,
    gainedInsights,
    lostInsights,
    empty:
      addedCharts.length === 0 &&
      removedCharts.length === 0 &&
      gainedInsights.length === 0 &&
      lostInsights.length === 0,
  };
}

export function tooltipLines(model: TooltipModel): string[] {
  if (model.empty) {
    return ['no changes'];
  }
  const lines: string[] = [];
  for (const c of model.addedCharts) lines.push(`+ ${c}`);
  for (const c of model.removedCharts) lines.push(`− ${c}`);
  for (const i of model.gainedInsights) lines.push(`★ gained ${i}`);
  for (const i of model.lostInsights) lines.push(`☆ lost ${i}`);
  return lines;
}
