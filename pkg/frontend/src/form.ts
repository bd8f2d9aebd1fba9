/**
 * Mask-driven chart editor form.
 *
 * Fields follow the server's head order; a pick invalidates every later
 * field, and each field only ever offers the options the server listed for
 * the current prefix. A chart can only be submitted once the server has
 * confirmed the completed prefix and returned the materialized chart, so the
 * form cannot produce anything the grammar rejects.
 */

import type { ChartDto, ChartForm, FormField, OptionsPayload } from './types';
import { FORM_FIELDS } from './types';

export type OptionsSource = (partial: Partial<ChartForm>) => Promise<OptionsPayload>;

export interface FormSnapshot {
  picks: Partial<ChartForm>;
  options: Record<FormField, string[]>;
  complete: boolean;
  chart: ChartDto | null;
}

export class ChartFormModel {
  private picks: Partial<ChartForm> = {};
  private options: Record<FormField, string[]> = {
    mark: [],
    y_field: [],
    y_aggregate: [],
    key_aggregate: [],
    color_field: [],
    limit: [],
  };
  private chart: ChartDto | null = null;
  private complete = false;

  constructor(private source: OptionsSource) {}

  async refresh(): Promise<FormSnapshot> {
    const payload = await this.source(this.picks);
    this.options = payload.options;
    this.complete = payload.complete && !!payload.chart;
    this.chart = payload.chart ?? null;
    return this.snapshot();
  }

  /** The fields a user may interact with right now, in order. */
  nextField(): FormField | null {
    for (const field of FORM_FIELDS) {
      if (this.picks[field] === undefined) {
        return field;
      }
    }
    return null;
  }

  enabledOptions(field: FormField): string[] {
    return this.options[field] ?? [];
  }

  isEnabled(field: FormField, value: string): boolean {
    return this.enabledOptions(field).includes(value);
  }

  /**
   * Pick a value. Throws on disabled options (the UI never renders them as
   * clickable); clears any later picks so the prefix stays consistent.
   */
  async pick(field: FormField, value: string): Promise<FormSnapshot> {
    if (!this.isEnabled(field, value)) {
      throw new Error(`option ${value} is disabled for ${field}`);
    }
    const order = FORM_FIELDS.indexOf(field);
    for (const other of FORM_FIELDS.slice(order + 1)) {
      delete this.picks[other];
    }
    this.picks[field] = value;
    return this.refresh();
  }

  async reset(): Promise<FormSnapshot> {
    this.picks = {};
    this.chart = null;
    this.complete = false;
    return this.refresh();
  }

  /** The server-materialized chart, available only when the form is complete. */
  completedChart(): ChartDto | null {
    return this.complete ? this.chart : null;
  }

  snapshot(): FormSnapshot {
    return {
      picks: { ...this.picks },
      options: { ...this.options },
      complete: this.complete,
      chart: this.chart,
    };
  }
}
