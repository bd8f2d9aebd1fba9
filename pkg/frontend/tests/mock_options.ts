/**
 * Options source backed by the engine-exported chart space fixture: mirrors
 * the server's prefix-union semantics over the list of valid charts.
 */

import type { ChartForm, FormField, OptionsPayload } from '../src/types';
import { FORM_FIELDS } from '../src/types';

export function formKey(form: ChartForm): string {
  return FORM_FIELDS.map((f) => form[f]).join('|');
}

export class FixtureOptionsSource {
  private valid: Set<string>;

  constructor(private space: ChartForm[], private keyColumn: string) {
    this.valid = new Set(space.map(formKey));
  }

  isValid(form: ChartForm): boolean {
    return this.valid.has(formKey(form));
  }

  async options(partial: Partial<ChartForm>): Promise<OptionsPayload> {
    // condition only on the contiguous picked prefix, like the server: the
    // options for field i depend on picks for fields strictly before i
    const prefix: [FormField, string][] = [];
    for (const field of FORM_FIELDS) {
      const value = partial[field];
      if (value === undefined) break;
      prefix.push([field, value]);
    }
    const options = {} as Record<FormField, string[]>;
    for (const field of FORM_FIELDS) {
      const idx = FORM_FIELDS.indexOf(field);
      const applied = prefix.slice(0, Math.min(idx, prefix.length));
      const conditioned = this.space.filter((form) =>
        applied.every(([f, v]) => form[f] === v),
      );
      options[field] = [...new Set(conditioned.map((form) => form[field]))].sort();
    }
    const complete = prefix.length === FORM_FIELDS.length;
    const form = complete ? (Object.fromEntries(prefix) as unknown as ChartForm) : null;
    const ok = form !== null && this.isValid(form);
    return {
      options,
      key_column: this.keyColumn,
      complete: ok,
      chart: ok
        ? {
            mark: form!.mark as never,
            x: { column: this.keyColumn },
            y: { column: form!.y_field },
          }
        : undefined,
    };
  }
}
