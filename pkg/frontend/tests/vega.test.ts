import { afterEach, describe, expect, it } from 'vitest';

import { renderChart, setEmbedder } from '../src/vega';

/** Minimal element stand-in; enough DOM surface for renderChart. */
class FakeElement {
  children: FakeElement[] = [];
  className = '';
  textContent = '';
  ownerDocument = {
    createElement: () => new FakeElement(),
  };
  replaceChildren(): void {
    this.children = [];
  }
  appendChild(child: FakeElement): FakeElement {
    this.children.push(child);
    return child;
  }
}

afterEach(() => setEmbedder(null));

describe('chart rendering', () => {
  it('delegates to the embedder on success', async () => {
    const seen: object[] = [];
    setEmbedder(async (_el, spec) => {
      seen.push(spec);
    });
    const el = new FakeElement() as unknown as HTMLElement;
    const outcome = await renderChart(el, { mark: 'point' });
    expect(outcome.ok).toBe(true);
    expect(seen).toEqual([{ mark: 'point' }]);
  });

  it('replaces failed cells with an error placeholder, never a blank page', async () => {
    setEmbedder(async () => {
      throw new Error('bad spec');
    });
    const el = new FakeElement();
    const outcome = await renderChart(el as unknown as HTMLElement, {});
    expect(outcome.ok).toBe(false);
    expect(el.children.length).toBe(1);
    expect(el.children[0].className).toBe('chart-error');
    expect(el.children[0].textContent).toContain('bad spec');
  });
});
