/**
 * Chart rendering through a Vega-Lite runtime, with per-cell error
 * placeholders: a spec that fails to render must never blank the page.
 */

export type Embedder = (el: HTMLElement, spec: object) => Promise<unknown>;

let customEmbedder: Embedder | null = null;

/** Tests and alternative runtimes can inject their own embedder. */
export function setEmbedder(embedder: Embedder | null): void {
  customEmbedder = embedder;
}

async function resolveEmbedder(): Promise<Embedder> {
  if (customEmbedder) {
    return customEmbedder;
  }
  const mod = await import('vega-embed');
  const embed = (mod.default ?? mod) as unknown as (
    el: HTMLElement,
    spec: object,
    opts?: object,
  ) => Promise<unknown>;
  return (el, spec) => embed(el, spec, { actions: false });
}

export interface RenderOutcome {
  ok: boolean;
  error?: string;
}

export async function renderChart(el: HTMLElement, spec: object): Promise<RenderOutcome> {
  try {
    const embed = await resolveEmbedder();
    await embed(el, spec);
    return { ok: true };
  } catch (err) {
    el.replaceChildren();
    const placeholder = el.ownerDocument.createElement('div');
    placeholder.className = 'chart-error';
    placeholder.textContent = `chart failed to render: ${String(err)}`;
    el.appendChild(placeholder);
    return { ok: false, error: String(err) };
  }
}

/** Export the rendered dashboard canvas as a standalone SVG document. */
export function exportSvg(canvas: HTMLElement): string {
  const svgs = Array.from(canvas.querySelectorAll('svg'));
  const width = canvas.scrollWidth || 1200;
  const height = canvas.scrollHeight || 800;
  const parts = svgs.map((svg) => {
    const rect = svg.getBoundingClientRect();
    const host = canvas.getBoundingClientRect();
    const x = rect.left - host.left;
    const y = rect.top - host.top;
    return `<g transform="translate(${x},${y})">${svg.innerHTML}</g>`;
  });
  return (
    `<svg xmlns="http://www.w3.org/2000/svg" width="${width}" height="${height}">` +
    parts.join('') +
    '</svg>'
  );
}
