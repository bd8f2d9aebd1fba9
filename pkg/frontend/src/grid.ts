/**
 * Canvas grid geometry: server layout cells -> pixel boxes, plus drag and
 * resize math with locally persisted overrides.
 */

import type { CellDto, LayoutDto } from './types';

export const GRID_COLUMNS = 12;
export const ROW_HEIGHT_PX = 90;
export const GUTTER_PX = 8;

export interface PixelBox {
  left: number;
  top: number;
  width: number;
  height: number;
}

export interface GridGeometry {
  col: number;
  row: number;
  width: number;
  height: number;
}

export type Overrides = Record<string, GridGeometry>;

export function cellKey(cell: CellDto): string {
  return cell.kind === 'chart' ? `chart:${cell.chart_index}` : `text:${cell.text?.column}`;
}

export function toPixels(geo: GridGeometry, canvasWidth: number): PixelBox {
  const colWidth = canvasWidth / GRID_COLUMNS;
  return {
    left: geo.col * colWidth + GUTTER_PX / 2,
    top: geo.row * ROW_HEIGHT_PX + GUTTER_PX / 2,
    width: geo.width * colWidth - GUTTER_PX,
    height: geo.height * ROW_HEIGHT_PX - GUTTER_PX,
  };
}

export function clampGeometry(geo: GridGeometry): GridGeometry {
  const width = Math.max(1, Math.min(GRID_COLUMNS, Math.round(geo.width)));
  const height = Math.max(1, Math.round(geo.height));
  const col = Math.max(0, Math.min(GRID_COLUMNS - width, Math.round(geo.col)));
  const row = Math.max(0, Math.round(geo.row));
  return { col, row, width, height };
}

/** Translate a pointer drag (pixels) into a new grid position. */
export function dragTo(
  start: GridGeometry,
  dxPx: number,
  dyPx: number,
  canvasWidth: number,
): GridGeometry {
  const colWidth = canvasWidth / GRID_COLUMNS;
  return clampGeometry({
    ...start,
    col: start.col + dxPx / colWidth,
    row: start.row + dyPx / ROW_HEIGHT_PX,
  });
}

/** Translate a corner resize (pixels) into a new grid size. */
export function resizeTo(
  start: GridGeometry,
  dwPx: number,
  dhPx: number,
  canvasWidth: number,
): GridGeometry {
  const colWidth = canvasWidth / GRID_COLUMNS;
  return clampGeometry({
    ...start,
    width: start.width + dwPx / colWidth,
    height: start.height + dhPx / ROW_HEIGHT_PX,
  });
}

/** Server layout merged with any locally persisted geometry overrides. */
export function effectiveGeometry(layout: LayoutDto, overrides: Overrides): Map<string, GridGeometry> {
  const out = new Map<string, GridGeometry>();
  for (const cell of layout.cells) {
    const key = cellKey(cell);
    out.set(key, overrides[key] ?? {
      col: cell.col,
      row: cell.row,
      width: cell.width,
      height: cell.height,
    });
  }
  return out;
}

const STORAGE_PREFIX = 'dashrl.grid.';

export function loadOverrides(storage: Pick<Storage, 'getItem'>, dashboardId: string): Overrides {
  try {
    const raw = storage.getItem(STORAGE_PREFIX + dashboardId);
    return raw ? (JSON.parse(raw) as Overrides) : {};
  } catch {
    return {};
  }
}

export function saveOverride(
  storage: Pick<Storage, 'getItem' | 'setItem'>,
  dashboardId: string,
  key: string,
  geo: GridGeometry,
): Overrides {
  const all = loadOverrides(storage, dashboardId);
  all[key] = clampGeometry(geo);
  storage.setItem(STORAGE_PREFIX + dashboardId, JSON.stringify(all));
  return all;
}
