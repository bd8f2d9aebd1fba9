"""Regenerate frontend test fixtures from the engine.

Writes:
  frontend/tests/fixtures/diff_pairs.json    20 scripted dashboard pairs with
                                             their server-computed diffs
  frontend/tests/fixtures/chart_space.json   the valid chart-form space for
                                             the weather dataset (per key),
                                             as head-name tuples

Usage: python scripts/make_frontend_fixtures.py
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from dashrl.charts import AGGREGATES, MARKS
from dashrl.data import load_dataset
from dashrl.env import DashboardEnv, NONE_SLOT, sample_masked_uniform
from dashrl.generation import diff_dashboards

ROOT = Path(__file__).parent.parent
OUT = ROOT / "frontend" / "tests" / "fixtures"
NONE_OPTION = "__none__"


def tuple_to_form(dataset, t):
    cols = [c.name for c in dataset.visible_columns]
    mark_i, yf, ya, ka, color, limit = t
    return {
        "mark": MARKS[mark_i],
        "y_field": NONE_OPTION if yf == NONE_SLOT else cols[yf],
        "y_aggregate": AGGREGATES[ya],
        "key_aggregate": AGGREGATES[ka],
        "color_field": NONE_OPTION if color == NONE_SLOT else cols[color],
        "limit": ("none", "top", "bottom")[limit],
    }


def main() -> None:
    OUT.mkdir(parents=True, exist_ok=True)
    weather = load_dataset(ROOT / "data" / "seattle-weather.csv")
    rng = np.random.default_rng(515)
    env = DashboardEnv(weather)

    # 20 scripted topic pairs: random masked episodes from shared prefixes
    pairs = []
    while len(pairs) < 20:
        key = weather.column_names[len(pairs) % 6]
        env.reset(seed_key=key)
        done = False
        while not done:
            done = env.step(sample_masked_uniform(env.masks(), rng)).done
        a = env.state
        env.reset(seed_key=key)
        done = False
        while not done:
            done = env.step(sample_masked_uniform(env.masks(), rng)).done
        b = env.state
        diff = diff_dashboards(a, b, weather)
        pairs.append(
            {
                "a": a.to_dict(),
                "b": b.to_dict(),
                "diff": diff.to_dict(),
            }
        )
    (OUT / "diff_pairs.json").write_text(json.dumps(pairs, indent=1, sort_keys=True))

    # the valid chart space per key, in UI form values
    space = {}
    for key in weather.column_names:
        env.reset(seed_key=key)
        masks = env.masks()
        space[key] = [tuple_to_form(weather, t) for t in masks.space.iter_tuples()]
    (OUT / "chart_space.json").write_text(json.dumps(space, indent=1, sort_keys=True))
    print(f"wrote {OUT / 'diff_pairs.json'} ({len(pairs)} pairs)")
    print(f"wrote {OUT / 'chart_space.json'} ({sum(len(v) for v in space.values())} charts)")


if __name__ == "__main__":
    main()
