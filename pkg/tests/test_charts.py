import json
from datetime import datetime
from pathlib import Path

import numpy as np
import pandas as pd
import pytest

from dashrl.charts import (
    ChartSpec,
    DashboardState,
    Encoding,
    Limit,
    apply_transform,
    compute_field_features,
    substitute_key_column,
    to_render_spec,
    validate_chart,
    validate_chart_for_key,
)
from dashrl.data import UnknownColumnError
from dashrl.stats import compute_column_features, feature_slot

from .conftest import make_dataset

GOLDEN_DIR = Path(__file__).parent / "golden"


def bar(x, y, color=None, limit=None):
    return ChartSpec(mark="bar", x=x, y=y, color=color, limit=limit)


# ---------------------------------------------------------------------------
# validity grammar


def test_fig5_style_bar_is_valid(cars):
    # horizontal bar: mean horsepower per origin
    spec = bar(Encoding("Horsepower", "mean"), Encoding("Origin"))
    assert validate_chart(spec, cars) == []
    assert validate_chart_for_key(spec, cars, "Horsepower") == []


def test_mean_aggregate_on_nominal_is_violation(cars):
    spec = bar(Encoding("Horsepower", "mean"), Encoding("Origin", "mean"))
    violations = validate_chart(spec, cars)
    assert any("aggregate mean requires quantitative" in v for v in violations)


def test_line_nominal_both_axes_two_violations(cars):
    spec = ChartSpec(mark="line", x=Encoding("Origin"), y=Encoding("Name"))
    violations = validate_chart(spec, cars)
    assert len([v for v in violations if v.startswith(("line x", "line y"))]) == 2


def test_unknown_column_is_structural_error(cars):
    spec = bar(Encoding("Nope", "mean"), Encoding("Origin"))
    with pytest.raises(UnknownColumnError):
        validate_chart(spec, cars)


def test_histogram_form_is_valid(cars):
    spec = bar(Encoding("Horsepower", "bin"), Encoding("Horsepower", "count"))
    assert validate_chart_for_key(spec, cars, "Horsepower") == []


def test_count_must_mirror_category(cars):
    spec = bar(Encoding("Origin"), Encoding("Weight_in_lbs", "count"))
    assert any("mirror" in v for v in validate_chart(spec, cars))


def test_same_column_both_axes_rejected(cars):
    spec = ChartSpec(
        mark="point", x=Encoding("Horsepower"), y=Encoding("Horsepower")
    )
    assert any("distinct columns" in v for v in validate_chart(spec, cars))


def test_boxplot_orientation(cars):
    good = ChartSpec(mark="boxplot", x=Encoding("Origin"), y=Encoding("Horsepower"))
    assert validate_chart(good, cars) == []
    flipped = ChartSpec(mark="boxplot", x=Encoding("Horsepower"), y=Encoding("Origin"))
    assert validate_chart(flipped, cars) != []


def test_color_rules(cars):
    base = ChartSpec(
        mark="point",
        x=Encoding("Horsepower"),
        y=Encoding("Weight_in_lbs"),
        color=Encoding("Origin"),
    )
    assert validate_chart(base, cars) == []
    # high-cardinality nominal rejected (Name is unique per row)
    bad = ChartSpec(
        mark="point",
        x=Encoding("Horsepower"),
        y=Encoding("Weight_in_lbs"),
        color=Encoding("Name"),
    )
    assert any("categories" in v for v in validate_chart(bad, cars))
    quantitative = ChartSpec(
        mark="point",
        x=Encoding("Horsepower"),
        y=Encoding("Weight_in_lbs"),
        color=Encoding("Acceleration"),
    )
    assert any("nominal" in v for v in validate_chart(quantitative, cars))


def test_high_cardinality_bar_needs_limit(movies):
    # Director has > 50 distinct values in the bundled movies data
    plain = bar(Encoding("Director"), Encoding("US Gross", "mean"))
    assert any("limit" in v for v in validate_chart(plain, movies))
    limited = bar(
        Encoding("Director"),
        Encoding("US Gross", "mean"),
        limit=Limit(direction="top"),
    )
    assert validate_chart(limited, movies) == []


def test_limit_only_on_nominal_bars(cars):
    line = ChartSpec(
        mark="line",
        x=Encoding("Year"),
        y=Encoding("Horsepower", "mean"),
        limit=Limit(direction="top"),
    )
    assert any("bar" in v for v in validate_chart(line, cars))


def test_key_must_appear_exactly_once(cars):
    spec = ChartSpec(mark="point", x=Encoding("Weight_in_lbs"), y=Encoding("Acceleration"))
    assert validate_chart(spec, cars) == []
    assert any(
        "key column" in v for v in validate_chart_for_key(spec, cars, "Horsepower")
    )


def test_key_anchors_to_x_for_points(cars):
    spec = ChartSpec(mark="point", x=Encoding("Weight_in_lbs"), y=Encoding("Horsepower"))
    assert any(
        "x axis" in v for v in validate_chart_for_key(spec, cars, "Horsepower")
    )
    flipped = ChartSpec(
        mark="point", x=Encoding("Horsepower"), y=Encoding("Weight_in_lbs")
    )
    assert validate_chart_for_key(flipped, cars, "Horsepower") == []


def test_temporal_line_allows_key_on_y(cars):
    spec = ChartSpec(mark="line", x=Encoding("Year"), y=Encoding("Horsepower", "mean"))
    assert validate_chart_for_key(spec, cars, "Horsepower") == []


# ---------------------------------------------------------------------------
# transforms


def _df(dataset, columns):
    cols = {}
    for c in columns:
        cols[c] = list(dataset.column(c).values)
    return pd.DataFrame(cols)


def test_group_mean_matches_pandas(movies):
    spec = bar(Encoding("US Gross", "mean"), Encoding("Major Genre"))
    rows = apply_transform(movies, spec)
    df = _df(movies, ["US Gross", "Major Genre"]).dropna()
    expected = df.groupby("Major Genre")["US Gross"].mean().sort_index()
    got = {r["y"]: r["x"] for r in rows}
    assert sorted(got) == list(expected.index)
    for genre, mean in expected.items():
        assert got[genre] == pytest.approx(mean)


def test_identity_transform_returns_raw_pairs(cars):
    spec = ChartSpec(mark="point", x=Encoding("Horsepower"), y=Encoding("Weight_in_lbs"))
    rows = apply_transform(cars, spec)
    df = _df(cars, ["Horsepower", "Weight_in_lbs"]).dropna()
    assert len(rows) == len(df)
    expected = sorted(zip(df["Horsepower"], df["Weight_in_lbs"]))
    assert [(r["x"], r["y"]) for r in rows] == [
        (pytest.approx(a), pytest.approx(b)) for a, b in expected
    ]


def test_top5_limit_with_sort_oracle():
    ds = make_dataset(
        {
            "g": [f"g{i}" for i in range(10) for _ in range(3)],
            "v": [float(i * 10 + j) for i in range(10) for j in range(3)],
        }
    )
    spec = bar(
        Encoding("g"), Encoding("v", "mean"), limit=Limit(direction="top", k=5)
    )
    rows = apply_transform(ds, spec)
    df = pd.DataFrame({"g": ds.column("g").values, "v": ds.column("v").values})
    oracle = df.groupby("g")["v"].mean().sort_values(ascending=False).head(5)
    assert len(rows) == 5
    assert [r["x"] for r in rows] == list(oracle.index)
    values = [r["y"] for r in rows]
    assert values == sorted(values, reverse=True)


def test_bottom_limit_ascending():
    ds = make_dataset(
        {"g": [f"g{i}" for i in range(10)], "v": [float(i) for i in range(10)]}
    )
    spec = bar(
        Encoding("g"), Encoding("v", "mean"), limit=Limit(direction="bottom", k=5)
    )
    rows = apply_transform(ds, spec)
    assert [r["x"] for r in rows] == ["g0", "g1", "g2", "g3", "g4"]


def test_histogram_counts_match_numpy(cars):
    spec = bar(Encoding("Horsepower", "bin"), Encoding("Horsepower", "count"))
    rows = apply_transform(cars, spec)
    values = np.array([v for v in cars.column("Horsepower").values if v is not None])
    edges = np.linspace(values.min(), values.max(), 11)
    counts, _ = np.histogram(values, bins=edges)
    got = {round(r["x"], 6): r["y"] for r in rows}
    mids = (edges[:-1] + edges[1:]) / 2
    for mid, count in zip(mids, counts):
        if count:
            assert got[round(float(mid), 6)] == count


def test_temporal_group_sorted_chronologically(weather):
    spec = ChartSpec(
        mark="line", x=Encoding("date"), y=Encoding("wind", "mean")
    )
    rows = apply_transform(weather, spec)
    dates = [r["x"] for r in rows]
    assert dates == sorted(dates)
    assert isinstance(dates[0], datetime)


def test_color_dimension_groups(weather):
    spec = bar(
        Encoding("weather"), Encoding("wind", "mean"), color=None
    )
    plain = apply_transform(weather, spec)
    df = _df(weather, ["weather", "wind"]).dropna()
    assert len(plain) == df["weather"].nunique()


# ---------------------------------------------------------------------------
# field features


def test_identity_field_features_equal_column_features(cars, movies, weather):
    for ds in (cars, movies, weather):
        for col in ds.columns:
            f = compute_field_features(ds, Encoding(col.name))
            assert np.array_equal(f, compute_column_features(col))


def test_grouped_mean_cardinality_matches_group_count(movies):
    f = compute_field_features(
        movies, Encoding("US Gross", "mean"), [Encoding("Major Genre")]
    )
    df = _df(movies, ["US Gross", "Major Genre"]).dropna()
    n_genres = df["Major Genre"].nunique()
    means = df.groupby("Major Genre")["US Gross"].mean()
    assert f[feature_slot("cardinality")] == pytest.approx(np.log1p(means.nunique()))
    assert f[feature_slot("row_count")] == pytest.approx(np.log1p(n_genres))


def test_single_group_mean():
    ds = make_dataset({"g": ["a", "a"], "v": [2.0, 4.0]})
    f = compute_field_features(ds, Encoding("v", "mean"), [Encoding("g")])
    assert f[feature_slot("cardinality")] == pytest.approx(np.log1p(1))
    assert f[feature_slot("mean")] == pytest.approx(np.log1p(3.0))


def test_empty_transform_yields_zero_vector():
    ds = make_dataset({"a": [None, None, None], "b": [1.0, 2.0, 3.0]})
    f = compute_field_features(ds, Encoding("b", "mean"), [Encoding("a")])
    assert not f.any()


# ---------------------------------------------------------------------------
# key substitution


def test_substitute_empty_dashboard(cars):
    state = DashboardState(key_column="Horsepower")
    result = substitute_key_column(state, "Weight_in_lbs", cars)
    assert result.ok and result.state.key_column == "Weight_in_lbs"


def test_substitute_type_preserving(cars):
    chart = ChartSpec(
        mark="point", x=Encoding("Horsepower"), y=Encoding("Acceleration")
    )
    state = DashboardState(key_column="Horsepower", charts=(chart,))
    result = substitute_key_column(state, "Weight_in_lbs", cars)
    assert result.ok
    assert result.state.charts[0].x.column == "Weight_in_lbs"


def test_substitute_refusal_names_chart(cars):
    # line over time keyed on a quantitative axis; nominal key breaks it
    chart = ChartSpec(mark="line", x=Encoding("Year"), y=Encoding("Horsepower", "mean"))
    ok_chart = ChartSpec(
        mark="bar", x=Encoding("Horsepower", "mean"), y=Encoding("Origin")
    )
    state = DashboardState(key_column="Horsepower", charts=(chart, ok_chart))
    assert validate_chart_for_key(chart, cars, "Horsepower") == []
    result = substitute_key_column(state, "Name", cars)
    assert not result.ok
    assert result.failing_charts == (0, 1)
    result2 = substitute_key_column(state, "Weight_in_lbs", cars)
    assert result2.ok


def test_substitute_round_trip(cars):
    chart = ChartSpec(
        mark="point", x=Encoding("Horsepower"), y=Encoding("Acceleration")
    )
    state = DashboardState(key_column="Horsepower", charts=(chart,))
    there = substitute_key_column(state, "Weight_in_lbs", cars)
    back = substitute_key_column(there.state, "Horsepower", cars)
    assert back.ok and back.state == state


def test_substitute_same_key_rejected(cars):
    state = DashboardState(key_column="Horsepower")
    with pytest.raises(ValueError):
        substitute_key_column(state, "Horsepower", cars)


# ---------------------------------------------------------------------------
# render specs


def canon(doc):
    return json.dumps(doc, sort_keys=True, indent=1)


@pytest.fixture(scope="module")
def schema():
    import dashrl

    path = Path(dashrl.__file__).parent / "schemas" / "render_spec.schema.json"
    return json.loads(path.read_text())


def validate_schema(doc, schema):
    import jsonschema

    jsonschema.validate(doc, schema)


def test_point_spec_structure(cars, schema):
    spec = ChartSpec(mark="point", x=Encoding("Horsepower"), y=Encoding("Weight_in_lbs"))
    doc = to_render_spec(spec, cars, dataset_ref="cars")
    assert doc["mark"] == "point"
    assert doc["encoding"]["x"] == {"field": "Horsepower", "type": "quantitative"}
    assert doc["encoding"]["y"] == {"field": "Weight_in_lbs", "type": "quantitative"}
    validate_schema(doc, schema)


def test_histogram_spec(cars, schema):
    spec = bar(Encoding("Horsepower", "bin"), Encoding("Horsepower", "count"))
    doc = to_render_spec(spec, cars, dataset_ref="cars")
    assert doc["encoding"]["x"]["bin"] is True
    assert doc["encoding"]["y"] == {"aggregate": "count", "type": "quantitative"}
    validate_schema(doc, schema)


def test_color_channel_nominal(cars, schema):
    spec = ChartSpec(
        mark="point",
        x=Encoding("Horsepower"),
        y=Encoding("Weight_in_lbs"),
        color=Encoding("Origin"),
    )
    doc = to_render_spec(spec, cars, dataset_ref="cars")
    assert doc["encoding"]["color"] == {"field": "Origin", "type": "nominal"}
    validate_schema(doc, schema)


def test_topk_emits_window_filter(movies, schema):
    spec = bar(
        Encoding("US Gross", "mean"),
        Encoding("Director"),
        limit=Limit(direction="top"),
    )
    assert validate_chart(spec, movies) == []
    doc = to_render_spec(spec, movies, dataset_ref="movies")
    ops = [list(t)[0] for t in doc["transform"]]
    assert ops == ["aggregate", "window", "filter"]
    assert doc["transform"][2]["filter"] == "datum._rank <= 10"
    validate_schema(doc, schema)


def test_inline_data_self_contained(cars, schema):
    spec = ChartSpec(mark="boxplot", x=Encoding("Origin"), y=Encoding("Horsepower"))
    doc = to_render_spec(spec, cars)
    assert doc["mark"] == {"type": "boxplot", "extent": 1.5}
    assert len(doc["data"]["values"]) > 0
    assert set(doc["data"]["values"][0]) == {"Origin", "Horsepower"}
    validate_schema(doc, schema)


def test_golden_specs(cars, movies):
    cases = {
        "point_cars.json": to_render_spec(
            ChartSpec(mark="point", x=Encoding("Horsepower"), y=Encoding("Weight_in_lbs")),
            cars,
            dataset_ref="cars",
        ),
        "histogram_cars.json": to_render_spec(
            bar(Encoding("Horsepower", "bin"), Encoding("Horsepower", "count")),
            cars,
            dataset_ref="cars",
        ),
        "topk_movies.json": to_render_spec(
            bar(
                Encoding("US Gross", "mean"),
                Encoding("Director"),
                limit=Limit(direction="top"),
            ),
            movies,
            dataset_ref="movies",
        ),
    }
    for name, doc in cases.items():
        path = GOLDEN_DIR / name
        assert path.exists(), f"golden file {name} missing"
        assert canon(doc) == path.read_text().rstrip("\n")
