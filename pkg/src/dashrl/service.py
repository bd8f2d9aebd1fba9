"""HTTP+JSON API over the generation engine.

Storage layout under the data directory:

    datasets/{id}/source.csv + profile.json     uploaded datasets
    datasets/{id}/topics.json                   latest generation results
    dashboards/{id}.json                        generated dashboard payloads
    sessions/{id}.json                          editing sessions

Sessions and datasets survive restarts; generation jobs run on a small
thread pool and are polled by id.
"""

from __future__ import annotations

import json
import logging
import threading
import uuid
from collections import defaultdict
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

from fastapi import Body, FastAPI, HTTPException, Query, Request
from fastapi.responses import JSONResponse

from .charts import (
    ChartSpec,
    DashboardState,
    substitute_key_column,
    to_render_spec,
    validate_chart_for_key,
)
from .config import EnvConfig, RewardConfig
from .data import (
    DataLoadError,
    Dataset,
    UnknownColumnError,
    load_dataset,
    open_dataset,
    save_dataset,
)
from .env import (
    ACTIONS,
    ADD_HEADS,
    DUMMY,
    HEAD_NAMES,
    NONE_SLOT,
    ActionMasks,
    build_chart_from_tuple,
)
from .generation import diff_dashboards, generate, recommend
from .insights import detect_dashboard_insights
from .layout import layout
from .net import NetworkParams
from .rewards import score_dashboard

log = logging.getLogger(__name__)

NONE_OPTION = "__none__"


@dataclass
class Job:
    id: str
    dataset_id: str
    status: str = "pending"  # pending | running | done | error
    error: str | None = None
    quota: int = 1000

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "dataset_id": self.dataset_id,
            "status": self.status,
            "error": self.error,
            "quota": self.quota,
        }


class Store:
    """Filesystem persistence plus in-memory caches and per-session locks."""

    def __init__(self, data_dir: Path):
        self.root = Path(data_dir)
        (self.root / "datasets").mkdir(parents=True, exist_ok=True)
        (self.root / "dashboards").mkdir(parents=True, exist_ok=True)
        (self.root / "sessions").mkdir(parents=True, exist_ok=True)
        self._datasets: dict[str, Dataset] = {}
        self._session_locks: dict[str, threading.Lock] = defaultdict(threading.Lock)

    # datasets -------------------------------------------------------------

    def add_dataset(self, text: str, name: str) -> Dataset:
        ds = load_dataset(text, name=name)
        save_dataset(ds, self.root / "datasets" / ds.dataset_id)
        self._datasets[ds.dataset_id] = ds
        return ds

    def dataset(self, dataset_id: str) -> Dataset:
        if dataset_id not in self._datasets:
            path = self.root / "datasets" / dataset_id
            if not (path / "profile.json").exists():
                raise KeyError(dataset_id)
            self._datasets[dataset_id] = open_dataset(path)
        return self._datasets[dataset_id]

    def dataset_ids(self) -> list[str]:
        return sorted(
            p.name
            for p in (self.root / "datasets").iterdir()
            if (p / "profile.json").exists()
        )

    # dashboards -----------------------------------------------------------

    def save_dashboard(self, payload: dict) -> None:
        path = self.root / "dashboards" / f"{payload['id']}.json"
        path.write_text(json.dumps(payload, sort_keys=True))

    def dashboard(self, dashboard_id: str) -> dict:
        path = self.root / "dashboards" / f"{dashboard_id}.json"
        if not path.exists():
            raise KeyError(dashboard_id)
        return json.loads(path.read_text())

    def save_topics(self, dataset_id: str, payload: dict) -> None:
        path = self.root / "datasets" / dataset_id / "topics.json"
        path.write_text(json.dumps(payload, sort_keys=True))

    def topics(self, dataset_id: str) -> dict | None:
        path = self.root / "datasets" / dataset_id / "topics.json"
        return json.loads(path.read_text()) if path.exists() else None

    # sessions ---------------------------------------------------------------

    def session_lock(self, session_id: str) -> threading.Lock:
        return self._session_locks[session_id]

    def save_session(self, session: dict) -> None:
        path = self.root / "sessions" / f"{session['id']}.json"
        path.write_text(json.dumps(session, sort_keys=True))

    def session(self, session_id: str) -> dict:
        path = self.root / "sessions" / f"{session_id}.json"
        if not path.exists():
            raise KeyError(session_id)
        return json.loads(path.read_text())


def _dashboard_payload(
    dashboard_id: str,
    dataset: Dataset,
    state: DashboardState,
    episode_return: float | None = None,
    reward_config: RewardConfig = RewardConfig(),
) -> dict:
    insights = detect_dashboard_insights(state, dataset, reward_config)
    breakdown = score_dashboard(state, dataset, reward_config, insights=insights)
    placed = layout(state, insights, dataset)
    return {
        "id": dashboard_id,
        "dataset_id": dataset.dataset_id,
        "state": state.to_dict(),
        "layout": placed.to_dict(),
        "render_specs": [to_render_spec(c, dataset) for c in state.charts],
        "breakdown": breakdown.to_dict(),
        "insights": [r.to_dict() for r in insights],
        "episode_return": episode_return,
    }


def _column_option(dataset: Dataset, index: int) -> str:
    return dataset.visible_columns[index].name


def _head_option_name(dataset: Dataset, head: int, option: int) -> str:
    from .charts import AGGREGATES, MARKS

    name = HEAD_NAMES[head]
    if name == "mark":
        return MARKS[option]
    if name in ("y_field", "color_field"):
        return NONE_OPTION if option == NONE_SLOT else _column_option(dataset, option)
    if name in ("y_aggregate", "key_aggregate"):
        return AGGREGATES[option]
    if name == "limit":
        return ("none", "top", "bottom")[option]
    raise ValueError(name)


def _head_option_index(dataset: Dataset, head: int, value: str) -> int | None:
    from .charts import AGGREGATES, MARKS

    name = HEAD_NAMES[head]
    if name == "mark":
        return MARKS.index(value) if value in MARKS else None
    if name in ("y_field", "color_field"):
        if value == NONE_OPTION:
            return NONE_SLOT
        names = [c.name for c in dataset.visible_columns]
        return names.index(value) if value in names else None
    if name in ("y_aggregate", "key_aggregate"):
        return AGGREGATES.index(value) if value in AGGREGATES else None
    if name == "limit":
        opts = ("none", "top", "bottom")
        return opts.index(value) if value in opts else None
    return None


def create_app(
    data_dir: str | Path,
    checkpoint: str | Path | None = None,
    seed: int = 0,
    env_config: EnvConfig = EnvConfig(),
    reward_config: RewardConfig = RewardConfig(),
    job_workers: int = 2,
) -> FastAPI:
    store = Store(Path(data_dir))
    params = NetworkParams.load(checkpoint) if checkpoint else None
    if params is None:
        log.warning("service starting without trained parameters")
    app = FastAPI(title="dashrl", version="0.1.0")
    app.state.store = store
    app.state.params = params
    jobs: dict[str, Job] = {}
    pool = ThreadPoolExecutor(max_workers=job_workers)

    def get_dataset(dataset_id: str) -> Dataset:
        try:
            return store.dataset(dataset_id)
        except KeyError:
            raise HTTPException(404, f"dataset {dataset_id} not found")

    @app.exception_handler(DataLoadError)
    async def _load_error(request: Request, exc: DataLoadError):
        return JSONResponse(status_code=422, content={"detail": str(exc)})

    # -- datasets ----------------------------------------------------------

    @app.post("/datasets")
    async def upload_dataset(request: Request, name: str = Query("dataset")):
        text = (await request.body()).decode("utf-8")
        ds = store.add_dataset(text, name=name)
        return {
            "id": ds.dataset_id,
            "name": ds.name,
            "n_rows": ds.n_rows,
            "truncated": ds.truncated,
            "columns": [
                {"name": c.name, "type": c.ctype, "missing_ratio": c.missing_ratio}
                for c in ds.columns
            ],
        }

    @app.get("/datasets")
    def list_datasets():
        out = []
        for ds_id in store.dataset_ids():
            ds = store.dataset(ds_id)
            out.append({"id": ds_id, "name": ds.name, "n_rows": ds.n_rows})
        return {"datasets": out}

    @app.get("/datasets/{dataset_id}")
    def dataset_info(dataset_id: str):
        ds = get_dataset(dataset_id)
        return {
            "id": ds.dataset_id,
            "name": ds.name,
            "n_rows": ds.n_rows,
            "truncated": ds.truncated,
            "columns": [
                {"name": c.name, "type": c.ctype, "missing_ratio": c.missing_ratio}
                for c in ds.columns
            ],
        }

    @app.get("/datasets/{dataset_id}/rows")
    def dataset_rows(dataset_id: str, limit: int = Query(50, ge=1, le=1000)):
        ds = get_dataset(dataset_id)
        rows = []
        for i in range(min(limit, ds.n_rows)):
            row = {}
            for col in ds.columns:
                v = col.values[i]
                row[col.name] = v.isoformat() if hasattr(v, "isoformat") else v
            rows.append(row)
        return {"rows": rows, "total": ds.n_rows}

    # -- generation jobs -----------------------------------------------------

    def run_generation(job: Job) -> None:
        job.status = "running"
        try:
            ds = store.dataset(job.dataset_id)
            topics = generate(
                ds,
                app.state.params,
                quota=job.quota,
                seed=seed,
                env_config=env_config,
                reward_config=reward_config,
            )
            payload = {"dataset_id": ds.dataset_id, "topics": []}
            for topic in topics:
                entry = {"key_column": topic.key_column, "dashboards": []}
                for dash in topic.dashboards:
                    dash_id = uuid.uuid4().hex[:12]
                    store.save_dashboard(
                        _dashboard_payload(
                            dash_id,
                            ds,
                            dash.state,
                            episode_return=dash.episode_return,
                            reward_config=reward_config,
                        )
                    )
                    entry["dashboards"].append(
                        {
                            "id": dash_id,
                            "return": dash.episode_return,
                            "n_charts": len(dash.state.charts),
                            "marks": sorted({c.mark for c in dash.state.charts}),
                        }
                    )
                payload["topics"].append(entry)
            store.save_topics(ds.dataset_id, payload)
            job.status = "done"
        except Exception as exc:  # surfaces through the job API
            log.exception("generation job %s failed", job.id)
            job.status = "error"
            job.error = str(exc)

    @app.post("/datasets/{dataset_id}/generate")
    def start_generation(dataset_id: str, quota: int = Query(1000, ge=1)):
        get_dataset(dataset_id)
        job = Job(id=uuid.uuid4().hex[:12], dataset_id=dataset_id, quota=quota)
        jobs[job.id] = job
        pool.submit(run_generation, job)
        return {"job_id": job.id}

    @app.get("/jobs/{job_id}")
    def job_status(job_id: str):
        if job_id not in jobs:
            raise HTTPException(404, f"job {job_id} not found")
        return jobs[job_id].to_dict()

    @app.get("/datasets/{dataset_id}/topics")
    def dataset_topics(dataset_id: str):
        get_dataset(dataset_id)
        payload = store.topics(dataset_id)
        if payload is None:
            return {"dataset_id": dataset_id, "topics": []}
        return payload

    @app.get("/dashboards/{dashboard_id}")
    def dashboard(dashboard_id: str):
        try:
            return store.dashboard(dashboard_id)
        except KeyError:
            raise HTTPException(404, f"dashboard {dashboard_id} not found")

    # -- sessions ------------------------------------------------------------

    def session_payload(session: dict, diff: dict | None = None) -> dict:
        ds = store.dataset(session["dataset_id"])
        state = DashboardState.from_dict(session["state"])
        body = _dashboard_payload(
            session["id"], ds, state, reward_config=reward_config
        )
        body.update(
            {
                "session_id": session["id"],
                "dataset_id": session["dataset_id"],
                "history_length": len(session.get("history", [])),
            }
        )
        if diff is not None:
            body["diff"] = diff
        return body

    @app.post("/sessions")
    def create_session(body: dict = Body(...)):
        dataset_id = body.get("dataset_id")
        if not dataset_id:
            raise HTTPException(422, "dataset_id required")
        ds = get_dataset(dataset_id)
        if body.get("dashboard_id"):
            try:
                dash = store.dashboard(body["dashboard_id"])
            except KeyError:
                raise HTTPException(404, "dashboard not found")
            state = DashboardState.from_dict(dash["state"])
        else:
            key = body.get("key_column") or ds.visible_columns[0].name
            try:
                ds.column(key)
            except UnknownColumnError:
                raise HTTPException(422, f"unknown key column {key}")
            state = DashboardState(key_column=key)
        session = {
            "id": uuid.uuid4().hex[:12],
            "dataset_id": dataset_id,
            "state": state.to_dict(),
            "history": [],
        }
        store.save_session(session)
        return session_payload(session)

    @app.get("/sessions/{session_id}")
    def get_session(session_id: str):
        try:
            session = store.session(session_id)
        except KeyError:
            raise HTTPException(404, f"session {session_id} not found")
        return session_payload(session)

    @app.post("/sessions/{session_id}/edit")
    def edit_session(session_id: str, body: dict = Body(...)):
        with store.session_lock(session_id):
            try:
                session = store.session(session_id)
            except KeyError:
                raise HTTPException(404, f"session {session_id} not found")
            ds = store.dataset(session["dataset_id"])
            state = DashboardState.from_dict(session["state"])
            op = body.get("op")
            if op == "add_chart":
                chart = _parse_chart(body)
                problems = validate_chart_for_key(chart, ds, state.key_column)
                if problems:
                    raise HTTPException(422, {"violations": problems})
                if chart in state.charts:
                    raise HTTPException(422, {"violations": ["chart already present"]})
                if len(state.charts) >= env_config.n_max:
                    raise HTTPException(422, {"violations": ["dashboard is full"]})
                new_state = state.with_charts(state.charts + (chart,))
            elif op == "remove_chart":
                idx = _chart_index(body, state)
                new_state = state.with_charts(
                    state.charts[:idx] + state.charts[idx + 1 :]
                )
            elif op == "modify_chart":
                idx = _chart_index(body, state)
                chart = _parse_chart(body)
                problems = validate_chart_for_key(chart, ds, state.key_column)
                if problems:
                    raise HTTPException(422, {"violations": problems})
                others = state.charts[:idx] + state.charts[idx + 1 :]
                if chart in others:
                    raise HTTPException(422, {"violations": ["chart already present"]})
                charts = list(state.charts)
                charts[idx] = chart
                new_state = state.with_charts(charts)
            elif op == "change_key":
                new_key = body.get("key_column")
                if not new_key:
                    raise HTTPException(422, "key_column required")
                try:
                    result = substitute_key_column(state, new_key, ds)
                except (UnknownColumnError, ValueError) as exc:
                    raise HTTPException(422, str(exc))
                if not result.ok:
                    raise HTTPException(
                        422,
                        {
                            "violations": [
                                f"chart {i} cannot take the new key"
                                for i in result.failing_charts
                            ]
                        },
                    )
                new_state = result.state
            else:
                raise HTTPException(422, f"unknown op {op!r}")
            diff = diff_dashboards(state, new_state, ds, reward_config)
            session["history"].append(session["state"])
            session["state"] = new_state.to_dict()
            store.save_session(session)
            return session_payload(session, diff=diff.to_dict())

    @app.post("/sessions/{session_id}/recommend")
    def recommend_for_session(session_id: str, steps: int = Query(200, ge=1)):
        try:
            session = store.session(session_id)
        except KeyError:
            raise HTTPException(404, f"session {session_id} not found")
        ds = store.dataset(session["dataset_id"])
        state = DashboardState.from_dict(session["state"])
        result = recommend(
            ds,
            state,
            app.state.params,
            steps=steps,
            seed=seed,
            env_config=env_config,
            reward_config=reward_config,
        )
        return {
            "note": result.note,
            "candidates": [
                {
                    **c.to_dict(),
                    "render_spec": to_render_spec(c.chart, ds),
                }
                for c in result.candidates
            ],
        }

    @app.post("/sessions/{session_id}/options")
    def chart_options(session_id: str, body: dict = Body(default={})):
        """Valid chart-form options given the picks made so far.

        Picks condition later heads only when they form a prefix of the
        head order (mark, y_field, y_aggregate, key_aggregate, color_field,
        limit); the UI form follows that order.
        """
        try:
            session = store.session(session_id)
        except KeyError:
            raise HTTPException(404, f"session {session_id} not found")
        ds = store.dataset(session["dataset_id"])
        state = DashboardState.from_dict(session["state"])
        masks = ActionMasks(ds, state, env_config)
        partial = body.get("partial", {})
        selections = [DUMMY] * len(HEAD_NAMES)
        options: dict[str, list[str]] = {}
        prefix_intact = True
        prefix: list[int] = []
        for head in ADD_HEADS:
            head_name = HEAD_NAMES[head]
            if prefix_intact:
                mask = masks.head_mask(head, selections)
                allowed = [
                    _head_option_name(ds, head, int(i))
                    for i in mask.nonzero()[0]
                ]
            else:
                allowed = sorted(
                    {
                        _head_option_name(ds, head, t[ADD_HEADS.index(head)])
                        for t in masks.space.iter_tuples()
                        if tuple(t[: len(prefix)]) == tuple(prefix)
                        and t not in masks.existing
                    }
                )
            options[head_name] = allowed
            picked = partial.get(head_name)
            if prefix_intact and picked is not None:
                idx = _head_option_index(ds, head, picked)
                if idx is None or picked not in allowed:
                    raise HTTPException(422, f"invalid pick for {head_name}: {picked}")
                selections[head] = idx
                prefix.append(idx)
            elif picked is None:
                prefix_intact = False
        body_out: dict = {"options": options, "key_column": state.key_column}
        if len(prefix) == len(ADD_HEADS):
            chart = build_chart_from_tuple(ds, state.key_column, *prefix)
            body_out["complete"] = chart is not None
            if chart is not None:
                body_out["chart"] = chart.to_dict()
        else:
            body_out["complete"] = False
        return body_out

    return app


def _parse_chart(body: dict) -> ChartSpec:
    try:
        return ChartSpec.from_dict(body["chart"])
    except (KeyError, TypeError, ValueError) as exc:
        raise HTTPException(422, f"malformed chart: {exc}")


def _chart_index(body: dict, state: DashboardState) -> int:
    idx = body.get("index")
    if not isinstance(idx, int) or not 0 <= idx < len(state.charts):
        raise HTTPException(422, f"chart index {idx!r} out of range")
    return idx
