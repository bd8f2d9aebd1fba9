"""The dashboard-construction MDP: transitions, masks, and episode control.

The agent's composite decision is factored into nine classification heads.
For ``add`` decisions the set of valid parameter tuples is enumerated once
per (dataset, key column) and cached; per-head masks are then prefix queries
against that table, so any unmasked path always extends to a valid chart.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field, replace
from typing import Iterator, Sequence

import numpy as np

from .charts import (
    AGGREGATES,
    MARKS,
    ChartSpec,
    DashboardState,
    Encoding,
    Limit,
    rewrite_key,
    key_reference_channels,
    substitute_key_column,
    validate_chart_for_key,
    validate_state,
)
from .config import MAX_CHARTS, MAX_CONTEXT_COLUMNS, EnvConfig, RewardConfig
from .data import NOMINAL, TEMPORAL, Dataset
from .rewards import (
    EMPTY_BREAKDOWN,
    RewardBreakdown,
    score_dashboard,
    with_immediate,
)

ACTIONS = ("change", "add", "remove", "terminate")
HEAD_NAMES = (
    "action",
    "key_column",
    "remove_index",
    "mark",
    "y_field",
    "y_aggregate",
    "key_aggregate",
    "color_field",
    "limit",
)
ACTION, KEY_COLUMN, REMOVE_INDEX, MARK, Y_FIELD, Y_AGG, KEY_AGG, COLOR_FIELD, LIMIT = (
    range(9)
)
ADD_HEADS = (MARK, Y_FIELD, Y_AGG, KEY_AGG, COLOR_FIELD, LIMIT)

ACTIVE_HEADS = {
    "change": (ACTION, KEY_COLUMN),
    "add": (ACTION,) + ADD_HEADS,
    "remove": (ACTION, REMOVE_INDEX),
    "terminate": (ACTION,),
}

#: Index meaning "no column" on the y-field and color heads.
NONE_SLOT = MAX_CONTEXT_COLUMNS

HEAD_ARITIES = (
    len(ACTIONS),
    MAX_CONTEXT_COLUMNS,
    MAX_CHARTS,
    len(MARKS),
    MAX_CONTEXT_COLUMNS + 1,
    len(AGGREGATES),
    len(AGGREGATES),
    MAX_CONTEXT_COLUMNS + 1,
    3,
)

LIMIT_OPTIONS = ("none", "top", "bottom")
DUMMY = -1

_COUNT_AGG = AGGREGATES.index("count")


class MaskViolation(RuntimeError):
    """A decision contradicted its masks; this is a caller bug."""


class InvalidStateError(ValueError):
    """A provided start state does not validate against the dataset."""


@dataclass(frozen=True)
class ActionDecision:
    """One composite agent decision.

    ``choices`` has one entry per head; heads inactive for the chosen action
    carry DUMMY. ``masks`` records the boolean mask each active head was
    sampled under (None for inactive heads) so the loss can rebuild the exact
    distributions.
    """

    action: str
    choices: tuple[int, ...]
    per_head_log_prob: tuple[float, ...] = (0.0,) * len(HEAD_NAMES)
    joint_log_prob: float = 0.0
    masks: tuple = (None,) * len(HEAD_NAMES)

    @property
    def key_column_choice(self) -> int:
        return self.choices[KEY_COLUMN]

    @property
    def remove_index(self) -> int:
        return self.choices[REMOVE_INDEX]

    @property
    def add_tuple(self) -> tuple[int, ...]:
        return tuple(self.choices[h] for h in ADD_HEADS)

    def to_dict(self) -> dict:
        return {
            "action": self.action,
            "choices": dict(zip(HEAD_NAMES, self.choices)),
            "joint_log_prob": self.joint_log_prob,
        }


def make_decision(action: str, **heads: int) -> ActionDecision:
    """Convenience constructor used by tests and the service layer."""
    if action not in ACTIONS:
        raise ValueError(f"unknown action: {action}")
    choices = [DUMMY] * len(HEAD_NAMES)
    choices[ACTION] = ACTIONS.index(action)
    for name, value in heads.items():
        choices[HEAD_NAMES.index(name)] = value
    for h in ACTIVE_HEADS[action]:
        if choices[h] == DUMMY:
            raise ValueError(f"action {action} needs head {HEAD_NAMES[h]}")
    return ActionDecision(action=action, choices=tuple(choices))


@dataclass(frozen=True)
class StepResult:
    state: DashboardState
    reward: float
    done: bool
    breakdown: RewardBreakdown


# ---------------------------------------------------------------------------
# Chart <-> parameter-tuple correspondence


def build_chart_from_tuple(
    dataset: Dataset,
    key: str,
    mark_i: int,
    yf_i: int,
    ya_i: int,
    ka_i: int,
    color_i: int,
    limit_i: int,
) -> ChartSpec | None:
    """Materialize head selections into a chart; None when incoherent.

    Placement is canonical: the key sits on x unless the mark's type rules
    pull the explanation column there (temporal axes on lines, the nominal
    axis of boxplots).
    """
    cols = dataset.visible_columns
    mark = MARKS[mark_i]
    key_enc = Encoding(key, AGGREGATES[ka_i])
    if yf_i == NONE_SLOT:
        if ya_i != _COUNT_AGG:
            return None
        x, y = key_enc, Encoding(key, "count")
    else:
        if yf_i >= len(cols):
            return None
        yf = cols[yf_i].name
        if yf == key:
            return None
        expl = Encoding(yf, AGGREGATES[ya_i])
        x, y = key_enc, expl
        if mark == "boxplot":
            if dataset.ctype(key) != NOMINAL and dataset.ctype(yf) == NOMINAL:
                x, y = expl, key_enc
        elif mark == "line":
            if dataset.ctype(key) != TEMPORAL and dataset.ctype(yf) == TEMPORAL:
                x, y = expl, key_enc
    color = None
    if color_i != NONE_SLOT:
        if color_i >= len(cols):
            return None
        color = Encoding(cols[color_i].name, "none")
    limit = None
    if LIMIT_OPTIONS[limit_i] != "none":
        limit = Limit(direction=LIMIT_OPTIONS[limit_i])
    try:
        return ChartSpec(mark=mark, x=x, y=y, color=color, limit=limit)
    except ValueError:
        return None


def chart_to_tuple(
    spec: ChartSpec, dataset: Dataset, key: str
) -> tuple[int, ...] | None:
    """Inverse of build_chart_from_tuple for charts valid under ``key``."""
    col_index = {c.name: i for i, c in enumerate(dataset.visible_columns)}
    refs = key_reference_channels(spec, key)
    if len(refs) != 1:
        return None
    key_enc = spec.channels[refs[0]]
    other = spec.y if refs[0] == "x" else spec.x
    ka_i = AGGREGATES.index(key_enc.aggregate)
    if other.aggregate == "count" and other.column == key:
        yf_i, ya_i = NONE_SLOT, _COUNT_AGG
    else:
        if other.column not in col_index:
            return None
        yf_i = col_index[other.column]
        ya_i = AGGREGATES.index(other.aggregate)
    if spec.color is None:
        color_i = NONE_SLOT
    elif spec.color.column in col_index:
        color_i = col_index[spec.color.column]
    else:
        return None
    limit_i = 0 if spec.limit is None else LIMIT_OPTIONS.index(spec.limit.direction)
    return (MARKS.index(spec.mark), yf_i, ya_i, ka_i, color_i, limit_i)


# ---------------------------------------------------------------------------
# Enumerated add space


@dataclass(frozen=True)
class _Leaf:
    """Valid color/limit completions of one (mark, y_field, y_agg, key_agg)."""

    colors: tuple[int, ...]  # options when limit is none (always includes NONE_SLOT)
    ranked: tuple[int, ...]  # top/bottom limit option indices (need color = none)
    plain: bool  # whether limit none is permitted

    @property
    def count(self) -> int:
        return (len(self.colors) if self.plain else 0) + len(self.ranked)


class AddSpace:
    """All valid chart parameter tuples for one (dataset, key column)."""

    def __init__(self, dataset: Dataset, key: str):
        self.dataset = dataset
        self.key = key
        self.tree: dict[int, dict[int, dict[int, dict[int, _Leaf]]]] = {}
        self._build()
        self._counts: dict[tuple, int] = {}
        self._index_counts((), self.tree, 4)

    @classmethod
    def for_dataset(cls, dataset: Dataset, key: str) -> "AddSpace":
        return dataset.cache(("add_space", key), lambda: cls(dataset, key))

    def _build(self) -> None:
        ds, key = self.dataset, self.key
        n_agg = len(AGGREGATES)
        for mark_i in range(len(MARKS)):
            for yf_i in range(NONE_SLOT + 1):
                for ya_i, ka_i in itertools.product(range(n_agg), repeat=2):
                    core = build_chart_from_tuple(
                        ds, key, mark_i, yf_i, ya_i, ka_i, NONE_SLOT, 0
                    )
                    if core is None:
                        continue
                    leaf = self._leaf_for(core)
                    if leaf is None or leaf.count == 0:
                        continue
                    (
                        self.tree.setdefault(mark_i, {})
                        .setdefault(yf_i, {})
                        .setdefault(ya_i, {})
                    )[ka_i] = leaf

    def _leaf_for(self, core: ChartSpec) -> _Leaf | None:
        ds, key = self.dataset, self.key
        plain = not validate_chart_for_key(core, ds, key)
        ranked: tuple[int, ...] = ()
        top = replace(core, limit=Limit(direction="top"))
        if not validate_chart_for_key(top, ds, key):
            ranked = (1, 2)
        if not plain and not ranked:
            return None
        colors = [NONE_SLOT]
        if plain:
            for i, col in enumerate(ds.visible_columns):
                colored = replace(core, color=Encoding(col.name, "none"))
                if not validate_chart_for_key(colored, ds, key):
                    colors.append(i)
        return _Leaf(colors=tuple(sorted(colors)), ranked=ranked, plain=plain)

    def _index_counts(self, prefix: tuple, node, depth: int) -> int:
        total = (
            node.count
            if depth == 0
            else sum(
                self._index_counts(prefix + (part,), child, depth - 1)
                for part, child in node.items()
            )
        )
        self._counts[prefix] = total
        return total

    # -- prefix counting -----------------------------------------------------

    def combo_count(self, prefix: tuple[int, ...]) -> int:
        """Number of full tuples extending an add-head prefix."""
        if len(prefix) <= 4:
            return self._counts.get(tuple(prefix), 0)
        node = self.tree
        for part in prefix[:4]:
            if part not in node:
                return 0
            node = node[part]
        leaf: _Leaf = node
        color = prefix[4]
        if len(prefix) == 5:
            if color == NONE_SLOT:
                return (1 if leaf.plain else 0) + len(leaf.ranked)
            return 1 if (leaf.plain and color in leaf.colors) else 0
        limit = prefix[5]
        if limit == 0:
            return 1 if (leaf.plain and color in leaf.colors) else 0
        return 1 if (color == NONE_SLOT and limit in leaf.ranked) else 0

    def child_options(self, prefix: tuple[int, ...]) -> tuple[int, ...]:
        node = self.tree
        for part in prefix[:4]:
            if part not in node:
                return ()
            node = node[part]
        if len(prefix) < 4:
            return tuple(sorted(node.keys()))
        leaf: _Leaf = node
        if len(prefix) == 4:
            return leaf.colors if leaf.plain else (NONE_SLOT,)
        color = prefix[4]
        opts = []
        if leaf.plain and color in leaf.colors:
            opts.append(0)
        if color == NONE_SLOT:
            opts.extend(leaf.ranked)
        return tuple(opts)

    def iter_tuples(self) -> Iterator[tuple[int, ...]]:
        for m, yfs in sorted(self.tree.items()):
            for yf, yas in sorted(yfs.items()):
                for ya, kas in sorted(yas.items()):
                    for ka, leaf in sorted(kas.items()):
                        if leaf.plain:
                            for c in leaf.colors:
                                yield (m, yf, ya, ka, c, 0)
                        for l in leaf.ranked:
                            yield (m, yf, ya, ka, NONE_SLOT, l)

    def total(self) -> int:
        return self._counts.get((), 0)


# ---------------------------------------------------------------------------
# Masks


class ActionMasks:
    """Per-head boolean masks, conditioned on earlier head selections."""

    def __init__(
        self,
        dataset: Dataset,
        state: DashboardState,
        config: EnvConfig = EnvConfig(),
    ):
        self.dataset = dataset
        self.state = state
        self.config = config
        self.structural_only = config.allow_invalid
        self.space = AddSpace.for_dataset(dataset, state.key_column)
        self.existing = []
        for chart in state.charts:
            t = chart_to_tuple(chart, dataset, state.key_column)
            if t is not None:
                self.existing.append(t)
        self._default: list[np.ndarray] | None = None

    # -- helpers -------------------------------------------------------------

    def _chart_accepts_key(self, chart, new_key: str) -> bool:
        """Chart-level substitution validity, memoized per (chart, old, new)."""
        ds, key = self.dataset, self.state.key_column
        return ds.cache(
            ("chart_subst", chart, key, new_key),
            lambda: not validate_chart_for_key(
                rewrite_key(chart, key, new_key), ds, new_key
            ),
        )

    def _substitution_targets(self) -> tuple[int, ...]:
        ds, state = self.dataset, self.state
        out = []
        for i, col in enumerate(ds.visible_columns):
            if col.name == state.key_column:
                continue
            if self.structural_only:
                out.append(i)
                continue
            if all(self._chart_accepts_key(c, col.name) for c in state.charts):
                out.append(i)
        return tuple(out)

    def _remaining(self, prefix: tuple[int, ...]) -> int:
        total = self.space.combo_count(prefix)
        if not total:
            return 0
        used = sum(1 for t in self.existing if t[: len(prefix)] == prefix)
        return total - used

    def _add_available(self) -> bool:
        if len(self.state.charts) >= self.config.n_max:
            return False
        if self.structural_only:
            return True
        return self._remaining(()) > 0

    # -- public --------------------------------------------------------------

    def head_mask(self, head: int, selections: Sequence[int]) -> np.ndarray:
        mask = np.zeros(HEAD_ARITIES[head], dtype=bool)
        n_cols = len(self.dataset.visible_columns)
        if head == ACTION:
            mask[ACTIONS.index("change")] = bool(self._substitution_targets())
            mask[ACTIONS.index("add")] = self._add_available()
            mask[ACTIONS.index("remove")] = len(self.state.charts) > 0
            mask[ACTIONS.index("terminate")] = True
            return mask
        if head == KEY_COLUMN:
            mask[list(self._substitution_targets())] = True
            return mask
        if head == REMOVE_INDEX:
            mask[: len(self.state.charts)] = True
            return mask
        # add-parameter heads
        if self.structural_only:
            return self._structural_add_mask(head, n_cols)
        prefix = tuple(selections[h] for h in ADD_HEADS[: head - MARK])
        for opt in self.space.child_options(prefix):
            if self._remaining(prefix + (opt,)) > 0:
                mask[opt] = True
        return mask

    def _structural_add_mask(self, head: int, n_cols: int) -> np.ndarray:
        mask = np.zeros(HEAD_ARITIES[head], dtype=bool)
        if head == MARK:
            mask[:] = True
        elif head in (Y_FIELD, COLOR_FIELD):
            mask[:n_cols] = True
            mask[NONE_SLOT] = True
        elif head in (Y_AGG, KEY_AGG):
            mask[:] = True
        elif head == LIMIT:
            mask[:] = True
        return mask

    def default_masks(self) -> list[np.ndarray]:
        """Unconditioned per-head masks (prefix-free unions for add heads)."""
        if self._default is None:
            sel = [DUMMY] * len(HEAD_NAMES)
            out = []
            for head in range(len(HEAD_NAMES)):
                if head in ADD_HEADS and not self.structural_only:
                    mask = np.zeros(HEAD_ARITIES[head], dtype=bool)
                    pos = ADD_HEADS.index(head)
                    for t in self.space.iter_tuples():
                        mask[t[pos]] = True
                    out.append(mask)
                else:
                    out.append(self.head_mask(head, sel))
            self._default = out
        return self._default

    def enumerate_add_charts(self) -> list[ChartSpec]:
        """Every chart an add decision could currently produce."""
        charts = []
        existing = set(self.existing)
        for t in self.space.iter_tuples():
            if t in existing:
                continue
            chart = build_chart_from_tuple(
                self.dataset, self.state.key_column, *t
            )
            if chart is not None:
                charts.append(chart)
        return charts


def sample_masked_uniform(
    masks: ActionMasks, rng: np.random.Generator
) -> ActionDecision:
    """Uniform random decision over the masked space (no network involved)."""
    selections = [DUMMY] * len(HEAD_NAMES)
    log_probs = [0.0] * len(HEAD_NAMES)
    stored: list = [None] * len(HEAD_NAMES)
    action_mask = masks.head_mask(ACTION, selections)
    options = np.flatnonzero(action_mask)
    choice = int(options[rng.integers(len(options))])
    selections[ACTION] = choice
    log_probs[ACTION] = -float(np.log(len(options)))
    stored[ACTION] = tuple(action_mask.tolist())
    action = ACTIONS[choice]
    for head in ACTIVE_HEADS[action][1:]:
        mask = masks.head_mask(head, selections)
        options = np.flatnonzero(mask)
        if len(options) == 0:
            raise MaskViolation(
                f"no options left on head {HEAD_NAMES[head]} for action {action}"
            )
        pick = int(options[rng.integers(len(options))])
        selections[head] = pick
        log_probs[head] = -float(np.log(len(options)))
        stored[head] = tuple(mask.tolist())
    return ActionDecision(
        action=action,
        choices=tuple(selections),
        per_head_log_prob=tuple(log_probs),
        joint_log_prob=float(sum(log_probs)),
        masks=tuple(stored),
    )


# ---------------------------------------------------------------------------
# Environment


class DashboardEnv:
    """One agent's private environment over an immutable dataset."""

    def __init__(
        self,
        dataset: Dataset,
        config: EnvConfig = EnvConfig(),
        reward_config: RewardConfig = RewardConfig(),
        key_rotation_start: int = 0,
    ):
        self.dataset = dataset
        self.config = config
        self.reward_config = reward_config
        self._rotation = key_rotation_start
        self.state: DashboardState | None = None
        self.breakdown: RewardBreakdown = EMPTY_BREAKDOWN
        self.done = False

    def clone(self) -> "DashboardEnv":
        """Cheap copy for rollout branching (shares the immutable dataset)."""
        other = DashboardEnv(
            self.dataset, self.config, self.reward_config, self._rotation
        )
        other.state = self.state
        other.breakdown = self.breakdown
        other.done = self.done
        return other

    def _score(self, state: DashboardState) -> RewardBreakdown:
        return self.dataset.cache(
            ("score", self.reward_config, state.key_column, state.charts),
            lambda: score_dashboard(state, self.dataset, self.reward_config),
        )

    def reset(
        self,
        start: DashboardState | None = None,
        seed_key: str | None = None,
    ) -> DashboardState:
        if start is not None:
            for chart in start.charts:
                for enc in chart.channels.values():
                    self.dataset.column(enc.column)
            self.dataset.column(start.key_column)
            problems = validate_state(start, self.dataset)
            if problems:
                raise InvalidStateError("; ".join(problems))
            if len(start.charts) > self.config.n_max:
                raise InvalidStateError("start state exceeds the chart budget")
            state = replace(start, step=0)
        else:
            if seed_key is not None:
                self.dataset.column(seed_key)
                key = seed_key
            else:
                cols = self.dataset.visible_columns
                key = cols[self._rotation % len(cols)].name
                self._rotation += 1
            state = DashboardState(key_column=key)
        self.state = state
        self.breakdown = self._score(state)
        self.done = False
        return state

    def masks(self, state: DashboardState | None = None) -> ActionMasks:
        target = state if state is not None else self.state
        if target is None:
            raise RuntimeError("environment not reset")
        return ActionMasks(self.dataset, target, self.config)

    # gym-flavoured alias
    action_masks = masks

    def step(self, decision: ActionDecision) -> StepResult:
        if self.state is None:
            raise RuntimeError("environment not reset")
        if self.done:
            raise RuntimeError("episode already finished")
        state = self.state
        masks = self.masks(state)
        invalid_reason = self._check_decision(decision, masks)
        if invalid_reason and not self.config.allow_invalid:
            raise MaskViolation(invalid_reason)

        if invalid_reason:
            new_state = replace(state, step=state.step + 1)
            new_breakdown = replace(self.breakdown, r_immediate=0.0)
            reward = self.config.invalid_penalty
        elif decision.action == "terminate":
            new_state = replace(state, step=state.step + 1)
            new_breakdown = replace(self.breakdown, r_immediate=0.0)
            reward = 0.0
        else:
            new_state = self._transition(state, decision)
            new_state = replace(new_state, step=state.step + 1)
            new_breakdown = with_immediate(self.breakdown, self._score(new_state))
            reward = new_breakdown.r_immediate

        done = decision.action == "terminate" or new_state.step >= self.config.max_steps
        self.state = new_state
        self.breakdown = new_breakdown
        self.done = done
        return StepResult(
            state=new_state, reward=reward, done=done, breakdown=new_breakdown
        )

    # -- internals -----------------------------------------------------------

    def _check_decision(
        self, decision: ActionDecision, masks: ActionMasks
    ) -> str | None:
        """Mask compliance (and, in penalty mode, grammar validity).

        Returns None when the decision is applicable, else a reason string.
        Under strict mode any reason is a contract violation.
        """
        selections = [DUMMY] * len(HEAD_NAMES)
        for head in ACTIVE_HEADS[decision.action]:
            choice = decision.choices[head]
            if not 0 <= choice < HEAD_ARITIES[head]:
                return f"head {HEAD_NAMES[head]}: choice {choice} out of range"
            mask = masks.head_mask(head, selections)
            if not mask[choice]:
                return f"head {HEAD_NAMES[head]}: option {choice} is masked"
            selections[head] = choice
        if decision.action == "add":
            chart = build_chart_from_tuple(
                self.dataset, self.state.key_column, *decision.add_tuple
            )
            if chart is None:
                return "add parameters are incoherent"
            if validate_chart_for_key(chart, self.dataset, self.state.key_column):
                return "configured chart violates the grammar"
            if chart in self.state.charts:
                return "configured chart already present"
            if len(self.state.charts) >= self.config.n_max:
                return "dashboard is full"
        if decision.action == "change":
            col = self.dataset.visible_columns[decision.key_column_choice].name
            if col == self.state.key_column:
                return "new key equals the current key"
            if not substitute_key_column(self.state, col, self.dataset).ok:
                return "substitution breaks existing charts"
        return None

    def _transition(
        self, state: DashboardState, decision: ActionDecision
    ) -> DashboardState:
        if decision.action == "add":
            chart = build_chart_from_tuple(
                self.dataset, state.key_column, *decision.add_tuple
            )
            return state.with_charts(state.charts + (chart,))
        if decision.action == "remove":
            idx = decision.remove_index
            return state.with_charts(
                state.charts[:idx] + state.charts[idx + 1 :]
            )
        if decision.action == "change":
            col = self.dataset.visible_columns[decision.key_column_choice].name
            return substitute_key_column(state, col, self.dataset).state
        raise ValueError(f"no transition for action {decision.action}")
