"""Policy/value network: Bi-LSTM encoder, value head, and nine sequential
classification blocks with constrained (masked) sampling.

All gradients are derived by hand against the flat parameter layout; a
finite-difference suite in the tests checks every tensor.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from ..encode import DashboardFeatures
from ..env import (
    ACTION,
    ACTIONS,
    ACTIVE_HEADS,
    DUMMY,
    HEAD_NAMES,
    ActionDecision,
    ActionMasks,
)
from .backend import get_kernels
from .params import NetworkParams


def masked_softmax(logits: np.ndarray, mask: np.ndarray) -> np.ndarray:
    """Softmax over unmasked options; masked options get exactly zero."""
    if not mask.any():
        raise ValueError("all options masked")
    z = np.where(mask, logits, -np.inf)
    z = z - z[mask].max()
    p = np.where(mask, np.exp(z), 0.0)
    return p / p.sum()


def masked_log_softmax(logits: np.ndarray, mask: np.ndarray) -> np.ndarray:
    z = np.where(mask, logits, -np.inf)
    m = z[mask].max()
    lse = m + np.log(np.exp(z[mask] - m).sum())
    return np.where(mask, logits - lse, -np.inf)


def masked_entropy(probs: np.ndarray) -> float:
    nz = probs[probs > 0.0]
    return float(-(nz * np.log(nz)).sum())


@dataclass
class ForwardCache:
    matrix: np.ndarray
    xp_fw: np.ndarray
    xp_bw: np.ndarray
    lstm_fw: tuple
    lstm_bw: tuple
    shared: np.ndarray
    block_outputs: list[np.ndarray]


@dataclass
class PolicyOutput:
    """Value estimate plus per-head logits/probabilities.

    ``head_probs`` are normalized under the state-level masks (computed
    lazily; the hot path never touches them). Sequential sampling
    re-normalizes with the conditional masks as selections land.
    """

    value: float
    head_logits: list[np.ndarray]
    cache: ForwardCache
    provider: ActionMasks | None = None
    _masks: list[np.ndarray] | None = None
    _probs: list[np.ndarray] | None = None

    @property
    def masks(self) -> list[np.ndarray]:
        if self._masks is None:
            assert self.provider is not None
            self._masks = self.provider.default_masks()
        return self._masks

    @property
    def head_probs(self) -> list[np.ndarray]:
        if self._probs is None:
            self._probs = [
                masked_softmax(lg, m) if m.any() else np.zeros_like(lg)
                for lg, m in zip(self.head_logits, self.masks)
            ]
        return self._probs


class PolicyNetwork:
    """Stateless functional wrapper around one parameter snapshot."""

    def __init__(
        self,
        params: NetworkParams,
        value_coef: float = 0.5,
        entropy_coef: float = 0.01,
        backend: str | None = None,
    ):
        self.params = params
        self.sizes = params.sizes
        self.value_coef = value_coef
        self.entropy_coef = entropy_coef
        self.kernels = get_kernels(backend)

    # -- forward -------------------------------------------------------------

    def forward(
        self,
        features: DashboardFeatures | np.ndarray,
        masks: ActionMasks | Sequence[np.ndarray],
    ) -> PolicyOutput:
        matrix = features.matrix if isinstance(features, DashboardFeatures) else features
        if matrix.ndim != 2 or matrix.shape[1] != self.sizes.input_dim:
            raise ValueError(f"bad feature matrix shape {matrix.shape}")
        p = self.params

        xp_fw = matrix @ p.tensor("lstm_fw.Wx") + p.tensor("lstm_fw.b")
        h_fw, cache_fw = self.kernels.lstm_sequence_forward(
            xp_fw, p.tensor("lstm_fw.Wh")
        )
        rev = matrix[::-1]
        xp_bw = rev @ p.tensor("lstm_bw.Wx") + p.tensor("lstm_bw.b")
        h_bw, cache_bw = self.kernels.lstm_sequence_forward(
            xp_bw, p.tensor("lstm_bw.Wh")
        )
        shared = np.concatenate([np.asarray(h_fw), np.asarray(h_bw)])
        value = float(shared @ p.tensor("value.W") + p.tensor("value.b")[0])

        block_outputs: list[np.ndarray] = []
        logits: list[np.ndarray] = []
        prev: np.ndarray | None = None
        for k in range(len(self.sizes.head_arities)):
            u = shared @ p.tensor(f"head{k}.Ws") + p.tensor(f"head{k}.b")
            if self.sizes.fused_blocks and k > 0:
                u = u + prev @ p.tensor(f"head{k}.Wf")
            f = np.tanh(u)
            logits.append(f @ p.tensor(f"head{k}.Wo") + p.tensor(f"head{k}.c"))
            block_outputs.append(f)
            prev = f

        cache = ForwardCache(
            matrix=matrix,
            xp_fw=xp_fw,
            xp_bw=xp_bw,
            lstm_fw=cache_fw,
            lstm_bw=cache_bw,
            shared=shared,
            block_outputs=block_outputs,
        )
        if isinstance(masks, ActionMasks):
            return PolicyOutput(
                value=value, head_logits=logits, cache=cache, provider=masks
            )
        mask_list = [np.asarray(m, dtype=bool) for m in masks]
        return PolicyOutput(
            value=value, head_logits=logits, cache=cache, _masks=mask_list
        )

    # -- sampling ------------------------------------------------------------

    def sample(self, out: PolicyOutput, rng: np.random.Generator) -> ActionDecision:
        """Draw a composite decision head by head.

        Only the heads active for the sampled action are drawn; each draw
        conditions the next head's mask through the mask provider.
        """
        selections = [DUMMY] * len(HEAD_NAMES)
        log_probs = [0.0] * len(HEAD_NAMES)
        stored: list = [None] * len(HEAD_NAMES)

        def draw(head: int) -> None:
            if out.provider is not None:
                mask = out.provider.head_mask(head, selections)
            else:
                mask = out.masks[head]
            idx, lp = _draw_masked(out.head_logits[head], mask, rng)
            selections[head] = idx
            log_probs[head] = lp
            stored[head] = tuple(bool(b) for b in mask)

        draw(ACTION)
        action = ACTIONS[selections[ACTION]]
        for head in ACTIVE_HEADS[action][1:]:
            draw(head)
        return ActionDecision(
            action=action,
            choices=tuple(selections),
            per_head_log_prob=tuple(log_probs),
            joint_log_prob=float(sum(log_probs)),
            masks=tuple(stored),
        )

    def act(
        self,
        features: DashboardFeatures,
        masks: ActionMasks,
        rng: np.random.Generator,
    ) -> tuple[ActionDecision, PolicyOutput]:
        out = self.forward(features, masks)
        return self.sample(out, rng), out

    # -- loss ----------------------------------------------------------------

    def episode_loss(
        self,
        steps: Sequence[tuple[PolicyOutput, ActionDecision, float]],
        advantages: Sequence[float] | None = None,
    ) -> tuple[float, np.ndarray, dict]:
        """Actor-critic loss over one episode with undiscounted returns.

        Per step: value_coef*(R - v)^2 - A*log pi - entropy_coef*H, where
        A = R - v is treated as constant in the policy term, log pi is the
        joint log-probability of the composite decision under the recorded
        masks, and H sums the entropies of the active heads. Returns the
        scalar loss, flat gradients, and diagnostic metrics.
        """
        if not steps:
            raise ValueError("empty trajectory")
        rewards = [r for (_, _, r) in steps]
        returns = np.cumsum(rewards[::-1])[::-1]
        if advantages is None:
            advantages = [R - out.value for (out, _, _), R in zip(steps, returns)]

        grads = np.zeros_like(self.params.flat)
        gview = NetworkParams(self.sizes, grads)
        total = 0.0
        total_entropy = 0.0
        total_value_loss = 0.0
        total_policy_loss = 0.0

        T = len(steps)
        n_heads = len(self.sizes.head_arities)
        d_logits = [
            np.zeros((T, arity)) for arity in self.sizes.head_arities
        ]
        d_values = np.zeros(T)

        for t, ((out, decision, _), R, A) in enumerate(zip(steps, returns, advantages)):
            entropy = 0.0
            log_pi = 0.0
            for head in ACTIVE_HEADS[decision.action]:
                mask = np.asarray(decision.masks[head], dtype=bool)
                choice = decision.choices[head]
                probs = masked_softmax(out.head_logits[head], mask)
                logp = masked_log_softmax(out.head_logits[head], mask)[choice]
                h = masked_entropy(probs)
                entropy += h
                log_pi += logp
                row = d_logits[head][t]
                row += A * probs
                row[choice] -= A
                safe_log = np.where(probs > 0.0, np.log(np.maximum(probs, 1e-300)), 0.0)
                row += self.entropy_coef * probs * (safe_log + h)

            value_err = R - out.value
            d_values[t] = 2.0 * self.value_coef * (out.value - R)
            total += (
                self.value_coef * value_err**2
                - A * log_pi
                - self.entropy_coef * entropy
            )
            total_value_loss += value_err**2
            total_policy_loss += -A * log_pi
            total_entropy += entropy

        self._backward_batch(
            [out.cache for (out, _, _) in steps], d_logits, d_values, gview
        )

        metrics = {
            "loss": float(total),
            "value_loss": float(total_value_loss),
            "policy_loss": float(total_policy_loss),
            "entropy": float(total_entropy),
            "steps": len(steps),
            "episode_return": float(returns[0]),
        }
        return float(total), grads, metrics

    # -- manual backprop -----------------------------------------------------

    def _backward_batch(
        self,
        caches: Sequence[ForwardCache],
        d_logits: Sequence[np.ndarray],
        d_values: np.ndarray,
        gview: NetworkParams,
    ) -> None:
        """Episode-batched twin of _backward: identical math, stacked over
        steps so the dense-layer gradients become a handful of matmuls.
        Only the LSTM recurrences stay per-step (each step is its own
        sequence)."""
        p = self.params
        T = len(caches)
        shared = np.stack([c.shared for c in caches])  # (T, S)
        blocks = [
            np.stack([c.block_outputs[k] for c in caches])
            for k in range(len(self.sizes.head_arities))
        ]  # each (T, B)

        d_shared = d_values[:, None] * p.tensor("value.W")[None, :]
        gview.tensor("value.W")[...] += shared.T @ d_values
        gview.tensor("value.b")[...] += d_values.sum()

        n_heads = len(self.sizes.head_arities)
        du_next: np.ndarray | None = None
        for k in range(n_heads - 1, -1, -1):
            f = blocks[k]
            df = d_logits[k] @ p.tensor(f"head{k}.Wo").T
            if self.sizes.fused_blocks and k + 1 < n_heads and du_next is not None:
                df += du_next @ p.tensor(f"head{k + 1}.Wf").T
            du = df * (1.0 - f * f)
            gview.tensor(f"head{k}.Wo")[...] += f.T @ d_logits[k]
            gview.tensor(f"head{k}.c")[...] += d_logits[k].sum(axis=0)
            gview.tensor(f"head{k}.Ws")[...] += shared.T @ du
            gview.tensor(f"head{k}.b")[...] += du.sum(axis=0)
            if self.sizes.fused_blocks and k > 0:
                gview.tensor(f"head{k}.Wf")[...] += blocks[k - 1].T @ du
            d_shared += du @ p.tensor(f"head{k}.Ws").T
            du_next = du

        H = self.sizes.lstm_hidden
        xs_fw, dxps_fw, xs_bw, dxps_bw = [], [], [], []
        for t, cache in enumerate(caches):
            d_xp_fw, d_Wh_fw = self.kernels.lstm_sequence_backward(
                cache.lstm_fw,
                p.tensor("lstm_fw.Wh"),
                np.ascontiguousarray(d_shared[t, :H]),
            )
            gview.tensor("lstm_fw.Wh")[...] += d_Wh_fw
            xs_fw.append(cache.matrix)
            dxps_fw.append(np.asarray(d_xp_fw))
            d_xp_bw, d_Wh_bw = self.kernels.lstm_sequence_backward(
                cache.lstm_bw,
                p.tensor("lstm_bw.Wh"),
                np.ascontiguousarray(d_shared[t, H:]),
            )
            gview.tensor("lstm_bw.Wh")[...] += d_Wh_bw
            xs_bw.append(cache.matrix[::-1])
            dxps_bw.append(np.asarray(d_xp_bw))
        for direction, xs, dxps in (
            ("fw", xs_fw, dxps_fw),
            ("bw", xs_bw, dxps_bw),
        ):
            x_cat = np.concatenate(xs)
            dxp_cat = np.concatenate(dxps)
            gview.tensor(f"lstm_{direction}.Wx")[...] += x_cat.T @ dxp_cat
            gview.tensor(f"lstm_{direction}.b")[...] += dxp_cat.sum(axis=0)

    def _backward(
        self,
        cache: ForwardCache,
        d_logits: Sequence[np.ndarray],
        d_value: float,
        gview: NetworkParams,
    ) -> None:
        p = self.params
        shared = cache.shared
        d_shared = d_value * p.tensor("value.W").copy()
        gview.tensor("value.W")[...] += d_value * shared
        gview.tensor("value.b")[...] += d_value

        n_heads = len(self.sizes.head_arities)
        du_next: np.ndarray | None = None
        for k in range(n_heads - 1, -1, -1):
            f = cache.block_outputs[k]
            df = p.tensor(f"head{k}.Wo") @ d_logits[k]
            if self.sizes.fused_blocks and k + 1 < n_heads and du_next is not None:
                df += p.tensor(f"head{k + 1}.Wf") @ du_next
            du = df * (1.0 - f * f)
            gview.tensor(f"head{k}.Wo")[...] += np.outer(f, d_logits[k])
            gview.tensor(f"head{k}.c")[...] += d_logits[k]
            gview.tensor(f"head{k}.Ws")[...] += np.outer(shared, du)
            gview.tensor(f"head{k}.b")[...] += du
            if self.sizes.fused_blocks and k > 0:
                gview.tensor(f"head{k}.Wf")[...] += np.outer(
                    cache.block_outputs[k - 1], du
                )
            d_shared += p.tensor(f"head{k}.Ws") @ du
            du_next = du

        H = self.sizes.lstm_hidden
        d_xp_fw, d_Wh_fw = self.kernels.lstm_sequence_backward(
            cache.lstm_fw, p.tensor("lstm_fw.Wh"), np.ascontiguousarray(d_shared[:H])
        )
        gview.tensor("lstm_fw.Wh")[...] += d_Wh_fw
        gview.tensor("lstm_fw.Wx")[...] += cache.matrix.T @ d_xp_fw
        gview.tensor("lstm_fw.b")[...] += np.asarray(d_xp_fw).sum(axis=0)

        d_xp_bw, d_Wh_bw = self.kernels.lstm_sequence_backward(
            cache.lstm_bw, p.tensor("lstm_bw.Wh"), np.ascontiguousarray(d_shared[H:])
        )
        gview.tensor("lstm_bw.Wh")[...] += d_Wh_bw
        gview.tensor("lstm_bw.Wx")[...] += cache.matrix[::-1].T @ d_xp_bw
        gview.tensor("lstm_bw.b")[...] += np.asarray(d_xp_bw).sum(axis=0)


def _draw_masked(
    logits: np.ndarray, mask: np.ndarray, rng: np.random.Generator
) -> tuple[int, float]:
    probs = masked_softmax(logits, mask)
    options = np.flatnonzero(mask)
    cum = np.cumsum(probs[options])
    j = int(np.searchsorted(cum, rng.random() * cum[-1], side="right"))
    j = min(j, len(options) - 1)
    idx = int(options[j])
    logp = float(masked_log_softmax(logits, mask)[idx])
    return idx, logp
