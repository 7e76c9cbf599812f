"""Sum spectral efficiency over surface states and its phase gradient.

Each user receives through the cascade feed -> transmit matrix -> downlink
channel, so the effective gain is a_n = |h_n^H T f|^2 with T the assembled
block-diagonal transmit matrix.  Users sit on orthogonal resource blocks,
hence no co-channel interference and SE = sum_n log2(1 + p_n a_n / noise).
The analytic gradient is the Wirtinger derivative with respect to the
conjugated phase blocks; `fd_check` verifies it against central finite
differences entry by entry.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Callable

import numpy as np

from .channel import ChannelSet
from .surface import Mode, PhaseConfig, extract_blocks

LN2 = float(np.log(2.0))


class ModeError(ValueError):
    """Surface mode has no transmit face to serve downlink users."""


@dataclass(frozen=True, eq=False)
class PowerAlloc:
    """Nonnegative per-user powers in mW under a total budget."""

    powers_mw: np.ndarray
    budget_mw: float

    def __post_init__(self):
        p = np.array(self.powers_mw, dtype=float)
        if (p < -1e-12).any():
            raise ValueError("negative power")
        total = p.sum()
        if total > self.budget_mw * (1.0 + 1e-9) + 1e-12:
            raise ValueError(f"allocation {total} exceeds budget {self.budget_mw}")
        p.setflags(write=False)
        object.__setattr__(self, "powers_mw", p)

    @property
    def num_ues(self) -> int:
        return self.powers_mw.shape[0]


@dataclass(frozen=True)
class Assignment:
    """Injective user -> resource-block map (one block per user)."""

    ue_to_rb: tuple[int, ...]
    num_rbs: int

    def __post_init__(self):
        if len(self.ue_to_rb) > self.num_rbs:
            raise ValueError("more users than resource blocks")
        if len(set(self.ue_to_rb)) != len(self.ue_to_rb):
            raise ValueError("assignment must be injective")
        if any(not 0 <= rb < self.num_rbs for rb in self.ue_to_rb):
            raise ValueError("resource-block index out of range")

    @staticmethod
    def identity(num_ues: int, num_rbs: int | None = None) -> "Assignment":
        return Assignment(tuple(range(num_ues)), num_rbs if num_rbs is not None else num_ues)


def _require_transmit(cfg: PhaseConfig) -> None:
    if cfg.mode is Mode.REFLECTIVE:
        raise ModeError("reflective-only surface has no transmissive gain")


def effective_gain(ue_channel: np.ndarray, cfg: PhaseConfig, feed: np.ndarray) -> float:
    """|h^H T f|^2 for one user."""
    _require_transmit(cfg)
    amp = np.vdot(np.asarray(ue_channel), cfg.apply_transmit(feed))
    return float(np.abs(amp) ** 2)


def effective_gains(ch: ChannelSet, cfg: PhaseConfig) -> np.ndarray:
    """Per-user effective gains, vectorised over users."""
    _require_transmit(cfg)
    beam = cfg.apply_transmit(ch.feed)
    amps = ch.ue_channels.conj() @ beam
    return np.abs(amps) ** 2


def spectral_efficiency(
    ch: ChannelSet,
    cfg: PhaseConfig,
    pa: PowerAlloc,
    assignment: Assignment | None = None,
) -> float:
    """Sum of per-user log2(1 + SNR) in b/s/Hz across orthogonal blocks."""
    if ch.noise_mw <= 0:
        raise ValueError("noise power must be positive")
    if assignment is None:
        assignment = Assignment.identity(ch.num_ues)
    if len(assignment.ue_to_rb) != ch.num_ues:
        raise ValueError("assignment size does not match user count")
    gains = effective_gains(ch, cfg)
    snr = pa.powers_mw * gains / ch.noise_mw
    return float(np.sum(np.log1p(snr)) / LN2)


def grad_phase(
    ch: ChannelSet,
    cfg: PhaseConfig,
    pa: PowerAlloc,
    assignment: Assignment | None = None,
) -> tuple[np.ndarray | None, np.ndarray]:
    """Wirtinger gradient of the SE w.r.t. the conjugated phase blocks.

    Returns ``(reflect, transmit)`` stacks in the layout of `cfg`; the
    reflect stack is a zero stack for hybrid states (users are served by
    the transmit face only) and None otherwise.  The full-matrix gradient
    sum_n w_n g_n h_n f^H is restricted to the block-diagonal support.
    """
    _require_transmit(cfg)
    if assignment is None:
        assignment = Assignment.identity(ch.num_ues)
    beam = cfg.apply_transmit(ch.feed)
    amps = ch.ue_channels.conj() @ beam  # g_n = h_n^H T f
    snr = pa.powers_mw * np.abs(amps) ** 2 / ch.noise_mw
    weights = (pa.powers_mw / ch.noise_mw) / (LN2 * (1.0 + snr))
    combined = (weights * amps) @ ch.ue_channels  # sum_n w_n g_n h_n
    full = np.outer(combined, ch.feed.conj())
    transmit = extract_blocks(full, cfg.num_groups)
    if cfg.mode is Mode.HYBRID:
        return np.zeros_like(cfg.blocks_reflect), transmit
    return None, transmit


def fd_gradient_error(
    func: Callable[[PhaseConfig], float],
    base: PhaseConfig,
    analytic_reflect: np.ndarray | None,
    analytic_transmit: np.ndarray | None,
    step: float,
) -> float:
    """Worst relative mismatch between analytic and central-difference gradients.

    Real and imaginary parts of every block entry are perturbed separately;
    the analytic derivative of a real function along those axes is twice the
    real/imaginary part of the Wirtinger gradient.
    """
    if step <= 0:
        raise ValueError("finite-difference step must be positive")
    sides = []
    if base.blocks_reflect is not None:
        sides.append(("blocks_reflect", analytic_reflect))
    if base.blocks_transmit is not None:
        sides.append(("blocks_transmit", analytic_transmit))

    scale = 1e-30
    for _, grad in sides:
        if grad is not None and grad.size:
            scale = max(scale, float(np.max(np.abs(grad))))
    floor = 1e-8 * max(2.0 * scale, 1e-12)

    worst = 0.0
    for side, grad in sides:
        blocks = getattr(base, side)
        grad = np.zeros_like(blocks) if grad is None else np.asarray(grad)
        for index in np.ndindex(blocks.shape):
            for part, unit in (("re", 1.0), ("im", 1.0j)):
                delta = np.zeros_like(blocks)
                delta[index] = unit * step
                hi = func(replace(base, **{side: blocks + delta}))
                lo = func(replace(base, **{side: blocks - delta}))
                numeric = (hi - lo) / (2.0 * step)
                entry = grad[index]
                analytic = 2.0 * (entry.real if part == "re" else entry.imag)
                denom = max(abs(analytic), abs(numeric), floor)
                worst = max(worst, abs(analytic - numeric) / denom)
    return worst


def fd_check(
    ch: ChannelSet,
    cfg: PhaseConfig,
    pa: PowerAlloc,
    step: float,
    assignment: Assignment | None = None,
) -> float:
    """Finite-difference verification of `grad_phase` on this instance."""
    grad_r, grad_t = grad_phase(ch, cfg, pa, assignment)
    return fd_gradient_error(
        lambda c: spectral_efficiency(ch, c, pa, assignment), cfg, grad_r, grad_t, step
    )
