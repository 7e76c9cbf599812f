"""Feasible phase-response sets for reconfigurable surfaces.

Nine architecture x mode combinations: single-, group-, and fully-connected
hardware, each operating reflective, transmissive, or hybrid.  A surface
state stores one complex block per element group.  Per group the feasible
set is

* the unit circle per diagonal entry (single-connected),
* the unitary group of the block (group/fully-connected, reflective or
  transmissive),
* the complex Stiefel manifold of the stacked reflect/transmit pair
  (hybrid: the two faces share the incident energy).

The module provides random feasible states, constraint validation, the
nearest-feasible (polar) projection, tangent-space projection of Euclidean
gradients, and the retractions used by the ascent optimizer: a Cayley map
for unitary blocks, polar retraction for hybrid stacks, and per-entry
renormalisation for diagonal states.  Every constructor returns states
feasible to ``CONSTRUCTION_TOL`` in Frobenius norm.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from enum import Enum

import numpy as np

# Frobenius feasibility tolerance met by every constructor in this module.
CONSTRUCTION_TOL = 1e-10

# Relative singular-value floor below which a block counts as rank deficient.
_RANK_RTOL = 1e-13


class ArchitectureKind(str, Enum):
    SINGLE_CONNECTED = "single"
    GROUP_CONNECTED = "group"
    FULLY_CONNECTED = "fully"


class Mode(str, Enum):
    REFLECTIVE = "reflective"
    TRANSMISSIVE = "transmissive"
    HYBRID = "hybrid"


class ConfigurationError(ValueError):
    """Architecture, mode, and element count do not form a valid surface."""


class ProjectionError(ValueError):
    """Nearest-feasible projection undefined for a rank-deficient block."""


@dataclass(frozen=True)
class Architecture:
    """Interconnection topology of the surface elements.

    ``group_count`` is the explicit number of groups and is only meaningful
    for the group-connected kind; single-connected surfaces always have one
    group per element and fully-connected surfaces a single group, both
    resolved against the element count at use time so the same value can
    drive an element sweep.
    """

    kind: ArchitectureKind
    group_count: int | None = None

    @staticmethod
    def single_connected() -> "Architecture":
        return Architecture(ArchitectureKind.SINGLE_CONNECTED)

    @staticmethod
    def group_connected(group_count: int) -> "Architecture":
        return Architecture(ArchitectureKind.GROUP_CONNECTED, group_count)

    @staticmethod
    def fully_connected() -> "Architecture":
        return Architecture(ArchitectureKind.FULLY_CONNECTED)

    def num_groups(self, num_elements: int) -> int:
        """Resolve the group count for a surface with `num_elements` elements."""
        if num_elements < 1:
            raise ConfigurationError(f"element count must be positive, got {num_elements}")
        if self.kind is ArchitectureKind.SINGLE_CONNECTED:
            return num_elements
        if self.kind is ArchitectureKind.FULLY_CONNECTED:
            return 1
        count = self.group_count
        if count is None:
            raise ConfigurationError("group-connected architecture needs an explicit group count")
        if not 1 < count < num_elements:
            raise ConfigurationError(
                f"group count must satisfy 1 < L < {num_elements}, got {count}"
            )
        if num_elements % count:
            raise ConfigurationError(
                f"group size not integral: {count} groups do not divide {num_elements} elements"
            )
        return count

    def group_dim(self, num_elements: int) -> int:
        return num_elements // self.num_groups(num_elements)

    def controllable_entries(self, num_elements: int) -> int:
        """Independently controllable nonzero entries of the full matrix."""
        groups = self.num_groups(num_elements)
        dim = num_elements // groups
        return groups * dim * dim


def _frozen_blocks(raw, groups: int, dim: int, rows: int | None = None) -> np.ndarray:
    rows = dim if rows is None else rows
    arr = np.array(raw, dtype=np.complex128)
    if arr.shape != (groups, rows, dim):
        raise ConfigurationError(
            f"blocks must have shape {(groups, rows, dim)}, got {arr.shape}"
        )
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class PhaseConfig:
    """One surface state: per-group complex blocks for each active face.

    ``blocks_reflect``/``blocks_transmit`` are ``(L, d, d)`` stacks with
    ``d = num_elements / L``; the reflect stack is present for reflective
    and hybrid modes, the transmit stack for transmissive and hybrid.
    Construction checks shapes only; feasibility is checked by `validate`.
    """

    arch: Architecture
    mode: Mode
    num_elements: int
    blocks_reflect: np.ndarray | None = field(default=None, repr=False)
    blocks_transmit: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self):
        groups = self.arch.num_groups(self.num_elements)
        dim = self.num_elements // groups
        want_r = self.mode in (Mode.REFLECTIVE, Mode.HYBRID)
        want_t = self.mode in (Mode.TRANSMISSIVE, Mode.HYBRID)
        for name, blocks, want in (
            ("blocks_reflect", self.blocks_reflect, want_r),
            ("blocks_transmit", self.blocks_transmit, want_t),
        ):
            if want and blocks is None:
                raise ConfigurationError(f"{self.mode.value} mode requires {name}")
            if not want and blocks is not None:
                raise ConfigurationError(f"{self.mode.value} mode forbids {name}")
            if blocks is not None:
                object.__setattr__(self, name, _frozen_blocks(blocks, groups, dim))

    @property
    def num_groups(self) -> int:
        return self.arch.num_groups(self.num_elements)

    @property
    def group_dim(self) -> int:
        return self.num_elements // self.num_groups

    @property
    def has_reflect(self) -> bool:
        return self.blocks_reflect is not None

    @property
    def has_transmit(self) -> bool:
        return self.blocks_transmit is not None

    def full_reflect_matrix(self) -> np.ndarray:
        if self.blocks_reflect is None:
            raise ConfigurationError(f"{self.mode.value} mode has no reflect matrix")
        return assemble_full(self.blocks_reflect)

    def full_transmit_matrix(self) -> np.ndarray:
        if self.blocks_transmit is None:
            raise ConfigurationError(f"{self.mode.value} mode has no transmit matrix")
        return assemble_full(self.blocks_transmit)

    def apply_transmit(self, vec: np.ndarray) -> np.ndarray:
        """Blockwise product of the transmit matrix with a length-K vector."""
        if self.blocks_transmit is None:
            raise ConfigurationError(f"{self.mode.value} mode has no transmit matrix")
        parts = np.asarray(vec, dtype=np.complex128).reshape(self.num_groups, self.group_dim)
        out = np.einsum("lij,lj->li", self.blocks_transmit, parts)
        return out.reshape(self.num_elements)


@dataclass(frozen=True, eq=False)
class TangentDir:
    """Tangent vector at a `PhaseConfig`, in the same per-group block layout."""

    arch: Architecture
    mode: Mode
    num_elements: int
    blocks_reflect: np.ndarray | None = field(default=None, repr=False)
    blocks_transmit: np.ndarray | None = field(default=None, repr=False)

    def norm(self) -> float:
        total = 0.0
        for blocks in (self.blocks_reflect, self.blocks_transmit):
            if blocks is not None:
                total += float(np.sum(np.abs(blocks) ** 2))
        return float(np.sqrt(total))


@dataclass(frozen=True)
class ValidationReport:
    """Per-group Frobenius residuals against the mode's feasibility constraint."""

    passed: bool
    tol: float
    residuals: np.ndarray = field(repr=False)
    worst_residual: float = 0.0
    worst_group: int = 0


def assemble_full(blocks: np.ndarray) -> np.ndarray:
    """Block-diagonal assembly of an ``(L, d, d)`` stack into a K x K matrix."""
    groups, dim, _ = blocks.shape
    full = np.zeros((groups * dim, groups * dim), dtype=np.complex128)
    for l in range(groups):
        full[l * dim : (l + 1) * dim, l * dim : (l + 1) * dim] = blocks[l]
    return full


def extract_blocks(full: np.ndarray, num_groups: int) -> np.ndarray:
    """Diagonal blocks of a K x K matrix as an ``(L, d, d)`` stack."""
    total = full.shape[0]
    dim = total // num_groups
    idx = np.arange(num_groups)
    return full.reshape(num_groups, dim, num_groups, dim)[idx, :, idx, :]


def _conj_t(blocks: np.ndarray) -> np.ndarray:
    return np.conj(np.swapaxes(blocks, -1, -2))


def _haar_orthonormal(rng: np.random.Generator, groups: int, rows: int, cols: int) -> np.ndarray:
    """Per-group column-orthonormal matrices from complex Gaussian draws."""
    z = rng.standard_normal((groups, rows, cols)) + 1j * rng.standard_normal((groups, rows, cols))
    q, r = np.linalg.qr(z / np.sqrt(2.0))
    diag = np.diagonal(r, axis1=-2, axis2=-1)
    mag = np.abs(diag)
    phase = np.where(mag > 0, diag / np.where(mag > 0, mag, 1.0), 1.0)
    # absorbing the R-diagonal phases makes the factor Haar distributed
    return q * phase[:, None, :]


def _polar_factors(blocks: np.ndarray):
    u, s, vh = np.linalg.svd(blocks, full_matrices=False)
    return u @ vh, s


def _split_hybrid(stacked: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    dim = stacked.shape[-1]
    return stacked[:, :dim, :], stacked[:, dim:, :]


def _stack_hybrid(cfg_or_pair) -> np.ndarray:
    reflect, transmit = cfg_or_pair
    return np.concatenate([reflect, transmit], axis=1)


def make_feasible_random(
    arch: Architecture, mode: Mode, num_elements: int, seed: int
) -> PhaseConfig:
    """Draw a random feasible state, deterministic in `seed`.

    Per group a complex Gaussian matrix (stacked reflect/transmit rows for
    hybrid mode) is column-orthonormalised, which satisfies the mode's
    constraint by construction and covers the feasible manifold Haar-like.
    """
    groups = arch.num_groups(num_elements)
    dim = num_elements // groups
    rng = np.random.default_rng(seed)
    if mode is Mode.HYBRID:
        stacked = _haar_orthonormal(rng, groups, 2 * dim, dim)
        reflect, transmit = _split_hybrid(stacked)
        return PhaseConfig(arch, mode, num_elements, reflect, transmit)
    ortho = _haar_orthonormal(rng, groups, dim, dim)
    if mode is Mode.REFLECTIVE:
        return PhaseConfig(arch, mode, num_elements, blocks_reflect=ortho)
    return PhaseConfig(arch, mode, num_elements, blocks_transmit=ortho)


def validate(cfg: PhaseConfig, tol: float = CONSTRUCTION_TOL) -> ValidationReport:
    """Check the mode's constraint per group and report Frobenius residuals."""
    dim = cfg.group_dim
    gram = np.zeros((cfg.num_groups, dim, dim), dtype=np.complex128)
    if cfg.blocks_reflect is not None:
        gram += _conj_t(cfg.blocks_reflect) @ cfg.blocks_reflect
    if cfg.blocks_transmit is not None:
        gram += _conj_t(cfg.blocks_transmit) @ cfg.blocks_transmit
    gram -= np.eye(dim)
    residuals = np.linalg.norm(gram, axis=(1, 2))
    worst = int(np.argmax(residuals))
    return ValidationReport(
        passed=bool(residuals[worst] < tol),
        tol=tol,
        residuals=residuals,
        worst_residual=float(residuals[worst]),
        worst_group=worst,
    )


def project_feasible(raw: PhaseConfig) -> PhaseConfig:
    """Nearest feasible state in Frobenius norm (per-group polar factor).

    For unitary blocks this is the classical nearest-unitary projection,
    for diagonal states it reduces to per-entry normalisation, and for
    hybrid stacks it is the polar factor of the stacked block.  Raises
    `ProjectionError` when a block is rank deficient.
    """
    if raw.mode is Mode.HYBRID:
        stacked = _stack_hybrid((raw.blocks_reflect, raw.blocks_transmit))
        factor, s = _polar_factors(stacked)
        _check_full_rank(s)
        reflect, transmit = _split_hybrid(factor)
        return replace(raw, blocks_reflect=reflect, blocks_transmit=transmit)
    side = "blocks_reflect" if raw.mode is Mode.REFLECTIVE else "blocks_transmit"
    factor, s = _polar_factors(getattr(raw, side))
    _check_full_rank(s)
    return replace(raw, **{side: factor})


def _check_full_rank(singular_values: np.ndarray) -> None:
    smax = singular_values[:, 0]
    smin = singular_values[:, -1]
    bad = (smax == 0) | (smin <= _RANK_RTOL * np.maximum(smax, 1.0))
    if bad.any():
        raise ProjectionError(f"rank-deficient block in group {int(np.argmax(bad))}")


def tangent_project(
    base: PhaseConfig,
    euclid_reflect: np.ndarray | None = None,
    euclid_transmit: np.ndarray | None = None,
) -> TangentDir:
    """Project Euclidean (Wirtinger) gradient blocks onto the tangent space.

    Unitary groups map the gradient G to the ascent direction A @ P with the
    skew-Hermitian generator A = G P^H - P G^H; hybrid groups use the Stiefel
    projection of the stacked block; diagonal entries keep the component of
    the gradient tangent to the unit circle.
    """
    dim = base.group_dim
    if base.mode is Mode.HYBRID:
        point = _stack_hybrid((base.blocks_reflect, base.blocks_transmit))
        grad = _stack_hybrid((
            _or_zeros(euclid_reflect, base.blocks_reflect),
            _or_zeros(euclid_transmit, base.blocks_transmit),
        ))
        sym = _conj_t(point) @ grad
        sym = 0.5 * (sym + _conj_t(sym))
        reflect, transmit = _split_hybrid(grad - point @ sym)
        return TangentDir(base.arch, base.mode, base.num_elements, reflect, transmit)

    if base.mode is Mode.REFLECTIVE:
        point = base.blocks_reflect
        grad = _or_zeros(euclid_reflect, point)
    else:
        point = base.blocks_transmit
        grad = _or_zeros(euclid_transmit, point)

    if dim == 1:
        radial = np.real(np.conj(point) * grad)
        xi = grad - point * radial
    else:
        gen = grad @ _conj_t(point) - point @ _conj_t(grad)
        xi = gen @ point
    if base.mode is Mode.REFLECTIVE:
        return TangentDir(base.arch, base.mode, base.num_elements, blocks_reflect=xi)
    return TangentDir(base.arch, base.mode, base.num_elements, blocks_transmit=xi)


def _or_zeros(grad: np.ndarray | None, like: np.ndarray) -> np.ndarray:
    if grad is None:
        return np.zeros_like(like)
    grad = np.asarray(grad, dtype=np.complex128)
    if grad.shape != like.shape:
        raise ConfigurationError(f"gradient shape {grad.shape} != block shape {like.shape}")
    return grad


def retract(base: PhaseConfig, direction: TangentDir, step: float) -> PhaseConfig:
    """Move along a tangent direction and land back on the feasible set.

    Unitary blocks use the Cayley map P <- (I - (s/2)A)^-1 (I + (s/2)A) P,
    which is exactly feasibility-preserving for skew-Hermitian A; hybrid
    stacks use polar retraction of X + s*Xi; diagonal entries renormalise
    to the unit circle.  ``step == 0`` returns the base unchanged.
    """
    if (direction.arch, direction.mode, direction.num_elements) != (
        base.arch,
        base.mode,
        base.num_elements,
    ):
        raise ConfigurationError("tangent direction does not match the base configuration")
    if step == 0.0:
        return base
    dim = base.group_dim

    if base.mode is Mode.HYBRID:
        point = _stack_hybrid((base.blocks_reflect, base.blocks_transmit))
        xi = _stack_hybrid((
            _or_zeros(direction.blocks_reflect, base.blocks_reflect),
            _or_zeros(direction.blocks_transmit, base.blocks_transmit),
        ))
        factor, s = _polar_factors(point + step * xi)
        _check_full_rank(s)
        reflect, transmit = _split_hybrid(factor)
        return replace(base, blocks_reflect=reflect, blocks_transmit=transmit)

    side = "blocks_reflect" if base.mode is Mode.REFLECTIVE else "blocks_transmit"
    point = getattr(base, side)
    xi = _or_zeros(getattr(direction, side), point)
    if dim == 1:
        moved = point + step * xi
        mag = np.abs(moved)
        if not (mag > 0).all():
            raise FloatingPointError("diagonal retraction hit the origin")
        return replace(base, **{side: moved / mag})
    gen = xi @ _conj_t(point)
    gen = 0.5 * (gen - _conj_t(gen))  # enforce exact skew-Hermitian generator
    eye = np.eye(dim)
    lhs = eye - (0.5 * step) * gen
    rhs = (eye + (0.5 * step) * gen) @ point
    return replace(base, **{side: np.linalg.solve(lhs, rhs)})


def embed(cfg: PhaseConfig, target_arch: Architecture) -> PhaseConfig:
    """Re-block a state into a coarser architecture with the same full matrix.

    Source groups land on the diagonal of the enclosing target blocks, so a
    single-connected state embeds into group-connected and group-connected
    into fully-connected without changing feasibility or behaviour.
    """
    src_groups = cfg.num_groups
    tgt_groups = target_arch.num_groups(cfg.num_elements)
    if src_groups % tgt_groups:
        raise ConfigurationError(
            f"cannot embed {src_groups} groups into {tgt_groups} target groups"
        )
    per = src_groups // tgt_groups
    src_dim = cfg.group_dim
    tgt_dim = cfg.num_elements // tgt_groups

    def _embed_side(blocks: np.ndarray | None) -> np.ndarray | None:
        if blocks is None:
            return None
        out = np.zeros((tgt_groups, tgt_dim, tgt_dim), dtype=np.complex128)
        for j in range(src_groups):
            tgt = j // per
            off = (j % per) * src_dim
            out[tgt, off : off + src_dim, off : off + src_dim] = blocks[j]
        return out

    return PhaseConfig(
        target_arch,
        cfg.mode,
        cfg.num_elements,
        _embed_side(cfg.blocks_reflect),
        _embed_side(cfg.blocks_transmit),
    )
