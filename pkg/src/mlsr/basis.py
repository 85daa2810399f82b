"""Symmetrized occupation-number bases for indistinguishable multilevel emitters.

A state of N indistinguishable atoms with L internal levels is labelled by the
occupation vector ``(n_0, ..., n_{L-1})`` with ``sum(n) == N``.  The same
bookkeeping describes N photons shared between L field modes, so the photonic
modules reuse this basis unchanged.

Conventions
-----------
* An occupation state is a plain tuple of non-negative ints.
* Basis order is lexicographically *descending*: ``(N, 0, ..., 0)`` first,
  ``(0, ..., 0, N)`` last.  All matrix representations in the package index
  rows/columns in this order.
* A collective lowering operator moves one quantum from a source level to a
  target level with the bosonic matrix element
  ``sqrt(n_source * (n_target + 1))``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from math import comb, sqrt

import numpy as np
from scipy import sparse

# Occupation states are immutable count tuples, one entry per level/mode.
OccupationState = tuple[int, ...]


@dataclass(frozen=True)
class LoweringSpec:
    """A collective one-quantum transfer: ``source`` level -> ``target`` level.

    For atomic schemes the source is an excited level and the target a ground
    level; raising is the adjoint transfer.
    """

    source: int
    target: int

    def __post_init__(self) -> None:
        if self.source < 0 or self.target < 0:
            raise ValueError("level indices must be non-negative")
        if self.source == self.target:
            raise ValueError("source and target level must differ")


@dataclass(frozen=True)
class OccupationBasis:
    """Ordered basis of all occupation states with a fixed total.

    Attributes
    ----------
    total:
        Total number of quanta N (conserved by all operators built here).
    levels:
        Number of levels/modes L.
    states:
        All occupation tuples in canonical (lexicographically descending)
        order; ``len(states) == comb(N + L - 1, L - 1)``.
    labels:
        Optional display names for the levels, e.g. ``("e2", "e1", "g")``.
    """

    total: int
    levels: int
    states: tuple[OccupationState, ...]
    labels: tuple[str, ...] | None = None
    _index: dict[OccupationState, int] = field(
        init=False, repr=False, compare=False, default_factory=dict
    )

    def __post_init__(self) -> None:
        index = {s: i for i, s in enumerate(self.states)}
        if len(index) != len(self.states):
            raise ValueError("basis states must be distinct")
        object.__setattr__(self, "_index", index)

    def __len__(self) -> int:
        return len(self.states)

    def index_of(self, state: OccupationState) -> int:
        """Position of ``state`` in the canonical order (KeyError if absent)."""
        return self._index[tuple(state)]

    def __contains__(self, state: OccupationState) -> bool:
        return tuple(state) in self._index


def enumerate_basis(
    total: int, levels: int, labels: tuple[str, ...] | None = None
) -> OccupationBasis:
    """Enumerate all occupation states of ``total`` quanta in ``levels`` levels.

    Returns an :class:`OccupationBasis` whose states appear in lexicographically
    descending order.  The number of states is the stars-and-bars count
    ``comb(total + levels - 1, levels - 1)``.
    """
    if total < 0:
        raise ValueError(f"total must be non-negative, got {total}")
    if levels < 1:
        raise ValueError(f"levels must be positive, got {levels}")
    if labels is not None and len(labels) != levels:
        raise ValueError("labels must name every level")

    states: list[OccupationState] = []

    def fill(prefix: list[int], remaining: int, slots: int) -> None:
        if slots == 1:
            states.append(tuple(prefix) + (remaining,))
            return
        for n in range(remaining, -1, -1):
            fill(prefix + [n], remaining - n, slots - 1)

    fill([], total, levels)
    assert len(states) == comb(total + levels - 1, levels - 1)
    return OccupationBasis(total=total, levels=levels, states=tuple(states), labels=labels)


def apply_lowering(
    spec: LoweringSpec, state: OccupationState
) -> tuple[OccupationState, float]:
    """Apply a collective lowering operator to one occupation state.

    Moves one quantum from ``spec.source`` to ``spec.target`` and returns the
    resulting state together with the real matrix element
    ``sqrt(n_source * (n_target + 1))``.  If the source level is empty the
    state is annihilated: the input state is returned unchanged with
    amplitude 0.0 (sentinel convention; callers must check the amplitude).
    """
    if spec.source >= len(state) or spec.target >= len(state):
        raise ValueError(
            f"levels {spec.source}->{spec.target} outside state of length {len(state)}"
        )
    n_src = state[spec.source]
    if n_src == 0:
        return state, 0.0
    n_tgt = state[spec.target]
    out = list(state)
    out[spec.source] -= 1
    out[spec.target] += 1
    return tuple(out), sqrt(n_src * (n_tgt + 1))


def apply_raising(
    spec: LoweringSpec, state: OccupationState
) -> tuple[OccupationState, float]:
    """Adjoint of :func:`apply_lowering` for the same spec.

    Moves one quantum from ``spec.target`` back to ``spec.source`` with matrix
    element ``sqrt(n_target * (n_source + 1))``, so that the matrix of
    ``apply_raising`` is the conjugate transpose of the matrix of
    ``apply_lowering``.
    """
    reverse = LoweringSpec(source=spec.target, target=spec.source)
    return apply_lowering(reverse, state)


def lowering_matrix(basis: OccupationBasis, spec: LoweringSpec) -> sparse.csr_matrix:
    """Matrix of the collective lowering operator on ``basis`` (CSR, real).

    Row index is the output state, column index the input state, both in the
    canonical order of ``basis``.
    """
    rows: list[int] = []
    cols: list[int] = []
    vals: list[float] = []
    for j, state in enumerate(basis.states):
        out, amp = apply_lowering(spec, state)
        if amp != 0.0:
            rows.append(basis.index_of(out))
            cols.append(j)
            vals.append(amp)
    dim = len(basis)
    return sparse.csr_matrix(
        (np.asarray(vals), (rows, cols)), shape=(dim, dim), dtype=np.float64
    )
