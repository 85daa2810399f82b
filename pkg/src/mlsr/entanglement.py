"""Entanglement measures on product-space embeddings of occupation states.

A fixed-total occupation basis (N quanta over M modes) is not itself a tensor
product, so partial operations first embed the density matrix into the full
product of M single-mode Fock spaces truncated at N quanta each (dimension
``(N+1)^M``).  All measures here act on such embedded matrices together with
a :class:`Factorization` describing the product structure:

* partial trace and partial transpose (tensor reshapes, exact),
* negativity ``(||rho^T_A||_1 - 1) / 2`` and the Peres minimum eigenvalue,
* von Neumann entropy with the *natural* logarithm (nats, not bits) and the
  conditional entropy ``S(rho) - S(rho with the conditioner traced out)``,
  which is negative only across entangled cuts.

Hermitian eigendecompositions symmetrize their input as ``(rho + rho^dag)/2``
first; the deviation is logged, never silently repaired beyond that.
Eigenvalues in ``[-1e-8, 0)`` are treated as numerical zeros, anything lower
is a hard error.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from math import prod
from typing import Iterable, Sequence

import numpy as np

from .dynamics import DensityTensor, InvariantViolation

logger = logging.getLogger(__name__)

EIGENVALUE_ZERO = 1e-12
EIGENVALUE_FLOOR = -1e-8
HERMITICITY_LOG_TOL = 1e-10


@dataclass(frozen=True)
class Factorization:
    """Tensor-product structure of a matrix: one dimension per subsystem."""

    dims: tuple[int, ...]
    labels: tuple[str, ...] | None = None

    def __post_init__(self) -> None:
        if not self.dims or any(d < 1 for d in self.dims):
            raise ValueError("dims must be positive")
        if self.labels is not None and len(self.labels) != len(self.dims):
            raise ValueError("labels must name every subsystem")

    @property
    def dim(self) -> int:
        return prod(self.dims)

    def keep(self, indices: Sequence[int]) -> "Factorization":
        return Factorization(
            dims=tuple(self.dims[i] for i in indices),
            labels=tuple(self.labels[i] for i in indices) if self.labels else None,
        )


def embed_occupation(rho: DensityTensor) -> tuple[DensityTensor, Factorization]:
    """Embed an occupation-basis matrix into the full mode product space.

    Each occupation state (n_0, ..., n_{M-1}) with total N maps to the
    product Fock index with per-mode cutoff N; everything outside the
    fixed-total shell is zero.  Returns the embedded matrix (basis ``None``)
    and its factorization ``((N+1), ..., (N+1))``.
    """
    if rho.basis is None:
        raise ValueError("embedding requires an occupation basis")
    basis = rho.basis
    n, modes = basis.total, basis.levels
    f = Factorization(dims=(n + 1,) * modes, labels=basis.labels)
    index = np.array(
        [sum(occ[m] * (n + 1) ** (modes - 1 - m) for m in range(modes)) for occ in basis.states]
    )
    data = np.zeros((f.dim, f.dim), dtype=np.complex128)
    data[np.ix_(index, index)] = rho.data
    return DensityTensor(basis=None, data=data), f


def _as_tensor(rho: DensityTensor | np.ndarray, f: Factorization) -> np.ndarray:
    data = rho.data if isinstance(rho, DensityTensor) else np.asarray(rho, dtype=np.complex128)
    if data.shape != (f.dim, f.dim):
        raise ValueError(
            f"matrix of dimension {data.shape[0]} does not match factorization {f.dims}"
        )
    return data.reshape(f.dims + f.dims)


def partial_trace(
    rho: DensityTensor | np.ndarray, f: Factorization, keep: int | Sequence[int]
) -> DensityTensor:
    """Reduced density matrix on the ``keep`` subsystems (order preserved)."""
    keep_t = (keep,) if isinstance(keep, int) else tuple(keep)
    m = len(f.dims)
    if not keep_t or any(k < 0 or k >= m for k in keep_t) or len(set(keep_t)) != len(keep_t):
        raise ValueError("keep must select distinct subsystems")
    t = _as_tensor(rho, f)
    bra = list(range(m))
    ket = [m + i if i in keep_t else i for i in range(m)]
    out = [i for i in keep_t] + [m + i for i in keep_t]
    reduced = np.einsum(t, bra + ket, out)
    d = prod(f.dims[i] for i in keep_t)
    return DensityTensor(basis=None, data=reduced.reshape(d, d))


def partial_transpose(
    rho: DensityTensor | np.ndarray, f: Factorization, which: int = 0
) -> np.ndarray:
    """Transpose one subsystem's indices; an involution that preserves the diagonal."""
    m = len(f.dims)
    if which < 0 or which >= m:
        raise ValueError("subsystem index out of range")
    t = _as_tensor(rho, f)
    axes = list(range(2 * m))
    axes[which], axes[m + which] = axes[m + which], axes[which]
    d = f.dim
    return np.ascontiguousarray(t.transpose(axes)).reshape(d, d)


def _symmetrized(data: np.ndarray, context: str) -> np.ndarray:
    dev = float(np.max(np.abs(data - data.conj().T))) if data.size else 0.0
    if dev > HERMITICITY_LOG_TOL:
        logger.warning("%s: symmetrizing matrix with Hermiticity deviation %.3e", context, dev)
    else:
        logger.debug("%s: Hermiticity deviation %.3e", context, dev)
    return 0.5 * (data + data.conj().T)


def negativity(rho: DensityTensor | np.ndarray, f: Factorization, which: int = 0) -> float:
    """Entanglement negativity ``(||rho^T_which||_1 - 1) / 2``."""
    pt = _symmetrized(partial_transpose(rho, f, which), "negativity")
    eigs = np.linalg.eigvalsh(pt)
    return float(0.5 * (np.abs(eigs).sum() - eigs.sum()))


def peres_min_eigenvalue(
    rho: DensityTensor | np.ndarray, f: Factorization, which: int = 0
) -> float:
    """Smallest eigenvalue of the partial transpose (negative => entangled)."""
    pt = _symmetrized(partial_transpose(rho, f, which), "peres_min_eigenvalue")
    return float(np.linalg.eigvalsh(pt).min())


def _checked_spectrum(data: np.ndarray, context: str) -> np.ndarray:
    eigs = np.linalg.eigvalsh(_symmetrized(data, context))
    low = float(eigs.min()) if eigs.size else 0.0
    if low < EIGENVALUE_FLOOR:
        raise InvariantViolation(
            f"{context}: eigenvalue {low:.3e} below the tolerated floor {EIGENVALUE_FLOOR:.1e}"
        )
    return eigs


def von_neumann_entropy(rho: DensityTensor | np.ndarray) -> float:
    """Entropy ``-sum(lambda ln lambda)`` in nats (natural logarithm).

    Eigenvalues below 1e-12 contribute nothing; eigenvalues below -1e-8
    raise (the matrix is not a state to working precision).
    """
    data = rho.data if isinstance(rho, DensityTensor) else np.asarray(rho, dtype=np.complex128)
    eigs = _checked_spectrum(data, "von_neumann_entropy")
    eigs = eigs[eigs > EIGENVALUE_ZERO]
    return float(-(eigs * np.log(eigs)).sum())


def conditional_entropy(
    rho: DensityTensor | np.ndarray,
    f: Factorization,
    conditioner: int | Iterable[int],
) -> float:
    """Conditional entropy across the cut set by ``conditioner``: S(rho) - S(rho_r).

    ``rho_r`` is the reduced state left after tracing the conditioning
    subsystem(s) out.  Negative values witness entanglement across the cut
    (no classical state has them); for a product state the value reduces to
    the conditioner's own entropy and is never negative.
    """
    dropped = {conditioner} if isinstance(conditioner, int) else set(conditioner)
    keep = tuple(i for i in range(len(f.dims)) if i not in dropped)
    if not keep or len(keep) == len(f.dims):
        raise ValueError("conditioner must name a proper, non-empty subset of subsystems")
    reduced = partial_trace(rho, f, keep)
    return von_neumann_entropy(rho) - von_neumann_entropy(reduced)
