"""Multimode Wigner distributions of few-photon states.

Everything here evaluates the displaced-parity form of the Wigner function:
``W(xi_1..xi_M) = (2/pi)^M sum_{bra,ket} (-1)^(n_bra) rho[bra,ket]
prod_m <ket_m| D(2 xi_m) |bra_m>`` with complex phase-space coordinates
``xi = X + iP`` and Fock-basis displacement matrix elements

``<m| D(xi) |n> = sqrt(n!/m!) xi^(m-n) e^(-|xi|^2/2) L_n^(m-n)(|xi|^2)``

for m >= n (and the adjoint reflection ``D(xi) = D(-xi)^dag`` otherwise),
with the associated Laguerre polynomials evaluated by their three-term
recurrence.  Sums run only over the occupied support of the state, so cost
scales with the basis size, not with the grid-embedded Hilbert space.

The same evaluator serves photonic states and atomic ground-sector states:
an occupation basis over (g2, g1) is formally identical to a two-mode
photon basis.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from math import pi, sqrt
from typing import Sequence

import numpy as np

from .basis import OccupationBasis
from .dynamics import DensityTensor
from .entanglement import Factorization, embed_occupation, partial_trace
from .photonic import PhotonicMixture, PhotonicPureState, mixture_density_matrix

IMAG_TOL = 1e-10

Quadrature = str  # "X" or "P"
Coordinate = tuple[int, Quadrature]


@dataclass(frozen=True)
class PhasePoint:
    """One phase-space point: a complex coordinate X + iP per mode."""

    coordinates: tuple[complex, ...]

    @classmethod
    def from_quadratures(cls, xs: Sequence[float], ps: Sequence[float]) -> "PhasePoint":
        if len(xs) != len(ps):
            raise ValueError("need one X and one P per mode")
        return cls(tuple(complex(x, p) for x, p in zip(xs, ps)))

    @classmethod
    def origin(cls, modes: int) -> "PhasePoint":
        return cls((0j,) * modes)


@dataclass(frozen=True)
class GridSpec:
    """Square evaluation grid: ``npoints`` per axis over [-extent, extent]."""

    npoints: int = 81
    extent: float = 3.0

    def __post_init__(self) -> None:
        if self.npoints < 2:
            raise ValueError("grid needs at least two points per axis")
        if self.extent <= 0:
            raise ValueError("grid extent must be positive")

    @property
    def axis(self) -> np.ndarray:
        return np.linspace(-self.extent, self.extent, self.npoints)


@dataclass(frozen=True)
class WignerSlice:
    """Two-coordinate Wigner cut, row-major: values[i, j] = W(first=x[i], second=y[j])."""

    first: Coordinate
    second: Coordinate
    x: np.ndarray
    y: np.ndarray
    values: np.ndarray
    fixed: tuple[complex, ...]  # full per-mode coordinates the cut was taken at


def _laguerre(order: int, alpha: int, x: np.ndarray) -> np.ndarray:
    """Associated Laguerre L_order^(alpha)(x) by the three-term recurrence."""
    prev = np.ones_like(x)
    if order == 0:
        return prev
    curr = 1.0 + alpha - x
    for k in range(2, order + 1):
        prev, curr = curr, ((2 * k - 1 + alpha - x) * curr - (k - 1 + alpha) * prev) / k
    return curr


def displacement_element(m: int, n: int, xi: complex) -> complex:
    """Fock matrix element <m| D(xi) |n> of the displacement operator."""
    return complex(displacement_block(max(m, n), np.array([xi]))[m, n, 0])


def displacement_block(nmax: int, xi: np.ndarray) -> np.ndarray:
    """All <m|D(xi)|n> for m, n <= nmax, vectorized over a 1-D array of xi.

    Returns a complex array of shape (nmax+1, nmax+1, len(xi)).
    """
    xi = np.asarray(xi, dtype=np.complex128).reshape(-1)
    x = np.abs(xi) ** 2
    gauss = np.exp(-0.5 * x)
    out = np.empty((nmax + 1, nmax + 1, xi.size), dtype=np.complex128)
    for m in range(nmax + 1):
        for n in range(m + 1):
            d = m - n
            # sqrt(n!/m!) = 1/sqrt((n+1)(n+2)...m)
            pref = 1.0
            for k in range(n + 1, m + 1):
                pref /= k
            pref = sqrt(pref)
            upper = pref * xi**d * gauss * _laguerre(n, d, x)
            out[m, n, :] = upper
            if m != n:
                # <n|D(xi)|m> = conj(<m|D(-xi)|n>); the sign flip gives (-1)^d.
                out[n, m, :] = np.conj(upper) * (-1.0) ** d
    return out


def _require_occupation(rho: DensityTensor) -> OccupationBasis:
    if rho.basis is None:
        raise ValueError("Wigner evaluation requires an occupation basis")
    return rho.basis


def wigner_value(rho: DensityTensor, point: PhasePoint | Sequence[complex]) -> float:
    """W at a single phase-space point (real; imaginary residue checked)."""
    basis = _require_occupation(rho)
    coords = point.coordinates if isinstance(point, PhasePoint) else tuple(point)
    if len(coords) != basis.levels:
        raise ValueError("need one complex coordinate per mode")
    n = basis.total
    blocks = [displacement_block(n, np.array([2.0 * xi]))[:, :, 0] for xi in coords]
    total = 0j
    for i, bra in enumerate(basis.states):
        for j, ket in enumerate(basis.states):
            r = rho.data[i, j]
            if r == 0:
                continue
            term = r
            for m, block in enumerate(blocks):
                term *= block[ket[m], bra[m]]
            total += term
    total *= (2.0 / pi) ** basis.levels * (-1.0) ** n
    if abs(total.imag) > IMAG_TOL:
        raise ValueError(f"Wigner value has imaginary residue {total.imag:.3e}")
    return float(total.real)


def _mode_coordinates(
    basis: OccupationBasis,
    first: Coordinate,
    second: Coordinate,
    fixed: Sequence[complex] | None,
) -> tuple[np.ndarray, ...]:
    for mode, quad in (first, second):
        if mode < 0 or mode >= basis.levels:
            raise ValueError(f"mode index {mode} out of range")
        if quad not in ("X", "P"):
            raise ValueError("quadrature must be 'X' or 'P'")
    if first == second:
        raise ValueError("slice coordinates must differ")
    if fixed is None:
        fixed = (0j,) * basis.levels
    if len(fixed) != basis.levels:
        raise ValueError("fixed coordinates must cover every mode")
    return tuple(np.complex128(c) for c in fixed)


def wigner_slice(
    rho: DensityTensor,
    first: Coordinate,
    second: Coordinate,
    grid: GridSpec = GridSpec(),
    fixed: Sequence[complex] | None = None,
) -> WignerSlice:
    """Wigner cut along two quadrature coordinates, others held fixed.

    Coordinates are (mode, "X"|"P") pairs and may address two different
    modes or both quadratures of one mode.  The cut is evaluated row-major
    on the square grid: ``values[i, j]`` belongs to first=x[i], second=y[j].
    """
    basis = _require_occupation(rho)
    base = _mode_coordinates(basis, first, second, fixed)
    axis = grid.axis
    nx = ny = grid.npoints
    n = basis.total
    modes = basis.levels

    # Per-mode xi arrays over the 2-D grid (broadcast to full shape).
    xi_grid = [np.full((nx, ny), base[m], dtype=np.complex128) for m in range(modes)]
    unit = {"X": 1.0, "P": 1j}
    xi_grid[first[0]] = xi_grid[first[0]] + unit[first[1]] * axis[:, None]
    xi_grid[second[0]] = xi_grid[second[0]] + unit[second[1]] * axis[None, :]

    blocks = []
    for m in range(modes):
        vals = xi_grid[m].reshape(-1)
        if np.all(vals == vals[0]):  # constant coordinate: evaluate once
            blk = displacement_block(n, np.array([2.0 * vals[0]]))
            blocks.append(np.broadcast_to(blk, (n + 1, n + 1, vals.size)))
        else:
            blocks.append(displacement_block(n, 2.0 * vals))

    total = np.zeros(nx * ny, dtype=np.complex128)
    for i, bra in enumerate(basis.states):
        for j, ket in enumerate(basis.states):
            r = rho.data[i, j]
            if r == 0:
                continue
            term = np.full(nx * ny, r, dtype=np.complex128)
            for m in range(modes):
                term = term * blocks[m][ket[m], bra[m]]
            total += term
    total *= (2.0 / pi) ** modes * (-1.0) ** n
    resid = float(np.max(np.abs(total.imag)))
    if resid > IMAG_TOL:
        raise ValueError(f"Wigner slice has imaginary residue {resid:.3e}")
    return WignerSlice(
        first=first,
        second=second,
        x=axis.copy(),
        y=axis.copy(),
        values=total.real.reshape(nx, ny),
        fixed=tuple(base),
    )


def wigner_grid_integral(
    rho: DensityTensor, *, extent: float = 4.0, npoints: int = 129
) -> float:
    """Trapezoid quadrature of W over the full 2M-dimensional phase space.

    The integrand factorizes per mode, so the 2M-dimensional quadrature
    reduces to one 2-D quadrature of every displacement element followed by
    the same occupation-basis sum as a point evaluation.  For states within
    the grid (few photons, extent >= 4) the result is 1 to ~1e-6.
    """
    basis = _require_occupation(rho)
    n, modes = basis.total, basis.levels
    axis = np.linspace(-extent, extent, npoints)
    xs, ps = np.meshgrid(axis, axis, indexing="ij")
    xi = (xs + 1j * ps).reshape(-1)
    weights = np.ones(npoints)
    weights[0] = weights[-1] = 0.5
    w2d = (np.outer(weights, weights) * (axis[1] - axis[0]) ** 2).reshape(-1)

    block = displacement_block(n, 2.0 * xi)
    j_mat = block @ w2d  # (n+1, n+1) per-mode integrals

    total = 0j
    for i, bra in enumerate(basis.states):
        for j, ket in enumerate(basis.states):
            r = rho.data[i, j]
            if r == 0:
                continue
            term = r
            for m in range(modes):
                term *= j_mat[ket[m], bra[m]]
            total += term
    total *= (2.0 / pi) ** modes * (-1.0) ** n
    return float(total.real)


class ProbeVerdict(enum.Enum):
    FACTORS = "FACTORS"
    DOES_NOT_FACTOR = "DOES_NOT_FACTOR"


@dataclass(frozen=True)
class ProbeResult:
    verdict: ProbeVerdict
    max_deviation: float
    # One deviation per mixture component (single entry for pure states).
    component_deviations: tuple[float, ...]


def _single_mode_wigner(reduced: np.ndarray, xi: np.ndarray) -> np.ndarray:
    """Wigner of a single-mode Fock-basis matrix at an array of xi."""
    nmax = reduced.shape[0] - 1
    block = displacement_block(nmax, 2.0 * xi)
    total = np.zeros(xi.size, dtype=np.complex128)
    for b in range(nmax + 1):
        for k in range(nmax + 1):
            r = reduced[b, k]
            if r == 0:
                continue
            total += ((-1.0) ** b * r) * block[k, b, :]
    return (2.0 / pi) * total.real


def _probe_one(
    rho: DensityTensor, mode_a: int, mode_b: int, grid: GridSpec
) -> float:
    """Max deviation between W cuts and the product of reduced-mode Wigners."""
    basis = _require_occupation(rho)
    embedded, f = embed_occupation(rho)
    reduced = [partial_trace(embedded, f, keep=m).data for m in range(basis.levels)]
    origin_factors = [
        _single_mode_wigner(reduced[m], np.zeros(1, dtype=np.complex128))[0]
        for m in range(basis.levels)
    ]
    axis = grid.axis
    worst = 0.0
    for qa in ("X", "P"):
        for qb in ("X", "P"):
            cut = wigner_slice(rho, (mode_a, qa), (mode_b, qb), grid)
            unit = {"X": 1.0, "P": 1j}
            wa = _single_mode_wigner(reduced[mode_a], unit[qa] * axis)
            wb = _single_mode_wigner(reduced[mode_b], unit[qb] * axis)
            rest = 1.0
            for m in range(basis.levels):
                if m not in (mode_a, mode_b):
                    rest *= origin_factors[m]
            product = np.outer(wa, wb) * rest
            worst = max(worst, float(np.max(np.abs(cut.values - product))))
    return worst


def separability_probe(
    state: DensityTensor | PhotonicPureState | PhotonicMixture,
    mode_pair: tuple[int, int],
    grid: GridSpec = GridSpec(),
    tol: float = 1e-8,
) -> ProbeResult:
    """Test whether Wigner cuts factorize into reduced single-mode Wigners.

    For every quadrature pairing of the two modes, compares the joint cut
    (remaining coordinates at the origin) against the product of the reduced
    single-mode Wigner functions times the origin values of the spectator
    modes.  Product states pass exactly; any deviation above ``tol`` yields
    DOES_NOT_FACTOR.  Mixtures are tested component-wise (a mixture of
    factorizing components is a sum of products, the claim being probed).
    """
    mode_a, mode_b = mode_pair
    if mode_a == mode_b:
        raise ValueError("probe needs two distinct modes")
    if isinstance(state, PhotonicMixture):
        parts = [mixture_density_matrix(comp) for _, comp in state.components]
    elif isinstance(state, PhotonicPureState):
        parts = [state.density_matrix()]
    else:
        parts = [state]
    deviations = tuple(_probe_one(rho, mode_a, mode_b, grid) for rho in parts)
    worst = max(deviations)
    verdict = ProbeVerdict.FACTORS if worst < tol else ProbeVerdict.DOES_NOT_FACTOR
    return ProbeResult(verdict=verdict, max_deviation=worst, component_deviations=deviations)
