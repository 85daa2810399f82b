"""Final photonic states radiated by fully excited multilevel ensembles.

After complete decay, N atoms leave N photons distributed over the emission
modes.  This module constructs those states on the photon-number occupation
basis of :mod:`mlsr.basis`:

* V atoms radiate a *pure* two-mode state whose amplitudes are imprinted by
  the initial atomic superposition, independently of the decay rates.
* Four-level atoms radiate a rank-(N+1) *mixture* over the final ground
  configurations (n_g2, n_g1); orderings of the emission cascade add
  incoherently inside each component, and (for equal decay rates) every
  component carries probability 1/(N+1).

Mode order is ``(w1, w2)`` for V emission and ``(wminus, w0, wplus)`` for
four-level emission, in the canonical descending basis order.

Each state produced here also records the dressed single-photon directions
("factors") that generate it channel-by-channel; the mode-independence check
classifies entanglement from those directions: a state is separable in *some*
dressed mode basis exactly when all factor directions are pairwise parallel
or orthogonal.
"""

from __future__ import annotations

import enum
import itertools
from dataclasses import dataclass
from math import comb, factorial, sqrt

import numpy as np

from .basis import OccupationBasis, OccupationState, enumerate_basis
from .dynamics import DensityTensor, LevelScheme, SchemeKind

V_MODE_LABELS = ("w1", "w2")
FLA_MODE_LABELS = ("wminus", "w0", "wplus")


@dataclass(frozen=True)
class PhotonicPureState:
    """Pure N-photon state: amplitudes over an occupation basis of modes.

    ``factors``, when present, lists the single-photon direction vectors
    (one per emitted photon, each a length-``modes`` tuple) whose symmetric
    product generated the state's channel structure.  They are metadata for
    the mode-independence classification, not a claim that the amplitudes
    factorize exactly.
    """

    basis: OccupationBasis
    amplitudes: np.ndarray
    factors: tuple[tuple[complex, ...], ...] | None = None
    tag: str | None = None

    def __post_init__(self) -> None:
        amps = np.asarray(self.amplitudes, dtype=np.complex128)
        object.__setattr__(self, "amplitudes", amps)
        if amps.shape != (len(self.basis),):
            raise ValueError("amplitude vector does not match basis size")
        norm = float(np.linalg.norm(amps))
        if abs(norm - 1.0) > 1e-10:
            raise ValueError(f"state must be normalized, got ||a|| = {norm!r}")
        if self.factors is not None:
            if len(self.factors) != self.basis.total:
                raise ValueError("need one creation factor per photon")
            for vec in self.factors:
                if len(vec) != self.basis.levels:
                    raise ValueError("factor vectors must have one entry per mode")

    def density_matrix(self) -> DensityTensor:
        return DensityTensor(basis=self.basis, data=np.outer(self.amplitudes, self.amplitudes.conj()))


@dataclass(frozen=True)
class PhotonicMixture:
    """Statistical mixture of pure photonic states on a common basis."""

    components: tuple[tuple[float, PhotonicPureState], ...]

    def __post_init__(self) -> None:
        if not self.components:
            raise ValueError("mixture needs at least one component")
        basis = self.components[0][1].basis
        total = 0.0
        for p, state in self.components:
            if p < 0:
                raise ValueError("probabilities must be non-negative")
            if state.basis is not basis and state.basis != basis:
                raise ValueError("all components must share one basis")
            total += p
        if abs(total - 1.0) > 1e-10:
            raise ValueError(f"probabilities must sum to 1, got {total!r}")

    @property
    def basis(self) -> OccupationBasis:
        return self.components[0][1].basis


@dataclass(frozen=True)
class DressedOperatorSet:
    """Distinct dressed single-photon creation directions of a state."""

    vectors: tuple[tuple[complex, ...], ...]

    def __post_init__(self) -> None:
        for vec in self.vectors:
            if not any(abs(x) > 0 for x in vec):
                raise ValueError("dressed operator vectors must be nonzero")


class ModeIndependence(enum.Enum):
    SEPARABLE_BASIS_EXISTS = "SEPARABLE_BASIS_EXISTS"
    MODE_INDEPENDENT_ENTANGLED = "MODE_INDEPENDENT_ENTANGLED"


@dataclass(frozen=True)
class ModeIndependenceReport:
    classification: ModeIndependence
    operators: DressedOperatorSet
    # For the entangled verdict: the offending pair of directions and their
    # normalized overlap (neither ~0 nor ~1).
    witness: tuple[tuple[complex, ...], tuple[complex, ...], float] | None = None


def _check_amplitude_pair(alpha: complex, beta: complex) -> tuple[complex, complex]:
    alpha = complex(alpha)
    beta = complex(beta)
    if abs(abs(alpha) ** 2 + abs(beta) ** 2 - 1.0) > 1e-12:
        raise ValueError("|alpha|^2 + |beta|^2 must equal 1")
    return alpha, beta


def superposition_amplitudes(n_atoms: int, alpha: complex, beta: complex) -> np.ndarray:
    """Normalized symmetric-superposition coefficients a_n, n = 0..N.

    ``a_n = C(N, n) alpha^n beta^(N-n) / sqrt(sum_j C(N, j)^2 |alpha|^(2j)
    |beta|^(2(N-j)))`` - the amplitude of n atoms in e1 (equivalently n
    photons in the e1-channel mode).
    """
    alpha, beta = _check_amplitude_pair(alpha, beta)
    raw = np.array(
        [comb(n_atoms, n) * alpha**n * beta ** (n_atoms - n) for n in range(n_atoms + 1)],
        dtype=np.complex128,
    )
    return raw / np.linalg.norm(raw)


def v_final_state(n_atoms: int, alpha: complex, beta: complex) -> PhotonicPureState:
    """Photonic state left by N fully excited V atoms (modes w1, w2).

    The initial superposition is imprinted: the amplitude of |n photons at
    w1, N-n at w2> equals the initial amplitude of n atoms in e1, for any
    positive decay rates.  Every emitted photon carries the same dressed
    direction (alpha, beta), so the state is always separable in a rotated
    mode basis.
    """
    if n_atoms < 1:
        raise ValueError("need at least one atom")
    a = superposition_amplitudes(n_atoms, alpha, beta)
    basis = enumerate_basis(n_atoms, 2, labels=V_MODE_LABELS)
    amps = np.zeros(len(basis), dtype=np.complex128)
    for n in range(n_atoms + 1):
        amps[basis.index_of((n, n_atoms - n))] = a[n]
    factors = tuple((complex(alpha), complex(beta)) for _ in range(n_atoms))
    return PhotonicPureState(basis=basis, amplitudes=amps, factors=factors)


def g_recursion_value(n_atoms: int, n: int, w1: float, w2: float) -> float:
    """Cascade ordering sum G_n^N(0,0) by explicit enumeration.

    Sums, over all interleavings of n type-1 emissions and N-n type-2
    emissions, the product of ``1/(w1*x + w2*y)`` with (x, y) the numbers of
    type-1/type-2 excitations remaining before each emission.  Closed form:
    ``1/(n! (N-n)! w1^n w2^(N-n))``; this function deliberately keeps the
    enumeration as the independent route.
    """
    if not 0 <= n <= n_atoms:
        raise ValueError("need 0 <= n <= N")
    if w1 <= 0 or w2 <= 0:
        raise ValueError("weights must be positive")
    total = 0.0
    for ones in itertools.combinations(range(n_atoms), n):
        one_set = set(ones)
        x, y = n, n_atoms - n
        prod = 1.0
        for step in range(n_atoms):
            prod /= w1 * x + w2 * y
            if step in one_set:
                x -= 1
            else:
                y -= 1
        total += prod
    return total


def path_populations(
    n_atoms: int, alpha: complex, beta: complex, w1: float = 1.0, w2: float = 1.0
) -> np.ndarray:
    """Probability of emitting n photons on the e1 channel, n = 0..N.

    Computed along the cascade route ``|a_n|^2 n! (N-n)! w1^n w2^(N-n)
    G_n^N(0,0)``; the imprint property makes the result equal |a_n|^2 for
    any weights.
    """
    a = superposition_amplitudes(n_atoms, alpha, beta)
    return np.array(
        [
            abs(a[n]) ** 2
            * factorial(n)
            * factorial(n_atoms - n)
            * w1**n
            * w2 ** (n_atoms - n)
            * g_recursion_value(n_atoms, n, w1, w2)
            for n in range(n_atoms + 1)
        ]
    )


# Four-level emission channels: (source excited slot, ground slot, mode index)
# with atomic slots (0=e2, 1=e1), ground slots (0=g2, 1=g1) and photonic
# modes (0=wminus, 1=w0, 2=wplus).
_FLA_DECAYS = (
    (1, 1, 1),  # e1 -> g1 at w0
    (0, 0, 1),  # e2 -> g2 at w0
    (0, 1, 2),  # e2 -> g1 at wplus
    (1, 0, 0),  # e1 -> g2 at wminus
)


def fla_final_mixture(
    scheme: LevelScheme, n_atoms: int, alpha: complex, beta: complex
) -> PhotonicMixture:
    """Photonic mixture left by N fully excited four-level atoms.

    Requires all decay rates equal (Gamma_11 = Gamma_22 = Gamma_12 =
    Gamma_plus = Gamma_minus); only then do the cascade orderings inside one
    final ground configuration carry the simple incoherent weights used here.
    The mixture has one component per final configuration (n_g2, n_g1) =
    (N-q, q), ordered by q, each with probability exactly 1/(N+1).

    Orderings of the emission cascade contribute *incoherently*: the
    amplitude of a photon composition is the initial atomic amplitude times
    the square root of the summed squared path amplitudes.
    """
    if scheme.kind is not SchemeKind.FLA:
        raise ValueError("fla_final_mixture requires an FLA scheme")
    g = scheme.gamma
    rates = (g[0][0], g[1][1], g[0][1], scheme.gamma_plus, scheme.gamma_minus)
    if max(rates) - min(rates) > 1e-12 * max(1.0, max(rates)):
        raise ValueError(
            "fla_final_mixture requires equal decay rates on all four channels "
            "(Gamma_lm = Gamma_plus = Gamma_minus); for unequal rates the final "
            "mixture has no rate-free closed form and must be obtained by "
            "integrating the master equation"
        )
    if n_atoms < 1:
        raise ValueError("need at least one atom")
    alpha, beta = _check_amplitude_pair(alpha, beta)

    a = superposition_amplitudes(n_atoms, alpha, beta)
    mode_basis = enumerate_basis(n_atoms, 3, labels=FLA_MODE_LABELS)
    # With equal rates, the total decay rate after k emissions is
    # (N-k)(k+2) * Gamma regardless of the branch taken, so path
    # probabilities are the squared matrix elements divided by this
    # path-independent product: prod_k (N-k)(k+2) = N! (N+1)!.
    norm = factorial(n_atoms) * factorial(n_atoms + 1)
    # coefficients[q] maps photon composition -> complex amplitude, q = n_g1.
    coefficients: list[dict[OccupationState, complex]] = [dict() for _ in range(n_atoms + 1)]

    for n_e1 in range(n_atoms + 1):
        # Walk every cascade from (n_e2, n_e1) = (N - n_e1, n_e1), summing
        # squared path amplitudes per (atomic state, photon composition).
        start = ((n_atoms - n_e1, n_e1, 0, 0), (0, 0, 0))
        layer: dict[tuple, float] = {start: 1.0}
        for _ in range(n_atoms):
            nxt: dict[tuple, float] = {}
            for (atoms, photons), weight in layer.items():
                for src, tgt, mode in _FLA_DECAYS:
                    if atoms[src] == 0:
                        continue
                    amp2 = atoms[src] * (atoms[2 + tgt] + 1)
                    new_atoms = list(atoms)
                    new_atoms[src] -= 1
                    new_atoms[2 + tgt] += 1
                    new_photons = list(photons)
                    new_photons[mode] += 1
                    key = (tuple(new_atoms), tuple(new_photons))
                    nxt[key] = nxt.get(key, 0.0) + weight * amp2
            layer = nxt
        for (atoms, photons), weight in layer.items():
            q = atoms[3]
            coefficients[q][photons] = a[n_e1] * sqrt(weight / norm)

    components = []
    uniform = 1.0 / (n_atoms + 1)
    for q in range(n_atoms + 1):
        amps = np.zeros(len(mode_basis), dtype=np.complex128)
        for photons, coeff in coefficients[q].items():
            amps[mode_basis.index_of(photons)] = coeff
        p = float(np.vdot(amps, amps).real)
        if abs(p - uniform) > 1e-10:
            raise ArithmeticError(
                f"component (n_g2, n_g1) = ({n_atoms - q}, {q}) has probability "
                f"{p!r}, expected the uniform value 1/(N+1)"
            )
        factors = tuple(
            [(complex(alpha), complex(beta), 0j)] * (n_atoms - q)
            + [(0j, complex(alpha), complex(beta))] * q
        )
        state = PhotonicPureState(
            basis=mode_basis,
            amplitudes=amps / sqrt(p),
            factors=factors,
            tag=f"g2^{n_atoms - q} g1^{q}",
        )
        components.append((p, state))
    return PhotonicMixture(components=tuple(components))


def mixture_density_matrix(state: PhotonicPureState | PhotonicMixture) -> DensityTensor:
    """Density matrix of a pure photonic state or mixture on its mode basis."""
    if isinstance(state, PhotonicPureState):
        rho = state.density_matrix()
    else:
        data = np.zeros((len(state.basis),) * 2, dtype=np.complex128)
        for p, component in state.components:
            data += p * np.outer(component.amplitudes, component.amplitudes.conj())
        rho = DensityTensor(basis=state.basis, data=data)
    rho.validate()
    return rho


def _single_direction_factors(state: PhotonicPureState, tol: float) -> tuple[tuple[complex, ...], ...]:
    """Try to write the amplitudes as N identical one-photon emissions.

    Each emission occupies its own temporal slot and deposits one photon
    with mode direction v, so the frequency-occupation amplitude on |n> is
    ``multinomial(N; n) * prod_m v_m^(n_m)`` up to normalization -- no
    bosonic ``sqrt(n!)`` enhancement, because the slots are orthogonal.  If
    a direction v reproduces every amplitude within ``tol``, return N
    copies of it; otherwise raise.
    """
    basis = state.basis
    n_atoms, modes = basis.total, basis.levels
    amps = state.amplitudes
    ref = max(range(modes), key=lambda m: abs(amps[basis.index_of(tuple(n_atoms if k == m else 0 for k in range(modes)))]))
    pure_ref = tuple(n_atoms if k == ref else 0 for k in range(modes))
    a_ref = amps[basis.index_of(pure_ref)]
    if abs(a_ref) < tol:
        raise ValueError("state does not expose single-photon creation factors")
    v = np.zeros(modes, dtype=np.complex128)
    v[ref] = a_ref ** (1.0 / n_atoms) if n_atoms > 1 else a_ref
    for m in range(modes):
        if m == ref:
            continue
        neighbor = tuple(
            n_atoms - 1 if k == ref else (1 if k == m else 0) for k in range(modes)
        )
        # amplitude ratio: a(neighbor)/a(pure_ref) = N * v_m / v_ref
        v[m] = amps[basis.index_of(neighbor)] / a_ref * v[ref] / n_atoms
    norm = np.linalg.norm(v)
    if norm == 0:
        raise ValueError("state does not expose single-photon creation factors")
    v = v / norm

    # Rebuild and compare.
    rebuilt = np.zeros_like(amps)
    for i, occ in enumerate(basis.states):
        coeff = factorial(n_atoms)
        for n_m in occ:
            coeff //= factorial(n_m)
        rebuilt[i] = coeff * np.prod([v[m] ** occ[m] for m in range(modes)])
    rebuilt = rebuilt / np.linalg.norm(rebuilt)
    phase = np.vdot(rebuilt, amps)
    if abs(abs(phase) - 1.0) > tol or np.max(np.abs(amps - phase * rebuilt)) > sqrt(tol):
        raise ValueError(
            "state amplitudes are not a symmetric product of one emission "
            "direction and carry no factor metadata; cannot classify"
        )
    return tuple(tuple(v) for _ in range(n_atoms))


def mode_independence_check(
    state: PhotonicPureState | PhotonicMixture, *, tol: float = 1e-10
) -> ModeIndependenceReport:
    """Classify whether any dressed mode basis makes the state separable.

    Collects the single-photon creation directions of all components and
    tests every pair: if each pair is parallel or orthogonal (within
    ``tol``), a mode rotation maps the photons onto independent dressed
    modes and the verdict is SEPARABLE_BASIS_EXISTS; one skew pair (overlap
    strictly between 0 and 1) makes the entanglement basis-independent.
    """
    if isinstance(state, PhotonicPureState):
        pure_states = [state]
    else:
        pure_states = [component for _, component in state.components]

    directions: list[np.ndarray] = []
    for pure in pure_states:
        factors = pure.factors
        if factors is None:
            factors = _single_direction_factors(pure, tol)
        for vec in factors:
            v = np.asarray(vec, dtype=np.complex128)
            norm = np.linalg.norm(v)
            if norm == 0:
                raise ValueError("zero factor vector")
            v = v / norm
            for seen in directions:
                if abs(abs(np.vdot(seen, v)) - 1.0) <= tol:
                    break
            else:
                directions.append(v)

    operators = DressedOperatorSet(vectors=tuple(tuple(v) for v in directions))
    for u, v in itertools.combinations(directions, 2):
        overlap = abs(np.vdot(u, v))
        if overlap > tol and overlap < 1.0 - tol:
            return ModeIndependenceReport(
                classification=ModeIndependence.MODE_INDEPENDENT_ENTANGLED,
                operators=operators,
                witness=(tuple(u), tuple(v), float(overlap)),
            )
    return ModeIndependenceReport(
        classification=ModeIndependence.SEPARABLE_BASIS_EXISTS,
        operators=operators,
        witness=None,
    )
