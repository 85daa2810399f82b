"""Collective-emission dynamics for small ensembles of multilevel atoms.

Implements Lindblad master equations for N indistinguishable atoms in three
level schemes, on the symmetrized occupation basis of :mod:`mlsr.basis`:

* ``V_NONDEGENERATE`` - V atoms with two excited levels e1, e2 decaying to a
  common ground level g at rates Gamma_1, Gamma_2 (independent channels).
* ``V_DEGENERATE`` - the same V structure with degenerate transition
  frequencies, where a full 2x2 rate matrix Gamma_lm couples the channels.
* ``FLA`` - four-level atoms with excited levels e1, e2 and ground levels
  g1, g2; the two "vertical" channels e1->g1, e2->g2 share one frequency
  omega_0 and interfere through Gamma_lm, while the diagonal channels
  e2->g1 (omega_plus) and e1->g2 (omega_minus) decay independently.

Level order inside occupation tuples is ``(e2, e1, g)`` for V schemes and
``(e2, e1, g2, g1)`` for FLA.  All rates are in units of a reference decay
rate and times in units of its inverse; frequencies share the same unit.

The generator acts on the row-major flattened density matrix through a sparse
matrix-vector product (it is never materialized densely against callers), and
time evolution uses fixed-step classical RK4 with the conservative default
``h = min(1e-3, 1/(50 * Gamma_max * N^2))``.  Trace, Hermiticity and spectral
positivity are *checked* at every recorded sample and never repaired.
"""

from __future__ import annotations

import enum
import warnings
from dataclasses import dataclass, field
from math import ceil, comb, sqrt
from typing import Iterable, Sequence

import numpy as np
from scipy import sparse

from . import _backend
from .basis import LoweringSpec, OccupationBasis, OccupationState, enumerate_basis, lowering_matrix

TRACE_TOL = 1e-9
HERMITICITY_TOL = 1e-10
EIGENVALUE_FLOOR = -1e-8


class InvariantViolation(RuntimeError):
    """A density-matrix invariant (trace, Hermiticity, positivity) is broken."""


class SchemeKind(enum.Enum):
    V_NONDEGENERATE = "V_NONDEGENERATE"
    V_DEGENERATE = "V_DEGENERATE"
    FLA = "FLA"


V_LABELS = ("e2", "e1", "g")
FLA_LABELS = ("e2", "e1", "g2", "g1")

# Collective lowering channels, as (source level, target level) in the
# orderings above.  S1 always lowers e1, S2 always lowers e2.
V_CHANNEL_1 = LoweringSpec(source=1, target=2)   # e1 -> g
V_CHANNEL_2 = LoweringSpec(source=0, target=2)   # e2 -> g
FLA_CHANNEL_1 = LoweringSpec(source=1, target=3)      # e1 -> g1, omega_0
FLA_CHANNEL_2 = LoweringSpec(source=0, target=2)      # e2 -> g2, omega_0
FLA_CHANNEL_PLUS = LoweringSpec(source=0, target=3)   # e2 -> g1, omega_plus
FLA_CHANNEL_MINUS = LoweringSpec(source=1, target=2)  # e1 -> g2, omega_minus


@dataclass(frozen=True)
class LevelScheme:
    """Level structure, transition frequencies and decay rates of one model.

    Use the :meth:`v_nondegenerate`, :meth:`v_degenerate` and :meth:`fla`
    constructors; fields not applicable to a kind stay ``None``.  The 2x2
    rate matrix ``gamma`` is indexed by channel (1=e1 transition, 2=e2
    transition) and must be symmetric with non-negative diagonal satisfying
    ``|Gamma_12| <= sqrt(Gamma_11 * Gamma_22)``.
    """

    kind: SchemeKind
    omega1: float | None = None
    omega2: float | None = None
    gamma1: float | None = None
    gamma2: float | None = None
    omega0: float | None = None
    omega_plus: float | None = None
    omega_minus: float | None = None
    gamma: tuple[tuple[float, float], tuple[float, float]] | None = None
    gamma_plus: float | None = None
    gamma_minus: float | None = None

    @classmethod
    def v_nondegenerate(
        cls, *, omega1: float, omega2: float, gamma1: float, gamma2: float
    ) -> "LevelScheme":
        return cls(
            kind=SchemeKind.V_NONDEGENERATE,
            omega1=float(omega1),
            omega2=float(omega2),
            gamma1=float(gamma1),
            gamma2=float(gamma2),
        )

    @classmethod
    def v_degenerate(cls, *, omega0: float, gamma: Sequence[Sequence[float]]) -> "LevelScheme":
        g = np.asarray(gamma, dtype=float)
        return cls(
            kind=SchemeKind.V_DEGENERATE,
            omega0=float(omega0),
            gamma=((g[0, 0], g[0, 1]), (g[1, 0], g[1, 1])),
        )

    @classmethod
    def fla(
        cls,
        *,
        omega0: float,
        omega_plus: float,
        omega_minus: float,
        gamma: Sequence[Sequence[float]],
        gamma_plus: float,
        gamma_minus: float,
    ) -> "LevelScheme":
        g = np.asarray(gamma, dtype=float)
        return cls(
            kind=SchemeKind.FLA,
            omega0=float(omega0),
            omega_plus=float(omega_plus),
            omega_minus=float(omega_minus),
            gamma=((g[0, 0], g[0, 1]), (g[1, 0], g[1, 1])),
            gamma_plus=float(gamma_plus),
            gamma_minus=float(gamma_minus),
        )

    def __post_init__(self) -> None:
        if self.kind is SchemeKind.V_NONDEGENERATE:
            if None in (self.omega1, self.omega2, self.gamma1, self.gamma2):
                raise ValueError("V_NONDEGENERATE needs omega1, omega2, gamma1, gamma2")
            if self.gamma1 < 0 or self.gamma2 < 0:
                raise ValueError("decay rates must be non-negative")
            return
        if self.gamma is None:
            raise ValueError(f"{self.kind.value} needs the 2x2 rate matrix gamma")
        g = np.asarray(self.gamma, dtype=float)
        if g.shape != (2, 2):
            raise ValueError("gamma must be 2x2")
        if g[0, 0] < 0 or g[1, 1] < 0:
            raise ValueError("diagonal rates must be non-negative")
        scale = max(1.0, abs(g).max())
        if abs(g[0, 1] - g[1, 0]) > 1e-12 * scale:
            raise ValueError("gamma must be symmetric (Gamma_12 == Gamma_21)")
        if abs(g[0, 1]) > sqrt(g[0, 0] * g[1, 1]) + 1e-12 * scale:
            raise ValueError("|Gamma_12| must not exceed sqrt(Gamma_11 * Gamma_22)")
        if self.kind is SchemeKind.V_DEGENERATE:
            if self.omega0 is None:
                raise ValueError("V_DEGENERATE needs omega0")
            return
        # FLA
        if None in (self.omega0, self.omega_plus, self.omega_minus, self.gamma_plus, self.gamma_minus):
            raise ValueError("FLA needs omega0, omega_plus, omega_minus, gamma_plus, gamma_minus")
        if self.gamma_plus < 0 or self.gamma_minus < 0:
            raise ValueError("decay rates must be non-negative")
        fscale = max(1.0, abs(self.omega0))
        if abs((self.omega_plus - self.omega0) - (self.omega0 - self.omega_minus)) > 1e-12 * fscale:
            raise ValueError(
                "FLA frequencies must satisfy omega_plus - omega0 == omega0 - omega_minus"
            )

    @property
    def levels(self) -> int:
        return 4 if self.kind is SchemeKind.FLA else 3

    @property
    def level_labels(self) -> tuple[str, ...]:
        return FLA_LABELS if self.kind is SchemeKind.FLA else V_LABELS

    @property
    def delta(self) -> float:
        """Ground-level splitting Delta = omega0 - omega_minus (FLA only)."""
        if self.kind is not SchemeKind.FLA:
            raise ValueError("delta is only defined for the FLA scheme")
        return self.omega0 - self.omega_minus

    @property
    def level_energies(self) -> tuple[float, ...]:
        """Bare level energies, lowest ground level at zero."""
        if self.kind is SchemeKind.V_NONDEGENERATE:
            return (self.omega2, self.omega1, 0.0)
        if self.kind is SchemeKind.V_DEGENERATE:
            return (self.omega0, self.omega0, 0.0)
        return (self.omega_plus, self.omega0, self.delta, 0.0)

    @property
    def gamma_max(self) -> float:
        if self.kind is SchemeKind.V_NONDEGENERATE:
            return max(self.gamma1, self.gamma2)
        rates = [abs(x) for row in self.gamma for x in row]
        if self.kind is SchemeKind.FLA:
            rates += [self.gamma_plus, self.gamma_minus]
        return max(rates)

    @property
    def reference(self) -> tuple[float, float]:
        """(omega_ref, gamma_ref) defining the intensity unit I0 = 2*omega_ref*gamma_ref."""
        if self.kind is SchemeKind.V_NONDEGENERATE:
            return (self.omega1, self.gamma1)
        return (self.omega0, self.gamma[0][0])


@dataclass
class DensityTensor:
    """Density matrix on an occupation basis (row = bra index, column = ket).

    ``basis`` may be ``None`` for matrices living on derived spaces (reduced
    or embedded product spaces) where occupation labels no longer apply.
    """

    basis: OccupationBasis | None
    data: np.ndarray

    def __post_init__(self) -> None:
        self.data = np.asarray(self.data, dtype=np.complex128)
        if self.data.ndim != 2 or self.data.shape[0] != self.data.shape[1]:
            raise ValueError("density matrix must be square")
        if self.basis is not None and self.data.shape[0] != len(self.basis):
            raise ValueError("matrix dimension does not match basis size")

    @property
    def dim(self) -> int:
        return self.data.shape[0]

    def trace(self) -> complex:
        return complex(np.trace(self.data))

    def expectation(self, op: sparse.spmatrix | np.ndarray) -> complex:
        """Tr(op @ rho)."""
        if sparse.issparse(op):
            return complex(op.multiply(self.data.T).sum())
        return complex(np.tensordot(np.asarray(op), self.data.T, axes=2))

    def element(self, bra: OccupationState, ket: OccupationState) -> complex:
        if self.basis is None:
            raise ValueError("element lookup requires an occupation basis")
        return complex(self.data[self.basis.index_of(bra), self.basis.index_of(ket)])

    def validate(
        self,
        *,
        trace_tol: float = TRACE_TOL,
        herm_tol: float = HERMITICITY_TOL,
        eig_floor: float = EIGENVALUE_FLOOR,
    ) -> dict[str, float]:
        """Check trace, Hermiticity and positivity; raise on breach.

        Returns the observed deviations.  Negative eigenvalues above
        ``eig_floor`` are tolerated (reported, never clamped).
        """
        trace_err = abs(self.trace() - 1.0)
        herm_err = float(np.max(np.abs(self.data - self.data.conj().T))) if self.dim else 0.0
        min_eig = float(np.linalg.eigvalsh(0.5 * (self.data + self.data.conj().T)).min())
        report = {"trace_error": trace_err, "hermiticity_error": herm_err, "min_eigenvalue": min_eig}
        if trace_err > trace_tol:
            raise InvariantViolation(f"trace deviates from 1 by {trace_err:.3e}")
        if herm_err > herm_tol:
            raise InvariantViolation(f"Hermiticity violated by {herm_err:.3e}")
        if min_eig < eig_floor:
            raise InvariantViolation(f"negative eigenvalue {min_eig:.3e} below floor {eig_floor:.1e}")
        return report


@dataclass
class TimeSeries:
    """Sampled trajectory: strictly increasing times with one value per time.

    ``values`` is either a list of :class:`DensityTensor` snapshots or a 2-D
    float array with one labelled column per observable.
    """

    times: np.ndarray
    values: Sequence
    labels: tuple[str, ...] | None = None

    def __post_init__(self) -> None:
        self.times = np.asarray(self.times, dtype=float)
        if self.times.ndim != 1:
            raise ValueError("times must be one-dimensional")
        if len(self.times) != len(self.values):
            raise ValueError("times and values must have equal length")
        if len(self.times) > 1 and not np.all(np.diff(self.times) > 0):
            raise ValueError("times must be strictly increasing")

    def __len__(self) -> int:
        return len(self.times)

    def column(self, label: str) -> "TimeSeries":
        """Extract a single labelled observable as a scalar series."""
        if self.labels is None:
            raise ValueError("series has no labelled columns")
        j = self.labels.index(label)
        vals = np.asarray(self.values)[:, j]
        return TimeSeries(times=self.times, values=vals, labels=(label,))


@dataclass
class LindbladGenerator:
    """Sparse-action Lindblad generator: callable rho -> drho/dt.

    ``matrix`` is the superoperator on row-major flattened density matrices;
    it is applied only through sparse matrix-vector products.
    """

    scheme: LevelScheme
    basis: OccupationBasis
    matrix: sparse.csr_matrix
    include_phases: bool

    def __call__(self, rho: DensityTensor) -> np.ndarray:
        v = self.matrix @ rho.data.reshape(-1)
        return v.reshape(rho.data.shape)

    @property
    def dim(self) -> int:
        return len(self.basis)


def _channels(scheme: LevelScheme) -> list[tuple[LoweringSpec, LoweringSpec, float]]:
    """Expand the scheme's rates into (S_l, S_m, Gamma_lm) Lindblad terms."""
    if scheme.kind is SchemeKind.V_NONDEGENERATE:
        return [
            (V_CHANNEL_1, V_CHANNEL_1, scheme.gamma1),
            (V_CHANNEL_2, V_CHANNEL_2, scheme.gamma2),
        ]
    if scheme.kind is SchemeKind.V_DEGENERATE:
        chans = (V_CHANNEL_1, V_CHANNEL_2)
        g = scheme.gamma
        return [
            (chans[l], chans[m], g[l][m])
            for l in range(2)
            for m in range(2)
            if g[l][m] != 0.0
        ]
    chans = (FLA_CHANNEL_1, FLA_CHANNEL_2)
    g = scheme.gamma
    terms = [
        (chans[l], chans[m], g[l][m])
        for l in range(2)
        for m in range(2)
        if g[l][m] != 0.0
    ]
    if scheme.gamma_plus:
        terms.append((FLA_CHANNEL_PLUS, FLA_CHANNEL_PLUS, scheme.gamma_plus))
    if scheme.gamma_minus:
        terms.append((FLA_CHANNEL_MINUS, FLA_CHANNEL_MINUS, scheme.gamma_minus))
    return terms


def state_energy(scheme: LevelScheme, state: OccupationState) -> float:
    """Total bare energy of an occupation state."""
    return float(sum(n * e for n, e in zip(state, scheme.level_energies)))


def build_generator(
    scheme: LevelScheme, n_atoms: int, *, include_phases: bool = True
) -> LindbladGenerator:
    """Assemble the Lindblad generator for ``n_atoms`` atoms of one scheme.

    The dissipator is built at operator level from the collective lowering
    matrices S: for every rate entry Gamma_lm it adds
    ``Gamma_lm (S_l rho S_m^dag - 1/2 {S_m^dag S_l, rho})``.  The coherent
    part is ``-i [H, rho]`` with H diagonal in the occupation basis (bare
    level energies); pass ``include_phases=False`` to drop it (interaction
    picture, exact for degenerate-frequency observables).
    """
    if n_atoms < 1:
        raise ValueError("need at least one atom")
    basis = enumerate_basis(n_atoms, scheme.levels, labels=scheme.level_labels)
    dim = len(basis)
    eye = sparse.identity(dim, dtype=np.float64, format="csr")

    ops: dict[LoweringSpec, sparse.csr_matrix] = {}

    def op(spec: LoweringSpec) -> sparse.csr_matrix:
        if spec not in ops:
            ops[spec] = lowering_matrix(basis, spec)
        return ops[spec]

    total = sparse.csr_matrix((dim * dim, dim * dim), dtype=np.complex128)
    for spec_l, spec_m, rate in _channels(scheme):
        s_l = op(spec_l)
        s_m = op(spec_m)
        k = s_m.T @ s_l
        sandwich = sparse.kron(s_l, s_m, format="csr")  # S_l rho S_m^dag, real S
        anticomm = sparse.kron(k, eye, format="csr") + sparse.kron(eye, k.T, format="csr")
        total = total + rate * (sandwich - 0.5 * anticomm)

    if include_phases:
        energies = np.array([state_energy(scheme, s) for s in basis.states])
        if np.any(energies != 0.0):
            # -i (E_bra - E_ket) on each vectorized element.
            phase = -1j * (energies[:, None] - energies[None, :]).reshape(-1)
            total = total + sparse.diags(phase, format="csr")

    total = sparse.csr_matrix(total)
    total.sum_duplicates()
    return LindbladGenerator(scheme=scheme, basis=basis, matrix=total, include_phases=include_phases)


def symmetric_init(
    scheme: LevelScheme, n_atoms: int, alpha: complex, beta: complex
) -> DensityTensor:
    """Fully excited symmetric product state with per-atom amplitudes (alpha, beta).

    Each atom starts in ``alpha |e1> + beta |e2>`` (no ground occupation).  On
    the symmetrized basis the amplitude of the state with n atoms in e1 is
    ``C(N, n) alpha^n beta^(N-n)`` times the normalization
    ``(sum_j C(N, j)^2 |alpha|^(2j) |beta|^(2(N-j)))^(-1/2)``.
    """
    alpha = complex(alpha)
    beta = complex(beta)
    if abs(abs(alpha) ** 2 + abs(beta) ** 2 - 1.0) > 1e-12:
        raise ValueError("|alpha|^2 + |beta|^2 must equal 1")
    basis = enumerate_basis(n_atoms, scheme.levels, labels=scheme.level_labels)
    psi = np.zeros(len(basis), dtype=np.complex128)
    pad = (0,) * (scheme.levels - 2)
    norm2 = sum(
        comb(n_atoms, j) ** 2 * abs(alpha) ** (2 * j) * abs(beta) ** (2 * (n_atoms - j))
        for j in range(n_atoms + 1)
    )
    norm = 1.0 / sqrt(norm2)
    for n in range(n_atoms + 1):
        state = (n_atoms - n, n) + pad
        psi[basis.index_of(state)] = norm * comb(n_atoms, n) * alpha**n * beta ** (n_atoms - n)
    rho = DensityTensor(basis=basis, data=np.outer(psi, psi.conj()))
    rho.validate()
    return rho


def default_step(scheme: LevelScheme, n_atoms: int) -> float:
    """Conservative RK4 step: min(1e-3, 1/(50 * Gamma_max * N^2))."""
    return min(1e-3, 1.0 / (50.0 * scheme.gamma_max * n_atoms**2))


def integrate(
    gen: LindbladGenerator,
    rho0: DensityTensor,
    t_end: float,
    *,
    step: float | None = None,
    sample_dt: float | None = None,
    validate: bool = True,
    force_python_backend: bool = False,
) -> TimeSeries:
    """Propagate rho0 to t_end, recording snapshots every ~sample_dt.

    The step is fixed (classical RK4) and chosen as the largest value not
    exceeding both the requested/default step and an integer division of
    ``t_end``, so the final sample lands exactly on ``t_end``.  Every recorded
    snapshot is validated (trace, Hermiticity, positivity) unless
    ``validate=False``; a breach raises :class:`InvariantViolation`.
    """
    if t_end <= 0:
        raise ValueError("t_end must be positive")
    if rho0.basis is None or len(rho0.basis) != gen.dim:
        raise ValueError("initial state does not live on the generator's basis")

    h_max = step if step is not None else default_step(gen.scheme, gen.basis.total)
    n_total = max(1, ceil(t_end / h_max - 1e-12))
    h = t_end / n_total
    if sample_dt is None:
        sample_dt = max(h, t_end / 200.0)
    stride = max(1, min(n_total, round(sample_dt / h)))

    stepper = _backend.make_stepper(gen.matrix, force_python=force_python_backend)
    y = rho0.data.reshape(-1).astype(np.complex128).copy()
    dim = gen.dim

    times = [0.0]
    snapshots = [DensityTensor(basis=gen.basis, data=rho0.data.copy())]
    if validate:
        snapshots[0].validate()

    done = 0
    while done < n_total:
        n = min(stride, n_total - done)
        y = stepper(y, h, n)
        done += n
        t = done * h
        snap = DensityTensor(basis=gen.basis, data=y.reshape(dim, dim).copy())
        if validate:
            try:
                snap.validate()
            except InvariantViolation as exc:
                raise InvariantViolation(f"at t={t:.6g}: {exc}") from exc
        times.append(t)
        snapshots.append(snap)

    return TimeSeries(times=np.asarray(times), values=snapshots)


def _quadratic_ops(basis: OccupationBasis, spec_l: LoweringSpec, spec_m: LoweringSpec) -> sparse.csr_matrix:
    """S_l^dag S_m on the given basis (real sparse matrix)."""
    s_l = lowering_matrix(basis, spec_l)
    s_m = lowering_matrix(basis, spec_m)
    return sparse.csr_matrix(s_l.T @ s_m)


def intensities(series: TimeSeries, scheme: LevelScheme) -> TimeSeries:
    """Per-transition photodetection intensities along a trajectory.

    Each column is ``2 omega Gamma <S^dag S>`` in units of the two-level
    reference ``I0 = 2 omega_ref Gamma_ref`` of the scheme.  Degenerate
    schemes additionally report the interference contributions
    ``C_12 = 2 omega_0 Gamma_12 <S_1^dag S_2> / I0`` and its transpose
    partner; for the FLA the ``I_w0`` column already contains both (the
    physical omega_0 line includes the interference).
    """
    first = series.values[0]
    if not isinstance(first, DensityTensor) or first.basis is None:
        raise ValueError("intensities needs a DensityTensor trajectory")
    basis = first.basis
    omega_ref, gamma_ref = scheme.reference
    i0 = 2.0 * omega_ref * gamma_ref
    if i0 <= 0:
        raise ValueError("reference intensity must be positive")

    if scheme.kind is SchemeKind.V_NONDEGENERATE:
        terms = [
            ("I_w1", 2.0 * scheme.omega1 * scheme.gamma1, V_CHANNEL_1, V_CHANNEL_1),
            ("I_w2", 2.0 * scheme.omega2 * scheme.gamma2, V_CHANNEL_2, V_CHANNEL_2),
        ]
        sums = {"I_total": ("I_w1", "I_w2")}
    elif scheme.kind is SchemeKind.V_DEGENERATE:
        g = scheme.gamma
        w0 = scheme.omega0
        terms = [
            ("I_1", 2.0 * w0 * g[0][0], V_CHANNEL_1, V_CHANNEL_1),
            ("I_2", 2.0 * w0 * g[1][1], V_CHANNEL_2, V_CHANNEL_2),
            ("C_12", 2.0 * w0 * g[0][1], V_CHANNEL_1, V_CHANNEL_2),
            ("C_21", 2.0 * w0 * g[1][0], V_CHANNEL_2, V_CHANNEL_1),
        ]
        sums = {"I_total": ("I_1", "I_2", "C_12", "C_21")}
    else:
        g = scheme.gamma
        w0 = scheme.omega0
        terms = [
            ("I_11", 2.0 * w0 * g[0][0], FLA_CHANNEL_1, FLA_CHANNEL_1),
            ("I_22", 2.0 * w0 * g[1][1], FLA_CHANNEL_2, FLA_CHANNEL_2),
            ("C_12", 2.0 * w0 * g[0][1], FLA_CHANNEL_1, FLA_CHANNEL_2),
            ("C_21", 2.0 * w0 * g[1][0], FLA_CHANNEL_2, FLA_CHANNEL_1),
            ("I_wplus", 2.0 * scheme.omega_plus * scheme.gamma_plus, FLA_CHANNEL_PLUS, FLA_CHANNEL_PLUS),
            ("I_wminus", 2.0 * scheme.omega_minus * scheme.gamma_minus, FLA_CHANNEL_MINUS, FLA_CHANNEL_MINUS),
        ]
        sums = {
            "I_w0": ("I_11", "I_22", "C_12", "C_21"),
            "I_total": ("I_11", "I_22", "C_12", "C_21", "I_wplus", "I_wminus"),
        }

    ops = [(label, coeff / i0, _quadratic_ops(basis, sl, sm)) for label, coeff, sl, sm in terms]
    raw = np.empty((len(series), len(ops)), dtype=float)
    for i, rho in enumerate(series.values):
        for j, (_, coeff, op) in enumerate(ops):
            raw[i, j] = coeff * rho.expectation(op).real

    labels = [label for label, _, _ in ops]
    columns = {label: raw[:, j] for j, label in enumerate(labels)}
    for label, parts in sums.items():
        columns[label] = sum(columns[p] for p in parts)
    out_labels = tuple(columns.keys())
    out = np.column_stack([columns[label] for label in out_labels])
    return TimeSeries(times=series.times, values=out, labels=out_labels)


def detect_peak(series: TimeSeries) -> tuple[float, float]:
    """Locate the intensity maximum of a scalar series.

    Interior maxima are refined by fitting a parabola through the three
    samples around the grid argmax.  A maximum on the window boundary (e.g. a
    monotonically decaying signal, which peaks at t=0) is returned as-is with
    a RuntimeWarning.
    """
    vals = np.asarray(series.values, dtype=float)
    if vals.ndim != 1:
        raise ValueError("detect_peak needs a scalar series (use TimeSeries.column)")
    if len(vals) < 3:
        raise ValueError("need at least three samples")
    i = int(np.argmax(vals))
    t = series.times
    if i == 0 or i == len(vals) - 1:
        warnings.warn(
            "intensity maximum sits on the window boundary (no interior peak)",
            RuntimeWarning,
            stacklevel=2,
        )
        return float(t[i]), float(vals[i])
    # Parabola through (t[i-1..i+1], vals[i-1..i+1]); vertex is the refined peak.
    t0, t1, t2 = t[i - 1], t[i], t[i + 1]
    y0, y1, y2 = vals[i - 1], vals[i], vals[i + 1]
    denom = (t0 - t1) * (t0 - t2) * (t1 - t2)
    a = (t2 * (y1 - y0) + t1 * (y0 - y2) + t0 * (y2 - y1)) / denom
    b = (t2**2 * (y0 - y1) + t1**2 * (y2 - y0) + t0**2 * (y1 - y2)) / denom
    if a >= 0:  # flat or degenerate; keep the grid point
        return float(t1), float(y1)
    tp = -b / (2 * a)
    c = y1 - a * t1**2 - b * t1
    return float(tp), float(a * tp**2 + b * tp + c)


def _excited_element_mask(basis: OccupationBasis) -> np.ndarray:
    """Boolean matrix flagging elements whose bra or ket occupies e1 or e2."""
    excited = np.array([s[0] + s[1] > 0 for s in basis.states])
    return excited[:, None] | excited[None, :]


def steady_state_time(series: TimeSeries, threshold: float = 1e-4) -> float | None:
    """Earliest sample time after which all excited-sector elements stay small.

    An element "involves excited occupation" if its bra or ket state has any
    population in e1 or e2.  Returns the earliest recorded time T such that
    every such element has modulus below ``threshold`` at every sample with
    t >= T, or ``None`` if the condition never holds up to the end of the
    series.
    """
    first = series.values[0]
    if not isinstance(first, DensityTensor) or first.basis is None:
        raise ValueError("steady_state_time needs a DensityTensor trajectory")
    mask = _excited_element_mask(first.basis)
    last_bad = -1
    for i, rho in enumerate(series.values):
        if np.abs(rho.data[mask]).max() >= threshold:
            last_bad = i
    if last_bad == len(series) - 1:
        return None
    return float(series.times[last_bad + 1])


def coherence_spectrum(
    series: TimeSeries,
    entries: Iterable[tuple[OccupationState, OccupationState]],
    *,
    amplitude_floor: float = 1e-8,
) -> list[tuple[float, float]]:
    """Dominant angular frequency and amplitude of selected matrix elements.

    For each (bra, ket) pair the element's time signal is mean-subtracted and
    Fourier-transformed on the (uniform) sample grid; the result is the
    angular frequency of the strongest bin and its amplitude.  Signals with
    peak-to-mean deviation below ``amplitude_floor`` report frequency 0 (a
    constant signal has no oscillation).  Raises if the window is too short
    to resolve anything (fewer than 16 samples).
    """
    if len(series) < 16:
        raise ValueError("window too short: need at least 16 samples to resolve frequencies")
    dt_all = np.diff(series.times)
    dt = dt_all[0]
    if np.max(np.abs(dt_all - dt)) > 1e-9 * dt:
        raise ValueError("coherence_spectrum requires uniform sampling")
    first = series.values[0]
    if not isinstance(first, DensityTensor) or first.basis is None:
        raise ValueError("coherence_spectrum needs a DensityTensor trajectory")
    basis = first.basis

    n = len(series)
    freqs = 2.0 * np.pi * np.fft.fftfreq(n, d=dt)
    results: list[tuple[float, float]] = []
    for bra, ket in entries:
        i = basis.index_of(tuple(bra))
        j = basis.index_of(tuple(ket))
        signal = np.array([rho.data[i, j] for rho in series.values])
        signal = signal - signal.mean()
        spectrum = np.abs(np.fft.fft(signal)) / n
        k = int(np.argmax(spectrum))
        amp = float(spectrum[k])
        if amp < amplitude_floor:
            results.append((0.0, amp))
        else:
            results.append((abs(float(freqs[k])), amp))
    return results


def ground_sector_state(rho: DensityTensor, *, renormalize: bool = True) -> DensityTensor:
    """Restrict an FLA density matrix to its fully ground sector (n_g2, n_g1).

    Keeps the elements with no excited occupation on either side, relabelled
    on the two-level occupation basis of (g2, g1).  By default the block is
    renormalized to unit trace (appropriate at late times, when the excited
    sector has decayed away); the pre-normalization weight is available as
    the trace of the extracted block with ``renormalize=False``.
    """
    if rho.basis is None or rho.basis.levels != 4:
        raise ValueError("ground sector extraction requires a four-level (FLA) basis")
    n = rho.basis.total
    ground = enumerate_basis(n, 2, labels=("g2", "g1"))
    idx = [rho.basis.index_of((0, 0) + s) for s in ground.states]
    block = rho.data[np.ix_(idx, idx)].copy()
    weight = float(np.trace(block).real)
    if renormalize:
        if weight < 1e-10:
            raise ValueError("ground sector carries no population")
        block /= weight
    return DensityTensor(basis=ground, data=block)
