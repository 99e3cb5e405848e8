"""Weak-measurement trajectory dynamics with adaptive corrective feedback.

One subroutine acts on a single bond: it repeatedly applies a two-outcome
weak measurement built from the bond projector, tracks the outcome counts
(k0, k1) since the last correction, and estimates the bond energy the
record points at,

    e_peak = arcsin((k1 - k0) / (k0 + k1)) / (2 epsilon).

The subroutine declares convergence after ``window`` consecutive estimates
below the threshold e_th = epsilon / eta.  A correction (random two-site
rotation) fires when the estimate crosses the threshold AND the crossing
is backed by ``fire_window`` consecutive q = 1 outcomes.  Both halves of
the trigger matter:

* The run requirement keeps the loop from chasing shot noise.  A lone
  q = 1 right after a counter reset already estimates e_peak = pi/2, so
  firing on the first crossing produces correction chains that keep any
  chain from locking (measured: mean fidelity 0.4-0.65 at 100 rounds).
  At an excited bond, runs of ``fire_window`` excited outcomes appear
  within a couple of attempts (p1 ~ 0.92 at eps = 0.5); at a converged
  bond they cost 2^-fire_window per fresh stretch.
* The threshold requirement silences the residual noise trigger once a
  bond has accumulated history: a run of 12 on top of 500 balanced counts
  barely moves the estimate, so converged bonds are left alone for good,
  where the run alone would still re-kick them roughly once per thousand
  measurements and leave a fraction of long trajectories caught
  mid-repair.

Two bookkeeping rules keep the threshold half responsive.  Counters are
rescaled (both counts halved) above ``counter_cap`` accumulated outcomes,
bounding how much history a fresh excitation must outvote.  And a
correction resets the counters of the two bonds sharing a site with it:
their evidence describes a state that no longer exists, and fresh counters
let real damage fire within tens of measurements instead of drifting
through hundreds of stale counts.

Counters persist across sweep rounds otherwise.  The iteration cap
``n_iter`` bounds each unconverged stretch between corrections, so a
subroutine visit resolves its bond (kick, re-collapse, re-check) instead
of carrying half-finished repairs into the next round.

A sweep round runs the subroutine over all odd bonds, then all even bonds.

RNG discipline (one trajectory = one ``numpy`` Generator): each round
first draws per-site noise angles (sites 1..N, only when noise is active),
then per measurement one uniform variate, and per correction six uniforms
(three per site, x/y/z order, lower-numbered site first).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.linalg import expm

from . import qubit_map
from .spin_ops import (
    AkltReference,
    SpinMatrices,
    aklt_state,
    bond_projector,
    site_matrices,
    spin1_matrices,
)
from .statevec import (
    KrausPair,
    StateVector,
    apply_one_site,
    apply_two_site,
    born_sample,
    fidelity,
    partial_fidelity,
    product_state,
)

SQRT2 = math.sqrt(2.0)
_IDEMPOTENT_TOL = 1e-10
DEFAULT_ETA = {"spin1": 4.0, "qubit": 2.0}


@dataclass(frozen=True)
class MiteConfig:
    """Run parameters for trajectory preparation.

    ``eta = None`` resolves to the mode default (4 for spin1, 2 for qubit).
    ``early_stop`` ends a trajectory once the total fidelity exceeds
    ``1 - early_stop``; set it to ``None`` to run all ``r_max`` rounds.
    ``record_bond_series`` additionally stores, per bond, the partial
    fidelity after every single measurement (indexed by the bond's
    cumulative measurement count), which roughly doubles the cost.
    """

    epsilon: float = 0.5
    eta: float | None = None
    n_iter: int = 30
    r_max: int = 100
    window: int = 10
    fire_window: int = 10
    counter_cap: int = 256
    noise_axis: str | None = None
    noise_sigma2: float = 0.0
    seed: int = 0
    early_stop: float | None = 1e-6
    record_bond_series: bool = False

    def __post_init__(self):
        if self.epsilon <= 0:
            raise ValueError("epsilon must be positive")
        if self.eta is not None and self.eta <= 0:
            raise ValueError("eta must be positive")
        if not 1 <= self.window <= self.n_iter:
            raise ValueError("need n_iter >= window >= 1")
        if self.fire_window < 1:
            raise ValueError("fire_window must be at least 1")
        if self.counter_cap < 4 * self.fire_window:
            raise ValueError("counter_cap must be at least 4x fire_window")
        if self.r_max < 0:
            raise ValueError("r_max must be nonnegative")
        if self.noise_axis not in (None, "x", "z"):
            raise ValueError("noise axis must be 'x' or 'z'")
        if self.noise_sigma2 < 0:
            raise ValueError("noise variance parameter must be nonnegative")

    def resolved_eta(self, mode: str) -> float:
        if self.eta is not None:
            return self.eta
        return DEFAULT_ETA[mode]

    def e_th(self, mode: str) -> float:
        """Threshold energy epsilon/eta; must sit below the 1/2 midpoint
        between the two bond-energy levels."""
        e_th = self.epsilon / self.resolved_eta(mode)
        if e_th >= 0.5:
            raise ValueError(f"e_th = {e_th} not below the level midpoint 1/2")
        return e_th


@dataclass
class MeasurementCounter:
    """Per-bond outcome record since the last correction.

    ``run1`` is the current streak of consecutive q = 1 outcomes (it resets
    on any q = 0 and on corrections; k0, k1 reset on corrections only).
    """

    k0: int = 0
    k1: int = 0
    run1: int = 0

    @property
    def total(self) -> int:
        return self.k0 + self.k1

    def record(self, q: int):
        if q == 0:
            self.k0 += 1
            self.run1 = 0
        else:
            self.k1 += 1
            self.run1 += 1

    def rescale(self):
        """Halve both counts (ratio-preserving forgetting at the cap)."""
        self.k0 //= 2
        self.k1 //= 2

    def reset(self):
        self.k0 = 0
        self.k1 = 0
        self.run1 = 0


def measurement_kraus(epsilon: float, projector: np.ndarray) -> KrausPair:
    """Weak-measurement pair m_q = (1 + (cos eps - 1 - (-1)^q sin eps) P) / sqrt(2).

    Acts as 1/sqrt(2) on the projector's kernel and as
    (cos eps -+ sin eps)/sqrt(2) on its range; the 1/sqrt(2) prefactor makes
    the pair complete (m0'm0 + m1'm1 = 1) exactly.
    """
    projector = np.asarray(projector, dtype=complex)
    defect = np.max(np.abs(projector @ projector - projector))
    if defect > _IDEMPOTENT_TOL:
        raise ValueError(f"projector is not idempotent (defect {defect:.3e})")
    eye = np.eye(projector.shape[0])
    c, s = math.cos(epsilon), math.sin(epsilon)
    m0 = (eye + (c - 1 - s) * projector) / SQRT2
    m1 = (eye + (c - 1 + s) * projector) / SQRT2
    return KrausPair(m0, m1)


def peak_energy(k0: int, k1: int, epsilon: float) -> float:
    """Energy at which the accumulated measurement amplitude is peaked."""
    total = k0 + k1
    if total <= 0:
        raise ValueError("peak energy undefined for empty counts")
    return math.asin((k1 - k0) / total) / (2.0 * epsilon)


def amplitude_log(k0: int, k1: int, chi: float) -> float:
    """log |amplitude| accumulated by a (k0, k1) outcome record at angle chi.

    Diagnostic only; the trajectory logic never consumes it.  Returns -inf
    where either factor vanishes.
    """
    c0 = abs(math.cos(chi + math.pi / 4))
    c1 = abs(math.cos(chi - math.pi / 4))
    if (k0 > 0 and c0 == 0.0) or (k1 > 0 and c1 == 0.0):
        return -math.inf
    out = 0.0
    if k0 > 0:
        out += k0 * math.log(c0)
    if k1 > 0:
        out += k1 * math.log(c1)
    return out


def spin_rotation(angles, site: SpinMatrices) -> np.ndarray:
    """exp[2 pi i (a_x Sx + a_y Sy + a_z Sz)] for one site."""
    gen = angles[0] * site.sx + angles[1] * site.sy + angles[2] * site.sz
    return expm(2j * np.pi * gen)


def correction_unitary(site: SpinMatrices, rng: np.random.Generator) -> np.ndarray:
    """Independent random spin rotations on the two sites of a bond.

    Six uniform [0, 1) draws: x/y/z angles for the lower-numbered site, then
    for its neighbor.
    """
    left = spin_rotation(rng.random(3), site)
    right = spin_rotation(rng.random(3), site)
    return np.kron(left, right)


@dataclass(frozen=True)
class ChainOps:
    """Operators and reference state for one (n, mode) chain."""

    n: int
    mode: str
    epsilon: float
    projector: np.ndarray
    kraus: KrausPair
    site: SpinMatrices
    reference: AkltReference

    def initial_state(self) -> StateVector:
        if self.mode == "spin1":
            return product_state(self.n, d=3, local=0)
        return product_state(self.n, d=2, local=0, spins_per_site=2)

    def bonds(self) -> tuple[list[int], list[int]]:
        odd = list(range(1, self.n + 1, 2))
        even = list(range(2, self.n + 1, 2))
        return odd, even


def build_chain(n: int, mode: str = "spin1", epsilon: float = 0.5) -> ChainOps:
    if mode == "spin1":
        proj = bond_projector("spin1").matrix
        reference = aklt_state(n)
    elif mode == "qubit":
        proj = bond_projector("qubit-mapped").matrix
        reference = qubit_map.qubit_aklt_state(n)
    else:
        raise ValueError(f"unknown mode {mode!r}")
    return ChainOps(
        n=n,
        mode=mode,
        epsilon=epsilon,
        projector=proj,
        kraus=measurement_kraus(epsilon, proj),
        site=site_matrices(mode if mode == "spin1" else "qubit-mapped"),
        reference=reference,
    )


@dataclass
class SubroutineStats:
    """Audit record of one subroutine invocation."""

    bond: int
    measurements: int = 0
    corrections: int = 0
    converged: bool = False
    e_peak_last: float = 0.0
    outcomes: list[int] = field(default_factory=list)
    counts_after: list[tuple[int, int]] = field(default_factory=list)


def mite_subroutine(
    state: StateVector,
    j: int,
    chain: ChainOps,
    config: MiteConfig,
    rng: np.random.Generator,
    counter: MeasurementCounter | None = None,
    bond_series: list[tuple[int, float]] | None = None,
    bond_t0: int = 0,
) -> tuple[StateVector, SubroutineStats]:
    """Run one measure-and-correct subroutine on bond ``j``.

    Measures until either ``window`` consecutive in-threshold estimates
    declare convergence or ``n_iter`` measurements pass without a
    correction.  A correction fires the moment the peak estimate sits at
    or above threshold while the counter's last ``fire_window`` outcomes
    are all q = 1; it resets the counter and the iteration budget, so one
    visit may fire several times (each backed by its own complete run)
    before it converges or gives up.

    ``counter`` carries the bond's record across invocations; a fresh one
    is used when omitted.  When ``bond_series`` is given, (cumulative
    measurement count, partial fidelity) pairs are appended after every
    measurement, with counts offset by ``bond_t0``.
    """
    if counter is None:
        counter = MeasurementCounter()
    e_th = config.e_th(chain.mode)
    stats = SubroutineStats(bond=j)
    streak = 0
    t = 0
    while t < config.n_iter:
        q, state = born_sample(chain.kraus, j, state, rng)
        t += 1
        stats.measurements += 1
        stats.outcomes.append(q)
        counter.record(q)
        if counter.total > config.counter_cap:
            counter.rescale()
        e_peak = peak_energy(counter.k0, counter.k1, config.epsilon)
        stats.e_peak_last = e_peak
        if counter.run1 >= config.fire_window and e_peak >= e_th:
            state = apply_two_site(correction_unitary(chain.site, rng), j, state)
            stats.corrections += 1
            counter.reset()
            streak = 0
            t = 0
        else:
            streak = streak + 1 if e_peak < e_th else 0
        stats.counts_after.append((counter.k0, counter.k1))
        if bond_series is not None:
            bond_series.append(
                (bond_t0 + stats.measurements, partial_fidelity(state, j, chain.projector))
            )
        if streak >= config.window:
            stats.converged = True
            break
    return state, stats


def sweep_round(
    state: StateVector,
    chain: ChainOps,
    config: MiteConfig,
    rng: np.random.Generator,
    counters: dict[int, MeasurementCounter] | None = None,
    bond_series: dict[int, list] | None = None,
    bond_t0: dict[int, int] | None = None,
) -> tuple[StateVector, list[SubroutineStats]]:
    """One full sweep: subroutines on all odd bonds, then all even bonds."""
    if counters is None:
        counters = {j: MeasurementCounter() for j in range(1, chain.n + 1)}
    odd, even = chain.bonds()
    stats: list[SubroutineStats] = []
    for j in odd + even:
        series = bond_series.get(j) if bond_series is not None else None
        t0 = bond_t0.get(j, 0) if bond_t0 is not None else 0
        state, st = mite_subroutine(state, j, chain, config, rng, counters[j], series, t0)
        if st.corrections > 0:
            # neighbors' evidence refers to a state the correction destroyed
            counters[1 + (j - 2) % chain.n].reset()
            counters[1 + j % chain.n].reset()
        if bond_t0 is not None:
            bond_t0[j] = t0 + st.measurements
        stats.append(st)
    return state, stats


def _noise_rotations(site: SpinMatrices, axis: str) -> tuple[np.ndarray, np.ndarray]:
    """Eigendecomposition of the noise generator, for cheap exp(i xi S)."""
    gen = {"x": site.sx, "z": site.sz}[axis]
    vals, vecs = np.linalg.eigh(gen)
    return vals, vecs


def apply_noise(
    state: StateVector,
    axis: str,
    sigma2: float,
    rng: np.random.Generator,
    site: SpinMatrices | None = None,
    _eig=None,
) -> StateVector:
    """Random local rotations exp(i xi_j S_j^axis) on every site.

    Angles are i.i.d. with density proportional to exp(-xi^2 / sigma2),
    i.e. Gaussian with variance sigma2 / 2 (the density is taken literally;
    note the factor 2).  ``sigma2 = 0`` is the identity and consumes no
    random numbers.
    """
    if sigma2 == 0.0:
        return state
    if site is None:
        site = spin1_matrices() if state.spins_per_site == 1 else site_matrices("qubit-mapped")
    vals, vecs = _eig if _eig is not None else _noise_rotations(site, axis)
    scale = math.sqrt(sigma2 / 2.0)
    for j in range(1, state.n_sites + 1):
        xi = scale * rng.standard_normal()
        rot = (vecs * np.exp(1j * xi * vals)) @ vecs.conj().T
        state = apply_one_site(rot, j, state)
    return state


@dataclass
class TrajectoryRecord:
    """Everything one prepared trajectory reports.

    Round-indexed series: ``f_tot[r]`` and ``partial[r]`` include the
    initial state at r = 0; ``e_peak``, ``corrections`` and
    ``measurements`` start at round 1 (list index 0).  ``e_peak[r][b]`` is
    the last peak estimate seen on bond b+1 during round r+1 (signed).
    """

    n: int
    mode: str
    seed: int
    rounds_executed: int
    f_tot: list[float]
    partial: list[list[float]]
    e_peak: list[list[float]]
    corrections: list[int]
    measurements: list[list[int]]
    converged_round: int | None
    sym_weight: list[float] | None = None
    bond_series: dict[int, list[tuple[int, float]]] | None = None

    @property
    def total_corrections(self) -> int:
        return sum(self.corrections)


def prepare(config: MiteConfig, n: int, mode: str = "spin1") -> TrajectoryRecord:
    """Run one full preparation trajectory and record it.

    Starts from the all-(m=1) product state (spin1) or the all-|00> state
    (qubit), optionally applies noise at the top of each round, and sweeps
    until ``r_max`` rounds or the early-stop fidelity is reached.
    """
    chain = build_chain(n, mode, config.epsilon)
    config.e_th(mode)  # validate threshold up front
    rng = np.random.default_rng(config.seed)
    state = chain.initial_state()

    noisy = config.noise_axis is not None and config.noise_sigma2 > 0.0
    noise_eig = _noise_rotations(chain.site, config.noise_axis) if noisy else None
    track_sym = mode == "qubit"

    counters = {j: MeasurementCounter() for j in range(1, n + 1)}
    bond_series = {j: [] for j in range(1, n + 1)} if config.record_bond_series else None
    bond_t0 = {j: 0 for j in range(1, n + 1)} if config.record_bond_series else None

    def all_partials(s):
        return [partial_fidelity(s, j, chain.projector) for j in range(1, n + 1)]

    f_tot = [fidelity(state, chain.reference.state)]
    partial = [all_partials(state)]
    e_peak: list[list[float]] = []
    corrections: list[int] = []
    measurements: list[list[int]] = []
    sym_weight = [qubit_map.symmetric_weight(state)] if track_sym else None

    rounds_executed = 0
    converged_round = None
    for r in range(1, config.r_max + 1):
        if noisy:
            state = apply_noise(
                state, config.noise_axis, config.noise_sigma2, rng, chain.site, noise_eig
            )
        state, stats = sweep_round(state, chain, config, rng, counters, bond_series, bond_t0)
        rounds_executed = r
        by_bond = {st.bond: st for st in stats}
        f_tot.append(fidelity(state, chain.reference.state))
        partial.append(all_partials(state))
        e_peak.append([by_bond[j].e_peak_last for j in range(1, n + 1)])
        corrections.append(sum(st.corrections for st in stats))
        measurements.append([by_bond[j].measurements for j in range(1, n + 1)])
        if track_sym:
            sym_weight.append(qubit_map.symmetric_weight(state))
        if config.early_stop is not None and f_tot[-1] > 1.0 - config.early_stop:
            converged_round = r
            break

    return TrajectoryRecord(
        n=n,
        mode=mode,
        seed=config.seed,
        rounds_executed=rounds_executed,
        f_tot=f_tot,
        partial=partial,
        e_peak=e_peak,
        corrections=corrections,
        measurements=measurements,
        converged_round=converged_round,
        sym_weight=sym_weight,
        bond_series=bond_series,
    )


def run_trajectories(
    config: MiteConfig, n: int, mode: str, runs: int
) -> list[TrajectoryRecord]:
    """Independent trajectories with per-run seeds ``config.seed + run_id``."""
    return [
        prepare(replace(config, seed=config.seed + run_id), n, mode)
        for run_id in range(runs)
    ]


def padded_series(record: TrajectoryRecord, r_max: int) -> np.ndarray:
    """Round-indexed fidelity series padded to length r_max + 1 with the
    final value (early-stopped trajectories hold their converged state)."""
    f = list(record.f_tot)
    f.extend([f[-1]] * (r_max + 1 - len(f)))
    return np.array(f[: r_max + 1])


def padded_peak_series(record: TrajectoryRecord, r_max: int) -> np.ndarray:
    """Per-round bond-averaged peak estimates padded to length r_max."""
    p = [float(np.mean(row)) for row in record.e_peak]
    if not p:
        return np.zeros(r_max)
    p.extend([p[-1]] * (r_max - len(p)))
    return np.array(p[:r_max])


# ---------------------------------------------------------------------------
# deterministic direct-projection oracle

def sx_stretched_site_ket() -> np.ndarray:
    """The Sx eigenvalue +1 eigenvector of one spin-1 site, in the Sz basis."""
    s1 = spin1_matrices()
    vals, vecs = np.linalg.eigh(s1.sx)
    vec = vecs[:, int(np.argmax(vals))]
    k = int(np.argmax(np.abs(vec)))
    return vec * (abs(vec[k]) / vec[k])


def twisted_sx_product(n: int, theta: float = 1.0) -> StateVector:
    """Product of x-stretched site states with a per-site twist about z:
    site j carries exp(-i theta (j-1) Sz) |m_x = +1>.

    The twist is load-bearing.  Without it the state is annihilated by the
    very first bond projection (every bond of a uniformly stretched product
    is a pure total-spin-2 pair), and ANY uniform product is exactly
    orthogonal to the target for odd chain lengths (the odd-N reference
    state is odd under site reflection while uniform products are even).
    A twist angle incommensurate with pi breaks both selection rules for
    every chain length; at commensurate angles some lengths regain a shared
    symmetry and the overlap vanishes again.
    """
    s1 = spin1_matrices()
    base = sx_stretched_site_ket()
    amps = np.array([1.0 + 0j])
    for j in range(n):
        rot = expm(-1j * theta * j * s1.sz)
        amps = np.kron(amps, rot @ base)
    return StateVector(amps, n, 3)


def direct_projection_converge(
    n: int,
    r_max: int = 15,
    reference: AkltReference | None = None,
    twist: float = 1.0,
) -> np.ndarray:
    """Fidelity series of the deterministic projection cascade.

    Starting from the twisted x-stretched product state, each round applies
    (1 - P) on every odd bond, then on every even bond, renormalizing once
    per round.  Returns fidelities against the AKLT reference at
    r = 0 .. r_max.
    """
    if not 3 <= n <= 9:
        raise ValueError(f"n = {n} outside the supported range 3..9")
    if reference is None:
        reference = aklt_state(n)
    proj = bond_projector("spin1").matrix
    comp = np.eye(9) - proj
    state = twisted_sx_product(n, twist)
    series = [fidelity(state, reference.state)]
    for _ in range(r_max):
        for j in list(range(1, n + 1, 2)) + list(range(2, n + 1, 2)):
            state = apply_two_site(comp, j, state)
        nrm = state.norm()
        if nrm < 1e-15:
            raise RuntimeError("projection cascade annihilated the state")
        state = state.with_amps(state.amps / nrm)
        series.append(fidelity(state, reference.state))
    return np.array(series)


def critical_rounds(series, level: float = 0.9, rounds=None) -> float:
    """Interpolated round count at which the series first reaches ``level``."""
    series = np.asarray(series, dtype=float)
    rounds = np.arange(len(series)) if rounds is None else np.asarray(rounds, dtype=float)
    if series.shape != rounds.shape:
        raise ValueError("series and rounds must have equal length")
    above = np.nonzero(series >= level)[0]
    if above.size == 0:
        raise ValueError(f"series never reaches level {level}")
    i = int(above[0])
    if i == 0:
        return float(rounds[0])
    r0, r1 = rounds[i - 1], rounds[i]
    s0, s1 = series[i - 1], series[i]
    return float(r0 + (level - s0) * (r1 - r0) / (s1 - s0))
