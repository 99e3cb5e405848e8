"""Dense state vectors on a small periodic chain, with local operator application.

Basis conventions (fixed; serialized states depend on them):

* Site 1 is the slowest-varying digit of the flattened amplitude index,
  i.e. ``amps.reshape((d,) * n_axes)`` puts site 1 on axis 0.
* Spin-1 digits encode ``m = +1, 0, -1`` as ``0, 1, 2``.
* In the two-qubit-per-site encoding (``spins_per_site=2``) each chain site
  occupies two adjacent axes (sub-spin a, then b); ``|0>`` is the
  ``sigma^z = +1`` state, so digit 0 means spin up.

Bond indices are 1-based: bond ``j`` couples chain sites ``(j, j+1)`` with
``j = n_sites`` wrapping around to site 1 (periodic boundary).
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass

import numpy as np

_NORM_TOL = 1e-12


@dataclass
class StateVector:
    """Complex amplitudes over ``n_sites`` chain sites.

    ``d`` is the dimension of one array axis (3 for a spin-1 chain, 2 for
    qubits) and ``spins_per_site`` how many axes one chain site occupies
    (1 for spin-1, 2 for the qubit-pair encoding).
    """

    amps: np.ndarray
    n_sites: int
    d: int = 3
    spins_per_site: int = 1

    def __post_init__(self):
        self.amps = np.asarray(self.amps, dtype=complex)
        if self.amps.shape != (self.dim,):
            raise ValueError(
                f"amplitude vector has length {self.amps.size}, expected "
                f"{self.d}^{self.n_axes} = {self.dim}"
            )

    @property
    def n_axes(self) -> int:
        return self.n_sites * self.spins_per_site

    @property
    def site_dim(self) -> int:
        return self.d**self.spins_per_site

    @property
    def dim(self) -> int:
        return self.d**self.n_axes

    def norm(self) -> float:
        return float(np.linalg.norm(self.amps))

    def copy(self) -> "StateVector":
        return StateVector(self.amps.copy(), self.n_sites, self.d, self.spins_per_site)

    def with_amps(self, amps: np.ndarray) -> "StateVector":
        return StateVector(amps, self.n_sites, self.d, self.spins_per_site)


@dataclass
class KrausPair:
    """Two-outcome measurement operation {m0, m1} on one bond.

    Completeness m0'm0 + m1'm1 = 1 is checked at construction; the pair is
    unusable for Born sampling otherwise.
    """

    m0: np.ndarray
    m1: np.ndarray

    def __post_init__(self):
        self.m0 = np.asarray(self.m0, dtype=complex)
        self.m1 = np.asarray(self.m1, dtype=complex)
        if self.m0.shape != self.m1.shape or self.m0.ndim != 2:
            raise ValueError("Kraus operators must be two square matrices of equal shape")
        ident = np.eye(self.m0.shape[0])
        defect = self.m0.conj().T @ self.m0 + self.m1.conj().T @ self.m1 - ident
        if np.max(np.abs(defect)) > _NORM_TOL:
            raise ValueError(
                f"Kraus pair violates completeness by {np.max(np.abs(defect)):.3e}"
            )


def product_state(
    n_sites: int, d: int = 3, local=0, spins_per_site: int = 1
) -> StateVector:
    """Normalized tensor-product state with the same ket on every site.

    ``local`` is either a basis-digit index into the ``site_dim``-dimensional
    local space or an explicit local ket vector (normalized here).
    """
    site_dim = d**spins_per_site
    if np.isscalar(local):
        idx = int(local)
        if not 0 <= idx < site_dim:
            raise ValueError(f"local ket index {idx} out of range for site dim {site_dim}")
        ket = np.zeros(site_dim, dtype=complex)
        ket[idx] = 1.0
    else:
        ket = np.asarray(local, dtype=complex)
        if ket.shape != (site_dim,):
            raise ValueError(f"local ket has shape {ket.shape}, expected ({site_dim},)")
        nrm = np.linalg.norm(ket)
        if nrm == 0:
            raise ValueError("local ket must be nonzero")
        ket = ket / nrm
    amps = ket
    for _ in range(n_sites - 1):
        amps = np.kron(amps, ket)
    return StateVector(amps, n_sites, d, spins_per_site)


def _site_axes(state: StateVector, site: int) -> list[int]:
    """Array axes occupied by 1-based chain site ``site`` (wrapped)."""
    s = (site - 1) % state.n_sites
    return [s * state.spins_per_site + k for k in range(state.spins_per_site)]


def _apply_on_axes(state: StateVector, op: np.ndarray, axes: list[int]) -> StateVector:
    k = len(axes)
    psi = state.amps.reshape((state.d,) * state.n_axes)
    psi = np.moveaxis(psi, axes, range(k))
    shape = psi.shape
    psi = op @ psi.reshape(state.d**k, -1)
    psi = np.moveaxis(psi.reshape(shape), range(k), axes)
    return state.with_amps(psi.reshape(-1))


def apply_two_site(op: np.ndarray, j: int, state: StateVector) -> StateVector:
    """Apply a bond operator to sites ``(j, j+1)``; bond ``n_sites`` wraps.

    ``op`` acts on the combined local space of the two sites
    (9x9 for spin-1, 16x16 for qubit pairs).  The result is NOT renormalized.
    """
    if not 1 <= j <= state.n_sites:
        raise ValueError(f"bond index {j} out of range 1..{state.n_sites}")
    pair_dim = state.site_dim**2
    if op.shape != (pair_dim, pair_dim):
        raise ValueError(f"operator shape {op.shape} does not match bond dim {pair_dim}")
    axes = _site_axes(state, j) + _site_axes(state, j + 1)
    return _apply_on_axes(state, op, axes)


def apply_one_site(op: np.ndarray, j: int, state: StateVector) -> StateVector:
    """Apply a single-site operator to chain site ``j`` (not renormalized)."""
    if not 1 <= j <= state.n_sites:
        raise ValueError(f"site index {j} out of range 1..{state.n_sites}")
    sd = state.site_dim
    if op.shape != (sd, sd):
        raise ValueError(f"operator shape {op.shape} does not match site dim {sd}")
    return _apply_on_axes(state, op, _site_axes(state, j))


def bond_expectation(op: np.ndarray, j: int, state: StateVector) -> complex:
    """<psi| op_{j,j+1} |psi> without renormalizing."""
    return complex(np.vdot(state.amps, apply_two_site(op, j, state).amps))


def fidelity(a: StateVector, b: StateVector) -> float:
    """|<a|b>|^2 for two unit-norm states of identical shape."""
    if a.amps.shape != b.amps.shape:
        raise ValueError("state shapes differ")
    return float(abs(np.vdot(a.amps, b.amps)) ** 2)


def partial_fidelity(state: StateVector, j: int, projector: np.ndarray) -> float:
    """Weight <psi|(1 - P_{j,j+1})|psi> in the bond's zero-eigenvalue sector.

    Real to numerical precision for a Hermitian projector; clamped to [0, 1].
    """
    val = 1.0 - bond_expectation(projector, j, state).real
    return float(min(1.0, max(0.0, val)))


def born_sample(
    kraus: KrausPair, j: int, state: StateVector, rng: np.random.Generator
) -> tuple[int, StateVector]:
    """Sample one measurement outcome on bond ``j`` and collapse the state.

    Outcome ``q`` is drawn with probability ||m_q psi||^2; the returned state
    is the renormalized post-measurement state.  Exactly one uniform variate
    is consumed per call.
    """
    psi0 = apply_two_site(kraus.m0, j, state)
    p0 = float(np.vdot(psi0.amps, psi0.amps).real)
    if rng.random() < p0:
        return 0, psi0.with_amps(psi0.amps / np.sqrt(p0))
    psi1 = apply_two_site(kraus.m1, j, state)
    p1 = float(np.vdot(psi1.amps, psi1.amps).real)
    if p1 <= 0.0:
        raise RuntimeError("both measurement outcomes have zero weight; corrupt Kraus pair")
    return 1, psi1.with_amps(psi1.amps / np.sqrt(p1))


# ---------------------------------------------------------------------------
# snapshot export

_RAW_MAGIC = b"AKSV"
_ENCODING_TAG = "site1-slowest;m=+1,0,-1->0,1,2"


def snapshot_json(state: StateVector) -> str:
    """JSON snapshot: header plus row-major (re, im) amplitude pairs."""
    return json.dumps(
        {
            "n_sites": state.n_sites,
            "d": state.d,
            "spins_per_site": state.spins_per_site,
            "encoding": _ENCODING_TAG,
            "amps": [[z.real, z.imag] for z in state.amps],
        }
    )


def from_snapshot_json(text: str) -> StateVector:
    obj = json.loads(text)
    amps = np.array([complex(re, im) for re, im in obj["amps"]])
    return StateVector(amps, obj["n_sites"], obj["d"], obj["spins_per_site"])


def snapshot_raw(state: StateVector) -> bytes:
    """Raw snapshot: magic, (n_sites, d, spins_per_site) header, then
    little-endian complex-double amplitudes."""
    head = _RAW_MAGIC + struct.pack("<III", state.n_sites, state.d, state.spins_per_site)
    return head + state.amps.astype("<c16").tobytes()


def from_snapshot_raw(blob: bytes) -> StateVector:
    if blob[:4] != _RAW_MAGIC:
        raise ValueError("bad snapshot magic")
    n_sites, d, spins_per_site = struct.unpack("<III", blob[4:16])
    amps = np.frombuffer(blob[16:], dtype="<c16").astype(complex)
    return StateVector(amps, n_sites, d, spins_per_site)
