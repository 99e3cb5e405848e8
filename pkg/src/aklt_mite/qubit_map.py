"""Two-qubit-per-site encoding of the spin-1 chain.

Each spin-1 site becomes a pair of spin-1/2 sub-spins (a, b); spin operators
map to the sum of the two sub-spin operators.  The per-site triplet sector
carries the spin-1 physics through the fixed isometry

    |m=+1>  ->  |00>
    |m= 0>  ->  (|01> + |10>) / sqrt(2)
    |m=-1>  ->  |11>

(all equivalence tests depend on this ordering).  Dynamics generated by
mapped operators commutes with every per-site a<->b swap, so a state starting
in the symmetric (triplet) sector never leaves it.
"""

from __future__ import annotations

import numpy as np

from . import spin_ops
from .statevec import StateVector, apply_one_site, fidelity


def triplet_isometry() -> np.ndarray:
    """The 4x3 isometry embedding one spin-1 site into its qubit pair."""
    v = np.zeros((4, 3), dtype=complex)
    v[0, 0] = 1.0
    v[1, 1] = v[2, 1] = 1.0 / np.sqrt(2.0)
    v[3, 2] = 1.0
    return v


def site_swap() -> np.ndarray:
    """SWAP of the two sub-spins within one site (4x4)."""
    s = np.zeros((4, 4))
    for a in range(2):
        for b in range(2):
            s[2 * b + a, 2 * a + b] = 1.0
    return s


def symmetric_site_projector() -> np.ndarray:
    """Projector onto the per-site triplet sector, V V' (4x4)."""
    v = triplet_isometry()
    return v @ v.conj().T


def map_bond_projector() -> spin_ops.BondProjector:
    """The 16x16 bond projector of the qubit encoding.

    A true projector on the full two-site space (eigenvalues {0, 1}); its
    restriction to the symmetric sector is unitarily equivalent to the 9x9
    spin-1 bond projector.
    """
    return spin_ops.bond_projector("qubit-mapped")


def isometry_pullback(op: np.ndarray) -> np.ndarray:
    """(V (x) V)' op (V (x) V): a two-site qubit operator seen from spin-1."""
    v2 = np.kron(triplet_isometry(), triplet_isometry())
    return v2.conj().T @ op @ v2


def symmetric_weight(state: StateVector) -> float:
    """<psi| Pi_sym |psi>, the weight in the all-sites-triplet sector."""
    if state.spins_per_site != 2:
        raise ValueError("symmetric weight is defined for qubit-pair states")
    pi_site = symmetric_site_projector()
    projected = state
    for j in range(1, state.n_sites + 1):
        projected = apply_one_site(pi_site, j, projected)
    val = float(np.vdot(state.amps, projected.amps).real)
    return min(1.0, max(0.0, val))


def lift_state(state: StateVector) -> StateVector:
    """Push a spin-1 chain state through the site-wise triplet isometry."""
    if state.d != 3 or state.spins_per_site != 1:
        raise ValueError("lift_state expects a spin-1 chain state")
    v = triplet_isometry()
    amps = state.amps.reshape((3,) * state.n_sites)
    for axis in range(state.n_sites):
        amps = np.moveaxis(np.tensordot(v, amps, axes=([1], [axis])), 0, axis)
    return StateVector(amps.reshape(-1), state.n_sites, d=2, spins_per_site=2)


def restrict_state(state: StateVector) -> StateVector:
    """Project a qubit-pair chain state back to spin-1 coordinates (V' per site)."""
    if state.spins_per_site != 2:
        raise ValueError("restrict_state expects a qubit-pair chain state")
    vd = triplet_isometry().conj().T
    amps = state.amps.reshape((4,) * state.n_sites)
    for axis in range(state.n_sites):
        amps = np.moveaxis(np.tensordot(vd, amps, axes=([1], [axis])), 0, axis)
    return StateVector(amps.reshape(-1), state.n_sites, d=3, spins_per_site=1)


def qubit_aklt_state(n: int) -> spin_ops.AkltReference:
    """Zero-energy reference of the mapped Hamiltonian, restricted to the
    symmetric sector.

    Diagonalizes V' H_mapped V on the 3^n-dimensional symmetric coordinates
    (matrix-free) and lifts the unique zero mode back to the 4^n qubit space.
    This is deliberately not a re-encoding of the spin-1 reference, so
    agreement between the two is an independent check of the mapping.
    """
    if not 3 <= n <= 8:
        raise ValueError(f"n = {n} outside the supported qubit-mode range 3..8")
    proj = map_bond_projector().matrix

    def matvec(x):
        sym = StateVector(np.asarray(x, dtype=complex), n, d=3)
        lifted = lift_state(sym)
        h_lifted = spin_ops.hamiltonian_apply(lifted, proj)
        return restrict_state(h_lifted).amps

    vals, vec = spin_ops.ground_pair(matvec, 3**n)
    if vals[0] > spin_ops.ZERO_ENERGY_TOL:
        raise RuntimeError(f"lowest symmetric-sector eigenvalue {vals[0]:.3e} is not zero")
    if vals[1] <= spin_ops.ZERO_ENERGY_TOL:
        raise RuntimeError("symmetric-sector zero space is degenerate")
    vec = vec / np.linalg.norm(vec)
    lifted = lift_state(StateVector(vec, n, d=3))
    k = int(np.argmax(np.abs(lifted.amps)))
    lifted = lifted.with_amps(lifted.amps * (abs(lifted.amps[k]) / lifted.amps[k]))
    residual = np.linalg.norm(spin_ops.hamiltonian_apply(lifted, proj).amps)
    if residual > spin_ops.REFERENCE_RESIDUAL_TOL:
        raise RuntimeError(f"H|ref> residual {residual:.3e} exceeds tolerance")
    return spin_ops.AkltReference(lifted, float(vals[0]), n)


def reencoded_reference(n: int) -> StateVector:
    """The spin-1 reference pushed through the isometry (cross-check route)."""
    return lift_state(spin_ops.aklt_state(n).state)


def mapping_equivalence_fidelity(n: int) -> float:
    """Fidelity between the independently computed qubit reference and the
    re-encoded spin-1 reference."""
    return fidelity(qubit_aklt_state(n).state, reencoded_reference(n))
