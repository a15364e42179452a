"""Entanglement and nonlocality figures of merit for two-qubit states."""

from __future__ import annotations

import math
from typing import NamedTuple

import numpy as np

from .qubits import PAULIS, PHI_PLUS, SIGMA_Y, check_density_matrix

#: fidelity above which no separable two-qubit state can lie (1/sqrt(2))
WITNESS_THRESHOLD = 1.0 / math.sqrt(2.0)


def fidelity(rho: np.ndarray, target: np.ndarray) -> float:
    """Overlap <target| rho |target> with a pure target state.

    ``target`` may be a ket or a rank-one density matrix.
    """
    rho = check_density_matrix(rho)
    target = np.asarray(target, dtype=complex)
    if target.ndim == 2:
        eigval, eigvec = np.linalg.eigh(target)
        if abs(eigval[-1] - 1.0) > 1e-8 or eigval[-2] > 1e-8:
            raise ValueError("target must be a pure state")
        target = eigvec[:, -1]
    norm = np.vdot(target, target).real
    if abs(norm - 1.0) > 1e-8:
        raise ValueError("target ket must be normalized")
    if target.shape[0] != rho.shape[0]:
        raise ValueError("state and target dimensions differ")
    return float(np.real(np.vdot(target, rho @ target)))


def concurrence(rho: np.ndarray) -> float:
    """Two-qubit concurrence from the spin-flipped spectrum.

    Eigenvalues of rho (sy x sy) rho* (sy x sy) are real and nonnegative;
    with their square roots sorted descending, C = max(0, l1 - l2 - l3 - l4).
    """
    rho = check_density_matrix(rho, dim=4)
    flip = np.kron(SIGMA_Y, SIGMA_Y)
    m = rho @ flip @ rho.conj() @ flip
    eigs = np.linalg.eigvals(m).real
    lam = np.sqrt(np.clip(eigs, 0.0, None))
    lam[::-1].sort()
    return float(max(0.0, lam[0] - lam[1] - lam[2] - lam[3]))


def binary_entropy(x: float) -> float:
    """Shannon entropy of a bit with bias x, in bits."""
    if not 0.0 <= x <= 1.0:
        raise ValueError("argument must lie in [0, 1]")
    if x in (0.0, 1.0):
        return 0.0
    return float(-x * math.log2(x) - (1.0 - x) * math.log2(1.0 - x))


def entanglement_of_formation(rho: np.ndarray) -> float:
    """Entanglement of formation in ebits, monotone in concurrence."""
    c = concurrence(rho)
    return binary_entropy((1.0 + math.sqrt(1.0 - c * c)) / 2.0)


def correlation_matrix(rho: np.ndarray) -> np.ndarray:
    """3x3 matrix of Pauli correlations T_ij = Tr[rho (sigma_i x sigma_j)]."""
    rho = check_density_matrix(rho, dim=4)
    t = np.empty((3, 3), dtype=float)
    for i, si in enumerate(PAULIS):
        for j, sj in enumerate(PAULIS):
            t[i, j] = np.trace(rho @ np.kron(si, sj)).real
    return t


class ChshResult(NamedTuple):
    s_max: float
    witness_fidelity: float
    witness_violated: bool


def chsh_assessment(rho: np.ndarray) -> ChshResult:
    """Largest CHSH value over measurement settings, plus the fidelity witness.

    s_max = 2 sqrt(m1 + m2) where m1, m2 are the two largest eigenvalues of
    T^T T; the state admits settings violating the classical bound 2 exactly
    when s_max > 2.  The fidelity witness flags entanglement whenever the
    overlap with the maximally entangled target exceeds 1/sqrt(2); the two
    tests can disagree, and both are reported.
    """
    t = correlation_matrix(rho)
    eigs = np.linalg.eigvalsh(t.T @ t)
    s_max = 2.0 * math.sqrt(float(eigs[-1] + eigs[-2]))
    f = fidelity(rho, PHI_PLUS)
    return ChshResult(s_max=s_max, witness_fidelity=f,
                      witness_violated=bool(f > WITNESS_THRESHOLD))
