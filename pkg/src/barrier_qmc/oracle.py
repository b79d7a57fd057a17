"""Brute-force ground truth for tests.

Three independent routes into the same physics:

* `dense_spectrum` diagonalizes the full 2**n Hamiltonian, checking the
  symmetric-subspace reduction and its degeneracy pattern.
* `exact_trotter_partition` enumerates every configuration of the n x T
  bit lattice and accumulates the discretized path weights and energy
  estimators, checking the sampler against an exhaustive sum.
* `trotter_partition_value` evaluates the same discretized partition
  function as a trace of the T-th power of the one-slice transfer matrix,
  which stays exact far beyond the enumeration size cap and anchors the
  Trotter-convergence checks.

Path weights carry a factor 2 per link (the closed form of the momentum sum
behind each link term), so partition values are divided by 2**(n*T) to land
on Tr exp(-beta H) normalization; probabilities and estimator averages are
unaffected either way.
"""

from __future__ import annotations

import numpy as np

from .problem import ProblemInstance
from .qmc import QmcParams

__all__ = [
    "dense_hamiltonian",
    "dense_spectrum",
    "dense_symmetric_spectrum",
    "exact_configuration_logweights",
    "exact_configuration_probabilities",
    "exact_trotter_partition",
    "trotter_partition_value",
]

_DENSE_N_MAX = 12
_ENUM_BITS_MAX = 18


def dense_hamiltonian(inst: ProblemInstance, s: float) -> np.ndarray:
    """Full 2**n x 2**n interpolating Hamiltonian in the bit-string basis."""
    if inst.n > _DENSE_N_MAX:
        raise ValueError(f"n={inst.n} too large for dense construction (max {_DENSE_N_MAX})")
    if not 0.0 <= s <= 1.0:
        raise ValueError(f"s={s} outside [0, 1]")
    n = inst.n
    dim = 1 << n
    states = np.arange(dim, dtype=np.int64)
    weights = np.bitwise_count(states).astype(np.int64)
    h = np.zeros((dim, dim))
    h[states, states] = (1.0 - s) * n / 2 + s * inst.cost_table[weights]
    flips = states[:, None] ^ (np.int64(1) << np.arange(n, dtype=np.int64))[None, :]
    rows = np.repeat(states, n)
    h[rows, flips.ravel()] = -0.5 * (1.0 - s)
    return h


def dense_spectrum(inst: ProblemInstance, s: float) -> np.ndarray:
    """All 2**n eigenvalues, sorted ascending.

    Note that the full spectrum holds every permutation sector; away from
    the avoided crossing the first excited state of the whole system can
    sit in a non-symmetric sector, below the symmetric-subspace gap.
    """
    return np.linalg.eigvalsh(dense_hamiltonian(inst, s))


def dense_symmetric_spectrum(inst: ProblemInstance, s: float) -> np.ndarray:
    """Eigenvalues of the dense Hamiltonian projected onto the symmetric
    subspace (uniform superpositions of equal-weight strings), sorted.

    Built from the full 2**n matrix plus an explicit projector, so it shares
    no code with the tridiagonal coefficient assembly it is used to check.
    """
    h = dense_hamiltonian(inst, s)
    n = inst.n
    states = np.arange(1 << n, dtype=np.int64)
    weights = np.bitwise_count(states).astype(np.int64)
    basis = np.zeros((1 << n, n + 1))
    for k in range(n + 1):
        members = np.nonzero(weights == k)[0]
        basis[members, k] = 1.0 / np.sqrt(members.size)
    return np.linalg.eigvalsh(basis.T @ h @ basis)


def _check_enum_size(inst: ProblemInstance, params: QmcParams) -> None:
    if inst.n > 3 or inst.n * params.trotter_slices > _ENUM_BITS_MAX:
        raise ValueError(
            f"enumeration needs n <= 3 and n*T <= {_ENUM_BITS_MAX}, "
            f"got n={inst.n}, T={params.trotter_slices}"
        )


def _decode(inst: ProblemInstance, params: QmcParams):
    """Per-config slice weights and unequal-link counts for all 2**(nT) states."""
    n, t = inst.n, params.trotter_slices
    idx = np.arange(1 << (n * t), dtype=np.int64)
    mask = (np.int64(1) << n) - 1
    slices = [(idx >> (tau * n)) & mask for tau in range(t)]
    f_sum = np.zeros(idx.size)
    unequal = np.zeros(idx.size, dtype=np.int64)
    for tau in range(t):
        f_sum += inst.cost_table[np.bitwise_count(slices[tau]).astype(np.int64)]
        unequal += np.bitwise_count(slices[tau] ^ slices[(tau + 1) % t]).astype(np.int64)
    return f_sum, unequal


def exact_configuration_logweights(inst: ProblemInstance, s: float,
                                   params: QmcParams) -> np.ndarray:
    """Log path weight of every packed lattice configuration.

    Index layout matches the sweep kernels: bit tau*n + d of the index holds
    lattice site (tau, d).  Zero-weight configurations (unequal links at
    s = 1) come back as -inf.
    """
    _check_enum_size(inst, params)
    if not 0.0 <= s <= 1.0:
        raise ValueError(f"s={s} outside [0, 1]")
    n, t, beta = inst.n, params.trotter_slices, params.beta
    f_sum, unequal = _decode(inst, params)
    n_links = n * t
    diag = -(beta / t) * ((1.0 - s) * n / 2 * t + s * f_sum)
    a = beta * (1.0 - s) / (2.0 * t)
    if a > 0.0:
        log_cosh = a + np.log1p(np.exp(-2.0 * a))  # log(2 cosh a)
        log_sinh = a + np.log1p(-np.exp(-2.0 * a))  # log(2 sinh a)
        return diag + (n_links - unequal) * log_cosh + unequal * log_sinh
    logw = diag + n_links * np.log(2.0)
    logw[unequal > 0] = -np.inf
    return logw


def exact_configuration_probabilities(inst: ProblemInstance, s: float,
                                      params: QmcParams) -> np.ndarray:
    """Normalized Boltzmann probability of every packed configuration."""
    logw = exact_configuration_logweights(inst, s, params)
    finite = np.isfinite(logw)
    p = np.zeros_like(logw)
    shifted = logw[finite] - logw[finite].max()
    w = np.exp(shifted)
    p[finite] = w / w.sum()
    return p


def exact_trotter_partition(inst: ProblemInstance, s: float,
                            params: QmcParams) -> tuple[float, float, float]:
    """Exhaustive (Z, <E_diag>, <E_offdiag>) over all lattice configurations.

    Z is normalized to converge to Tr exp(-beta H) as T grows; the energy
    means are the weight-averaged sweep estimators.
    """
    logw = exact_configuration_logweights(inst, s, params)
    n, t, beta = inst.n, params.trotter_slices, params.beta
    f_sum, unequal = _decode(inst, params)
    finite = np.isfinite(logw)
    if not finite.any():
        raise ValueError("all configurations have zero weight")
    lmax = logw[finite].max()
    w = np.exp(logw[finite] - lmax)
    wsum = w.sum()
    log_z = lmax + np.log(wsum) - n * t * np.log(2.0)
    z = float(np.exp(log_z))

    e_diag = (1.0 - s) * n / 2 + s * f_sum[finite] / t
    a = beta * (1.0 - s) / (2.0 * t)
    n_links = n * t
    if a > 0.0:
        tanh_a = np.tanh(a)
        e_off = -(1.0 - s) / (2.0 * t) * (
            (n_links - unequal[finite]) * tanh_a + unequal[finite] / tanh_a
        )
    else:
        e_off = np.zeros(int(finite.sum()))
    mean_ed = float((w * e_diag).sum() / wsum)
    mean_eo = float((w * e_off).sum() / wsum)
    return z, mean_ed, mean_eo


def trotter_partition_value(inst: ProblemInstance, s: float, beta: float,
                            trotter_slices: int) -> float:
    """Discretized partition function via the one-slice transfer matrix.

    Evaluates the identical quantity as `exact_trotter_partition`'s Z but as
    trace((D K)**T) on the 2**n space, so T is not limited by enumeration.
    """
    if inst.n > 10:
        raise ValueError(f"n={inst.n} too large for the transfer-matrix route (max 10)")
    if not 0.0 <= s <= 1.0:
        raise ValueError(f"s={s} outside [0, 1]")
    if trotter_slices < 1:
        raise ValueError("need at least one slice")
    n = inst.n
    dim = 1 << n
    states = np.arange(dim, dtype=np.int64)
    weights = np.bitwise_count(states).astype(np.int64)
    d = np.exp(-(beta / trotter_slices)
               * ((1.0 - s) * n / 2 + s * inst.cost_table[weights]))
    a = beta * (1.0 - s) / (2.0 * trotter_slices)
    k1 = np.array([[np.cosh(a), np.sinh(a)], [np.sinh(a), np.cosh(a)]])
    k = np.array([[1.0]])
    for _ in range(n):
        k = np.kron(k, k1)
    m = d[:, None] * k
    return float(np.trace(np.linalg.matrix_power(m, trotter_slices)))
