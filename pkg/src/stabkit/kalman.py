"""Coupling/control matrix algebra for weakly coupled second-order systems.

Everything here is plain finite-dimensional linear algebra on a pair of
symmetric positive semi-definite matrices: the coupling matrix A (how the
scalar equations talk to each other through displacement terms) and the
control matrix D (which velocity combinations are damped).  The central
diagnostic is the Kalman rank of the controllability block matrix
(D, AD, ..., A^{N-1}D): full rank means the damping reaches every component
through the coupling, even when rank(D) is small.

All functions are pure; returned containers hold read-only arrays and are
safe to share across threads.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

EPS = float(np.finfo(float).eps)

__all__ = [
    "CouplingPair",
    "EigenGroups",
    "BlockPartition",
    "SpectralFactorD",
    "coupling_pair",
    "controllability_matrix",
    "kalman_rank",
    "max_invariant_dim",
    "eig_group",
    "block_partition",
    "coercivity_constant",
    "coercivity_slack",
    "verify_coercivity",
    "construct_min_rank_D",
    "commutator_norm",
    "spectral_factor",
    "lift_pair",
]


def _lock(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a, dtype=float)
    a.flags.writeable = False
    return a


def symmetrize(M: np.ndarray) -> tuple[np.ndarray, float]:
    """Average a square matrix with its transpose; also return the defect ||M - M^T||_2."""
    M = np.asarray(M, dtype=float)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {M.shape}")
    if not np.all(np.isfinite(M)):
        raise ValueError("matrix has non-finite entries")
    S = 0.5 * (M + M.T)
    defect = float(np.linalg.norm(M - M.T, 2)) if M.size else 0.0
    return S, defect


@dataclass(eq=False)
class CouplingPair:
    """A validated (A, D) pair: both stored exactly symmetric and PSD up to tolerance."""

    A: np.ndarray
    D: np.ndarray
    N: int


def coupling_pair(A: np.ndarray, D: np.ndarray, psd_tol: float = 1e-10) -> CouplingPair:
    """Build a CouplingPair, symmetrizing the inputs and checking positive semi-definiteness.

    Raises ValueError if the matrices differ in size or have an eigenvalue
    below -psd_tol * ||.||_2.
    """
    A, _ = symmetrize(A)
    D, _ = symmetrize(D)
    if A.shape != D.shape:
        raise ValueError(f"size mismatch: A is {A.shape}, D is {D.shape}")
    N = A.shape[0]
    for name, M in (("A", A), ("D", D)):
        w = np.linalg.eigvalsh(M) if N else np.zeros(0)
        scale = float(np.max(np.abs(w))) if N else 0.0
        if N and w[0] < -psd_tol * max(scale, 1.0):
            raise ValueError(f"{name} is not positive semi-definite (min eig {w[0]:.3e})")
    return CouplingPair(A=_lock(A), D=_lock(D), N=N)


def controllability_matrix(A: np.ndarray, D: np.ndarray) -> np.ndarray:
    """Stack the block matrix (D, AD, A^2 D, ..., A^{N-1} D), shape N x N^2."""
    N = A.shape[0]
    blocks = [D]
    for _ in range(N - 1):
        blocks.append(A @ blocks[-1])
    return np.hstack(blocks)


def _rank(M: np.ndarray, n_scale: int) -> int:
    # numerical rank with threshold n_scale * eps * sigma_max
    if M.size == 0:
        return 0
    s = np.linalg.svd(M, compute_uv=False)
    return int(np.sum(s > n_scale * EPS * s[0]))


def kalman_rank(pair: CouplingPair) -> int:
    """Numerical rank of the controllability block matrix of (A, D)."""
    return _rank(controllability_matrix(pair.A, pair.D), pair.N)


def max_invariant_dim(pair: CouplingPair) -> int:
    """Dimension of the largest A-invariant subspace contained in ker(D).

    A is symmetric, so every invariant subspace splits over the eigenspaces
    of A; the answer is the sum over eigenspaces E of dim(E intersect ker D),
    and it always equals N - kalman_rank(pair).
    """
    groups = eig_group(pair.A)
    p = 0
    for l in range(len(groups.lambdas)):
        basis = groups.P[:, groups.mus[l]:groups.mus[l + 1]]
        sigma = basis.shape[1]
        p += sigma - _rank(pair.D @ basis, pair.N)
    return p


@dataclass(eq=False)
class EigenGroups:
    """Orthogonal diagonalization of a symmetric matrix with clustered eigenvalues.

    P columns are eigenvectors ordered by ascending eigenvalue; lambdas holds
    one representative value per cluster, sigmas the cluster sizes, and mus
    the cumulative offsets (mus[0] = 0, mus[-1] = N).
    """

    P: np.ndarray
    lambdas: np.ndarray
    sigmas: np.ndarray
    mus: np.ndarray


def eig_group(A: np.ndarray, group_tol: float | None = None) -> EigenGroups:
    """Diagonalize a symmetric matrix and merge eigenvalues into multiplicity groups.

    Consecutive eigenvalues closer than group_tol (default 1e-8 * ||A||_2)
    are chained into one group.
    """
    A, _ = symmetrize(A)
    w, P = np.linalg.eigh(A)
    scale = float(np.max(np.abs(w))) if w.size else 0.0
    if group_tol is None:
        group_tol = 1e-8 * scale
    lambdas, sigmas = [], []
    start = 0
    for i in range(1, len(w) + 1):
        if i == len(w) or w[i] - w[i - 1] > group_tol:
            lambdas.append(float(np.mean(w[start:i])))
            sigmas.append(i - start)
            start = i
    mus = np.concatenate([[0], np.cumsum(sigmas)])
    return EigenGroups(P=_lock(P), lambdas=_lock(np.array(lambdas)),
                       sigmas=np.array(sigmas, dtype=int), mus=mus.astype(int))


@dataclass(eq=False)
class BlockPartition:
    """Columns of D, expressed in the eigenbasis of A, split along the eigenvalue groups.

    blocks[l] is N x sigma_l; independence[l] says whether its columns are
    linearly independent, decided from gram_min[l], the smallest eigenvalue
    of blocks[l]^T blocks[l].
    """

    blocks: list[np.ndarray]
    independence: np.ndarray
    gram_min: np.ndarray

    @property
    def offsets(self) -> np.ndarray:
        sizes = [b.shape[1] for b in self.blocks]
        return np.concatenate([[0], np.cumsum(sizes)]).astype(int)

    def stacked(self) -> np.ndarray:
        return np.hstack(self.blocks)


def block_partition(pair: CouplingPair, groups: EigenGroups) -> BlockPartition:
    """Split the transformed control matrix P^T D P along the eigenvalue groups of A.

    The full controllability matrix has rank N exactly when every block has
    independent columns.
    """
    if groups.P.shape[0] != pair.N or int(groups.mus[-1]) != pair.N:
        raise ValueError("groups do not match the pair size")
    recon = groups.P @ np.diag(np.repeat(groups.lambdas, groups.sigmas)) @ groups.P.T
    scale = max(float(np.linalg.norm(pair.A, 2)), 1.0)
    if np.linalg.norm(recon - pair.A, 2) > 1e-6 * scale:
        raise ValueError("groups were not derived from pair.A")
    D_t = groups.P.T @ pair.D @ groups.P
    blocks, gmins, gmaxs = [], [], []
    for l in range(len(groups.lambdas)):
        B = D_t[:, groups.mus[l]:groups.mus[l + 1]]
        gw = np.linalg.eigvalsh(B.T @ B)
        blocks.append(_lock(B))
        gmins.append(float(gw[0]))
        gmaxs.append(float(gw[-1]))
    tol = pair.N * EPS * max(gmaxs) if gmaxs else 0.0
    flags = np.array([g > tol for g in gmins])
    return BlockPartition(blocks=blocks, independence=flags, gram_min=np.array(gmins))


def coercivity_constant(partition: BlockPartition) -> float:
    """Smallest Gram eigenvalue over all blocks; the constant in the coercivity bound.

    Raises ValueError when some block has dependent columns (the constant
    would be zero and the bound vacuous).
    """
    if not np.all(partition.independence):
        raise ValueError("coercivity constant undefined: some block has dependent columns")
    return float(np.min(partition.gram_min))


def coercivity_slack(partition: BlockPartition, U: np.ndarray,
                     constant: float | None = None) -> float:
    """Evaluate ||DU||^2 - sum_{k!=l} <D_l U_l, D_k U_k> - c ||U||^2 at one vector U.

    U lives in the eigenbasis frame of A.  Non-negative slack for every U is
    exactly the coercivity bound.
    """
    c = coercivity_constant(partition) if constant is None else float(constant)
    U = np.asarray(U, dtype=float)
    offs = partition.offsets
    parts = [partition.blocks[l] @ U[offs[l]:offs[l + 1]]
             for l in range(len(partition.blocks))]
    total = np.sum(parts, axis=0)
    cross = float(total @ total) - float(np.sum([p @ p for p in parts]))
    return float(total @ total) - cross - c * float(U @ U)


def verify_coercivity(partition: BlockPartition, samples: int, seed: int,
                      constant: float | None = None) -> tuple[bool, float]:
    """Check the coercivity bound on random unit vectors; returns (passed, worst slack).

    The extremal direction (the minimizing Gram eigenvector embedded in the
    full space) is always included among the samples, so an inflated
    constant fails deterministically.  Passes iff the worst slack is
    >= -1e-12.
    """
    rng = np.random.default_rng(seed)
    N = int(partition.offsets[-1])
    worst = np.inf
    l_min = int(np.argmin(partition.gram_min))
    B = partition.blocks[l_min]
    gw, gv = np.linalg.eigh(B.T @ B)
    extremal = np.zeros(N)
    offs = partition.offsets
    extremal[offs[l_min]:offs[l_min + 1]] = gv[:, 0]
    worst = min(worst, coercivity_slack(partition, extremal, constant))
    for _ in range(samples):
        u = rng.standard_normal(N)
        u /= np.linalg.norm(u)
        worst = min(worst, coercivity_slack(partition, u, constant))
    return bool(worst >= -1e-12), float(worst)


def construct_min_rank_D(groups: EigenGroups) -> CouplingPair:
    """Build a PSD control matrix of rank max(sigma_l) that passes the Kalman rank test.

    In the eigenbasis of A, the rows of the factor W inside group l are the
    first sigma_l standard basis vectors of R^{sigma_max}; D = W W^T then has
    independent columns inside every group by construction.  The returned
    pair is expressed back in the original frame.
    """
    sigmas = groups.sigmas
    N = int(groups.mus[-1])
    smax = int(np.max(sigmas))
    W = np.zeros((N, smax))
    for l, s in enumerate(sigmas):
        for j in range(int(s)):
            W[int(groups.mus[l]) + j, j] = 1.0
    D_t = W @ W.T
    A = groups.P @ np.diag(np.repeat(groups.lambdas, sigmas)) @ groups.P.T
    D = groups.P @ D_t @ groups.P.T
    pair = coupling_pair(A, D)
    if kalman_rank(pair) != N:
        raise RuntimeError("constructed control matrix failed the rank test")
    return pair


def commutator_norm(pair: CouplingPair) -> float:
    """Spectral norm of AD - DA."""
    return float(np.linalg.norm(pair.A @ pair.D - pair.D @ pair.A, 2))


@dataclass(eq=False)
class SpectralFactorD:
    """Orthonormal eigenbasis of a PSD matrix with the positive modes listed first.

    P columns 0..d-1 carry the positive eigenvalues deltas (ascending); the
    remaining columns span the kernel.
    """

    P: np.ndarray
    deltas: np.ndarray
    d: int


def spectral_factor(D: np.ndarray, samples: int = 100) -> SpectralFactorD:
    """Factor a PSD matrix as P diag(deltas, 0) P^T and certify the projection bound.

    The certified bound: for any U, ||D U||^2 <= deltas[-1]^2 * ||Uhat||^2
    where Uhat collects the first d coordinates of P^T U.  Checked on
    `samples` deterministic random vectors; reconstruction must hold to
    1e-10 * ||D||_2.
    """
    D, _ = symmetrize(D)
    N = D.shape[0]
    w, V = np.linalg.eigh(D)
    scale = float(np.max(np.abs(w))) if N else 0.0
    tol = N * EPS * scale
    pos = w > tol
    order = np.concatenate([np.where(pos)[0], np.where(~pos)[0]])
    P = V[:, order]
    deltas = w[pos]
    d = int(np.sum(pos))
    M = np.zeros((N, N))
    if d:
        M[:d, :d] = np.diag(deltas)
    err = np.linalg.norm(D - P @ M @ P.T, 2)
    if err > 1e-10 * max(scale, 1.0):
        raise RuntimeError(f"spectral factorization residual {err:.3e} too large")
    rng = np.random.default_rng(0)
    top = deltas[-1] if d else 0.0
    for _ in range(samples):
        u = rng.standard_normal(N)
        hat = (P.T @ u)[:d]
        if float(np.sum((D @ u) ** 2)) > top ** 2 * float(hat @ hat) + 1e-12:
            raise RuntimeError("projection bound violated in spectral factorization")
    return SpectralFactorD(P=_lock(P), deltas=_lock(deltas), d=d)


def lift_pair(pair: CouplingPair, m: int) -> CouplingPair:
    """Replace every entry a_ij, d_ij by a_ij * I_m, d_ij * I_m (size m*N).

    Lifting preserves symmetry, positivity, and the Kalman rank property:
    any eigenvector of the lifted coupling matrix inside the lifted kernel
    would collapse to one of the original pair.
    """
    if m < 1:
        raise ValueError("m must be a positive integer")
    I = np.eye(m)
    return coupling_pair(np.kron(pair.A, I), np.kron(pair.D, I))
