"""Spectral analysis: full spectra, stability margins, resolvent growth, modal pencils.

The resolvent norm along the imaginary axis is measured in the energy inner
product: with E = R^T R (Cholesky), the generator is congruent to
B = R op R^{-1} and ||(i b - op)^{-1}||_E = 1 / sigma_min(i b I - B).
Polynomial decay of order theta corresponds to norms growing like b^{1/theta},
so the log-log slope of a scan estimates 1/theta directly.
"""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy.linalg import cholesky, lu_factor, lu_solve, solve_triangular, svdvals
from scipy.sparse.linalg import ArpackNoConvergence, LinearOperator, eigsh

from .discretize import (KELVIN_VOIGT, VISCOUS, WAVE_DIRICHLET, Generator,
                         ModelSpec)

MAX_EIG_SIZE = 4000
_DENSE_SVD_CUTOFF = 600

__all__ = [
    "SpectrumReport", "ResolventScan", "ModePencil", "ConvergenceError",
    "eig_all", "spectral_abscissa", "spectrum_report", "resolvent_scan",
    "modal_reduce", "quadratic_pencil_roots", "optimality_exponent",
    "discrete_frequencies",
]


class ConvergenceError(RuntimeError):
    """An iterative eigenvalue or root computation failed to converge."""


def _spectral_norm(M: np.ndarray, iters: int = 60) -> float:
    # power iteration on M^T M; deterministic start, plenty for tolerance scales
    v = np.ones(M.shape[1]) / np.sqrt(M.shape[1])
    s = 0.0
    for _ in range(iters):
        w = M.T @ (M @ v)
        nw = np.linalg.norm(w)
        if nw == 0.0:
            return 0.0
        v = w / nw
        s_new = np.sqrt(nw)
        if abs(s_new - s) <= 1e-8 * s_new:
            return float(s_new)
        s = s_new
    return float(s)


def eig_all(M: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Full spectrum of a dense real matrix with per-pair residuals.

    Returns (eigenvalues, residuals) where residuals[i] = ||M v - lambda v||
    / ||M||_2 for the unit right eigenvector v.  Uses the balanced
    Hessenberg/shifted-QR path of LAPACK; raises ConvergenceError when the
    QR iteration cap is exceeded.
    """
    M = np.asarray(M, dtype=float)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise ValueError("expected a square matrix")
    if M.shape[0] > MAX_EIG_SIZE:
        raise ValueError(f"dense eigensolve capped at size {MAX_EIG_SIZE}")
    try:
        vals, vecs = np.linalg.eig(M)
    except np.linalg.LinAlgError as exc:
        raise ConvergenceError(f"QR iteration did not converge: {exc}") from exc
    scale = _spectral_norm(M)
    res = np.linalg.norm(M @ vecs - vecs * vals, axis=0) / max(scale, np.finfo(float).tiny)
    return vals, res


def spectral_abscissa(gen: Generator) -> float:
    """Largest real part over the generator's spectrum."""
    vals, _ = eig_all(gen.op)
    return float(np.max(vals.real))


@dataclass(eq=False)
class SpectrumReport:
    """Eigenvalues with residuals and the spectral abscissa."""

    eigenvalues: np.ndarray
    residuals: np.ndarray
    abscissa: float


def spectrum_report(gen: Generator) -> SpectrumReport:
    vals, res = eig_all(gen.op)
    order = np.lexsort((vals.real, vals.imag))
    return SpectrumReport(eigenvalues=vals[order], residuals=res[order],
                          abscissa=float(np.max(vals.real)))


@dataclass(eq=False)
class ResolventScan:
    """Resolvent norms along the imaginary axis plus a log-log slope fit.

    fitted_exponent is the least-squares slope of log ||R(i beta)|| against
    log beta over the fit window; theta_implied = 1 / fitted_exponent.
    dropped lists betas abandoned as numerically singular.
    """

    betas: np.ndarray
    norms: np.ndarray
    fitted_exponent: float
    theta_implied: float
    window: tuple[float, float]
    dropped: list[float]


def _sigma_min(S: np.ndarray) -> float:
    n = S.shape[0]
    if n <= _DENSE_SVD_CUTOFF:
        return float(svdvals(S)[-1])
    lu = lu_factor(S, check_finite=False)
    def mv(x):
        y = lu_solve(lu, x.astype(complex), check_finite=False)
        return lu_solve(lu, y, trans=2, check_finite=False)
    op = LinearOperator((n, n), matvec=mv, dtype=complex)
    try:
        lam = eigsh(op, k=1, which="LA", tol=1e-11, maxiter=5000,
                    return_eigenvectors=False)[0]
    except ArpackNoConvergence as exc:
        if n <= 2500:
            return float(svdvals(S)[-1])
        raise ConvergenceError("inverse iteration for sigma_min stalled") from exc
    return float(1.0 / np.sqrt(lam))


def resolvent_scan(gen: Generator, betas, window: tuple[float, float] | None = None,
                   threads: int = 1) -> ResolventScan:
    """Compute ||(i beta I - op)^{-1}|| in the energy norm at each sampled beta.

    A beta that lands on the spectrum (sigma_min below 1e-13 of the operator
    scale) is perturbed once by 1e-6; if still singular the point is dropped
    from the fit.  The slope fit runs over `window` (default: all kept
    points).
    """
    betas = np.asarray(sorted(float(b) for b in betas), dtype=float)
    if betas.size and np.any(np.diff(betas) <= 0):
        raise ValueError("betas must be strictly increasing")
    R = cholesky(gen.energy, lower=False)
    Rinv = solve_triangular(R, np.eye(gen.size), check_finite=False)
    B = R @ gen.op @ Rinv
    scale = _spectral_norm(B)
    I = np.eye(gen.size, dtype=complex)

    def norm_at(beta: float) -> tuple[float, float]:
        b = beta
        for _ in range(2):
            smin = _sigma_min(1j * b * I - B)
            if smin > 1e-13 * max(scale, 1.0):
                return b, 1.0 / smin
            b = b + 1e-6
        return beta, np.nan

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(norm_at, betas))
    else:
        results = [norm_at(b) for b in betas]
    used_betas = np.array([r[0] for r in results])
    norms = np.array([r[1] for r in results])
    dropped = [float(b) for b, v in zip(used_betas, norms) if not np.isfinite(v)]
    keep = np.isfinite(norms)
    if window is None:
        window = (float(used_betas[keep][0]), float(used_betas[keep][-1])) if keep.any() else (0.0, 0.0)
    m = keep & (used_betas >= window[0]) & (used_betas <= window[1])
    if np.sum(m) >= 2:
        slope = float(np.polyfit(np.log(used_betas[m]), np.log(norms[m]), 1)[0])
    else:
        slope = float("nan")
    theta = 1.0 / slope if np.isfinite(slope) and slope != 0.0 else float("inf")
    return ResolventScan(betas=used_betas[keep], norms=norms[keep],
                         fitted_exponent=slope, theta_implied=float(theta),
                         window=(float(window[0]), float(window[1])), dropped=dropped)


def quadratic_pencil_roots(mass: np.ndarray, damp: np.ndarray,
                           stiff: np.ndarray) -> np.ndarray:
    """Eigenvalues of the quadratic pencil b^2 M + b C + K via companion linearization."""
    n = mass.shape[0]
    Minv = np.linalg.inv(mass)
    comp = np.zeros((2 * n, 2 * n))
    comp[:n, n:] = np.eye(n)
    comp[n:, :n] = -Minv @ stiff
    comp[n:, n:] = -Minv @ damp
    return np.linalg.eigvals(comp)


@dataclass(eq=False)
class ModePencil:
    """Per-mode quadratic pencil b^2 I + b mu(nu) D + (nu^2 I + A) and its 2N roots."""

    k: int
    nu: float
    mu: float
    roots: np.ndarray


def discrete_frequencies(n: int, ks) -> np.ndarray:
    """Frequencies of the n-point Dirichlet second-difference matrix: (2/h) sin(k pi h / 2)."""
    h = 1.0 / (n + 1)
    ks = np.asarray(ks, dtype=float)
    return (2.0 / h) * np.sin(ks * np.pi * h / 2.0)


def modal_reduce(model: ModelSpec, ks, frequencies: str = "continuum") -> list[ModePencil]:
    """Decompose a spatially uniform model into independent 2N x 2N pencils.

    Requires wave_dirichlet stiffness and either viscous damping on the whole
    interval (mu = 1) or Kelvin-Voigt damping with unit weight (mu = nu^2).
    `frequencies` selects nu_k = k pi ("continuum") or the discrete
    eigenfrequencies of the grid ("discrete"); the latter reproduces the
    assembled generator's spectrum exactly.
    """
    if model.stiffness.variant != WAVE_DIRICHLET:
        raise ValueError("modal reduction needs wave_dirichlet stiffness")
    damping = model.damping
    if damping.variant == VISCOUS:
        if damping.omega != (0.0, 1.0):
            raise ValueError("modal reduction needs viscous damping on the whole interval")
        mu_of = lambda nu: 1.0
    elif damping.variant == KELVIN_VOIGT:
        a = damping.a
        uniform = (np.ndim(a) == 0 and float(a) == 1.0) or (
            np.ndim(a) == 1 and np.allclose(a, 1.0))
        if not uniform:
            raise ValueError("modal reduction needs unit Kelvin-Voigt weight")
        mu_of = lambda nu: nu**2
    else:
        raise ValueError("modal reduction needs spatially uniform damping")
    ks = [int(k) for k in ks]
    if frequencies == "continuum":
        nus = [k * np.pi for k in ks]
    elif frequencies == "discrete":
        if any(k < 1 or k > model.grid.n for k in ks):
            raise ValueError("discrete mode index out of range")
        nus = list(discrete_frequencies(model.grid.n, ks))
    else:
        raise ValueError("frequencies must be 'continuum' or 'discrete'")
    A = model.pair.A
    D = model.pair.D
    N = model.pair.N
    shift = model.stiffness.shift
    out = []
    for k, nu in zip(ks, nus):
        mu = float(mu_of(nu))
        stiff = (nu**2 + shift) * np.eye(N) + A
        roots = quadratic_pencil_roots(np.eye(N), mu * D, stiff)
        out.append(ModePencil(k=k, nu=float(nu), mu=mu, roots=roots))
    return out


def optimality_exponent(betas) -> float:
    """Decay exponent theta from an eigenvalue branch with Re ~ -1/|Im|^{1/theta}.

    Fits the least-squares slope s of log(-Re) against log|Im| and returns
    -1/s.  Needs at least 8 points with negative real part; the |Im|
    sequence must be strictly monotone.
    """
    betas = np.asarray(list(betas), dtype=complex)
    if betas.size < 8:
        raise ValueError("need at least 8 branch points")
    if np.any(betas.real >= 0):
        raise ValueError("branch points must have negative real part")
    ims = np.abs(betas.imag)
    d = np.diff(ims)
    if not (np.all(d > 0) or np.all(d < 0)):
        raise ValueError("branch is not monotone in |Im|")
    slope = float(np.polyfit(np.log(ims), np.log(-betas.real), 1)[0])
    return -1.0 / slope
