"""Shared helpers: exact-arithmetic rank oracle and random pair/model builders."""
from __future__ import annotations

from fractions import Fraction

import numpy as np
import pytest

from stabkit import (DEMO_CONTROL, DEMO_COUPLING, TIP_CONTROL, TIP_COUPLING,
                     Grid1D, ModelSpec, StiffnessKind, boundary_tip_damping,
                     construct_min_rank_D, coupling_pair, eig_group,
                     kelvin_voigt_damping, viscous_damping)


def exact_rank(M) -> int:
    """Rank by Gaussian elimination over Fractions; exact for rational entries."""
    rows = [[Fraction(v).limit_denominator(10**12) for v in row] for row in np.asarray(M)]
    rank = 0
    ncols = len(rows[0]) if rows else 0
    col = 0
    r = 0
    while r < len(rows) and col < ncols:
        pivot = next((i for i in range(r, len(rows)) if rows[i][col] != 0), None)
        if pivot is None:
            col += 1
            continue
        rows[r], rows[pivot] = rows[pivot], rows[r]
        for i in range(len(rows)):
            if i != r and rows[i][col] != 0:
                factor = rows[i][col] / rows[r][col]
                rows[i] = [a - factor * b for a, b in zip(rows[i], rows[r])]
        r += 1
        rank += 1
        col += 1
    return rank


def random_psd_pair(rng: np.random.Generator, N: int, integer_spectrum: bool = False):
    """Random PSD (A, D) built as Q diag(w) Q^T with independent bases."""
    def psd():
        Q = np.linalg.qr(rng.standard_normal((N, N)))[0]
        w = rng.uniform(0.0, 2.0, N)
        if integer_spectrum:
            w = np.round(w * 2) / 1.0
        return Q @ np.diag(w) @ Q.T
    return coupling_pair(psd(), psd())


def random_kalman_pair(rng: np.random.Generator, N: int):
    """Random pair guaranteed to satisfy the rank condition.

    Half the draws use a generic positive-definite control matrix, half the
    minimal-rank construction on a coupling matrix with repeated eigenvalues.
    """
    Q = np.linalg.qr(rng.standard_normal((N, N)))[0]
    w = np.round(rng.uniform(0.0, 2.0, N) * 2) / 2.0
    A = Q @ np.diag(w) @ Q.T
    if rng.random() < 0.5:
        Q2 = np.linalg.qr(rng.standard_normal((N, N)))[0]
        D = Q2 @ np.diag(rng.uniform(0.5, 2.0, N)) @ Q2.T
        return coupling_pair(A, D)
    return construct_min_rank_D(eig_group(A))


def random_kalman_failing_pair(rng: np.random.Generator, N: int):
    """Pair with one coordinate exactly decoupled from the control.

    Built in a diagonal frame and permuted, so the invariant kernel direction
    is float-exact and survives lifting without rounding ambiguity.
    """
    wa = rng.uniform(0.1, 2.0, N)
    block = rng.standard_normal((N - 1, N - 1))
    D = np.zeros((N, N))
    D[1:, 1:] = block.T @ block
    perm = rng.permutation(N)
    A = np.diag(wa)[np.ix_(perm, perm)]
    D = D[np.ix_(perm, perm)]
    return coupling_pair(A, D)


@pytest.fixture
def demo_pair():
    return coupling_pair(DEMO_COUPLING, DEMO_CONTROL)


@pytest.fixture
def tip_pair():
    return coupling_pair(TIP_COUPLING, TIP_CONTROL)


def demo_model(n: int, damping="viscous", pair=None) -> ModelSpec:
    """Coupled wave model on the demo pair; damping in {viscous, kelvin_voigt, none}."""
    if pair is None:
        pair = coupling_pair(DEMO_COUPLING, DEMO_CONTROL)
    if damping == "viscous":
        dk = viscous_damping(0.0, 1.0)
    elif damping == "kelvin_voigt":
        dk = kelvin_voigt_damping(1.0)
    elif damping == "none":
        dk = viscous_damping(0.0, 1.0)
        pair = coupling_pair(pair.A, np.zeros_like(pair.D))
    else:
        raise ValueError(damping)
    return ModelSpec(grid=Grid1D(n), stiffness=StiffnessKind("wave_dirichlet"),
                     damping=dk, pair=pair)


def tip_model(n: int) -> ModelSpec:
    pair = coupling_pair(TIP_COUPLING, TIP_CONTROL)
    return ModelSpec(grid=Grid1D(n), stiffness=StiffnessKind("wave_tip"),
                     damping=boundary_tip_damping(), pair=pair)
