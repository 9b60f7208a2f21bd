"""Eigenvalue branches of three two-component benchmark systems.

All three couple two 1-D wave fields through a rank-deficient control
matrix, so only one velocity combination is damped and the slowest
eigenvalue branch approaches the imaginary axis polynomially:

* viscous: global velocity damping; per mode nu = k pi the pencil
  determinant is (b^2 + nu^2 + 1 + b)(b^2 + nu^2 + 2 + 4b) - 4 b^2 and the
  slow branch behaves like -2/(125 nu^2) + i (nu + 3/(5 nu)).
* kelvin_voigt: strain-rate damping; same determinant with b replaced by
  b nu^2 in the damping terms, slow branch -2/(125 nu^4) + i (nu + 3/(5 nu)).
* tip: damping through a single boundary point; the characteristic function
  is transcendental and the branch near i (n + 1/2) pi is found by Newton
  iteration.  Expanding the characteristic equation gives the asymptote
  -1/(32 (n+1/2)^2 pi^2) + i ((n+1/2) pi + 1/(4 (n+1/2) pi)).

A branch with Re(b) ~ -1/|Im(b)|^{1/theta} caps the semigroup decay rate at
t^{-theta}: theta = 1/2 for the viscous and tip systems, 1/4 for
Kelvin-Voigt.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "BranchPoint",
    "DEMO_COUPLING", "DEMO_CONTROL", "TIP_COUPLING", "TIP_CONTROL",
    "VISCOUS_BRANCH_LIMIT", "KELVIN_VOIGT_BRANCH_LIMIT", "TIP_BRANCH_LIMIT",
    "viscous_branch", "kelvin_voigt_branch", "tip_branch", "tip_branch_secondary",
    "predicted_viscous", "predicted_kelvin_voigt", "predicted_tip",
    "tip_characteristic",
]

DEMO_COUPLING = np.array([[1.0, 0.0], [0.0, 2.0]])
DEMO_CONTROL = np.array([[1.0, 2.0], [2.0, 4.0]])

TIP_COUPLING = np.array([[1.0, 0.0], [0.0, 0.0]])
TIP_CONTROL = np.array([[1.0, -1.0], [-1.0, 1.0]])

# limits of Re(b_k) * nu_k^2, Re(b_k) * nu_k^4 and Re(b_n) * n^2 along the slow branches
VISCOUS_BRANCH_LIMIT = -2.0 / 125.0
KELVIN_VOIGT_BRANCH_LIMIT = -2.0 / 125.0
TIP_BRANCH_LIMIT = -1.0 / (32.0 * np.pi**2)


@dataclass(eq=False)
class BranchPoint:
    """One computed branch eigenvalue with its asymptotic prediction."""

    index: int
    beta: complex
    prediction: complex
    residual: float = 0.0

    @property
    def rel_err(self) -> float:
        return abs(self.beta - self.prediction) / abs(self.beta)


def predicted_viscous(k: int) -> complex:
    nu = k * np.pi
    return complex(-2.0 / (125.0 * nu**2), nu + 3.0 / (5.0 * nu))


def predicted_kelvin_voigt(k: int) -> complex:
    nu = k * np.pi
    return complex(-2.0 / (125.0 * nu**4), nu + 3.0 / (5.0 * nu))


def predicted_tip(n: int) -> complex:
    y0 = (n + 0.5) * np.pi
    return complex(-1.0 / (32.0 * y0**2), y0 + 1.0 / (4.0 * y0))


def _polish_poly(coeffs: np.ndarray, root: complex, iters: int = 3) -> complex:
    # Newton refinement of a companion-matrix root; the raw eigenvalue can
    # carry absolute noise comparable to the tiny real parts at large nu
    deriv = np.polyder(coeffs)
    for _ in range(iters):
        denom = np.polyval(deriv, root)
        if denom == 0:
            break
        root = root - np.polyval(coeffs, root) / denom
    return root


def _slow_quartic_root(coeffs: np.ndarray) -> complex:
    roots = np.roots(coeffs)
    r = roots[np.argmax(roots.real)]
    r = _polish_poly(coeffs, r)
    return complex(r) if r.imag >= 0 else complex(np.conj(r))


def viscous_branch(ks) -> list[BranchPoint]:
    """Slowest-decaying root of the viscous mode quartic for each k (nu = k pi)."""
    out = []
    for k in ks:
        k = int(k)
        if k < 1:
            raise ValueError("mode index must be >= 1")
        nu = k * np.pi
        a, b = nu**2 + 1.0, nu**2 + 2.0
        coeffs = np.array([1.0, 5.0, a + b, 4.0 * a + b, a * b])
        out.append(BranchPoint(index=k, beta=_slow_quartic_root(coeffs),
                               prediction=predicted_viscous(k)))
    return out


def kelvin_voigt_branch(ks) -> list[BranchPoint]:
    """Slowest-decaying root of the Kelvin-Voigt mode quartic for each k."""
    out = []
    for k in ks:
        k = int(k)
        if k < 1:
            raise ValueError("mode index must be >= 1")
        nu = k * np.pi
        a, b = nu**2 + 1.0, nu**2 + 2.0
        coeffs = np.array([1.0, 5.0 * nu**2, a + b, nu**2 * (4.0 * a + b), a * b])
        out.append(BranchPoint(index=k, beta=_slow_quartic_root(coeffs),
                               prediction=predicted_kelvin_voigt(k)))
    return out


def _shifted_hyperbolic(z):
    # cosh(z) e^{-|Re z|} and sinh(z) e^{-|Re z|}; both exponents have
    # non-positive real part, so nothing overflows for any z
    x = abs(z.real)
    ep = np.exp(z - x)
    em = np.exp(-z - x)
    return 0.5 * (ep + em), 0.5 * (ep - em)


def tip_characteristic(beta: complex) -> tuple[complex, complex, float]:
    """Scaled characteristic function of the tip-damped pair.

    Returns (f_scaled, df_scaled, term_scale): the true characteristic value
    is f_scaled * e^{s} with s = |Re beta| + |Re beta1|, and likewise for the
    derivative, so Newton steps and residual ratios are exact.  term_scale is
    the magnitude of the larger of the two scaled terms, the natural
    reference for a relative residual.

    Evaluated in extended precision: near a root the value is a cancellation
    of two O(1) terms whose double-precision trig argument reduction alone
    would floor the relative residual near 1e-12 for |Im beta| ~ 100.
    """
    if complex(beta) == 0:
        raise ValueError("characteristic function undefined at beta = 0")
    beta = np.clongdouble(beta)
    beta1 = np.sqrt(beta**2 + 1.0)
    c, s = _shifted_hyperbolic(beta)
    c1, s1 = _shifted_hyperbolic(beta1)
    gamma = beta1 / beta
    t1 = gamma * c1 * (s + c)
    t2 = c * s1
    f = t1 + t2
    df = (-c1 * (s + c) / (beta**2 * beta1) + s1 * (s + c)
          + gamma * c1 * (s + c) + s * s1 + (beta / beta1) * c * c1)
    return complex(f), complex(df), float(max(abs(t1), abs(t2)))


def _tip_newton(seed: complex, tol: float, max_iter: int) -> complex | None:
    # iterate in extended precision so the root, not evaluation noise,
    # limits the final residual
    beta = np.clongdouble(seed)
    for _ in range(max_iter):
        f, df, scale = tip_characteristic(beta)
        if abs(f) <= tol * scale:
            return complex(beta)
        if df == 0 or abs(complex(beta) - seed) > 1.5:
            return None
        beta = beta - np.clongdouble(f) / np.clongdouble(df)
    f, _, scale = tip_characteristic(beta)
    return complex(beta) if abs(f) <= tol * scale else None


def tip_branch(ns, tol: float = 1e-12, max_iter: int = 60) -> list[BranchPoint]:
    """Newton roots of the tip characteristic function near i (n + 1/2) pi.

    Seeds sit at the branch asymptote, strictly between the zeros of
    cosh.  On Newton failure the root is bracketed by a scan over the
    imaginary part before a final Newton polish; an unresolvable index
    raises ConvergenceError.
    """
    return _tip_family(ns, predicted_tip, tol, max_iter)


def tip_branch_secondary(ns, tol: float = 1e-12, max_iter: int = 60) -> list[BranchPoint]:
    """The uniformly damped root family of the tip system, near -ln(3)/2 + i n pi.

    The leading balance of the characteristic equation, 3 e^{4b} + 2 e^{2b}
    - 1 = 0, has the second solution e^{2b} = 1/3, so this family keeps a
    real part near -ln(3)/2 instead of creeping toward the imaginary axis.
    """
    pred = lambda n: complex(-0.5 * np.log(3.0), n * np.pi)
    return _tip_family(ns, pred, tol, max_iter)


def _tip_family(ns, predict, tol: float, max_iter: int) -> list[BranchPoint]:
    from .spectra import ConvergenceError

    out = []
    for n in ns:
        n = int(n)
        if n < 1:
            raise ValueError("branch index must be >= 1")
        pred = predict(n)
        beta = _tip_newton(pred, tol, max_iter)
        if beta is None:
            grid = pred.imag + np.linspace(-0.4, 0.4, 2001)
            vals = [abs(tip_characteristic(complex(pred.real, y))[0]) for y in grid]
            beta = _tip_newton(complex(pred.real, grid[int(np.argmin(vals))]),
                               tol, max_iter)
        if beta is None:
            raise ConvergenceError(f"tip branch root n={n} did not converge")
        f, _, scale = tip_characteristic(beta)
        out.append(BranchPoint(index=n, beta=complex(beta), prediction=pred,
                               residual=float(abs(f) / scale)))
    return out
