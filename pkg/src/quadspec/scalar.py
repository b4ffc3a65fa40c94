"""Evaluation of the self-energy gamma and branch-tracked solution of -1/m = z + gamma(m).

In the eigenbasis of A (eigenvalues mu_i) and of its entrywise real part
A_hat (eigenvalues mu_hat_i, eigenvectors w_i) the self-energy is

    gamma(m) = -sum_i mu_i / (1 + m mu_i)
               + m sum_i |<w_i, b>|^2 (1 + m mu_hat_i) / (1 + 2 m mu_hat_i)^2 - c

and h(m) = 1/m^2 - gamma'(m) controls both the edge locations (through its
real roots) and the Newton derivative, since d/dm (1/m + z + gamma(m)) = -h(m).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .model import PolynomialSpec

RESIDUAL_RTOL = 1e-11
CONTINUATION_RATIO = 0.7
MAX_NEWTON_ITERATIONS = 200
POLE_DISTANCE = 1e-13
REAL_AXIS_ETA = 1e-9
B_PROJ_RTOL = 1e-12


class PoleProximityError(ValueError):
    """Evaluation point is too close to a pole of gamma or h."""


class NoConvergenceError(RuntimeError):
    """The damped Newton continuation failed to reach the residual target."""

    def __init__(self, z: complex, residual: float):
        super().__init__(f"no convergence at z = {z}: residual {residual:.3e}")
        self.z = z
        self.residual = residual


@dataclass(frozen=True)
class StieltjesPoint:
    """One solution of the self-consistent equation on the upper half-plane."""

    z: complex
    m: complex
    residual: float
    iterations: int


@dataclass(frozen=True)
class PoleSet:
    """Real poles of gamma and h with the maximal pole-free intervals around 0.

    ``(m_star_plus, 0)`` and ``(0, m_star_minus)`` are the maximal intervals to
    the left and the right of the origin on which h is continuous.
    """

    gamma_poles: np.ndarray
    h_poles: np.ndarray
    m_star_plus: float
    m_star_minus: float


def _split_eigendata(spec: PolynomialSpec):
    """Nonzero eigenvalues of A, and A_hat eigenpairs carrying b weight."""
    mu = spec.eig_a[np.abs(spec.eig_a) > 1e-14 * max(spec.norm_a, 1e-300)]
    weight_tol = B_PROJ_RTOL * max(spec.norm_b**2, 1e-300)
    keep = spec.b_proj > weight_tol
    mu_hat = spec.eig_a_hat[keep]
    w2 = spec.b_proj[keep]
    return mu, mu_hat, w2


def gamma_value(m, spec: PolynomialSpec):
    """gamma(m) for scalar or array m (no pole checks)."""
    m = np.asarray(m, dtype=complex)
    mu, mu_hat, w2 = _split_eigendata(spec)
    x = m[..., None]
    out = -np.sum(mu / (1.0 + x * mu), axis=-1)
    if len(w2):
        out = out + m * np.sum(w2 * (1.0 + x * mu_hat) / (1.0 + 2.0 * x * mu_hat) ** 2, axis=-1)
    return out - spec.c


def gamma_prime(m, spec: PolynomialSpec):
    """gamma'(m) = sum mu^2/(1+m mu)^2 + sum |<w,b>|^2/(1+2m mu_hat)^3."""
    m = np.asarray(m, dtype=complex)
    mu, mu_hat, w2 = _split_eigendata(spec)
    x = m[..., None]
    out = np.sum(mu**2 / (1.0 + x * mu) ** 2, axis=-1)
    if len(w2):
        out = out + np.sum(w2 / (1.0 + 2.0 * x * mu_hat) ** 3, axis=-1)
    return out


def h_value(m, spec: PolynomialSpec):
    """h(m) = 1/m^2 - gamma'(m)."""
    m = np.asarray(m, dtype=complex)
    return 1.0 / m**2 - gamma_prime(m, spec)


def h_prime(m, spec: PolynomialSpec):
    """h'(m), used to polish edge roots and certify their first order."""
    m = np.asarray(m, dtype=complex)
    mu, mu_hat, w2 = _split_eigendata(spec)
    x = m[..., None]
    out = -2.0 / m**3 + 2.0 * np.sum(mu**3 / (1.0 + x * mu) ** 3, axis=-1)
    if len(w2):
        out = out + 6.0 * np.sum(w2 * mu_hat / (1.0 + 2.0 * x * mu_hat) ** 4, axis=-1)
    return out


def poles(spec: PolynomialSpec) -> PoleSet:
    """Exact pole lists from the eigendata.

    A_hat eigendirections enter only when they carry b weight
    (|<w_i, b>|^2 > 1e-12 ||b||^2).
    """
    mu, mu_hat, _ = _split_eigendata(spec)
    gamma_list = [-1.0 / x for x in mu]
    gamma_list += [-0.5 / x for x in mu_hat[np.abs(mu_hat) > 1e-14 * max(spec.norm_a, 1e-300)]]
    gamma_poles = np.array(sorted(gamma_list))
    h_poles = np.array(sorted(gamma_list + [0.0]))
    negative = gamma_poles[gamma_poles < 0.0]
    positive = gamma_poles[gamma_poles > 0.0]
    m_star_plus = float(negative.max()) if len(negative) else -np.inf
    m_star_minus = float(positive.min()) if len(positive) else np.inf
    return PoleSet(
        gamma_poles=gamma_poles,
        h_poles=h_poles,
        m_star_plus=m_star_plus,
        m_star_minus=m_star_minus,
    )


def evaluate_gamma_h(m: complex, spec: PolynomialSpec) -> tuple[complex, complex, complex]:
    """(gamma(m), gamma'(m), h(m)) with pole-proximity protection."""
    pole_set = poles(spec)
    m = complex(m)
    if len(pole_set.gamma_poles) and np.min(np.abs(m - pole_set.gamma_poles)) < POLE_DISTANCE:
        raise PoleProximityError(f"m = {m} is within {POLE_DISTANCE} of a pole of gamma")
    if abs(m) < POLE_DISTANCE:
        raise PoleProximityError(f"m = {m} is within {POLE_DISTANCE} of the pole of h at 0")
    return (
        complex(gamma_value(m, spec)),
        complex(gamma_prime(m, spec)),
        complex(h_value(m, spec)),
    )


def _newton_step(z, m, spec, active):
    fp = -h_value(m, spec)
    fp = np.where(fp == 0.0, 1e-300, fp)
    f = 1.0 / m + z + gamma_value(m, spec)
    step = np.where(active, f / fp, 0.0)
    scale = np.ones(m.shape)
    candidate = m - step
    for _ in range(60):
        bad = active & ((candidate.imag <= 0.0) | ~np.isfinite(candidate))
        if not np.any(bad):
            break
        scale = np.where(bad, 0.5 * scale, scale)
        candidate = m - scale * step
    return np.where(active & (candidate.imag > 0.0) & np.isfinite(candidate), candidate, m)


def _newton_level(z: np.ndarray, m: np.ndarray, spec: PolynomialSpec, polish: int = 0) -> tuple[np.ndarray, int]:
    """Damped Newton for f(m) = 1/m + z + gamma(m) at fixed z, keeping Im m > 0.

    A step that would leave the upper half-plane is halved until it does not.
    Raises when any component misses the residual target after the iteration
    budget; that indicates a bug or a pathological spec, not a valid outcome.
    ``polish`` extra keep-best iterations push the residual toward the
    numerical floor, which sharpens m near the edges where the Newton
    derivative -h(m) degenerates.
    """
    tol = RESIDUAL_RTOL * (1.0 + np.abs(z))
    iterations = 0
    converged = False
    for _ in range(MAX_NEWTON_ITERATIONS):
        f = 1.0 / m + z + gamma_value(m, spec)
        active = np.abs(f) > tol
        if not np.any(active):
            converged = True
            break
        iterations += 1
        m = _newton_step(z, m, spec, active)
    if not converged:
        f = 1.0 / m + z + gamma_value(m, spec)
        res = np.abs(f)
        if np.any(res > tol):
            worst = int(np.argmax(res / (1.0 + np.abs(z))))
            raise NoConvergenceError(complex(z.flat[worst]), float(res.flat[worst]))
    best_m = m
    best_res = np.abs(1.0 / m + z + gamma_value(m, spec))
    for _ in range(polish):
        m = _newton_step(z, m, spec, np.ones(m.shape, dtype=bool))
        res = np.abs(1.0 / m + z + gamma_value(m, spec))
        better = res < best_res
        best_m = np.where(better, m, best_m)
        best_res = np.where(better, res, best_res)
        iterations += 1
    return best_m, iterations


def solve_branch(z, spec: PolynomialSpec) -> tuple[np.ndarray, np.ndarray, int]:
    """Solve the self-consistent equation on an array of spectral parameters.

    Continuation starts high above the real axis at eta = H with
    H = 10 (1 + ||A|| + ||b|| + |c|)^2, seeded with m = -1/z there, and the
    imaginary part is lowered geometrically (ratio 0.7) to its target while
    damped Newton tracks the Nevanlinna branch.  Returns (m, residual,
    newton iterations).
    """
    z = np.asarray(z, dtype=complex)
    if np.any(z.imag <= 0.0):
        raise ValueError("spectral parameters must lie in the upper half-plane")
    big_eta = 10.0 * spec.coefficient_scale**2
    eta_target = z.imag
    eta = np.maximum(np.full(z.shape, big_eta), eta_target)
    m = -1.0 / (z.real + 1j * eta)
    total_iterations = 0
    while True:
        level = z.real + 1j * eta
        final = bool(np.all(eta == eta_target))
        m, iters = _newton_level(level, m, spec, polish=3 if final else 0)
        total_iterations += iters
        if final:
            break
        eta = np.maximum(eta_target, CONTINUATION_RATIO * eta)
    residual = np.abs(1.0 / m + z + gamma_value(m, spec))
    return m, residual, total_iterations


def solve_m(z: complex, spec: PolynomialSpec) -> StieltjesPoint:
    """Unique m(z) in the upper half-plane solving -1/m = z + gamma(m)."""
    z = complex(z)
    if z.imag <= 0.0:
        raise ValueError(f"Im z must be positive, got z = {z}")
    m, residual, iterations = solve_branch(np.array(z), spec)
    return StieltjesPoint(z=z, m=complex(m), residual=float(residual), iterations=iterations)
