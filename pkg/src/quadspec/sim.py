"""Wigner ensemble sampling, polynomial assembly and empirical spectral statistics.

Entries follow the standard normalization: centered unit-variance atoms
scaled by 1/sqrt(N), real on the diagonal, conjugate-symmetric off it.  Trial
streams are split from the root seed with a counter-based scheme so runs are
reproducible regardless of scheduling, and trials can execute concurrently
with results merged in trial-index order.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .model import PolynomialSpec

GAUSSIAN_COMPLEX = "gaussian-complex"
GAUSSIAN_REAL = "gaussian-real"
RADEMACHER = "rademacher"
DISTRIBUTIONS = (GAUSSIAN_COMPLEX, GAUSSIAN_REAL, RADEMACHER)

ASYMMETRY_RTOL = 1e-10
EDGE_NEIGHBORS = 8


class AsymmetryBlowupError(RuntimeError):
    """Assembled polynomial drifted from Hermitian beyond the roundoff budget."""


class SimulationError(RuntimeError):
    """One or more trials failed; carries (trial index, error) pairs."""

    def __init__(self, failures: list[tuple[int, Exception]]):
        lines = ", ".join(f"trial {i}: {err!r}" for i, err in failures)
        super().__init__(f"{len(failures)} trial(s) failed: {lines}")
        self.failures = failures


@dataclass(frozen=True)
class EnsembleConfig:
    """Ensemble dimensions, entry law and the reproducibility seed."""

    N: int
    dist: str = GAUSSIAN_COMPLEX
    seed: int = 0
    trials: int = 1

    def __post_init__(self):
        if self.dist not in DISTRIBUTIONS:
            raise ValueError(f"dist must be one of {DISTRIBUTIONS}, got {self.dist!r}")
        if self.N < 2:
            raise ValueError("N must be at least 2")
        if self.trials < 1:
            raise ValueError("trials must be positive")


@dataclass(frozen=True)
class EdgeVectorStat:
    """Eigenvalue and largest squared eigenvector coordinate near a probed edge."""

    eigenvalue: float
    max_component_sq: float


@dataclass
class SimulationResult:
    """Per-trial eigenvalue statistics with pooled aggregates.

    ``edge_vectors[t][k]`` holds the stats of the eigenpairs closest to
    ``edge_targets[k]`` in trial t (at most 8 pairs per edge);
    ``resolvent_traces[t]`` pairs each probe z with (1/N) tr (Q - z)^{-1}.
    """

    config: EnsembleConfig
    eigenvalues: list[np.ndarray]
    norms: np.ndarray
    edge_targets: tuple[float, ...]
    edge_vectors: list[list[list[EdgeVectorStat]]]
    resolvent_traces: list[list[tuple[complex, complex]]]
    pooled: np.ndarray = field(init=False)

    def __post_init__(self):
        self.pooled = np.sort(np.concatenate(self.eigenvalues)) if self.eigenvalues else np.array([])

    def empirical_cdf(self, x) -> np.ndarray:
        return np.searchsorted(self.pooled, x, side="right") / len(self.pooled)


def trial_rng(seed: int, trial_index: int) -> np.random.Generator:
    """Independent generator for one trial, keyed by (seed, trial index)."""
    return np.random.default_rng(np.random.SeedSequence(int(seed), spawn_key=(int(trial_index),)))


def _atoms(rng: np.random.Generator, dist: str, n: int):
    if dist == GAUSSIAN_COMPLEX:
        off = (rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))) / np.sqrt(2.0)
        diag = rng.standard_normal(n)
    elif dist == GAUSSIAN_REAL:
        off = rng.standard_normal((n, n))
        diag = rng.standard_normal(n)
    else:
        off = 2.0 * rng.integers(0, 2, size=(n, n)).astype(float) - 1.0
        diag = 2.0 * rng.integers(0, 2, size=n).astype(float) - 1.0
    return off, diag


def sample_wigner(n: int, dist: str, rng: np.random.Generator) -> np.ndarray:
    """Hermitian Wigner matrix with i.i.d. upper-triangular entries of variance 1/n."""
    if dist not in DISTRIBUTIONS:
        raise ValueError(f"dist must be one of {DISTRIBUTIONS}, got {dist!r}")
    off, diag = _atoms(rng, dist, n)
    upper = np.triu(off, 1)
    w = upper + upper.conj().T + np.diag(diag.astype(complex))
    return w / np.sqrt(n)


def assemble_polynomial(spec: PolynomialSpec, X) -> np.ndarray:
    """Q = sum_ij X_i A_ij X_j + sum_i b_i X_i + c I, symmetrized once at the end.

    A non-Hermitian part beyond 1e-10 ||Q|| indicates broken inputs and raises
    AsymmetryBlowupError before the symmetrization would hide it.
    """
    X = [np.asarray(x) for x in X]
    n = X[0].shape[0]
    if any(x.shape != (n, n) for x in X):
        raise ValueError("all matrices must share one dimension")
    if len(X) != spec.l:
        raise ValueError(f"expected {spec.l} matrices, got {len(X)}")
    stacked = np.stack(X)
    mixed = np.tensordot(spec.A, stacked, axes=(1, 0))  # mixed_i = sum_j A_ij X_j
    Q = np.zeros((n, n), dtype=complex)
    for i in range(spec.l):
        Q += X[i] @ mixed[i]
        Q += spec.b[i] * X[i]
    Q += spec.c * np.eye(n)
    asym = np.linalg.norm(Q - Q.conj().T)
    if asym > ASYMMETRY_RTOL * max(np.linalg.norm(Q), 1e-300):
        raise AsymmetryBlowupError(f"non-Hermitian part {asym:.3e} exceeds budget")
    return 0.5 * (Q + Q.conj().T)


def spectrum(Q: np.ndarray, vectors: bool = False):
    """Eigenvalues ascending, optionally with orthonormal eigenvector columns."""
    if vectors:
        vals, vecs = np.linalg.eigh(Q)
        return vals, vecs
    return np.linalg.eigvalsh(Q)


def resolvent_trace(Q_or_eigenvalues: np.ndarray, z: complex) -> complex:
    """(1/N) tr (Q - z)^{-1} from the spectrum; no linear solve involved."""
    z = complex(z)
    if z.imag <= 0.0:
        raise ValueError(f"Im z must be positive, got z = {z}")
    arr = np.asarray(Q_or_eigenvalues)
    eigs = np.linalg.eigvalsh(arr) if arr.ndim == 2 else arr
    return complex(np.mean(1.0 / (eigs - z)))


def _a_delta_matrix(spec: PolynomialSpec, eta: float, delta: float) -> np.ndarray:
    vals = spec.eig_a / (1.0 + 1j * delta * eta * spec.eig_a)
    return (spec.vec_a * vals) @ spec.vec_a.conj().T


def generalized_resolvent_blocks(spec: PolynomialSpec, X, z: complex, delta: float) -> np.ndarray:
    """Full (l+1)N generalized resolvent assembled from the Schur-complement blocks.

    Block layout: [[g, g X^t A_d], [A_d X g, -A_d + A_d X g X^t A_d]] with
    g = (X^t A_d X + b^t X + c - z)^{-1} and A_d = A (I + i delta eta A)^{-1}.
    """
    z = complex(z)
    X = [np.asarray(x, dtype=complex) for x in X]
    n = X[0].shape[0]
    l = spec.l
    A_d = _a_delta_matrix(spec, z.imag, delta)
    core = np.zeros((n, n), dtype=complex)
    for i in range(l):
        acc = np.zeros((n, n), dtype=complex)
        for j in range(l):
            acc += A_d[i, j] * X[j]
        core += X[i] @ acc
    for i in range(l):
        core += spec.b[i] * X[i]
    core += (spec.c - z) * np.eye(n)
    g = np.linalg.inv(core)

    G = np.zeros(((l + 1) * n, (l + 1) * n), dtype=complex)
    G[:n, :n] = g
    gx = [g @ X[k] for k in range(l)]
    xg = [X[k] @ g for k in range(l)]
    for j in range(l):
        G[:n, (j + 1) * n : (j + 2) * n] = sum(A_d[k, j] * gx[k] for k in range(l))
        G[(j + 1) * n : (j + 2) * n, :n] = sum(A_d[j, k] * xg[k] for k in range(l))
    for i in range(l):
        left = sum(A_d[i, k] * X[k] for k in range(l))
        for j in range(l):
            right = sum(A_d[k, j] * X[k] for k in range(l))
            block = -A_d[i, j] * np.eye(n) + left @ g @ right
            G[(i + 1) * n : (i + 2) * n, (j + 1) * n : (j + 2) * n] = block
    return G


def build_generalized_resolvent(spec: PolynomialSpec, X, z: complex, delta: float) -> np.ndarray:
    """Blockwise normalized trace of the generalized resolvent, an (l+1)x(l+1) matrix."""
    z = complex(z)
    if z.imag <= 0.0:
        raise ValueError(f"Im z must be positive, got z = {z}")
    if not 0.0 <= delta <= 1.0:
        raise ValueError(f"delta must lie in [0, 1], got {delta}")
    n = np.asarray(X[0]).shape[0]
    G = generalized_resolvent_blocks(spec, X, z, delta)
    l = spec.l
    out = np.zeros((l + 1, l + 1), dtype=complex)
    for i in range(l + 1):
        for j in range(l + 1):
            out[i, j] = np.trace(G[i * n : (i + 1) * n, j * n : (j + 1) * n]) / n
    return out


def _run_trial(spec: PolynomialSpec, cfg: EnsembleConfig, probes, edge_targets, index: int):
    rng = trial_rng(cfg.seed, index)
    X = [sample_wigner(cfg.N, cfg.dist, rng) for _ in range(spec.l)]
    Q = assemble_polynomial(spec, X)
    want_vectors = len(edge_targets) > 0
    if want_vectors:
        eigenvalues, vecs = spectrum(Q, vectors=True)
    else:
        eigenvalues = spectrum(Q)
        vecs = None
    per_edge: list[list[EdgeVectorStat]] = []
    for target in edge_targets:
        order = np.argsort(np.abs(eigenvalues - target))[:EDGE_NEIGHBORS]
        stats = [
            EdgeVectorStat(
                eigenvalue=float(eigenvalues[k]),
                max_component_sq=float(np.max(np.abs(vecs[:, k]) ** 2)),
            )
            for k in order
        ]
        per_edge.append(stats)
    traces = [(complex(z), resolvent_trace(eigenvalues, z)) for z in probes]
    return eigenvalues, float(np.max(np.abs(eigenvalues))), per_edge, traces


def simulate_run(
    spec: PolynomialSpec,
    cfg: EnsembleConfig,
    probes=(),
    edge_targets=(),
    threads: int = 1,
) -> SimulationResult:
    """Run independent trials and collect eigenvalues, norms and probe statistics.

    One RNG stream per trial is derived from (seed, trial index), so the
    result is identical however the trials are scheduled.  Eigenvectors are
    computed only when ``edge_targets`` is nonempty, and only the 8 eigenpairs
    nearest each target are kept.
    """
    probes = tuple(complex(z) for z in probes)
    edge_targets = tuple(float(t) for t in edge_targets)
    indices = range(cfg.trials)
    results: dict[int, tuple] = {}
    failures: list[tuple[int, Exception]] = []

    def runner(i: int):
        try:
            return i, _run_trial(spec, cfg, probes, edge_targets, i), None
        except Exception as exc:  # aggregated below with trial indices
            return i, None, exc

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            outcomes = list(pool.map(runner, indices))
    else:
        outcomes = [runner(i) for i in indices]
    for i, payload, exc in outcomes:
        if exc is not None:
            failures.append((i, exc))
        else:
            results[i] = payload
    if failures:
        raise SimulationError(failures)

    ordered = [results[i] for i in indices]
    return SimulationResult(
        config=cfg,
        eigenvalues=[r[0] for r in ordered],
        norms=np.array([r[1] for r in ordered]),
        edge_targets=edge_targets,
        edge_vectors=[r[2] for r in ordered],
        resolvent_traces=[r[3] for r in ordered],
    )


def dump_trial_csv(result: SimulationResult, directory) -> list[str]:
    """One CSV per trial (single ``lambda`` column); returns the written paths."""
    from pathlib import Path

    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    paths = []
    for i, eigs in enumerate(result.eigenvalues):
        path = directory / f"trial_{i}.csv"
        with open(path, "w") as fh:
            fh.write("lambda\n")
            for lam in eigs:
                fh.write(f"{lam:.17g}\n")
        paths.append(str(path))
    return paths
