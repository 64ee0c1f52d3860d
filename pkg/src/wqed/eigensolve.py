"""Lowest eigenpairs of sparse symmetric operators.

The iterative core is a thick-restart Lanczos scheme: the Krylov basis is kept
fully orthogonal (two-pass Gram-Schmidt against the whole active subspace and
every deflated eigenvector), the projected operator is carried as an explicit
small dense matrix, and on hitting the subspace cap the best Ritz vectors are
kept and the iteration continues along the residual direction. Converged pairs
are deflated before the next eigenvalue is targeted. Dense diagonalization
serves both as the small-problem fallback and as the test oracle.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .hamiltonian import SparseOperator

DEFAULT_TOL = 1e-10
DENSE_LIMIT = 4000


class ConvergenceError(RuntimeError):
    def __init__(self, message: str, best_residual: float):
        super().__init__(f"{message} (best residual {best_residual:.3e})")
        self.best_residual = best_residual


@dataclass
class EigenResult:
    """Eigenvalues in ascending order plus solver diagnostics.

    ``residual`` is the largest ``|H v - E v|`` over the returned pairs;
    ``iterations`` counts matrix-vector products; ``ritz_trace`` records the
    running Ritz minimum of the first pair when requested.
    """

    energies: np.ndarray
    ground_vector: np.ndarray | None
    iterations: int
    residual: float
    seed: int
    vectors: np.ndarray | None = None
    ritz_trace: np.ndarray | None = None


def _fix_sign(v: np.ndarray) -> np.ndarray:
    i = int(np.argmax(np.abs(v)))
    return -v if v[i] < 0 else v


def _orth(w: np.ndarray, *blocks: np.ndarray) -> np.ndarray:
    # two classical Gram-Schmidt passes keep the basis orthogonal to working precision
    for _ in range(2):
        for b in blocks:
            if b.shape[0]:
                w = w - b.T @ (b @ w)
    return w


def _start_vector(rng: np.random.Generator, dim: int, *blocks: np.ndarray) -> np.ndarray:
    for _ in range(20):
        v = rng.standard_normal(dim)
        v = _orth(v, *blocks)
        nv = np.linalg.norm(v)
        if nv > 1e-8:
            return v / nv
    raise RuntimeError("could not find a start vector orthogonal to the deflated set")


def _iterate_pairs(
    matvec,
    dim: int,
    k: int,
    tol: float,
    seed: int,
    m_max: int,
    keep: int,
    max_restarts: int,
    check_every: int,
    collect_trace: bool,
):
    rng = np.random.default_rng(seed)
    conv_vals: list[float] = []
    conv_vecs = np.zeros((k, dim))
    matvecs = 0
    worst = 0.0
    trace: list[float] | None = [] if collect_trace else None

    for pair in range(k):
        D = conv_vecs[:pair]
        space_left = dim - pair
        m_cap = max(2, min(m_max, space_left))
        V = np.zeros((m_cap, dim))
        M = np.zeros((m_cap, m_cap))
        V[0] = _start_vector(rng, dim, D)
        j = 1
        restarts = 0
        since_check = 0
        theta = 0.0
        x = V[0]
        res = np.inf
        best_res = np.inf

        while True:
            w = matvec(V[j - 1])
            matvecs += 1
            col = V[:j] @ w
            M[:j, j - 1] = col
            M[j - 1, :j] = col
            evals, evecs = np.linalg.eigh(M[:j, :j])
            theta = float(evals[0])
            if trace is not None and pair == 0:
                trace.append(theta)

            at_cap = j == m_cap
            since_check += 1
            if since_check >= check_every or at_cap:
                since_check = 0
                x = evecs[:, 0] @ V[:j]
                x = _orth(x, D)  # strip roundoff leakage into the deflated set
                x = x / np.linalg.norm(x)
                hx = matvec(x)
                matvecs += 1
                theta = float(x @ hx)
                # residual within the deflated complement: components along locked
                # vectors carry those vectors' own (already accepted) error
                res = float(np.linalg.norm(_orth(hx - theta * x, D)))
                best_res = min(best_res, res)
                if res <= tol * max(1.0, abs(theta)):
                    break
                if at_cap:
                    restarts += 1
                    if restarts > max_restarts:
                        raise ConvergenceError(
                            f"pair {pair} not converged after {restarts - 1} restarts", best_res
                        )
                    nkeep = max(1, min(keep, j - 1, space_left - 1))
                    kept = evecs[:, :nkeep].T @ V[:j]
                    # refresh orthonormality lost to roundoff
                    q, _ = np.linalg.qr(kept.T)
                    V[:nkeep] = q.T
                    M[:, :] = 0.0
                    M[:nkeep, :nkeep] = np.diag(evals[:nkeep])
                    t = hx - theta * x
                    t = _orth(t, V[:nkeep], D)
                    tn = np.linalg.norm(t)
                    if tn > 1e-10:
                        V[nkeep] = t / tn
                    else:
                        V[nkeep] = _start_vector(rng, dim, V[:nkeep], D)
                    j = nkeep + 1
                    continue

            if not at_cap:
                nb = np.linalg.norm(w)
                w = _orth(w, V[:j], D)
                nw = np.linalg.norm(w)
                if nw < 1e-10 * max(nb, 1.0):
                    # invariant subspace reached: accept if converged, else reseed
                    x = evecs[:, 0] @ V[:j]
                    x = _orth(x, D)
                    x = x / np.linalg.norm(x)
                    hx = matvec(x)
                    matvecs += 1
                    theta = float(x @ hx)
                    res = float(np.linalg.norm(_orth(hx - theta * x, D)))
                    best_res = min(best_res, res)
                    if res <= tol * max(1.0, abs(theta)):
                        break
                    V[j] = _start_vector(rng, dim, V[:j], D)
                else:
                    V[j] = w / nw
                j += 1

        conv_vals.append(theta)
        conv_vecs[pair] = _fix_sign(x)
        worst = max(worst, res)

    order = np.argsort(conv_vals, kind="stable")
    energies = np.asarray(conv_vals)[order]
    vectors = conv_vecs[order]
    return energies, vectors, matvecs, worst, (np.asarray(trace) if trace is not None else None)


def _dense_pairs(op: SparseOperator, k: int):
    vals, vecs = np.linalg.eigh(op.to_dense())
    return vals[:k], vecs[:, :k].T.copy()


def _residual(op: SparseOperator, energies: np.ndarray, vectors: np.ndarray) -> float:
    worst = 0.0
    for e, v in zip(energies, vectors):
        worst = max(worst, float(np.linalg.norm(op.matvec(v) - e * v)))
    return worst


def low_spectrum(
    op: SparseOperator,
    k: int,
    tol: float = DEFAULT_TOL,
    seed: int = 0,
    *,
    want_vectors: bool = True,
    dense_cutoff: int = 256,
    m_max: int = 96,
    keep: int = 16,
    max_restarts: int = 600,
    check_every: int = 6,
    collect_trace: bool = False,
) -> EigenResult:
    """The ``k`` lowest eigenvalues (ascending) with deflation of converged pairs."""
    if k < 1 or k > op.dim:
        raise ValueError(f"k={k} outside [1, {op.dim}]")
    if tol <= 0:
        raise ValueError("tolerance must be positive")

    if op.dim == 1:
        e = float(op.matvec(np.ones(1))[0])
        v = np.ones((1, 1))
        return EigenResult(np.array([e]), v[0], 0, 0.0, seed, vectors=v)

    if op.dim <= dense_cutoff:
        energies, vectors = _dense_pairs(op, k)
        vectors = np.array([_fix_sign(v) for v in vectors])
        res = _residual(op, energies, vectors)
        return EigenResult(
            energies.copy(),
            vectors[0] if want_vectors else None,
            0,
            res,
            seed,
            vectors=vectors if want_vectors else None,
        )

    energies, vectors, matvecs, worst, trace = _iterate_pairs(
        op.matvec, op.dim, k, tol, seed, m_max, keep, max_restarts, check_every, collect_trace
    )
    return EigenResult(
        energies,
        vectors[0] if want_vectors else None,
        matvecs,
        worst,
        seed,
        vectors=vectors if want_vectors else None,
        ritz_trace=trace,
    )


def ground_state(
    op: SparseOperator,
    tol: float = DEFAULT_TOL,
    seed: int = 0,
    *,
    want_vector: bool = True,
    dense_cutoff: int = 64,
    m_max: int = 96,
    keep: int = 16,
    max_restarts: int = 600,
    check_every: int = 6,
    collect_trace: bool = False,
) -> EigenResult:
    """Ground eigenpair; deterministic for a fixed ``(op, tol, seed)``."""
    result = low_spectrum(
        op,
        1,
        tol,
        seed,
        want_vectors=want_vector,
        dense_cutoff=dense_cutoff,
        m_max=m_max,
        keep=keep,
        max_restarts=max_restarts,
        check_every=check_every,
        collect_trace=collect_trace,
    )
    return result


def dense_spectrum(op: SparseOperator, dense_limit: int = DENSE_LIMIT) -> np.ndarray:
    """Full ascending spectrum by dense diagonalization; the oracle for the iterative path."""
    if op.dim > dense_limit:
        raise ValueError(f"dimension {op.dim} exceeds dense limit {dense_limit}")
    return np.linalg.eigvalsh(op.to_dense())
