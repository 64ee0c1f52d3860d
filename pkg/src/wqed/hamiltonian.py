"""Sparse lattice Hamiltonian in a fixed-excitation sector.

All matrix elements are real in the occupation basis: the diagonal carries the
on-site interaction plus ``-delta`` per excited atom (rotating frame), hopping
enters as ``-J sqrt(n (n'+1))`` per directed bond and the atom-photon exchange
as ``+g sqrt(n)``. Only the upper triangle is stored.
"""

from __future__ import annotations

from dataclasses import replace

import numpy as np
import scipy.sparse as sp

from .basis import ModelSpec, SectorBasis

DROP_TOL = 1e-15


class NonBipartiteError(ValueError):
    """Staggered gauge requested on a lattice without a two-sublattice split."""


class SparseOperator:
    """Real symmetric operator stored as upper-triangular coordinates.

    ``rows``, ``cols``, ``vals`` are parallel arrays with ``cols >= rows``, no
    duplicate pairs and finite values. A compressed-row view of the full
    (mirrored) matrix is built lazily for matrix-vector products. Instances are
    immutable and safe to share between threads.
    """

    def __init__(self, dim: int, rows, cols, vals, validate: bool = True):
        if dim < 1:
            raise ValueError("operator dimension must be at least 1")
        self.dim = int(dim)
        self.rows = np.asarray(rows, dtype=np.int64)
        self.cols = np.asarray(cols, dtype=np.int64)
        self.vals = np.asarray(vals, dtype=np.float64)
        if validate:
            if not (self.rows.shape == self.cols.shape == self.vals.shape):
                raise ValueError("coordinate arrays must have equal length")
            if self.rows.size:
                if self.rows.min() < 0 or self.cols.max() >= dim:
                    raise ValueError("coordinate out of range")
                if np.any(self.cols < self.rows):
                    raise ValueError("storage requires col >= row")
                if not np.all(np.isfinite(self.vals)):
                    raise ValueError("non-finite matrix element")
                pair = self.rows * dim + self.cols
                if np.unique(pair).size != pair.size:
                    raise ValueError("duplicate coordinate pair")
        self._csr = None
        for a in (self.rows, self.cols, self.vals):
            a.setflags(write=False)

    @classmethod
    def from_coo(cls, dim: int, rows, cols, vals, drop_tol: float = DROP_TOL) -> "SparseOperator":
        """Coalesce duplicate coordinates, mirror nothing, drop tiny entries."""
        m = sp.coo_matrix((vals, (rows, cols)), shape=(dim, dim))
        m.sum_duplicates()
        keep = np.abs(m.data) > drop_tol
        return cls(dim, m.row[keep], m.col[keep], m.data[keep])

    @classmethod
    def from_dense(cls, a: np.ndarray, drop_tol: float = 0.0) -> "SparseOperator":
        a = np.asarray(a, dtype=np.float64)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise ValueError("need a square matrix")
        if not np.allclose(a, a.T, atol=1e-12):
            raise ValueError("matrix is not symmetric")
        sym = 0.5 * (a + a.T)
        r, c = np.nonzero(np.triu(np.abs(sym) > drop_tol))
        return cls(a.shape[0], r, c, sym[r, c])

    @property
    def nnz_stored(self) -> int:
        return int(self.vals.size)

    def to_csr(self) -> sp.csr_matrix:
        if self._csr is None:
            off = self.cols != self.rows
            r = np.concatenate([self.rows, self.cols[off]])
            c = np.concatenate([self.cols, self.rows[off]])
            v = np.concatenate([self.vals, self.vals[off]])
            self._csr = sp.csr_matrix((v, (r, c)), shape=(self.dim, self.dim))
        return self._csr

    def matvec(self, x: np.ndarray) -> np.ndarray:
        return self.to_csr().dot(x)

    def to_dense(self) -> np.ndarray:
        return self.to_csr().toarray()

    def trace(self) -> float:
        on_diag = self.rows == self.cols
        return float(self.vals[on_diag].sum())

    def dump_text(self) -> str:
        """Coordinate dump, one line ``row col value`` with 17 significant digits."""
        lines = [f"{r} {c} {v:.17g}" for r, c, v in zip(self.rows, self.cols, self.vals)]
        return "\n".join(lines) + ("\n" if lines else "")

    def save_text(self, path) -> None:
        with open(path, "w", newline="\n") as fh:
            fh.write(self.dump_text())


def bond_list(spec: ModelSpec) -> list[tuple[int, int]]:
    bonds = [(x, x + 1) for x in range(spec.L - 1)]
    if spec.boundary == "periodic" and spec.L >= 2:
        bonds.append((spec.L - 1, 0))
    return bonds


def build_hamiltonian(spec: ModelSpec, basis: SectorBasis) -> SparseOperator:
    """Assemble the sector Hamiltonian from the basis enumeration.

    The upper triangle is generated row by row: for each configuration every
    allowed photon hop and atom-photon exchange is ranked through the basis
    index; only targets above the current row are kept, the mirror entries
    arriving when the partner row is processed.
    """
    if basis.spec != spec:
        raise ValueError("basis was built from a different spec")
    dim = basis.dim
    L = spec.L
    cap = spec.n_trunc
    u_tab = np.asarray(spec.nonlinearity.as_table(cap))
    bonds = bond_list(spec)
    gval = spec.g
    jval = spec.J

    diag = u_tab[basis.photons].sum(axis=1)
    if spec.delta != 0.0 and spec.n_atoms:
        pops = np.array([int(m).bit_count() for m in basis.atom_masks], dtype=np.float64)
        diag = diag - spec.delta * pops

    rows: list[int] = []
    cols: list[int] = []
    vals: list[float] = []
    blob = basis.photons.tobytes()
    masks = basis.atom_masks.tolist()
    lookup = basis.lookup
    atom_sites = spec.atom_sites

    for i in range(dim):
        row_b = blob[i * L : (i + 1) * L]
        ph = list(row_b)
        mask = masks[i]

        if jval != 0.0:
            for x, y in bonds:
                nx, ny = ph[x], ph[y]
                if nx > 0 and ny < cap:
                    buf = bytearray(row_b)
                    buf[x] = nx - 1
                    buf[y] = ny + 1
                    j = lookup(mask, bytes(buf))
                    if j > i:
                        rows.append(i)
                        cols.append(j)
                        vals.append(-jval * np.sqrt(nx * (ny + 1)))
                if ny > 0 and nx < cap:
                    buf = bytearray(row_b)
                    buf[y] = ny - 1
                    buf[x] = nx + 1
                    j = lookup(mask, bytes(buf))
                    if j > i:
                        rows.append(i)
                        cols.append(j)
                        vals.append(-jval * np.sqrt(ny * (nx + 1)))

        if gval != 0.0:
            for a, site in enumerate(atom_sites):
                if (mask >> a) & 1:
                    n = ph[site]
                    if n + 1 <= cap:
                        buf = bytearray(row_b)
                        buf[site] = n + 1
                        j = lookup(mask & ~(1 << a), bytes(buf))
                        if j > i:
                            rows.append(i)
                            cols.append(j)
                            vals.append(gval * np.sqrt(n + 1))
                else:
                    n = ph[site]
                    if n > 0:
                        buf = bytearray(row_b)
                        buf[site] = n - 1
                        j = lookup(mask | (1 << a), bytes(buf))
                        if j > i:
                            rows.append(i)
                            cols.append(j)
                            vals.append(gval * np.sqrt(n))

    nz = np.abs(diag) > DROP_TOL
    d_idx = np.nonzero(nz)[0]
    all_rows = np.concatenate([d_idx, np.asarray(rows, dtype=np.int64)])
    all_cols = np.concatenate([d_idx, np.asarray(cols, dtype=np.int64)])
    all_vals = np.concatenate([diag[d_idx], np.asarray(vals, dtype=np.float64)])
    return SparseOperator.from_coo(dim, all_rows, all_cols, all_vals)


def stagger_transform(spec: ModelSpec) -> ModelSpec:
    """Gauge ``a_x -> (-1)^x a_x``: flips the hopping sign, spectrum-preserving
    on bipartite lattices (open chains, periodic even rings)."""
    if spec.boundary == "periodic" and spec.L % 2 == 1:
        raise NonBipartiteError(f"periodic ring of odd length {spec.L} is not bipartite")
    return replace(spec, J=-spec.J)


def apply_number_operators(basis: SectorBasis, vec: np.ndarray):
    """Per-site photon densities and per-atom excitation probabilities of a sector vector."""
    vec = np.asarray(vec, dtype=np.float64)
    if vec.shape != (basis.dim,):
        raise ValueError(f"vector length {vec.shape} does not match dimension {basis.dim}")
    w = vec * vec
    densities = basis.photons.T.astype(np.float64) @ w
    n_at = basis.spec.n_atoms
    if n_at:
        bits = (basis.atom_masks[:, None] >> np.arange(n_at)[None, :]) & 1
        atom_probs = bits.astype(np.float64).T @ w
    else:
        atom_probs = np.zeros(0)
    return densities, atom_probs
