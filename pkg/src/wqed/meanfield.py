"""Unit-cell mean-field treatment of the periodic impurity array.

One cell holds d cavities with the atom on cavity 1; the bonds leaving the
cell are decoupled through two real order parameters, phi_1 = <a_1> and
phi_2 = <a_d>, which add source terms -J (phi_1 a_d^dag + phi_2 a_1^dag +
h.c.) + 2 J phi_1 phi_2 and a chemical potential -mu (atom + photons) to the
cell Hamiltonian. Expanding the cell ground energy to second order,

    E_g = E_0 + u_1 phi_1^2 + u_2 phi_2^2 + 2 v phi_1 phi_2,

the Mott-superfluid boundary sits where the quadratic form degenerates,
u_1 u_2 - v^2 = 0; the coefficients follow from second-order perturbation
theory in the source terms and still depend on J through the intra-cell
hopping when d > 1, so the boundary is located by bracketed root finding.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .basis import NonlinearitySpec

DEGENERACY_TOL = 1e-9
BOUNDARY_WEIGHT_TOL = 1e-8
MAX_CELL_DIM = 40_000
_ROOT_REL = 1e-8


class DegenerateGroundError(RuntimeError):
    """Cell ground state degenerate at phi = 0 (a lobe boundary in mu)."""

    def __init__(self, sectors: tuple[int, int], gap: float):
        super().__init__(
            f"degenerate cell ground state between excitation sectors {sectors} (gap {gap:.3e})"
        )
        self.sectors = sectors


class TruncationError(RuntimeError):
    """Ground state leaks onto the truncation boundary of the cell."""


def _default_kerr() -> NonlinearitySpec:
    return NonlinearitySpec.kerr(0.0)


@dataclass(frozen=True)
class MeanFieldCell:
    """One unit cell: d cavities, the atom coupled to cavity 1 (index 0)."""

    d: int
    g: float
    mu: float
    J: float = 1.0
    delta: float = 0.0
    u_spec: NonlinearitySpec = field(default_factory=_default_kerr)
    n_trunc: int = 5

    def __post_init__(self):
        if self.d < 1:
            raise ValueError("need at least one cavity per cell")
        if self.n_trunc < 1:
            raise ValueError("n_trunc must be at least 1")
        if self.dim > MAX_CELL_DIM:
            raise ValueError(f"cell dimension {self.dim} beyond dense limit {MAX_CELL_DIM}")

    @property
    def dim(self) -> int:
        return 2 * (self.n_trunc + 1) ** self.d


@dataclass
class MeanFieldResult:
    u1: float
    u2: float
    v: float
    e0: float
    j_c: float | None = None
    mu_scan: np.ndarray | None = None  # columns: mu, j_c, mean_n
    lobe_ids: np.ndarray | None = None
    lobe_tips: dict[int, float] = field(default_factory=dict)


def _cell_operators(cell: MeanFieldCell):
    """Dense annihilation operators per cavity, atom lowering operator, identity."""
    nph = cell.n_trunc + 1
    a_single = np.diag(np.sqrt(np.arange(1, nph)), k=1)
    eye_ph = np.eye(nph)
    sm_single = np.array([[0.0, 1.0], [0.0, 0.0]])  # |g><e|

    def embed(op_site, where):
        # ordering: atom x cavity_1 x ... x cavity_d
        out = np.eye(1)
        out = np.kron(out, op_site if where == -1 else np.eye(2))
        for j in range(cell.d):
            out = np.kron(out, op_site if where == j else eye_ph)
        return out

    a_ops = [embed(a_single, j) for j in range(cell.d)]
    sm = embed(sm_single, -1)
    return a_ops, sm


def _occupation_vectors(cell: MeanFieldCell):
    """Diagonals of the atom number and each cavity number operator."""
    nph = cell.n_trunc + 1
    dim = cell.dim
    idx = np.arange(dim)
    rest = idx
    digits = []
    for _ in range(cell.d):
        digits.append(rest % nph)
        rest = rest // nph
    digits.reverse()  # cavity 1 first
    atom = rest % 2
    # note: kron ordering makes the atom the slowest index
    return atom.astype(np.float64), [d.astype(np.float64) for d in digits]


def build_hmf(cell: MeanFieldCell, phi1: float, phi2: float) -> np.ndarray:
    """Dense cell Hamiltonian at order parameters (phi_1, phi_2), rotating frame."""
    a_ops, sm = _cell_operators(cell)
    sp = sm.T
    atom_n, cav_ns = _occupation_vectors(cell)
    dim = cell.dim
    h = np.zeros((dim, dim))

    a1 = a_ops[0]
    ad = a_ops[-1]
    h += cell.g * (sm @ a1.T + sp @ a1)
    diag = np.zeros(dim)
    u_tab = np.asarray(cell.u_spec.as_table(cell.n_trunc))
    for nv in cav_ns:
        diag += u_tab[nv.astype(int)]
    diag += -cell.delta * atom_n
    diag += -cell.mu * (atom_n + sum(cav_ns))
    h += np.diag(diag)
    for j in range(cell.d - 1):
        h += -cell.J * (a_ops[j + 1].T @ a_ops[j] + a_ops[j].T @ a_ops[j + 1])
    if phi1 != 0.0 or phi2 != 0.0:
        h += -cell.J * (phi1 * (ad + ad.T) + phi2 * (a1 + a1.T))
        h += 2.0 * cell.J * phi1 * phi2 * np.eye(dim)
    return 0.5 * (h + h.T)


def ground_energy_hmf(cell: MeanFieldCell, phi1: float, phi2: float) -> float:
    """Exact cell ground energy at (phi_1, phi_2), with a truncation-leak check."""
    h = build_hmf(cell, phi1, phi2)
    vals, vecs = np.linalg.eigh(h)
    v0 = vecs[:, 0]
    _, cav_ns = _occupation_vectors(cell)
    edge = np.zeros(cell.dim, dtype=bool)
    for nv in cav_ns:
        edge |= nv == cell.n_trunc
    leak = float(np.sum(v0[edge] ** 2))
    if leak > BOUNDARY_WEIGHT_TOL:
        raise TruncationError(f"boundary occupation weight {leak:.2e} at n_trunc={cell.n_trunc}")
    return float(vals[0])


def landau_coefficients(cell: MeanFieldCell) -> tuple[float, float, float, float]:
    """(u_1, u_2, v, E_0) from second-order perturbation theory around phi = 0.

    The phi = 0 cell conserves its total excitation number, so the spectrum is
    assembled sector by sector and the perturbation sums only visit the two
    neighboring sectors reached by a +/- one-photon source term.
    """
    h0 = build_hmf(cell, 0.0, 0.0)
    atom_n, cav_ns = _occupation_vectors(cell)
    ntot = (atom_n + sum(cav_ns)).astype(int)

    sector_eig: dict[int, tuple[np.ndarray, np.ndarray, np.ndarray]] = {}
    lows: list[tuple[float, int]] = []
    for n in range(int(ntot.max()) + 1):
        idx = np.nonzero(ntot == n)[0]
        if idx.size == 0:
            continue
        vals, vecs = np.linalg.eigh(h0[np.ix_(idx, idx)])
        sector_eig[n] = (idx, vals, vecs)
        lows.append((float(vals[0]), n))
        if vals.size > 1:
            lows.append((float(vals[1]), n))
    lows.sort()
    e0, n0 = lows[0]
    if len(lows) > 1 and lows[1][0] - e0 < DEGENERACY_TOL * max(1.0, abs(e0)):
        raise DegenerateGroundError((n0, lows[1][1]), lows[1][0] - e0)

    idx0, vals0, vecs0 = sector_eig[n0]
    psi0 = np.zeros(cell.dim)
    psi0[idx0] = vecs0[:, 0]

    # truncation-leak check on the unperturbed ground state
    edge = np.zeros(cell.dim, dtype=bool)
    for nv in cav_ns:
        edge |= nv == cell.n_trunc
    leak = float(np.sum(psi0[edge] ** 2))
    if leak > BOUNDARY_WEIGHT_TOL:
        raise TruncationError(f"boundary occupation weight {leak:.2e} at n_trunc={cell.n_trunc}")

    a_ops, _ = _cell_operators(cell)
    a1 = a_ops[0]
    ad = a_ops[-1]
    w1 = (a1 + a1.T) @ psi0
    wd = (ad + ad.T) @ psi0

    s1 = sd = s_cross = 0.0
    for n in (n0 - 1, n0 + 1):
        if n not in sector_eig:
            continue
        idx, vals, vecs = sector_eig[n]
        c1 = vecs.T @ w1[idx]
        cd = vecs.T @ wd[idx]
        denom = e0 - vals
        s1 += float(np.sum(c1 * c1 / denom))
        sd += float(np.sum(cd * cd / denom))
        s_cross += float(np.sum(c1 * cd / denom))

    j2 = cell.J * cell.J
    u1 = j2 * sd
    u2 = j2 * s1
    v = cell.J + j2 * s_cross
    return u1, u2, v, e0


def hessian_determinant(cell: MeanFieldCell) -> float:
    u1, u2, v, _ = landau_coefficients(cell)
    return u1 * u2 - v * v


def critical_hopping_mf(
    cell: MeanFieldCell,
    j_max: float | None = None,
    scan_points: int = 160,
    return_bracket: bool = False,
):
    """Smallest J > 0 where u_1 u_2 - v^2 crosses zero, by geometric scan plus bisection.

    Returns None when the determinant keeps its sign on the whole interval
    (no transition in range). The cell's own J value is ignored.
    """
    if j_max is None:
        scale = max(cell.g, abs(cell.delta), abs(cell.u_spec.energy(2)), 1.0)
        j_max = 10.0 * scale
    j_lo = 1e-6 * j_max

    def det(j: float) -> float:
        return hessian_determinant(replace(cell, J=j))

    grid = np.geomspace(j_lo, j_max, scan_points)
    prev_j, prev_d = grid[0], det(grid[0])
    bracket = None
    for j in grid[1:]:
        try:
            d = det(j)
        except TruncationError:
            # occupations hit the cap: the cell description ends here
            break
        if (d >= 0.0) != (prev_d >= 0.0):
            bracket = (prev_j, j)
            break
        prev_j, prev_d = j, d
    if bracket is None:
        return (None, None) if return_bracket else None

    lo, hi = bracket
    f_lo = det(lo)
    while hi - lo > _ROOT_REL * hi:
        mid = 0.5 * (lo + hi)
        if (det(mid) >= 0.0) == (f_lo >= 0.0):
            lo = mid
        else:
            hi = mid
    j_c = 0.5 * (lo + hi)
    return (j_c, bracket) if return_bracket else j_c


def zero_hopping_filling(cell: MeanFieldCell) -> int:
    """Cell excitation number of the J -> 0 ground state (the mu staircase)."""
    frozen = replace(cell, J=0.0)
    h0 = build_hmf(frozen, 0.0, 0.0)
    atom_n, cav_ns = _occupation_vectors(cell)
    ntot = (atom_n + sum(cav_ns)).astype(int)
    lows: list[tuple[float, int]] = []
    for n in range(int(ntot.max()) + 1):
        idx = np.nonzero(ntot == n)[0]
        if idx.size == 0:
            continue
        vals = np.linalg.eigvalsh(h0[np.ix_(idx, idx)])
        lows.append((float(vals[0]), n))
        if vals.size > 1:
            lows.append((float(vals[1]), n))
    lows.sort()
    if len(lows) > 1 and lows[1][0] - lows[0][0] < DEGENERACY_TOL * max(1.0, abs(lows[0][0])):
        raise DegenerateGroundError((lows[0][1], lows[1][1]), lows[1][0] - lows[0][0])
    return lows[0][1]


def self_consistent_order_parameters(
    cell: MeanFieldCell,
    phi_start: float = 0.1,
    max_iter: int = 400,
    tol: float = 1e-9,
) -> tuple[float, float, float]:
    """Fixed-point iteration phi_i <- <a_i> on the cell ground state.

    Cross-check for the Landau route: below the critical hopping the iteration
    collapses onto (0, 0), above it converges to a finite pair of order
    parameters. Returns (phi_1, phi_2, ground energy).
    """
    a_ops, _ = _cell_operators(cell)
    a1, ad = a_ops[0], a_ops[-1]
    phi1 = phi2 = float(phi_start)
    e0 = np.nan
    for _ in range(max_iter):
        h = build_hmf(cell, phi1, phi2)
        vals, vecs = np.linalg.eigh(h)
        v0 = vecs[:, 0]
        e0 = float(vals[0])
        new1 = float(v0 @ (a1 @ v0))
        new2 = float(v0 @ (ad @ v0))
        # damped update keeps the iteration stable near the transition
        new1 = 0.5 * (new1 + phi1)
        new2 = 0.5 * (new2 + phi2)
        if abs(new1 - phi1) <= tol and abs(new2 - phi2) <= tol:
            return new1, new2, e0
        phi1, phi2 = new1, new2
    return phi1, phi2, e0


def with_adaptive_truncation(cell: MeanFieldCell, fn, max_bumps: int = 4):
    """Run ``fn(cell)``, growing the photon truncation while the ground state
    leaks onto the boundary."""
    current = cell
    for _ in range(max_bumps + 1):
        try:
            return fn(current), current
        except TruncationError:
            current = replace(current, n_trunc=current.n_trunc + 2)
    raise TruncationError(f"no convergence up to n_trunc={current.n_trunc}")


def lobe_scan(
    cell_template: MeanFieldCell,
    mu_grid,
    target_n: int | None = None,
    workers: int = 1,
) -> MeanFieldResult:
    """Critical hopping and zero-hopping filling across a chemical-potential grid.

    Degenerate grid points (lobe boundaries) are marked with lobe id -1 and a
    NaN critical hopping; lobe tips collect the largest J_c per filling.
    """
    mu_grid = np.asarray(list(mu_grid), dtype=np.float64)
    if mu_grid.size == 0:
        raise ValueError("empty chemical-potential grid")

    def point(mu: float):
        cell = replace(cell_template, mu=float(mu))
        try:
            filling = zero_hopping_filling(cell)
        except DegenerateGroundError:
            return np.nan, -1
        try:
            j_c = critical_hopping_mf(cell)
        except (DegenerateGroundError, TruncationError):
            return np.nan, filling
        return (np.nan if j_c is None else j_c), filling

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(point, mu_grid))
    else:
        rows = [point(mu) for mu in mu_grid]

    j_cs = np.array([r[0] for r in rows])
    lobes = np.array([r[1] for r in rows], dtype=int)
    tips: dict[int, float] = {}
    for j_c, lobe in zip(j_cs, lobes):
        if lobe >= 0 and np.isfinite(j_c):
            tips[lobe] = max(tips.get(lobe, 0.0), float(j_c))

    if target_n is not None and target_n not in set(int(l) for l in lobes if l >= 0):
        raise ValueError(f"no grid point falls in the lobe with {target_n} excitations")

    # representative Landau data at the tip of the target (or best) lobe
    u1 = u2 = v = e0 = np.nan
    pick = target_n if target_n is not None else (max(tips) if tips else None)
    if pick is not None and pick in tips:
        mask = (lobes == pick) & np.isfinite(j_cs)
        i_tip = int(np.nonzero(mask)[0][np.argmax(j_cs[mask])])
        cell_tip = replace(cell_template, mu=float(mu_grid[i_tip]), J=float(j_cs[i_tip]))
        try:
            u1, u2, v, e0 = landau_coefficients(cell_tip)
        except (DegenerateGroundError, TruncationError):
            pass

    scan = np.column_stack([mu_grid, j_cs, lobes.astype(float)])
    return MeanFieldResult(
        u1=u1, u2=u2, v=v, e0=e0,
        j_c=tips.get(pick) if pick is not None else None,
        mu_scan=scan, lobe_ids=lobes, lobe_tips=tips,
    )
