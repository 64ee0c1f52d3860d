"""Closed-form results for the dressed single-site problem and its thresholds.

Everything here lives in the rotating frame (cavity frequency removed), so the
n-excitation dressed energies read

    E_{n,+-} = -delta/2 + U (n-1)^2 / 2 +- sqrt([delta + U(n-1)]^2 + 4 n g^2) / 2

for a Kerr nonlinearity, with the mixing angle theta_n = atan2(2 g sqrt(n),
delta + U(n-1)). A general occupation table enters through the exact two-state
reduction, which collapses to the quoted on-resonance form at delta = 0. The
vacuum is assigned theta_0 = pi so that the n = 0 "minus" state is the bare
atomic ground state and the polariton overlap formulas hold down to n = 1.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

from .basis import NonlinearitySpec

_BISECT_REL = 1e-12
_SCAN_POINTS = 4096


@dataclass(frozen=True)
class DressedState:
    n: int
    branch: str  # "plus" | "minus"
    energy: float
    theta: float


def _two_state_reduction(n: int, g: float, u_spec: NonlinearitySpec, delta: float):
    """Mean energy, gap radius and mixing angle of the {|g,n>, |e,n-1>} block."""
    e_photon = u_spec.energy(n)
    e_atom = u_spec.energy(n - 1) - delta
    mean = 0.5 * (e_photon + e_atom)
    split = e_photon - e_atom
    radius = math.hypot(0.5 * split, g * math.sqrt(n))
    theta = math.atan2(2.0 * g * math.sqrt(n), split)
    return mean, radius, theta


def jc_kerr_spectrum(
    n: int, g: float, u_spec: NonlinearitySpec, delta: float = 0.0
) -> tuple[DressedState | None, DressedState]:
    """Dressed eigenpair of the n-excitation block; ``(None, vacuum)`` for n = 0."""
    if n < 0:
        raise ValueError("excitation number must be non-negative")
    if n == 0:
        return None, DressedState(0, "minus", 0.0, math.pi)
    mean, radius, theta = _two_state_reduction(n, g, u_spec, delta)
    plus = DressedState(n, "plus", mean + radius, theta)
    minus = DressedState(n, "minus", mean - radius, theta)
    return plus, minus


def lower_energy(n: int, g: float, u_spec: NonlinearitySpec, delta: float = 0.0) -> float:
    return jc_kerr_spectrum(n, g, u_spec, delta)[1].energy


def _binding_gap(n: int, g: float, u_spec: NonlinearitySpec, delta: float) -> float:
    """E_{n,-} minus E_{n-1,-}; the n-photon state is bound where this is <= 0."""
    return lower_energy(n, g, u_spec, delta) - lower_energy(n - 1, g, u_spec, delta)


def _bisect(f, lo: float, hi: float) -> float:
    flo = f(lo)
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if hi - lo <= _BISECT_REL * max(1.0, abs(mid)):
            break
        if (f(mid) > 0.0) == (flo > 0.0):
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def strong_binding_threshold(n: int, delta: float, u: float) -> float:
    """Smallest coupling above which the n-photon state stays bound (J -> 0 limit).

    Found as the upper edge of the region where the detachment gap is positive;
    equality counts as bound, and 0 is returned when the state is bound for
    every coupling (the delta/U > 1 regime at n = 2).
    """
    if n < 2:
        raise ValueError("thresholds are defined for n >= 2")
    if u <= 0:
        raise ValueError("repulsion u must be positive")
    u_spec = NonlinearitySpec.kerr(u)
    f = lambda g: _binding_gap(n, g, u_spec, delta)

    scale = max(u * (2 * n * n), abs(delta) * n, 1e-12)
    g_max = 10.0 * scale
    while f(g_max) > 0.0:
        g_max *= 2.0
        if g_max > 1e12 * scale:
            raise RuntimeError("no detachment boundary found")
    grid = [g_max * i / _SCAN_POINTS for i in range(_SCAN_POINTS + 1)]
    last_pos = None
    for i in range(_SCAN_POINTS, 0, -1):
        if f(grid[i]) > 0.0:
            last_pos = i
            break
    if last_pos is None:
        return 0.0
    return _bisect(f, grid[last_pos], grid[last_pos + 1])


def weak_binding_threshold(n: int, u: float, j: float) -> float:
    """Binding threshold sqrt(2 (n-1) U J) for spatially extended bound states."""
    if n < 2:
        raise ValueError("thresholds are defined for n >= 2")
    if u < 0 or j <= 0:
        raise ValueError("need u >= 0 and j > 0")
    return math.sqrt(2.0 * (n - 1) * u * j)


def single_photon_bound(g: float, j: float) -> tuple[float, float, float, float]:
    """Resonant single-excitation bound-state energies and localization lengths.

    E_-+ = -+ sqrt(2 J^2 + sqrt(4 J^4 + g^4)); lambda follows from the lattice
    dispersion through |E| = 2 J cosh(1/lambda), which is exact for an
    exponential envelope and reproduces the 4 J^2 / g^2 divergence at small g.
    Returns (E_minus, E_plus, lambda_minus, lambda_plus).
    """
    if j <= 0:
        raise ValueError("hopping must be positive")
    e = math.sqrt(2.0 * j * j + math.sqrt(4.0 * j**4 + g**4))
    if g == 0.0:
        return -2.0 * j, 2.0 * j, math.inf, math.inf
    lam = 1.0 / math.acosh(e / (2.0 * j))
    return -e, e, lam, lam


def alpha_epsilon(
    n: int, g: float, u_spec: NonlinearitySpec, delta: float = 0.0
) -> tuple[float, float]:
    """Impurity parameters of the one-body detachment model.

    epsilon_n is the cost of keeping the n-th photon on the impurity,
    alpha_n the photon-removal overlap <n-1,-| a |n,-> (with theta_0 = pi).
    Returns (alpha_n, epsilon_n).
    """
    if n < 1:
        raise ValueError("need n >= 1")
    _, lower_n = jc_kerr_spectrum(n, g, u_spec, delta)
    _, lower_m = jc_kerr_spectrum(n - 1, g, u_spec, delta)
    eps = lower_n.energy - lower_m.energy
    th_n, th_m = lower_n.theta, lower_m.theta
    alpha = math.sqrt(n) * math.sin(th_m / 2.0) * math.sin(th_n / 2.0)
    if n > 1:
        alpha += math.sqrt(n - 1) * math.cos(th_m / 2.0) * math.cos(th_n / 2.0)
    return alpha, eps


def lobe_critical_hopping(
    n: int, g: float, u_spec: NonlinearitySpec, delta: float = 0.0
) -> float:
    """Critical hopping epsilon_n / (2 alpha_n) for unbinding through the impurity
    barrier; 0 when the on-site offset vanishes or turns attractive."""
    alpha, eps = alpha_epsilon(n, g, u_spec, delta)
    if eps <= 0.0:
        return 0.0
    return eps / (2.0 * alpha)


def generalized_critical_coupling(
    n: int, u_table: Sequence[float], g_max: float | None = None
) -> float | None:
    """Positive root of E_{n,-}(g) = E_{n-1,-}(g) for a raw occupation table.

    The table holds absolute on-site energies U_0..U_m (m >= n) without the
    U_0 = U_1 = 0 gauge, evaluated on resonance. Returns None when no positive
    root exists on (0, g_max] (the state is then bound, or unbound, for every
    coupling in range).
    """
    if n < 2:
        raise ValueError("need n >= 2")
    tab = [float(v) for v in u_table]
    if len(tab) < n + 1:
        raise ValueError(f"table must define U_0..U_{n}")

    def e_minus(m: int, g: float) -> float:
        if m == 0:
            return 0.0
        mean = 0.5 * (tab[m] + tab[m - 1])
        return mean - 0.5 * math.hypot(tab[m] - tab[m - 1], 2.0 * g * math.sqrt(m))

    f = lambda g: e_minus(n, g) - e_minus(n - 1, g)

    if g_max is None:
        g_max = 10.0 * max(max(abs(v) for v in tab), 1e-9) * n
    grid = [g_max * i / _SCAN_POINTS for i in range(_SCAN_POINTS + 1)]
    vals = [f(g) for g in grid]
    for i in range(1, _SCAN_POINTS + 1):
        if vals[i - 1] > 0.0 >= vals[i]:
            return _bisect(f, grid[i - 1], grid[i])
        if vals[i - 1] < 0.0 <= vals[i]:
            return _bisect(f, grid[i - 1], grid[i])
    return None
