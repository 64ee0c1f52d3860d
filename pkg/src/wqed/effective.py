"""One-body impurity chain for the photon detachment transition.

Near the n-photon detachment point the moving degree of freedom is a single
photon hopping on a chain whose site 0 (the impurity) carries an on-site
offset ``epsilon_n`` and rescaled bonds ``-alpha_n J`` to both neighbors. The
basis state with the walker at x represents an (n-1)-photon polariton on the
impurity plus a free photon at x; the walker-on-impurity state is the full
n-photon polariton.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .analytics import alpha_epsilon, jc_kerr_spectrum
from .basis import ModelSpec

DEFAULT_CHAIN_LENGTH = 100


@dataclass(frozen=True)
class EffectiveChain:
    """Impurity-chain parameters plus the photon content of the two walker states."""

    length: int
    n: int
    epsilon: float
    alpha: float
    J: float
    boundary: str
    occ_impurity_state: float  # <psi_0| a_0^dag a_0 |psi_0>
    occ_detached_state: float  # <psi_{x!=0}| a_0^dag a_0 |psi_{x!=0}>


def build_effective_chain(
    n: int,
    spec: ModelSpec,
    length: int = DEFAULT_CHAIN_LENGTH,
    boundary: str = "periodic",
) -> EffectiveChain:
    """Chain for the detachment of the n-th photon from a single-impurity spec."""
    if spec.n_atoms != 1:
        raise ValueError("effective chain describes a single impurity")
    if n < 1:
        raise ValueError("need n >= 1")
    if boundary not in ("periodic", "open"):
        raise ValueError(f"unknown boundary {boundary!r}")
    alpha, eps = alpha_epsilon(n, spec.g, spec.nonlinearity, spec.delta)
    th_n = jc_kerr_spectrum(n, spec.g, spec.nonlinearity, spec.delta)[1].theta
    th_m = jc_kerr_spectrum(n - 1, spec.g, spec.nonlinearity, spec.delta)[1].theta
    occ0 = n * math.sin(th_n / 2) ** 2 + (n - 1) * math.cos(th_n / 2) ** 2
    occx = (n - 1) * math.sin(th_m / 2) ** 2 + max(n - 2, 0) * math.cos(th_m / 2) ** 2
    return EffectiveChain(
        length=length,
        n=n,
        epsilon=eps,
        alpha=alpha,
        J=spec.J,
        boundary=boundary,
        occ_impurity_state=occ0,
        occ_detached_state=occx,
    )


def chain_matrix(chain: EffectiveChain) -> np.ndarray:
    """Dense one-body matrix: offset at site 0, dressed bonds on (0, +-1)."""
    L = chain.length
    h = np.zeros((L, L))
    h[0, 0] = chain.epsilon
    for x in range(L - 1):
        t = -chain.alpha * chain.J if x == 0 else -chain.J
        h[x, x + 1] = h[x + 1, x] = t
    if chain.boundary == "periodic" and L >= 2:
        t = -chain.alpha * chain.J  # wrap bond touches the impurity
        h[L - 1, 0] += t
        h[0, L - 1] += t
    return h


def chain_positions(chain: EffectiveChain) -> np.ndarray:
    """Signed distance from the impurity; minimal image on a ring."""
    x = np.arange(chain.length)
    if chain.boundary == "periodic":
        return np.where(x <= chain.length // 2, x, x - chain.length)
    return x


def ground_amplitudes(chain: EffectiveChain) -> tuple[float, np.ndarray]:
    vals, vecs = np.linalg.eigh(chain_matrix(chain))
    c = vecs[:, 0]
    i = int(np.argmax(np.abs(c)))
    if c[i] < 0:
        c = -c
    return float(vals[0]), c


def effective_ground_observables(chain: EffectiveChain) -> tuple[float, float]:
    """Impurity photon number and photonic wavepacket width of the chain ground state.

    The width is the root of the second moment of photon positions measured
    from the impurity; the n-1 photons kept on site 0 contribute nothing, the
    detached walker contributes its squared distance.
    """
    _, c = ground_amplitudes(chain)
    w = c * c
    occupation = w[0] * chain.occ_impurity_state + (1.0 - w[0]) * chain.occ_detached_state
    pos = chain_positions(chain).astype(float)
    width = math.sqrt(float(np.sum(w * pos**2)))
    return occupation, width
