"""SoV basis vectors and separate states on the 2^N spin space.

The basis kets are generated from the all-up reference state by B-operators
evaluated at the inhomogeneities, the bras by C-operators acting on the
left; D is diagonal on both.  Separate states are linear combinations whose
coefficients factorize over sites as [x P(xi_n)/P(xi_n - eta)]^{1-h_n} times
a ratio of hyperbolic Vandermonde factors.

Bras are stored as plain coefficient vectors paired with kets through the
bilinear (transpose, no conjugation) pairing.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from itertools import product

import numpy as np

from .errors import SingularEvaluationError
from .lattice import monodromy_entries, reference_state
from .linalg import vandermonde
from .model import HalfPeriodTrigPoly, ModelParams, dist_mod_2ipi


def all_h(n: int):
    """All SoV labels h in {0,1}^n, in binary order."""
    return [tuple(bits) for bits in product((0, 1), repeat=n)]


def h_to_index(h: tuple[int, ...]) -> int:
    idx = 0
    for bit in h:
        idx = (idx << 1) | bit
    return idx


def xi_shifted(params: ModelParams, h) -> list[complex]:
    """The shifted nodes xi_n - h_n * eta."""
    return [params.xi[m] - h[m] * params.eta for m in range(params.n)]


class SovBasis:
    """All 2^N SoV basis kets and bras for fixed model parameters."""

    def __init__(self, params: ModelParams):
        self.params = params
        n = params.n
        self._b_at_xi = [monodromy_entries(params, x).b for x in params.xi]
        self._c_at_xi = [monodromy_entries(params, x).c for x in params.xi]
        self._a_vals = [params.a_fn(x) for x in params.xi]
        self._d_shift_vals = [params.d_fn(x - params.eta) for x in params.xi]
        self.v_xi = vandermonde(params.xi)
        self._kets: dict[int, np.ndarray] = {0: reference_state(n)}
        self._bras: dict[int, np.ndarray] = {0: reference_state(n) / self.v_xi}

    def ket(self, h) -> np.ndarray:
        idx = h_to_index(tuple(h))
        if idx not in self._kets:
            a = next(m for m, bit in enumerate(h) if bit == 1)
            parent = list(h)
            parent[a] = 0
            prev = self.ket(tuple(parent))
            self._kets[idx] = -(self._b_at_xi[a] @ prev) / self._a_vals[a]
        return self._kets[idx]

    def bra(self, h) -> np.ndarray:
        idx = h_to_index(tuple(h))
        if idx not in self._bras:
            a = next(m for m, bit in enumerate(h) if bit == 1)
            parent = list(h)
            parent[a] = 0
            prev = self.bra(tuple(parent))
            self._bras[idx] = (self._c_at_xi[a].T @ prev) / self._d_shift_vals[a]
        return self._bras[idx]

    def measure(self, h) -> complex:
        """<h|h> = 1 / V(xi^(h))."""
        return 1.0 / vandermonde(xi_shifted(self.params, h))


def sov_vector(params: ModelParams, h, side: str) -> np.ndarray:
    """Single SoV basis vector; ``side`` is "ket" or "bra"."""
    basis = _cached_basis(params)
    if side == "ket":
        return basis.ket(tuple(h))
    if side == "bra":
        return basis.bra(tuple(h))
    raise ValueError(f"side must be 'ket' or 'bra', got {side!r}")


@lru_cache(maxsize=8)
def _cached_basis(params: ModelParams) -> SovBasis:
    return SovBasis(params)


@dataclass
class SovState:
    """A separate state: coefficients over the SoV basis plus its embedding."""

    params: ModelParams
    poly: HalfPeriodTrigPoly
    kappa: complex
    eps: int
    side: str
    normalized: bool
    coefficients: np.ndarray
    embedded: np.ndarray

    def norm2(self) -> float:
        return float(np.linalg.norm(self.embedded))


def separate_state(params: ModelParams, poly: HalfPeriodTrigPoly, kappa: complex,
                   eps: int, side: str, normalized: bool = True,
                   basis: SovBasis | None = None) -> SovState:
    """Build a separate state labelled by ``poly`` with twist/sign (kappa, eps).

    Normalized states carry site factors [eps kappa^{+-1} P(xi_n)/P(xi_n-eta)]^{1-h_n}
    and require P(xi_n - eta) away from zero; unnormalized states use the raw
    P(xi_n^{(h_n)}) values instead.
    """
    if side not in ("bra", "ket"):
        raise ValueError(f"side must be 'ket' or 'bra', got {side!r}")
    n = params.n
    basis = basis if basis is not None else _cached_basis(params)
    v_xi = basis.v_xi
    if normalized:
        for m in range(n):
            target = params.xi[m] - params.eta
            if poly.roots and min(dist_mod_2ipi(q, target) for q in poly.roots) < params.delta_min:
                raise SingularEvaluationError(
                    f"P has a root within delta_min of xi_{m+1} - eta; "
                    "build the unnormalized state instead"
                )
        site_ratio = [poly(params.xi[m]) / poly(params.xi[m] - params.eta) for m in range(n)]

    dim = 2**n
    coeffs = np.zeros(dim, dtype=np.complex128)
    embedded = np.zeros(dim, dtype=np.complex128)
    for h in all_h(n):
        if normalized:
            factor = 1.0 + 0.0j
            for m in range(n):
                if h[m] == 0:
                    base = eps * kappa if side == "ket" else eps / kappa
                    factor *= base * site_ratio[m]
            if side == "ket":
                shift = [params.xi[m] - (1 - h[m]) * params.eta for m in range(n)]
                factor *= vandermonde(shift) / v_xi
            else:
                factor *= vandermonde(xi_shifted(params, h))
        else:
            factor = 1.0 + 0.0j
            for m in range(n):
                factor *= poly(params.xi[m] - h[m] * params.eta)
                if h[m] == 1:
                    factor *= (eps * kappa) if side == "bra" else 1.0 / (eps * kappa)
            if side == "ket":
                shift = [params.xi[m] - (1 - h[m]) * params.eta for m in range(n)]
                factor *= vandermonde(shift)
            else:
                factor *= vandermonde(xi_shifted(params, h))
        idx = h_to_index(h)
        coeffs[idx] = factor
        embedded += factor * (basis.ket(h) if side == "ket" else basis.bra(h))
    return SovState(params=params, poly=poly, kappa=kappa, eps=eps, side=side,
                    normalized=normalized, coefficients=coeffs, embedded=embedded)


def separate_ket_qdet_form(params: ModelParams, poly: HalfPeriodTrigPoly,
                           kappa: complex, eps: int,
                           basis: SovBasis | None = None) -> SovState:
    """Unnormalized ket in the equivalent form that trades the Vandermonde flip
    for explicit a/d ratios: coefficients
    prod_n [(-eps kappa)^{-h_n} (a(xi_n)/d(xi_n-eta))^{h_n} P(xi_n^{(h_n)})] V(xi^{(h)}).
    """
    n = params.n
    basis = basis if basis is not None else _cached_basis(params)
    dim = 2**n
    coeffs = np.zeros(dim, dtype=np.complex128)
    embedded = np.zeros(dim, dtype=np.complex128)
    for h in all_h(n):
        factor = 1.0 + 0.0j
        for m in range(n):
            factor *= poly(params.xi[m] - h[m] * params.eta)
            if h[m] == 1:
                factor *= params.a_fn(params.xi[m]) / params.d_fn(params.xi[m] - params.eta)
                factor /= -eps * kappa
        factor *= vandermonde(xi_shifted(params, h))
        idx = h_to_index(h)
        coeffs[idx] = factor
        embedded += factor * basis.ket(h)
    return SovState(params=params, poly=poly, kappa=kappa, eps=eps, side="ket",
                    normalized=False, coefficients=coeffs, embedded=embedded)


def overlap(bra: SovState, ket: SovState) -> complex:
    """Bilinear pairing of a bra state with a ket state."""
    if bra.side != "bra" or ket.side != "ket":
        raise ValueError("overlap expects (bra, ket)")
    return complex(bra.embedded @ ket.embedded)


def matrix_element(bra: SovState, op: np.ndarray, ket: SovState) -> complex:
    """Bilinear matrix element <bra| op |ket> on the spin space."""
    return complex(bra.embedded @ (op @ ket.embedded))
