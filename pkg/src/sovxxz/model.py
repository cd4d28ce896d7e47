"""Model parameters and the trigonometric function layer.

Holds the chain data (length, anisotropy, inhomogeneities, twists), the
half-period polynomials Q(lam) = prod_j sinh((lam - q_j)/2) used to label
separate states, the model functions a(lam), d(lam), the scalar ratio
functions consumed by every determinant formula, and the structural
diagnostics (quantum Wronskian, root sum rule) of a Q-function.
"""

from __future__ import annotations

import cmath
from dataclasses import dataclass, field

import numpy as np

from .errors import ParameterError, SingularEvaluationError
from .linalg import sort_complex

PI = np.pi
IPI = 1j * np.pi

DELTA_MIN_DEFAULT = 0.05
ETA_COMMENSURATE_TOL = 0.01


def wrap_to_strip(z: complex) -> complex:
    """Shift z by a multiple of 2*pi*i so that Im(z) lies in (-pi, pi]."""
    z = complex(z)
    im = z.imag
    k = np.floor((PI - im) / (2 * PI))
    return complex(z.real, im + 2 * PI * k)


def dist_mod_ipi(z: complex, w: complex = 0.0) -> float:
    """Distance between z and w modulo i*pi shifts."""
    u = complex(z) - complex(w)
    k = round(u.imag / PI)
    return abs(u - 1j * PI * k)


def dist_mod_2ipi(z: complex, w: complex = 0.0) -> float:
    """Distance between z and w modulo 2*pi*i shifts."""
    u = complex(z) - complex(w)
    k = round(u.imag / (2 * PI))
    return abs(u - 2j * PI * k)


def coth(z: complex) -> complex:
    s = cmath.sinh(z)
    if s == 0:
        raise SingularEvaluationError(f"coth evaluated at a pole (argument {z})")
    return cmath.cosh(z) / s


def eta_is_generic(eta: complex, tol: float = ETA_COMMENSURATE_TOL, max_den: int = 8) -> bool:
    """True if eta stays at least ``tol`` away from every i*pi*k/m with m <= max_den."""
    x, y = complex(eta).real, complex(eta).imag
    for m in range(1, max_den + 1):
        k = round(y * m / PI)
        if np.hypot(x, y - k * PI / m) < tol:
            return False
    return True


@dataclass(frozen=True)
class ModelParams:
    """Chain data: length N, anisotropy eta, inhomogeneities xi, twists and signs.

    The twist kappa belongs to the bra/reference family and kappa2 to the ket
    family; eps/eps2 are the corresponding sign labels (+1 or -1).
    """

    n: int
    eta: complex
    xi: tuple[complex, ...]
    kappa: complex = 1.0 + 0.0j
    kappa2: complex = 1.0 + 0.0j
    eps: int = 1
    eps2: int = 1
    delta_min: float = DELTA_MIN_DEFAULT

    def __post_init__(self):
        if self.n < 1:
            raise ParameterError("chain length must be >= 1")
        if len(self.xi) != self.n:
            raise ParameterError(f"expected {self.n} inhomogeneities, got {len(self.xi)}")
        if self.kappa == 0 or self.kappa2 == 0:
            raise ParameterError("twists must be nonzero")
        if self.eps not in (-1, 1) or self.eps2 not in (-1, 1):
            raise ParameterError("sign labels must be +1 or -1")
        if not eta_is_generic(self.eta):
            raise ParameterError(f"eta={self.eta} is too close to a rational multiple of i*pi")
        sep = self.min_xi_separation()
        if sep < self.delta_min:
            raise ParameterError(
                f"inhomogeneity shift sets are only {sep:.4f} apart mod i*pi "
                f"(need >= {self.delta_min})"
            )

    def min_xi_separation(self) -> float:
        """Smallest distance mod i*pi between the shift sets {xi_i, xi_i - eta}."""
        best = np.inf
        pts = [(i, s) for i in range(self.n) for s in (self.xi[i], self.xi[i] - self.eta)]
        for a in range(len(pts)):
            for b in range(a + 1, len(pts)):
                if pts[a][0] == pts[b][0]:
                    continue
                best = min(best, dist_mod_ipi(pts[a][1], pts[b][1]))
        return float(best) if self.n > 1 else np.inf

    def a_fn(self, lam: complex) -> complex:
        out = 1.0 + 0.0j
        for x in self.xi:
            out *= cmath.sinh(lam - x + self.eta)
        return out

    def d_fn(self, lam: complex) -> complex:
        out = 1.0 + 0.0j
        for x in self.xi:
            out *= cmath.sinh(lam - x)
        return out

    def a_log_deriv(self, lam: complex) -> complex:
        return sum(coth(lam - x + self.eta) for x in self.xi)

    def d_log_deriv(self, lam: complex) -> complex:
        return sum(coth(lam - x) for x in self.xi)

    def d_prime(self, lam: complex) -> complex:
        """Derivative of d; safe at the zeros of d (product rule, no division)."""
        out = 0.0 + 0.0j
        for m, x in enumerate(self.xi):
            term = cmath.cosh(lam - x)
            for k, y in enumerate(self.xi):
                if k != m:
                    term *= cmath.sinh(lam - y)
            out += term
        return out

    def a_prime(self, lam: complex) -> complex:
        """Derivative of a; safe at the zeros of a (product rule, no division)."""
        out = 0.0 + 0.0j
        for m, x in enumerate(self.xi):
            term = cmath.cosh(lam - x + self.eta)
            for k, y in enumerate(self.xi):
                if k != m:
                    term *= cmath.sinh(lam - y + self.eta)
            out += term
        return out

    def forbidden_points(self) -> list[complex]:
        """Representatives (mod i*pi) of the excluded sets {xi_i, xi_i - eta}."""
        return [s for x in self.xi for s in (x, x - self.eta)]


def eval_model_fns(params: ModelParams, lam: complex) -> tuple[complex, complex]:
    """The model functions (a(lam), d(lam))."""
    return params.a_fn(lam), params.d_fn(lam)


@dataclass(frozen=True)
class HalfPeriodTrigPoly:
    """Product prod_j sinh((lam - q_j)/2), stored by its roots.

    The sinh half-argument doubles the period compared to a(lam), d(lam):
    eval(lam + 2*pi*i) = (-1)^N eval(lam).  Roots are normalized to the strip
    Im in (-pi, pi] and sorted; the overall sign lost by wrapping a root is
    irrelevant because every downstream formula uses ratios of values.
    """

    roots: tuple[complex, ...] = field(default_factory=tuple)

    @staticmethod
    def from_roots(roots) -> "HalfPeriodTrigPoly":
        wrapped = sort_complex([wrap_to_strip(r) for r in roots])
        return HalfPeriodTrigPoly(tuple(complex(r) for r in wrapped))

    @property
    def degree(self) -> int:
        return len(self.roots)

    def __call__(self, lam: complex) -> complex:
        out = 1.0 + 0.0j
        for q in self.roots:
            out *= cmath.sinh((lam - q) / 2)
        return out

    def log_deriv(self, lam: complex) -> complex:
        return sum(0.5 * coth((lam - q) / 2) for q in self.roots)

    def shifted_ipi(self) -> "HalfPeriodTrigPoly":
        """The companion polynomial with every root shifted by i*pi (re-wrapped)."""
        return HalfPeriodTrigPoly.from_roots([q + IPI for q in self.roots])

    def min_distance_to(self, points) -> float:
        """Smallest distance mod 2*pi*i from any root to any of ``points``."""
        if not self.roots:
            return np.inf
        return min(dist_mod_2ipi(q, p) for q in self.roots for p in points)


def eval_half_poly(poly: HalfPeriodTrigPoly, lam: complex) -> complex:
    return poly(lam)


@dataclass(frozen=True)
class RatioValues:
    f_pq: complex      # (PQ)(u) / (PQ)(u - eta)
    f_tilde: complex   # P(u-eta+i*pi) Q(u) / (P(u+i*pi) Q(u-eta))
    a_frak: complex    # d(u) Q(u+eta) / (a(u) Q(u-eta))


def a_frak(params: ModelParams, q_poly: HalfPeriodTrigPoly, u: complex) -> complex:
    """Bethe-equation ratio d(u) Q(u+eta) / (a(u) Q(u-eta))."""
    den_a = params.a_fn(u)
    den_q = q_poly(u - params.eta)
    _require_nonzero(den_a, "a(u)")
    _require_nonzero(den_q, "Q(u-eta)")
    return params.d_fn(u) * q_poly(u + params.eta) / (den_a * den_q)


def f_tilde(params: ModelParams, p_poly: HalfPeriodTrigPoly,
            q_poly: HalfPeriodTrigPoly, u: complex) -> complex:
    """Izergin weight P(u-eta+i*pi) Q(u) / (P(u+i*pi) Q(u-eta))."""
    den_p = p_poly(u + IPI)
    den_q = q_poly(u - params.eta)
    _require_nonzero(den_p, "P(u+i*pi)")
    _require_nonzero(den_q, "Q(u-eta)")
    return p_poly(u - params.eta + IPI) * q_poly(u) / (den_p * den_q)


def eval_ratios(p_poly: HalfPeriodTrigPoly, q_poly: HalfPeriodTrigPoly,
                params: ModelParams, u: complex) -> RatioValues:
    """All three scalar ratio functions at the point u."""
    pq_den = p_poly(u - params.eta) * q_poly(u - params.eta)
    _require_nonzero(pq_den, "(PQ)(u-eta)")
    f_pq = p_poly(u) * q_poly(u) / pq_den
    return RatioValues(
        f_pq=f_pq,
        f_tilde=f_tilde(params, p_poly, q_poly, u),
        a_frak=a_frak(params, q_poly, u),
    )


def _require_nonzero(value: complex, name: str, floor: float = 1e-13):
    if abs(value) < floor:
        raise SingularEvaluationError(f"{name} = {value} is below the evaluation floor")


def residual_grid(params: ModelParams, count: int | None = None,
                  seed: int = 20240) -> np.ndarray:
    """Seeded sample points for functional residuals, kept delta_min away from
    every zero of a, d and their i*pi translates."""
    n = params.n
    count = count if count is not None else 4 * n + 5
    rng = np.random.default_rng(seed)
    avoid = params.forbidden_points()
    pts = []
    while len(pts) < count:
        z = complex(rng.uniform(-1.5, 1.5), rng.uniform(-0.45 * PI, 0.45 * PI))
        if all(dist_mod_ipi(z, p) >= params.delta_min for p in avoid):
            pts.append(z)
    return np.array(pts, dtype=np.complex128)


@dataclass(frozen=True)
class QStructureReport:
    qhat: HalfPeriodTrigPoly
    wronskian_residual: float
    wronskian_sign: int
    sum_rule_defect: float
    sum_rule_k: int
    pq_prop_residual: float


def q_structure_residuals(q_poly: HalfPeriodTrigPoly, params: ModelParams,
                          seed: int = 20240) -> QStructureReport:
    """Structural diagnostics of a candidate Q-function.

    Checks, on a seeded grid, the quantum Wronskian pairing of Q with its
    i*pi-shift (sign reported, not assumed), the root sum rule modulo i*k*pi,
    and the bra/ket compatibility ratio identity at the inhomogeneities.
    """
    n = params.n
    qhat = q_poly.shifted_ipi()
    grid = residual_grid(params, seed=seed)

    target = (0.5j) ** n
    best = None
    for sign in (1, -1):
        num, scale = 0.0, 0.0
        for lam in grid:
            w = 0.5 * (q_poly(lam) * qhat(lam - params.eta)
                       + qhat(lam) * q_poly(lam - params.eta))
            rhs = sign * target * params.d_fn(lam)
            num = max(num, abs(w - rhs))
            scale = max(scale, abs(w) + abs(rhs))
        rel = num / scale if scale > 0 else num
        if best is None or rel < best[0]:
            best = (rel, sign)
    w_res, w_sign = best

    s = sum(q_poly.roots) - sum(x - params.eta / 2 for x in params.xi)
    k = round(s.imag / PI)
    defect = abs(s - 1j * PI * k)

    pq_res = 0.0
    for x in params.xi:
        r1 = q_poly(x - params.eta) / q_poly(x)
        r2 = q_poly(x - params.eta + IPI) / q_poly(x + IPI)
        pq_res = max(pq_res, abs(r1 + r2) / max(abs(r1) + abs(r2), 1e-30))

    return QStructureReport(
        qhat=qhat,
        wronskian_residual=float(w_res),
        wronskian_sign=w_sign,
        sum_rule_defect=float(defect),
        sum_rule_k=int(k),
        pq_prop_residual=float(pq_res),
    )


class TrigInterpolation:
    """Quasi-periodic interpolation through values at the inhomogeneities.

    f(lam) = sum_j f_j prod_{k != j} sinh(lam - xi_k) / sinh(xi_j - xi_k);
    this reproduces any function in the span of {e^{(N-1)lam}, ..., e^{-(N-1)lam}}
    with parity (-1)^{N-1} under lam -> lam + i*pi, which contains the twisted
    transfer-matrix eigenvalues.
    """

    def __init__(self, xi, values):
        self.xi = np.asarray(xi, dtype=np.complex128)
        self.values = np.asarray(values, dtype=np.complex128)
        if self.xi.shape != self.values.shape:
            raise ParameterError("interpolation nodes/values length mismatch")
        self._den = np.array([
            np.prod([np.sinh(self.xi[j] - self.xi[k])
                     for k in range(len(self.xi)) if k != j]) if len(self.xi) > 1 else 1.0
            for j in range(len(self.xi))
        ], dtype=np.complex128)

    def __call__(self, lam: complex) -> complex:
        out = 0.0 + 0.0j
        for j in range(len(self.xi)):
            num = np.prod([cmath.sinh(lam - self.xi[k])
                           for k in range(len(self.xi)) if k != j]) if len(self.xi) > 1 else 1.0
            out += self.values[j] * num / self._den[j]
        return complex(out)

    def deriv(self, lam: complex) -> complex:
        out = 0.0 + 0.0j
        n = len(self.xi)
        for j in range(n):
            acc = 0.0 + 0.0j
            for m in range(n):
                if m == j:
                    continue
                term = cmath.cosh(lam - self.xi[m])
                for k in range(n):
                    if k != j and k != m:
                        term *= cmath.sinh(lam - self.xi[k])
                acc += term
            out += self.values[j] * acc / self._den[j]
        return complex(out)
