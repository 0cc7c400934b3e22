"""Euler products with bounded prime coefficients and their audits.

An :class:`EulerFunction` packages the data the rest of the pipeline
consumes: prime coefficients a(p), local-factor log coefficients b(p^k),
the uniform bound K on |a(p)|, and (when available) a closed form for the
local factors.  Dirichlet L-functions are the built-in family; arbitrary
coefficient streams can be imported from CSV.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from . import analytic
from .analytic import DomainError, prime_power_sum, prime_sum_tail
from .characters import DirichletCharacter, character_table
from .primes import PrimeTable


class CoefficientDataError(KeyError):
    """A coefficient stream has no data at a required prime."""


@dataclass
class EulerFunction:
    """Member of the admissible Euler-product class.

    ``prime_coeff_vec`` returns a(p) on an array of primes; ``log_coeff_k``
    returns the degree-k log coefficient b(p^k) on an array of primes, so
    that log F_p(s) = sum_k b(p^k) p^{-ks}.  For the default degree-one
    local factor (1 - a(p) p^-s)^{-1} these are b(p^k) = a(p)^k / k.
    """

    label: str
    K: float
    prime_coeff_vec: Callable[[np.ndarray], np.ndarray]
    dirichlet_coeff: Callable[[int], complex]
    character: Optional[DirichletCharacter] = None
    k_max: int = 8

    def log_coeff_k(self, primes: np.ndarray, k: int) -> np.ndarray:
        a = self.prime_coeff_vec(primes)
        return a**k / k

    def log_coeff(self, p: int, k: int) -> complex:
        return complex(self.log_coeff_k(np.array([p], dtype=np.int64), k)[0])

    def local_factor_vec(self, primes: np.ndarray, s: complex) -> np.ndarray:
        """F_p(s) for each p in the array (degree-one closed form)."""
        x = self.prime_coeff_vec(primes) * np.exp(
            -s * np.log(primes.astype(np.float64))
        )
        return 1.0 / (1.0 - x)

    def log_local_factor_vec(
        self, primes: np.ndarray, s: complex, kmin: int = 1
    ) -> np.ndarray:
        """sum_{k >= kmin} b(p^k) p^{-ks}, exact for the degree-one form."""
        x = self.prime_coeff_vec(primes) * np.exp(
            -s * np.log(primes.astype(np.float64))
        )
        total = -np.log1p(-x)
        for k in range(1, kmin):
            total -= x**k / k
        return total


def make_dirichlet_L(chi: DirichletCharacter) -> EulerFunction:
    """The L-function of a Dirichlet character as an EulerFunction.

    a(p) = chi(p), K = 1, b(p^k) = chi(p)^k / k, and the full Dirichlet
    coefficient is chi(n) itself.
    """

    def coeff_vec(primes: np.ndarray) -> np.ndarray:
        return chi(primes)

    return EulerFunction(
        label=f"L(chi mod {chi.modulus}, idx {chi.index})",
        K=1.0,
        prime_coeff_vec=coeff_vec,
        dirichlet_coeff=lambda n: chi.value_at(n),
        character=chi,
    )


def make_zeta() -> EulerFunction:
    """Riemann zeta as the L-function of the character mod 1."""
    (chi,) = character_table(1)
    f = make_dirichlet_L(chi)
    f.label = "zeta"
    return f


def stream_from_values(
    label: str, primes: np.ndarray, values: np.ndarray, K: float
) -> EulerFunction:
    """EulerFunction from explicit per-prime coefficients.

    Completely multiplicative extension off the primes; evaluation outside
    the covered primes raises CoefficientDataError naming the prime.
    """
    primes = np.asarray(primes, dtype=np.int64)
    values = np.asarray(values, dtype=np.complex128)
    order = np.argsort(primes)
    primes, values = primes[order], values[order]

    def coeff_vec(ps: np.ndarray) -> np.ndarray:
        idx = np.searchsorted(primes, ps)
        bad = (idx >= len(primes)) | (primes[np.minimum(idx, len(primes) - 1)] != ps)
        if np.any(bad):
            p_bad = int(np.asarray(ps)[np.argmax(bad)])
            raise CoefficientDataError(f"no coefficient data at prime {p_bad}")
        return values[idx]

    def dirichlet_coeff(n: int) -> complex:
        out = 1.0 + 0.0j
        m = n
        d = 2
        while d * d <= m:
            while m % d == 0:
                out *= complex(coeff_vec(np.array([d], dtype=np.int64))[0])
                m //= d
            d += 1
        if m > 1:
            out *= complex(coeff_vec(np.array([m], dtype=np.int64))[0])
        return out

    return EulerFunction(
        label=label,
        K=float(K),
        prime_coeff_vec=coeff_vec,
        dirichlet_coeff=dirichlet_coeff,
    )


def stream_from_csv(label: str, lines: Sequence[str], K: float) -> EulerFunction:
    """Coefficient stream from CSV lines "p,re,im"."""
    ps, vs = [], []
    for line in lines:
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        p_str, re_str, im_str = line.split(",")
        ps.append(int(p_str))
        vs.append(complex(float(re_str), float(im_str)))
    return stream_from_values(label, np.array(ps), np.array(vs), K)


# ---------------------------------------------------------------------------
# Evaluation


def eval_truncated(
    F: EulerFunction, s: complex, prime_limit: int, table: PrimeTable
) -> tuple[complex, float]:
    """Truncated Euler product over p <= prime_limit with a log-scale tail bound.

    The bound covers |log F(s) - log value|: linear terms are bounded by
    K times the exact prime-sum tail, higher powers by a geometric tail.
    """
    s = complex(s)
    if s.real <= 1:
        raise DomainError(f"Euler product evaluation needs Re(s) > 1, got {s}")
    if prime_limit < 2:
        raise analytic.DomainError(f"prime_limit must be >= 2, got {prime_limit}")
    ps = table.in_range(0, prime_limit)
    logs = F.log_local_factor_vec(ps, s)
    value = complex(np.exp(np.sum(logs)))
    sigma = s.real
    lin_tail = F.K * prime_sum_tail(sigma, ps)
    x_max = F.K * float(prime_limit) ** (-sigma)
    geo_tail = (F.K**2) / (2 * (1 - x_max)) * prime_sum_tail(2 * sigma, ps)
    return value, lin_tail + geo_tail


@dataclass
class PrimeSumResult:
    value: complex
    tail_bound: float
    method: str


def prime_sum_over_all_primes(
    sigma: float,
    weight: Optional[Callable[[np.ndarray], np.ndarray]] = None,
    table: Optional[PrimeTable] = None,
    K: float = 1.0,
) -> PrimeSumResult:
    """sum_p weight(p) p^-sigma over all primes.

    With no weight this is exact via Moebius inversion of log zeta.  For a
    general bounded weight it is a table-truncated sum with a K-weighted
    bound on the absolutely convergent tail.
    """
    if sigma <= 1:
        raise DomainError(f"prime sums need sigma > 1, got {sigma}")
    if weight is None:
        return PrimeSumResult(prime_power_sum(sigma), 0.0, "mobius-log-zeta")
    if table is None:
        raise ValueError("a prime table is required for weighted sums")
    ps = table.primes
    w = np.asarray(weight(ps), dtype=np.complex128)
    val = complex(np.sum(w * ps.astype(np.float64) ** (-sigma)))
    tail = K * prime_sum_tail(sigma, ps)
    return PrimeSumResult(val, tail, "truncated+tail")


# ---------------------------------------------------------------------------
# Axiom audit and correlation slopes


def loglog_regression(x_grid: np.ndarray, y: np.ndarray) -> tuple[complex, complex, float]:
    """Least-squares fit y ~ slope * log log x + intercept.

    Returns (slope, intercept, stderr of slope); y may be complex.
    """
    t = np.log(np.log(np.asarray(x_grid, dtype=np.float64)))
    A = np.stack([t, np.ones_like(t)], axis=1)
    coef, *_ = np.linalg.lstsq(A, np.asarray(y), rcond=None)
    slope, intercept = coef
    resid = np.asarray(y) - A @ coef
    dof = max(len(t) - 2, 1)
    s2 = float(np.sum(np.abs(resid) ** 2)) / dof
    gram = np.linalg.inv(A.T @ A)
    stderr = math.sqrt(max(s2 * gram[0, 0].real, 0.0))
    return complex(slope), complex(intercept), stderr


def geometric_grid(x_min: float, x_max: float, ratio: float = 2.0) -> np.ndarray:
    pts = [float(x_min)]
    while pts[-1] * ratio <= x_max:
        pts.append(pts[-1] * ratio)
    return np.array(pts)


@dataclass
class AxiomCheck:
    axiom: str
    statistic: float
    bound: float
    passed: bool
    detail: str = ""

    def to_json_dict(self) -> dict:
        return {
            "axiom": self.axiom,
            "statistic": self.statistic,
            "bound": self.bound,
            "pass": self.passed,
        }


@dataclass
class AxiomReport:
    label: str
    checks: list
    e5_slope: float
    e5_stderr: float
    e4_partial_sums: np.ndarray = field(repr=False)

    @property
    def all_pass(self) -> bool:
        return all(c.passed for c in self.checks)

    def to_json_dict(self) -> dict:
        return {
            "label": self.label,
            "checks": [c.to_json_dict() for c in self.checks],
            "e5_slope": self.e5_slope,
            "e5_stderr": self.e5_stderr,
        }


def audit_axioms(
    F: EulerFunction,
    table: PrimeTable,
    x_grid: Optional[np.ndarray] = None,
    slope_band: tuple[float, float] = (0.5, 1.5),
) -> AxiomReport:
    """Numerical audit of the coefficient-bound, higher-power and
    correlation axioms over the table.

    The coefficient bound is checked exactly; the higher-power budget is
    accumulated up to k_max with a closed geometric majorant; the
    correlation slope is the log log regression of sum |a(p)|^2 / p.
    """
    if x_grid is None:
        x_grid = geometric_grid(1e3, min(table.limit, 1e7))
    x_grid = np.asarray(x_grid, dtype=np.float64)
    if np.any(np.diff(x_grid) <= 0):
        raise ValueError("x_grid must be increasing")
    if x_grid[-1] > table.limit:
        raise ValueError("x_grid exceeds the sieve capacity")

    ps = table.in_range(0, x_grid[-1])
    a = F.prime_coeff_vec(ps)
    abs_a = np.abs(a)

    e3_max = float(abs_a.max()) if len(ps) else 0.0
    checks = [
        AxiomCheck(
            axiom="coefficient-bound",
            statistic=e3_max,
            bound=F.K,
            passed=bool(e3_max <= F.K + 1e-12),
        )
    ]

    # higher prime powers: sum_p sum_{2<=k<=k_max} |b(p^k)| / p^k, with the
    # closed majorant sum_p K^2 p^-2 / (2 (1 - K/p)) for the degree-one form
    pv = ps.astype(np.float64)
    e4 = np.zeros(len(ps))
    for k in range(2, F.k_max + 1):
        e4 += np.abs(F.log_coeff_k(ps, k)) / pv**k
    e4_partial = np.cumsum(e4)
    e4_total = float(e4_partial[-1]) if len(ps) else 0.0
    with np.errstate(divide="ignore"):
        majorant = float(
            np.sum(F.K**2 / (pv**2 * 2 * (1 - np.minimum(F.K / pv, 0.9))))
        ) + 0.1  # headroom for the tail beyond the table
    checks.append(
        AxiomCheck(
            axiom="higher-powers",
            statistic=e4_total,
            bound=majorant,
            passed=bool(e4_total <= majorant),
            detail="partial sums plateau within the geometric majorant",
        )
    )

    # correlation slope against log log x
    contrib = np.abs(a) ** 2 / pv
    cum = np.cumsum(contrib)
    idx = np.searchsorted(ps, x_grid, side="right") - 1
    y = np.where(idx >= 0, cum[np.maximum(idx, 0)], 0.0)
    slope_c, _, stderr = loglog_regression(x_grid, y)
    slope = slope_c.real
    checks.append(
        AxiomCheck(
            axiom="correlation-slope",
            statistic=slope,
            bound=slope_band[1],
            passed=bool(slope_band[0] <= slope <= slope_band[1]),
            detail=f"stderr {stderr:.3g}",
        )
    )

    return AxiomReport(
        label=F.label,
        checks=checks,
        e5_slope=slope,
        e5_stderr=stderr,
        e4_partial_sums=e4_partial,
    )


class InsufficientDataError(ValueError):
    pass


@dataclass
class SelbergMatrixEstimate:
    """Pairwise correlation slopes m_hat with standard errors."""

    labels: list
    m_hat: np.ndarray
    stderr: np.ndarray
    x_grid: np.ndarray

    def is_orthogonal_pair(self, i: int, j: int, tol: float = 0.15) -> bool:
        return bool(abs(self.m_hat[i, j]) <= max(tol, 3 * self.stderr[i, j]))

    def diagonal_positive(self) -> bool:
        return bool(np.all(self.m_hat.diagonal().real > 0))

    def check_family_orthogonal(self, tol: float = 0.15) -> None:
        n = len(self.labels)
        for i in range(n):
            if self.m_hat[i, i].real <= 0:
                raise OrthogonalityError(
                    f"self-correlation of {self.labels[i]} is not positive "
                    f"(slope {self.m_hat[i, i]:.3g})"
                )
            for j in range(i + 1, n):
                if not self.is_orthogonal_pair(i, j, tol):
                    raise OrthogonalityError(
                        f"family members {self.labels[i]} and {self.labels[j]} "
                        f"are not orthogonal (slope {self.m_hat[i, j]:.3g})"
                    )


class OrthogonalityError(ValueError):
    """A family failed its pairwise-orthogonality audit."""


def estimate_selberg_matrix(
    family: Sequence[EulerFunction], table: PrimeTable, x_max: float = 1e7
) -> SelbergMatrixEstimate:
    """Correlation slopes of sum a_F(p) conj(a_G(p)) / p against log log x.

    Regression over a geometric grid 1e3 * 2^j; a single endpoint is far
    too noisy at desk scale because the o(1) term decays only like
    1/log x.
    """
    if x_max < 1e3:
        raise InsufficientDataError("need x_max >= 1e3 for the slope grid")
    x_max = min(float(x_max), float(table.limit))
    grid = geometric_grid(1e3, x_max)
    ps = table.in_range(0, x_max)
    pv = ps.astype(np.float64)
    coeffs = [F.prime_coeff_vec(ps) for F in family]
    idx = np.searchsorted(ps, grid, side="right") - 1

    n = len(family)
    m_hat = np.zeros((n, n), dtype=np.complex128)
    stderr = np.zeros((n, n))
    for i in range(n):
        for j in range(i, n):
            contrib = coeffs[i] * np.conj(coeffs[j]) / pv
            cum = np.cumsum(contrib)
            y = cum[np.maximum(idx, 0)]
            slope, _, se = loglog_regression(grid, y)
            m_hat[i, j] = slope
            m_hat[j, i] = np.conj(slope)
            stderr[i, j] = stderr[j, i] = se
    return SelbergMatrixEstimate(
        labels=[F.label for F in family], m_hat=m_hat, stderr=stderr, x_grid=grid
    )
