"""Densities of prime subsets: natural, Dirichlet, threshold and direction sets.

Finite-scale surrogates: liminf/limsup become min/max over the tail third
of an evaluation grid, and Dirichlet ratios are matched-truncation ratios
(numerator and denominator cut at the same table limit).  For cofinite
sets the exact Moebius/log-zeta denominator is used instead, which is the
only way the ratio can actually approach 1 on a sigma grid.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np
from scipy.integrate import quad

from .analytic import DomainError, prime_power_sum
from .euler import EulerFunction, loglog_regression, geometric_grid
from .primes import PrimeTable

DEFAULT_SIGMA_GRID = np.array([1.03, 1.02, 1.01, 1.003, 1.002, 1.001])


def tail_window(values: Sequence[float]) -> tuple[float, float]:
    """(min, max) over the last third of a sequence, the finite stand-in
    for liminf/limsup along the grid."""
    v = np.asarray(values, dtype=np.float64)
    k = max(1, len(v) // 3)
    tail = v[-k:]
    return float(tail.min()), float(tail.max())


@dataclass
class PrimeSubset:
    """A set of primes inside a base set (default: all primes of the table)."""

    members: np.ndarray = field(repr=False)
    descriptor: str = ""
    base: Optional["PrimeSubset"] = None
    cofinite_above: Optional[float] = None  # set = {p > y} symbolically

    def __post_init__(self):
        self.members = np.asarray(self.members, dtype=np.int64)

    def __len__(self) -> int:
        return len(self.members)

    def count_below(self, x: float) -> int:
        return int(np.searchsorted(self.members, x, side="right"))

    def sigma_sum(self, sigma: float) -> float:
        if len(self.members) == 0:
            return 0.0
        return float(np.sum(self.members.astype(np.float64) ** (-sigma)))

    @classmethod
    def full(cls, table: PrimeTable) -> "PrimeSubset":
        return cls(members=table.primes, descriptor=f"all primes <= {table.limit}")

    @classmethod
    def above(cls, table: PrimeTable, y: float) -> "PrimeSubset":
        return cls(
            members=table.in_range(y, table.limit),
            descriptor=f"primes > {y}",
            cofinite_above=float(y),
        )


@dataclass
class DensityEstimate:
    kind: str  # "natural" | "dirichlet"
    lower: float
    upper: float
    grid: np.ndarray = field(repr=False)
    ratios: np.ndarray = field(repr=False)

    def __post_init__(self):
        if not (0 <= self.lower <= self.upper + 1e-12):
            raise ValueError("density estimates must satisfy 0 <= lower <= upper")

    def to_json_dict(self) -> dict:
        return {
            "kind": self.kind,
            "grid": list(map(float, self.grid)),
            "ratios": list(map(float, self.ratios)),
            "lower": self.lower,
            "upper": self.upper,
        }


def subset_with_density(Q: PrimeSubset, alpha: float) -> PrimeSubset:
    """Subset of Q with relative density alpha, by index striding.

    Takes the elements of rank floor(n/alpha) for n = 1, 2, ...; for
    alpha = 1 this is Q itself and for alpha = 0 the empty set.
    """
    if not (0 <= alpha <= 1):
        raise ValueError(f"alpha must be in [0, 1], got {alpha}")
    if alpha == 0:
        return PrimeSubset(
            members=np.array([], dtype=np.int64),
            descriptor=f"density-0 subset of ({Q.descriptor})",
            base=Q,
        )
    if len(Q) == 0:
        raise DomainError("cannot stride a subset of an empty set with alpha > 0")
    n_max = int(alpha * len(Q)) + 1
    n = np.arange(1, n_max + 1, dtype=np.float64)
    idx = np.floor(n / alpha).astype(np.int64)  # 1-based ranks
    idx = idx[idx <= len(Q)]
    return PrimeSubset(
        members=Q.members[idx - 1],
        descriptor=f"density-{alpha} stride of ({Q.descriptor})",
        base=Q,
    )


def natural_density(
    A: PrimeSubset, x_grid: Sequence[float], base: Optional[PrimeSubset] = None
) -> DensityEstimate:
    """Counting-function ratios A(x)/B(x) along the grid."""
    B = base if base is not None else A.base
    if B is None:
        raise ValueError("no base set: pass one or construct A with a base")
    ratios = []
    for x in x_grid:
        b = B.count_below(x)
        if b == 0:
            raise DomainError(f"base set empty below x={x}")
        ratios.append(A.count_below(x) / b)
    lower, upper = tail_window(ratios)
    return DensityEstimate(
        kind="natural",
        lower=lower,
        upper=upper,
        grid=np.asarray(x_grid, dtype=np.float64),
        ratios=np.asarray(ratios),
    )


def dirichlet_density(
    A: PrimeSubset,
    sigma_grid: Optional[Sequence[float]] = None,
    base: Optional[PrimeSubset] = None,
) -> DensityEstimate:
    """sigma-sum ratios along a grid decreasing to 1+.

    Generic subsets use matched truncation: cutting numerator and
    denominator at the same table limit is exactly what the full Moebius
    denominator plus a proportional tail completion reduces to.  Cofinite
    sets {p > y} instead use the exact full-prime sum on both sides, so
    the ratio genuinely climbs to 1 as sigma -> 1+.
    """
    sigma_grid = DEFAULT_SIGMA_GRID if sigma_grid is None else np.asarray(sigma_grid)
    if np.any(sigma_grid <= 1):
        raise DomainError("sigma grid must stay strictly above 1")
    B = base if base is not None else A.base
    ratios = []
    for sigma in sigma_grid:
        if A.cofinite_above is not None and B is None:
            total = prime_power_sum(float(sigma))
            head = _head_sum(float(sigma), A.cofinite_above)
            num = total - head
            den = total
        else:
            if B is None:
                raise ValueError("no base set: pass one or construct A with a base")
            num = A.sigma_sum(float(sigma))
            den = B.sigma_sum(float(sigma))
            if den == 0:
                raise DomainError(f"base sigma-sum vanishes at sigma={sigma}")
        ratios.append(num / den)
    lower, upper = tail_window(ratios)
    lower = min(max(lower, 0.0), 1.0)
    upper = min(max(upper, 0.0), 1.0)
    return DensityEstimate(
        kind="dirichlet",
        lower=lower,
        upper=upper,
        grid=np.asarray(sigma_grid, dtype=np.float64),
        ratios=np.asarray(ratios),
    )


_SMALL_PRIMES = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53, 59, 61,
                 67, 71, 73, 79, 83, 89, 97]


def _head_sum(sigma: float, y: float) -> float:
    if y > 100:
        raise ValueError("cofinite head only tabulated up to y = 100")
    return sum(p ** (-sigma) for p in _SMALL_PRIMES if p <= y)


# ---------------------------------------------------------------------------
# Log-scale to Dirichlet-scale transfer


@dataclass
class TransferReport:
    sigma_grid: np.ndarray
    ratios: np.ndarray
    kappa_claimed: float
    kappa_fitted: float
    passed: bool

    @property
    def final_ratio(self) -> float:
        return float(self.ratios[-1])


def _exp_log_integral(w: float) -> float:
    """integral_w^infty exp(-t) log(t) dt."""
    val, _ = quad(lambda t: math.exp(-t) * math.log(t), w, np.inf, limit=200)
    return val


def check_log_to_dirichlet(
    weight_sq: Callable[[np.ndarray], np.ndarray],
    kappa_claimed: float,
    table: PrimeTable,
    sigma_grid: Optional[Sequence[float]] = None,
) -> TransferReport:
    """Ratios  sum_p |a(p)|^2 p^-sigma / (-log(sigma-1))  along the grid.

    The sum over table primes is extended beyond the table by partial
    summation against the measured log log fit of sum_{p<=x} |a(p)|^2/p,
    so the ratio reflects the fitted growth rate rather than the
    truncation artifact.  Passes when the final ratio sits in a band
    around the claimed rate.
    """
    sigma_grid = DEFAULT_SIGMA_GRID if sigma_grid is None else np.asarray(sigma_grid)
    if np.any(sigma_grid <= 1):
        raise DomainError("sigma grid must stay strictly above 1")
    ps = table.primes
    pv = ps.astype(np.float64)
    w2 = np.real(np.asarray(weight_sq(ps)))
    cum = np.cumsum(w2 / pv)
    L_X = float(cum[-1]) if len(ps) else 0.0
    X = float(table.limit)

    grid = geometric_grid(1e3, X)
    idx = np.searchsorted(ps, grid, side="right") - 1
    y_fit = cum[np.maximum(idx, 0)]
    if L_X == 0.0:
        kappa_hat, c_hat = 0.0, 0.0
    else:
        slope, intercept, _ = loglog_regression(grid, y_fit)
        kappa_hat, c_hat = slope.real, intercept.real

    ratios = []
    for sigma in sigma_grid:
        head = float(np.sum(w2 * pv ** (-float(sigma))))
        w = (float(sigma) - 1.0) * math.log(X)
        ew = math.exp(-w)
        tail = (
            -ew * L_X
            + kappa_hat * (ew * (-math.log(sigma - 1.0)) + _exp_log_integral(w))
            + c_hat * ew
        )
        ratios.append((head + max(tail, 0.0)) / (-math.log(sigma - 1.0)))
    ratios = np.asarray(ratios)
    final = float(ratios[-1])
    passed = abs(final - kappa_claimed) <= max(0.2 * kappa_claimed, 0.05)
    return TransferReport(
        sigma_grid=np.asarray(sigma_grid, dtype=np.float64),
        ratios=ratios,
        kappa_claimed=kappa_claimed,
        kappa_fitted=kappa_hat,
        passed=passed,
    )


# ---------------------------------------------------------------------------
# Threshold sets and direction sets


@dataclass
class ThresholdSetResult:
    gamma: float
    kappa: float
    M: float
    set: PrimeSubset
    lower_bound: float
    empirical: DensityEstimate

    def __post_init__(self):
        if not (0 < self.lower_bound <= 1 + 1e-12):
            raise ValueError("threshold lower bound must lie in (0, 1]")


def threshold_lower_bound(kappa: float, M: float, gamma: float) -> float:
    """(kappa - (kappa-gamma)^2) / (M^2 - (kappa-gamma)^2)."""
    c = kappa - gamma
    return (kappa - c * c) / (M * M - c * c)


def threshold_set(
    weight: Callable[[np.ndarray], np.ndarray],
    kappa: float,
    M: float,
    gamma: float,
    table: PrimeTable,
    sigma_grid: Optional[Sequence[float]] = None,
) -> ThresholdSetResult:
    """Primes where |a(p)| >= kappa - gamma, with its density floor.

    Admissible parameters: kappa - sqrt(kappa) < gamma <= kappa and
    M >= sqrt(kappa); the floor is positive for all of them.
    """
    if not (kappa - math.sqrt(kappa) < gamma <= kappa):
        raise DomainError(
            f"gamma={gamma} outside (kappa - sqrt(kappa), kappa] for kappa={kappa}"
        )
    if M < math.sqrt(kappa):
        raise DomainError(f"M={M} below sqrt(kappa)={math.sqrt(kappa)}")
    ps = table.primes
    absa = np.abs(np.asarray(weight(ps)))
    if float(absa.max(initial=0.0)) > M + 1e-12:
        raise DomainError("coefficient bound M violated on the table")
    mask = absa >= (kappa - gamma) - 1e-15
    members = ps[mask]
    subset = PrimeSubset(
        members=members,
        descriptor=f"|a(p)| >= {kappa - gamma:.6g}",
        base=PrimeSubset.full(table),
    )
    bound = threshold_lower_bound(kappa, M, gamma)
    est = dirichlet_density(subset, sigma_grid)
    return ThresholdSetResult(
        gamma=gamma, kappa=kappa, M=M, set=subset, lower_bound=bound, empirical=est
    )


@dataclass
class DirectionSetResult:
    u: np.ndarray
    set: PrimeSubset
    delta: float
    empirical: DensityEstimate


def direction_delta(K: Sequence[float], m_diag: Sequence[float]) -> float:
    """3 / (4 max(1, sum K_j^2/m_j) - 1), the uniform density floor."""
    s = float(sum(k * k / m for k, m in zip(K, m_diag)))
    return 3.0 / (4.0 * max(1.0, s) - 1.0)


class DirectionSampler:
    """Precomputed context for evaluating many direction sets over one table.

    Holds the scaled coefficient rows a_j(p)/sqrt(m_j) and the p^-sigma
    grids once, so each direction costs a single vectorized pass.
    """

    def __init__(
        self,
        family: Sequence[EulerFunction],
        table: PrimeTable,
        y: float,
        m_diag: Sequence[float],
        sigma_grid: Optional[Sequence[float]] = None,
    ):
        self.y = float(y)
        self.table = table
        self.sigma_grid = (
            DEFAULT_SIGMA_GRID if sigma_grid is None else np.asarray(sigma_grid)
        )
        self.primes = table.in_range(y, table.limit)
        pv = self.primes.astype(np.float64)
        self.m_diag = np.asarray(m_diag, dtype=np.float64)
        self.K = np.array([F.K for F in family])
        self.rows = np.stack(
            [
                np.asarray(F.prime_coeff_vec(self.primes), dtype=np.complex64)
                / math.sqrt(m)
                for F, m in zip(family, self.m_diag)
            ]
        )
        self.pw = np.stack(
            [(pv ** (-s)).astype(np.float32) for s in self.sigma_grid]
        )
        self.base_mass = self.pw.sum(axis=1, dtype=np.float64)
        self.delta = direction_delta(self.K, self.m_diag)

    def direction_set(self, u: Sequence[complex]) -> DirectionSetResult:
        u = np.asarray(u, dtype=np.complex128)
        norm = float(np.linalg.norm(u))
        if abs(norm - 1.0) > 1e-9:
            raise ValueError(f"direction vector must be unit, |u| = {norm}")
        combo = np.tensordot(u.astype(np.complex64), self.rows, axes=(0, 0))
        mask = np.abs(combo) >= 0.5
        ratios = [
            float((self.pw[i] * mask).sum(dtype=np.float64)) / self.base_mass[i]
            for i in range(len(self.sigma_grid))
        ]
        lower, upper = tail_window(ratios)
        est = DensityEstimate(
            kind="dirichlet",
            lower=min(max(lower, 0.0), 1.0),
            upper=min(max(upper, 0.0), 1.0),
            grid=self.sigma_grid,
            ratios=np.asarray(ratios),
        )
        subset = PrimeSubset(
            members=self.primes[mask],
            descriptor=f"direction set u={np.round(u, 4)}, p > {self.y}",
        )
        return DirectionSetResult(u=u, set=subset, delta=self.delta, empirical=est)


def direction_set(
    family: Sequence[EulerFunction],
    u: Sequence[complex],
    y: float,
    table: PrimeTable,
    m_diag: Sequence[float],
    selberg=None,
    orthogonality_tol: float = 0.15,
) -> DirectionSetResult:
    """One-shot direction set; audits family orthogonality when an estimate
    is supplied."""
    if selberg is not None:
        selberg.check_family_orthogonal(orthogonality_tol)
    sampler = DirectionSampler(family, table, y, m_diag)
    return sampler.direction_set(u)
