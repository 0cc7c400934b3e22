"""Polynomial combinations of Euler products and the zero synthesis pipeline.

A combination  F(s) = sum_i D_i(s) prod_j F_j(s)^{alpha_ij}  with p-finite
coefficient series D_i either is a single monomial (and then never
vanishes in the half-plane of absolute convergence) or admits a twisted
zero at explicit sigma_0 > 1, which transfers to genuine zeros of F.  The
pipeline here makes every step of that dichotomy numerical: shifting the
head Euler factors into the coefficients, displacing to a height t_0
where no coefficient vanishes, root finding in an annulus, continuation
in sigma, phase targeting, and final certification.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np
from scipy.special import zeta as _zeta_real

from . import analytic
from .analytic import hurwitz_zeta, truncated_euler_log_tail
from .euler import EulerFunction, estimate_selberg_matrix
from .phases import (
    CapacityError,
    FamilyContext,
    SolverConfig,
    hit_euler_targets,
)
from .primes import PrimeTable
from .twist import (
    Rectangle,
    TwistFunction,
    ZeroCertificate,
    count_zeros_rectangle,
    find_zeros_in_band,
    kronecker_lift,
    lift_target_from_twist,
    newton_polish,
    twist_from_phases,
)


class SearchError(RuntimeError):
    """A floor-constrained search failed; widen the range or lower the floor."""


class RootSearchError(RuntimeError):
    pass


class AnnulusExitError(RuntimeError):
    def __init__(self, msg: str, exit_sigma: float):
        super().__init__(msg)
        self.exit_sigma = exit_sigma


# ---------------------------------------------------------------------------
# p-finite series and combination polynomials


@dataclass
class PFiniteSeries:
    """Finite Dirichlet sum supported on integers with small prime factors."""

    terms: list  # [(n, complex coefficient)]
    tail_bound: float = 0.0

    def __post_init__(self):
        self.terms = [(int(n), complex(c)) for n, c in self.terms]
        if any(n < 1 for n, _ in self.terms):
            raise ValueError("term indices must be positive integers")

    @property
    def support_primes(self) -> set:
        out: set = set()
        for n, _ in self.terms:
            m, d = n, 2
            while d * d <= m:
                if m % d == 0:
                    out.add(d)
                    while m % d == 0:
                        m //= d
                d += 1
            if m > 1:
                out.add(m)
        return out

    @property
    def is_zero(self) -> bool:
        return all(c == 0 for _, c in self.terms)

    def l1_at(self, sigma: float) -> float:
        return sum(abs(c) * n ** (-sigma) for n, c in self.terms) + self.tail_bound

    def eval(self, s) -> np.ndarray:
        s_arr = np.asarray(s, dtype=np.complex128)
        scalar = s_arr.ndim == 0
        s_flat = np.atleast_1d(s_arr).ravel()
        acc = np.zeros_like(s_flat)
        for n, c in self.terms:
            acc += c * np.exp(-s_flat * math.log(n))
        acc = acc.reshape(np.atleast_1d(s_arr).shape)
        return complex(acc[0]) if scalar else acc

    @classmethod
    def constant(cls, c: complex) -> "PFiniteSeries":
        return cls(terms=[(1, c)])

    @classmethod
    def parse(cls, text: str) -> "PFiniteSeries":
        """Parse "n:re,im;n:re,im;..." (semicolon-separated terms)."""
        terms = []
        for chunk in text.strip().split(";"):
            chunk = chunk.strip()
            if not chunk:
                continue
            n_str, c_str = chunk.split(":")
            re_str, im_str = c_str.split(",")
            terms.append((int(n_str), complex(float(re_str), float(im_str))))
        return cls(terms=terms)


@dataclass
class CombinationPolynomial:
    """sum_i D_i(s) prod_j X_j^{alpha_ij} with distinct exponent tuples."""

    terms: list  # [(PFiniteSeries, tuple alphas)]

    def __post_init__(self):
        self.terms = [(D, tuple(int(a) for a in al)) for D, al in self.terms]
        if not self.terms:
            raise ValueError("polynomial needs at least one term")
        n_vars = {len(al) for _, al in self.terms}
        if len(n_vars) != 1:
            raise ValueError("inconsistent exponent tuple lengths")
        tuples = [al for _, al in self.terms]
        if len(set(tuples)) != len(tuples):
            raise ValueError("exponent tuples must be pairwise distinct")
        if any(D.is_zero for D, _ in self.terms):
            raise ValueError("coefficient series must not be identically zero")

    @property
    def M(self) -> int:
        return len(self.terms)

    @property
    def N(self) -> int:
        return len(self.terms[0][1])

    @property
    def is_monomial(self) -> bool:
        return self.M == 1

    @property
    def support_primes(self) -> set:
        out: set = set()
        for D, _ in self.terms:
            out |= D.support_primes
        return out

    @classmethod
    def parse_lines(cls, lines: Sequence[str]) -> "CombinationPolynomial":
        """One term per line: "coeff_series | a1 a2 ... aN"."""
        terms = []
        for line in lines:
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            coeff_text, alpha_text = line.split("|")
            D = PFiniteSeries.parse(coeff_text)
            alphas = tuple(int(a) for a in alpha_text.split())
            terms.append((D, alphas))
        return cls(terms=terms)


@dataclass
class ShiftedPolynomial:
    """The combination with head Euler factors folded into the coefficients.

    Coefficient i becomes D_i(s) * prod_j prod_{p<=y} F_{j,p}(s)^{alpha_ij},
    which stays absolutely convergent (hence evaluable) down to Re(s) = 1.
    """

    y: float
    family: list
    head_primes: np.ndarray
    base: CombinationPolynomial

    @property
    def M(self) -> int:
        return self.base.M

    def head_log(self, j: int, s: complex) -> complex:
        if len(self.head_primes) == 0:
            return 0.0 + 0.0j
        return complex(
            np.sum(self.family[j].log_local_factor_vec(self.head_primes, complex(s)))
        )

    def coeff_values(self, s: complex) -> np.ndarray:
        """All shifted coefficients at one point s (Re s >= 1)."""
        s = complex(s)
        head_logs = [self.head_log(j, s) for j in range(len(self.family))]
        out = np.empty(self.M, dtype=np.complex128)
        for i, (D, alphas) in enumerate(self.base.terms):
            w = complex(D.eval(s))
            out[i] = w * np.exp(sum(a * h for a, h in zip(alphas, head_logs)))
        return out


def shift_polynomial(
    P: CombinationPolynomial,
    family: Sequence[EulerFunction],
    y: float,
    table: PrimeTable,
) -> ShiftedPolynomial:
    """Fold the local factors at p <= y into the coefficients.

    Requires y non-integral and above every support prime of the
    coefficient series, so the shifted coefficients remain p-finite.
    """
    if float(y) == int(y):
        raise ValueError("y must be non-integral")
    support = P.support_primes
    if support and max(support) > y:
        raise ValueError(
            f"coefficient support prime {max(support)} exceeds y={y}"
        )
    if len(family) != P.N:
        raise ValueError("family size does not match the polynomial arity")
    return ShiftedPolynomial(
        y=float(y),
        family=list(family),
        head_primes=table.in_range(0, y),
        base=P,
    )


# ---------------------------------------------------------------------------
# t0 search and root finding


def find_t0(
    shifted: ShiftedPolynomial,
    search: tuple,
    floor: Optional[float] = None,
    grid_step: float = 0.05,
) -> float:
    """Height t0 where every shifted coefficient clears the modulus floor.

    Coarse grid first, then a golden-section polish of prod_i |D_i(1+it)|
    around the best admissible grid point.  The floor defaults to 1e-3
    times the smallest coefficient sup over the grid.
    """
    t_lo, t_hi = search
    ts = np.arange(t_lo, t_hi + grid_step, grid_step)
    grid_vals = np.abs(
        np.stack([shifted.coeff_values(complex(1.0, t)) for t in ts])
    )  # (T, M)
    mins = grid_vals.min(axis=1)
    prods = grid_vals.prod(axis=1)
    if floor is None:
        floor = 1e-3 * float(np.min(grid_vals.max(axis=0)))
    ok = mins >= floor
    if not np.any(ok):
        raise SearchError(
            f"no t in [{t_lo}, {t_hi}] keeps all coefficients above {floor:.3g}; "
            "widen the range or lower the floor"
        )
    best = int(np.flatnonzero(ok)[np.argmax(prods[ok])])  # first maximizer
    a = max(t_lo, ts[best] - grid_step)
    b = min(t_hi, ts[best] + grid_step)
    phi = (math.sqrt(5) - 1) / 2

    def prod_at(t):
        return float(np.prod(np.abs(shifted.coeff_values(complex(1.0, t)))))

    c, d = b - phi * (b - a), a + phi * (b - a)
    fc, fd = prod_at(c), prod_at(d)
    for _ in range(40):
        if fc < fd:
            a, c, fc = c, d, fd
            d = a + phi * (b - a)
            fd = prod_at(d)
        else:
            b, d, fd = d, c, fc
            c = b - phi * (b - a)
            fc = prod_at(c)
    t0 = float((a + b) / 2)
    vals = np.abs(shifted.coeff_values(complex(1.0, t0)))
    if vals.min() < floor:
        t0 = float(ts[best])
    return t0


def _poly_in_pivot(
    shifted_coeffs: np.ndarray, terms: list, x: np.ndarray, pivot: int
) -> np.ndarray:
    """Coefficients (ascending degree) of the univariate slice polynomial."""
    deg = max(al[pivot] for _, al in terms)
    coeffs = np.zeros(deg + 1, dtype=np.complex128)
    for c_i, (_, alphas) in zip(shifted_coeffs, terms):
        rest = 1.0 + 0.0j
        for j, a in enumerate(alphas):
            if j != pivot and a:
                rest *= x[j] ** a
        coeffs[alphas[pivot]] += c_i * rest
    return coeffs


def annulus_root(
    shifted: ShiftedPolynomial,
    s0: complex,
    R: float = 2.0,
    tol: float = 1e-9,
    seed: int = 11,
    max_slices: int = 80,
) -> tuple[np.ndarray, float, float]:
    """Root of the shifted polynomial at s0 with every coordinate non-zero.

    Generic slicing: freeze all but a pivot variable at random unimodular-
    scale values, solve the univariate polynomial, keep balanced non-zero
    roots; R is then the smallest power of two >= 2 enclosing the root in
    [2/R, R/2].  A single-term polynomial is a monomial: no such root
    exists, and the caller must branch on M before calling.
    """
    if shifted.M < 2:
        raise RootSearchError("monomial: every zero has a vanishing coordinate")
    terms = shifted.base.terms
    N = shifted.base.N
    coeff_vals = shifted.coeff_values(s0)
    degs = [max(al[j] for _, al in terms) for j in range(N)]
    pivot = int(np.argmax(degs))
    if degs[pivot] == 0:
        raise RootSearchError("polynomial is constant in every variable")
    scale = float(np.max(np.abs(coeff_vals)))
    rng = np.random.default_rng(seed)

    best = None
    for _ in range(max_slices):
        x = np.exp(1j * rng.uniform(0, 2 * math.pi, size=N)) * rng.uniform(
            0.8, 1.25, size=N
        )
        coeffs = _poly_in_pivot(coeff_vals, terms, x, pivot)
        if np.max(np.abs(coeffs[1:])) < 1e-14 * scale:
            continue
        roots = np.roots(coeffs[::-1])
        roots = roots[np.abs(roots) > 1e-9]
        if len(roots) == 0:
            continue
        r = roots[np.argmin(np.abs(np.log(np.abs(roots))))]
        cand = x.copy()
        cand[pivot] = r
        resid = abs(
            sum(
                c * np.prod([cand[j] ** a for j, a in enumerate(al)])
                for c, (_, al) in zip(coeff_vals, terms)
            )
        )
        if resid <= tol * max(scale, 1.0) and np.all(np.abs(cand) > 1e-9):
            mods = np.abs(cand)
            need = max(2.0, 2 * mods.max(), 2 / mods.min())
            R_used = 2.0 ** math.ceil(math.log2(need))
            return cand, float(resid), float(R_used)
        if best is None or resid < best[1]:
            best = (cand, resid)
    raise RootSearchError(
        f"no balanced non-zero root after {max_slices} slices "
        f"(best residual {best[1]:.3g})" if best else "no usable slice found"
    )


def continue_root_in_sigma(
    shifted: ShiftedPolynomial,
    x0: np.ndarray,
    t0: float,
    sigma_path: Sequence[float],
    R: float,
    tol: float = 1e-10,
    max_halvings: int = 12,
) -> list:
    """Track the root along sigma, keeping non-pivot coordinates frozen.

    Predictor: previous point; corrector: univariate Newton on the pivot
    coordinate; steps halve when the annulus [1/R, R] is violated or the
    correction stalls.  Returns [(sigma, z(sigma) vector), ...] along the
    requested path.
    """
    terms = shifted.base.terms
    N = shifted.base.N
    degs = [max(al[j] for _, al in terms) for j in range(N)]
    pivot = int(np.argmax(degs))

    def correct(sig: float, x_prev: np.ndarray) -> Optional[np.ndarray]:
        coeff_vals = shifted.coeff_values(complex(sig, t0))
        coeffs = _poly_in_pivot(coeff_vals, terms, x_prev, pivot)
        dcoeffs = coeffs[1:] * np.arange(1, len(coeffs))
        r = x_prev[pivot]
        for _ in range(60):
            f = np.polyval(coeffs[::-1], r)
            if abs(f) <= tol * max(1.0, float(np.max(np.abs(coeffs)))):
                out = x_prev.copy()
                out[pivot] = r
                return out
            df = np.polyval(dcoeffs[::-1], r)
            if df == 0:
                return None
            r = r - f / df
        return None

    path = [(float(sigma_path[0]), np.asarray(x0, dtype=np.complex128))]
    z = correct(float(sigma_path[0]), path[0][1])
    if z is None:
        raise AnnulusExitError("root invalid at the path start", float(sigma_path[0]))
    path[0] = (float(sigma_path[0]), z)
    for sig_target in list(sigma_path[1:]):
        sig_prev, z_prev = path[-1]
        sig = sig_target
        halvings = 0
        while True:
            z_new = correct(sig, z_prev)
            ok = z_new is not None and np.all(
                (np.abs(z_new) >= 1 / R - 1e-12) & (np.abs(z_new) <= R + 1e-12)
            )
            if ok:
                if abs(sig - sig_target) < 1e-15:
                    path.append((float(sig), z_new))
                    break
                sig_prev, z_prev = sig, z_new
                sig = sig_target
            else:
                halvings += 1
                if halvings > max_halvings:
                    raise AnnulusExitError(
                        f"root left the annulus near sigma={sig:.6f}", float(sig)
                    )
                sig = (sig_prev + sig) / 2
    return path


# ---------------------------------------------------------------------------
# Combination evaluators


class CombinationEvaluator:
    """Vectorized values of  sum_i D_i(s) prod_j L_j(s)^{alpha_ij}.

    For character families the L-values come from the finite Hurwitz
    expansion with shared zeta(s, r/q) evaluations, accurate to ~1e-11 on
    moderate heights; ``error_budget`` is the certified evaluation error
    fed to winding counts.
    """

    def __init__(
        self,
        P: CombinationPolynomial,
        family: Sequence[EulerFunction],
        error_budget: float = 1e-9,
    ):
        if any(F.character is None for F in family):
            raise ValueError("exact evaluation needs character-based members")
        self.P = P
        self.family = list(family)
        self.error_budget = error_budget

    def l_values(self, s_flat: np.ndarray) -> list:
        cache: dict = {}
        vals = []
        for F in self.family:
            chi = F.character
            q = chi.modulus
            acc = np.zeros_like(s_flat)
            for r in range(1, q + 1):
                c = chi.value_at(r)
                if c == 0:
                    continue
                key = (q, r)
                if key not in cache:
                    cache[key] = hurwitz_zeta(s_flat, r / q)
                acc = acc + c * cache[key]
            if q > 1:
                acc = acc * np.exp(-s_flat * math.log(q))
            vals.append(acc)
        return vals

    def __call__(self, s) -> np.ndarray:
        s_arr = np.asarray(s, dtype=np.complex128)
        scalar = s_arr.ndim == 0
        s_flat = np.atleast_1d(s_arr).ravel()
        lv = self.l_values(s_flat)
        acc = np.zeros_like(s_flat)
        for D, alphas in self.P.terms:
            term = D.eval(s_flat)
            for j, a in enumerate(alphas):
                if a:
                    term = term * lv[j] ** a
            acc = acc + term
        acc = acc.reshape(np.atleast_1d(s_arr).shape)
        return complex(acc[0]) if scalar else acc


def _dirichlet_convolve(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """(a * b)(n) = sum_{de=n} a(d) b(e); index 0 unused."""
    n = len(a) - 1
    out = np.zeros_like(a)
    for d in range(1, n + 1):
        if a[d] == 0:
            continue
        e_max = n // d
        out[d::d] += a[d] * b[1 : e_max + 1]
    return out


def combination_coefficients(
    P: CombinationPolynomial, family: Sequence[EulerFunction], n_max: int
) -> np.ndarray:
    """Dirichlet coefficients of the combination up to n_max (index 0 unused)."""
    n_max = int(n_max)
    base = []
    for F in family:
        c = np.zeros(n_max + 1, dtype=np.complex128)
        for n in range(1, n_max + 1):
            c[n] = F.dirichlet_coeff(n)
        base.append(c)
    unit = np.zeros(n_max + 1, dtype=np.complex128)
    unit[1] = 1.0
    total = np.zeros(n_max + 1, dtype=np.complex128)
    for D, alphas in P.terms:
        term = unit.copy()
        for j, a in enumerate(alphas):
            for _ in range(a):
                term = _dirichlet_convolve(term, base[j])
        coeff = np.zeros(n_max + 1, dtype=np.complex128)
        for n, c in D.terms:
            if n <= n_max:
                coeff[n] = coeff[n] + c
        total += _dirichlet_convolve(coeff, term)
    return total


def eval_twisted_combination(
    P: CombinationPolynomial,
    family: Sequence[EulerFunction],
    phi: TwistFunction,
    s: complex,
    n_max: int = 50_000,
) -> tuple[complex, float]:
    """Twisted Dirichlet series value  sum a(n) phi(n) n^-s  with tail bound.

    The twist acts coefficientwise; the tail bound compares the absolute
    coefficients against divisor-function growth, so it requires every
    family member to have |a(p)| <= 1 (characters do).
    """
    s = complex(s)
    if s.real <= 1:
        raise analytic.DomainError("twisted evaluation needs Re(s) > 1")
    if any(F.K > 1 + 1e-12 for F in family):
        raise ValueError("certified tail requires coefficient bound K <= 1")
    a = combination_coefficients(P, family, n_max)
    phiv = phi.phi_vector(n_max)
    n = np.arange(n_max + 1, dtype=np.float64)
    n[0] = 1.0
    value = complex(np.sum(a[1:] * phiv[1:] * np.exp(-s * np.log(n[1:]))))
    sigma = s.real
    r_max = max(sum(al) for _, al in P.terms)
    dr = np.zeros(n_max + 1, dtype=np.complex128)
    dr[1:] = 1.0
    ones = dr.copy()
    for _ in range(r_max - 1):
        dr = _dirichlet_convolve(dr, ones)
    tail = 0.0
    for D, _ in P.terms:
        zr = float(_zeta_real(sigma)) ** r_max
        dr_partial = float(np.sum(dr[1:].real * np.exp(-sigma * np.log(n[1:]))))
        tail += D.l1_at(sigma) * max(zr - dr_partial, 0.0)
    return value, tail


# ---------------------------------------------------------------------------
# End-to-end synthesis


@dataclass
class SynthesisConfig:
    y: float = 10.5
    prime_cap: int = 1_000_000
    m: int = 4
    band: tuple = (1.02, 1.12)
    t0_range: tuple = (0.0, 60.0)
    tol: float = 1e-7
    rect_width: float = 0.02
    rect_height: float = 1.0
    zero_scan_window: float = 400.0
    max_scan_windows: int = 8
    scan_step: float = 0.02
    lift_prime_cap: int = 30
    lift_grid_step: float = 0.01
    eval_budget: float = 1e-9
    rng_seed: int = 23
    orthogonality_xmax: float = 1e7


@dataclass
class MonomialVerdict:
    coefficient_zeros: list  # zeros of the single coefficient with Re > 1
    note: str = ""


@dataclass
class SynthesisOutcome:
    verdict: str  # "monomial" | "zero"
    monomial: Optional[MonomialVerdict] = None
    sigma0: Optional[float] = None
    t0: Optional[float] = None
    lift_t: Optional[float] = None
    twist: Optional[TwistFunction] = None
    twisted_value: Optional[complex] = None
    root_identity_value: Optional[complex] = None
    root: Optional[np.ndarray] = None
    R: Optional[float] = None
    eta: Optional[float] = None
    certificate: Optional[ZeroCertificate] = None
    zero_at_lift: Optional[complex] = None
    assignment: Optional[object] = None
    trace: dict = field(default_factory=dict)


def _coefficient_zero_scan(D: PFiniteSeries) -> MonomialVerdict:
    """Zeros with Re > 1 of a single-prime coefficient polynomial."""
    primes = sorted(D.support_primes)
    if len(primes) != 1:
        return MonomialVerdict(
            coefficient_zeros=[],
            note="coefficient supported on several primes; zeros not enumerated",
        )
    p = primes[0]
    deg = max(round(math.log(n, p)) for n, _ in D.terms)
    coeffs = np.zeros(deg + 1, dtype=np.complex128)
    for n, c in D.terms:
        coeffs[round(math.log(n, p))] += c
    if np.max(np.abs(coeffs[1:]), initial=0.0) == 0:
        return MonomialVerdict(coefficient_zeros=[], note="constant coefficient")
    roots = np.roots(coeffs[::-1])
    zeros = []
    for x in roots:
        if 0 < abs(x) < 1.0 / p:
            s = complex(-np.log(x) / math.log(p))
            zeros.append(s)
    return MonomialVerdict(
        coefficient_zeros=zeros,
        note=f"coefficient is a polynomial in {p}^-s",
    )


def _tail_products(
    family: Sequence[EulerFunction], sigma: float, primes: np.ndarray
) -> np.ndarray:
    """prod_{p > cap} F_{j,p}(sigma), exactly, via the L-value route."""
    out = np.empty(len(family), dtype=np.complex128)
    for j, F in enumerate(family):
        if F.character is None:
            raise ValueError("exact tail products need character members")
        out[j] = np.exp(complex(truncated_euler_log_tail(sigma, F.character, primes)))
    return out


def synthesize_zero(
    P: CombinationPolynomial,
    family: Sequence[EulerFunction],
    table: PrimeTable,
    config: Optional[SynthesisConfig] = None,
    evaluator: Optional[Callable[[np.ndarray], np.ndarray]] = None,
) -> SynthesisOutcome:
    """Monomial verdict, or a twisted zero at sigma_0 plus a certified
    genuine zero of the combination at height t with Re = sigma_0.

    Stages: orthogonality audit; head shift; coefficient displacement to
    1 + i t_0; annulus root; continuation across the band; zero hunt
    seeded by phase alignment at the heavy primes; Euler-target solve with
    exact tail correction; twist assembly; two-sided verification; winding
    certificate.
    """
    config = config or SynthesisConfig()
    selberg = estimate_selberg_matrix(
        family, table, x_max=min(config.orthogonality_xmax, table.limit)
    )
    selberg.check_family_orthogonal()

    if P.is_monomial:
        return SynthesisOutcome(
            verdict="monomial", monomial=_coefficient_zero_scan(P.terms[0][0])
        )

    shifted = shift_polynomial(P, family, config.y, table)
    t0 = find_t0(shifted, config.t0_range)
    x0, root_resid, R = annulus_root(shifted, complex(1.0, t0), seed=config.rng_seed)

    band_lo, band_hi = config.band
    sigma_grid = np.linspace(1.0, band_hi, max(int((band_hi - 1.0) / 1e-3), 40) + 1)
    path = continue_root_in_sigma(shifted, x0, t0, sigma_grid, R)

    f_eval = evaluator if evaluator is not None else CombinationEvaluator(P, family)
    budget = getattr(f_eval, "error_budget", config.eval_budget)

    # feasibility along the band: the Euler targets are the continued roots
    # divided by the exact tail products; keep sigma where the log targets
    # fit inside the truncated prime mass
    solver_primes = table.in_range(config.y, config.prime_cap)
    feasible: dict = {}
    for sig, z in path:
        if sig < band_lo:
            continue
        cfg = SolverConfig(
            N=P.N,
            y=config.y,
            sigma=float(sig),
            m=config.m,
            prime_cap=config.prime_cap,
            tol=config.tol,
            rng_seed=config.rng_seed,
        )
        ctx = FamilyContext.build(family, table, cfg)
        tails = _tail_products(family, float(sig), solver_primes)
        targets = z / tails
        w = np.log(targets)
        if ctx.support_margin(w) > 0.05 * ctx.mass:
            feasible[float(sig)] = (ctx, cfg, targets)
    if not feasible:
        raise CapacityError(
            "no sigma in the band supports the continued root as an Euler "
            "target; raise the prime cap or narrow the band"
        )
    eta = max(feasible) - 1.0
    sig_lo, sig_hi = min(feasible), max(feasible)

    # pilot twist at mid-band for lift seeding
    sig_pilot = min(feasible, key=lambda s: abs(s - 0.5 * (sig_lo + sig_hi)))
    ctx_p, cfg_p, targets_p = feasible[sig_pilot]
    cfg_p.R = max(
        2.0,
        1.1 * float(np.max(np.abs(targets_p))),
        1.1 / float(np.min(np.abs(targets_p))),
    )
    pilot = hit_euler_targets(ctx_p, cfg_p, targets_p)
    pilot_twist = twist_from_phases(pilot, t0, config.y)

    # hunt zeros of the combination in the validated sub-band
    heavy = [int(p) for p in table.in_range(0, config.lift_prime_cap)]
    zero = None
    windows_tried = 0
    t_base = 0.0
    while zero is None and windows_tried < config.max_scan_windows:
        window = (t_base, t_base + config.zero_scan_window)
        lift = lift_target_from_twist(
            pilot_twist, heavy, window, sig_pilot, K=max(F.K for F in family)
        )
        cands = kronecker_lift(lift, step=config.lift_grid_step, top_k=20)
        for t_cand, _ in cands:
            z = newton_polish(f_eval, complex(sig_pilot, t_cand), tol=100 * budget)
            if z is not None and sig_lo < z.real < sig_hi and window[0] <= z.imag <= window[1]:
                zero = z
                break
        if zero is None:
            found = find_zeros_in_band(
                f_eval, (sig_lo, sig_hi), window, coarse_step=config.scan_step
            )
            if found:
                zero = found[0]
        t_base += config.zero_scan_window
        windows_tried += 1
    if zero is None:
        raise SearchError(
            "no zero of the combination found in the validated band; "
            "widen the scan window"
        )

    sigma0 = float(zero.real)
    lift_t = float(zero.imag)

    # final root and Euler-target solve at sigma0
    path0 = continue_root_in_sigma(
        shifted, path[0][1], t0, np.linspace(1.0, sigma0, 200), R
    )
    z_root = path0[-1][1]
    cfg0 = SolverConfig(
        N=P.N,
        y=config.y,
        sigma=sigma0,
        m=config.m,
        prime_cap=config.prime_cap,
        tol=config.tol,
        rng_seed=config.rng_seed,
    )
    ctx0 = FamilyContext.build(family, table, cfg0)
    tails0 = _tail_products(family, sigma0, solver_primes)
    targets0 = z_root / tails0
    cfg0.R = max(
        2.0,
        1.1 * float(np.max(np.abs(targets0))),
        1.1 / float(np.min(np.abs(targets0))),
    )
    assignment = hit_euler_targets(ctx0, cfg0, targets0)
    twist = twist_from_phases(assignment, t0, config.y)

    # two-sided verification of the twisted zero
    coeffs0 = shifted.coeff_values(complex(sigma0, t0))
    root_identity = complex(
        sum(
            c * np.prod([z_root[j] ** a for j, a in enumerate(al)])
            for c, (_, al) in zip(coeffs0, shifted.base.terms)
        )
    )
    achieved = np.exp(ctx0.euler_log_sum(assignment.t)) * tails0
    head_logs = np.array(
        [shifted.head_log(j, complex(sigma0, t0)) for j in range(P.N)]
    )
    fj_twisted = np.exp(head_logs) * achieved
    twisted_value = complex(
        sum(
            complex(D.eval(complex(sigma0, t0)))
            * np.prod([fj_twisted[j] ** a for j, a in enumerate(al)])
            for D, al in P.terms
        )
    )

    # certificate around the located zero
    rect = Rectangle(
        sigma1=sigma0 - config.rect_width / 2,
        sigma2=sigma0 + config.rect_width / 2,
        A=lift_t - config.rect_height / 2,
        T=config.rect_height,
    )
    provenance = {
        "sigma0": sigma0,
        "t0": t0,
        "lift_t": lift_t,
        "twist_digest": twist.digest(),
        "euler_residual": float(np.max(assignment.euler_residuals)),
        "twisted_value": abs(twisted_value),
    }
    certificate = count_zeros_rectangle(
        f_eval, rect, step=config.scan_step, error_budget=budget, provenance=provenance
    )

    zero_val = complex(np.asarray(f_eval(np.array([complex(sigma0, lift_t)])))[0])
    return SynthesisOutcome(
        verdict="zero",
        sigma0=sigma0,
        t0=t0,
        lift_t=lift_t,
        twist=twist,
        twisted_value=twisted_value,
        root_identity_value=root_identity,
        root=z_root,
        R=R,
        eta=eta,
        certificate=certificate,
        zero_at_lift=zero_val,
        assignment=assignment,
        trace={
            "root_residual_at_t0": root_resid,
            "windows_scanned": windows_tried,
            "validated_band": (sig_lo, sig_hi),
        },
    )
