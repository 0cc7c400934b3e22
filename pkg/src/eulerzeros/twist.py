"""Unimodular twists, lifts to genuine zeros, and winding-number certificates.

A completely multiplicative twist phi is stored through real phases t_p
(phi(p) = p^{-i t_p}), never as approximate unimodular complexes, so
|phi(n)| = 1 identically.  A zero of the twisted series at real sigma_0 is
transferred to a genuine zero of the original function near some height t
by phase alignment at the heavy primes followed by a certified winding
count over a rectangle.
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .analytic import DomainError
from .phases import PhaseAssignment
from .primes import PrimeTable


class InconclusiveError(RuntimeError):
    """Boundary modulus too close to the evaluation error budget."""


class StepRefinementError(RuntimeError):
    """Boundary sampling could not satisfy the argument-step criterion."""


# ---------------------------------------------------------------------------
# Twists


@dataclass
class TwistFunction:
    """phi(p) = p^{-i t_p}: t_0 up to y, solver phases in (y, P], 0 beyond."""

    t0: float
    y: float
    assignment: Optional[PhaseAssignment] = None

    @property
    def prime_cap(self) -> float:
        return self.assignment.prime_cap if self.assignment is not None else self.y

    def phase_at_primes(self, primes: np.ndarray) -> np.ndarray:
        ps = np.asarray(primes, dtype=np.int64)
        t = np.zeros(len(ps), dtype=np.float64)
        t[ps <= self.y] = self.t0
        if self.assignment is not None:
            a = self.assignment
            mid = (ps > self.y) & (ps <= a.prime_cap)
            if np.any(mid):
                idx = np.searchsorted(a.primes, ps[mid])
                ok = (idx < len(a.primes)) & (a.primes[np.minimum(idx, len(a.primes) - 1)] == ps[mid])
                vals = np.zeros(int(mid.sum()))
                vals[ok] = a.t[idx[ok]]
                t[mid] = vals
        return t

    def phi_at_primes(self, primes: np.ndarray) -> np.ndarray:
        ps = np.asarray(primes, dtype=np.int64)
        t = self.phase_at_primes(ps)
        return np.exp(-1j * t * np.log(ps.astype(np.float64)))

    def phi_vector(self, n_max: int) -> np.ndarray:
        """phi(1..n_max) via a smallest-prime-factor sieve; index 0 unused.

        Phases add along factorizations, so complete multiplicativity is
        exact by construction.
        """
        n_max = int(n_max)
        spf = np.zeros(n_max + 1, dtype=np.int64)
        for p in range(2, n_max + 1):
            if spf[p] == 0:
                spf[p::p][spf[p::p] == 0] = p
        primes = np.array([p for p in range(2, n_max + 1) if spf[p] == p], dtype=np.int64)
        t_prime = np.zeros(n_max + 1)
        t_prime[primes] = self.phase_at_primes(primes)
        phase = np.zeros(n_max + 1)
        logn = np.zeros(n_max + 1)
        logp_arr = np.zeros(n_max + 1)
        logp_arr[primes] = np.log(primes.astype(np.float64))
        for n in range(2, n_max + 1):
            p = spf[n]
            phase[n] = phase[n // p] + t_prime[p] * logp_arr[p]
        out = np.exp(-1j * phase)
        out[0] = 0.0
        return out

    def phi_at(self, n: int) -> complex:
        phase = 0.0
        m = int(n)
        d = 2
        while d * d <= m:
            while m % d == 0:
                phase += self.phase_at_primes(np.array([d]))[0] * math.log(d)
                m //= d
            d += 1
        if m > 1:
            phase += self.phase_at_primes(np.array([m]))[0] * math.log(m)
        return complex(np.exp(-1j * phase))

    def digest(self) -> str:
        h = hashlib.sha256()
        h.update(f"{self.t0!r},{self.y!r}".encode())
        if self.assignment is not None:
            h.update(np.ascontiguousarray(self.assignment.primes).tobytes())
            h.update(np.round(self.assignment.t, 14).tobytes())
        return h.hexdigest()[:16]


def twist_from_phases(
    phases: Optional[PhaseAssignment], t0: float, y: float
) -> TwistFunction:
    """Assemble the pipeline twist: t_p = t0 at p <= y, solver phases above."""
    if phases is not None and phases.y > y + 1e-9:
        raise ValueError("phase assignment does not cover (y, P]")
    return TwistFunction(t0=float(t0), y=float(y), assignment=phases)


# ---------------------------------------------------------------------------
# Rectangles and certificates


@dataclass
class Rectangle:
    sigma1: float
    sigma2: float
    A: float
    T: float

    def __post_init__(self):
        if not (1 < self.sigma1 < self.sigma2):
            raise ValueError("rectangle must satisfy 1 < sigma1 < sigma2")
        if self.T <= 0:
            raise ValueError("rectangle height must be positive")

    def corners(self) -> list:
        return [
            complex(self.sigma1, self.A),
            complex(self.sigma2, self.A),
            complex(self.sigma2, self.A + self.T),
            complex(self.sigma1, self.A + self.T),
        ]

    def contains(self, s: complex, margin: float = 0.0) -> bool:
        return (
            self.sigma1 + margin < s.real < self.sigma2 - margin
            and self.A + margin < s.imag < self.A + self.T - margin
        )

    def to_json_dict(self) -> dict:
        return {
            "sigma1": self.sigma1,
            "sigma2": self.sigma2,
            "A": self.A,
            "T": self.T,
        }


@dataclass
class ZeroCertificate:
    rectangle: Rectangle
    winding: int
    boundary_min_modulus: float
    evaluation_step: float
    error_budget: float
    provenance: dict = field(default_factory=dict)

    @property
    def soundness_ok(self) -> bool:
        if self.winding >= 1:
            return self.boundary_min_modulus > 10 * self.error_budget
        return True

    def to_json_dict(self) -> dict:
        return {
            "rect": self.rectangle.to_json_dict(),
            "winding": self.winding,
            "boundary_min": self.boundary_min_modulus,
            "step": self.evaluation_step,
            "error_budget": self.error_budget,
            "provenance": self.provenance,
        }


def _boundary_params(rect: Rectangle, step: float) -> np.ndarray:
    """Fractional arclength parameters of the initial boundary sampling."""
    c = rect.corners()
    lengths = [abs(c[(i + 1) % 4] - c[i]) for i in range(4)]
    total = sum(lengths)
    params = [0.0]
    acc = 0.0
    for i in range(4):
        n = max(2, int(math.ceil(lengths[i] / step)))
        edge = acc + lengths[i] * np.arange(1, n + 1) / n
        params.extend((edge / total).tolist())
        acc += lengths[i]
    params = np.array(params)
    params[-1] = 1.0
    return params


def _boundary_point(rect: Rectangle, frac: np.ndarray) -> np.ndarray:
    c = rect.corners()
    lengths = np.array([abs(c[(i + 1) % 4] - c[i]) for i in range(4)])
    cum = np.concatenate([[0.0], np.cumsum(lengths)])
    total = cum[-1]
    s = np.asarray(frac) * total
    out = np.empty(len(s), dtype=np.complex128)
    for i in range(4):
        on = (s >= cum[i] - 1e-15) & (s <= cum[i + 1] + 1e-15)
        lam = (s[on] - cum[i]) / lengths[i]
        out[on] = c[i] + lam * (c[(i + 1) % 4] - c[i])
    return out


def count_zeros_rectangle(
    f_vec: Callable[[np.ndarray], np.ndarray],
    rect: Rectangle,
    step: float,
    error_budget: float,
    provenance: Optional[dict] = None,
    max_refine_depth: int = 14,
    max_points: int = 400_000,
) -> ZeroCertificate:
    """Winding number of f along the rectangle boundary, soundness-gated.

    Consecutive boundary samples must differ in argument by < pi/2
    (automatic midpoint refinement), and the boundary modulus must clear
    ten times the evaluation error budget, otherwise the count is refused
    as inconclusive rather than reported wrong.
    """
    fracs = _boundary_params(rect, step)
    pts = _boundary_point(rect, fracs)
    vals = np.asarray(f_vec(pts), dtype=np.complex128)

    for depth in range(max_refine_depth + 1):
        bmin = float(np.min(np.abs(vals)))
        if bmin <= 10 * error_budget:
            raise InconclusiveError(
                f"boundary modulus {bmin:.3g} within 10x the evaluation "
                f"budget {error_budget:.3g}; no certificate"
            )
        darg = np.angle(vals[1:] / vals[:-1])
        bad = np.abs(darg) >= math.pi / 2
        if not np.any(bad):
            winding_float = float(np.sum(darg)) / (2 * math.pi)
            winding = int(round(winding_float))
            if abs(winding_float - winding) > 0.05:
                raise StepRefinementError(
                    f"argument variation {winding_float:.4f} is not near an "
                    "integer; sampling is inconsistent"
                )
            return ZeroCertificate(
                rectangle=rect,
                winding=winding,
                boundary_min_modulus=bmin,
                evaluation_step=step / (2**depth),
                error_budget=error_budget,
                provenance=provenance or {},
            )
        if depth == max_refine_depth or len(fracs) > max_points:
            break
        mid_fracs = (fracs[:-1][bad] + fracs[1:][bad]) / 2
        mid_vals = np.asarray(f_vec(_boundary_point(rect, mid_fracs)))
        fracs = np.concatenate([fracs, mid_fracs])
        order = np.argsort(fracs)
        vals = np.concatenate([vals, mid_vals])[order]
        fracs = fracs[order]
    raise StepRefinementError(
        "argument step criterion unsatisfied at maximum refinement depth"
    )


@dataclass
class WindowCount:
    index: int
    A: float
    count: Optional[int]  # None = inconclusive, excluded from the slope
    certificate: Optional[ZeroCertificate] = None


@dataclass
class ScanResult:
    windows: list
    slope: float

    @property
    def counts(self) -> list:
        return [w.count for w in self.windows]


def zero_density_scan(
    f_vec: Callable[[np.ndarray], np.ndarray],
    band: tuple,
    A0: float,
    T0: float,
    n_windows: int,
    step: float,
    error_budget: float,
) -> ScanResult:
    """Certified zero counts over stacked windows [A0 + k T0, A0 + (k+1) T0].

    Inconclusive windows are flagged and excluded from the cumulative
    slope (zeros per window)."""
    sigma1, sigma2 = band
    windows = []
    for k in range(n_windows):
        A = A0 + k * T0
        rect = Rectangle(sigma1=sigma1, sigma2=sigma2, A=A, T=T0)
        try:
            cert = count_zeros_rectangle(
                f_vec, rect, step, error_budget, provenance={"window": k}
            )
            windows.append(WindowCount(index=k, A=A, count=cert.winding, certificate=cert))
        except (InconclusiveError, StepRefinementError):
            windows.append(WindowCount(index=k, A=A, count=None))
    good = [(w.index, w.count) for w in windows if w.count is not None]
    if len(good) >= 2:
        idx = np.array([g[0] for g in good], dtype=np.float64)
        cum = np.cumsum([g[1] for g in good])
        slope = float(np.polyfit(idx, cum, 1)[0])
    else:
        slope = float("nan")
    return ScanResult(windows=windows, slope=slope)


# ---------------------------------------------------------------------------
# Kronecker-style lift


@dataclass
class LiftTarget:
    """Phase targets t * log p = theta_p (mod 2pi) with per-prime weights."""

    thetas: dict  # p -> theta in [0, 2pi)
    window: tuple  # (A, B)
    weights: dict  # p -> weight

    def __post_init__(self):
        for p, th in self.thetas.items():
            if not (0 <= th < 2 * math.pi + 1e-12):
                raise ValueError(f"theta at p={p} outside [0, 2pi)")


def lift_target_from_twist(
    twist: TwistFunction,
    primes: Sequence[int],
    window: tuple,
    sigma0: float,
    K: float = 1.0,
) -> LiftTarget:
    """Targets theta_p = t_p log p mod 2pi at the chosen heavy primes,
    weighted by K p^-sigma0 so small primes dominate the alignment."""
    ps = np.asarray(sorted(primes), dtype=np.int64)
    t = twist.phase_at_primes(ps)
    theta = np.mod(t * np.log(ps.astype(np.float64)), 2 * math.pi)
    weights = K * ps.astype(np.float64) ** (-sigma0)
    return LiftTarget(
        thetas={int(p): float(th) for p, th in zip(ps, theta)},
        window=window,
        weights={int(p): float(w) for p, w in zip(ps, weights)},
    )


def kronecker_lift(
    target: LiftTarget, step: float, top_k: int = 12, refine_factor: int = 64
) -> list:
    """Candidates t in the window minimizing the weighted max phase mismatch.

    Coarse grid at the given step, then local re-gridding around the best
    minima; candidates are returned sorted by discrepancy
    max_p weight_p * dist(t log p - theta_p mod 2pi).
    """
    A, B = target.window
    if not B > A:
        raise DomainError("lift window is empty")
    ps = np.array(sorted(target.thetas), dtype=np.float64)
    theta = np.array([target.thetas[int(p)] for p in ps])
    w = np.array([target.weights[int(p)] for p in ps])
    logp = np.log(ps)

    def scores(ts: np.ndarray) -> np.ndarray:
        d = ts[:, None] * logp[None, :] - theta[None, :]
        d = np.abs(np.mod(d + math.pi, 2 * math.pi) - math.pi)
        return (w[None, :] * d).max(axis=1)

    ts = np.arange(A, B + step, step)
    sc = scores(ts)
    order = np.argsort(sc)
    cands = []
    for i in order[: max(top_k * 3, 30)]:
        t0 = ts[i]
        fine = np.linspace(t0 - step, t0 + step, 2 * refine_factor + 1)
        fine = fine[(fine >= A) & (fine <= B)]
        fs = scores(fine)
        j = int(np.argmin(fs))
        cands.append((float(fine[j]), float(fs[j])))
    cands.sort(key=lambda c: c[1])
    # keep well-separated candidates
    out = []
    for t, s in cands:
        if all(abs(t - t2) > step / 2 for t2, _ in out):
            out.append((t, s))
        if len(out) >= top_k:
            break
    return out


# ---------------------------------------------------------------------------
# Zero hunting in a band


def newton_polish(
    f_vec: Callable[[np.ndarray], np.ndarray],
    s0: complex,
    tol: float = 1e-11,
    max_iter: int = 40,
    h: float = 1e-6,
) -> Optional[complex]:
    """Complex Newton iteration with central finite differences."""
    s = complex(s0)
    for _ in range(max_iter):
        pts = np.array([s, s + h, s - h, s + 1j * h, s - 1j * h])
        vals = np.asarray(f_vec(pts))
        f0 = complex(vals[0])
        if abs(f0) < tol:
            return s
        df = (vals[1] - vals[2]) / (2 * h)
        if df == 0:
            return None
        step = -f0 / df
        if abs(step) > 1.0:
            step = step / abs(step)
        s = s + step
    pts = np.array([s])
    if abs(complex(np.asarray(f_vec(pts))[0])) < tol:
        return s
    return None


def find_zeros_in_band(
    f_vec: Callable[[np.ndarray], np.ndarray],
    band: tuple,
    t_range: tuple,
    coarse_step: float = 0.05,
    dip_quantile: float = 0.05,
    newton_tol: float = 1e-11,
    sigma_margin: float = 1e-4,
    n_lines: int = 1,
) -> list:
    """Zeros of f with real part inside the band and height in the range.

    Scans |f| along one or more horizontal lines through the band,
    polishes every local dip by Newton, keeps converged zeros inside the
    (slightly shrunk) band, deduplicated and sorted by height.
    """
    sigma1, sigma2 = band
    t_lo, t_hi = t_range
    lines = [
        sigma1 + (sigma2 - sigma1) * (i + 1) / (n_lines + 1) for i in range(n_lines)
    ]
    ts = np.arange(t_lo, t_hi, coarse_step)
    if len(ts) < 8:
        ts = np.linspace(t_lo, t_hi, 16)
    zeros: list = []
    for sig_mid in lines:
        vals = np.abs(np.asarray(f_vec(sig_mid + 1j * ts)))
        thresh = np.quantile(vals, dip_quantile)
        dips = np.nonzero(
            (vals <= np.roll(vals, 1))
            & (vals <= np.roll(vals, -1))
            & (vals <= thresh * 3)
        )[0]
        for i in dips:
            if i == 0 or i == len(ts) - 1:
                continue
            z = newton_polish(f_vec, complex(sig_mid, ts[i]), tol=newton_tol)
            if z is None:
                continue
            if not (sigma1 + sigma_margin < z.real < sigma2 - sigma_margin):
                continue
            if not (t_lo <= z.imag <= t_hi):
                continue
            if all(abs(z - z2) > 1e-6 for z2 in zeros):
                zeros.append(z)
    zeros.sort(key=lambda z: z.imag)
    return zeros
