"""Phase systems over primes: hitting prescribed values with unimodular twists.

Two routes solve  sum_{p>y} a_j(p) p^{-(sigma+i t_p)} = z_j:

* a constructive route mirroring the direction-set machinery: partition
  the primes above y into aligned subsets, form the induced matrices,
  decompose the target over unimodular column rotations, and read the
  phases off a closed-form table;
* a direct route: damped Gauss-Newton on the phases themselves, seeded
  from the constructive output.

At truncation scale the total prime mass sum p^-sigma is a hard budget.
The classical prescription gives every subset Dirichlet-mass fraction
delta/(2mN)^2 of the universe, which supports targets only of size
O(delta * mass / m N); order-one targets need the prescription scaled up,
so the per-set fraction carries an explicit scale factor (1 = classical,
exercised by the partition and certificate tests) that the solver sizes
from the target and records in the assignment.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .density import PrimeSubset, direction_delta, subset_with_density
from .euler import EulerFunction, OrthogonalityError, SelbergMatrixEstimate
from .primes import PrimeTable


class CapacityError(ValueError):
    """The truncated prime mass cannot support the requested target."""


class DecompositionError(RuntimeError):
    """Unimodular decomposition failed to converge."""


class ConstructionError(RuntimeError):
    """Partition construction missed its density prescription."""


class WindowError(ValueError):
    """A certificate failed at this sigma; shrink the window."""


class SolverStallError(RuntimeError):
    pass


@dataclass
class SolverConfig:
    """Knobs for the phase solver.

    ``m`` is the number of matrix pairs (the construction uses 2m
    matrices).  ``mode`` picks the decomposition layout: "two_stage"
    solves target and remainder with separate matrix batches, "joint"
    folds the remainder into one decomposition over all 2m matrices,
    "auto" picks by a support precheck.
    """

    N: int
    y: float = 10.0
    sigma: float = 1.01
    rho: float = 2.0
    R: float = 2.0
    m: int = 4
    prime_cap: int = 100_000
    tol: float = 1e-6
    eta: float = 0.25
    rng_seed: int = 7
    mode: str = "auto"
    mass_fraction: float = 0.92  # adaptive total set allocation
    k1_weight: float = 3.0
    decompose_restarts: int = 20
    decompose_tol: float = 1e-10  # relative to |tau|
    max_refine_iter: int = 60

    def __post_init__(self):
        if not (1 < self.sigma <= 1 + self.eta):
            raise ValueError(
                f"sigma={self.sigma} outside the validated window (1, {1 + self.eta}]"
            )
        if self.prime_cap <= self.y:
            raise ValueError("prime cap must exceed y")
        if self.tol <= 0 or self.rho < 1 or self.R < 1:
            raise ValueError("need tol > 0 and rho, R >= 1")


@dataclass
class FamilyContext:
    """Per-(family, window) precomputation shared by the solver stages."""

    family: list
    table: PrimeTable
    y: float
    prime_cap: int
    sigma: float
    primes: np.ndarray = field(repr=False)
    logp: np.ndarray = field(repr=False)
    pw: np.ndarray = field(repr=False)
    rows: np.ndarray = field(repr=False)  # (N, n) coefficients a_j(p)
    K: np.ndarray = field(repr=False)
    m_diag: np.ndarray = field(repr=False)

    @classmethod
    def build(
        cls,
        family: Sequence[EulerFunction],
        table: PrimeTable,
        config: SolverConfig,
        m_diag: Optional[Sequence[float]] = None,
        selberg: Optional[SelbergMatrixEstimate] = None,
    ) -> "FamilyContext":
        if selberg is not None:
            selberg.check_family_orthogonal()
        labels = [F.label for F in family]
        if len(set(labels)) != len(labels):
            raise OrthogonalityError("family contains repeated members")
        primes = table.in_range(config.y, config.prime_cap)
        if len(primes) == 0:
            raise CapacityError("no primes in (y, prime_cap]")
        logp = np.log(primes.astype(np.float64))
        pw = np.exp(-config.sigma * logp)
        rows = np.stack([np.asarray(F.prime_coeff_vec(primes)) for F in family])
        if m_diag is None:
            m_diag = [getattr(F, "m_self", None) or 1.0 for F in family]
        return cls(
            family=list(family),
            table=table,
            y=config.y,
            prime_cap=config.prime_cap,
            sigma=config.sigma,
            primes=primes,
            logp=logp,
            pw=pw,
            rows=rows,
            K=np.array([F.K for F in family], dtype=np.float64),
            m_diag=np.asarray(m_diag, dtype=np.float64),
        )

    @property
    def N(self) -> int:
        return len(self.family)

    @property
    def mass(self) -> float:
        return float(self.pw.sum())

    def index_of(self, primes: np.ndarray) -> np.ndarray:
        return np.searchsorted(self.primes, primes)

    def linear_sum(self, t: np.ndarray) -> np.ndarray:
        """sum_p a_j(p) p^-sigma e^{-i t_p log p} per row j."""
        rot = np.exp(-1j * t * self.logp)
        return (self.rows * (self.pw * rot)).sum(axis=1)

    def euler_log_sum(self, t: np.ndarray) -> np.ndarray:
        """sum_p log F_{j,p}(sigma + i t_p) per row j."""
        rot = np.exp(-1j * t * self.logp)
        out = np.empty(self.N, dtype=np.complex128)
        for j in range(self.N):
            x = self.rows[j] * self.pw * rot
            out[j] = np.sum(-np.log1p(-x))
        return out

    def higher_order_correction(self, t: np.ndarray) -> np.ndarray:
        """sum_p sum_{k>=2} b_j(p^k) p^{-k(sigma + i t_p)} per row j."""
        rot = np.exp(-1j * t * self.logp)
        out = np.empty(self.N, dtype=np.complex128)
        for j in range(self.N):
            x = self.rows[j] * self.pw * rot
            out[j] = np.sum(-np.log1p(-x) - x)
        return out

    def support_margin(self, z: np.ndarray, n_dirs: int = 128, seed: int = 0) -> float:
        """min over sampled dual directions of (reachable support - needed).

        The closure of the reachable set {sum_p a(p) p^-sigma e^{i phase_p}}
        is convex with support function sum_p p^-sigma |<a(p), theta>|; a
        positive margin over a dense direction sample certifies the target
        is inside, up to sampling resolution.
        """
        rng = np.random.default_rng(seed)
        thetas = rng.standard_normal((n_dirs, 2 * self.N))
        thetas /= np.linalg.norm(thetas, axis=1, keepdims=True)
        theta_c = thetas[:, : self.N] + 1j * thetas[:, self.N :]
        proj = np.abs(theta_c.conj() @ self.rows)  # (n_dirs, n)
        support = proj @ self.pw
        need = (theta_c.conj() @ z).real
        return float(np.min(support - need))


# ---------------------------------------------------------------------------
# Partition of the primes above y


@dataclass
class PartitionSet:
    i: int
    k: int
    u: np.ndarray
    primes: np.ndarray = field(repr=False)
    eps: np.ndarray = field(repr=False)
    prescribed_frac: float = 0.0  # target Dirichlet-mass fraction of the universe
    achieved_frac: float = 0.0


@dataclass
class Partition:
    sets: list
    leftover_primes: np.ndarray
    leftover_omega: np.ndarray
    delta: float
    m: int
    N: int
    mass_scale: float
    universe_mass: float

    def set_for(self, i: int, k: int) -> PartitionSet:
        for s in self.sets:
            if s.i == i and s.k == k:
                return s
        raise KeyError((i, k))

    def disjoint(self) -> bool:
        seen: set = set()
        for s in self.sets:
            block = set(int(p) for p in s.primes)
            if seen & block:
                return False
            seen |= block
        return not (seen & set(int(p) for p in self.leftover_primes))


def _null_direction(v_rows: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """Unit u with sum_j v[l, j] u_j = 0 for every previous column l."""
    n = v_rows.shape[1]
    if v_rows.shape[0] == 0:
        u = rng.standard_normal(n) + 1j * rng.standard_normal(n)
        return u / np.linalg.norm(u)
    _, sv, vh = np.linalg.svd(v_rows)
    rank = int(np.sum(sv > max(float(sv[0]), 1e-300) * 1e-12)) if len(sv) else 0
    if rank >= n:
        raise ConstructionError("no orthogonal direction left for the next column")
    u = vh[rank:][0].conj()
    return u / np.linalg.norm(u)


def build_partition(
    ctx: FamilyContext,
    config: SolverConfig,
    mass_scale: float = 1.0,
    target_direction: Optional[np.ndarray] = None,
    k1_weight: Optional[float] = None,
    density_tolerance: float = 0.25,
) -> Partition:
    """Partition the solver universe into 2m*N aligned subsets plus leftovers.

    Each subset lives inside the direction set of a unit vector u (first
    column: free choice, seeded random by default, optionally the target
    direction; later columns: u annihilating the previous column vectors),
    is extracted by index striding at the prescribed relative density, and
    carries the unimodular marks eps_p aligning its u-combination.

    ``mass_scale`` multiplies the classical per-set prescription
    delta/(2mN)^2; scale 1 reproduces the classical densities.
    """
    rng = np.random.default_rng(config.rng_seed)
    N, m = ctx.N, config.m
    two_mn_sq = (2 * m * N) ** 2
    delta = direction_delta(ctx.K, ctx.m_diag)
    scale = float(mass_scale)

    scaled_rows = ctx.rows / np.sqrt(ctx.m_diag)[:, None]
    universe_mass = ctx.mass
    remaining = np.ones(len(ctx.primes), dtype=bool)

    base_frac = delta / two_mn_sq
    k1w = (config.k1_weight if k1_weight is None else k1_weight) if scale != 1.0 else 1.0
    weights = np.array([k1w if k == 0 else 1.0 for k in range(N)])
    weights = weights * (N / weights.sum())  # mean 1, total unchanged

    sets = []
    for i in range(1, 2 * m + 1):
        v_cols: list = []
        for k in range(1, N + 1):
            if k == 1:
                if target_direction is not None:
                    u = np.asarray(target_direction, dtype=np.complex128)
                    u = u / np.linalg.norm(u)
                else:
                    u = rng.standard_normal(N) + 1j * rng.standard_normal(N)
                    u = u / np.linalg.norm(u)
            else:
                u = _null_direction(np.stack(v_cols), rng)
            combo = u @ scaled_rows
            q_mask = remaining & (np.abs(combo) >= 0.5)
            q_idx = np.nonzero(q_mask)[0]
            if len(q_idx) == 0:
                raise CapacityError(
                    f"direction set for block (i={i}, k={k}) is empty; "
                    "increase the prime cap"
                )
            q_mass = float(ctx.pw[q_idx].sum())
            d_tilde = q_mass / universe_mass  # upper-density surrogate at sigma
            frac = scale * base_frac * weights[k - 1]
            alpha = min(frac / d_tilde, 1.0)
            q_subset = PrimeSubset(ctx.primes[q_idx], descriptor=f"Q(i={i},k={k})")
            chosen = subset_with_density(q_subset, alpha)
            sel = q_idx[np.searchsorted(ctx.primes[q_idx], chosen.members)]
            if len(sel) == 0:
                raise CapacityError(
                    f"prescribed set (i={i}, k={k}) came out empty at the "
                    f"current prime cap (alpha={alpha:.3g})"
                )
            combo_sel = combo[sel]
            eps = np.conj(combo_sel) / np.abs(combo_sel)
            achieved = float(ctx.pw[sel].sum()) / universe_mass
            if alpha < 1.0 and abs(achieved - frac) > density_tolerance * frac:
                raise ConstructionError(
                    f"set (i={i}, k={k}) reached mass fraction {achieved:.3g}, "
                    f"prescribed {frac:.3g}"
                )
            remaining[sel] = False
            v = (two_mn_sq / universe_mass) * (
                (scaled_rows[:, sel] * (eps * ctx.pw[sel])).sum(axis=1)
            )
            v_cols.append(v)
            sets.append(
                PartitionSet(
                    i=i,
                    k=k,
                    u=u,
                    primes=ctx.primes[sel],
                    eps=eps,
                    prescribed_frac=frac,
                    achieved_frac=achieved,
                )
            )

    leftover_idx = np.nonzero(remaining)[0]
    omega = _greedy_signs(ctx.rows[:, leftover_idx], ctx.primes[leftover_idx])
    return Partition(
        sets=sets,
        leftover_primes=ctx.primes[leftover_idx],
        leftover_omega=omega,
        delta=delta,
        m=m,
        N=N,
        mass_scale=scale,
        universe_mass=universe_mass,
    )


def _greedy_signs(rows: np.ndarray, primes: np.ndarray) -> np.ndarray:
    """+-1 per prime, walking upward, each sign flipped against the running
    vector sum of a(p)/p; keeps every partial sum within one term size."""
    n = len(primes)
    omega = np.ones(n, dtype=np.int8)
    if n == 0:
        return omega
    vecs = (rows / primes.astype(np.float64)).T
    running = np.zeros(rows.shape[0], dtype=np.complex128)
    for r in range(n):
        v = vecs[r]
        if np.linalg.norm(running + v) > np.linalg.norm(running - v):
            omega[r] = -1
            running -= v
        else:
            running += v
    return omega


def bounded_remainder_signs(
    S: PrimeSubset,
    family: Sequence[EulerFunction],
    sigma_window: Sequence[float],
    scale_prefactor: float = 1.0,
) -> tuple[np.ndarray, float]:
    """Signs for an explicit subset plus the observed remainder bound C.

    C is the sup over the sigma window of the scaled remainder norm
    |prefactor * sum_p omega_p a(p) p^-sigma|_inf; deterministic stand-in
    for the random-signs convergence guarantee.
    """
    primes = S.members
    if len(primes) == 0:
        return np.ones(0, dtype=np.int8), 0.0
    rows = np.stack([F.prime_coeff_vec(primes) for F in family])
    omega = _greedy_signs(rows, primes)
    pv = primes.astype(np.float64)
    C = 0.0
    for sigma in sigma_window:
        w = (rows * (omega * pv ** (-float(sigma)))).sum(axis=1) * scale_prefactor
        C = max(C, float(np.max(np.abs(w))))
    return omega, C


# ---------------------------------------------------------------------------
# Matrix bundle


@dataclass
class MatrixBundle:
    matrices: list  # 2m arrays (N, N)
    norms: np.ndarray
    dets: np.ndarray
    gs_floors: np.ndarray  # per-matrix product of measured column projections
    remainder: np.ndarray  # scaled remainder vector w at the working sigma
    remainder_bound: float  # sup over the sigma window
    norm_bound_classical: float
    det_floor_classical: float
    classical_ok: bool


def assemble_matrices(
    ctx: FamilyContext,
    partition: Partition,
    sigma_window: Optional[Sequence[float]] = None,
) -> MatrixBundle:
    """Column vectors, matrices and their certificates at the working sigma.

    The measured certificate |det g_i| >= prod_k <v_ik, u_ik> *
    prod_j sqrt(m_j) is an identity-level consequence of Gram-Schmidt and
    the annihilating choice of directions, so it must hold whenever the
    construction is sound; the classical norm and determinant bounds are
    additionally enforced when the partition used the classical densities
    (mass_scale = 1).
    """
    N, m = partition.N, partition.m
    two_mn_sq = (2 * m * N) ** 2
    sqrt_m = np.sqrt(ctx.m_diag)

    matrices, norms, dets, floors = [], [], [], []
    for i in range(1, 2 * m + 1):
        cols, projections = [], []
        for k in range(1, N + 1):
            ps = partition.set_for(i, k)
            idx = ctx.index_of(ps.primes)
            scaled = (ctx.rows[:, idx] / sqrt_m[:, None]) * (ps.eps * ctx.pw[idx])
            v = (two_mn_sq / partition.universe_mass) * scaled.sum(axis=1)
            cols.append(v)
            projections.append(float(np.real(ps.u @ v)))
        V = np.stack(cols, axis=1)
        g = np.diag(sqrt_m) @ V
        matrices.append(g)
        norms.append(float(np.linalg.norm(g)))
        dets.append(abs(np.linalg.det(g)))
        floors.append(float(np.prod(projections)) * float(np.prod(sqrt_m)))

    norms_a, dets_a, floors_a = np.array(norms), np.array(dets), np.array(floors)
    if np.any(dets_a < floors_a * (1 - 1e-9)):
        raise WindowError(
            "a matrix determinant fell below its Gram-Schmidt floor; "
            "the construction is unsound at this sigma"
        )

    delta = partition.delta
    norm_bound = 2 * delta * math.sqrt(N * float(np.sum(ctx.K**2)))
    det_floor = (delta**2 / 8) ** N * float(np.prod(sqrt_m))
    classical_ok = bool(
        np.all(norms_a <= norm_bound + 1e-12) and np.all(dets_a >= det_floor)
    )
    if partition.mass_scale == 1.0 and not classical_ok:
        raise WindowError(
            "classical certificates failed at this sigma "
            f"(max norm {norms_a.max():.3g} vs {norm_bound:.3g}, "
            f"min det {dets_a.min():.3g} vs {det_floor:.3g})"
        )

    window = (
        sigma_window
        if sigma_window is not None
        else [1.0, (1.0 + ctx.sigma) / 2, ctx.sigma]
    )
    lo = partition.leftover_primes
    if len(lo):
        idx = ctx.index_of(lo)
        rows = ctx.rows[:, idx]
        pv = lo.astype(np.float64)
        w = (rows * (partition.leftover_omega * ctx.pw[idx])).sum(axis=1)
        w = w * (two_mn_sq / partition.universe_mass)
        C = 0.0
        for sg in window:
            ww = (rows * (partition.leftover_omega * pv ** (-float(sg)))).sum(axis=1)
            C = max(
                C, float(np.max(np.abs(ww))) * two_mn_sq / partition.universe_mass
            )
    else:
        w = np.zeros(N, dtype=np.complex128)
        C = 0.0
    return MatrixBundle(
        matrices=matrices,
        norms=norms_a,
        dets=dets_a,
        gs_floors=floors_a,
        remainder=w,
        remainder_bound=C,
        norm_bound_classical=norm_bound,
        det_floor_classical=det_floor,
        classical_ok=classical_ok,
    )


def window_condition(ctx: FamilyContext, config: SolverConfig, C: float) -> bool:
    """The sufficient condition  mass >= rho * C * (2mN)^2  from the
    existence argument; recorded in traces, not enforced (it needs sigma
    exponentially close to 1, far below float resolution)."""
    return ctx.mass >= config.rho * C * (2 * config.m * ctx.N) ** 2


# ---------------------------------------------------------------------------
# Unimodular decomposition


def _two_circle_phases(g1: complex, g2: complex, tau: complex) -> Optional[np.ndarray]:
    """Exact phases for g1 e^{i a} + g2 e^{i b} = tau (m=2, N=1)."""
    r1, r2, d = abs(g1), abs(g2), abs(tau)
    if r1 == 0 or r2 == 0:
        return None
    if d < abs(r1 - r2) - 1e-15 or d > r1 + r2 + 1e-15:
        return None
    if d == 0:
        return np.array([0.0, math.pi + np.angle(g1) - np.angle(g2)])
    cos_t = np.clip((d * d + r1 * r1 - r2 * r2) / (2 * d * r1), -1.0, 1.0)
    t = math.acos(cos_t)
    a = np.angle(tau) + t - np.angle(g1)
    rem = tau - r1 * np.exp(1j * (np.angle(tau) + t))
    b = np.angle(rem) - np.angle(g2)
    return np.array([a, b])


def unimodular_decompose(
    matrices: Sequence[np.ndarray],
    tau: np.ndarray,
    tol: float = 1e-10,
    restarts: int = 20,
    seed: int = 0,
    max_iter: int = 200,
) -> tuple[np.ndarray, float]:
    """Phases psi (m, N) with  sum_i g_i exp(i psi_i) = tau  to within tol.

    Phase-parameterized Gauss-Newton with a linear-least-squares seed and
    seeded random restarts; the factors are exactly unimodular because
    only phases are stored.  ``tol`` is relative to max(1, |tau|).
    Raises DecompositionError, with a hint to enlarge m, on stall.
    """
    m = len(matrices)
    if m < 2:
        raise ValueError("need at least two matrices")
    N = matrices[0].shape[0]
    tau = np.asarray(tau, dtype=np.complex128)
    tol_abs = tol * max(1.0, float(np.linalg.norm(tau)))
    G = np.concatenate(matrices, axis=1)  # (N, m*N)

    def residual(psi):
        return G @ np.exp(1j * psi) - tau

    def solve_from(psi0):
        psi = np.asarray(psi0, dtype=np.float64).copy()
        r = residual(psi)
        best = float(np.linalg.norm(r))
        for _ in range(max_iter):
            if best <= tol_abs:
                break
            f = np.exp(1j * psi)
            Jc = G * (1j * f)[None, :]
            J = np.vstack([Jc.real, Jc.imag])
            rhs = -np.concatenate([r.real, r.imag])
            step, *_ = np.linalg.lstsq(J, rhs, rcond=None)
            lam, improved = 1.0, False
            for _ in range(25):
                cand = psi + lam * step
                rc = residual(cand)
                nc = float(np.linalg.norm(rc))
                if nc < best * (1 - 1e-12) or nc <= tol_abs:
                    psi, r, best = cand, rc, nc
                    improved = True
                    break
                lam *= 0.5
            if not improved:
                break
        return psi, best

    seeds = []
    if m == 2 and N == 1:
        exact = _two_circle_phases(complex(G[0, 0]), complex(G[0, 1]), complex(tau[0]))
        if exact is not None:
            seeds.append(exact)
    x, *_ = np.linalg.lstsq(G, tau, rcond=None)
    if float(np.linalg.norm(x)) > 0:
        seeds.append(np.angle(np.where(np.abs(x) > 1e-14, x, 1.0)))
    pairs = np.zeros(m * N)  # antipodal pairing, exact for equal matrices, tau = 0
    pairs[(m // 2) * N :] = math.pi
    seeds.append(pairs)
    rng = np.random.default_rng(seed)
    for _ in range(restarts):
        seeds.append(rng.uniform(-math.pi, math.pi, size=m * N))

    best_psi, best_res = None, np.inf
    for s in seeds:
        psi, res = solve_from(s)
        if res < best_res:
            best_psi, best_res = psi, res
        if best_res <= tol_abs:
            break
    if best_res > tol_abs:
        raise DecompositionError(
            f"unimodular decomposition stalled at residual {best_res:.3g} "
            f"(tol {tol_abs:.3g}); consider a larger matrix count m"
        )
    return best_psi.reshape(m, N), float(best_res)


# ---------------------------------------------------------------------------
# Phase assignments and the two solver routes


@dataclass
class PhaseAssignment:
    """Phases t_p on the solver universe; t_p = 0 beyond the cap."""

    primes: np.ndarray = field(repr=False)
    t: np.ndarray = field(repr=False)
    y: float
    prime_cap: int
    sigma: float
    z_target: np.ndarray
    residuals: np.ndarray
    constructive_t: Optional[np.ndarray] = field(default=None, repr=False)
    constructive_residuals: Optional[np.ndarray] = None
    euler_residuals: Optional[np.ndarray] = None
    mode: str = ""
    mass_scale: float = 1.0
    trace: list = field(default_factory=list)

    def phase_at(self, p: int) -> float:
        i = int(np.searchsorted(self.primes, p))
        if i < len(self.primes) and self.primes[i] == p:
            return float(self.t[i])
        return 0.0

    def to_csv_lines(self) -> list:
        return [f"{int(p)},{t!r}" for p, t in zip(self.primes, self.t)]

    def max_residual(self) -> float:
        return float(np.max(self.residuals))


def _phase_from_unimodular(w: np.ndarray, logp: np.ndarray) -> np.ndarray:
    """t with p^{-i t} = w for unimodular w, in the branch (-pi, pi]/log p."""
    t = -np.angle(w) / logp
    lowest = -math.pi / logp
    return np.where(t <= lowest + 1e-18, t + 2 * math.pi / logp, t)


def _column_support(matrices: Sequence[np.ndarray], target: np.ndarray) -> float:
    """Reach of sum_i g_i f_i toward the target direction: the support
    function of the Minkowski sum of the column circles."""
    nt = float(np.linalg.norm(target))
    if nt == 0:
        return np.inf
    theta = target / nt
    total = 0.0
    for g in matrices:
        total += float(np.sum(np.abs(theta.conj() @ g)))
    return total


def _constructive_phases(
    ctx: FamilyContext,
    partition: Partition,
    bundle: MatrixBundle,
    z: np.ndarray,
    config: SolverConfig,
    mode: str,
) -> tuple[np.ndarray, str]:
    """Phase table from the decomposition: each aligned subset rotates by
    its unimodular factor, leftovers keep their +-1 signs."""
    N, m = partition.N, partition.m
    two_mn_sq = (2 * m * N) ** 2
    tau = (two_mn_sq / partition.universe_mass) * z

    if mode == "auto":
        cover_a = _column_support(bundle.matrices[:m], tau)
        cover_b = _column_support(bundle.matrices[m:], bundle.remainder)
        need_a = float(np.linalg.norm(tau))
        need_b = float(np.linalg.norm(bundle.remainder))
        mode = "two_stage" if (cover_a > 1.12 * need_a and cover_b > 1.12 * need_b) else "joint"

    if mode == "two_stage":
        psi_a, _ = unimodular_decompose(
            bundle.matrices[:m],
            tau,
            tol=config.decompose_tol,
            restarts=config.decompose_restarts,
            seed=config.rng_seed,
        )
        psi_b, _ = unimodular_decompose(
            bundle.matrices[m:],
            -bundle.remainder,
            tol=config.decompose_tol,
            restarts=config.decompose_restarts,
            seed=config.rng_seed + 1,
        )
        psi = np.concatenate([psi_a, psi_b], axis=0)
    elif mode == "joint":
        psi, _ = unimodular_decompose(
            bundle.matrices,
            tau - bundle.remainder,
            tol=config.decompose_tol,
            restarts=config.decompose_restarts,
            seed=config.rng_seed,
        )
    else:
        raise ValueError(f"unknown mode {mode}")

    t = np.zeros(len(ctx.primes), dtype=np.float64)
    for s in partition.sets:
        f_ik = np.exp(1j * psi[s.i - 1, s.k - 1])
        idx = ctx.index_of(s.primes)
        t[idx] = _phase_from_unimodular(s.eps * f_ik, ctx.logp[idx])
    if len(partition.leftover_primes):
        idx = ctx.index_of(partition.leftover_primes)
        w = partition.leftover_omega.astype(np.complex128)
        t[idx] = _phase_from_unimodular(w, ctx.logp[idx])
    return t, mode


def _direct_refine(
    ctx: FamilyContext,
    z: np.ndarray,
    t0: np.ndarray,
    tol: float,
    max_iter: int,
    trace: Optional[list] = None,
) -> tuple[np.ndarray, np.ndarray]:
    """Damped Gauss-Newton on the phases with minimal-norm steps.

    The system is hugely underdetermined (one phase per prime against N
    complex equations), so steps go through the 2N x 2N normal matrix of
    the adjoint."""
    t = t0.copy()
    base = ctx.rows * ctx.pw  # (N, n)
    for it in range(max_iter):
        rot = np.exp(-1j * t * ctx.logp)
        r = (base * rot).sum(axis=1) - z
        rn = float(np.linalg.norm(r))
        if trace is not None:
            trace.append({"iteration": it, "residual_per_j": np.abs(r).tolist()})
        if rn <= tol * 0.1:
            break
        Jc = base * rot * (-1j * ctx.logp)[None, :]  # (N, n)
        Jr = np.vstack([Jc.real, Jc.imag])  # (2N, n)
        M = Jr @ Jr.T
        rhs = -np.concatenate([r.real, r.imag])
        lam = 1e-12 * float(np.trace(M)) / (2 * ctx.N)
        coef = np.linalg.solve(M + lam * np.eye(2 * ctx.N), rhs)
        step = Jr.T @ coef
        scale, ok = 1.0, False
        for _ in range(30):
            cand = t + scale * step
            vals_c = (base * np.exp(-1j * cand * ctx.logp)).sum(axis=1)
            if float(np.linalg.norm(vals_c - z)) < rn:
                t, ok = cand, True
                break
            scale *= 0.5
        if not ok:
            break
    rot = np.exp(-1j * t * ctx.logp)
    res = np.abs((base * rot).sum(axis=1) - z)
    return t, res


def solve_linear_phase_system(
    ctx: FamilyContext,
    config: SolverConfig,
    z: Sequence[complex],
) -> PhaseAssignment:
    """Solve  sum_{y<p<=P} a_j(p) p^{-(sigma + i t_p)} = z_j  for phases.

    Constructive route first (partition, matrices, decomposition, phase
    table), then the direct damped descent seeded from it; both residual
    vectors are recorded.  Targets outside the reachable convex body
    raise CapacityError before any work is done.
    """
    z = np.asarray(z, dtype=np.complex128)
    if len(z) != ctx.N:
        raise ValueError("target dimension does not match the family")
    if float(np.max(np.abs(z))) > config.rho + 1e-12:
        raise CapacityError(f"target exceeds the polydisk radius rho={config.rho}")
    margin = ctx.support_margin(z)
    if margin <= 0.02 * ctx.mass:
        raise CapacityError(
            f"truncated prime mass {ctx.mass:.3g} cannot support the target "
            f"(support margin {margin:.3g}); lower sigma or raise the prime cap"
        )

    delta = direction_delta(ctx.K, ctx.m_diag)
    norm_z = float(np.linalg.norm(z))
    tdir = z / norm_z if norm_z > 1e-12 else None
    scale = config.mass_fraction * (2 * config.m * ctx.N) / delta

    trace: list = []
    attempts = [
        (scale, config.k1_weight),
        (min(scale * 0.96 / config.mass_fraction, scale * 1.1), config.k1_weight + 2),
    ]
    t_cons, used_mode, last_err = None, None, None
    for att_scale, att_k1 in attempts:
        partition = build_partition(
            ctx, config, mass_scale=att_scale, target_direction=tdir, k1_weight=att_k1
        )
        bundle = assemble_matrices(ctx, partition)
        trace.append(
            {
                "stage": "partition",
                "mass_scale": att_scale,
                "remainder_bound": bundle.remainder_bound,
                "window_condition_classical": window_condition(
                    ctx, config, bundle.remainder_bound
                ),
            }
        )
        modes = [config.mode] if config.mode != "auto" else ["auto"]
        for mode in modes:
            try:
                t_cons, used_mode = _constructive_phases(
                    ctx, partition, bundle, z, config, mode
                )
                break
            except DecompositionError as e:
                last_err = e
        if t_cons is not None:
            break
    if t_cons is None:
        raise last_err

    cons_res = np.abs(ctx.linear_sum(t_cons) - z)
    t_ref, ref_res = _direct_refine(
        ctx, z, t_cons, config.tol, config.max_refine_iter, trace
    )
    return PhaseAssignment(
        primes=ctx.primes,
        t=t_ref,
        y=ctx.y,
        prime_cap=ctx.prime_cap,
        sigma=ctx.sigma,
        z_target=z,
        residuals=ref_res,
        constructive_t=t_cons,
        constructive_residuals=cons_res,
        mode=used_mode,
        mass_scale=partition.mass_scale,
        trace=trace,
    )


def direct_phase_solve(
    ctx: FamilyContext,
    config: SolverConfig,
    z: Sequence[complex],
    t_init: Optional[np.ndarray] = None,
) -> PhaseAssignment:
    """Direct route alone, optionally warm-started (continuity checks)."""
    z = np.asarray(z, dtype=np.complex128)
    t0 = np.zeros(len(ctx.primes)) if t_init is None else np.asarray(t_init)
    trace: list = []
    t, res = _direct_refine(ctx, z, t0, config.tol, config.max_refine_iter, trace)
    return PhaseAssignment(
        primes=ctx.primes,
        t=t,
        y=ctx.y,
        prime_cap=ctx.prime_cap,
        sigma=ctx.sigma,
        z_target=z,
        residuals=res,
        mode="direct",
        trace=trace,
    )


def hit_euler_targets(
    ctx: FamilyContext,
    config: SolverConfig,
    z: Sequence[complex],
) -> PhaseAssignment:
    """Phases making the truncated Euler products hit annulus targets.

    Iterates the linear solver on log-scale targets corrected by the
    higher prime-power series until the correction is stationary, then
    reports the product-scale residuals.
    """
    z = np.asarray(z, dtype=np.complex128)
    absz = np.abs(z)
    if np.any(absz < 1 / config.R - 1e-12) or np.any(absz > config.R + 1e-12):
        raise CapacityError(
            f"targets must lie in the annulus [1/R, R] with R={config.R}"
        )
    w_target = np.log(z)  # principal branch; truncated log sums stay inside it
    assignment = solve_linear_phase_system(ctx, config, w_target)
    corr = ctx.higher_order_correction(assignment.t)
    for _ in range(12):
        t_new, _ = _direct_refine(
            ctx, w_target - corr, assignment.t, config.tol, config.max_refine_iter
        )
        corr_new = ctx.higher_order_correction(t_new)
        assignment.t = t_new
        if float(np.max(np.abs(corr_new - corr))) < config.tol * 0.05:
            corr = corr_new
            break
        corr = corr_new
    else:
        raise SolverStallError("Euler-target correction did not become stationary")
    # final full solve at the stationary correction exercises both routes
    assignment = solve_linear_phase_system(ctx, config, w_target - corr)
    t_fin, _ = _direct_refine(
        ctx, w_target - corr, assignment.t, config.tol, config.max_refine_iter
    )
    assignment.t = t_fin
    prods = np.exp(ctx.euler_log_sum(t_fin))
    assignment.residuals = np.abs(ctx.linear_sum(t_fin) - (w_target - corr))
    assignment.euler_residuals = np.abs(prods - z)
    return assignment
