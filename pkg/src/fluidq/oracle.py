"""Finite-c ground truth: a truncated spectral solver and a Monte Carlo simulator.

The spectral solver works on the chain k = 0..K with the birth rate switched
off at K. With d_k = k - c the mode equation theta d_k phi_k = (Q phi)_k is
symmetrized by phi_k = sqrt(p_k / |d_k|) v_k, which turns it into an ordinary
eigenproblem T v = theta v with a real tridiagonal T whose off-diagonal signs
follow sign(d_k).
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Sequence

import mpmath as mp
import numpy as np
import scipy.linalg as sla

from ._backend import kernels
from .errors import (
    DomainError, EigenFailure, IllConditioned, ModeCountMismatch, NoConvergence, OutOfRange,
)
from .model import EvalResult, ModelParams, classify_region, make_result, scaled_point

COND_LIMIT = 1e12
IMAG_TOL = 1e-8


def default_truncation(m: ModelParams) -> int:
    return math.ceil(m.c + max(10.0, 10.0 * math.sqrt(m.c), 40.0 / abs(m.log_rho)))


@dataclass(frozen=True)
class SpectralSolution:
    model: ModelParams
    K_trunc: int
    thetas: np.ndarray
    phis: np.ndarray
    coeffs: np.ndarray
    p_stat: np.ndarray
    dps: int | None = None
    mp_thetas: tuple = ()
    mp_phis: tuple = ()
    mp_coeffs: tuple = ()
    mp_p: tuple = ()
    diagnostics: dict[str, Any] = field(default_factory=dict)

    @property
    def n_modes(self) -> int:
        return len(self.thetas)

    @property
    def theta_max(self) -> float:
        """Least negative decay rate."""
        return float(self.thetas.max())


def _symmetrized(m: ModelParams, K: int):
    k = np.arange(K + 1, dtype=float)
    d = k - m.c
    diag = -(m.lam + m.mu * (k >= 1))
    diag[K] = -m.mu
    diag = diag / d
    off = math.sqrt(m.lam * m.mu) / np.sqrt(np.abs(d[:-1] * d[1:]))
    up = np.sign(d[:-1]) * off
    lo = np.sign(d[1:]) * off
    T = np.diag(diag) + np.diag(up, 1) + np.diag(lo, -1)
    return T, d


def _truncated_p(m: ModelParams, K: int) -> np.ndarray:
    k = np.arange(K + 1)
    return (1.0 - m.rho) * m.rho ** k / (1.0 - m.rho ** (K + 1))


def solve_exact(m: ModelParams, K_trunc: int | None = None, dps: int | None = 50) -> SpectralSolution:
    """Spectral solution of the truncated boundary-value problem.

    With ``dps`` set, eigenvalues are polished by Newton on the characteristic
    recurrence, eigenvectors rebuilt by two-sided recurrence, and the boundary
    system solved, all in mpmath; tails far below p_k then stay accurate.
    """
    K = default_truncation(m) if K_trunc is None else int(K_trunc)
    if K < m.c + 10:
        raise DomainError(f"K_trunc={K} must be >= c + 10")
    if K * abs(m.log_rho) < 14.0 * math.log(10.0) + math.log(1.0 / (1.0 - m.rho)) - 1e-9:
        raise DomainError(f"K_trunc={K} leaves rho^K above 1e-14 (1 - rho)")
    T, d = _symmetrized(m, K)
    try:
        th, V = np.linalg.eig(T)
    except np.linalg.LinAlgError as exc:
        raise EigenFailure(f"solve_exact: eigen solve failed: {exc}") from exc
    if np.max(np.abs(th.imag)) > IMAG_TOL * np.max(np.abs(th.real)):
        raise ModeCountMismatch(f"solve_exact: complex eigenvalues, max |Im| = {np.max(np.abs(th.imag)):.3g}")
    th, V = th.real, V.real
    keep = th < -1e-12
    th, V = th[keep], V[:, keep]
    order = np.argsort(th)
    th, V = th[order], V[:, order]
    nf = m.floor_c
    expected = K - nf
    if len(th) != expected:
        raise ModeCountMismatch(f"solve_exact: {len(th)} decaying modes, expected {expected}")

    p = _truncated_p(m, K)
    rows = np.arange(nf + 1, K + 1)
    A = V[rows, :]
    b = -np.sqrt(p[rows] * np.abs(d[rows]))
    Q_, R_, piv = sla.qr(A, pivoting=True)
    cond = float(np.linalg.cond(R_))
    if cond > COND_LIMIT:
        raise IllConditioned(f"solve_exact: boundary fit condition number {cond:.3g}")
    a = np.empty(expected)
    a[piv] = sla.solve_triangular(R_, Q_.T @ b)

    phis = np.sqrt(p / np.abs(d))[:, None] * V
    normT = np.linalg.norm(T, 2)
    eig_res = float(np.max(np.linalg.norm(T @ V - V * th, axis=0)) / normT)
    u0 = np.sqrt(p * np.abs(d))
    zero_res = float(np.linalg.norm(T @ u0) / (normT * np.linalg.norm(u0)))
    diag: dict[str, Any] = {
        "mode_count": len(th), "condition": cond, "eig_residual": eig_res,
        "zero_mode_residual": zero_res,
    }
    sol_kwargs: dict[str, Any] = {}
    if dps:
        sol_kwargs = _refine_mp(m, K, d, th, V, dps)
    sol = SpectralSolution(model=m, K_trunc=K, thetas=th, phis=phis, coeffs=a, p_stat=p,
                           dps=dps or None, diagnostics=diag, **sol_kwargs)
    F0 = oracle_F_vector(sol, 0.0)
    diag["boundary_residual"] = float(np.max(np.abs(F0[nf + 1:])) / np.linalg.norm(p))
    return sol


def _refine_mp(m: ModelParams, K: int, d: np.ndarray, th0: np.ndarray, V0: np.ndarray, dps: int):
    nf = m.floor_c
    with mp.workdps(dps):
        c = mp.mpf(m.c)
        lam, mu = mp.mpf(m.lam), mp.mpf(m.mu)
        sq = mp.sqrt(lam * mu)
        dd = [mp.mpf(k) - c for k in range(K + 1)]
        diag = [(-(lam + (mu if k >= 1 else 0)) if k < K else -mu) / dd[k] for k in range(K + 1)]
        up = [mp.sign(dd[i]) * sq / mp.sqrt(abs(dd[i] * dd[i + 1])) for i in range(K)]
        lo = [mp.sign(dd[i + 1]) * sq / mp.sqrt(abs(dd[i] * dd[i + 1])) for i in range(K)]
        prod = [up[i] * lo[i] for i in range(K)]
        eps = mp.mpf(10) ** (-dps + 5)

        def charpoly(t):
            # determinant of T - t and its t-derivative by the three-term recurrence
            dm2, dm1 = mp.mpf(1), diag[0] - t
            em2, em1 = mp.mpf(0), mp.mpf(-1)
            for k in range(1, K + 1):
                dk = (diag[k] - t) * dm1 - prod[k - 1] * dm2
                ek = -dm1 + (diag[k] - t) * em1 - prod[k - 1] * em2
                dm2, dm1, em2, em1 = dm1, dk, em1, ek
            return dm1, em1

        thetas = []
        for t0 in th0:
            t = mp.mpf(t0)
            for _ in range(60):
                f, fp = charpoly(t)
                step = f / fp
                t -= step
                if abs(step) < abs(t) * eps:
                    break
            else:
                raise NoConvergence(f"solve_exact: Newton polish failed near theta={t0:.6g}")
            thetas.append(t)
        for a_, b_ in zip(thetas, thetas[1:]):
            if abs(a_ - b_) < abs(b_) * mp.mpf(10) ** -20:
                raise ModeCountMismatch("solve_exact: two modes polished onto one eigenvalue")

        vecs = []
        for j, t in enumerate(thetas):
            vf = [mp.mpf(1), -(diag[0] - t) / up[0]]
            for k in range(1, K):
                vf.append(-(lo[k - 1] * vf[k - 1] + (diag[k] - t) * vf[k]) / up[k])
            vb = [mp.mpf(0)] * (K + 1)
            vb[K] = mp.mpf(1)
            vb[K - 1] = -(diag[K] - t) / lo[K - 1]
            for k in range(K - 1, 0, -1):
                vb[k - 1] = -((diag[k] - t) * vb[k] + up[k] * vb[k + 1]) / lo[k - 1]
            # each recurrence is stable growing away from its own end, so join at the peak
            peak = int(np.argmax(np.abs(V0[:, j])))
            scale = vf[peak] / vb[peak]
            v = [vf[i] if i <= peak else vb[i] * scale for i in range(K + 1)]
            nrm = mp.sqrt(mp.fsum(x * x for x in v))
            vecs.append([x / nrm for x in v])

        r = lam / mu
        p = [(1 - r) * r ** k / (1 - r ** (K + 1)) for k in range(K + 1)]
        rows = list(range(nf + 1, K + 1))
        A = mp.matrix([[vecs[j][k] for j in range(len(thetas))] for k in rows])
        b = mp.matrix([-mp.sqrt(p[k] * abs(dd[k])) for k in rows])
        a = mp.lu_solve(A, b)
        phis = tuple(tuple(mp.sqrt(p[k] / abs(dd[k])) * vecs[j][k] for k in range(K + 1))
                     for j in range(len(thetas)))
        return {"mp_thetas": tuple(thetas), "mp_phis": phis,
                "mp_coeffs": tuple(a[j] for j in range(len(thetas))), "mp_p": tuple(p)}


def _check_k(sol: SpectralSolution, k: int) -> None:
    if not 0 <= k <= sol.K_trunc:
        raise OutOfRange(f"k={k} outside 0..{sol.K_trunc}")


def oracle_deficit(sol: SpectralSolution, x: float, k: int) -> float:
    """p_k - F_k(x) in double precision, summed without forming F."""
    _check_k(sol, k)
    return float(-np.sum(sol.coeffs * np.exp(sol.thetas * x) * sol.phis[k, :]))


def _deficit_mp(sol: SpectralSolution, x: float, k: int):
    xx = mp.mpf(x)
    return -mp.fsum(a * mp.exp(t * xx) * ph[k]
                    for a, t, ph in zip(sol.mp_coeffs, sol.mp_thetas, sol.mp_phis))


def oracle_log_digits(sol: SpectralSolution, x: float, k: int) -> str | None:
    """log(p_k - F_k(x)) as a decimal string at the solution's precision."""
    if not sol.dps:
        return None
    _check_k(sol, k)
    with mp.workdps(sol.dps):
        de = _deficit_mp(sol, x, k)
        return mp.nstr(mp.log(de), sol.dps - 5) if de > 0 else None


def oracle_log(sol: SpectralSolution, x: float, k: int) -> tuple[float, float, float]:
    """(log F_k(x), log(p_k - F_k(x)), log p_k)."""
    _check_k(sol, k)
    if x < 0.0:
        raise DomainError(f"x must be >= 0, got {x}")
    if x == 0.0 and k > sol.model.floor_c:
        lp = math.log(sol.p_stat[k])
        return -math.inf, lp, lp
    if sol.dps:
        with mp.workdps(sol.dps):
            de = _deficit_mp(sol, x, k)
            pk = sol.mp_p[k]
            F = pk - de
            log_F = float(mp.log(F)) if F > 0 else -math.inf
            log_d = float(mp.log(de)) if de > 0 else -math.inf
            return log_F, log_d, float(mp.log(pk))
    de = oracle_deficit(sol, x, k)
    pk = float(sol.p_stat[k])
    F = pk - de
    if F <= 0.0:
        if F < -1e-12:
            raise NoConvergence(f"oracle F_{k}({x}) = {F:.3g} is negative beyond round-off")
        log_F = -math.inf
    else:
        log_F = math.log(F)
    return log_F, (math.log(de) if de > 0.0 else -math.inf), math.log(pk)


def oracle_F(sol: SpectralSolution, x: float, k: int) -> EvalResult:
    """F_k(x) = p_k + sum_j a_j e^{theta_j x} phi_j[k]."""
    m = sol.model
    log_F, log_d, log_p = oracle_log(sol, x, k)
    digits = oracle_log_digits(sol, x, k) if x > 0.0 else None
    res = make_result(m, x, k, "oracle", log_F, log_tail=log_d, log_p=log_p,
                      region=classify_region(m, scaled_point(m, x, k)), log_tail_digits=digits,
                      K_trunc=sol.K_trunc, dps=sol.dps)
    return res.with_oracle(res)


def oracle_F_vector(sol: SpectralSolution, x: float) -> np.ndarray:
    """F_k(x) for all k in double precision."""
    return sol.p_stat + sol.phis @ (sol.coeffs * np.exp(sol.thetas * x))


def oracle_dF_vector(sol: SpectralSolution, x: float) -> np.ndarray:
    return sol.phis @ (sol.coeffs * sol.thetas * np.exp(sol.thetas * x))


def equation_residual(sol: SpectralSolution, x: float) -> float:
    """max_k |(k-c) F_k' - (rate operator applied to F)_k| at x."""
    m, K = sol.model, sol.K_trunc
    F = oracle_F_vector(sol, x)
    dF = oracle_dF_vector(sol, x)
    k = np.arange(K + 1)
    rhs = np.empty(K + 1)
    rhs[0] = m.mu * F[1] - m.lam * F[0]
    rhs[1:K] = m.lam * F[:K - 1] + m.mu * F[2:] - (m.lam + m.mu) * F[1:K]
    rhs[K] = m.lam * F[K - 1] - m.mu * F[K]
    return float(np.max(np.abs((k - m.c) * dF - rhs)))


def oracle_marginal(sol: SpectralSolution, x: float) -> float:
    """Pr[X > x] = 1 - sum_k F_k(x), summed as the total deficit."""
    return math.exp(oracle_marginal_log(sol, x))


def oracle_marginal_log(sol: SpectralSolution, x: float) -> float:
    if x < 0.0:
        raise DomainError(f"x must be >= 0, got {x}")
    if sol.dps:
        with mp.workdps(sol.dps):
            xx = mp.mpf(x)
            tot = -mp.fsum(a * mp.exp(t * xx) * mp.fsum(ph)
                           for a, t, ph in zip(sol.mp_coeffs, sol.mp_thetas, sol.mp_phis))
            return float(mp.log(tot)) if tot > 0 else -math.inf
    col = sol.phis.sum(axis=0)
    tot = float(-np.sum(sol.coeffs * np.exp(sol.thetas * x) * col))
    return math.log(tot) if tot > 0.0 else -math.inf


# Monte Carlo

def thread_count() -> int:
    env = os.environ.get("FLUIDQ_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            pass
    return os.cpu_count() or 1


@dataclass(frozen=True)
class SimConfig:
    t_max: float
    seed: int = 0
    sample_dt: float = 1.0
    burn_in: float | None = None
    replicas: int = 4
    batches: int = 20
    chunk: int = 1 << 16

    def __post_init__(self):
        burn = self.burn_in_time
        if not (self.t_max > burn > 0.0):
            raise DomainError(f"need t_max > burn_in > 0, got t_max={self.t_max}, burn_in={burn}")
        if not self.sample_dt > 0.0:
            raise DomainError(f"sample_dt must be > 0, got {self.sample_dt}")
        if self.replicas < 1 or self.batches < 2:
            raise DomainError("need replicas >= 1 and batches >= 2")

    @property
    def burn_in_time(self) -> float:
        return 0.1 * self.t_max if self.burn_in is None else self.burn_in

    @property
    def n_samples(self) -> int:
        return int((self.t_max - self.burn_in_time) / self.sample_dt)


@dataclass(frozen=True)
class SimResult:
    config: SimConfig
    n_samples: int
    x_grid: np.ndarray
    marginal: np.ndarray
    marginal_se: np.ndarray
    joint_points: tuple
    joint: np.ndarray
    joint_se: np.ndarray
    k_values: np.ndarray
    k_marginal: np.ndarray
    k_marginal_se: np.ndarray

    def to_dict(self) -> dict[str, Any]:
        return {
            "t_max": self.config.t_max, "seed": self.config.seed,
            "replicas": self.config.replicas, "n_samples": self.n_samples,
            "marginal": [{"x": float(x), "M": float(v), "se": float(s)}
                         for x, v, s in zip(self.x_grid, self.marginal, self.marginal_se)],
            "joint": [{"x": float(x), "k": int(k), "F": float(v), "se": float(s)}
                      for (x, k), v, s in zip(self.joint_points, self.joint, self.joint_se)],
            "k_marginal": [{"k": int(k), "P": float(v), "se": float(s)}
                           for k, v, s in zip(self.k_values, self.k_marginal, self.k_marginal_se)],
        }


def _run_replica(m: ModelParams, cfg: SimConfig, seq: np.random.SeedSequence):
    rng = np.random.default_rng(seq)
    n = cfg.n_samples
    out_k = np.empty(n, dtype=np.int_)
    out_x = np.empty(n, dtype=np.float64)
    k, x, t, idx = 0, 0.0, 0.0, 0
    while idx < n:
        expo = rng.standard_exponential(cfg.chunk)
        unif = rng.random(cfg.chunk)
        k, x, t, idx, _ = kernels.simulate_chunk(int(k), float(x), float(t), m.c, m.lam, m.mu,
                                                 expo, unif, cfg.burn_in_time, cfg.sample_dt,
                                                 int(idx), out_k, out_x)
    return out_k, out_x


def _batch_stats(indicator_batches: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Mean and standard error over the leading batch axis."""
    nb = indicator_batches.shape[0]
    return indicator_batches.mean(axis=0), indicator_batches.std(axis=0, ddof=1) / math.sqrt(nb)


def simulate(m: ModelParams, cfg: SimConfig, x_grid: Sequence[float] = (0.0,),
             joint_points: Sequence[tuple[float, int]] = (), k_max: int | None = None) -> SimResult:
    """Time-sampled estimates of Pr[X > x], Pr[X <= x, Z = k] and Pr[Z = k].

    Each replica draws from its own stream spawned from ``cfg.seed``; standard
    errors come from batch means over all replicas' batches.
    """
    if not m.stable:
        raise DomainError("simulation needs a stable model")
    seqs = np.random.SeedSequence(cfg.seed).spawn(cfg.replicas)
    with ThreadPoolExecutor(max_workers=min(thread_count(), cfg.replicas)) as pool:
        runs = list(pool.map(lambda s: _run_replica(m, cfg, s), seqs))
    xg = np.asarray(x_grid, dtype=float)
    k_max = int(math.ceil(4 * m.c)) if k_max is None else k_max
    ks = np.arange(k_max + 1)
    per_batch = []
    n = cfg.n_samples
    edges = np.linspace(0, n, cfg.batches + 1).astype(int)
    for out_k, out_x in runs:
        for lo, hi in zip(edges[:-1], edges[1:]):
            bk, bx = out_k[lo:hi], out_x[lo:hi]
            marg = (bx[:, None] > xg[None, :]).mean(axis=0)
            joint = np.array([np.mean((bx <= x) & (bk == k)) for x, k in joint_points])
            kdist = np.bincount(np.minimum(bk, k_max + 1), minlength=k_max + 2)[:k_max + 1] / len(bk)
            per_batch.append(np.concatenate([marg, joint, kdist]))
    arr = np.array(per_batch)
    mean, se = _batch_stats(arr)
    a, b = len(xg), len(xg) + len(joint_points)
    return SimResult(config=cfg, n_samples=n, x_grid=xg, marginal=mean[:a], marginal_se=se[:a],
                     joint_points=tuple((float(x), int(k)) for x, k in joint_points),
                     joint=mean[a:b], joint_se=se[a:b], k_values=ks,
                     k_marginal=mean[b:], k_marginal_se=se[b:])


def oracle_density_log(sol: SpectralSolution, x: float, k: int) -> float:
    """log F_k'(x) for x > 0."""
    _check_k(sol, k)
    if not x > 0.0:
        raise DomainError(f"density needs x > 0, got {x}")
    if sol.dps:
        with mp.workdps(sol.dps):
            xx = mp.mpf(x)
            f = mp.fsum(a * t * mp.exp(t * xx) * ph[k]
                        for a, t, ph in zip(sol.mp_coeffs, sol.mp_thetas, sol.mp_phis))
            return float(mp.log(f)) if f > 0 else -math.inf
    f = float(np.sum(sol.coeffs * sol.thetas * np.exp(sol.thetas * x) * sol.phis[k, :]))
    return math.log(f) if f > 0.0 else -math.inf
