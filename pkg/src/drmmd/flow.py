"""Particle descent driven by the de-regularized witness, plus the plain MMD baseline.

One descent iteration, given source particles y and target samples x:

  1. fit the witness h* for (y || x) at the current lam
  2. record the divergence estimate
  3. rescale lam (adaptive mode): lam_n = clamp(lam0 (D_n / D_0)^(1/(r+1)))
  4. move every particle by -gamma (1 + lam_n) grad h*(y_i)

Step 4 reuses the step-1 witness; the rescaled lam_n is used for the update
prefactor and for the next iteration's witness fit. With noise injection the
gradient is evaluated at y_i + sigma u_i (u standard normal) while the update
is applied to the un-noised y_i.

The target Gram factorization happens once per run (eigendecomposition in
adaptive mode, Cholesky in fixed mode); kernels that resample their probe
batch per iteration force a per-iteration rebuild, as the Gram matrix itself
changes.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from . import regsolve
from .exceptions import NumericalAbort
from .metrics import w2_exact
from .particles import ParticleSystem
from .regsolve import GramCache, build_cache
from .witness import WitnessModel, drmmd_estimate, fit_witness, mmd2_estimate

__all__ = [
    "FixedLambda",
    "AdaptiveLambda",
    "FlowConfig",
    "ScheduleState",
    "IterationRow",
    "RunRecord",
    "schedule_lambda",
    "step",
    "step_mmd_baseline",
    "run",
]


@dataclass(frozen=True)
class FixedLambda:
    """Constant regularization for the whole run."""

    value: float

    def __post_init__(self):
        if not self.value > 0:
            raise ValueError("fixed lam must be positive")


@dataclass(frozen=True)
class AdaptiveLambda:
    """Rescale lam with the divergence: lam_n = clamp(initial * ratio^(1/(r+1))).

    The ratio is anchored at iteration 0, so ``initial`` is the single
    user-facing knob. ``ceiling`` defaults to 1 and ``floor`` to 1e-3, the
    positive lower bound used for numerical stability.
    """

    initial: float
    regularity: float
    floor: float = 1e-3
    ceiling: float = 1.0

    def __post_init__(self):
        if not (self.initial > 0 and self.floor > 0 and self.ceiling > 0):
            raise ValueError("lam parameters must be positive")
        if not self.regularity > 0:
            raise ValueError("regularity must be positive")
        if not self.floor <= self.initial <= self.ceiling:
            raise ValueError("need floor <= initial <= ceiling")


@dataclass(frozen=True)
class FlowConfig:
    step_size: float
    n_max: int
    lam_mode: FixedLambda | AdaptiveLambda
    noise_level: float = 0.0
    snapshot_every: int = 100
    seed: int = 0

    def __post_init__(self):
        if not self.step_size >= 0:
            raise ValueError("step_size must be >= 0")
        if self.n_max < 0:
            raise ValueError("n_max must be >= 0")
        if self.noise_level < 0:
            raise ValueError("noise_level must be >= 0")
        if self.snapshot_every < 1:
            raise ValueError("snapshot_every must be >= 1")


@dataclass(frozen=True)
class ScheduleState:
    lam: float
    drmmd_init: float
    drmmd_now: float


def schedule_lambda(state: ScheduleState, cfg: FlowConfig) -> float:
    """Next lam per the anchored-ratio rule; fixed mode returns lam unchanged."""
    mode = cfg.lam_mode
    if isinstance(mode, FixedLambda):
        return mode.value
    if state.drmmd_init <= 0.0:
        return mode.floor  # flow already converged at iteration 0
    ratio = state.drmmd_now / state.drmmd_init
    lam = mode.initial * ratio ** (1.0 / (mode.regularity + 1.0))
    return float(min(max(lam, mode.floor), mode.ceiling))


def _eval_points(system: ParticleSystem, noise_level: float, rng: np.random.Generator):
    if noise_level > 0:
        return system.positions + noise_level * rng.standard_normal(system.positions.shape)
    return system.positions


def _check_grad(grad: np.ndarray):
    bad = ~np.isfinite(grad).all(axis=1)
    if bad.any():
        idx = int(np.nonzero(bad)[0][0])
        raise NumericalAbort(f"non-finite gradient at particle {idx}")


def step(
    system: ParticleSystem,
    target: ParticleSystem,
    kernel,
    cache: GramCache,
    lam: float,
    cfg: FlowConfig,
    rng: np.random.Generator,
    *,
    witness: WitnessModel | None = None,
) -> ParticleSystem:
    """One forward-Euler update y <- y - gamma (1 + lam) grad h*(y).

    ``witness`` may pass a prefit model (the run loop reuses the one fit before
    the lam rescale); otherwise the witness is fit here at ``lam``.
    """
    if not lam > 0:
        raise ValueError(f"lam must be positive, got {lam}")
    w = witness if witness is not None else fit_witness(system, target, kernel, cache, lam)
    grads = w.grad_many(_eval_points(system, cfg.noise_level, rng))
    _check_grad(grads)
    new_positions = system.positions - cfg.step_size * (1.0 + lam) * grads
    return system.with_positions(new_positions)


def step_mmd_baseline(
    system: ParticleSystem,
    target: ParticleSystem,
    kernel,
    step_size: float,
    rng: np.random.Generator,
    noise_level: float = 0.0,
) -> ParticleSystem:
    """Forward-Euler MMD descent: drift grad(m_mu - m_pi) evaluated per particle."""
    pts = _eval_points(system, noise_level, rng)
    n, m = len(system), len(target)
    drift = kernel.weighted_grad_sum(
        pts, system.positions, np.full(n, 1.0 / n)
    ) - kernel.weighted_grad_sum(pts, target.positions, np.full(m, 1.0 / m))
    _check_grad(drift)
    return system.with_positions(system.positions - step_size * drift)


@dataclass(frozen=True)
class IterationRow:
    iteration: int
    lam: float
    drmmd: float
    mmd2: float
    w2: float | None
    wall_ms: float


@dataclass
class RunRecord:
    """Per-iteration metrics, particle snapshots, and the final state of one run."""

    rows: list[IterationRow] = field(default_factory=list)
    snapshots: list[tuple[int, np.ndarray]] = field(default_factory=list)
    seed: int = 0
    algorithm: str = "drmmd"
    factorizations: int = 0
    final: ParticleSystem | None = None


def run(
    init: ParticleSystem,
    target: ParticleSystem,
    kernel,
    cfg: FlowConfig,
    *,
    algorithm: str = "drmmd",
    metric_kernel=None,
    quiet: bool = True,
) -> RunRecord:
    """Run ``cfg.n_max`` descent iterations and record metrics each iteration.

    Produces n_max + 1 metric rows (iteration 0 holds the initial state) and
    snapshots at multiples of ``snapshot_every`` plus the final iteration.
    ``algorithm`` selects "drmmd" or "mmd" (baseline). ``metric_kernel``
    overrides the kernel used for the recorded MMD^2 column (the student /
    teacher harness scores on a held-out probe set). Deterministic given the
    config seed.
    """
    if algorithm not in ("drmmd", "mmd"):
        raise ValueError(f"unknown algorithm {algorithm!r}")
    if init.dim != target.dim:
        raise ValueError("init and target dimensions differ")
    rng = np.random.default_rng(cfg.seed)
    record = RunRecord(seed=cfg.seed, algorithm=algorithm)
    fact_before = regsolve.factorization_count()

    resampling = hasattr(kernel, "resample") and getattr(kernel, "z_pool", None) is not None
    fixed = isinstance(cfg.lam_mode, FixedLambda)
    mode = "cholesky" if fixed else "eigen"
    fixed_lam = cfg.lam_mode.value if fixed else None

    spec_n = kernel
    cache = build_cache(kernel.gram(target.positions, target.positions), mode, lam=fixed_lam)
    lam = cfg.lam_mode.value if fixed else cfg.lam_mode.initial
    drmmd_init = None
    system = init

    compare_n = len(init) == len(target)
    for n in range(cfg.n_max + 1):
        t0 = time.perf_counter()
        try:
            if resampling and n > 0:
                spec_n = spec_n.resample(rng)
                cache = build_cache(
                    spec_n.gram(target.positions, target.positions), mode, lam=fixed_lam
                )
            kxy = spec_n.gram(target.positions, system.positions)
            witness = fit_witness(system, target, spec_n, cache, lam, kxy=kxy)
            drmmd_n = drmmd_estimate(system, target, spec_n, cache, lam, kxy=kxy)
            if drmmd_init is None:
                drmmd_init = drmmd_n
            lam_n = schedule_lambda(ScheduleState(lam, drmmd_init, drmmd_n), cfg)
            mmd2_n = mmd2_estimate(system, target, metric_kernel or spec_n)
            w2_n = w2_exact(system, target) if compare_n else None
            if n < cfg.n_max:
                if algorithm == "drmmd":
                    next_system = step(
                        system, target, spec_n, cache, lam_n, cfg, rng, witness=witness
                    )
                else:
                    next_system = step_mmd_baseline(
                        system, target, spec_n, cfg.step_size, rng, cfg.noise_level
                    )
        except NumericalAbort as exc:
            raise NumericalAbort(f"iteration {n}: {exc}") from exc
        wall_ms = (time.perf_counter() - t0) * 1e3
        record.rows.append(
            IterationRow(iteration=n, lam=lam_n, drmmd=drmmd_n, mmd2=mmd2_n, w2=w2_n, wall_ms=wall_ms)
        )
        if n % cfg.snapshot_every == 0 or n == cfg.n_max:
            record.snapshots.append((n, system.positions.copy()))
        if not quiet and (n % max(1, cfg.n_max // 10) == 0 or n == cfg.n_max):
            print(
                f"[{algorithm}] iter {n:>7d}  lam={lam_n:.3e}  drmmd={drmmd_n:.6e}  mmd2={mmd2_n:.6e}"
            )
        if n < cfg.n_max:
            system = next_system
            lam = lam_n

    record.final = system
    record.factorizations = regsolve.factorization_count() - fact_before
    return record
