"""Shared trajectory-ensemble runner.

Reproducibility contract: trajectory i uses its own generator seeded from
(master_seed, i), trajectories are stored by index and reduced in index
order, so results are bit-identical for any thread count.  Trajectories are
grouped into fixed blocks of 25 for work distribution and into contiguous
batches for the empirical error bars.
"""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

BLOCK = 25


@dataclass
class EnsembleResult:
    times: np.ndarray
    stats: dict            # name -> {mean, se, traj_mean, traj_se} arrays
    mean_density: np.ndarray
    counters: dict = field(default_factory=dict)
    n_traj: int = 0
    master_seed: int = 0


def trajectory_rng(master_seed, traj_idx):
    return np.random.default_rng(np.random.SeedSequence((master_seed, traj_idx)))


class SubStepper:
    """Wrap a stepper so each recorded step is k internal sub-steps."""

    def __init__(self, inner, k):
        if k < 1:
            raise ValueError("need at least one sub-step")
        self.inner = inner
        self.k = k

    def initial(self):
        return self.inner.initial()

    def step(self, state, rng):
        merged = {}
        for _ in range(self.k):
            state, info = self.inner.step(state, rng)
            if info:
                for key, val in info.items():
                    merged[key] = merged.get(key, 0) + val
        return state, merged

    def density(self, state):
        return self.inner.density(state)


def _run_block(stepper, dens, counters, start, stop, n_steps, master_seed):
    for idx in range(start, stop):
        rng = trajectory_rng(master_seed, idx)
        state = stepper.initial()
        dens[idx, 0] = stepper.density(state)
        for s in range(1, n_steps + 1):
            state, info = stepper.step(state, rng)
            if info:
                for key, val in info.items():
                    counters[idx][key] = counters[idx].get(key, 0) + val
            dens[idx, s] = stepper.density(state)


def run_ensemble(stepper, tau, n_steps, n_traj, master_seed, observables,
                 threads=1, n_batches=10):
    """Propagate n_traj trajectories and reduce them into observable tables.

    Each observable is reported two ways: evaluated on the ensemble-mean
    density matrix (with an error bar from the spread over trajectory
    batches), and as the per-trajectory mean with its standard error.  The
    two coincide for linear observables but differ for the negativity.
    """
    if n_traj < 1:
        raise ValueError("need at least one trajectory")
    d = stepper.density(stepper.initial()).shape[0]
    T = n_steps + 1
    dens = np.zeros((n_traj, T, d, d), dtype=complex)
    counters = [dict() for _ in range(n_traj)]

    blocks = [(b, min(b + BLOCK, n_traj)) for b in range(0, n_traj, BLOCK)]
    if threads > 1 and len(blocks) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            futs = [pool.submit(_run_block, stepper, dens, counters,
                                b0, b1, n_steps, master_seed)
                    for b0, b1 in blocks]
            for f in futs:
                f.result()
    else:
        for b0, b1 in blocks:
            _run_block(stepper, dens, counters, b0, b1, n_steps, master_seed)

    mean_density = dens.sum(axis=0) / n_traj
    n_batches = min(n_batches, n_traj)
    bounds = [i * n_traj // n_batches for i in range(n_batches + 1)]
    batch_means = np.stack([
        dens[bounds[i]:bounds[i + 1]].sum(axis=0) / (bounds[i + 1] - bounds[i])
        for i in range(n_batches)
    ])

    stats = {}
    for obs in observables:
        mean = np.array([obs.evaluate(mean_density[t]) for t in range(T)])
        bvals = np.array([[obs.evaluate(batch_means[b, t]) for t in range(T)]
                          for b in range(n_batches)])
        if n_batches > 1:
            se = bvals.std(axis=0, ddof=1) / np.sqrt(n_batches)
        else:
            se = np.zeros(T)
        tvals = np.array([[obs.evaluate(dens[i, t]) for t in range(T)]
                          for i in range(n_traj)])
        traj_mean = tvals.mean(axis=0)
        if n_traj > 1:
            traj_se = tvals.std(axis=0, ddof=1) / np.sqrt(n_traj)
        else:
            traj_se = np.zeros(T)
        stats[obs.name] = {"mean": mean, "se": se,
                           "traj_mean": traj_mean, "traj_se": traj_se}

    total_counters = {}
    for c in counters:
        for key, val in c.items():
            total_counters[key] = total_counters.get(key, 0) + val

    return EnsembleResult(times=np.arange(T) * tau, stats=stats,
                          mean_density=mean_density, counters=total_counters,
                          n_traj=n_traj, master_seed=master_seed)
