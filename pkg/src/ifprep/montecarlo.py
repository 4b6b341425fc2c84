"""Event-level simulation of the shutter-gated selection.

Each trial pairs one neutron with one atom transit. Random numbers come from
the counter-based Philox generator keyed on the seed, with trial ``i`` reading
the block at counter ``i``; trials can therefore be generated in any
partition and merged in block order without changing a single bit.
"""

from __future__ import annotations

import csv
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from enum import IntEnum
from pathlib import Path

import numpy as np
from numpy.random import Philox
from scipy import stats as sps

from .amplitudes import InteractionAmplitudes
from .errors import DegenerateSelection, EmptySelection
from .interferometer import NetworkSpec, outcome_distribution, path_amplitudes
from .joint_state import BeamGeometry, atom_from_geometry, evolve_overlap, postselect_d2

BLOCK_SIZE = 1 << 16
_WORDS_PER_TRIAL = 4  # one Philox4x64 output block


class Result(IntEnum):
    D1 = 0
    D2 = 1
    Absorbed = 2
    Scattered = 3


@dataclass(frozen=True)
class TrialConfig:
    geometry: BeamGeometry = field(default_factory=BeamGeometry)
    amps: InteractionAmplitudes = field(default_factory=InteractionAmplitudes)
    network: NetworkSpec = field(default_factory=NetworkSpec)
    n_trials: int = 1
    seed: int = 0
    shutter_delay: float = 0.0  # us, metadata only
    atom_speed: float = 0.0  # m/s, metadata only

    def __post_init__(self):
        if self.n_trials < 1:
            raise ValueError("n_trials must be at least 1")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must be an unsigned 64-bit integer")


@dataclass(frozen=True)
class TrialOutcome:
    trial_index: int
    atom_y: float  # um
    in_window: bool
    result: Result


def _uniforms(seed: int, start: int, count: int) -> np.ndarray:
    """(count, 2) array of doubles in [0, 1) for trials start..start+count-1."""
    counter = np.array([start % 2**64, start >> 64, 0, 0], dtype=np.uint64)
    raw = Philox(key=seed, counter=counter).random_raw(count * _WORDS_PER_TRIAL)
    raw = raw.reshape(count, _WORDS_PER_TRIAL)[:, :2]
    return (raw >> np.uint64(11)).astype(np.float64) * 2.0**-53


def _cumulative(cfg: TrialConfig) -> tuple[np.ndarray, np.ndarray]:
    out = []
    for present in (True, False):
        dist = outcome_distribution(cfg.network, cfg.amps, atom_present=present)
        cum = np.cumsum(dist.as_tuple())
        out.append(cum / cum[-1])
    return out[0], out[1]


def _classify(u: np.ndarray, cumulative: np.ndarray) -> np.ndarray:
    # Outcome k is chosen when cum[k-1] <= u < cum[k]; zero-width bins never are.
    idx = np.searchsorted(cumulative, u, side="right")
    return idx.astype(np.int8)


def _simulate_block(cfg: TrialConfig, start: int, count: int, cums):
    u = _uniforms(cfg.seed, start, count)
    w_gd, w_n = cfg.geometry.w_Gd, cfg.geometry.w_n
    atom_y = -w_gd / 2 + u[:, 0] * w_gd
    in_window = np.abs(atom_y) <= w_n / 2
    inside, outside = cums
    result = np.where(in_window, _classify(u[:, 1], inside), _classify(u[:, 1], outside))
    return atom_y, in_window, result.astype(np.int8)


def sample_trial(cfg: TrialConfig, trial_index: int) -> TrialOutcome:
    if not 0 <= trial_index < cfg.n_trials:
        raise IndexError(f"trial_index {trial_index} outside [0, {cfg.n_trials})")
    atom_y, in_window, result = _simulate_block(cfg, trial_index, 1, _cumulative(cfg))
    return TrialOutcome(trial_index, float(atom_y[0]), bool(in_window[0]), Result(int(result[0])))


@dataclass
class EnsembleStats:
    n_trials: int
    seed: int
    counts: dict[str, int]
    selected_positions: np.ndarray
    empirical_p_d2: float
    analytic_p_d2: float
    std_error: float
    w_n: float
    ks_statistic: float | None = None
    ks_critical_1pct: float | None = None

    @property
    def n_selected(self) -> int:
        return int(self.selected_positions.size)

    def to_json_dict(self) -> dict:
        return {
            "n_trials": self.n_trials,
            "seed": self.seed,
            "counts": dict(self.counts),
            "n_selected": self.n_selected,
            "empirical_p_d2": self.empirical_p_d2,
            "analytic_p_d2": self.analytic_p_d2,
            "std_error": self.std_error,
            "ks_statistic": self.ks_statistic,
            "ks_critical_1pct": self.ks_critical_1pct,
            "selected_min_um": float(self.selected_positions.min()) if self.n_selected else None,
            "selected_max_um": float(self.selected_positions.max()) if self.n_selected else None,
        }


def analytic_p_d2(cfg: TrialConfig) -> float:
    atom = atom_from_geometry(cfg.geometry)
    joint = evolve_overlap(atom, cfg.amps, cfg.network)
    try:
        return postselect_d2(joint, path_amplitudes(cfg.network)).probability
    except DegenerateSelection:
        return 0.0


def _blocks(n: int, block: int):
    return [(s, min(block, n - s)) for s in range(0, n, block)]


def _run_blocks(cfg: TrialConfig, workers: int, block_size: int):
    cums = _cumulative(cfg)
    blocks = _blocks(cfg.n_trials, block_size)
    if workers <= 1:
        return [_simulate_block(cfg, s, c, cums) for s, c in blocks]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        # map() yields in submission order, which is the trial-index order.
        return list(pool.map(lambda b: _simulate_block(cfg, b[0], b[1], cums), blocks))


def iter_trials(cfg: TrialConfig, workers: int = 1, block_size: int = BLOCK_SIZE):
    """All trial outcomes as arrays (atom_y, in_window, result)."""
    parts = _run_blocks(cfg, workers, block_size)
    return tuple(np.concatenate([p[i] for p in parts]) for i in range(3))


def run_ensemble(cfg: TrialConfig, workers: int = 1, block_size: int = BLOCK_SIZE) -> EnsembleStats:
    atom_y, _, result = iter_trials(cfg, workers, block_size)
    counts = np.bincount(result, minlength=len(Result))
    selected = atom_y[result == Result.D2]
    p_analytic = analytic_p_d2(cfg)
    stats = EnsembleStats(
        n_trials=cfg.n_trials,
        seed=cfg.seed,
        counts={r.name: int(counts[r]) for r in Result},
        selected_positions=selected,
        empirical_p_d2=int(counts[Result.D2]) / cfg.n_trials,
        analytic_p_d2=p_analytic,
        std_error=math.sqrt(p_analytic * (1 - p_analytic) / cfg.n_trials),
        w_n=cfg.geometry.w_n,
    )
    if selected.size:
        half = cfg.geometry.w_n / 2
        ks = sps.kstest(selected, sps.uniform(loc=-half, scale=2 * half).cdf)
        stats.ks_statistic = float(ks.statistic)
        stats.ks_critical_1pct = float(sps.kstwo.ppf(0.99, selected.size))
    return stats


def selected_histogram(stats: EnsembleStats, n_bins: int) -> tuple[np.ndarray, np.ndarray]:
    """Counts and bin edges of shutter-passed atom positions over the window."""
    if n_bins < 2:
        raise ValueError("n_bins must be at least 2")
    if stats.n_selected == 0:
        raise EmptySelection("no D2 clicks, the shutter never opened")
    half = stats.w_n / 2
    return np.histogram(stats.selected_positions, bins=n_bins, range=(-half, half))


def write_trials_csv(cfg: TrialConfig, path: Path, workers: int = 1) -> None:
    atom_y, in_window, result = iter_trials(cfg, workers)
    names = [r.name for r in Result]
    with open(path, "w", newline="") as fh:
        out = csv.writer(fh, lineterminator="\n")
        out.writerow(["trial_index", "atom_y_um", "in_window", "result"])
        for i, (y, w, r) in enumerate(zip(atom_y.tolist(), in_window.tolist(), result.tolist())):
            out.writerow([i, repr(y), "true" if w else "false", names[r]])
