"""7x7 self-organizing map with winner-take-all learning and its
quantization-error metric.

Every input is a real vector of simultaneous per-sensor millivolt readings
(one dimension per analysis-eligible sensor, fixed order).  Each of the 49
lattice units carries a model vector of the same dimension.  Training visits
inputs one at a time and pulls every model towards the input,

    m_i(t+1) = m_i(t) + alpha(t) * h_ci(t) * (x(t) - m_i(t)),

where c is the best matching unit (smallest Euclidean distance to x) and
h_ci is a Gaussian smoothing kernel over the integer lattice coordinates,

    h_ci = exp(-||coord(c) - coord(i)||^2 / (2 sigma^2)),

with alpha and sigma decaying linearly across epochs so the kernel converges
towards zero over time.  The quantization error of a data set is the mean
Euclidean distance from each input to its best matching model,

    QE = 1/N * sum_i ||x_i - m_c_i||,

in millivolt units; larger QE means the map explains the data less well,
which is exactly what separates high-variability novice sessions from
low-variability expert ones.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .acquisition import SAMPLE_PERIOD_MS, Session
from .sensors import ELIGIBLE_SENSORS

GRID_WIDTH = 7
GRID_HEIGHT = 7
N_UNITS = GRID_WIDTH * GRID_HEIGHT

#: Fixed input dimension order: one mV value per analysis-eligible sensor.
INPUT_SENSOR_ORDER: tuple[int, ...] = ELIGIBLE_SENSORS


def unit_coords() -> np.ndarray:
    """(49, 2) integer lattice coordinates in row-major unit order."""
    rows, cols = np.divmod(np.arange(N_UNITS), GRID_WIDTH)
    return np.stack([rows, cols], axis=1)


_COORDS = unit_coords()
#: Pairwise squared lattice distances between units, (49, 49).
_SQ_LATTICE = ((_COORDS[:, None, :] - _COORDS[None, :, :]) ** 2).sum(axis=2).astype(np.float64)


@dataclass(frozen=True)
class TrainingSchedule:
    """Learning-rate and neighborhood decay plus the shuffling seed.

    Both alpha and sigma decay linearly from their initial to final values
    across epochs and are constant within an epoch.
    """

    epochs: int = 100
    alpha0: float = 0.5
    alpha_end: float = 0.01
    sigma0: float = 3.5
    sigma_end: float = 0.5
    seed: int = 0

    def __post_init__(self) -> None:
        if self.epochs < 1:
            raise ValueError("epochs must be >= 1")
        # alpha 0 is permitted (freezes the grid; useful for testing the
        # zero-step property), anything negative or above 1 is not.
        if not 0 <= self.alpha0 <= 1 or not 0 <= self.alpha_end <= self.alpha0:
            raise ValueError("need 0 <= alpha_end <= alpha0 <= 1")
        if self.sigma0 <= 0 or not 0 < self.sigma_end <= self.sigma0:
            raise ValueError("need 0 < sigma_end <= sigma0")

    def _interp(self, start: float, end: float, epoch: int) -> float:
        if self.epochs == 1 or epoch == 0:
            return start
        if epoch >= self.epochs - 1:
            return end
        frac = epoch / (self.epochs - 1)
        return start + frac * (end - start)

    def alpha_at(self, epoch: int) -> float:
        return self._interp(self.alpha0, self.alpha_end, epoch)

    def sigma_at(self, epoch: int) -> float:
        return self._interp(self.sigma0, self.sigma_end, epoch)


@dataclass
class SomGrid:
    """49 model vectors on the 7x7 lattice, row-major unit indexing."""

    vectors: np.ndarray

    def __post_init__(self) -> None:
        self.vectors = np.asarray(self.vectors, dtype=np.float64)
        if self.vectors.ndim != 2 or self.vectors.shape[0] != N_UNITS:
            raise ValueError(f"expected ({N_UNITS}, dim) model vectors, got {self.vectors.shape}")
        if not np.isfinite(self.vectors).all():
            raise ValueError("model vectors must be finite")

    @property
    def dim(self) -> int:
        return self.vectors.shape[1]

    @classmethod
    def init_from_inputs(cls, inputs: np.ndarray, seed: int = 0) -> "SomGrid":
        """Seeded uniform-random init within the per-dimension data range."""
        x = np.asarray(inputs, dtype=np.float64)
        if x.ndim != 2 or x.shape[0] == 0:
            raise ValueError("need a non-empty (n, dim) input array")
        rng = np.random.default_rng(seed)
        lo, hi = x.min(axis=0), x.max(axis=0)
        return cls(vectors=lo + rng.random((N_UNITS, x.shape[1])) * (hi - lo))


def build_inputs(
    session: Session, sensors: tuple[int, ...] = INPUT_SENSOR_ORDER
) -> tuple[np.ndarray, int]:
    """Per-timestamp input vectors of a session, plus the skipped count.

    One vector per grid timestamp at which every requested sensor has a
    sample; timestamps missing any sensor are skipped and counted.

    Raises:
        ValueError: the session lacks one of the requested sensors entirely.
    """
    missing = [k for k in sensors if k not in session.sensors()]
    if missing:
        raise ValueError(f"session lacks sensors {['S%d' % k for k in missing]}")
    t0 = session.start_ms
    columns = {}
    n_slots = 0
    for k in sensors:
        t, v = session.sensor_arrays(k)
        if t[0] < t0:
            raise ValueError(f"sensor S{k} has samples before the session start")
        slots = (t - t0) // SAMPLE_PERIOD_MS
        n_slots = max(n_slots, int(slots[-1]) + 1)
        columns[k] = (slots, v)
    matrix = np.full((n_slots, len(sensors)), np.nan)
    for j, k in enumerate(sensors):
        slots, v = columns[k]
        matrix[slots, j] = v
    complete = ~np.isnan(matrix).any(axis=1)
    return matrix[complete], int(n_slots - complete.sum())


def bmu(grid: SomGrid, x: np.ndarray) -> int:
    """Index of the best matching unit; ties go to the smallest unit index."""
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (grid.dim,):
        raise ValueError(f"input dimension {x.shape} does not match grid dim {grid.dim}")
    d = grid.vectors - x
    return int(np.argmin(np.einsum("ij,ij->i", d, d)))


def neighborhood(c: int, i: int, sigma: float) -> float:
    """Gaussian lattice kernel h_ci: 1 at the winner, decaying with distance."""
    if sigma <= 0:
        raise ValueError(f"sigma must be positive, got {sigma}")
    return float(np.exp(-_SQ_LATTICE[c, i] / (2.0 * sigma * sigma)))


def train(grid: SomGrid, inputs: np.ndarray, schedule: TrainingSchedule) -> SomGrid:
    """Winner-take-all training over all epochs; returns a new grid.

    Every unit is updated at every step; presentation order is reshuffled
    each epoch by the schedule's seed, so results are reproducible.
    """
    x_all = np.asarray(inputs, dtype=np.float64)
    if x_all.ndim != 2 or x_all.shape[0] == 0:
        raise ValueError("need a non-empty (n, dim) input array")
    if x_all.shape[1] != grid.dim:
        raise ValueError(f"input dim {x_all.shape[1]} does not match grid dim {grid.dim}")
    vectors = grid.vectors.copy()
    rng = np.random.default_rng(schedule.seed)
    for epoch in range(schedule.epochs):
        alpha = schedule.alpha_at(epoch)
        sigma = schedule.sigma_at(epoch)
        kernel = alpha * np.exp(-_SQ_LATTICE / (2.0 * sigma * sigma))  # (49, 49)
        for idx in rng.permutation(x_all.shape[0]):
            x = x_all[idx]
            d = x - vectors
            c = np.argmin(np.einsum("ij,ij->i", d, d))
            vectors += kernel[c][:, None] * d
    return SomGrid(vectors=vectors)


def quantization_error(grid: SomGrid, inputs: np.ndarray) -> float:
    """Mean Euclidean distance from each input to its BMU model (mV)."""
    x = np.asarray(inputs, dtype=np.float64)
    if x.ndim != 2 or x.shape[0] == 0:
        raise ValueError("need a non-empty (n, dim) input array")
    if x.shape[1] != grid.dim:
        raise ValueError(f"input dim {x.shape[1]} does not match grid dim {grid.dim}")
    total = 0.0
    for start in range(0, x.shape[0], 4096):
        chunk = x[start : start + 4096]
        sq = ((chunk[:, None, :] - grid.vectors[None, :, :]) ** 2).sum(axis=2)
        total += float(np.sqrt(sq.min(axis=1)).sum())
    return total / x.shape[0]


@dataclass(frozen=True)
class QePoint:
    group: str
    session_index: int
    qe_mv: float


def som_qe_curve(
    groups: dict[str, list[Session]],
    schedule: TrainingSchedule | None = None,
    mode: str = "pooled",
    sensors: tuple[int, ...] = INPUT_SENSOR_ORDER,
    max_train_inputs: int = 5000,
) -> tuple[list[QePoint], SomGrid | dict[str, SomGrid]]:
    """Per-session QE series for each group of sessions.

    In ``pooled`` mode (default) one reference grid is trained on the pooled
    inputs of all groups and every session is scored against it, so QE values
    share a common metric scale.  ``per-group`` trains one grid per group.
    Training inputs beyond ``max_train_inputs`` are subsampled (seeded) to
    bound training cost; QE evaluation always uses each session in full.
    """
    if schedule is None:
        schedule = TrainingSchedule()
    if mode not in ("pooled", "per-group"):
        raise ValueError(f"mode must be 'pooled' or 'per-group', got {mode!r}")
    if not groups or any(not sess for sess in groups.values()):
        raise ValueError("every group needs at least one session")

    per_session: dict[str, list[tuple[int, np.ndarray]]] = {}
    for label in sorted(groups):
        per_session[label] = [
            (s.session_index, build_inputs(s, sensors)[0])
            for s in sorted(groups[label], key=lambda s: s.session_index)
        ]

    def _training_set(arrays: list[np.ndarray]) -> np.ndarray:
        pooled = np.concatenate(arrays, axis=0)
        if pooled.shape[0] > max_train_inputs:
            rng = np.random.default_rng(schedule.seed)
            keep = np.sort(rng.choice(pooled.shape[0], size=max_train_inputs, replace=False))
            pooled = pooled[keep]
        return pooled

    points: list[QePoint] = []
    if mode == "pooled":
        train_x = _training_set(
            [x for label in sorted(per_session) for _, x in per_session[label]]
        )
        grid = train(SomGrid.init_from_inputs(train_x, seed=schedule.seed), train_x, schedule)
        for label in sorted(per_session):
            for idx, x in per_session[label]:
                points.append(QePoint(label, idx, quantization_error(grid, x)))
        return points, grid

    grids: dict[str, SomGrid] = {}
    for label in sorted(per_session):
        train_x = _training_set([x for _, x in per_session[label]])
        grids[label] = train(
            SomGrid.init_from_inputs(train_x, seed=schedule.seed), train_x, schedule
        )
        for idx, x in per_session[label]:
            points.append(QePoint(label, idx, quantization_error(grids[label], x)))
    return points, grids


def save_grid(path: str | Path, grid: SomGrid, schedule: TrainingSchedule | None = None) -> None:
    """Snapshot the grid as text: header plus one row of values per unit."""
    sched = schedule if schedule is not None else TrainingSchedule()
    header = (
        f"# gripforge-som-grid v1 width={GRID_WIDTH} height={GRID_HEIGHT} "
        f"dim={grid.dim} epochs={sched.epochs} alpha0={sched.alpha0!r} "
        f"alpha_end={sched.alpha_end!r} sigma0={sched.sigma0!r} "
        f"sigma_end={sched.sigma_end!r} seed={sched.seed}"
    )
    rows = [" ".join(repr(v) for v in row) for row in grid.vectors.tolist()]
    Path(path).write_text("\n".join([header] + rows) + "\n", encoding="utf-8")


def load_grid(path: str | Path) -> tuple[SomGrid, dict[str, str]]:
    """Load a snapshot back; values round-trip bit-exactly via repr."""
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    if not lines or not lines[0].startswith("# gripforge-som-grid v1"):
        raise ValueError(f"{path}: not a gripforge SOM grid snapshot")
    meta = dict(
        token.split("=", 1) for token in lines[0].split()[2:] if "=" in token
    )
    vectors = np.array(
        [[float(v) for v in line.split()] for line in lines[1:] if line.strip()]
    )
    return SomGrid(vectors=vectors), meta
