"""Monte-Carlo engine for the single-photon and multi-photon procedures.

Randomness is counter based: trial ``t`` of a plan draws its four uniforms
from Philox block ``t`` under key ``master_seed``. A trial's outcome thus
depends only on ``(master_seed, trial_id)``, so any partition of the trial
range over blocks or worker processes reproduces the same stream.

Uniform slots per trial:
    0  collapse waiting time
    1  localization position (collapsed) or final foil level (coherent)
    2  routing of a localized photon / photons scattered in a pulse
    3  whether the photon scatters at all / D2 count of a pulse
"""
from __future__ import annotations

import csv
import io
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from numpy.random import Philox
from scipy import special, stats

from .collapse import CollapseModel, collapse_rate, collapse_times
from .interferometer import InterferometerConfig, Topology, route_batch
from .oscillator import DEFAULT_N_MAX, FoilOscillator, KickSpec, lamb_dicke, level_distribution
from .scattering import ScatterCoupling, p_odd_exact

UNIFORMS_PER_TRIAL = 4
BLOCK_SIZE = 1 << 16
PASS_BELOW = 0.01
WARN_BELOW = 0.1
EVENT_COLUMNS = ("trial_id", "collapsed", "collapse_time_s", "x_loc_m", "foil_level", "photon_parity", "detector")
PULSE_COLUMNS = ("trial_id", "collapsed", "collapse_time_s", "x_loc_m", "scattered", "d1", "d2", "anomalous")

NO_DETECTOR, D1, D2 = 0, 1, 2
_DETECTOR_NAMES = {NO_DETECTOR: "none", D1: "D1", D2: "D2"}


class PulseAssumptionError(RuntimeError):
    pass


class ParityViolation(AssertionError):
    pass


_parity_audit = {"checked": 0, "violations": 0}


def parity_audit() -> dict:
    """Coherent events checked in this process so far, and violations found."""
    return dict(_parity_audit)


@dataclass(frozen=True)
class ExperimentPlan:
    config: InterferometerConfig
    foil: FoilOscillator
    model: CollapseModel = field(default_factory=CollapseModel.none)
    coupling: ScatterCoupling = field(default_factory=ScatterCoupling)
    photons_per_pulse: int = 1
    observation_window: float = 1.0
    trials: int = 1
    master_seed: int = 0
    pulse_duration: float = 0.0
    anomaly_threshold: int = 2
    n_max: int = DEFAULT_N_MAX

    def __post_init__(self):
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        if self.photons_per_pulse < 1:
            raise ValueError("photons_per_pulse must be >= 1")
        if not self.observation_window > 0:
            raise ValueError("observation_window must be positive")
        if self.pulse_duration < 0:
            raise ValueError("pulse_duration must be non-negative")
        if self.anomaly_threshold < 1:
            raise ValueError("anomaly_threshold must be >= 1")
        if not 0 <= self.master_seed < 2**64:
            raise ValueError("master_seed must be in [0, 2**64)")

    @property
    def eta(self) -> float:
        # an empty closed loop has nothing to recoil against
        if self.config.topology is Topology.CLOSED_LOOP:
            return 0.0
        return lamb_dicke(self.foil, KickSpec.reflection(self.config.photon.wavelength))

    @property
    def particle_count(self) -> float:
        return max(1.0, self.foil.particle_count)

    @property
    def collapse_rate(self) -> float:
        return collapse_rate(self.model, self.particle_count)

    @property
    def p_interaction(self) -> float:
        """Per-photon probability of an odd (D2-reaching) excitation."""
        return p_odd_exact(self.eta) * self.coupling.efficiency


@dataclass(frozen=True)
class EventRecord:
    trial_id: int
    collapsed: bool
    collapse_time: float | None
    x_loc: float | None
    foil_final_level: int | None
    photon_parity: str
    detector: str  # "D1", "D2" or "none" for an unscattered photon


@dataclass(frozen=True)
class PulseTally:
    trial_id: int
    collapsed: bool
    collapse_time: float | None
    x_loc: float | None
    scattered: int
    d1: int
    d2: int
    anomalous: bool


@dataclass(frozen=True)
class DetectorTally:
    d1: int
    d2: int
    d2_fraction: float
    d2_stderr: float
    anomalous_pulses: int = 0
    trials: int = 0
    unscattered: int = 0
    collapsed_trials: int = 0
    collapsed_d1: int = 0
    collapsed_d2: int = 0
    coherent_d1: int = 0
    coherent_d2: int = 0
    false_alarms: int = 0

    @property
    def scattered(self) -> int:
        return self.d1 + self.d2


def _concat(cls, batches):
    names = cls.__dataclass_fields__
    return cls(**{n: np.concatenate([getattr(b, n) for b in batches]) for n in names})


def _opt(x):
    return None if np.isnan(x) else float(x)


def _fmt(x) -> str:
    return "" if np.isnan(x) else repr(float(x))


@dataclass
class EventBatch:
    """Columnar single-photon events for a contiguous trial range."""

    trial_id: np.ndarray
    collapsed: np.ndarray
    collapse_time: np.ndarray  # nan when absent
    x_loc: np.ndarray  # nan when absent
    foil_level: np.ndarray  # -1 when collapsed
    photon_odd: np.ndarray
    detector: np.ndarray  # NO_DETECTOR / D1 / D2

    def __len__(self):
        return len(self.trial_id)

    @classmethod
    def concat(cls, batches):
        return _concat(cls, batches)

    def records(self):
        for i in range(len(self)):
            level = int(self.foil_level[i])
            yield EventRecord(
                int(self.trial_id[i]),
                bool(self.collapsed[i]),
                _opt(self.collapse_time[i]),
                _opt(self.x_loc[i]),
                None if level < 0 else level,
                "odd" if self.photon_odd[i] else "even",
                _DETECTOR_NAMES[int(self.detector[i])],
            )

    def parity_violations(self) -> int:
        coherent = ~self.collapsed
        return int(np.count_nonzero(self.photon_odd[coherent] != (self.foil_level[coherent] % 2 == 1)))

    def csv_rows(self):
        parity = np.where(self.photon_odd, "odd", "even")
        for i in range(len(self)):
            level = int(self.foil_level[i])
            yield (
                str(int(self.trial_id[i])),
                "1" if self.collapsed[i] else "0",
                _fmt(self.collapse_time[i]),
                _fmt(self.x_loc[i]),
                "" if level < 0 else str(level),
                parity[i],
                _DETECTOR_NAMES[int(self.detector[i])],
            )


@dataclass
class PulseBatch:
    trial_id: np.ndarray
    collapsed: np.ndarray
    collapse_time: np.ndarray
    x_loc: np.ndarray
    scattered: np.ndarray
    d1: np.ndarray
    d2: np.ndarray
    anomalous: np.ndarray

    def __len__(self):
        return len(self.trial_id)

    @classmethod
    def concat(cls, batches):
        return _concat(cls, batches)

    def records(self):
        for i in range(len(self)):
            yield PulseTally(
                int(self.trial_id[i]),
                bool(self.collapsed[i]),
                _opt(self.collapse_time[i]),
                _opt(self.x_loc[i]),
                int(self.scattered[i]),
                int(self.d1[i]),
                int(self.d2[i]),
                bool(self.anomalous[i]),
            )

    def csv_rows(self):
        for i in range(len(self)):
            yield (
                str(int(self.trial_id[i])),
                "1" if self.collapsed[i] else "0",
                _fmt(self.collapse_time[i]),
                _fmt(self.x_loc[i]),
                str(int(self.scattered[i])),
                str(int(self.d1[i])),
                str(int(self.d2[i])),
                "1" if self.anomalous[i] else "0",
            )


def trial_uniforms(master_seed: int, start: int, stop: int) -> np.ndarray:
    """Uniforms in (0, 1), shape ``(stop - start, 4)``; row i belongs to trial start + i."""
    raw = Philox(key=master_seed, counter=start).random_raw(UNIFORMS_PER_TRIAL * (stop - start))
    u = ((raw >> np.uint64(11)).astype(np.float64) + 0.5) * 2.0**-53
    return u.reshape(stop - start, UNIFORMS_PER_TRIAL)


def _collapse_columns(plan: ExperimentPlan, u):
    t = collapse_times(plan.collapse_rate, u[:, 0])
    collapsed = t <= plan.observation_window
    collapse_time = np.where(collapsed, t, np.nan)
    x_loc = np.where(collapsed, plan.foil.ground_rms * special.ndtri(u[:, 1]), np.nan)
    return collapsed, collapse_time, x_loc


def _verify_parity(batch: EventBatch) -> None:
    bad = batch.parity_violations()
    _parity_audit["checked"] += int(np.count_nonzero(~batch.collapsed))
    _parity_audit["violations"] += bad
    if bad:
        raise ParityViolation(f"{bad} coherent events with photon parity != foil parity")


def single_photon_block(plan: ExperimentPlan, start: int, stop: int) -> EventBatch:
    u = trial_uniforms(plan.master_seed, start, stop)
    trial_ids = np.arange(start, stop, dtype=np.int64)
    collapsed, collapse_time, x_loc = _collapse_columns(plan, u)

    scattered = u[:, 3] < plan.coupling.efficiency
    cdf = np.cumsum(level_distribution(plan.eta, plan.n_max))
    level = np.minimum(np.searchsorted(cdf, u[:, 1], side="right"), plan.n_max)
    level = np.where(scattered & ~collapsed, level, 0)
    level = np.where(collapsed, -1, level)

    d2 = route_batch(plan.config.topology, plan.config.photon.k, collapsed, x_loc, np.maximum(level, 0), u[:, 2])
    d2 &= scattered
    detector = np.where(scattered, np.where(d2, D2, D1), NO_DETECTOR).astype(np.int8)
    # coherent: parity follows the foil level; localized: the parity D1/D2 projected onto
    photon_odd = np.where(collapsed, d2, level % 2 == 1)
    return EventBatch(trial_ids, collapsed, collapse_time, x_loc, level, photon_odd, detector)


def pulse_block(plan: ExperimentPlan, start: int, stop: int) -> PulseBatch:
    u = trial_uniforms(plan.master_seed, start, stop)
    trial_ids = np.arange(start, stop, dtype=np.int64)
    collapsed, collapse_time, x_loc = _collapse_columns(plan, u)
    n = plan.photons_per_pulse

    scattered = stats.binom.ppf(u[:, 2], n, plan.coupling.efficiency).astype(np.int64)
    if plan.config.topology is Topology.SEMI_CLOSED:
        s2 = np.zeros(len(u))
    else:
        s2 = np.sin(2.0 * plan.config.photon.k * np.where(collapsed, x_loc, 0.0)) ** 2
    d2_localized = stats.binom.ppf(u[:, 3], scattered, s2)
    # coherent: at most one inelastic photon per pulse, and it reaches D2 only for odd levels
    p_any_odd = -np.expm1(scattered * np.log1p(-p_odd_exact(plan.eta)))
    d2_coherent = (u[:, 3] < p_any_odd).astype(np.float64)
    d2 = np.where(collapsed, d2_localized, d2_coherent).astype(np.int64)
    d1 = scattered - d2
    return PulseBatch(
        trial_ids, collapsed, collapse_time, x_loc, scattered, d1, d2, d2 >= plan.anomaly_threshold
    )


@dataclass(frozen=True)
class Check:
    name: str
    value: float
    threshold: float
    status: str


@dataclass(frozen=True)
class AssumptionReport:
    checks: tuple

    @property
    def status(self) -> str:
        order = {"pass": 0, "warn": 1, "fail": 2}
        return max((c.status for c in self.checks), key=order.__getitem__, default="pass")

    def format(self) -> str:
        lines = [f"{c.name}: {c.value:.6g} (warn at {PASS_BELOW:g}, fail at {c.threshold:g}) -> {c.status}" for c in self.checks]
        lines.append(f"pulse assumptions: {self.status}")
        return "\n".join(lines)


def _grade(value: float) -> str:
    if value < PASS_BELOW:
        return "pass"
    return "warn" if value < WARN_BELOW else "fail"


def check_pulse_assumptions(plan: ExperimentPlan) -> AssumptionReport:
    """Grade N * P_int and pulse_duration / oscillator_period against 0.01 / 0.1."""
    n_p = plan.photons_per_pulse * plan.p_interaction
    duty = plan.pulse_duration / plan.foil.period
    single = plan.photons_per_pulse == 1
    return AssumptionReport(
        (
            Check("N*P_int", n_p, WARN_BELOW, "pass" if single else _grade(n_p)),
            Check("pulse_duration/period", duty, WARN_BELOW, "pass" if single else _grade(duty)),
        )
    )


def _ensure_pulse_ok(plan, force):
    report = check_pulse_assumptions(plan)
    if report.status == "fail" and not force:
        raise PulseAssumptionError(report.format())
    return report


def run_single_photon_trial(plan: ExperimentPlan, trial_id: int) -> EventRecord:
    if plan.photons_per_pulse != 1:
        raise ValueError("single-photon trials need photons_per_pulse = 1")
    batch = single_photon_block(plan, trial_id, trial_id + 1)
    _verify_parity(batch)
    return next(batch.records())


def run_pulse(plan: ExperimentPlan, trial_id: int, *, force: bool = False) -> tuple[PulseTally, bool]:
    if plan.photons_per_pulse < 2:
        raise ValueError("pulse runs need photons_per_pulse >= 2")
    _ensure_pulse_ok(plan, force)
    tally = next(pulse_block(plan, trial_id, trial_id + 1).records())
    return tally, tally.anomalous


def _run_block(args):
    plan, start, stop = args
    if plan.photons_per_pulse == 1:
        return single_photon_block(plan, start, stop)
    return pulse_block(plan, start, stop)


def simulate(plan: ExperimentPlan, *, workers: int = 1, force: bool = False, block_size: int = BLOCK_SIZE):
    """Run every trial of ``plan``; returns an EventBatch (N = 1) or PulseBatch."""
    if plan.photons_per_pulse > 1:
        _ensure_pulse_ok(plan, force)
    jobs = [(plan, s, min(s + block_size, plan.trials)) for s in range(0, plan.trials, block_size)]
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(_run_block, jobs))
    else:
        parts = [_run_block(j) for j in jobs]
    batch = type(parts[0]).concat(parts)
    if isinstance(batch, EventBatch):
        _verify_parity(batch)
    return batch


def _binomial(d1, d2):
    n = d1 + d2
    frac = d2 / n if n else 0.0
    err = math.sqrt(frac * (1.0 - frac) / n) if n else 0.0
    return frac, err


def aggregate(records) -> DetectorTally:
    """Tally D1/D2 counts from an EventBatch, PulseBatch or a sequence of records."""
    if isinstance(records, (EventBatch, PulseBatch)):
        batch = records
    else:
        records = list(records)
        if not records:
            raise ValueError("cannot aggregate an empty record set")
        batch = _batch_from_records(records)
    if len(batch) == 0:
        raise ValueError("cannot aggregate an empty record set")

    coll = batch.collapsed
    if isinstance(batch, EventBatch):
        is1, is2 = batch.detector == D1, batch.detector == D2
        c1, c2 = int(np.count_nonzero(is1 & coll)), int(np.count_nonzero(is2 & coll))
        h1, h2 = int(np.count_nonzero(is1 & ~coll)), int(np.count_nonzero(is2 & ~coll))
        unscattered = int(np.count_nonzero(batch.detector == NO_DETECTOR))
        anomalous = false_alarms = 0
    else:
        c1, c2 = int(batch.d1[coll].sum()), int(batch.d2[coll].sum())
        h1, h2 = int(batch.d1[~coll].sum()), int(batch.d2[~coll].sum())
        unscattered = 0
        anomalous = int(np.count_nonzero(batch.anomalous))
        false_alarms = int(np.count_nonzero(batch.anomalous & ~coll))
    d1, d2 = c1 + h1, c2 + h2
    frac, err = _binomial(d1, d2)
    return DetectorTally(
        d1, d2, frac, err, anomalous, len(batch), unscattered,
        int(np.count_nonzero(coll)), c1, c2, h1, h2, false_alarms,
    )


def _batch_from_records(records):
    if all(isinstance(r, EventRecord) for r in records):
        det = {"none": NO_DETECTOR, "D1": D1, "D2": D2}
        return EventBatch(
            np.array([r.trial_id for r in records], dtype=np.int64),
            np.array([r.collapsed for r in records], dtype=bool),
            np.array([np.nan if r.collapse_time is None else r.collapse_time for r in records]),
            np.array([np.nan if r.x_loc is None else r.x_loc for r in records]),
            np.array([-1 if r.foil_final_level is None else r.foil_final_level for r in records], dtype=np.int64),
            np.array([r.photon_parity == "odd" for r in records], dtype=bool),
            np.array([det[r.detector] for r in records], dtype=np.int8),
        )
    if all(isinstance(r, PulseTally) for r in records):
        return PulseBatch(
            np.array([r.trial_id for r in records], dtype=np.int64),
            np.array([r.collapsed for r in records], dtype=bool),
            np.array([np.nan if r.collapse_time is None else r.collapse_time for r in records]),
            np.array([np.nan if r.x_loc is None else r.x_loc for r in records]),
            np.array([r.scattered for r in records], dtype=np.int64),
            np.array([r.d1 for r in records], dtype=np.int64),
            np.array([r.d2 for r in records], dtype=np.int64),
            np.array([r.anomalous for r in records], dtype=bool),
        )
    raise TypeError("records must all be EventRecord or all PulseTally")


def write_csv(batch, fh, *, comment: str | None = None) -> None:
    """Write an event or pulse stream as CSV, optionally preceded by '# ' comment lines."""
    if comment:
        for line in comment.splitlines():
            fh.write(f"# {line}\n")
    columns = EVENT_COLUMNS if isinstance(batch, EventBatch) else PULSE_COLUMNS
    writer = csv.writer(fh, lineterminator="\n")
    writer.writerow(columns)
    writer.writerows(batch.csv_rows())


def to_csv_string(batch, **kwargs) -> str:
    buf = io.StringIO()
    write_csv(batch, buf, **kwargs)
    return buf.getvalue()
