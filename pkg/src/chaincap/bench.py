"""Workload campaigns against the simulator.

Covers steady-state detection (arrival rate == throughput within tolerance),
multi-trial Poisson campaigns, maximum-sustainable-rate search by
exponential bracketing plus bisection, and node-count sweeps.
"""

from __future__ import annotations

import csv
import json
import math
import statistics
from dataclasses import dataclass, field, replace

import numpy as np

from .arrival import ArrivalKind, ArrivalProcess, TxKind, check_rate, generate_events
from .chainsim import ClusterConfig, MetricsTimeline, run
from .errors import CalibrationError, ContractError, DomainError
from .scenarios import DEFAULT_WRITE_PAYLOAD_BYTES

DEFAULT_STEADY_TOLERANCE = 0.02   # relative; the source experiments report none
DEFAULT_WARMUP_FRACTION = 0.1
DEFAULT_SEARCH_TOLERANCE = 0.01

# full-protocol experiment shape: 5 trials of 10 minutes each
PAPER_TRIALS = 5
PAPER_DURATION_S = 600
# desk-scale defaults keep the acceptance suite laptop-sized
DESK_TRIALS = 3
DESK_DURATION_S = 60


@dataclass(frozen=True)
class CampaignSpec:
    """A grid of (rate x trial) simulations on one cluster."""

    cluster: ClusterConfig
    kind: TxKind
    rates: tuple[float, ...]
    arrival_kind: ArrivalKind = ArrivalKind.POISSON
    trials: int = PAPER_TRIALS
    duration_s: float = PAPER_DURATION_S
    base_seed: int = 0
    window_s: float = 1.0
    warmup_fraction: float = DEFAULT_WARMUP_FRACTION
    steady_tolerance: float = DEFAULT_STEADY_TOLERANCE

    def __post_init__(self):
        if self.trials < 1:
            raise DomainError(f"trials must be >= 1, got {self.trials}")
        if self.duration_s < 10 * self.window_s:
            raise DomainError("duration_s must cover at least 10 windows")
        for r in self.rates:
            check_rate(r, "rate")


@dataclass(frozen=True)
class TrialSummary:
    """Post-warmup means of one simulation trial."""

    lambda_offered: float
    mean_tps: float
    mean_latency_ms: float
    mean_cpu: float
    steady: bool
    seed: int


@dataclass(frozen=True)
class RateAggregate:
    """Across-trial mean and sample standard deviation at one offered rate."""

    lambda_offered: float
    mean_tps: float
    std_tps: float
    mean_latency_ms: float
    std_latency_ms: float
    mean_cpu: float
    steady_trials: int
    trials: int


@dataclass(frozen=True)
class CampaignResult:
    spec: CampaignSpec
    trials: tuple[TrialSummary, ...]
    aggregates: tuple[RateAggregate, ...]


@dataclass(frozen=True)
class CapacityProfile:
    """Maximum sustainable arrival rates for one cluster size."""

    node_count: int
    max_lambda_read: float
    max_lambda_write: float
    search_tolerance: float
    source: str = "simulated"

    def validate(self) -> None:
        if self.max_lambda_read <= 0 or self.max_lambda_write <= 0:
            raise DomainError("capacity maxima must be > 0")

    def to_json_dict(self) -> dict:
        # an axis never searched (inf) serializes as null
        return {
            "schema_version": 1,
            "node_count": self.node_count,
            "max_lambda_read": self.max_lambda_read if math.isfinite(self.max_lambda_read) else None,
            "max_lambda_write": self.max_lambda_write if math.isfinite(self.max_lambda_write) else None,
            "search_tolerance": self.search_tolerance,
            "source": self.source,
        }

    @classmethod
    def from_json_dict(cls, doc: dict) -> "CapacityProfile":
        if doc.get("schema_version") != 1:
            raise DomainError(f"unsupported capacity schema_version {doc.get('schema_version')!r}")
        read = doc.get("max_lambda_read")
        write = doc.get("max_lambda_write")
        profile = cls(
            node_count=int(doc["node_count"]),
            max_lambda_read=float(read) if read is not None else math.inf,
            max_lambda_write=float(write) if write is not None else math.inf,
            search_tolerance=float(doc.get("search_tolerance", 0.0)),
            source=str(doc.get("source", "file")),
        )
        profile.validate()
        return profile


def detect_steady_state(lambda_offered: float, mean_tps: float,
                        tolerance: float = DEFAULT_STEADY_TOLERANCE) -> bool:
    """Steady iff throughput matches the offered rate within tolerance."""
    if lambda_offered <= 0:
        raise DomainError(f"lambda_offered must be > 0, got {lambda_offered}")
    if not 0 < tolerance <= 0.1:
        raise DomainError(f"steady tolerance must be in (0, 0.1], got {tolerance}")
    return abs(mean_tps - lambda_offered) <= tolerance * lambda_offered


def run_trial(cluster: ClusterConfig, kind: TxKind, arrival_kind: ArrivalKind,
              lam: float, duration_s: float, seed: int,
              window_s: float = 1.0,
              warmup_fraction: float = DEFAULT_WARMUP_FRACTION,
              steady_tolerance: float = DEFAULT_STEADY_TOLERANCE) -> TrialSummary:
    """One simulation at one offered rate; means exclude the warm-up prefix."""
    check_rate(lam, "lambda")
    if lam <= 0:
        raise DomainError("trial rate must be > 0")
    payload = DEFAULT_WRITE_PAYLOAD_BYTES if kind is TxKind.WRITE else 0
    process = ArrivalProcess(kind=arrival_kind, rate=lam, seed=seed)
    events = generate_events(process, kind, duration_s, payload_bytes=payload,
                             scenario_tag="bench")
    timeline = run(cluster, events, horizon=duration_s, seed=seed, window_s=window_s)
    skip = int(timeline.n_windows * warmup_fraction)
    if kind is TxKind.WRITE:
        mean_tps = timeline.mean_committed_write_tps(skip)
        lat = timeline.mean_write_latency_ms[skip:]
        counts = timeline.committed_write_tps[skip:]
    else:
        mean_tps = timeline.mean_served_read_tps(skip)
        lat = timeline.mean_read_latency_ms[skip:]
        counts = timeline.served_read_tps[skip:]
    total = counts.sum()
    mean_latency = float((lat * counts).sum() / total) if total > 0 else 0.0
    mean_cpu = float(timeline.cpu_utilization[:, skip:].mean())
    return TrialSummary(
        lambda_offered=lam,
        mean_tps=mean_tps,
        mean_latency_ms=mean_latency,
        mean_cpu=mean_cpu,
        steady=detect_steady_state(lam, mean_tps, steady_tolerance),
        seed=seed,
    )


def run_campaign(spec: CampaignSpec) -> CampaignResult:
    """Run trials x rates with seeds base_seed + trial index; aggregate per rate."""
    trials: list[TrialSummary] = []
    aggregates: list[RateAggregate] = []
    for rate in spec.rates:
        rate_trials = []
        for i in range(spec.trials):
            try:
                summary = run_trial(
                    spec.cluster, spec.kind, spec.arrival_kind, rate,
                    spec.duration_s, seed=spec.base_seed + i,
                    window_s=spec.window_s, warmup_fraction=spec.warmup_fraction,
                    steady_tolerance=spec.steady_tolerance)
            except Exception as exc:
                raise CalibrationError(
                    f"trial failed at rate={rate} trial={i}: {exc}") from exc
            rate_trials.append(summary)
        trials.extend(rate_trials)
        tps = [t.mean_tps for t in rate_trials]
        lats = [t.mean_latency_ms for t in rate_trials]
        aggregates.append(RateAggregate(
            lambda_offered=rate,
            mean_tps=statistics.fmean(tps),
            std_tps=statistics.stdev(tps) if len(tps) > 1 else 0.0,
            mean_latency_ms=statistics.fmean(lats),
            std_latency_ms=statistics.stdev(lats) if len(lats) > 1 else 0.0,
            mean_cpu=statistics.fmean(t.mean_cpu for t in rate_trials),
            steady_trials=sum(t.steady for t in rate_trials),
            trials=spec.trials,
        ))
    return CampaignResult(spec=spec, trials=tuple(trials), aggregates=tuple(aggregates))


def find_max_lambda(cluster: ClusterConfig, kind: TxKind,
                    arrival_kind: ArrivalKind = ArrivalKind.POISSON,
                    tolerance: float = DEFAULT_SEARCH_TOLERANCE,
                    duration_s: float = DESK_DURATION_S,
                    base_seed: int = 0,
                    start: float = 100.0,
                    steady_tolerance: float = DEFAULT_STEADY_TOLERANCE) -> float:
    """Largest steady arrival rate, by exponential bracketing then bisection.

    Each probe reuses ``base_seed`` so the steady predicate is a deterministic
    function of the rate.  Raises :class:`CalibrationError` when even the
    smallest probe is unsteady.
    """
    if not 0 < tolerance <= 0.05:
        raise DomainError(f"search tolerance must be in (0, 0.05], got {tolerance}")
    cluster.validate()

    def steady(lam: float) -> bool:
        summary = run_trial(cluster, kind, arrival_kind, lam, duration_s,
                            seed=base_seed, steady_tolerance=steady_tolerance)
        return summary.steady

    lo = check_rate(start, "start")
    if lo <= 0:
        raise DomainError("start rate must be > 0")
    if not steady(lo):
        raise CalibrationError(
            f"no steady operating point at the smallest probe rate {lo}; "
            "the cluster profile looks miscalibrated")
    hi = lo * 2.0
    while steady(hi):
        lo = hi
        hi *= 2.0
    while hi / lo - 1.0 > tolerance:
        mid = math.sqrt(lo * hi)
        if steady(mid):
            lo = mid
        else:
            hi = mid
    return lo


def sweep_nodes(base_cluster: ClusterConfig, node_counts: list[int], kind: TxKind,
                arrival_kind: ArrivalKind = ArrivalKind.POISSON,
                tolerance: float = DEFAULT_SEARCH_TOLERANCE,
                duration_s: float = DESK_DURATION_S,
                base_seed: int = 0,
                start: float = 100.0) -> list[CapacityProfile]:
    """Run the capacity search per node count; output ordered by node count."""
    for n in node_counts:
        if n < 4:
            raise DomainError(f"node counts must be >= 4, got {n}")
    profiles = []
    for n in sorted(node_counts):
        cluster = replace(base_cluster, node_count=n)
        lam = find_max_lambda(cluster, kind, arrival_kind, tolerance=tolerance,
                              duration_s=duration_s, base_seed=base_seed, start=start)
        if kind is TxKind.WRITE:
            profiles.append(CapacityProfile(node_count=n, max_lambda_read=math.inf,
                                            max_lambda_write=lam,
                                            search_tolerance=tolerance))
        else:
            profiles.append(CapacityProfile(node_count=n, max_lambda_read=lam,
                                            max_lambda_write=math.inf,
                                            search_tolerance=tolerance))
    return profiles


# --- result emitters -------------------------------------------------------

def write_campaign_csv(result: CampaignResult, fp) -> None:
    """One row per trial, stable column order."""
    writer = csv.writer(fp, lineterminator="\n")
    writer.writerow(["lambda_offered", "trial", "seed", "mean_tps",
                     "mean_latency_ms", "mean_cpu", "steady"])
    by_rate: dict[float, int] = {}
    for t in result.trials:
        idx = by_rate.get(t.lambda_offered, 0)
        by_rate[t.lambda_offered] = idx + 1
        writer.writerow([repr(t.lambda_offered), idx, t.seed, repr(t.mean_tps),
                         repr(t.mean_latency_ms), repr(t.mean_cpu), int(t.steady)])


def campaign_json_dict(result: CampaignResult) -> dict:
    spec = result.spec
    return {
        "schema_version": 1,
        "kind": spec.kind.value,
        "arrival_kind": spec.arrival_kind.value,
        "node_count": spec.cluster.node_count,
        "trials": spec.trials,
        "duration_s": spec.duration_s,
        "base_seed": spec.base_seed,
        "steady_tolerance": spec.steady_tolerance,
        "aggregates": [
            {
                "lambda_offered": a.lambda_offered,
                "mean_tps": a.mean_tps,
                "std_tps": a.std_tps,
                "mean_latency_ms": a.mean_latency_ms,
                "std_latency_ms": a.std_latency_ms,
                "mean_cpu": a.mean_cpu,
                "steady_trials": a.steady_trials,
                "trials": a.trials,
            }
            for a in result.aggregates
        ],
    }


def write_plot_data_csv(result: CampaignResult, fp) -> None:
    """Per-figure plot data: arrival rate vs tps, cpu and latency."""
    writer = csv.writer(fp, lineterminator="\n")
    writer.writerow(["arrival_rate", "tps", "cpu_utilization", "latency_ms"])
    for a in result.aggregates:
        writer.writerow([repr(a.lambda_offered), repr(a.mean_tps),
                         repr(a.mean_cpu), repr(a.mean_latency_ms)])
