"""Transaction arrival model.

Transactions reach the blockchain as a stream of read/write events.  The
stream is either a Poisson process (exponential interarrivals at rate
``lambda``) or a deterministic comb at spacing ``1/lambda`` used as a
calibration baseline.  Rates are derived from a workload's concurrent-event
rate ``eta`` and its per-event read/write multiplicities ``alpha``/``beta``:

    lambda_read  = eta * alpha
    lambda_write = eta * beta

Streams are generated with a counter-based PRNG (Philox) so that identical
(kind, rate, seed) always reproduce the identical stream, and independent
trials can simply use different seeds.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import DomainError


class ArrivalKind(Enum):
    POISSON = "poisson"
    DETERMINISTIC = "deterministic"


class TxKind(Enum):
    READ = "read"
    WRITE = "write"


def check_rate(value: float, name: str = "rate") -> float:
    """Validate a per-second rate: finite and non-negative."""
    value = float(value)
    if not math.isfinite(value) or value < 0.0:
        raise DomainError(f"{name} must be a finite non-negative rate, got {value!r}")
    return value


@dataclass(frozen=True)
class WorkloadMultiplicity:
    """Concurrent-event rate plus per-event read/write transaction counts."""

    eta: float  # concurrent events per second
    alpha: int  # read transactions per event
    beta: int   # write transactions per event

    def __post_init__(self):
        check_rate(self.eta, "eta")
        if self.alpha < 0:
            raise DomainError(f"alpha must be >= 0, got {self.alpha}")
        if self.beta < 0:
            raise DomainError(f"beta must be >= 0, got {self.beta}")
        if self.alpha + self.beta < 1:
            raise DomainError("a usable workload needs at least one read or write per event")


def lambda_write(m: WorkloadMultiplicity) -> float:
    """Write-transaction arrival rate: eta * beta, exact."""
    return m.eta * m.beta


def lambda_read(m: WorkloadMultiplicity) -> float:
    """Read-transaction arrival rate: eta * alpha, exact."""
    return m.eta * m.alpha


@dataclass(frozen=True)
class ArrivalProcess:
    """A reproducible interarrival generator.

    Identical (kind, rate, seed) produce bitwise-identical streams.
    """

    kind: ArrivalKind
    rate: float
    seed: int = 0

    def __post_init__(self):
        check_rate(self.rate, "rate")

    def rng(self) -> np.random.Generator:
        """Fresh generator positioned at the start of this process's stream."""
        return np.random.Generator(np.random.Philox(key=self.seed))


@dataclass(frozen=True, slots=True)
class TxEvent:
    """One transaction arrival.

    ``seq`` is a monotone sequence number breaking timestamp ties.
    """

    timestamp: float  # seconds since stream start
    kind: TxKind
    payload_bytes: int = 0
    scenario_tag: str = ""
    seq: int = 0


def sample_interarrival(rate: float, rng: np.random.Generator) -> float:
    """Draw one exponential interarrival time via inverse transform.

    Uses t = -log(1 - u) / rate for u uniform on [0, 1), i.e. the inverse of
    the exponential CDF F(t) = 1 - exp(-rate * t).  Advances ``rng`` by one
    uniform per accepted draw.
    """
    rate = check_rate(rate, "rate")
    if rate == 0.0:
        raise DomainError("rate must be > 0 for interarrival sampling, got 0.0")
    while True:
        u = rng.random()
        t = -math.log1p(-u) / rate
        if t > 0.0:
            return t


def _check_horizon(horizon: float) -> float:
    horizon = float(horizon)
    if not math.isfinite(horizon) or horizon <= 0.0:
        raise DomainError(f"horizon must be finite and > 0, got {horizon!r}")
    return horizon


def generate_times(process: ArrivalProcess, horizon: float) -> np.ndarray:
    """Arrival timestamps in (0, horizon], non-decreasing.

    Poisson streams consume uniforms in the same order as repeated
    ``sample_interarrival`` calls on the process's generator, so the first
    timestamp equals the first scalar draw exactly.
    """
    horizon = _check_horizon(horizon)
    rate = process.rate
    if rate == 0.0:
        return np.empty(0, dtype=np.float64)

    if process.kind is ArrivalKind.DETERMINISTIC:
        n = int(math.floor(horizon * rate * (1.0 + 1e-12)))
        times = np.arange(1, n + 1, dtype=np.float64) / rate
        return times[times <= horizon]

    rng = process.rng()
    mean = rate * horizon
    chunk = max(1024, int(mean + 10.0 * math.sqrt(mean) + 64))
    pieces = []
    t = 0.0
    while True:
        u = rng.random(chunk)
        deltas = -np.log1p(-u) / rate
        times = t + np.cumsum(deltas)
        if times[-1] > horizon:
            pieces.append(times[times <= horizon])
            break
        pieces.append(times)
        t = float(times[-1])
    return np.concatenate(pieces) if len(pieces) > 1 else pieces[0]


def generate_events(
    process: ArrivalProcess,
    kind: TxKind,
    horizon: float,
    payload_bytes: int = 0,
    scenario_tag: str = "",
) -> list[TxEvent]:
    """Materialize the arrival stream as an ordered list of transactions."""
    if payload_bytes < 0:
        raise DomainError(f"payload_bytes must be >= 0, got {payload_bytes}")
    times = generate_times(process, horizon)
    return [
        TxEvent(timestamp=float(t), kind=kind, payload_bytes=payload_bytes,
                scenario_tag=scenario_tag, seq=i)
        for i, t in enumerate(times)
    ]
