"""Discrete-event simulation of an IBFT-style consortium blockchain cluster.

Writes go through three-phase BFT consensus (pre-prepare, prepare, commit):
a rotating proposer fills a block from the pending pool at each proposal
opportunity, the round latency covers three one-way network hops to reach
quorum plus message handling, block execution, and a pool-scan penalty that
grows with backlog.  Blocks are sequential; the next proposal starts at
``max(previous commit, previous proposal + block interval)``, so an idle
chain still produces empty blocks at the configured cadence.

Reads never touch consensus: each read queues FIFO at one node (round-robin
across nodes in multi-node mode, node 0 in single-node mode) and completes
after a fixed service time.

One run is single-threaded and fully deterministic in its inputs.
"""

from __future__ import annotations

import configparser
import csv
import math
from dataclasses import dataclass, field, replace
from importlib import resources
from typing import Sequence

import numpy as np

from .arrival import TxEvent, TxKind
from .errors import ConfigError, ContractError, SchemaError

CONFIG_SCHEMA_VERSION = 1


@dataclass(frozen=True)
class ClusterConfig:
    """Simulated cluster: topology, consensus costs, and node capacities.

    Cost knobs are calibration parameters; the shipped defaults are tuned so
    a 4-node cluster saturates near 1400 write tps and near 20500 read tps
    in multi-node read mode (see scripts/calibrate.py).
    """

    node_count: int = 4
    rtt_ms: float = 30.0                      # constant pairwise RTT
    rtt_matrix_ms: tuple[tuple[float, ...], ...] | None = None  # optional per-pair RTTs
    block_interval_ms: float = 100.0
    block_tx_capacity: int = 700
    write_exec_us: float = 540.0              # per committed write, every node
    read_service_us: float = 195.0            # per read at the serving node
    msg_proc_us: float = 2000.0               # per consensus message
    pool_scan_cost_us_per_tx: float = 20.0    # proposer backlog penalty
    node_cpu_capacity: float = 2_000_000.0    # work units (us) per second per node
    node_mem_bytes: int = 17_179_869_184
    empty_block_bytes: int = 1024
    read_mode: str = "multi"                  # "multi" or "single"

    def validate(self) -> None:
        if self.node_count < 4:
            raise ConfigError(f"node_count must be >= 4 for BFT (f >= 1), got {self.node_count}")
        if self.block_tx_capacity < 1:
            raise ConfigError(f"block_tx_capacity must be >= 1, got {self.block_tx_capacity}")
        if self.block_interval_ms <= 0:
            raise ConfigError(f"block_interval_ms must be > 0, got {self.block_interval_ms}")
        for name in ("rtt_ms", "write_exec_us", "read_service_us", "msg_proc_us",
                     "pool_scan_cost_us_per_tx"):
            value = getattr(self, name)
            if not math.isfinite(value) or value < 0:
                raise ConfigError(f"{name} must be finite and >= 0, got {value!r}")
        if self.node_cpu_capacity <= 0:
            raise ConfigError(f"node_cpu_capacity must be > 0, got {self.node_cpu_capacity}")
        if self.node_mem_bytes < 0 or self.empty_block_bytes < 0:
            raise ConfigError("memory and block overhead sizes must be >= 0")
        if self.read_mode not in ("multi", "single"):
            raise ConfigError(f"read_mode must be 'multi' or 'single', got {self.read_mode!r}")
        if self.rtt_matrix_ms is not None:
            n = self.node_count
            if len(self.rtt_matrix_ms) != n or any(len(row) != n for row in self.rtt_matrix_ms):
                raise ConfigError(f"rtt_matrix_ms must be {n}x{n}")
            if any(v < 0 for row in self.rtt_matrix_ms for v in row):
                raise ConfigError("rtt_matrix_ms entries must be >= 0")

    def one_way_ms(self, a: int, b: int) -> float:
        if self.rtt_matrix_ms is not None:
            return self.rtt_matrix_ms[a][b] / 2.0
        return self.rtt_ms / 2.0


@dataclass(frozen=True)
class ConsensusParams:
    """BFT quorum parameters: f = floor((N-1)/3), quorum = 2f + 1."""

    node_count: int
    f: int
    quorum: int

    PHASES = ("pre_prepare", "prepare", "commit")

    @classmethod
    def for_cluster(cls, cluster: ClusterConfig) -> "ConsensusParams":
        n = cluster.node_count
        f = (n - 1) // 3
        return cls(node_count=n, f=f, quorum=2 * f + 1)


def consensus_message_count(n: int) -> int:
    # one pre-prepare broadcast (N) plus all-to-all prepare and commit (N^2 each)
    return 2 * n * n + n


def consensus_round_latency(cluster: ClusterConfig, params: ConsensusParams,
                            block_fill: int, pool_depth: int,
                            proposer: int = 0) -> float:
    """Wall-clock milliseconds for one three-phase round.

    Three one-way hops at the quorum-th smallest peer latency, plus message
    handling, block execution, and the proposer's pool scan.  Monotone
    non-decreasing in block_fill and pool_depth.
    """
    if block_fill > cluster.block_tx_capacity:
        raise ContractError(
            f"block_fill {block_fill} exceeds block_tx_capacity {cluster.block_tx_capacity}")
    peers = sorted(cluster.one_way_ms(proposer, b)
                   for b in range(cluster.node_count) if b != proposer)
    hop_ms = peers[params.quorum - 1]
    network_ms = 3.0 * hop_ms
    msg_ms = cluster.msg_proc_us * consensus_message_count(cluster.node_count) / 1000.0
    exec_ms = cluster.write_exec_us * block_fill / 1000.0
    scan_ms = cluster.pool_scan_cost_us_per_tx * pool_depth / 1000.0
    return network_ms + msg_ms + exec_ms + scan_ms


class ReadServer:
    """FIFO read queues, one per node, constant service time per read."""

    def __init__(self, cluster: ClusterConfig):
        cluster.validate()
        self._service_s = cluster.read_service_us * 1e-6
        self._busy_until = [0.0] * cluster.node_count
        self._n = cluster.node_count

    def serve_read(self, node_id: int, arrival_s: float) -> float:
        """Queue one read at a node; returns its completion time in seconds."""
        if not 0 <= node_id < self._n:
            raise ContractError(f"node_id {node_id} out of range for {self._n} nodes")
        done = max(arrival_s, self._busy_until[node_id]) + self._service_s
        self._busy_until[node_id] = done
        return done


def serve_read(cluster: ClusterConfig, node_id: int, read_event: TxEvent,
               server: ReadServer | None = None) -> float:
    """One-shot convenience wrapper around :class:`ReadServer`."""
    if server is None:
        server = ReadServer(cluster)
    return server.serve_read(node_id, read_event.timestamp)


def _fifo_completions(arrivals: np.ndarray, service_s: float) -> np.ndarray:
    """Vectorized FIFO recurrence c_i = max(a_i, c_{i-1}) + s for one node."""
    if arrivals.size == 0:
        return arrivals.copy()
    i = np.arange(arrivals.size, dtype=np.float64)
    return service_s * (i + 1.0) + np.maximum.accumulate(arrivals - service_s * i)


def cpu_utilization(work_us: float, node_cpu_capacity: float, window_s: float) -> float:
    """Fraction of one node's capacity used by ``work_us`` within a window."""
    if window_s <= 0:
        raise ContractError(f"window must be > 0, got {window_s}")
    return min(1.0, work_us / (node_cpu_capacity * window_s * 1.0))


@dataclass
class MetricsTimeline:
    """Per-window metrics of one simulation run plus end-of-run totals."""

    window_s: float
    committed_write_tps: np.ndarray
    served_read_tps: np.ndarray
    mean_write_latency_ms: np.ndarray
    mean_read_latency_ms: np.ndarray
    cpu_utilization: np.ndarray       # shape (node_count, n_windows)
    pool_depth: np.ndarray            # pending writes at each window end
    ledger_bytes: np.ndarray          # cumulative at each window end
    arrived_writes: int
    committed_writes: int
    pending_writes: int
    arrived_reads: int
    served_reads: int
    blocks_produced: int
    read_completions_s: np.ndarray | None = None
    write_latencies_ms: np.ndarray | None = None

    @property
    def n_windows(self) -> int:
        return len(self.committed_write_tps)

    def mean_committed_write_tps(self, skip_windows: int = 0) -> float:
        return float(np.mean(self.committed_write_tps[skip_windows:]))

    def mean_served_read_tps(self, skip_windows: int = 0) -> float:
        return float(np.mean(self.served_read_tps[skip_windows:]))

    def to_csv(self, fp) -> None:
        """Write the timeline, one row per window, header row first."""
        n_nodes = self.cpu_utilization.shape[0]
        writer = csv.writer(fp, lineterminator="\n")
        header = ["window_index", "window_start_s", "committed_write_tps",
                  "served_read_tps", "mean_write_latency_ms", "mean_read_latency_ms"]
        header += [f"cpu_utilization_node{i}" for i in range(n_nodes)]
        header += ["pool_depth", "ledger_bytes"]
        writer.writerow(header)
        for w in range(self.n_windows):
            row = [w, repr(w * self.window_s),
                   repr(float(self.committed_write_tps[w])),
                   repr(float(self.served_read_tps[w])),
                   repr(float(self.mean_write_latency_ms[w])),
                   repr(float(self.mean_read_latency_ms[w]))]
            row += [repr(float(self.cpu_utilization[i, w])) for i in range(n_nodes)]
            row += [int(self.pool_depth[w]), int(self.ledger_bytes[w])]
            writer.writerow(row)


def _check_sorted(events: Sequence[TxEvent]) -> None:
    prev = (-math.inf, -1)
    for e in events:
        key = (e.timestamp, e.seq)
        if key < prev:
            raise ContractError("events must be sorted by (timestamp, seq)")
        prev = key


def run(cluster: ClusterConfig, events: Sequence[TxEvent], horizon: float,
        seed: int = 0, window_s: float = 1.0, produce_blocks: bool = True,
        keep_detail: bool = False) -> MetricsTimeline:
    """Simulate the cluster against a merged read/write event stream.

    ``events`` must be sorted by (timestamp, seq) and fit within ``horizon``.
    ``produce_blocks=False`` disables consensus entirely (read-only runs).
    ``seed`` is recorded for reproducibility bookkeeping; the simulation
    itself is deterministic and draws no randomness.
    """
    del seed  # the simulation is deterministic; seeds only label runs
    cluster.validate()
    if not math.isfinite(horizon) or horizon <= 0:
        raise ContractError(f"horizon must be finite and > 0, got {horizon!r}")
    if window_s <= 0:
        raise ContractError(f"window_s must be > 0, got {window_s}")
    _check_sorted(events)
    if events and events[-1].timestamp > horizon:
        raise ContractError("horizon must cover the last event timestamp")

    params = ConsensusParams.for_cluster(cluster)
    n_nodes = cluster.node_count
    n_windows = max(1, int(math.ceil(horizon / window_s - 1e-9)))

    write_ts = np.array([e.timestamp for e in events if e.kind is TxKind.WRITE])
    write_payload = np.array(
        [e.payload_bytes for e in events if e.kind is TxKind.WRITE], dtype=np.int64)
    read_ts = np.array([e.timestamp for e in events if e.kind is TxKind.READ])

    committed_count = np.zeros(n_windows)
    committed_latency_sum = np.zeros(n_windows)
    served_count = np.zeros(n_windows)
    served_latency_sum = np.zeros(n_windows)
    work_us = np.zeros((n_nodes, n_windows))
    ledger_events: list[tuple[float, int]] = []  # (commit time, block bytes)

    def window_of(t: float) -> int:
        return min(n_windows - 1, int(t / window_s))

    # --- reads: FIFO queues, no consensus involvement ---
    if read_ts.size:
        if cluster.read_mode == "single":
            assignment = np.zeros(read_ts.size, dtype=np.int64)
        else:
            assignment = np.arange(read_ts.size, dtype=np.int64) % n_nodes
        service_s = cluster.read_service_us * 1e-6
        completions = np.empty(read_ts.size)
        for node in range(n_nodes):
            mask = assignment == node
            if not mask.any():
                continue
            completions[mask] = _fifo_completions(read_ts[mask], service_s)
        in_run = completions <= horizon
        done = completions[in_run]
        widx = np.minimum((done / window_s).astype(np.int64), n_windows - 1)
        np.add.at(served_count, widx, 1.0)
        np.add.at(served_latency_sum, widx, (done - read_ts[in_run]) * 1000.0)
        for node in range(n_nodes):
            mask = in_run & (assignment == node)
            if mask.any():
                nw = np.minimum((completions[mask] / window_s).astype(np.int64), n_windows - 1)
                np.add.at(work_us[node], nw, cluster.read_service_us)
        served_reads = int(in_run.sum())
        read_completions = completions if keep_detail else None
    else:
        served_reads = 0
        read_completions = np.empty(0) if keep_detail else None

    # --- writes: sequential proposer-rotating block production ---
    interval_s = cluster.block_interval_ms / 1000.0
    i_commit = 0          # writes committed so far (FIFO prefix of write_ts)
    blocks_produced = 0
    total_tx_bytes = 0
    proposer = 0
    write_latencies: list[np.ndarray] = []
    commit_boundaries: list[tuple[float, int]] = []  # (commit time, committed total)
    if produce_blocks and n_windows:
        t_prop = interval_s
        while t_prop <= horizon + 1e-12:
            arrived = int(np.searchsorted(write_ts, t_prop, side="right"))
            pool_depth = arrived - i_commit
            fill = min(cluster.block_tx_capacity, pool_depth)
            latency_ms = consensus_round_latency(cluster, params, fill, pool_depth, proposer)
            t_commit = t_prop + latency_ms / 1000.0
            if t_commit > horizon:
                break
            blocks_produced += 1
            block_bytes = cluster.empty_block_bytes + int(
                write_payload[i_commit:i_commit + fill].sum())
            total_tx_bytes += block_bytes - cluster.empty_block_bytes
            ledger_events.append((t_commit, block_bytes))
            w = window_of(t_commit)
            if fill:
                lat = (t_commit - write_ts[i_commit:i_commit + fill]) * 1000.0
                committed_count[w] += fill
                committed_latency_sum[w] += float(lat.sum())
                if keep_detail:
                    write_latencies.append(lat)
                i_commit += fill
            # every node validates the block and handles ~2N messages
            per_node_us = (cluster.write_exec_us * fill
                           + cluster.msg_proc_us * 2 * n_nodes)
            work_us[:, w] += per_node_us
            work_us[proposer, w] += cluster.pool_scan_cost_us_per_tx * pool_depth
            commit_boundaries.append((t_commit, i_commit))
            proposer = (proposer + 1) % n_nodes
            t_prop = max(t_commit, t_prop + interval_s)

    # --- per-window series ---
    boundaries = (np.arange(1, n_windows + 1)) * window_s
    arrived_by = np.searchsorted(write_ts, boundaries, side="right")
    if commit_boundaries:
        commit_times = np.array([t for t, _ in commit_boundaries])
        commit_totals = np.array([c for _, c in commit_boundaries])
        idx = np.searchsorted(commit_times, boundaries, side="right")
        committed_by = np.where(idx > 0, commit_totals[np.maximum(idx - 1, 0)], 0)
    else:
        committed_by = np.zeros(n_windows, dtype=np.int64)
    pool_series = arrived_by - committed_by

    if ledger_events:
        ledger_times = np.array([t for t, _ in ledger_events])
        ledger_cum = np.cumsum([b for _, b in ledger_events])
        idx = np.searchsorted(ledger_times, boundaries, side="right")
        ledger_series = np.where(idx > 0, ledger_cum[np.maximum(idx - 1, 0)], 0)
    else:
        ledger_series = np.zeros(n_windows, dtype=np.int64)

    with np.errstate(invalid="ignore", divide="ignore"):
        mean_write_lat = np.where(committed_count > 0,
                                  committed_latency_sum / np.maximum(committed_count, 1), 0.0)
        mean_read_lat = np.where(served_count > 0,
                                 served_latency_sum / np.maximum(served_count, 1), 0.0)

    util = np.minimum(1.0, work_us / (cluster.node_cpu_capacity * window_s))

    return MetricsTimeline(
        window_s=window_s,
        committed_write_tps=committed_count / window_s,
        served_read_tps=served_count / window_s,
        mean_write_latency_ms=mean_write_lat,
        mean_read_latency_ms=mean_read_lat,
        cpu_utilization=util,
        pool_depth=pool_series.astype(np.int64),
        ledger_bytes=ledger_series.astype(np.int64),
        arrived_writes=int(write_ts.size),
        committed_writes=int(i_commit),
        pending_writes=int(write_ts.size - i_commit),
        arrived_reads=int(read_ts.size),
        served_reads=served_reads,
        blocks_produced=blocks_produced,
        read_completions_s=read_completions,
        write_latencies_ms=(np.concatenate(write_latencies)
                            if keep_detail and write_latencies else
                            (np.empty(0) if keep_detail else None)),
    )


# --- cluster profile files -------------------------------------------------

_CLUSTER_KEYS = {
    "node_count": int,
    "rtt_ms": float,
    "block_interval_ms": float,
    "block_tx_capacity": int,
    "write_exec_us": float,
    "read_service_us": float,
    "msg_proc_us": float,
    "pool_scan_cost_us_per_tx": float,
    "node_cpu_capacity": float,
    "node_mem_bytes": int,
    "empty_block_bytes": int,
    "read_mode": str,
}


def load_cluster(document: str) -> ClusterConfig:
    """Parse a cluster profile document (same INI grammar as scenario overrides)."""
    parser = configparser.ConfigParser(interpolation=None, strict=True)
    try:
        parser.read_string(document)
    except configparser.Error as exc:
        raise SchemaError(str(exc)) from None
    sections = set(parser.sections())
    if "config" not in sections:
        raise SchemaError("missing [config] section with schema_version")
    if parser["config"].get("schema_version", "").strip() != str(CONFIG_SCHEMA_VERSION):
        raise SchemaError(f"schema_version must be {CONFIG_SCHEMA_VERSION}")
    unknown_sections = sections - {"config", "cluster", "rtt_matrix"}
    if unknown_sections:
        raise SchemaError(f"unknown sections {sorted(unknown_sections)}")
    if "cluster" not in sections:
        raise SchemaError("missing [cluster] section")

    kwargs = {}
    for key, raw in parser["cluster"].items():
        if key not in _CLUSTER_KEYS:
            raise SchemaError(f"[cluster]: unknown key {key!r}")
        conv = _CLUSTER_KEYS[key]
        try:
            kwargs[key] = conv(raw) if conv is not str else raw.strip()
        except ValueError:
            raise SchemaError(f"[cluster] {key}: expected {conv.__name__}, got {raw!r}") from None

    if "rtt_matrix" in sections:
        n = kwargs.get("node_count", ClusterConfig.node_count)
        rows = []
        for i in range(n):
            key = f"node{i}"
            if key not in parser["rtt_matrix"]:
                raise SchemaError(f"[rtt_matrix]: missing row {key!r}")
            try:
                row = tuple(float(v) for v in parser["rtt_matrix"][key].split(","))
            except ValueError:
                raise SchemaError(f"[rtt_matrix] {key}: expected comma-separated floats") from None
            rows.append(row)
        extra = set(parser["rtt_matrix"]) - {f"node{i}" for i in range(n)}
        if extra:
            raise SchemaError(f"[rtt_matrix]: unexpected rows {sorted(extra)}")
        kwargs["rtt_matrix_ms"] = tuple(rows)

    cluster = ClusterConfig(**kwargs)
    cluster.validate()
    return cluster


def default_cluster(node_count: int | None = None) -> ClusterConfig:
    """The shipped calibrated 4-node profile, optionally rescoped to N nodes."""
    text = resources.files("chaincap.data").joinpath("default_cluster.ini").read_text()
    cluster = load_cluster(text)
    if node_count is not None:
        cluster = replace(cluster, node_count=node_count)
        cluster.validate()
    return cluster
