import io
from dataclasses import replace

import numpy as np
import pytest

from chaincap.arrival import ArrivalKind, ArrivalProcess, TxEvent, TxKind, generate_events
from chaincap.chainsim import (
    ClusterConfig,
    ConsensusParams,
    ReadServer,
    consensus_round_latency,
    cpu_utilization,
    default_cluster,
    load_cluster,
    run,
    serve_read,
)
from chaincap.errors import ConfigError, ContractError, SchemaError


def det_writes(rate, horizon, payload=256):
    process = ArrivalProcess(ArrivalKind.DETERMINISTIC, rate, 0)
    return generate_events(process, TxKind.WRITE, horizon, payload_bytes=payload)


class TestConsensusParams:
    @pytest.mark.parametrize("n,f,quorum", [(4, 1, 3), (5, 1, 3), (6, 1, 3), (7, 2, 5),
                                            (10, 3, 7)])
    def test_quorum_formula(self, n, f, quorum):
        params = ConsensusParams.for_cluster(replace(default_cluster(), node_count=n))
        assert (params.f, params.quorum) == (f, quorum)
        assert params.quorum <= n and 3 * params.f + 1 <= n

    def test_three_hops_at_constant_rtt(self):
        for n in (4, 5, 7):
            cluster = ClusterConfig(node_count=n, rtt_ms=30.0, write_exec_us=0,
                                    msg_proc_us=0, pool_scan_cost_us_per_tx=0)
            params = ConsensusParams.for_cluster(cluster)
            assert consensus_round_latency(cluster, params, 0, 0) == pytest.approx(45.0)

    def test_latency_monotone_in_fill_and_pool(self):
        cluster = default_cluster()
        params = ConsensusParams.for_cluster(cluster)
        base = consensus_round_latency(cluster, params, 10, 10)
        assert consensus_round_latency(cluster, params, 20, 10) >= base
        assert consensus_round_latency(cluster, params, 10, 50) >= base

    def test_fill_beyond_capacity_rejected(self):
        cluster = default_cluster()
        params = ConsensusParams.for_cluster(cluster)
        with pytest.raises(ContractError):
            consensus_round_latency(cluster, params, cluster.block_tx_capacity + 1, 0)


class TestConfigValidation:
    def test_minimum_node_count(self):
        with pytest.raises(ConfigError):
            replace(default_cluster(), node_count=3).validate()

    def test_negative_cost(self):
        with pytest.raises(ConfigError):
            replace(default_cluster(), write_exec_us=-1.0).validate()

    def test_rtt_matrix_shape(self):
        cluster = replace(default_cluster(), rtt_matrix_ms=((0.0, 1.0), (1.0, 0.0)))
        with pytest.raises(ConfigError):
            cluster.validate()

    def test_rtt_matrix_round_latency(self):
        n = 4
        matrix = tuple(tuple(0.0 if i == j else 10.0 * max(i, j) for j in range(n))
                       for i in range(n))
        cluster = ClusterConfig(node_count=n, rtt_matrix_ms=matrix, write_exec_us=0,
                                msg_proc_us=0, pool_scan_cost_us_per_tx=0)
        params = ConsensusParams.for_cluster(cluster)
        # proposer 0 one-way peers: 5, 10, 15; quorum 3 -> 3rd smallest = 15
        assert consensus_round_latency(cluster, params, 0, 0, proposer=0) == pytest.approx(45.0)


class TestRunBasics:
    def test_empty_stream(self):
        cluster = default_cluster()
        tl = run(cluster, [], horizon=10.0)
        assert tl.committed_write_tps.sum() == 0
        assert tl.served_read_tps.sum() == 0
        assert tl.arrived_writes == tl.committed_writes == 0
        # empty blocks keep the ledger growing at the block cadence
        assert tl.blocks_produced > 0
        assert tl.ledger_bytes[-1] == tl.blocks_produced * cluster.empty_block_bytes
        assert np.all(np.diff(tl.ledger_bytes) >= 0)
        # idle consensus overhead still burns some cpu
        assert tl.cpu_utilization.mean() > 0

    def test_single_write_first_block(self):
        cluster = default_cluster()
        ev = [TxEvent(timestamp=0.0, kind=TxKind.WRITE, payload_bytes=256, seq=0)]
        tl = run(cluster, ev, horizon=5.0, keep_detail=True)
        assert tl.committed_writes == 1
        latency = float(tl.write_latencies_ms[0])
        assert latency >= cluster.block_interval_ms / 2
        assert latency >= 3 * cluster.rtt_ms / 2  # one full consensus round

    def test_sub_saturation_linearity(self):
        cluster = default_cluster()
        tl = run(cluster, det_writes(1000.0, 60.0), horizon=60.0)
        skip = 6
        assert tl.mean_committed_write_tps(skip) == pytest.approx(1000.0, rel=0.01)

    def test_conservation_at_window_boundaries(self):
        cluster = default_cluster()
        events = generate_events(ArrivalProcess(ArrivalKind.POISSON, 1200.0, 11),
                                 TxKind.WRITE, 30.0, payload_bytes=256)
        tl = run(cluster, events, horizon=30.0)
        ts = np.array([e.timestamp for e in events])
        committed = np.cumsum(tl.committed_write_tps * tl.window_s)
        for w in range(tl.n_windows):
            boundary = (w + 1) * tl.window_s
            arrived = int(np.count_nonzero(ts <= boundary))
            assert arrived == int(round(committed[w])) + int(tl.pool_depth[w])
        assert tl.arrived_writes == tl.committed_writes + tl.pending_writes

    def test_determinism(self):
        cluster = default_cluster()
        events = generate_events(ArrivalProcess(ArrivalKind.POISSON, 800.0, 3),
                                 TxKind.WRITE, 20.0, payload_bytes=256)
        a = run(cluster, events, horizon=20.0, seed=5)
        b = run(cluster, events, horizon=20.0, seed=5)
        buf_a, buf_b = io.StringIO(), io.StringIO()
        a.to_csv(buf_a)
        b.to_csv(buf_b)
        assert buf_a.getvalue() == buf_b.getvalue()

    def test_unsorted_events_rejected(self):
        ev = [TxEvent(timestamp=1.0, kind=TxKind.WRITE, seq=0),
              TxEvent(timestamp=0.5, kind=TxKind.WRITE, seq=1)]
        with pytest.raises(ContractError):
            run(default_cluster(), ev, horizon=5.0)

    def test_horizon_must_cover_events(self):
        ev = [TxEvent(timestamp=9.0, kind=TxKind.WRITE, seq=0)]
        with pytest.raises(ContractError):
            run(default_cluster(), ev, horizon=5.0)

    def test_invalid_config_fails_before_simulation(self):
        with pytest.raises(ConfigError):
            run(replace(default_cluster(), node_count=2), [], horizon=5.0)

    def test_ledger_identity(self):
        cluster = default_cluster()
        events = det_writes(500.0, 20.0, payload=100)
        tl = run(cluster, events, horizon=20.0)
        expected = (tl.blocks_produced * cluster.empty_block_bytes
                    + tl.committed_writes * 100)
        assert tl.ledger_bytes[-1] == expected


class TestSaturation:
    def test_post_peak_decline(self):
        cluster = default_cluster()
        at_cap = run(cluster, det_writes(1374.0, 40.0), horizon=40.0)
        beyond = run(cluster, det_writes(2748.0, 40.0), horizon=40.0)
        assert beyond.mean_committed_write_tps(4) < at_cap.mean_committed_write_tps(4)

    def test_node_count_peak_monotonicity(self):
        # raw throughput at a saturating offered load must not grow with N
        peaks = []
        for n in (4, 5, 6, 7):
            cluster = default_cluster(node_count=n)
            tl = run(cluster, det_writes(1500.0, 30.0), horizon=30.0)
            peaks.append(tl.mean_committed_write_tps(3))
        assert all(a >= b for a, b in zip(peaks, peaks[1:]))


class TestReads:
    def test_serve_read_single_queue_rate(self):
        cluster = replace(default_cluster(), read_service_us=200.0, read_mode="single")
        server = ReadServer(cluster)
        done = 0.0
        for i in range(1000):
            done = server.serve_read(0, 0.0)
        assert 1000 / done == pytest.approx(5000.0)

    def test_serve_read_fifo(self):
        cluster = default_cluster()
        server = ReadServer(cluster)
        e1 = TxEvent(timestamp=0.0, kind=TxKind.READ, seq=0)
        e2 = TxEvent(timestamp=0.0, kind=TxKind.READ, seq=1)
        first = serve_read(cluster, 0, e1, server)
        second = serve_read(cluster, 0, e2, server)
        assert second == pytest.approx(first + cluster.read_service_us * 1e-6)

    def test_multi_node_scales_read_throughput(self):
        rate = 15000.0
        events = generate_events(ArrivalProcess(ArrivalKind.POISSON, rate, 2),
                                 TxKind.READ, 20.0)
        multi = run(default_cluster(), events, horizon=20.0)
        single = run(replace(default_cluster(), read_mode="single"), events, horizon=20.0)
        assert multi.mean_served_read_tps(2) == pytest.approx(rate, rel=0.02)
        # one node saturates at ~1/read_service_us
        ceiling = 1e6 / default_cluster().read_service_us
        assert single.mean_served_read_tps(2) == pytest.approx(ceiling, rel=0.05)

    def test_reads_independent_of_consensus(self):
        events = generate_events(ArrivalProcess(ArrivalKind.POISSON, 4000.0, 6),
                                 TxKind.READ, 15.0)
        with_blocks = run(default_cluster(), events, horizon=15.0, keep_detail=True)
        without = run(default_cluster(), events, horizon=15.0, produce_blocks=False,
                      keep_detail=True)
        assert np.array_equal(with_blocks.read_completions_s, without.read_completions_s)

    def test_zero_reads(self):
        tl = run(default_cluster(), [], horizon=5.0)
        assert tl.served_reads == 0
        assert tl.served_read_tps.sum() == 0

    def test_vectorized_fifo_matches_scalar_server(self):
        cluster = replace(default_cluster(), read_mode="single")
        rng = np.random.Generator(np.random.Philox(key=42))
        arrivals = np.sort(rng.random(500) * 5.0)
        server = ReadServer(cluster)
        scalar = [server.serve_read(0, float(t)) for t in arrivals]
        events = [TxEvent(timestamp=float(t), kind=TxKind.READ, seq=i)
                  for i, t in enumerate(arrivals)]
        tl = run(cluster, events, horizon=10.0, keep_detail=True)
        assert np.allclose(tl.read_completions_s, scalar, rtol=0, atol=1e-9)


class TestCpuProxy:
    def test_zero_work(self):
        assert cpu_utilization(0.0, 1e6, 1.0) == 0.0

    def test_saturated(self):
        assert cpu_utilization(1e6, 1e6, 1.0) == 1.0
        assert cpu_utilization(5e6, 1e6, 1.0) == 1.0  # capped

    def test_half_work(self):
        assert cpu_utilization(5e5, 1e6, 1.0) == 0.5

    def test_utilization_bounded_in_runs(self):
        tl = run(default_cluster(), det_writes(2000.0, 20.0), horizon=20.0)
        assert np.all(tl.cpu_utilization >= 0.0)
        assert np.all(tl.cpu_utilization <= 1.0)


class TestClusterProfiles:
    def test_default_profile_loads(self):
        cluster = default_cluster()
        assert cluster.node_count == 4
        assert cluster.rtt_ms == 30.0

    def test_profile_round_trip_keys(self):
        doc = """
[config]
schema_version = 1

[cluster]
node_count = 5
rtt_ms = 20
block_interval_ms = 50
read_mode = single
"""
        cluster = load_cluster(doc)
        assert cluster.node_count == 5
        assert cluster.rtt_ms == 20.0
        assert cluster.read_mode == "single"

    def test_unknown_cluster_key(self):
        doc = "[config]\nschema_version = 1\n\n[cluster]\nnoode_count = 4\n"
        with pytest.raises(SchemaError, match="noode_count"):
            load_cluster(doc)

    def test_rtt_matrix_parse(self):
        doc = ("[config]\nschema_version = 1\n\n[cluster]\nnode_count = 4\n\n"
               "[rtt_matrix]\n"
               "node0 = 0,30,30,30\nnode1 = 30,0,30,30\n"
               "node2 = 30,30,0,30\nnode3 = 30,30,30,0\n")
        cluster = load_cluster(doc)
        assert cluster.rtt_matrix_ms[0][1] == 30.0

    def test_missing_schema_version(self):
        with pytest.raises(SchemaError):
            load_cluster("[cluster]\nnode_count = 4\n")

    def test_timeline_csv_shape(self):
        tl = run(default_cluster(), det_writes(300.0, 10.0), horizon=10.0)
        buf = io.StringIO()
        tl.to_csv(buf)
        lines = buf.getvalue().strip().split("\n")
        assert len(lines) == tl.n_windows + 1
        header = lines[0].split(",")
        assert header[0] == "window_index"
        assert "cpu_utilization_node3" in header
        assert header[-1] == "ledger_bytes"
