import json
import math
from pathlib import Path

import pytest
from hypothesis import given, strategies as st

from chaincap.assess import (
    Remediation,
    assess,
    methodology_report,
    render_report_text,
    resolve_eta,
)
from chaincap.bench import CapacityProfile
from chaincap.errors import InputError
from chaincap.scenarios import ScenarioId, scenario_by_id, workload_for

PAPER_JSON = Path(__file__).parent.parent / "src" / "chaincap" / "data" / "paper.json"


@pytest.fixture
def paper_capacity():
    return CapacityProfile.from_json_dict(json.loads(PAPER_JSON.read_text()))


class TestAssess:
    def test_public_key_mgmt_is_suitable(self, paper_capacity):
        uc = scenario_by_id(ScenarioId.PUBLIC_KEY_MGMT).use_case("subscriber_key")
        verdict = assess(workload_for(uc, 0.0115), paper_capacity)
        assert verdict.suitable
        assert verdict.remediation == ()

    def test_aaa_is_unsuitable_on_both_axes(self, paper_capacity):
        uc = scenario_by_id(ScenarioId.AAA).use_case("access_control")
        verdict = assess(workload_for(uc, 8333), paper_capacity)
        assert not verdict.read_ok
        assert not verdict.write_ok
        assert set(verdict.remediation) == {Remediation.BATCH_TRANSACTIONS,
                                            Remediation.SCALE_BLOCKCHAIN}

    def test_zero_workload_suitable_with_infinite_headroom(self, paper_capacity):
        uc = scenario_by_id(ScenarioId.PUBLIC_KEY_MGMT).use_case("subscriber_key")
        verdict = assess(workload_for(uc, 0.0), paper_capacity)
        assert verdict.suitable
        assert math.isinf(verdict.headroom_read)
        assert math.isinf(verdict.headroom_write)

    def test_boundary_exactness(self, paper_capacity):
        uc = scenario_by_id(ScenarioId.PUBLIC_KEY_MGMT).use_case("subscriber_key")
        at_capacity = assess(workload_for(uc, 1400.0), paper_capacity)
        assert at_capacity.write_ok  # <= is suitable
        just_over = assess(workload_for(uc, 1400.0 * (1 + 1e-9)), paper_capacity)
        assert not just_over.write_ok

    def test_invalid_capacity_rejected(self):
        uc = scenario_by_id(ScenarioId.AAA).use_case("access_control")
        bad = CapacityProfile(node_count=4, max_lambda_read=0.0,
                              max_lambda_write=1400.0, search_tolerance=0.0)
        with pytest.raises(InputError):
            assess(workload_for(uc, 1.0), bad)

    def test_infinite_capacity_axis_rejected(self):
        uc = scenario_by_id(ScenarioId.AAA).use_case("access_control")
        partial = CapacityProfile(node_count=4, max_lambda_read=math.inf,
                                  max_lambda_write=1400.0, search_tolerance=0.0)
        with pytest.raises(InputError):
            assess(workload_for(uc, 1.0), partial)

    @given(eta_lo=st.floats(0.001, 1e5), factor=st.floats(1.0, 100.0))
    def test_verdict_monotone_in_eta(self, eta_lo, factor):
        capacity = CapacityProfile(node_count=4, max_lambda_read=20500.0,
                                   max_lambda_write=1400.0, search_tolerance=0.0)
        spec = scenario_by_id(ScenarioId.AAA)
        low = assess(workload_for(spec, eta_lo), capacity)
        high = assess(workload_for(spec, eta_lo * factor), capacity)
        # raising eta never turns unsuitable into suitable
        assert not (not low.suitable and high.suitable)

    def test_verdict_depends_only_on_rates(self, paper_capacity):
        # eta x multiplicities scaled inversely gives identical rates/verdict
        from chaincap.scenarios import UseCaseSpec

        a = UseCaseSpec(name="a", reads_per_event=4, writes_per_event=2)
        b = UseCaseSpec(name="b", reads_per_event=2, writes_per_event=1)
        va = assess(workload_for(a, 500.0), paper_capacity)
        vb = assess(workload_for(b, 1000.0), paper_capacity)
        assert (va.read_ok, va.write_ok) == (vb.read_ok, vb.write_ok)
        assert va.headroom_read == vb.headroom_read


class TestEtaResolution:
    def test_explicit_eta_wins(self):
        spec = scenario_by_id(ScenarioId.AAA)
        assert resolve_eta(spec, 12.0) == 12.0

    def test_default_eta_fallback(self):
        assert resolve_eta(scenario_by_id(ScenarioId.AAA), None) == 8333.0

    def test_missing_eta_is_loud(self):
        with pytest.raises(InputError, match="eta required"):
            resolve_eta(scenario_by_id(ScenarioId.RESOURCE_SHARING), None)


class TestMethodologyReport:
    def test_aaa_report_comparison_stage(self, paper_capacity):
        report = methodology_report(scenario_by_id(ScenarioId.AAA), 8333, paper_capacity)
        am = report["arrival_model"]
        assert am["lambda_read"] == 41665
        assert am["lambda_write"] == 8333
        cmp_ = report["comparison"]
        assert not cmp_["suitable"]
        assert am["lambda_read"] > report["evaluation"]["max_lambda_read"]
        assert am["lambda_write"] > report["evaluation"]["max_lambda_write"]

    def test_public_key_mgmt_default_report(self, paper_capacity):
        report = methodology_report(scenario_by_id(ScenarioId.PUBLIC_KEY_MGMT),
                                    None, paper_capacity)
        assert report["comparison"]["suitable"]
        assert report["arrival_model"]["eta"] == 0.0115

    def test_missing_eta_raises(self, paper_capacity):
        with pytest.raises(InputError, match="eta required"):
            methodology_report(scenario_by_id(ScenarioId.RESOURCE_SHARING),
                               None, paper_capacity)

    def test_report_covers_all_stages(self, paper_capacity):
        report = methodology_report(scenario_by_id(ScenarioId.AAA), 8333, paper_capacity)
        for stage in ("why_on_chain", "what_is_recorded", "when", "arrival_model",
                      "evaluation", "comparison"):
            assert stage in report

    def test_text_rendering(self, paper_capacity):
        report = methodology_report(scenario_by_id(ScenarioId.AAA), 8333, paper_capacity)
        text = render_report_text(report)
        assert "UNSUITABLE" in text
        assert "8333" in text
