import json
import random

import pytest

from ranloop.domain import (
    ConfigSyntaxError,
    ControlAction,
    KpmRecord,
    SchedulingPolicy,
    SliceAllocation,
    ValidationError,
    is_valid_node_id,
    parse_scenario_config,
    serialize_scenario_config,
    validate_control_action,
    validate_node_id,
)


def scenario(**overrides):
    doc = {
        "slice-allocation": {"0": [0, 3], "1": [5, 7]},
        "slice-scheduling-policy": [2, 0],
        "slice-users": {"0": [2, 5], "1": [3, 4]},
        "total-rbgs": 8,
    }
    doc.update(overrides)
    return json.dumps(doc)


class TestNodeId:
    def test_reference_id_accepted(self):
        assert validate_node_id("gnb:311-048-01000501") == "gnb:311-048-01000501"

    def test_hex_digits_accepted(self):
        assert is_valid_node_id("gnb:001-002-0a0b0c0d")

    @pytest.mark.parametrize("bad", [
        "gnb:31-048-01000501",      # 2-digit group
        "gnb:311-048-0100050",      # 7-digit tail
        "enb:311-048-01000501",     # wrong prefix
        "gnb:311-048-01000501x",    # trailing junk
        "",
    ])
    def test_malformed_rejected(self, bad):
        assert not is_valid_node_id(bad)
        with pytest.raises(ValidationError):
            validate_node_id(bad)


class TestSliceAllocation:
    def test_paper_example_ranges(self):
        cfg = parse_scenario_config(scenario())
        alloc = cfg.slice_allocation
        # slice 0 owns RBGs 0-3, slice 1 owns 5-7; RBG 4 is an unused gap
        assert alloc.ranges[0] == (0, 3)
        assert alloc.ranges[1] == (5, 7)
        assert alloc.rbg_count(0) == 4
        assert alloc.rbg_count(1) == 3

    def test_gap_is_legal(self):
        SliceAllocation({0: (0, 3), 1: (5, 7)}, total_rbgs=8)

    def test_overlap_rejected(self):
        with pytest.raises(ValidationError) as exc:
            parse_scenario_config(scenario(**{"slice-allocation": {"0": [0, 3], "1": [3, 7]}}))
        assert exc.value.reason == "overlap"

    def test_out_of_range_rejected(self):
        with pytest.raises(ValidationError) as exc:
            SliceAllocation({0: (0, 9)}, total_rbgs=8)
        assert exc.value.reason == "out_of_range"

    def test_inverted_range_rejected(self):
        with pytest.raises(ValidationError):
            SliceAllocation({0: (3, 1)}, total_rbgs=8)

    def test_disjointness_by_counting(self):
        # union cardinality equals the sum of per-slice range sizes
        rng = random.Random(7)
        for _ in range(200):
            total = rng.randint(4, 30)
            cuts = sorted(rng.sample(range(total), rng.randint(1, min(6, total))))
            ranges, start = {}, 0
            for i, cut in enumerate(cuts):
                if start <= cut:
                    ranges[i] = (start, cut)
                    start = cut + rng.randint(1, 3)
            if not ranges:
                continue
            ranges = {i: r for i, r in enumerate(ranges.values())}
            if max(last for _, last in ranges.values()) >= total:
                continue
            alloc = SliceAllocation(ranges, total)
            union = set()
            for first, last in alloc.ranges.values():
                union.update(range(first, last + 1))
            assert len(union) == sum(alloc.rbg_counts().values())


class TestParseScenario:
    def test_slice_users_paper_example(self):
        cfg = parse_scenario_config(scenario())
        assert cfg.slice_users[0] == (2, 5)
        assert cfg.slice_users[1] == (3, 4)

    def test_policy_paper_example(self):
        cfg = parse_scenario_config(scenario())
        assert cfg.slice_scheduling_policy[0] == SchedulingPolicy.PROPORTIONALLY_FAIR
        assert cfg.slice_scheduling_policy[1] == SchedulingPolicy.ROUND_ROBIN

    def test_defaults_applied(self):
        cfg = parse_scenario_config(scenario())
        assert cfg.tti_ms == 1
        assert cfg.report_period_ms == 250
        assert cfg.control_period_ms == 1000
        assert cfg.network_slicing is True
        assert cfg.num_bs == 1
        assert cfg.ues_per_bs == 4

    def test_traffic_defaults_per_slice(self):
        cfg = parse_scenario_config(scenario())
        assert cfg.traffic[0].rate_pps == 200.0 and cfg.traffic[0].packet_bytes == 1500
        assert cfg.traffic[1].rate_pps == 500.0 and cfg.traffic[1].packet_bytes == 125

    def test_malformed_json(self):
        with pytest.raises(ConfigSyntaxError):
            parse_scenario_config("{not json")

    def test_unknown_key_rejected(self):
        with pytest.raises(ValidationError) as exc:
            parse_scenario_config(scenario(bogus=1))
        assert "bogus" in str(exc.value)

    def test_ue_in_two_slices_rejected(self):
        with pytest.raises(ValidationError) as exc:
            parse_scenario_config(scenario(**{"slice-users": {"0": [2, 3], "1": [3, 4]}}))
        assert exc.value.key == "slice-users"

    def test_policy_code_out_of_set(self):
        with pytest.raises(ValidationError):
            parse_scenario_config(scenario(**{"slice-scheduling-policy": [3, 0]}))

    def test_policy_length_mismatch(self):
        with pytest.raises(ValidationError):
            parse_scenario_config(scenario(**{"slice-scheduling-policy": [0]}))

    @pytest.mark.parametrize("period", [9, 1001, 0, -5])
    def test_report_period_band(self, period):
        with pytest.raises(ValidationError) as exc:
            parse_scenario_config(scenario(**{"report-period-ms": period}))
        assert exc.value.key == "report-period-ms"

    @pytest.mark.parametrize("period", [10, 250, 1000])
    def test_report_period_in_band_ok(self, period):
        cfg = parse_scenario_config(scenario(**{
            "report-period-ms": period, "control-period-ms": period * 2}))
        assert cfg.report_period_ms == period

    def test_noncontiguous_slice_ids_rejected(self):
        with pytest.raises(ValidationError):
            parse_scenario_config(scenario(**{
                "slice-allocation": {"0": [0, 3], "2": [5, 7]},
                "slice-users": {"0": [2], "2": [3]},
            }))

    def test_bs_id_zero_not_allowed_as_ue(self):
        with pytest.raises(ValidationError):
            parse_scenario_config(scenario(**{"slice-users": {"0": [0, 2], "1": [3]}}))

    def test_round_trip(self):
        cfg = parse_scenario_config(scenario(**{
            "network-slicing": True,
            "tti-ms": 5,
            "report-period-ms": 100,
            "control-period-ms": 500,
            "traffic": {"0": {"rate-pps": 11.5, "packet-bytes": 400}},
            "rng-seed": 99,
        }))
        again = parse_scenario_config(serialize_scenario_config(cfg))
        assert again == cfg

    def test_rejection_is_total_not_repairing(self):
        # an invalid document never comes back silently repaired
        bad = scenario(**{"slice-allocation": {"0": [0, 3], "1": [2, 5]}})
        with pytest.raises(ValidationError):
            parse_scenario_config(bad)


class TestValidateControlAction:
    def make(self, ranges, policies, total=8):
        return ControlAction(
            slice_allocation=SliceAllocation(ranges, total),
            slice_scheduling_policy=tuple(SchedulingPolicy(p) for p in policies))

    def test_paper_example_ok(self):
        a = self.make({0: (0, 3), 1: (5, 7)}, [2, 0])
        validate_control_action(a, total_rbgs=8)

    def test_out_of_range(self):
        a = self.make({0: (0, 9)}, [0], total=16)
        with pytest.raises(ValidationError) as exc:
            validate_control_action(a, total_rbgs=8)
        assert exc.value.reason == "out_of_range"

    def test_overlap_rejected_at_construction(self):
        with pytest.raises(ValidationError) as exc:
            self.make({0: (0, 3), 1: (2, 5)}, [0, 0])
        assert exc.value.reason == "overlap"

    def test_missing_policy(self):
        a = self.make({0: (0, 3), 1: (5, 7)}, [0])
        with pytest.raises(ValidationError) as exc:
            validate_control_action(a, total_rbgs=8)
        assert exc.value.reason == "missing_policy"


class TestKpmRecord:
    def test_csv_round_trip(self):
        rec = KpmRecord(
            timestamp_ms=250, bs_id="gnb:311-048-01000501", ue_id=2, slice_id=0,
            dl_buffer_bytes=1200, tx_bytes=5600, tx_tbs=4, dl_cqi=9,
            granted_rbgs=16, policy=2, slice_rbg_count=4)
        assert KpmRecord.from_csv_row(rec.to_csv_row()) == rec

    def test_cqi_bounds(self):
        with pytest.raises(ValidationError):
            KpmRecord(0, "gnb:311-048-01000501", 1, 0, 0, 0, 0, 0, 0, 0, 0)

    def test_negative_counter_rejected(self):
        with pytest.raises(ValidationError):
            KpmRecord(0, "gnb:311-048-01000501", 1, 0, -1, 0, 0, 7, 0, 0, 4)
