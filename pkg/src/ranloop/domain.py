"""Core value types and scenario-configuration parsing.

Everything here is an immutable value object once constructed; instances can
be shared freely across threads. Validation happens at construction time, so
an invalid allocation or scenario can never exist in the rest of the stack.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from enum import IntEnum
from types import MappingProxyType
from typing import Iterable, Mapping

NODE_ID_RE = re.compile(r"gnb:[0-9]{3}-[0-9]{3}-[0-9a-fA-F]{8}\Z")

DEFAULT_TOTAL_RBGS = 25
DEFAULT_TTI_MS = 1
DEFAULT_REPORT_PERIOD_MS = 250
DEFAULT_CONTROL_PERIOD_MS = 1000
REPORT_PERIOD_MIN_MS = 10
REPORT_PERIOD_MAX_MS = 1000

# Per-slice traffic defaults, keyed by slice id in the reference scenario
# (0 = broadband, 1 = machine-type, 2 = low-latency).
DEFAULT_TRAFFIC = {
    0: (200.0, 1500),
    1: (500.0, 125),
    2: (100.0, 250),
}

KPM_CSV_HEADER = (
    "timestamp_ms,bs_id,ue_id,slice_id,dl_buffer_bytes,tx_bytes,"
    "tx_tbs,dl_cqi,granted_rbgs,policy,slice_rbg_count"
)


class ValidationError(ValueError):
    """A config or control value violates an invariant.

    ``key`` names the offending config key (or field), ``reason`` is a
    machine-readable code: one of ``overlap``, ``out_of_range``,
    ``missing_policy``, or ``invalid``.
    """

    def __init__(self, key: str, message: str, reason: str = "invalid"):
        super().__init__(f"{key}: {message}")
        self.key = key
        self.reason = reason


class ConfigSyntaxError(ValueError):
    """Input is not syntactically valid JSON."""


class SchedulingPolicy(IntEnum):
    ROUND_ROBIN = 0
    WATERFILLING = 1
    PROPORTIONALLY_FAIR = 2


def validate_node_id(node_id: str) -> str:
    """Check the three-part dashed node id format, e.g. gnb:311-048-01000501."""
    if not isinstance(node_id, str) or NODE_ID_RE.fullmatch(node_id) is None:
        raise ValidationError("node_id", f"malformed RAN node id {node_id!r}")
    return node_id


def is_valid_node_id(node_id) -> bool:
    return isinstance(node_id, str) and NODE_ID_RE.fullmatch(node_id) is not None


class SliceAllocation:
    """Per-slice inclusive RBG ranges over a cell of ``total_rbgs`` RBGs.

    Ranges must be in-bounds and pairwise disjoint; gaps (unallocated RBGs)
    are legal and simply unused. Immutable after construction.
    """

    __slots__ = ("_ranges", "total_rbgs")

    def __init__(self, ranges: Mapping[int, tuple[int, int] | Iterable[int]],
                 total_rbgs: int = DEFAULT_TOTAL_RBGS):
        if not isinstance(total_rbgs, int) or total_rbgs < 1:
            raise ValidationError("total-rbgs", f"must be a positive integer, got {total_rbgs!r}")
        clean: dict[int, tuple[int, int]] = {}
        for slice_id, rng in ranges.items():
            if not isinstance(slice_id, int) or slice_id < 0:
                raise ValidationError("slice-allocation", f"bad slice id {slice_id!r}")
            pair = tuple(rng)
            if len(pair) != 2 or not all(isinstance(v, int) for v in pair):
                raise ValidationError(
                    "slice-allocation", f"slice {slice_id}: range must be [first_rbg, last_rbg]")
            first, last = pair
            if not (0 <= first <= last < total_rbgs):
                raise ValidationError(
                    "slice-allocation",
                    f"slice {slice_id}: range [{first},{last}] outside [0,{total_rbgs - 1}]",
                    reason="out_of_range")
            clean[slice_id] = (first, last)
        if not clean:
            raise ValidationError("slice-allocation", "at least one slice required")
        by_start = sorted(clean.items(), key=lambda kv: kv[1][0])
        for (sid_a, (_, last_a)), (sid_b, (first_b, _)) in zip(by_start, by_start[1:], strict=False):
            if first_b <= last_a:
                raise ValidationError(
                    "slice-allocation",
                    f"slices {sid_a} and {sid_b} overlap on RBGs",
                    reason="overlap")
        object.__setattr__(self, "_ranges", dict(sorted(clean.items())))
        object.__setattr__(self, "total_rbgs", total_rbgs)

    def __setattr__(self, name, value):
        raise AttributeError("SliceAllocation is immutable")

    @property
    def ranges(self) -> Mapping[int, tuple[int, int]]:
        return MappingProxyType(self._ranges)

    @property
    def slices(self) -> tuple[int, ...]:
        return tuple(self._ranges)

    def rbg_count(self, slice_id: int) -> int:
        first, last = self._ranges[slice_id]
        return last - first + 1

    def rbg_counts(self) -> dict[int, int]:
        return {s: self.rbg_count(s) for s in self._ranges}

    def __contains__(self, slice_id: int) -> bool:
        return slice_id in self._ranges

    def __len__(self) -> int:
        return len(self._ranges)

    def __eq__(self, other) -> bool:
        return (isinstance(other, SliceAllocation)
                and self._ranges == other._ranges
                and self.total_rbgs == other.total_rbgs)

    def __hash__(self) -> int:
        return hash((tuple(sorted(self._ranges.items())), self.total_rbgs))

    def __repr__(self) -> str:
        return f"SliceAllocation({self._ranges!r}, total_rbgs={self.total_rbgs})"


@dataclass(frozen=True)
class ControlAction:
    """An atomic reconfiguration: new RBG partition plus per-slice policies."""

    slice_allocation: SliceAllocation
    slice_scheduling_policy: tuple[SchedulingPolicy, ...]

    def __post_init__(self):
        object.__setattr__(
            self, "slice_scheduling_policy",
            tuple(SchedulingPolicy(p) for p in self.slice_scheduling_policy))


def validate_control_action(action: ControlAction, total_rbgs: int) -> None:
    """Raise ValidationError (reason overlap/out_of_range/missing_policy) if invalid.

    The allocation's own constructor already guarantees disjointness against
    its embedded total; this re-checks bounds against the *cell's* RBG count
    and that every allocated slice has a scheduling policy.
    """
    alloc = action.slice_allocation
    for slice_id, (first, last) in alloc.ranges.items():
        if last >= total_rbgs:
            raise ValidationError(
                "slice-allocation",
                f"slice {slice_id}: last RBG {last} >= total {total_rbgs}",
                reason="out_of_range")
    for slice_id in alloc.slices:
        if slice_id >= len(action.slice_scheduling_policy):
            raise ValidationError(
                "slice-scheduling-policy",
                f"no policy for slice {slice_id}",
                reason="missing_policy")


@dataclass(frozen=True)
class KpmRecord:
    """One per-UE row of RAN telemetry for one report period."""

    timestamp_ms: int
    bs_id: str
    ue_id: int
    slice_id: int
    dl_buffer_bytes: int
    tx_bytes: int
    tx_tbs: int
    dl_cqi: int
    granted_rbgs: int
    policy: int
    slice_rbg_count: int

    def __post_init__(self):
        for name in ("dl_buffer_bytes", "tx_bytes", "tx_tbs", "granted_rbgs",
                     "slice_rbg_count", "ue_id", "slice_id", "timestamp_ms"):
            if getattr(self, name) < 0:
                raise ValidationError(name, "must be non-negative")
        if not 1 <= self.dl_cqi <= 15:
            raise ValidationError("dl_cqi", f"{self.dl_cqi} outside [1,15]")
        if self.policy not in (0, 1, 2):
            raise ValidationError("policy", f"unknown policy code {self.policy}")

    def to_csv_row(self) -> str:
        return (f"{self.timestamp_ms},{self.bs_id},{self.ue_id},{self.slice_id},"
                f"{self.dl_buffer_bytes},{self.tx_bytes},{self.tx_tbs},{self.dl_cqi},"
                f"{self.granted_rbgs},{self.policy},{self.slice_rbg_count}")

    @classmethod
    def from_csv_row(cls, row: str) -> "KpmRecord":
        parts = row.rstrip("\n").split(",")
        if len(parts) != 11:
            raise ValidationError("csv", f"expected 11 columns, got {len(parts)}")
        return cls(
            timestamp_ms=int(parts[0]), bs_id=parts[1], ue_id=int(parts[2]),
            slice_id=int(parts[3]), dl_buffer_bytes=int(parts[4]),
            tx_bytes=int(parts[5]), tx_tbs=int(parts[6]), dl_cqi=int(parts[7]),
            granted_rbgs=int(parts[8]), policy=int(parts[9]),
            slice_rbg_count=int(parts[10]))


@dataclass(frozen=True, eq=True)
class TrafficSpec:
    """Poisson packet arrivals: aggregate slice rate and fixed packet size."""

    rate_pps: float
    packet_bytes: int


@dataclass(frozen=True, eq=False)
class ScenarioConfig:
    network_slicing: bool
    slice_allocation: SliceAllocation
    slice_scheduling_policy: tuple[SchedulingPolicy, ...]
    slice_users: dict[int, tuple[int, ...]]
    num_bs: int
    ues_per_bs: int
    tti_ms: int
    report_period_ms: int
    control_period_ms: int
    traffic: dict[int, TrafficSpec]
    cqi_step_prob: float
    initial_cqi: int
    pf_alpha: float
    pf_epsilon: float
    rng_seed: int

    def __eq__(self, other) -> bool:
        if not isinstance(other, ScenarioConfig):
            return NotImplemented
        return all(getattr(self, f) == getattr(other, f) for f in self.__dataclass_fields__)

    @property
    def num_slices(self) -> int:
        return len(self.slice_allocation)

    @property
    def total_rbgs(self) -> int:
        return self.slice_allocation.total_rbgs

    def users_of(self, slice_id: int) -> tuple[int, ...]:
        return self.slice_users.get(slice_id, ())

    def slice_of_ue(self, ue_id: int) -> int:
        for slice_id, ues in self.slice_users.items():
            if ue_id in ues:
                return slice_id
        raise KeyError(ue_id)


_SCENARIO_KEYS = {
    "network-slicing", "slice-allocation", "slice-scheduling-policy",
    "slice-users", "total-rbgs", "num-bs", "ues-per-bs", "tti-ms",
    "report-period-ms", "control-period-ms", "traffic", "cqi-step-prob",
    "initial-cqi", "pf-alpha", "pf-epsilon", "rng-seed",
}
_TRAFFIC_KEYS = {"rate-pps", "packet-bytes"}


def _int_keyed(raw: Mapping, key: str) -> dict[int, object]:
    out = {}
    for k, v in raw.items():
        try:
            ik = int(k)
        except (TypeError, ValueError):
            raise ValidationError(key, f"slice key {k!r} is not an integer") from None
        if ik < 0:
            raise ValidationError(key, f"negative slice id {ik}")
        if ik in out:
            raise ValidationError(key, f"duplicate slice id {ik}")
        out[ik] = v
    return out


def _require_int(value, key: str, minimum: int | None = None) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise ValidationError(key, f"must be an integer, got {value!r}")
    if minimum is not None and value < minimum:
        raise ValidationError(key, f"must be >= {minimum}, got {value}")
    return value


def _require_number(value, key: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ValidationError(key, f"must be a number, got {value!r}")
    return float(value)


def parse_scenario_config(text: str) -> ScenarioConfig:
    """Parse and validate a JSON scenario document.

    Raises ConfigSyntaxError on malformed JSON and ValidationError (naming
    the offending key) on any invariant violation. Unknown keys are rejected,
    never ignored.
    """
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigSyntaxError(f"malformed JSON: {exc}") from exc
    if not isinstance(raw, dict):
        raise ValidationError("<root>", "scenario must be a JSON object")

    unknown = set(raw) - _SCENARIO_KEYS
    if unknown:
        raise ValidationError(sorted(unknown)[0], "unknown configuration key")
    for required in ("slice-allocation", "slice-scheduling-policy", "slice-users"):
        if required not in raw:
            raise ValidationError(required, "required key missing")

    network_slicing = raw.get("network-slicing", True)
    if not isinstance(network_slicing, bool):
        raise ValidationError("network-slicing", "must be true or false")

    total_rbgs = _require_int(raw.get("total-rbgs", DEFAULT_TOTAL_RBGS), "total-rbgs", 1)

    alloc_raw = raw["slice-allocation"]
    if not isinstance(alloc_raw, dict):
        raise ValidationError("slice-allocation", "must be an object {slice: [first, last]}")
    ranges = _int_keyed(alloc_raw, "slice-allocation")
    allocation = SliceAllocation(ranges, total_rbgs)  # type: ignore[arg-type]
    n_slices = len(allocation)
    if set(allocation.slices) != set(range(n_slices)):
        raise ValidationError(
            "slice-allocation", f"slice ids must be 0..{n_slices - 1} with no gaps")

    pol_raw = raw["slice-scheduling-policy"]
    if not isinstance(pol_raw, list):
        raise ValidationError("slice-scheduling-policy", "must be a list of policy codes")
    if len(pol_raw) != n_slices:
        raise ValidationError(
            "slice-scheduling-policy",
            f"expected {n_slices} entries (one per slice), got {len(pol_raw)}")
    policies = []
    for i, code in enumerate(pol_raw):
        code = _require_int(code, "slice-scheduling-policy")
        if code not in (0, 1, 2):
            raise ValidationError(
                "slice-scheduling-policy", f"slice {i}: policy code {code} not in {{0,1,2}}")
        policies.append(SchedulingPolicy(code))

    users_raw = raw["slice-users"]
    if not isinstance(users_raw, dict):
        raise ValidationError("slice-users", "must be an object {slice: [ue, ...]}")
    slice_users: dict[int, tuple[int, ...]] = {}
    seen_ues: dict[int, int] = {}
    for slice_id, ue_list in _int_keyed(users_raw, "slice-users").items():
        if slice_id not in allocation:
            raise ValidationError("slice-users", f"slice {slice_id} not in slice-allocation")
        if not isinstance(ue_list, list):
            raise ValidationError("slice-users", f"slice {slice_id}: expected a list of UE ids")
        ues = []
        for ue in ue_list:
            ue = _require_int(ue, "slice-users", 1)
            if ue in seen_ues:
                raise ValidationError(
                    "slice-users",
                    f"UE {ue} assigned to both slice {seen_ues[ue]} and slice {slice_id}")
            seen_ues[ue] = slice_id
            ues.append(ue)
        slice_users[slice_id] = tuple(sorted(ues))
    for slice_id in allocation.slices:
        slice_users.setdefault(slice_id, ())

    total_ues = len(seen_ues)
    ues_per_bs = raw.get("ues-per-bs", total_ues)
    ues_per_bs = _require_int(ues_per_bs, "ues-per-bs", 0)
    if ues_per_bs != total_ues:
        raise ValidationError(
            "ues-per-bs", f"{ues_per_bs} does not match {total_ues} UEs in slice-users")

    num_bs = _require_int(raw.get("num-bs", 1), "num-bs", 1)
    tti_ms = _require_int(raw.get("tti-ms", DEFAULT_TTI_MS), "tti-ms", 1)
    report_period_ms = _require_int(
        raw.get("report-period-ms", DEFAULT_REPORT_PERIOD_MS), "report-period-ms")
    if not REPORT_PERIOD_MIN_MS <= report_period_ms <= REPORT_PERIOD_MAX_MS:
        raise ValidationError(
            "report-period-ms",
            f"{report_period_ms} outside near-real-time band "
            f"[{REPORT_PERIOD_MIN_MS},{REPORT_PERIOD_MAX_MS}] ms")
    if report_period_ms % tti_ms != 0:
        raise ValidationError("report-period-ms", f"must be a multiple of tti-ms ({tti_ms})")
    control_period_ms = _require_int(
        raw.get("control-period-ms", DEFAULT_CONTROL_PERIOD_MS), "control-period-ms", 1)
    if control_period_ms % report_period_ms != 0:
        raise ValidationError(
            "control-period-ms", f"must be a multiple of report-period-ms ({report_period_ms})")

    traffic_raw = raw.get("traffic", {})
    if not isinstance(traffic_raw, dict):
        raise ValidationError("traffic", "must be an object {slice: {rate-pps, packet-bytes}}")
    traffic: dict[int, TrafficSpec] = {}
    for slice_id, spec in _int_keyed(traffic_raw, "traffic").items():
        if slice_id not in allocation:
            raise ValidationError("traffic", f"slice {slice_id} not in slice-allocation")
        if not isinstance(spec, dict):
            raise ValidationError("traffic", f"slice {slice_id}: expected an object")
        unknown = set(spec) - _TRAFFIC_KEYS
        if unknown:
            raise ValidationError("traffic", f"unknown key {sorted(unknown)[0]!r}")
        rate = _require_number(spec.get("rate-pps", 0), "traffic")
        size = _require_int(spec.get("packet-bytes", 0), "traffic")
        if rate <= 0 or size <= 0:
            raise ValidationError(
                "traffic", f"slice {slice_id}: rate-pps and packet-bytes must be positive")
        traffic[slice_id] = TrafficSpec(rate, size)
    for slice_id in allocation.slices:
        if slice_id not in traffic:
            rate, size = DEFAULT_TRAFFIC.get(slice_id, DEFAULT_TRAFFIC[0])
            traffic[slice_id] = TrafficSpec(rate, size)

    cqi_step_prob = _require_number(raw.get("cqi-step-prob", 0.05), "cqi-step-prob")
    if not 0.0 <= cqi_step_prob <= 0.5:
        raise ValidationError("cqi-step-prob", f"{cqi_step_prob} outside [0, 0.5]")
    initial_cqi = _require_int(raw.get("initial-cqi", 7), "initial-cqi")
    if not 1 <= initial_cqi <= 15:
        raise ValidationError("initial-cqi", f"{initial_cqi} outside [1,15]")
    pf_alpha = _require_number(raw.get("pf-alpha", 0.05), "pf-alpha")
    if not 0.0 < pf_alpha <= 1.0:
        raise ValidationError("pf-alpha", f"{pf_alpha} outside (0,1]")
    pf_epsilon = _require_number(raw.get("pf-epsilon", 1.0), "pf-epsilon")
    if pf_epsilon <= 0:
        raise ValidationError("pf-epsilon", "must be positive")
    rng_seed = _require_int(raw.get("rng-seed", 1), "rng-seed", 0)
    if rng_seed >= 2 ** 64:
        raise ValidationError("rng-seed", "must fit in 64 bits")

    return ScenarioConfig(
        network_slicing=network_slicing,
        slice_allocation=allocation,
        slice_scheduling_policy=tuple(policies),
        slice_users=slice_users,
        num_bs=num_bs,
        ues_per_bs=ues_per_bs,
        tti_ms=tti_ms,
        report_period_ms=report_period_ms,
        control_period_ms=control_period_ms,
        traffic=traffic,
        cqi_step_prob=cqi_step_prob,
        initial_cqi=initial_cqi,
        pf_alpha=pf_alpha,
        pf_epsilon=pf_epsilon,
        rng_seed=rng_seed,
    )


def serialize_scenario_config(cfg: ScenarioConfig) -> str:
    """Inverse of parse_scenario_config: emits every field explicitly."""
    doc = {
        "network-slicing": cfg.network_slicing,
        "slice-allocation": {str(s): list(r) for s, r in cfg.slice_allocation.ranges.items()},
        "slice-scheduling-policy": [int(p) for p in cfg.slice_scheduling_policy],
        "slice-users": {str(s): list(u) for s, u in sorted(cfg.slice_users.items())},
        "total-rbgs": cfg.total_rbgs,
        "num-bs": cfg.num_bs,
        "ues-per-bs": cfg.ues_per_bs,
        "tti-ms": cfg.tti_ms,
        "report-period-ms": cfg.report_period_ms,
        "control-period-ms": cfg.control_period_ms,
        "traffic": {
            str(s): {"rate-pps": t.rate_pps, "packet-bytes": t.packet_bytes}
            for s, t in sorted(cfg.traffic.items())
        },
        "cqi-step-prob": cfg.cqi_step_prob,
        "initial-cqi": cfg.initial_cqi,
        "pf-alpha": cfg.pf_alpha,
        "pf-epsilon": cfg.pf_epsilon,
        "rng-seed": cfg.rng_seed,
    }
    return json.dumps(doc, indent=2, sort_keys=True)


def load_scenario_config(path) -> ScenarioConfig:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_scenario_config(fh.read())
