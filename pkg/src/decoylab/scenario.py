"""Network generation: machine profiles, filesystems, exploits, scenarios.

Four canonical machine profiles exist (default honeypot, concealed honeypot,
default real, concealed real). An experimental condition decides which
profile the honeypots and the real machines of a network receive:

* ``default``                  -- default honeypots + default reals
* ``concealed-honeypot``       -- concealed honeypots + default reals
* ``concealed-honeypot-real``  -- concealed honeypots + concealed reals

A concealed honeypot carries exactly the default real machine's observable
features, which is what makes the two indistinguishable before exploitation.
Everything here is generated from a seed and frozen after construction, so a
scenario can be rebuilt bit-for-bit from its spec and shared read-only
between sessions.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from datetime import date
from enum import Enum
from typing import Optional

from .rng import CountingRng, derive_seed


class OsAge(Enum):
    OBSOLETE = "obsolete"
    UP_TO_DATE = "up-to-date"


class VmIndicator(Enum):
    VIRTUAL = "virtual"
    PHYSICAL = "physical"


class MachineKind(Enum):
    DEFAULT_HONEYPOT = "default-honeypot"
    CONCEALED_HONEYPOT = "concealed-honeypot"
    DEFAULT_REAL = "default-real"
    CONCEALED_REAL = "concealed-real"

    @property
    def is_honeypot(self) -> bool:
        return self in (MachineKind.DEFAULT_HONEYPOT, MachineKind.CONCEALED_HONEYPOT)


class Condition(Enum):
    DEFAULT = "default"
    CONCEALED_HONEYPOT = "concealed-honeypot"
    CONCEALED_HONEYPOT_REAL = "concealed-honeypot-real"


def kind_for(condition: Condition, is_honeypot: bool) -> MachineKind:
    """Which profile column a machine gets under a condition."""
    if is_honeypot:
        if condition is Condition.DEFAULT:
            return MachineKind.DEFAULT_HONEYPOT
        return MachineKind.CONCEALED_HONEYPOT
    if condition is Condition.CONCEALED_HONEYPOT_REAL:
        return MachineKind.CONCEALED_REAL
    return MachineKind.DEFAULT_REAL


@dataclass(frozen=True)
class FeatureVector:
    """The eight observable features of one machine."""

    os_age: OsAge
    normal_ports: frozenset
    honeypot_ports: frozenset
    exploit_info_age: OsAge
    exploit_success_rate: float
    link_latency_ms: float
    vm_indicator: VmIndicator
    running_process_count: int
    suspicious_folder_count: int

    @property
    def open_ports(self) -> frozenset:
        return self.normal_ports | self.honeypot_ports


@dataclass(frozen=True)
class ScenarioConfig:
    """Tunable generation constants.

    The port numbers stand in for well-known service ports and for the
    listener ports that stock honeypot software leaves open; any fixed
    disjoint sets work, these are the defaults.
    """

    normal_ports: frozenset = frozenset({22, 80, 443, 3306})
    honeypot_indicator_ports: frozenset = frozenset({2222, 4433, 5001})
    subfolder_range: tuple = (5, 6)
    honeypot_suspicious_folders: int = 4
    real_suspicious_folders: int = 1
    exploits_per_machine: tuple = (2, 4)


DEFAULT_CONFIG = ScenarioConfig()

# Observables per profile column: (os_age, has honeypot ports, exploit info
# age, success rate, latency ms, vm, process count, suspicious folders).
_PROFILE_CELLS = {
    MachineKind.DEFAULT_HONEYPOT: (OsAge.OBSOLETE, True, OsAge.OBSOLETE, 1.0, 1.0, VmIndicator.VIRTUAL, 2, "honeypot"),
    MachineKind.CONCEALED_HONEYPOT: (OsAge.UP_TO_DATE, False, OsAge.UP_TO_DATE, 0.4, 0.2, VmIndicator.PHYSICAL, 10, "real"),
    MachineKind.DEFAULT_REAL: (OsAge.UP_TO_DATE, False, OsAge.UP_TO_DATE, 0.4, 0.2, VmIndicator.PHYSICAL, 10, "real"),
    MachineKind.CONCEALED_REAL: (OsAge.OBSOLETE, True, OsAge.OBSOLETE, 0.8, 1.0, VmIndicator.VIRTUAL, 2, "honeypot"),
}


def profile_for_kind(kind: MachineKind, config: ScenarioConfig = DEFAULT_CONFIG) -> FeatureVector:
    os_age, hp_ports, info_age, rate, latency, vm, procs, folders = _PROFILE_CELLS[kind]
    return FeatureVector(
        os_age=os_age,
        normal_ports=config.normal_ports,
        honeypot_ports=config.honeypot_indicator_ports if hp_ports else frozenset(),
        exploit_info_age=info_age,
        exploit_success_rate=rate,
        link_latency_ms=latency,
        vm_indicator=vm,
        running_process_count=procs,
        suspicious_folder_count=(
            config.honeypot_suspicious_folders if folders == "honeypot" else config.real_suspicious_folders
        ),
    )


def profile_for(condition: Condition, is_honeypot: bool, config: ScenarioConfig = DEFAULT_CONFIG) -> FeatureVector:
    """Canonical feature vector for one side of the network under a condition."""
    return profile_for_kind(kind_for(condition, is_honeypot), config)


# ---------------------------------------------------------------------------
# Exploit catalog
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ExploitInfo:
    name: str
    port: int
    disclosure_date: date
    description: str


EXPLOIT_CATALOG = (
    ExploitInfo("http2_slow_read", 443, date(2020, 3, 1), "HTTP/2 slow read"),
    ExploitInfo("ldaps_buffer_overflow", 443, date(2017, 4, 11), "LDAPS buffer overflow"),
    ExploitInfo("java_deserialize_remote_code_execution", 80, date(2015, 9, 29), "Java deserialize remote code execution"),
    ExploitInfo("remote_authentication", 22, date(2012, 10, 23), "Remote authentication"),
    ExploitInfo("dos_attack", 80, date(2010, 1, 26), "DoS attack"),
    ExploitInfo("asus_remote_code_execution", 80, date(2008, 3, 25), "ASUS remote code execution"),
    ExploitInfo("authentication_bypass", 22, date(2006, 5, 15), "Authentication bypass"),
    ExploitInfo("remote_buffer_overflow", 3306, date(2001, 4, 4), "Remote buffer overflow"),
)

EXPLOITS_BY_NAME = {e.name: e for e in EXPLOIT_CATALOG}

# The catalog splits cleanly at 2013: nothing is dated 2013-2014, so "old"
# entries are <= 2012 and "current" ones are >= 2015.
_OBSOLETE_POOL = tuple(e for e in EXPLOIT_CATALOG if e.disclosure_date.year <= 2012)
_UP_TO_DATE_POOL = tuple(e for e in EXPLOIT_CATALOG if e.disclosure_date.year >= 2015)


def assign_exploits(profile: FeatureVector, rng: CountingRng, config: ScenarioConfig = DEFAULT_CONFIG) -> tuple:
    """Pick this machine's advertised exploits from the matching age pool."""
    pool = _OBSOLETE_POOL if profile.exploit_info_age is OsAge.OBSOLETE else _UP_TO_DATE_POOL
    if not pool:
        raise ValueError("exploit catalog has no entries for age class")
    lo, hi = config.exploits_per_machine
    count = rng.randint(lo, min(hi, len(pool)))
    picked = rng.sample(pool, count)
    return tuple(sorted(picked, key=lambda e: e.name))


# ---------------------------------------------------------------------------
# Filesystems
# ---------------------------------------------------------------------------

class NodeKind(Enum):
    DIRECTORY = "directory"
    FILE = "file"


class Access(Enum):
    ALLOWED = "allowed"
    DENIED = "denied"


class ContentTag(Enum):
    PIN_FILE = "pin"
    FILLER = "filler"


@dataclass(frozen=True)
class FileNode:
    name: str
    kind: NodeKind
    access: Access
    content: Optional[ContentTag] = None
    children: tuple = ()

    def child(self, name: str) -> Optional["FileNode"]:
        for c in self.children:
            if c.name == name:
                return c
        return None

    @property
    def is_suspicious(self) -> bool:
        """Empty or access-denied: the tells a sloppy decoy filesystem shows."""
        if self.kind is not NodeKind.DIRECTORY:
            return False
        return self.access is Access.DENIED or not self.children


FileTree = FileNode

_SUBFOLDER_NAMES = (
    "backup", "desktop", "documents", "downloads",
    "music", "pictures", "projects", "videos",
)
_FILLER_FILES = (
    "archive.zip", "data.csv", "notes.txt",
    "readme.md", "report.doc", "todo.txt",
)


def generate_filesystem(profile: FeatureVector, rng: CountingRng, config: ScenarioConfig = DEFAULT_CONFIG) -> FileTree:
    """Build one machine's tree: a single user folder whose subfolders carry
    the profile's count of empty/denied folders, with pin.txt reachable
    through an allowed one."""
    n_sub = rng.randint(*config.subfolder_range)
    n_bad = profile.suspicious_folder_count
    if n_bad >= n_sub:
        raise ValueError(f"suspicious folder count {n_bad} must be < subfolder count {n_sub}")

    names = rng.sample(_SUBFOLDER_NAMES, n_sub)
    bad_slots = set(rng.sample(range(n_sub), n_bad))
    good_slots = [i for i in range(n_sub) if i not in bad_slots]
    pin_slot = rng.choice(good_slots)

    subfolders = []
    for i, sub_name in enumerate(names):
        if i in bad_slots:
            if rng.random() < 0.5:
                node = FileNode(sub_name, NodeKind.DIRECTORY, Access.DENIED)
            else:
                node = FileNode(sub_name, NodeKind.DIRECTORY, Access.ALLOWED)  # empty
        else:
            files = [
                FileNode(f, NodeKind.FILE, Access.ALLOWED, ContentTag.FILLER)
                for f in rng.sample(_FILLER_FILES, rng.randint(1, 3))
            ]
            if i == pin_slot:
                files.append(FileNode("pin.txt", NodeKind.FILE, Access.ALLOWED, ContentTag.PIN_FILE))
            node = FileNode(sub_name, NodeKind.DIRECTORY, Access.ALLOWED, children=tuple(files))
        subfolders.append(node)

    user = FileNode("user", NodeKind.DIRECTORY, Access.ALLOWED, children=tuple(subfolders))
    return FileNode("", NodeKind.DIRECTORY, Access.ALLOWED, children=(user,))


def find_pin_path(tree: FileTree) -> Optional[tuple]:
    """Path components of the directory holding pin.txt, through allowed dirs."""

    def walk(node, path):
        if node.access is Access.DENIED:
            return None
        for c in node.children:
            if c.kind is NodeKind.FILE and c.content is ContentTag.PIN_FILE:
                return path
            if c.kind is NodeKind.DIRECTORY:
                found = walk(c, path + (c.name,))
                if found is not None:
                    return found
        return None

    return walk(tree, ())


# ---------------------------------------------------------------------------
# Scenarios
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class MachineRecord:
    name: str
    kind: MachineKind
    feature_vector: FeatureVector
    file_tree: FileTree
    exploits: tuple

    @property
    def is_honeypot(self) -> bool:
        return self.kind.is_honeypot


@dataclass(frozen=True)
class ScenarioSpec:
    condition: Condition
    round_index: int = 1
    n_machines: int = 40
    n_honeypots: int = 20
    seed: int = 0

    def to_dict(self) -> dict:
        return {
            "condition": self.condition.value,
            "round_index": self.round_index,
            "n_machines": self.n_machines,
            "n_honeypots": self.n_honeypots,
            "seed": self.seed,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ScenarioSpec":
        return cls(
            condition=Condition(d["condition"]),
            round_index=d["round_index"],
            n_machines=d["n_machines"],
            n_honeypots=d["n_honeypots"],
            seed=d["seed"],
        )


@dataclass(frozen=True)
class NetworkScenario:
    scenario_id: str
    condition: Condition
    round_index: int
    seed: int
    machines: tuple
    _by_name: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        self._by_name.update({m.name: m for m in self.machines})

    def machine(self, name: str) -> Optional[MachineRecord]:
        return self._by_name.get(name)

    @property
    def machine_names(self) -> list:
        return [m.name for m in self.machines]

    @property
    def honeypot_names(self) -> set:
        return {m.name for m in self.machines if m.is_honeypot}


def build_scenario(spec: ScenarioSpec, config: ScenarioConfig = DEFAULT_CONFIG) -> NetworkScenario:
    """Generate the full network for a spec; deterministic in the seed."""
    if spec.n_machines < 1:
        raise ValueError("n_machines must be >= 1")
    if not 0 <= spec.n_honeypots <= spec.n_machines:
        raise ValueError("n_honeypots must be between 0 and n_machines")

    placement_rng = CountingRng(derive_seed(spec.seed, spec.round_index, "placement"))
    honeypot_slots = set(placement_rng.sample(range(spec.n_machines), spec.n_honeypots))

    machines = []
    for i in range(spec.n_machines):
        is_honeypot = i in honeypot_slots
        kind = kind_for(spec.condition, is_honeypot)
        vector = profile_for_kind(kind, config)
        machine_rng = CountingRng(derive_seed(spec.seed, spec.round_index, "machine", i))
        machines.append(
            MachineRecord(
                name=f"System{i + 1}",
                kind=kind,
                feature_vector=vector,
                file_tree=generate_filesystem(vector, machine_rng, config),
                exploits=assign_exploits(vector, machine_rng, config),
            )
        )

    scenario_id = f"scn-{derive_seed(spec.condition.value, spec.round_index, spec.n_machines, spec.n_honeypots, spec.seed) & 0xFFFFFFFF:08x}"
    return NetworkScenario(
        scenario_id=scenario_id,
        condition=spec.condition,
        round_index=spec.round_index,
        seed=spec.seed,
        machines=tuple(machines),
    )


# ---------------------------------------------------------------------------
# Serialization: canonical, stable key order, diff-friendly
# ---------------------------------------------------------------------------

def _node_to_dict(node: FileNode) -> dict:
    d = {
        "access": node.access.value,
        "kind": node.kind.value,
        "name": node.name,
    }
    if node.content is not None:
        d["content"] = node.content.value
    if node.children:
        d["children"] = [_node_to_dict(c) for c in node.children]
    return d


def _node_from_dict(d: dict) -> FileNode:
    return FileNode(
        name=d["name"],
        kind=NodeKind(d["kind"]),
        access=Access(d["access"]),
        content=ContentTag(d["content"]) if "content" in d else None,
        children=tuple(_node_from_dict(c) for c in d.get("children", ())),
    )


def _vector_to_dict(v: FeatureVector) -> dict:
    return {
        "exploit_info_age": v.exploit_info_age.value,
        "exploit_success_rate": v.exploit_success_rate,
        "honeypot_ports": sorted(v.honeypot_ports),
        "link_latency_ms": v.link_latency_ms,
        "normal_ports": sorted(v.normal_ports),
        "os_age": v.os_age.value,
        "running_process_count": v.running_process_count,
        "suspicious_folder_count": v.suspicious_folder_count,
        "vm_indicator": v.vm_indicator.value,
    }


def _vector_from_dict(d: dict) -> FeatureVector:
    return FeatureVector(
        os_age=OsAge(d["os_age"]),
        normal_ports=frozenset(d["normal_ports"]),
        honeypot_ports=frozenset(d["honeypot_ports"]),
        exploit_info_age=OsAge(d["exploit_info_age"]),
        exploit_success_rate=d["exploit_success_rate"],
        link_latency_ms=d["link_latency_ms"],
        vm_indicator=VmIndicator(d["vm_indicator"]),
        running_process_count=d["running_process_count"],
        suspicious_folder_count=d["suspicious_folder_count"],
    )


def scenario_to_dict(scenario: NetworkScenario) -> dict:
    return {
        "condition": scenario.condition.value,
        "machines": [
            {
                "exploits": [
                    {
                        "description": e.description,
                        "disclosure_date": e.disclosure_date.isoformat(),
                        "name": e.name,
                        "port": e.port,
                    }
                    for e in m.exploits
                ],
                "feature_vector": _vector_to_dict(m.feature_vector),
                "file_tree": _node_to_dict(m.file_tree),
                "kind": m.kind.value,
                "name": m.name,
            }
            for m in scenario.machines
        ],
        "round_index": scenario.round_index,
        "scenario_id": scenario.scenario_id,
        "seed": scenario.seed,
    }


def scenario_from_dict(d: dict) -> NetworkScenario:
    machines = tuple(
        MachineRecord(
            name=m["name"],
            kind=MachineKind(m["kind"]),
            feature_vector=_vector_from_dict(m["feature_vector"]),
            file_tree=_node_from_dict(m["file_tree"]),
            exploits=tuple(
                ExploitInfo(
                    name=e["name"],
                    port=e["port"],
                    disclosure_date=date.fromisoformat(e["disclosure_date"]),
                    description=e["description"],
                )
                for e in m["exploits"]
            ),
        )
        for m in d["machines"]
    )
    return NetworkScenario(
        scenario_id=d["scenario_id"],
        condition=Condition(d["condition"]),
        round_index=d["round_index"],
        seed=d["seed"],
        machines=machines,
    )


def scenario_to_json(scenario: NetworkScenario) -> str:
    return json.dumps(scenario_to_dict(scenario), indent=2, sort_keys=True)


def scenario_from_json(text: str) -> NetworkScenario:
    return scenario_from_dict(json.loads(text))
