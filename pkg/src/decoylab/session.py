"""Attacker session engine: the command loop over one generated network.

A session walks the recon -> exploit -> post-exploit loop: list and probe
machines, optionally buy noisy deception estimates, fire exploits, poke
around the compromised filesystem, exfiltrate pin.txt or leave. Commands
charge time against a fixed budget, probabilistic outcomes come from the
session's own seeded generator, and every machine settles its score exactly
once (+-100 on exfiltration, +-30 on leaving without it).

The engine is strictly sequential and deterministic: the same scenario,
seed, command script and elapsed times always produce the same outcomes,
which is what makes event logs replayable.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Optional, Union

from .rng import CountingRng
from .scenario import (
    Access,
    ContentTag,
    FileNode,
    MachineRecord,
    NetworkScenario,
    NodeKind,
    OsAge,
    VmIndicator,
    EXPLOITS_BY_NAME,
)

EXFIL_ADDRESS = "172.22.31.31"
PIN_FILENAME = "pin.txt"


@dataclass(frozen=True)
class SessionConfig:
    time_budget_s: float = 3600.0
    rtt_cost_s: float = 10.0
    checkhs_cost_s: float = 10.0
    fetch_score: int = 100
    logout_score: int = 30
    exfil_address: str = EXFIL_ADDRESS
    benchmark_rtt_ms: float = 0.2
    rtt_jitter: float = 0.0  # multiplicative; 0 keeps latencies exact
    os_label_obsolete: str = "Linux 2.6.32 (Ubuntu 10.04 LTS)"
    os_label_up_to_date: str = "Linux 5.15.0 (Ubuntu 22.04 LTS)"
    process_names: tuple = (
        "systemd", "sshd", "cron", "rsyslogd", "dbus-daemon",
        "nginx", "mysqld", "ntpd", "irqbalance", "agetty",
    )

    def to_dict(self) -> dict:
        return {
            "time_budget_s": self.time_budget_s,
            "rtt_cost_s": self.rtt_cost_s,
            "checkhs_cost_s": self.checkhs_cost_s,
            "fetch_score": self.fetch_score,
            "logout_score": self.logout_score,
            "exfil_address": self.exfil_address,
            "benchmark_rtt_ms": self.benchmark_rtt_ms,
            "rtt_jitter": self.rtt_jitter,
            "os_label_obsolete": self.os_label_obsolete,
            "os_label_up_to_date": self.os_label_up_to_date,
            "process_names": list(self.process_names),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "SessionConfig":
        d = dict(d)
        d["process_names"] = tuple(d.get("process_names", cls.process_names))
        return cls(**d)


# ---------------------------------------------------------------------------
# Command grammar
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class NmapList:
    pass


@dataclass(frozen=True)
class NmapProbe:
    machine: str
    rtt: bool = False


@dataclass(frozen=True)
class CheckHs:
    machine: str


@dataclass(frozen=True)
class InfoExploit:
    exploit: str


@dataclass(frozen=True)
class UseExploit:
    exploit: str
    machine: str


@dataclass(frozen=True)
class Ls:
    pass


@dataclass(frozen=True)
class Cd:
    path: str


@dataclass(frozen=True)
class Ps:
    pass


@dataclass(frozen=True)
class CheckVm:
    pass


@dataclass(frozen=True)
class Scp:
    filename: str
    address: str


@dataclass(frozen=True)
class Logout:
    pass


@dataclass(frozen=True)
class Help:
    pass


Command = Union[
    NmapList, NmapProbe, CheckHs, InfoExploit, UseExploit,
    Ls, Cd, Ps, CheckVm, Scp, Logout, Help,
]

GRAMMAR_LINES = (
    "nmap -sL all",
    "nmap <System> [-rtt]",
    "checkHS <System>",
    "info_exploit <exploit>",
    "use_exploit <exploit> <System>",
    "ls",
    "cd <path>",
    "ps -A",
    "checkVM",
    f"scp {PIN_FILENAME} <address>",
    "logout",
    "help",
)


class ParseError(ValueError):
    """Raised when a line does not match the grammar; names the bad token."""

    def __init__(self, code: str, token: str, message: str):
        super().__init__(message)
        self.code = code
        self.token = token


def parse_command(line: str) -> Command:
    tokens = line.split()
    if not tokens:
        raise ParseError("BadArity", "", "empty command line")
    verb, args = tokens[0], tokens[1:]

    def need(n: int):
        if len(args) != n:
            bad = args[n] if len(args) > n else verb
            raise ParseError("BadArity", bad, f"'{verb}' expects {n} argument(s), got {len(args)}")

    if verb == "nmap":
        if args == ["-sL", "all"]:
            return NmapList()
        if len(args) == 1 and args[0] != "-sL":
            return NmapProbe(args[0], rtt=False)
        if len(args) == 2 and args[1] == "-rtt" and args[0] != "-sL":
            return NmapProbe(args[0], rtt=True)
        bad = args[-1] if args else verb
        raise ParseError("BadArity", bad, "usage: 'nmap -sL all' or 'nmap <System> [-rtt]'")
    if verb == "checkHS":
        need(1)
        return CheckHs(args[0])
    if verb == "info_exploit":
        need(1)
        return InfoExploit(args[0])
    if verb == "use_exploit":
        need(2)
        return UseExploit(args[0], args[1])
    if verb == "ls":
        need(0)
        return Ls()
    if verb == "cd":
        need(1)
        return Cd(args[0])
    if verb == "ps":
        if args != ["-A"]:
            bad = args[0] if args else verb
            raise ParseError("BadArity", bad, "usage: 'ps -A'")
        return Ps()
    if verb == "checkVM":
        need(0)
        return CheckVm()
    if verb == "scp":
        need(2)
        if args[0] != PIN_FILENAME:
            raise ParseError("BadArity", args[0], f"usage: 'scp {PIN_FILENAME} <address>'")
        return Scp(args[0], args[1])
    if verb == "logout":
        need(0)
        return Logout()
    if verb == "help":
        need(0)
        return Help()
    raise ParseError("UnknownVerb", verb, f"unknown command '{verb}'")


def render_command(cmd: Command) -> str:
    if isinstance(cmd, NmapList):
        return "nmap -sL all"
    if isinstance(cmd, NmapProbe):
        return f"nmap {cmd.machine} -rtt" if cmd.rtt else f"nmap {cmd.machine}"
    if isinstance(cmd, CheckHs):
        return f"checkHS {cmd.machine}"
    if isinstance(cmd, InfoExploit):
        return f"info_exploit {cmd.exploit}"
    if isinstance(cmd, UseExploit):
        return f"use_exploit {cmd.exploit} {cmd.machine}"
    if isinstance(cmd, Ls):
        return "ls"
    if isinstance(cmd, Cd):
        return f"cd {cmd.path}"
    if isinstance(cmd, Ps):
        return "ps -A"
    if isinstance(cmd, CheckVm):
        return "checkVM"
    if isinstance(cmd, Scp):
        return f"scp {cmd.filename} {cmd.address}"
    if isinstance(cmd, Logout):
        return "logout"
    if isinstance(cmd, Help):
        return "help"
    raise TypeError(f"not a command: {cmd!r}")


# ---------------------------------------------------------------------------
# Errors and outcomes
# ---------------------------------------------------------------------------

class SessionError(Exception):
    code = "SessionError"


class UnknownMachine(SessionError):
    code = "UnknownMachine"


class UnknownExploit(SessionError):
    code = "UnknownExploit"


class ExploitNotPresent(SessionError):
    code = "ExploitNotPresent"


class WrongPhase(SessionError):
    code = "WrongPhase"


class InsufficientTime(SessionError):
    code = "InsufficientTime"


class NoSuchPath(SessionError):
    code = "NoSuchPath"


class AccessDenied(SessionError):
    code = "AccessDenied"


class FileNotFound(SessionError):
    code = "FileNotFound"


class BadAddress(SessionError):
    code = "BadAddress"


class SessionEnded(SessionError):
    code = "SessionEnded"


class Phase(Enum):
    RECON = "recon"
    FOOTHOLD = "foothold"
    ENDED = "ended"


class MachineOutcome(Enum):
    NOT_TOUCHED = "not-touched"
    EXPLOITED_NO_FETCH = "exploited-no-fetch"
    EXPLOITED_FETCHED = "exploited-fetched"
    ABANDONED = "abandoned"  # live foothold settled by the expiring clock


@dataclass
class CommandOutcome:
    """What one executed command produced.

    ``score_delta`` is nonzero only at settlement feedback (scp / logout).
    ``session_end`` is attached to whichever outcome ended the session and
    carries the forced settlement, if a foothold was still open.
    """

    text: str
    payload: dict
    time_charged_s: float = 0.0
    score_delta: int = 0
    session_ended: bool = False
    error: Optional[str] = None
    session_end: Optional[dict] = None

    def to_dict(self) -> dict:
        return {
            "error": self.error,
            "payload": self.payload,
            "score_delta": self.score_delta,
            "session_end": self.session_end,
            "session_ended": self.session_ended,
            "text": self.text,
            "time_charged_s": self.time_charged_s,
        }


# ---------------------------------------------------------------------------
# The engine
# ---------------------------------------------------------------------------

class Session:
    """One attacker's live state over an immutable scenario."""

    def __init__(
        self,
        scenario: NetworkScenario,
        seed: int,
        config: Optional[SessionConfig] = None,
        session_id: Optional[str] = None,
    ):
        self.scenario = scenario
        self.config = config or SessionConfig()
        self.rng = CountingRng(seed)
        self.session_id = session_id or f"session-{seed & 0xFFFFFFFF:08x}"
        self.phase = Phase.RECON
        self.current_machine: Optional[str] = None
        self.working_directory: tuple = ()
        self.time_remaining_s: float = self.config.time_budget_s
        self.score: int = 0
        self.outcomes = {m.name: MachineOutcome.NOT_TOUCHED for m in scenario.machines}
        self.end_reason: Optional[str] = None

    # -- time ---------------------------------------------------------------

    def charge_time(self, cost_s: float) -> Optional[dict]:
        """Deduct from the clock, floored at zero; ending the session settles
        any live unsettled foothold at the leave-without-fetch rate."""
        if cost_s < 0:
            raise ValueError("cost must be >= 0")
        self.time_remaining_s = max(0.0, self.time_remaining_s - cost_s)
        if self.time_remaining_s == 0.0 and self.phase is not Phase.ENDED:
            return self._end_session("time")
        return None

    def _end_session(self, reason: str) -> dict:
        settlement = None
        if self.current_machine is not None:
            machine = self.scenario.machine(self.current_machine)
            if self.outcomes[machine.name] is MachineOutcome.NOT_TOUCHED:
                delta = self.config.logout_score if not machine.is_honeypot else -self.config.logout_score
                self.score += delta
                self.outcomes[machine.name] = MachineOutcome.ABANDONED
                settlement = {"machine": machine.name, "score_delta": delta}
        self.phase = Phase.ENDED
        self.end_reason = reason
        self.current_machine = None
        self.working_directory = ()
        return {"reason": reason, "settlement": settlement, "final_score": self.score}

    # -- lookups ------------------------------------------------------------

    def _machine(self, name: str) -> MachineRecord:
        m = self.scenario.machine(name)
        if m is None:
            raise UnknownMachine(f"no such machine: {name}")
        return m

    def _require_phase(self, phase: Phase, verb: str):
        if self.phase is not phase:
            raise WrongPhase(f"'{verb}' is not available in the {self.phase.value} phase")

    def _foothold(self) -> MachineRecord:
        if self.phase is not Phase.FOOTHOLD:
            raise WrongPhase("no foothold: exploit a machine first")
        return self.scenario.machine(self.current_machine)

    def _node_at(self, parts: tuple) -> FileNode:
        node = self._foothold().file_tree
        for p in parts:
            node = node.child(p)
        return node

    def all_settled(self) -> bool:
        return all(o is not MachineOutcome.NOT_TOUCHED for o in self.outcomes.values())

    # -- recon commands -----------------------------------------------------

    def nmap_list(self) -> CommandOutcome:
        self._require_phase(Phase.RECON, "nmap -sL all")
        names = self.scenario.machine_names
        return CommandOutcome(
            text="\n".join(names),
            payload={"machines": names},
        )

    def nmap_probe(self, name: str, rtt: bool = False) -> CommandOutcome:
        machine = self._machine(name)
        v = machine.feature_vector
        cost = 0.0
        rtt_payload = None
        if rtt:
            if self.time_remaining_s < self.config.rtt_cost_s:
                raise InsufficientTime("not enough time remaining for -rtt")
            cost = self.config.rtt_cost_s
            latency = v.link_latency_ms
            if self.config.rtt_jitter > 0:
                latency *= 1.0 + self.config.rtt_jitter * (2.0 * self.rng.random() - 1.0)
            rtt_payload = {
                "benchmark_ms": self.config.benchmark_rtt_ms,
                "machine_ms": latency,
            }

        os_label = (
            self.config.os_label_obsolete
            if v.os_age is OsAge.OBSOLETE
            else self.config.os_label_up_to_date
        )
        exploits = [{"name": e.name, "port": e.port} for e in machine.exploits]
        lines = [f"{name}", f"  os: {os_label}", "  ports: " + ", ".join(str(p) for p in sorted(v.open_ports))]
        for e in exploits:
            lines.append(f"  {e['port']}/tcp  {e['name']}")
        if rtt_payload:
            lines.append(f"  benchmark rtt: {rtt_payload['benchmark_ms']} ms")
            lines.append(f"  {name} rtt: {rtt_payload['machine_ms']} ms")
        outcome = CommandOutcome(
            text="\n".join(lines),
            payload={
                "machine": name,
                "os": os_label,
                "ports": sorted(v.open_ports),
                "exploits": exploits,
                "rtt": rtt_payload,
            },
            time_charged_s=cost,
        )
        ended = self.charge_time(cost) if cost else None
        if ended:
            outcome.session_ended = True
            outcome.session_end = ended
        return outcome

    def check_hs(self, name: str) -> CommandOutcome:
        machine = self._machine(name)
        if self.time_remaining_s < self.config.checkhs_cost_s:
            raise InsufficientTime("not enough time remaining for checkHS")
        correct = self.rng.random() < 0.5
        looks_deceptive = machine.is_honeypot if correct else not machine.is_honeypot
        r = self.rng.random()
        score = 0.5 + 0.5 * r if looks_deceptive else 0.5 * r
        outcome = CommandOutcome(
            text=f"deception likelihood for {name}: {score:.3f}",
            payload={"machine": name, "score": score},
            time_charged_s=self.config.checkhs_cost_s,
        )
        ended = self.charge_time(self.config.checkhs_cost_s)
        if ended:
            outcome.session_ended = True
            outcome.session_end = ended
        return outcome

    def info_exploit(self, exploit_name: str) -> CommandOutcome:
        info = EXPLOITS_BY_NAME.get(exploit_name)
        if info is None:
            raise UnknownExploit(f"no such exploit: {exploit_name}")
        return CommandOutcome(
            text=f"{info.name}: {info.description}, disclosed {info.disclosure_date.isoformat()}, port {info.port}",
            payload={
                "name": info.name,
                "port": info.port,
                "disclosure_date": info.disclosure_date.isoformat(),
                "description": info.description,
            },
        )

    def use_exploit(self, exploit_name: str, name: str) -> CommandOutcome:
        self._require_phase(Phase.RECON, "use_exploit")
        machine = self._machine(name)
        if exploit_name not in {e.name for e in machine.exploits}:
            raise ExploitNotPresent(f"{exploit_name} is not present on {name}")
        success = self.rng.random() < machine.feature_vector.exploit_success_rate
        if success:
            self.phase = Phase.FOOTHOLD
            self.current_machine = name
            self.working_directory = ()
            text = f"exploit succeeded: you have a shell on {name}"
        else:
            text = f"exploit failed: {exploit_name} on {name}"
        return CommandOutcome(
            text=text,
            payload={"machine": name, "exploit": exploit_name, "success": success},
        )

    # -- foothold commands ----------------------------------------------------

    def post_ls(self) -> CommandOutcome:
        self._foothold()
        node = self._node_at(self.working_directory)
        entries = [
            {"name": c.name, "kind": c.kind.value, "access": c.access.value}
            for c in sorted(node.children, key=lambda c: c.name)
        ]
        lines = []
        for e in entries:
            suffix = "/" if e["kind"] == "directory" else ""
            denied = "  (access denied)" if e["access"] == "denied" else ""
            lines.append(f"{e['name']}{suffix}{denied}")
        return CommandOutcome(
            text="\n".join(lines) if lines else "(empty)",
            payload={"path": "/" + "/".join(self.working_directory), "entries": entries},
        )

    def post_cd(self, path: str) -> CommandOutcome:
        self._foothold()
        target = self._resolve(path)
        self.working_directory = target
        rendered = "/" + "/".join(target)
        return CommandOutcome(text=rendered, payload={"path": rendered})

    def _resolve(self, path: str) -> tuple:
        parts = list(self.working_directory) if not path.startswith("/") else []
        for token in path.split("/"):
            if token in ("", "."):
                continue
            if token == "..":
                if parts:
                    parts.pop()
                continue
            here = self._node_at(tuple(parts))
            child = here.child(token)
            if child is None or child.kind is not NodeKind.DIRECTORY:
                raise NoSuchPath(f"no such directory: {token}")
            if child.access is Access.DENIED:
                raise AccessDenied(f"access denied: {token}")
            parts.append(token)
        return tuple(parts)

    def post_ps(self) -> CommandOutcome:
        machine = self._foothold()
        count = machine.feature_vector.running_process_count
        names = list(self.config.process_names[:count])
        return CommandOutcome(text="\n".join(names), payload={"processes": names})

    def post_checkvm(self) -> CommandOutcome:
        machine = self._foothold()
        verdict = machine.feature_vector.vm_indicator.value
        return CommandOutcome(
            text=f"environment: {verdict}",
            payload={"machine": machine.name, "verdict": verdict},
        )

    def scp(self, filename: str, address: str) -> CommandOutcome:
        machine = self._foothold()
        if address != self.config.exfil_address:
            raise BadAddress(f"unknown destination address: {address}")
        node = self._node_at(self.working_directory)
        names = {c.name for c in node.children if c.kind is NodeKind.FILE}
        if filename not in names:
            raise FileNotFound(f"{filename} is not in the current directory")
        delta = 0
        if self.outcomes[machine.name] is MachineOutcome.NOT_TOUCHED:
            delta = self.config.fetch_score if not machine.is_honeypot else -self.config.fetch_score
            self.score += delta
            self.outcomes[machine.name] = MachineOutcome.EXPLOITED_FETCHED
        sign = "+" if delta >= 0 else ""
        return CommandOutcome(
            text=f"{filename} -> {address} transfer complete. score {sign}{delta}, total {self.score}",
            payload={
                "machine": machine.name,
                "file": filename,
                "address": address,
                "score_delta": delta,
                "score": self.score,
            },
            score_delta=delta,
        )

    def logout(self) -> CommandOutcome:
        machine = self._foothold()
        delta = 0
        if self.outcomes[machine.name] is MachineOutcome.NOT_TOUCHED:
            delta = self.config.logout_score if not machine.is_honeypot else -self.config.logout_score
            self.score += delta
            self.outcomes[machine.name] = MachineOutcome.EXPLOITED_NO_FETCH
        self.phase = Phase.RECON
        self.current_machine = None
        self.working_directory = ()
        sign = "+" if delta >= 0 else ""
        outcome = CommandOutcome(
            text=f"logged out of {machine.name}. score {sign}{delta}, total {self.score}",
            payload={"machine": machine.name, "score_delta": delta, "score": self.score},
            score_delta=delta,
        )
        if self.all_settled():
            outcome.session_end = self._end_session("all-settled")
            outcome.session_ended = True
        return outcome

    def help(self) -> CommandOutcome:
        return CommandOutcome(text="\n".join(GRAMMAR_LINES), payload={"commands": list(GRAMMAR_LINES)})

    # -- dispatch -------------------------------------------------------------

    def execute(self, cmd: Command, elapsed_s: float = 0.0) -> CommandOutcome:
        """Run one command: charge elapsed wall/virtual time first, then the
        command itself. Errors come back as error outcomes, not exceptions."""
        if self.phase is Phase.ENDED:
            return CommandOutcome(
                text="session has ended",
                payload={},
                error=SessionEnded.code,
                session_ended=True,
            )
        ended = self.charge_time(elapsed_s)
        if ended:
            return CommandOutcome(
                text="time has run out",
                payload={},
                error=SessionEnded.code,
                session_ended=True,
                session_end=ended,
            )
        try:
            if isinstance(cmd, NmapList):
                return self.nmap_list()
            if isinstance(cmd, NmapProbe):
                return self.nmap_probe(cmd.machine, cmd.rtt)
            if isinstance(cmd, CheckHs):
                return self.check_hs(cmd.machine)
            if isinstance(cmd, InfoExploit):
                return self.info_exploit(cmd.exploit)
            if isinstance(cmd, UseExploit):
                return self.use_exploit(cmd.exploit, cmd.machine)
            if isinstance(cmd, Ls):
                return self.post_ls()
            if isinstance(cmd, Cd):
                return self.post_cd(cmd.path)
            if isinstance(cmd, Ps):
                return self.post_ps()
            if isinstance(cmd, CheckVm):
                return self.post_checkvm()
            if isinstance(cmd, Scp):
                return self.scp(cmd.filename, cmd.address)
            if isinstance(cmd, Logout):
                return self.logout()
            if isinstance(cmd, Help):
                return self.help()
            raise TypeError(f"not a command: {cmd!r}")
        except SessionError as exc:
            return CommandOutcome(text=str(exc), payload={"detail": str(exc)}, error=exc.code)

    def execute_line(self, line: str, elapsed_s: float = 0.0) -> CommandOutcome:
        if self.phase is Phase.ENDED:
            return CommandOutcome(
                text="session has ended",
                payload={},
                error=SessionEnded.code,
                session_ended=True,
            )
        try:
            cmd = parse_command(line)
        except ParseError as exc:
            ended = self.charge_time(elapsed_s)
            out = CommandOutcome(
                text=str(exc),
                payload={"detail": str(exc), "token": exc.token},
                error=exc.code,
            )
            if ended:
                out.session_ended = True
                out.session_end = ended
            return out
        return self.execute(cmd, elapsed_s=elapsed_s)
