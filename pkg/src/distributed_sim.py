"""
Distributed Simulator
=====================

Vertex-level execution of polynomial filtering and CIPA with synchronous
one-hop message rounds.

Every agent owns its rows of the shifts, its entry of y and a handful of
scalar registers. A round is a send phase (each agent broadcasts one
register to its neighbors through the message bus) followed by a compute
phase (each agent combines its own value and its inbox with its row
weights, in sorted neighbor order).
"""

import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Tuple

import numpy as np
import pandas as pd

from src.config import AGENT_DUMP_CAP
from src.errors import DimensionMismatchError, DivergenceError, InvalidInputError, SizeCapError
from src.filter_engine import FilterSpec, IterTrace, apply_filter, check_same_shifts, relative_error, residual_blew_up
from src.graph_core import Graph

logger = logging.getLogger(__name__)


@dataclass
class Agent:
    """State held at vertex i."""

    id: int
    neighbors: np.ndarray
    row_cols: np.ndarray
    shift_rows: List[np.ndarray]
    local_y: np.ndarray
    registers: Dict[str, np.ndarray] = field(default_factory=dict)

    @property
    def stored_entries(self) -> int:
        """Row entries stored per shift."""
        return len(self.row_cols)

    def combine(self, k: int, own: np.ndarray, inbox: Dict[int, np.ndarray]) -> np.ndarray:
        """(S_k v)(i) from the own value and the neighbor values."""
        out = np.zeros_like(own)
        for j, w in zip(self.row_cols, self.shift_rows[k]):
            out = out + w * (own if j == self.id else inbox[int(j)])
        return out


@dataclass
class RoundLedger:
    """Communication accounting; ``log`` keeps one entry per round."""

    rounds: int = 0
    messages: int = 0
    per_agent_max_messages: int = 0
    iteration: int = 0
    log: List[Dict[str, int]] = field(default_factory=list)

    def close_round(self, sent: Dict[int, int]):
        this_round = sum(sent.values())
        self.rounds += 1
        self.messages += this_round
        self.per_agent_max_messages = max(self.per_agent_max_messages, max(sent.values(), default=0))
        self.log.append({"round": self.rounds, "iteration": self.iteration, "messages_this_round": this_round})


class MessageBus:
    """
    One-hop delivery. A send along a non-edge is refused, and every
    delivery is recorded for auditing.
    """

    def __init__(self, graph: Graph, record: bool = True):
        self.graph = graph
        self.record = record
        self.deliveries: List[Tuple[int, int, int]] = []
        self._inbox: Dict[int, Dict[int, np.ndarray]] = {i: {} for i in range(graph.n)}
        self._round = 0

    def send(self, src: int, dst: int, value: np.ndarray):
        if (min(src, dst), max(src, dst)) not in self.graph.edges:
            raise InvalidInputError(f"Agent {src} tried to reach non-neighbor {dst}")
        self._inbox[dst][src] = np.array(value, copy=True)
        if self.record:
            self.deliveries.append((self._round, src, dst))

    def receive(self, dst: int) -> Dict[int, np.ndarray]:
        inbox, self._inbox[dst] = self._inbox[dst], {}
        return inbox

    def next_round(self):
        self._round += 1


class AgentNetwork:
    """
    Agents for a pair of filters H and C on the same shifts.

    The polynomial coefficient tables are global and O(1) in size; all
    agents read the same copy.
    """

    def __init__(self, H: FilterSpec, C: FilterSpec, y, record_deliveries: bool = True):
        check_same_shifts(H, C)
        y = np.asarray(y, dtype=float)
        if y.shape[0] != H.n or y.ndim > 2:
            raise DimensionMismatchError(f"Signal of shape {y.shape} for a network of {H.n} agents")
        self.vector_input = y.ndim == 1
        self.channels = 1 if y.ndim == 1 else y.shape[1]
        self.filters = {"H": H, "C": C}
        self.graph = _communication_graph(H)
        self.bus = MessageBus(self.graph, record_deliveries)
        self.ledger = RoundLedger()
        y2 = y.reshape(H.n, self.channels)
        matrices = [s.matrix for s in H.shifts]
        self.agents = []
        for i in range(H.n):
            nbrs = self.graph.neighbors(i)
            cols = np.sort(np.append(nbrs, i))
            rows = [np.asarray(S[i, cols].todense()).ravel() for S in matrices]
            self.agents.append(Agent(id=i, neighbors=nbrs, row_cols=cols, shift_rows=rows, local_y=y2[i].copy()))
        logger.info(f"Distributed {H.n} agents over {self.graph.num_edges} edges, d={H.dims}")

    @property
    def n(self) -> int:
        return len(self.agents)

    def scratch_registers(self) -> int:
        return max(len(a.registers) for a in self.agents)

    def gather(self, name: str) -> np.ndarray:
        """Collect one register from every agent (test-harness aggregation)."""
        out = np.stack([a.registers[name] for a in self.agents])
        return out[:, 0] if self.vector_input else out

    # ---------- primitives ----------

    def local(self, dst: str, fn):
        for a in self.agents:
            a.registers[dst] = fn(a)

    def shift_round(self, k: int, src: str, dst: str):
        """dst <- S_k src; one synchronous round."""
        sent = {}
        for a in self.agents:
            value = a.registers[src]
            for j in a.neighbors:
                self.bus.send(a.id, int(j), value)
            sent[a.id] = len(a.neighbors) * value.size
        for a in self.agents:
            a.registers[dst] = a.combine(k, a.registers[src], self.bus.receive(a.id))
        self.bus.next_round()
        self.ledger.close_round(sent)

    # ---------- Clenshaw schedule ----------

    def apply(self, which: str, src: str, out: str):
        F = self.filters[which]
        self._clenshaw(F, which, F.poly.coeffs, 0, src, out)

    def _clenshaw(self, F: FilterSpec, which: str, coeffs: np.ndarray, k: int, src: str, out: str):
        if k == F.dims:
            c = float(coeffs)
            self.local(out, lambda a: c * a.registers[src])
            return
        if not np.any(coeffs):
            self.local(out, lambda a: np.zeros_like(a.registers[src]))
            return
        deg = coeffs.shape[0] - 1
        if deg == 0:
            self._clenshaw(F, which, coeffs[0], k + 1, src, out)
            return
        mu, nu = F.poly.cube.intervals[k]
        b1, b2, tmp, sh = (f"{which}{k}.{r}" for r in ("b1", "b2", "tmp", "sh"))

        def rescaled(a):
            return (2.0 * a.registers[sh] - (nu + mu) * a.registers[b1]) / (nu - mu)

        self._clenshaw(F, which, coeffs[deg], k + 1, src, b1)
        self.local(b2, lambda a: np.zeros_like(a.registers[src]))
        for j in range(deg - 1, 0, -1):
            self._clenshaw(F, which, coeffs[j], k + 1, src, tmp)
            self.shift_round(k, b1, sh)
            for a in self.agents:
                new = a.registers[tmp] + 2.0 * rescaled(a) - a.registers[b2]
                a.registers[b2] = a.registers[b1]
                a.registers[b1] = new
        self._clenshaw(F, which, coeffs[0], k + 1, src, tmp)
        self.shift_round(k, b1, sh)
        self.local(out, lambda a: a.registers[tmp] + rescaled(a) - a.registers[b2])


def _communication_graph(F: FilterSpec) -> Graph:
    edges = frozenset().union(*(s.graph.edges for s in F.shifts))
    return Graph(n=F.n, edges=edges)


# ---------- operations ----------

def distribute(F_H: FilterSpec, F_C: FilterSpec, y, record_deliveries: bool = True) -> AgentNetwork:
    """Hand every agent its shift rows, y(i) and the coefficient tables of H and C."""
    return AgentNetwork(F_H, F_C, y, record_deliveries)


def sim_apply_filter(network: AgentNetwork, which: str, input_register: str = "y",
                     output_register: str = "out") -> Tuple[np.ndarray, RoundLedger]:
    """
    Run the Clenshaw schedule of H or C at the vertex level.

    ``input_register`` "y" reads each agent's local y(i). Returns the
    aggregated outputs and the network's ledger.
    """
    if which not in network.filters:
        raise InvalidInputError(f"Unknown filter '{which}', expected 'H' or 'C'")
    if input_register == "y":
        network.local("y", lambda a: a.local_y)
    network.apply(which, input_register, output_register)
    return network.gather(output_register), network.ledger


def sim_cipa(network: AgentNetwork, m: int, x0=None,
             trace: Optional[IterTrace] = None) -> Tuple[np.ndarray, RoundLedger]:
    """
    Per agent: e(i) <- (H x)(i) - y(i), then x(i) <- x(i) - (C e)(i), m times.

    The divergence guard reads the globally aggregated residual of every
    iterate x^(0), ..., x^(m), like the centralized solver. The residual of
    the last iterate is aggregated outside the round schedule. When
    ``trace`` is given it receives the residual norm of every iterate.
    """
    if m < 1:
        raise InvalidInputError(f"m must be at least 1, got {m}")
    network.local("y", lambda a: a.local_y)
    if x0 is None:
        network.local("x", lambda a: np.zeros_like(a.local_y))
    else:
        x0 = np.asarray(x0, dtype=float).reshape(network.n, network.channels)
        network.local("x", lambda a: x0[a.id].copy())
    guard = _ResidualGuard(trace)
    for it in range(1, m + 1):
        network.ledger.iteration = it
        network.apply("H", "x", "Hx")
        network.local("e", lambda a: a.registers["Hx"] - a.local_y)
        guard.check(network.gather("e"), it - 1)
        network.apply("C", "e", "Ce")
        network.local("x", lambda a: a.registers["x"] - a.registers["Ce"])
        logger.debug(f"[sim] iteration {it} rounds={network.ledger.rounds}")
    x = network.gather("x")
    y = network.gather("y")
    guard.check(apply_filter(network.filters["H"], x) - y, m)
    return x, network.ledger


def sim_cipa_trace(network: AgentNetwork, m: int, x0=None, ground_truth=None) -> IterTrace:
    """sim_cipa packaged as an IterTrace carrying the round and message counts."""
    trace = IterTrace(algorithm="cipa-distributed", M=network.filters["C"].poly.degrees[0])
    x, ledger = sim_cipa(network, m, x0=x0, trace=trace)
    trace.iterates.append(x)
    if ground_truth is not None:
        trace.rel_errors.append(relative_error(x, ground_truth))
    trace.rounds = ledger.rounds
    trace.messages = ledger.messages
    return trace


class _ResidualGuard:
    def __init__(self, trace: Optional[IterTrace]):
        self.trace = trace
        self.best = np.inf
        self.scale = None

    def check(self, residual: np.ndarray, it: int):
        total = float(np.linalg.norm(residual))
        if self.trace is not None:
            self.trace.residual_norms.append(total)
        if self.scale is None:
            self.scale = total
        if np.isfinite(total):
            self.best = min(self.best, total)
        if residual_blew_up(total, self.best, self.scale):
            raise DivergenceError(f"Distributed CIPA residual blew up at iteration {it}")


def audit_locality(network: AgentNetwork) -> bool:
    """True iff every recorded delivery travelled along an edge."""
    edges = network.graph.edges
    return all((min(s, d), max(s, d)) in edges for _, s, d in network.bus.deliveries)


def export_round_trace(ledger: RoundLedger, path) -> Path:
    path = Path(path)
    df = pd.DataFrame(ledger.log, columns=["round", "iteration", "messages_this_round"])
    df.to_csv(path, index=False)
    return path


def dump_agents(network: AgentNetwork, path) -> Path:
    """Per-agent state CSV for debugging; refused above the dump cap."""
    if network.n > AGENT_DUMP_CAP:
        raise SizeCapError(f"Agent dump capped at n={AGENT_DUMP_CAP}, got n={network.n}")
    path = Path(path)
    rows = []
    for a in network.agents:
        row = {
            "agent": a.id,
            "degree": len(a.neighbors),
            "stored_entries": a.stored_entries,
            "scratch_registers": len(a.registers),
        }
        for name in ("y", "x"):
            value = a.local_y if name == "y" else a.registers.get("x")
            if value is None:
                continue
            for ch, v in enumerate(np.atleast_1d(value)):
                row[name if network.channels == 1 else f"{name}_{ch}"] = v
        rows.append(row)
    pd.DataFrame(rows).to_csv(path, index=False, float_format="%.10g")
    return path
