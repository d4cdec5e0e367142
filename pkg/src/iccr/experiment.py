"""Monitored brick-wall Clifford circuits run through ICCR.

Each trajectory starts from ``(cos(theta)|0> + sin(theta)|1>)^N``.  A layer
composes uniformly random two-qubit Cliffords on alternating bonds, then every
site is measured with probability ``p`` (ascending site order), then T gates
are optionally injected.  Observables are read off the renormalized product
state, which is legitimate because the accumulated circuit is Clifford.

Trajectory ``k`` draws from ``SeedSequence(seed, spawn_key=(k,))`` so results
do not depend on how trajectories are distributed over workers.
"""
from __future__ import annotations

import dataclasses
import json
import math
import multiprocessing
from dataclasses import dataclass, field
from typing import IO

import numpy as np

from .clifford_group import GROUP_ORDER
from .core import BORN, VariationalConfig, iccr_step
from .gadget import inject_t_gate
from .magic import _sre_from_bloch
from .product_state import ProductState, initial_angle_state
from .tableau import CliffordTableau, GateRecord


class ConfigError(ValueError):
    """Invalid experiment configuration."""


@dataclass(frozen=True)
class ExperimentConfig:
    n_qubits: int = 16
    depth: int = 32
    meas_rate: float = 0.1
    n_trajectories: int = 1
    seed: int = 0
    boundary: str = "ring"
    initial_angle: float = math.pi / 7
    sre_orders: tuple = (1, 2, 3)
    t_gate_rate: float = 0.0
    output_path: str | None = None
    record_every: int = 1

    def __post_init__(self):
        if self.n_qubits < 1:
            raise ConfigError("n_qubits must be positive")
        if self.depth < 1:
            raise ConfigError("depth must be at least 1")
        if not 0 <= self.meas_rate <= 1:
            raise ConfigError("meas_rate must lie in [0, 1]")
        if not 0 <= self.t_gate_rate <= 1:
            raise ConfigError("t_gate_rate must lie in [0, 1]")
        if self.n_trajectories < 1:
            raise ConfigError("n_trajectories must be positive")
        if self.boundary not in ("ring", "open"):
            raise ConfigError("boundary must be 'ring' or 'open'")
        if self.record_every < 1:
            raise ConfigError("record_every must be positive")
        if not self.sre_orders or any(n <= 0 for n in self.sre_orders):
            raise ConfigError("sre_orders must be positive")
        if not 0 <= self.seed < 2 ** 64:
            raise ConfigError("seed must be a 64-bit unsigned integer")

    def replace(self, **changes) -> ExperimentConfig:
        return dataclasses.replace(self, **changes)

    @classmethod
    def from_mapping(cls, values: dict) -> ExperimentConfig:
        names = {f.name: f for f in dataclasses.fields(cls)}
        kwargs = {}
        for key, raw in values.items():
            if key not in names:
                raise ConfigError(f"unknown config key {key!r}")
            kwargs[key] = _coerce(key, raw)
        try:
            return cls(**kwargs)
        except TypeError as exc:
            raise ConfigError(str(exc)) from exc

    @classmethod
    def from_file(cls, path: str, overrides: dict | None = None) -> ExperimentConfig:
        try:
            with open(path, encoding="utf-8") as fh:
                text = fh.read()
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        values = parse_config_text(text)
        values.update(overrides or {})
        return cls.from_mapping(values)


_INT_KEYS = {"n_qubits", "depth", "n_trajectories", "seed", "record_every"}
_FLOAT_KEYS = {"meas_rate", "initial_angle", "t_gate_rate"}


def _coerce(key, raw):
    if not isinstance(raw, str):
        return tuple(raw) if key == "sre_orders" else raw
    raw = raw.strip()
    try:
        if key in _INT_KEYS:
            return int(raw, 0)
        if key in _FLOAT_KEYS:
            return float(raw)
        if key == "sre_orders":
            return tuple(float(v) if "." in v else int(v) for v in raw.replace(" ", "").split(",") if v)
    except ValueError as exc:
        raise ConfigError(f"bad value for {key}: {raw!r}") from exc
    if key == "output_path":
        return raw or None
    return raw


def parse_config_text(text: str) -> dict:
    """Flat ``key = value`` lines; ``#`` starts a comment."""
    values = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected key = value")
        key, value = (part.strip() for part in line.split("=", 1))
        values[key] = value
    return values


def brick_pairs(n: int, layer: int, boundary: str = "ring") -> list[tuple[int, int]]:
    """Bonds of layer ``layer`` (1-based): odd layers start at site 0."""
    if n < 2:
        return []
    start = 0 if layer % 2 == 1 else 1
    pairs = [(i, i + 1) for i in range(start, n - 1, 2)]
    if start == 1 and boundary == "ring" and n % 2 == 0 and n > 2:
        pairs.append((n - 1, 0))
    return pairs


def trajectory_rng(seed: int, index: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(index,)))


@dataclass
class TrajectoryResult:
    times: list = field(default_factory=list)
    rows: list = field(default_factory=list)  # dicts of observables

    def column(self, name) -> np.ndarray:
        return np.array([r[name] for r in self.rows])


class Trajectory:
    """One circuit realization advanced layer by layer."""

    def __init__(self, cfg: ExperimentConfig, index: int = 0, keep_log: bool = False,
                 log_sink: IO | None = None, variational: VariationalConfig = VariationalConfig()):
        self.cfg = cfg
        self.index = index
        self.rng = trajectory_rng(cfg.seed, index)
        self.state = ProductState.uniform(cfg.n_qubits, initial_angle_state(cfg.initial_angle))
        self.u = CliffordTableau.identity(cfg.n_qubits, keep_log=keep_log)
        self.t = 0
        self.ln_fidelity = 0.0
        self.n_meas = 0
        self.log_sink = log_sink
        self.variational = variational

    def draw_layer(self) -> list[GateRecord]:
        pairs = brick_pairs(self.cfg.n_qubits, self.t + 1, self.cfg.boundary)
        idx = self.rng.integers(GROUP_ORDER, size=len(pairs))
        return [GateRecord("C2", p, int(i)) for p, i in zip(pairs, idx)]

    def observables(self) -> dict:
        n = self.cfg.n_qubits
        bloch = self.state.bloch()
        magic = self.state.classes < 0
        row = {}
        for order in self.cfg.sre_orders:
            vals = _sre_from_bloch(bloch[magic], order) if magic.any() else np.zeros(0)
            row[_order_name(order)] = float(vals.sum()) / n
        row["nullity_density"] = self.state.nullity / n
        row["lnF"] = self.ln_fidelity
        row["n_meas"] = self.n_meas
        return row

    def _log(self, kind, report):
        if self.log_sink is not None:
            rec = json.loads(report.to_json())
            rec.update(trajectory=self.index, t=self.t, event=kind)
            self.log_sink.write(json.dumps(rec, sort_keys=True) + "\n")

    def advance(self, record=None, before_event=None):
        """Run one layer; returns ``(gates, events)`` for co-simulation.

        ``events`` lists ``("measure" | "t_gate", site, report)`` in order.
        ``record(self)`` is called after the unitaries, before any
        measurement; ``before_event(self, kind, site)`` before every step.
        """
        cfg = self.cfg
        gates = self.draw_layer()
        self.u.compose_layer(gates)
        self.t += 1
        if record is not None:
            record(self)
        events = []
        if cfg.meas_rate > 0:
            for j in np.flatnonzero(self.rng.random(cfg.n_qubits) < cfg.meas_rate):
                if before_event is not None:
                    before_event(self, "measure", int(j))
                _, _, rep = iccr_step(self.state, self.u, int(j), BORN, self.rng, self.variational)
                self.ln_fidelity += rep.ln_fidelity
                self.n_meas += 1
                events.append(("measure", int(j), rep))
                self._log("measure", rep)
        if cfg.t_gate_rate > 0:
            for j in np.flatnonzero(self.rng.random(cfg.n_qubits) < cfg.t_gate_rate):
                if before_event is not None:
                    before_event(self, "t_gate", int(j))
                self.state, self.u, rep = inject_t_gate(self.state, self.u, int(j), self.rng,
                                                        self.variational)
                self.ln_fidelity += rep.ln_fidelity
                events.append(("t_gate", int(j), rep))
                self._log("t_gate", rep)
        return gates, events


def _order_name(order) -> str:
    return f"m{order:g}"


def _should_record(cfg: ExperimentConfig, t: int) -> bool:
    return t % cfg.record_every == 0 or t == cfg.depth


def run_trajectory(cfg: ExperimentConfig, traj_index: int = 0, log_sink: IO | None = None) -> TrajectoryResult:
    traj = Trajectory(cfg, traj_index, log_sink=log_sink)
    result = TrajectoryResult()

    def record(tr):
        if _should_record(cfg, tr.t):
            result.times.append(tr.t)
            result.rows.append(tr.observables())

    result.times.append(0)
    result.rows.append(traj.observables())
    for _ in range(cfg.depth):
        traj.advance(record)
    return result


def _worker(args):
    cfg, index = args
    return run_trajectory(cfg, index)


def column_names(cfg: ExperimentConfig) -> list[str]:
    return [_order_name(n) for n in cfg.sre_orders] + ["nullity_density", "lnF", "n_meas"]


@dataclass
class AggregateTable:
    times: list
    mean: dict
    stderr: dict
    n_trajectories: int
    names: list

    def to_csv(self) -> str:
        header = ["t"]
        for name in self.names:
            if name == "n_meas":
                header.append(name)
            elif name == "nullity_density":
                header += [name, "nullity_err"]
            else:
                header += [name, f"{name}_err"]
        lines = [",".join(header)]
        for k, t in enumerate(self.times):
            cells = [str(t)]
            for name in self.names:
                cells.append(_fmt(self.mean[name][k]))
                if name != "n_meas":
                    cells.append(_fmt(self.stderr[name][k]))
            lines.append(",".join(cells))
        return "\n".join(lines) + "\n"

    def write(self, path: str) -> None:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(self.to_csv())


def _fmt(v: float) -> str:
    return f"{v:.12g}"


def aggregate(cfg: ExperimentConfig, results: list[TrajectoryResult]) -> AggregateTable:
    names = column_names(cfg)
    times = results[0].times
    mean, stderr = {}, {}
    k = len(results)
    for name in names:
        data = np.array([r.column(name) for r in results], dtype=float)
        mean[name] = data.mean(axis=0)
        stderr[name] = data.std(axis=0, ddof=1) / math.sqrt(k) if k > 1 else np.zeros(len(times))
    return AggregateTable(list(times), mean, stderr, k, names)


def run_experiment(cfg: ExperimentConfig, workers: int = 1, log_sink: IO | None = None) -> AggregateTable:
    """Run all trajectories and reduce them in trajectory order."""
    jobs = [(cfg, i) for i in range(cfg.n_trajectories)]
    if workers > 1 and log_sink is None and cfg.n_trajectories > 1:
        ctx = multiprocessing.get_context("spawn")
        with ctx.Pool(min(workers, cfg.n_trajectories)) as pool:
            results = pool.map(_worker, jobs, chunksize=1)
    else:
        results = [run_trajectory(cfg, i, log_sink) for _, i in jobs]
    table = aggregate(cfg, results)
    if cfg.output_path:
        table.write(cfg.output_path)
    return table
