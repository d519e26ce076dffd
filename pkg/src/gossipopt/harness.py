"""
Experiment configuration, the run loop, trace output and suite verification.

A config is a TOML file; every key is optional except the objectives and
the topology size::

    name = "pe-ring"
    algorithm = "pe"            # "pe" or "pb"
    rounds = "3"                # PB only: "R" or "adaptive:<target gap>"
    max_iters = 100000
    stop_v_ratio = 1e-8         # stop once V <= stop_v_ratio * V0
    tol_x = 1e-12
    skip_gap = 1e-14
    seed = 7
    trace_path = "trace.jsonl"  # omit for no trace
    summary_path = "summary.json"
    record_estimates = true     # default: only when N <= 16
    window = 500                # connectivity window, default 50 N

    [objectives]
    specs = ["quadratic:0.0,0.0", "exp-plus-linear:1.0,3.0"]

    [topology]
    n_nodes = 2
    shape = "ring"              # or mode = "static"/"periodic"/"scripted"
                                # with edges = [[1, 2]] / edge_sets = [...]
    [scheduler]
    kind = "uniform-random-edge"  # round-robin | scripted | clique-partition
    pairs = [[1, 2]]              # scripted
    groups = [[1], [2]]           # clique-partition

    [verify]
    expect = "converge"         # "converge", "stall" or "none"
    check_determinism = true
"""

from __future__ import annotations

import json
import os
import tempfile
import time
from dataclasses import asdict, dataclass, replace
from pathlib import Path

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from .diagnostics import (
    DiagnosticsRow,
    conservation_residual,
    drift_budget,
    lyapunov,
    predicted_drop_pe,
)
from .engines import DEFAULT_SKIP_GAP, RoundsPolicy, init_state, pb_step, pe_step, select_rounds
from .errors import (
    ConfigInvalid,
    DomainViolation,
    GossipError,
    InvariantViolation,
    NumericalFailure,
    ScheduleExhausted,
)
from .network import Scheduler, SchedulerSpec, TopologySpec, window_connected
from .objective import parse_spec
from .rootfind import DEFAULT_TOL_X, solve_global_optimum

__all__ = [
    "ExperimentConfig",
    "RunSummary",
    "Simulation",
    "StepRecord",
    "load_config",
    "config_from_dict",
    "run_experiment",
    "compare_algorithms",
    "check_run",
    "verify_suite",
    "detect_plateau",
    "EXIT_OK",
    "EXIT_CONFIG",
    "EXIT_INVARIANT",
    "EXIT_NUMERICAL",
]

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_INVARIANT = 3
EXIT_NUMERICAL = 4

ORACLE_TOL = 1e-13
V_SLACK = 1e-9
DROP_REL_TOL = 1e-9
PLATEAU_STEPS = 100
PLATEAU_TOL = 1e-15
STALL_FLOOR = 1e-3
RECORD_ESTIMATES_MAX_N = 16


@dataclass(frozen=True)
class ExperimentConfig:
    specs: tuple
    topology: TopologySpec
    scheduler: SchedulerSpec
    algorithm: str = "pe"
    rounds: RoundsPolicy = RoundsPolicy("fixed", 1)
    max_iters: int = 100_000
    stop_v_ratio: float = 1e-8
    tol_x: float = DEFAULT_TOL_X
    skip_gap: float = DEFAULT_SKIP_GAP
    seed: int = 0
    trace_path: str = None
    summary_path: str = None
    record_estimates: bool = None
    window: int = None
    name: str = "experiment"
    expect: str = "none"
    check_determinism: bool = False

    def __post_init__(self):
        if self.algorithm not in ("pe", "pb"):
            raise ConfigInvalid(f"algorithm must be 'pe' or 'pb', got {self.algorithm!r}")
        if self.max_iters < 1:
            raise ConfigInvalid(f"max_iters must be >= 1, got {self.max_iters}")
        if not 0 <= self.stop_v_ratio < 1:
            raise ConfigInvalid(f"stop_v_ratio must lie in [0, 1), got {self.stop_v_ratio}")
        if not self.tol_x > 0:
            raise ConfigInvalid(f"tol_x must be positive, got {self.tol_x}")
        if len(self.specs) != self.topology.n_nodes:
            raise ConfigInvalid(f"{len(self.specs)} objectives for {self.topology.n_nodes} nodes")
        if self.expect not in ("none", "converge", "stall"):
            raise ConfigInvalid(f"expect must be none, converge or stall, got {self.expect!r}")
        if self.window is not None and self.window < 1:
            raise ConfigInvalid("window must be >= 1")
        if self.scheduler.seed != (self.seed & ((1 << 64) - 1)):
            object.__setattr__(self, "scheduler", replace(self.scheduler, seed=self.seed))

    @property
    def n_nodes(self):
        return self.topology.n_nodes

    @property
    def effective_window(self):
        return self.window if self.window is not None else 50 * self.n_nodes

    @property
    def records_estimates(self):
        if self.record_estimates is None:
            return self.n_nodes <= RECORD_ESTIMATES_MAX_N
        return self.record_estimates


def _topology_from(section):
    if "n_nodes" not in section:
        raise ConfigInvalid("[topology] needs n_nodes")
    n = int(section["n_nodes"])
    shape = section.get("shape")
    if shape is not None:
        builders = {"ring": TopologySpec.ring, "path": TopologySpec.path, "complete": TopologySpec.complete}
        if shape not in builders:
            raise ConfigInvalid(f"unknown topology shape {shape!r}")
        return builders[shape](n)
    mode = section.get("mode", "static")
    if mode == "static":
        if "edges" not in section:
            raise ConfigInvalid("static topology needs edges or shape")
        return TopologySpec.static(n, [tuple(e) for e in section["edges"]])
    sets = section.get("edge_sets")
    if not sets:
        raise ConfigInvalid(f"{mode} topology needs edge_sets")
    return TopologySpec(n, mode, tuple(tuple(tuple(e) for e in es) for es in sets))


_TOP_KEYS = {
    "name", "algorithm", "rounds", "max_iters", "stop_v_ratio", "tol_x", "skip_gap", "seed",
    "trace_path", "summary_path", "record_estimates", "window",
    "objectives", "topology", "scheduler", "verify",
}


def config_from_dict(data, base_dir=None):
    """Build an :class:`ExperimentConfig` from parsed TOML data.

    Relative ``trace_path``/``summary_path`` values are resolved against
    ``base_dir`` when given.
    """
    unknown = set(data) - _TOP_KEYS
    if unknown:
        raise ConfigInvalid(f"unknown config keys {sorted(unknown)}")
    try:
        obj = data.get("objectives", {})
        strict = not obj.get("allow_nonconvex", False)
        if "specs" not in obj:
            raise ConfigInvalid("[objectives] needs specs")
        specs = tuple(parse_spec(s, strict=strict) for s in obj["specs"])
        topology = _topology_from(data.get("topology", {}))
        sched = data.get("scheduler", {})
        seed = int(data.get("seed", 0))
        scheduler = SchedulerSpec(
            kind=sched.get("kind", "uniform-random-edge"),
            seed=seed,
            pairs=tuple(tuple(p) for p in sched.get("pairs", ())),
            groups=tuple(tuple(g) for g in sched.get("groups", ())),
        )
        verify = data.get("verify", {})

        def path(key):
            value = data.get(key)
            if value is None:
                return None
            if base_dir is not None and not os.path.isabs(value):
                return str(Path(base_dir) / value)
            return value

        return ExperimentConfig(
            specs=specs,
            topology=topology,
            scheduler=scheduler,
            algorithm=data.get("algorithm", "pe"),
            rounds=RoundsPolicy.parse(data.get("rounds", "1")),
            max_iters=int(data.get("max_iters", 100_000)),
            stop_v_ratio=float(data.get("stop_v_ratio", 1e-8)),
            tol_x=float(data.get("tol_x", DEFAULT_TOL_X)),
            skip_gap=float(data.get("skip_gap", DEFAULT_SKIP_GAP)),
            seed=seed,
            trace_path=path("trace_path"),
            summary_path=path("summary_path"),
            record_estimates=data.get("record_estimates"),
            window=data.get("window"),
            name=data.get("name", "experiment"),
            expect=verify.get("expect", "none"),
            check_determinism=bool(verify.get("check_determinism", False)),
        )
    except (TypeError, ValueError, KeyError) as exc:
        if isinstance(exc, ConfigInvalid):
            raise
        raise ConfigInvalid(f"malformed config: {exc}") from exc


def load_config(path):
    """Read a TOML experiment config."""
    path = Path(path)
    try:
        with open(path, "rb") as fh:
            data = tomllib.load(fh)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigInvalid(f"{path}: {exc}") from exc
    except OSError as exc:
        raise ConfigInvalid(f"cannot read config {path}: {exc}") from exc
    cfg = config_from_dict(data)
    if cfg.name == "experiment":
        cfg = replace(cfg, name=path.stem)
    return cfg


@dataclass
class RunSummary:
    iters_run: int
    final_V: float
    V0: float
    residual_final: float
    tx_reals: int
    tx_functions: int
    tx_tokens: int
    converged: bool
    wall_time: float
    x_star: float = None
    max_abs_error: float = None
    n_skipped: int = 0

    def to_json(self):
        return json.dumps(asdict(self), indent=2, sort_keys=True, allow_nan=False)


@dataclass
class StepRecord:
    """What one iteration produced: the states around it, its trace row and PB transcript."""

    before: object
    after: object
    pair: tuple
    row: DiagnosticsRow
    transcript: object = None


class Simulation:
    """
    Step-by-step driver wiring objectives, scheduler, engine and diagnostics.

    The engine only ever sees the state and the pair; ``x_star`` and V are
    computed on the side from snapshots.
    """

    def __init__(self, config):
        self.config = config
        self.state = init_state(config.specs)
        self.scheduler = Scheduler(config.scheduler, config.topology)
        self.x_star = solve_global_optimum(config.specs, tol_x=ORACLE_TOL)
        self.V0 = lyapunov(self.state.estimates, config.specs, self.x_star)
        self.V = self.V0
        self.residual0 = conservation_residual(self.state.estimates, config.specs)

    @property
    def k(self):
        return self.state.k

    def step(self):
        cfg = self.config
        before = self.state
        pair = self.scheduler.next_pair(before.k + 1)
        i, j = pair
        xi, xj = before.estimates[i - 1], before.estimates[j - 1]
        transcript = None
        rounds = None
        try:
            if cfg.algorithm == "pe":
                after = pe_step(before, pair, cfg.tol_x, cfg.skip_gap)
            else:
                rounds = select_rounds(cfg.rounds, abs(xi - xj))
                after, transcript = pb_step(before, pair, rounds, cfg.tol_x, cfg.skip_gap)
        except (NumericalFailure, DomainViolation) as exc:
            raise type(exc)(f"{exc} [at k={before.k + 1}, pair={pair}]") from exc
        skipped = after.n_skipped != before.n_skipped
        V = lyapunov(after.estimates, cfg.specs, self.x_star)
        dV_pred = None
        if cfg.algorithm == "pe":
            dV_pred = predicted_drop_pe(before.estimates, pair, after.estimates, cfg.specs)
        row = DiagnosticsRow(
            k=after.k,
            pair=[i, j],
            V=V,
            dV_observed=V - self.V,
            dV_predicted=dV_pred,
            residual=conservation_residual(after.estimates, cfg.specs),
            envelope=list(after.envelope()),
            gap_before=abs(xi - xj),
            gap_after=abs(after.estimates[i - 1] - after.estimates[j - 1]),
            skipped=skipped,
            rounds=None if transcript is None or skipped else rounds,
            tx_reals=after.tx_reals,
            tx_functions=after.tx_functions,
            tx_tokens=after.tx_tokens,
            estimates=list(after.estimates) if cfg.records_estimates else None,
        )
        self.state = after
        self.V = V
        return StepRecord(before, after, pair, row, transcript)

    def converged(self):
        return self.V <= self.config.stop_v_ratio * self.V0

    def summary(self, wall_time):
        st = self.state
        return RunSummary(
            iters_run=st.k,
            final_V=self.V,
            V0=self.V0,
            residual_final=conservation_residual(st.estimates, self.config.specs),
            tx_reals=st.tx_reals,
            tx_functions=st.tx_functions,
            tx_tokens=st.tx_tokens,
            converged=self.converged(),
            wall_time=wall_time,
            x_star=self.x_star,
            max_abs_error=max(abs(x - self.x_star) for x in st.estimates),
            n_skipped=st.n_skipped,
        )


def _open_trace(path):
    if path is None:
        return None
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    return open(path, "w", encoding="utf-8", newline="\n")


def _iterate(config, on_step=None):
    sim = Simulation(config)
    t0 = time.perf_counter()
    trace = _open_trace(config.trace_path)
    try:
        while not sim.converged() and sim.k < config.max_iters:
            rec = sim.step()
            if trace is not None:
                trace.write(rec.row.to_json() + "\n")
            if on_step is not None:
                on_step(sim, rec)
    finally:
        if trace is not None:
            trace.close()
    summary = sim.summary(time.perf_counter() - t0)
    if config.summary_path is not None:
        Path(config.summary_path).parent.mkdir(parents=True, exist_ok=True)
        with open(config.summary_path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(summary.to_json() + "\n")
    return sim, summary


def run_experiment(config):
    """
    Initialise, then iterate until ``V <= stop_v_ratio * V0`` or ``max_iters``.

    One :class:`DiagnosticsRow` per iteration goes to ``config.trace_path``
    (JSON Lines) and the :class:`RunSummary` to ``config.summary_path``.
    Traces are byte-identical for equal configs and seeds.
    """
    return _iterate(config)[1]


def compare_algorithms(config, rounds_values):
    """
    PE and PB(R) for each R on the same gossip sequence.

    Returns a list of dicts with keys ``algorithm``, ``rounds``,
    ``iterations``, ``converged``, ``tx_reals``, ``tx_functions``,
    ``tx_tokens``, ``reals_per_iteration`` and ``transcripts_ok`` (every PB
    transcript carried ``3+R`` or ``4+R`` real numbers and ``R`` tokens).
    """
    base = replace(config, trace_path=None, summary_path=None)
    variants = [("pe", None)] + [("pb", int(r)) for r in rounds_values]
    rows = []
    for algo, R in variants:
        cfg = replace(base, algorithm=algo, rounds=RoundsPolicy.fixed(R) if R else base.rounds)
        bad = []

        def on_step(sim, rec, R=R, bad=bad):
            tr = rec.transcript
            if tr is not None and not tr.skipped:
                if tr.real_message_count not in (3 + tr.rounds, 4 + tr.rounds) or tr.token_count != tr.rounds:
                    bad.append(rec.row.k)

        _, summary = _iterate(cfg, on_step)
        active = summary.iters_run - summary.n_skipped
        rows.append({
            "algorithm": algo,
            "rounds": R,
            "iterations": summary.iters_run,
            "converged": summary.converged,
            "tx_reals": summary.tx_reals,
            "tx_functions": summary.tx_functions,
            "tx_tokens": summary.tx_tokens,
            "reals_per_iteration": summary.tx_reals / active if active else 0.0,
            "transcripts_ok": not bad,
        })
    return rows


def detect_plateau(values, steps=PLATEAU_STEPS, tol=PLATEAU_TOL):
    """True iff the last ``steps + 1`` values of a series vary by less than ``tol``."""
    if len(values) <= steps:
        return False
    tail = values[-(steps + 1):]
    return max(tail) - min(tail) < tol


class _Checker:
    """Per-step invariant checks for :func:`check_run`."""

    def __init__(self, sim):
        cfg = sim.config
        self.cfg = cfg
        lo, hi = sim.state.envelope()
        self.budget = drift_budget(cfg.specs, lo, hi, cfg.tol_x)
        self.residual0 = abs(sim.residual0)
        self.V_history = [sim.V0]
        self.slack = 4.0 * cfg.tol_x
        n = cfg.n_nodes
        self.max_functions = n * (n - 1)

    def __call__(self, sim, rec):
        cfg, row, k = self.cfg, rec.row, rec.row.k
        before, after = rec.before.estimates, rec.after.estimates
        i, j = rec.pair
        for f in cfg.specs:
            for x in (after[i - 1], after[j - 1]):
                if not f.contains(x):
                    raise InvariantViolation("estimate-in-domain", f"{x!r} outside {f.domain}", k)
        for m, (x0, x1) in enumerate(zip(before, after), start=1):
            if m not in (i, j) and x0 != x1:
                raise InvariantViolation("idle-nodes-unchanged", f"node {m} moved", k)
        lo0, hi0 = min(before), max(before)
        lo1, hi1 = row.envelope
        if lo1 < lo0 - self.slack or hi1 > hi0 + self.slack:
            raise InvariantViolation("envelope-nesting", f"[{lo1}, {hi1}] not in [{lo0}, {hi0}]", k)
        if row.dV_observed > V_SLACK:
            raise InvariantViolation("lyapunov-non-increasing", f"dV={row.dV_observed!r}", k)
        bound = self.residual0 + k * self.budget + 1e-12
        if abs(row.residual) > bound:
            raise InvariantViolation("conservation", f"|residual|={abs(row.residual)!r} > {bound!r}", k)
        pair_lo, pair_hi = min(before[i - 1], before[j - 1]), max(before[i - 1], before[j - 1])
        if cfg.algorithm == "pe":
            if abs(row.dV_observed - row.dV_predicted) > DROP_REL_TOL * (1.0 + row.V):
                raise InvariantViolation(
                    "drop-identity", f"observed {row.dV_observed!r} vs predicted {row.dV_predicted!r}", k)
            if not row.skipped and not (pair_lo <= after[i - 1] <= pair_hi and after[i - 1] == after[j - 1]):
                raise InvariantViolation("pe-equalized-in-range", f"{after[i - 1]!r}, {after[j - 1]!r}", k)
            if row.tx_functions > self.max_functions:
                raise InvariantViolation("pe-function-shares", f"{row.tx_functions} > {self.max_functions}", k)
            expected_reals = rec.before.tx_reals + (0 if row.skipped else 2)
            if row.tx_reals != expected_reals:
                raise InvariantViolation("pe-message-count", f"tx_reals {row.tx_reals} != {expected_reals}", k)
        else:
            tr = rec.transcript
            if not row.skipped:
                R = tr.rounds
                if row.gap_after > 2.0 ** -R * row.gap_before + self.slack:
                    raise InvariantViolation(
                        "pb-gap-contraction", f"{row.gap_after!r} > 2^-{R} * {row.gap_before!r}", k)
                lo_node, hi_node = (i, j) if before[i - 1] <= before[j - 1] else (j, i)
                if after[lo_node - 1] > after[hi_node - 1] + self.slack:
                    raise InvariantViolation("pb-order-preserved", "pair order flipped", k)
                if tr.real_message_count not in (3 + R, 4 + R) or tr.token_count != R:
                    raise InvariantViolation(
                        "pb-message-count", f"{tr.real_message_count} reals, {tr.token_count} tokens, R={R}", k)
            if row.tx_functions != 0:
                raise InvariantViolation("pb-no-function-shares", f"tx_functions={row.tx_functions}", k)
        self.V_history.append(row.V)


def check_run(config, tmp_dir=None):
    """
    Run ``config`` with every per-step invariant checked.

    Returns the :class:`RunSummary`. Raises :class:`InvariantViolation`
    naming the first failed invariant, or propagates a numerical failure.
    ``tmp_dir``, when given, receives the trace so that completeness,
    stop-rule soundness and (if requested) determinism can be checked.
    """
    if tmp_dir is not None:
        tmp_dir = Path(tmp_dir)
        config = replace(config, trace_path=str(tmp_dir / f"{config.name}.jsonl"), summary_path=None)
    checker = {}

    def on_step(sim, rec):
        if "c" not in checker:
            checker["c"] = _Checker(sim)
        checker["c"](sim, rec)

    sim, summary = _iterate(config, on_step)
    V_hist = checker["c"].V_history if checker else [sim.V0]

    if config.trace_path is not None:
        with open(config.trace_path, encoding="utf-8") as fh:
            rows = [DiagnosticsRow.from_json(line) for line in fh]
        if len(rows) != summary.iters_run:
            raise InvariantViolation("trace-complete", f"{len(rows)} rows for {summary.iters_run} iterations")
        if summary.converged:
            final = rows[-1].V if rows else summary.V0
            if not final <= config.stop_v_ratio * summary.V0:
                raise InvariantViolation("stop-rule", f"trace V {final!r} above threshold")
        if config.check_determinism:
            first = Path(config.trace_path).read_bytes()
            again = replace(config, trace_path=str(Path(config.trace_path).with_suffix(".rerun.jsonl")))
            _iterate(again)
            if Path(again.trace_path).read_bytes() != first:
                raise InvariantViolation("determinism", "re-run produced a different trace")

    if config.expect == "converge" and not summary.converged:
        raise InvariantViolation(
            "expected-convergence",
            f"V={summary.final_V!r} > {config.stop_v_ratio} * V0 after {summary.iters_run} iterations")
    if config.expect == "stall":
        if summary.converged:
            raise InvariantViolation("expected-stall", "run converged")
        if not detect_plateau(V_hist):
            raise InvariantViolation("expected-stall", "V has not plateaued")
        if not summary.final_V > STALL_FLOOR * summary.V0:
            raise InvariantViolation("expected-stall", f"plateau {summary.final_V!r} is not above 1e-3 V0")
        if window_connected(sim.scheduler.history, config.effective_window, config.n_nodes):
            raise InvariantViolation("expected-stall", "gossip pattern is window-connected")
    return summary


def verify_suite(suite_dir, work_dir=None):
    """
    Check every ``*.toml`` config in ``suite_dir``.

    Returns ``(exit_code, report)``: ``report`` is a JSON-serialisable dict
    with one entry per config and, on failure, the first failing config and
    invariant. Exit code 0 when every config passes, 2 for a config error
    (including a scripted schedule that runs out), 3 for an invariant
    violation, 4 for a numerical failure; the code of the first failure
    wins.
    """
    suite_dir = Path(suite_dir)
    paths = sorted(suite_dir.glob("*.toml"))
    report = {"suite": str(suite_dir), "results": [], "first_failure": None}
    if not paths:
        report["first_failure"] = {"config": None, "invariant": "suite-nonempty", "message": "no *.toml configs"}
        return EXIT_CONFIG, report
    exit_code = EXIT_OK
    with tempfile.TemporaryDirectory(dir=work_dir) as tmp:
        for path in paths:
            entry = {"config": path.name}
            try:
                cfg = load_config(path)
                summary = check_run(cfg, tmp)
                entry.update(status="pass", expect=cfg.expect, iters_run=summary.iters_run,
                             final_V=summary.final_V, V0=summary.V0, converged=summary.converged)
            except ConfigInvalid as exc:
                entry.update(status="fail", code=EXIT_CONFIG, invariant="config", error=type(exc).__name__,
                             message=str(exc))
            except InvariantViolation as exc:
                entry.update(status="fail", code=EXIT_INVARIANT, invariant=exc.invariant, k=exc.k,
                             message=str(exc))
            except ScheduleExhausted as exc:
                entry.update(status="fail", code=EXIT_CONFIG, invariant="schedule", error=type(exc).__name__,
                             message=str(exc))
            except (NumericalFailure, DomainViolation) as exc:
                entry.update(status="fail", code=EXIT_NUMERICAL, invariant="numerical", error=type(exc).__name__,
                             message=str(exc))
            except GossipError as exc:
                entry.update(status="fail", code=EXIT_NUMERICAL, invariant="error", error=type(exc).__name__,
                             message=str(exc))
            report["results"].append(entry)
            if entry["status"] == "fail" and exit_code == EXIT_OK:
                exit_code = entry["code"]
                report["first_failure"] = {k: entry[k] for k in ("config", "invariant", "message")}
                if "error" in entry:
                    report["first_failure"]["error"] = entry["error"]
    return exit_code, report
