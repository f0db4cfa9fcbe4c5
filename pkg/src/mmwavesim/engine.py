"""TTI-stepped simulation of one mmWave cell.

Each TTI executes, in order: packet arrivals, UE movement (every
`move_interval_ttis` TTIs, or from a position trace), clustering of the
positions the base station believes in, beam formation from the cluster
centroids, per-beam RBG scheduling by the DQN agents, queue service
with the allocated rate, agent training/target sync at their intervals,
and metric emission. Coverage is always evaluated against the TRUE
positions; scheduling and beam pointing only ever see the reported
ones, which is what makes localization error costly.

Scenarios differ only in what the clustering step consumes:
exact clustering of true positions, plain clustering of the distorted
reported positions, or expected-distance clustering of the reported
uncertainty PDFs.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional

import numpy as np

from .agent import AgentConfig, DqnAgent, ExperienceTuple, UserClass, encode_state, reward
from .beams import AntennaConfig, coverage_rate, form_beams, rbg_rate, sinr_to_cqi, compute_sinr
from .clustering import ClusteringConfig, InitStrategy, run_clustering
from .errors import ConfigError
from .geometry import Point2D, SampleBased, UncertainPoint, UniformDisk, expected_position
from .seeding import derive_seed, make_rng
from .stats import confidence_interval
from .traffic import PacketQueue, TrafficConfig, generate_arrivals

__all__ = [
    "Scenario",
    "UserEquipment",
    "ScenarioConfig",
    "TtiRecord",
    "RunSummary",
    "RunReport",
    "inject_error",
    "uniform_disk_point",
    "reported_center",
    "load_position_trace",
    "ScenarioRun",
    "run_scenario",
    "mean_coverage",
    "write_per_tti_csv",
    "write_summary_csv",
    "SUMMARY_METRICS",
]

SUMMARY_METRICS = ("coverage_rate", "sum_rate_bps", "mean_delay_ttis")


class Scenario(Enum):
    KMEANS_ERROR = "kmeans_error"
    UKMEANS_ERROR = "ukmeans_error"
    KMEANS_EXACT = "kmeans_exact"


@dataclass
class UserEquipment:
    id: int
    klass: UserClass
    true_position: Point2D
    reported: UncertainPoint
    reported_center: Point2D
    queue: PacketQueue
    traffic: TrafficConfig


@dataclass(frozen=True)
class ScenarioConfig:
    scenario: Scenario = Scenario.KMEANS_ERROR
    n_ues: int = 6
    n_clusters: int = 3
    n_beams: int = 3
    beam_width_deg: float = 20.0
    cell_radius_m: float = 160.0
    error_rmse_m: float = 8.0
    informative_pdf: bool = False
    tti_count: int = 1400
    tti_duration_s: float = 1.25e-4
    move_interval_ttis: int = 10
    qos_latency_ttis: int = 8  # 1 ms at the default TTI duration
    qos_sinr_db: float = 15.0
    runs: int = 5
    master_seed: int = 12345
    load_bps: float = 2e6
    packet_size_bytes: int = 32
    rbg_count: int = 24
    gamma: float = 0.9
    epsilon: float = 0.1
    nn_learning_rate: float = 0.01
    hidden_units: int = 20
    minibatch: int = 20
    replay_capacity: int = 60
    train_interval_ttis: int = 60
    target_copy_interval_ttis: int = 120
    cluster_max_iterations: int = 100
    cluster_convergence_epsilon: float = 1e-6
    cluster_init: InitStrategy = InitStrategy.FARTHEST_FIRST
    antenna: AntennaConfig = field(default_factory=AntennaConfig)
    trace_csv: str = ""

    def validate(self) -> None:
        for name in (
            "n_ues",
            "n_clusters",
            "n_beams",
            "tti_count",
            "move_interval_ttis",
            "qos_latency_ttis",
            "runs",
            "packet_size_bytes",
            "rbg_count",
            "cluster_max_iterations",
        ):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be >= 1, got {getattr(self, name)}")
        if self.n_clusters > self.n_ues:
            raise ConfigError("n_clusters cannot exceed n_ues")
        if not 0.0 < self.beam_width_deg < 180.0:
            raise ConfigError("beam_width_deg must be in (0, 180)")
        if self.cell_radius_m <= 0:
            raise ConfigError("cell_radius_m must be > 0")
        if self.error_rmse_m < 0:
            raise ConfigError("error_rmse_m must be >= 0")
        if self.tti_duration_s <= 0:
            raise ConfigError("tti_duration_s must be > 0")
        if self.load_bps < 0:
            raise ConfigError("load_bps must be >= 0")
        if not 0.0 <= self.gamma <= 1.0:
            raise ConfigError("gamma must be in [0, 1]")
        if not 0.0 <= self.epsilon <= 1.0:
            raise ConfigError("epsilon must be in [0, 1]")
        if self.minibatch > self.replay_capacity:
            raise ConfigError("minibatch cannot exceed replay_capacity")
        # constructing a config object validates the nested invariants too
        self.agent_config(action_count=self.n_ues, seed=0)
        self.clustering_config(seed=0)

    def agent_config(self, action_count: int, seed: int) -> AgentConfig:
        return AgentConfig(
            action_count=action_count,
            gamma=self.gamma,
            epsilon=self.epsilon,
            nn_learning_rate=self.nn_learning_rate,
            hidden_units=self.hidden_units,
            input_size=1,
            minibatch=self.minibatch,
            replay_capacity=self.replay_capacity,
            train_interval_ttis=self.train_interval_ttis,
            target_copy_interval_ttis=self.target_copy_interval_ttis,
            seed=seed,
        )

    def clustering_config(self, seed: int) -> ClusteringConfig:
        return ClusteringConfig(
            k=self.n_clusters,
            max_iterations=self.cluster_max_iterations,
            convergence_epsilon=self.cluster_convergence_epsilon,
            init_strategy=self.cluster_init,
            seed=seed,
        )

    @property
    def effective_rmse_m(self) -> float:
        """Exact-location runs force the injected error to zero."""
        return 0.0 if self.scenario is Scenario.KMEANS_EXACT else self.error_rmse_m


@dataclass
class TtiRecord:
    run: int
    tti: int
    coverage_rate: float
    delivered_bits: int
    mean_delay_ttis: float  # nan when nothing was delivered this TTI
    detail: Optional[dict] = None


@dataclass
class RunSummary:
    coverage_rate: float
    sum_rate_bps: float
    mean_delay_ttis: float
    delivered_bits: int


@dataclass
class RunReport:
    scenario: Scenario
    config: ScenarioConfig
    records: list  # one list of TtiRecord per run
    summaries: list  # one RunSummary per run
    aggregate: dict  # metric -> (mean, ci95_halfwidth)


def uniform_disk_point(
    rng: np.random.Generator, radius: float, center: Point2D = Point2D(0.0, 0.0)
) -> Point2D:
    """Area-uniform draw inside a disk (mean distance 2R/3 from center)."""
    r = radius * math.sqrt(rng.random())
    theta = rng.random() * 2.0 * math.pi
    return Point2D(center.x + r * math.cos(theta), center.y + r * math.sin(theta))


def inject_error(
    true_position: Point2D,
    error_rmse_m: float,
    rng: np.random.Generator,
    informative: bool = False,
    point_id=None,
) -> UncertainPoint:
    """Distort a true position and attach the matching uncertainty PDF.

    Disk mode: the reported center is the true position plus an offset
    drawn uniformly in a disk of radius R = rmse * sqrt(2), so the
    expected squared offset is R^2/2 = rmse^2; the PDF is that disk
    around the reported center.

    Informative mode (two-mode fixture): a ghost displacement g of
    magnitude rmse * sqrt(2) and uniform direction is drawn; with
    probability 1/2 the report lands on the ghost. The PDF holds both
    hypotheses, {reported, reported - g} at weight 1/2 each, with the
    reported location always first; the true position is one of the two
    modes, and the empirical RMSE of the report is again rmse. Exact
    clustering of the report ignores the ghost mode; expected-distance
    clustering exploits it.

    Both modes consume the same number of random draws, so scenarios
    sharing a seed see identical movement regardless of the mode.
    """
    if error_rmse_m < 0:
        raise ConfigError("error_rmse_m must be >= 0")
    r_err = error_rmse_m * math.sqrt(2.0)
    if not informative:
        u = rng.random()
        theta = rng.random() * 2.0 * math.pi
        r = r_err * math.sqrt(u)
        center = Point2D(
            true_position.x + r * math.cos(theta), true_position.y + r * math.sin(theta)
        )
        return UncertainPoint(pdf=UniformDisk(center, r_err), id=point_id)
    ghosted = rng.random() < 0.5
    theta = rng.random() * 2.0 * math.pi
    gx = r_err * math.cos(theta)
    gy = r_err * math.sin(theta)
    if ghosted:
        rep = Point2D(true_position.x + gx, true_position.y + gy)
    else:
        rep = Point2D(true_position.x, true_position.y)
    alt = Point2D(rep.x - gx, rep.y - gy)
    return UncertainPoint(pdf=SampleBased((rep, alt), (0.5, 0.5)), id=point_id)


def reported_center(p: UncertainPoint) -> Point2D:
    """The raw reported location inside an injected PDF.

    UniformDisk reports its center; SampleBased PDFs built by
    `inject_error` keep the reported location as the first sample.
    """
    if isinstance(p.pdf, UniformDisk):
        return p.pdf.center
    return p.pdf.samples[0]


def load_position_trace(path):
    """Parse a `tti,ue_id,x_m,y_m` CSV into {tti: [(ue_id, Point2D), ...]}.

    Rows must be sorted by (tti, ue_id); TTIs without rows hold the last
    position.
    """
    trace = {}
    last = None
    with open(path, newline="") as fh:
        rdr = csv.reader(fh)
        header = next(rdr, None)
        if header is None or [h.strip() for h in header] != ["tti", "ue_id", "x_m", "y_m"]:
            raise ConfigError(f"{path}: expected header tti,ue_id,x_m,y_m")
        for lineno, row in enumerate(rdr, start=2):
            if not row:
                continue
            try:
                tti, ue_id = int(row[0]), int(row[1])
                x, y = float(row[2]), float(row[3])
            except (ValueError, IndexError) as exc:
                raise ConfigError(f"{path}: line {lineno}: malformed row {row}") from exc
            key = (tti, ue_id)
            if last is not None and key <= last:
                raise ConfigError(f"{path}: line {lineno}: rows not sorted by (tti, ue_id)")
            last = key
            trace.setdefault(tti, []).append((ue_id, Point2D(x, y)))
    return trace


class ScenarioRun:
    """One seeded run of one scenario; `step` advances a single TTI.

    With coverage_only=True the traffic and DRL stages are skipped, so
    the run reduces to movement, clustering, beam formation and coverage
    (the positions are identical to the full run under the same seed:
    random streams are stream-separated).
    """

    def __init__(
        self,
        cfg: ScenarioConfig,
        run_seed: int,
        run_index: int = 0,
        trace: Optional[dict] = None,
        coverage_only: bool = False,
        collect_detail: bool = False,
        serve_beam_limit: Optional[int] = None,
    ):
        cfg.validate()
        self.cfg = cfg
        self.run_index = run_index
        self.trace = trace
        self.coverage_only = coverage_only
        self.collect_detail = collect_detail
        self.serve_beam_limit = serve_beam_limit
        self.gnb = Point2D(0.0, 0.0)
        self.width_rad = math.radians(cfg.beam_width_deg)
        self.qos_sinr_lin = 10.0 ** (cfg.qos_sinr_db / 10.0)
        self.rmse = cfg.effective_rmse_m

        self.move_rng = make_rng(derive_seed(run_seed, 1))
        self.error_rng = make_rng(derive_seed(run_seed, 2))
        self.cluster_seed = derive_seed(run_seed, 3)
        self.traffic_rngs = [make_rng(derive_seed(run_seed, 100 + u)) for u in range(cfg.n_ues)]

        self.ues = []
        for u in range(cfg.n_ues):
            pos = uniform_disk_point(self.move_rng, cfg.cell_radius_m)
            rep = inject_error(
                pos, self.rmse, self.error_rng, informative=cfg.informative_pdf, point_id=u
            )
            self.ues.append(
                UserEquipment(
                    id=u,
                    klass=UserClass.URLLC if u % 2 == 0 else UserClass.EMBB,
                    true_position=pos,
                    reported=rep,
                    reported_center=reported_center(rep),
                    queue=PacketQueue(),
                    traffic=TrafficConfig(
                        load_bps=cfg.load_bps,
                        packet_size_bytes=cfg.packet_size_bytes,
                        seed=derive_seed(run_seed, 100 + u),
                    ),
                )
            )

        if coverage_only:
            self.agents = []
        else:
            self.agents = [
                DqnAgent(cfg.agent_config(action_count=cfg.n_ues, seed=derive_seed(run_seed, 200 + b)))
                for b in range(cfg.n_beams)
            ]
        self.prev_centers = None
        self.packet_bits = cfg.packet_size_bytes * 8

    def _refresh_report(self, ue: UserEquipment) -> None:
        rep = inject_error(
            ue.true_position,
            self.rmse,
            self.error_rng,
            informative=self.cfg.informative_pdf,
            point_id=ue.id,
        )
        ue.reported = rep
        ue.reported_center = reported_center(rep)

    def _move_all(self) -> None:
        for ue in self.ues:
            ue.true_position = uniform_disk_point(self.move_rng, self.cfg.cell_radius_m)
            self._refresh_report(ue)

    def _apply_trace(self, t: int) -> None:
        for ue_id, pos in self.trace.get(t, ()):
            if not 0 <= ue_id < len(self.ues):
                raise ConfigError(f"trace references unknown ue_id {ue_id}")
            ue = self.ues[ue_id]
            ue.true_position = pos
            self._refresh_report(ue)

    def _cluster(self):
        cfg = self.cfg
        if cfg.scenario is Scenario.KMEANS_EXACT:
            data = [ue.true_position for ue in self.ues]
            geometry_points = data
        elif cfg.scenario is Scenario.KMEANS_ERROR:
            data = [ue.reported_center for ue in self.ues]
            geometry_points = data
        else:
            data = [ue.reported for ue in self.ues]
            geometry_points = [expected_position(p) for p in data]
        result = run_clustering(
            data,
            self.cfg.clustering_config(seed=self.cluster_seed),
            initial_centers=self.prev_centers,
        )
        self.prev_centers = result.centers
        return result.labels, list(result.centers), geometry_points

    def step(self, t: int) -> TtiRecord:
        cfg = self.cfg
        if not self.coverage_only:
            for ue in self.ues:
                n = generate_arrivals(ue.traffic, cfg.tti_duration_s, self.traffic_rngs[ue.id])
                for _ in range(n):
                    ue.queue.push(self.packet_bits, t)

        if self.trace is not None:
            self._apply_trace(t)
        elif t > 0 and t % cfg.move_interval_ttis == 0:
            self._move_all()

        labels, centers, geometry_points = self._cluster()
        beams = form_beams(
            centers,
            self.gnb,
            self.width_rad,
            cfg.n_beams,
            points=geometry_points,
            labels=labels,
            ids=[ue.id for ue in self.ues],
            rbg_count=cfg.rbg_count,
        )
        cov = coverage_rate(
            beams, [ue.true_position for ue in self.ues], self.gnb, cfg.cell_radius_m
        )

        delivered_bits = 0
        delays = []
        detail = None
        if not self.coverage_only:
            sinr_db = {}
            for b, beam in enumerate(beams):
                others = [bm for j, bm in enumerate(beams) if j != b]
                for uid in beam.members:
                    if (b, uid) in sinr_db:
                        continue
                    ue = self.ues[uid]
                    ang = math.atan2(ue.true_position.y - self.gnb.y, ue.true_position.x - self.gnb.x)
                    dist = math.hypot(
                        ue.true_position.x - self.gnb.x, ue.true_position.y - self.gnb.y
                    )
                    sinr_db[(b, uid)] = compute_sinr(ang, dist, beam, others, cfg.antenna)

            budgets = {}
            allocations = []
            rewards_seen = []
            serve_limit = len(beams) if self.serve_beam_limit is None else self.serve_beam_limit
            for b, beam in enumerate(beams):
                agent = self.agents[b]
                carry = agent.main.zero_carry()
                mask = np.zeros(cfg.n_ues, dtype=bool)
                mask[list(beam.members)] = True
                mask_t = tuple(bool(m) for m in mask)
                cqi_cur = agent.last_cqi
                beam_alloc = []
                for _ in range(beam.rbg_count):
                    s = encode_state(cqi_cur)
                    pre_carry = carry
                    action, carry = agent.act(s, carry, mask)
                    sdb = sinr_db[(b, action)]
                    if b < serve_limit:
                        budgets[action] = budgets.get(action, 0.0) + rbg_rate(
                            sdb, cfg.antenna
                        ) * cfg.tti_duration_s
                    cqi_next = sinr_to_cqi(sdb)
                    ue = self.ues[action]
                    sinr_ratio = (10.0 ** (sdb / 10.0)) / self.qos_sinr_lin
                    delay_ratio = cfg.qos_latency_ttis / ue.queue.head_of_line_delay(t)
                    r = reward(ue.klass, sinr_ratio, delay_ratio)
                    agent.remember(
                        ExperienceTuple(
                            state=s,
                            action=action,
                            next_state=encode_state(cqi_next),
                            reward=r,
                            hidden_context=pre_carry,
                            action_mask=mask_t,
                        )
                    )
                    rewards_seen.append(r)
                    beam_alloc.append(action)
                    cqi_cur = cqi_next
                agent.last_cqi = cqi_cur
                allocations.append(beam_alloc)

            per_beam_delivered = [0] * len(beams)
            for uid in sorted(budgets):
                drained = self.ues[uid].queue.serve(budgets[uid], t)
                for bits, _, dly in drained:
                    delivered_bits += bits
                    delays.append(dly)
                if drained and self.collect_detail:
                    serving = next(b for b, beam in enumerate(beams) if uid in beam.members)
                    per_beam_delivered[serving] += sum(d[0] for d in drained)

            if t > 0 and t % cfg.train_interval_ttis == 0:
                for agent in self.agents:
                    agent.train()
            if t > 0 and t % cfg.target_copy_interval_ttis == 0:
                for agent in self.agents:
                    agent.sync()

            if self.collect_detail:
                detail = {
                    "allocations": allocations,
                    "budgets": dict(budgets),
                    "sinr_db": sinr_db,
                    "rewards": rewards_seen,
                    "per_beam_delivered": per_beam_delivered,
                    "positions": [(ue.true_position.x, ue.true_position.y) for ue in self.ues],
                }
        elif self.collect_detail:
            detail = {
                "positions": [(ue.true_position.x, ue.true_position.y) for ue in self.ues]
            }

        mean_delay = float(np.mean(delays)) if delays else float("nan")
        return TtiRecord(
            run=self.run_index,
            tti=t,
            coverage_rate=cov,
            delivered_bits=delivered_bits,
            mean_delay_ttis=mean_delay,
            detail=detail,
        )

    def run(self):
        records = [self.step(t) for t in range(self.cfg.tti_count)]
        return records, self.summary(records)

    def summary(self, records) -> RunSummary:
        cfg = self.cfg
        delivered = sum(r.delivered_bits for r in records)
        delay_sum = sum(ue.queue.delivered_delay_sum for ue in self.ues)
        delay_n = sum(ue.queue.delivered_packets for ue in self.ues)
        return RunSummary(
            coverage_rate=float(np.mean([r.coverage_rate for r in records])),
            sum_rate_bps=delivered / (cfg.tti_count * cfg.tti_duration_s),
            mean_delay_ttis=(delay_sum / delay_n) if delay_n else float("nan"),
            delivered_bits=delivered,
        )


def run_scenario(
    cfg: ScenarioConfig, collect_detail: bool = False, coverage_only: bool = False
) -> RunReport:
    """Execute cfg.runs independent runs and aggregate their metrics.

    Run i uses the seed derive_seed(master_seed, i); the report is fully
    determined by (cfg, master_seed). Aggregates carry the mean and the
    95% Student-t half-width (nan for a single run).
    """
    cfg.validate()
    trace = load_position_trace(cfg.trace_csv) if cfg.trace_csv else None
    records = []
    summaries = []
    for i in range(cfg.runs):
        run = ScenarioRun(
            cfg,
            run_seed=derive_seed(cfg.master_seed, i),
            run_index=i,
            trace=trace,
            coverage_only=coverage_only,
            collect_detail=collect_detail,
        )
        recs, summ = run.run()
        records.append(recs)
        summaries.append(summ)
    aggregate = {}
    for metric in SUMMARY_METRICS:
        values = [getattr(s, metric) for s in summaries]
        aggregate[metric] = confidence_interval(values)
    return RunReport(
        scenario=cfg.scenario, config=cfg, records=records, summaries=summaries, aggregate=aggregate
    )


def mean_coverage(cfg: ScenarioConfig, run_index: int = 0) -> float:
    """Mean per-TTI coverage of one seeded run, skipping traffic and DRL."""
    run = ScenarioRun(
        cfg,
        run_seed=derive_seed(cfg.master_seed, run_index),
        run_index=run_index,
        trace=load_position_trace(cfg.trace_csv) if cfg.trace_csv else None,
        coverage_only=True,
    )
    records, _ = run.run()
    return float(np.mean([r.coverage_rate for r in records]))


def _fmt(value) -> str:
    if isinstance(value, float):
        return repr(value)
    return str(value)


def write_per_tti_csv(report: RunReport, path) -> None:
    """One row per (run, tti): run,tti,coverage_rate,delivered_bits,mean_delay_ttis."""
    with open(path, "w", newline="") as fh:
        fh.write("run,tti,coverage_rate,delivered_bits,mean_delay_ttis\n")
        for recs in report.records:
            for r in recs:
                fh.write(
                    f"{r.run},{r.tti},{_fmt(r.coverage_rate)},"
                    f"{r.delivered_bits},{_fmt(r.mean_delay_ttis)}\n"
                )


def write_summary_csv(report: RunReport, path) -> None:
    """Aggregate rows: scenario,metric,mean,ci95_halfwidth."""
    with open(path, "w", newline="") as fh:
        fh.write("scenario,metric,mean,ci95_halfwidth\n")
        for metric in SUMMARY_METRICS:
            mean, hw = report.aggregate[metric]
            fh.write(f"{report.scenario.value},{metric},{_fmt(mean)},{_fmt(hw)}\n")
