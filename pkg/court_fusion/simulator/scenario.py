"""
Player trajectories on the court.

Players seek random waypoints at a cruise speed, slow down on arrival, push
each other apart when close and never exceed ``max_speed``. Every change of
velocity is limited by ``max_accel`` and ``max_turn_rate_deg``, so a player
cannot reverse within one frame. A ``CrossingEvent`` takes two players
out of that loop: for ``lead_s`` seconds they head for the midpoint between
them so that both arrive at ``time_s``, then keep their arrival velocity for
``pass_through_s`` seconds and return to waypoint seeking.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from ..errors import ConfigurationError
from ..geometry.region import COURT_LENGTH, COURT_WIDTH
from ..ingestion.records import GroundTruthBox, GroundTruthSequence
from .rigs import RigSpec, default_rigs

_WAYPOINT_REACHED = 0.5
_WAYPOINT_INSET = 2.0


@dataclass(frozen=True)
class BodyModel:
    """Vertical cylinder standing in for a player."""

    radius: float = 0.30
    height: float = 1.90

    def __post_init__(self):
        if self.radius <= 0 or self.height <= 0:
            raise ConfigurationError("body radius and height must be > 0")

    @property
    def footprint(self) -> float:
        """Side of the square BEV ground-truth box."""
        return 2.0 * self.radius


@dataclass(frozen=True)
class MotionModel:
    """Speeds in m/s, acceleration in m/s^2, turn rate in degrees/s."""

    max_speed: float = 4.0
    cruise_speed: tuple[float, float] = (1.0, 3.0)
    max_accel: float = 5.0
    max_turn_rate_deg: float = 360.0
    waypoint_churn: float = 0.2
    repulsion_radius: float = 1.5
    repulsion_gain: float = 2.0
    min_spacing: float = 0.8

    def __post_init__(self):
        lo, hi = self.cruise_speed
        if not 0 < lo <= hi <= self.max_speed:
            raise ConfigurationError("cruise_speed must satisfy 0 < low <= high <= max_speed")
        if self.waypoint_churn < 0 or self.repulsion_radius < 0 or self.repulsion_gain < 0:
            raise ConfigurationError("motion parameters must be >= 0")
        if self.min_spacing <= 0:
            raise ConfigurationError("min_spacing must be > 0")
        if self.max_accel <= 0 or self.max_turn_rate_deg <= 0:
            raise ConfigurationError("max_accel and max_turn_rate_deg must be > 0")


@dataclass(frozen=True)
class CrossingEvent:
    """Scripted meeting of two players (1-based ids) at ``time_s``."""

    player_a: int
    player_b: int
    time_s: float
    pass_through_s: float = 1.5
    lead_s: float = 4.0

    def engaged(self, t: float) -> bool:
        return self.time_s - self.lead_s <= t < self.time_s + self.pass_through_s


@dataclass(frozen=True)
class ScenarioConfig:
    player_count: int = 10
    duration_s: float = 20.0
    frame_rate: float = 10.0
    court_length: float = COURT_LENGTH
    court_width: float = COURT_WIDTH
    motion: MotionModel = field(default_factory=MotionModel)
    body: BodyModel = field(default_factory=BodyModel)
    crossings: tuple[CrossingEvent, ...] = ()
    rigs: tuple[RigSpec, ...] = field(default_factory=default_rigs)

    def __post_init__(self):
        if self.player_count < 0:
            raise ConfigurationError("player_count must be >= 0")
        if self.duration_s <= 0 or self.frame_rate <= 0:
            raise ConfigurationError("duration_s and frame_rate must be > 0")
        if self.court_length <= 0 or self.court_width <= 0:
            raise ConfigurationError("court dimensions must be > 0")
        capacity = int(self.court_length // self.motion.min_spacing) * int(self.court_width // self.motion.min_spacing)
        if self.player_count > capacity // 2:
            raise ConfigurationError(
                f"{self.player_count} players do not fit the court at {self.motion.min_spacing} m spacing"
            )
        for c in self.crossings:
            ids = {c.player_a, c.player_b}
            if len(ids) != 2 or not ids <= set(range(1, self.player_count + 1)):
                raise ConfigurationError(f"crossing needs two distinct players in 1..{self.player_count}")
            if not 0 < c.time_s < self.duration_s:
                raise ConfigurationError(f"crossing time {c.time_s}s outside the scenario")
            if c.lead_s <= 0 or c.pass_through_s < 0:
                raise ConfigurationError("crossing lead_s must be > 0 and pass_through_s >= 0")

    @property
    def frame_count(self) -> int:
        return int(round(self.duration_s * self.frame_rate))


@dataclass(frozen=True, eq=False)
class Scenario:
    """Generated trajectories.

    ``positions[i, j]`` is the centre of player ``ids[j]`` at frame ``i + 1``.
    """

    cfg: ScenarioConfig
    seed: int
    ids: tuple[int, ...]
    positions: np.ndarray
    headings: np.ndarray

    @property
    def frame_count(self) -> int:
        return int(self.positions.shape[0])

    @property
    def frames(self) -> range:
        return range(1, self.frame_count + 1)

    def timestamp(self, frame: int) -> float:
        return (frame - 1) / self.cfg.frame_rate

    def positions_at(self, frame: int) -> np.ndarray:
        return self.positions[frame - 1]

    def ground_truth(self) -> GroundTruthSequence:
        side = self.cfg.body.footprint
        boxes = (
            GroundTruthBox(frame, gid, float(x), float(y), side, side)
            for frame in self.frames
            for gid, (x, y) in zip(self.ids, self.positions_at(frame))
        )
        return GroundTruthSequence(boxes, self.frames)


def _initial_positions(cfg: ScenarioConfig, rng: np.random.Generator) -> np.ndarray:
    inset = cfg.body.radius + 0.2
    placed: list[np.ndarray] = []
    attempts = 0
    while len(placed) < cfg.player_count:
        attempts += 1
        if attempts > 10000:
            raise ConfigurationError("could not place players at the requested spacing")
        p = rng.uniform((inset, inset), (cfg.court_length - inset, cfg.court_width - inset))
        if all(np.linalg.norm(p - q) >= cfg.motion.min_spacing for q in placed):
            placed.append(p)
    return np.array(placed).reshape(-1, 2)


def _new_waypoint(cfg: ScenarioConfig, rng: np.random.Generator) -> tuple[np.ndarray, float]:
    inset = min(_WAYPOINT_INSET, cfg.court_length / 4, cfg.court_width / 4)
    waypoint = rng.uniform((inset, inset), (cfg.court_length - inset, cfg.court_width - inset))
    return waypoint, float(rng.uniform(*cfg.motion.cruise_speed))


def steer(vel: np.ndarray, desired: np.ndarray, motion: MotionModel, dt: float) -> np.ndarray:
    """Velocity one step from *vel* toward *desired* within the turn-rate and acceleration limits."""
    speed = float(np.linalg.norm(vel))
    target = float(np.linalg.norm(desired))
    if speed > 1e-6 and target > 1e-6:
        current = math.atan2(vel[1], vel[0])
        turn = (math.atan2(desired[1], desired[0]) - current + math.pi) % (2 * math.pi) - math.pi
        limit = math.radians(motion.max_turn_rate_deg) * dt
        if abs(turn) > limit:
            heading = current + math.copysign(limit, turn)
            desired = target * np.array([math.cos(heading), math.sin(heading)])
    change = desired - vel
    size = float(np.linalg.norm(change))
    limit = motion.max_accel * dt
    if size > limit:
        change = change * (limit / size)
    return vel + change


def generate_scenario(cfg: ScenarioConfig | None = None, seed: int = 0) -> Scenario:
    """Simulate all players frame by frame; identical ``(cfg, seed)`` gives identical output."""
    cfg = cfg or ScenarioConfig()
    rng = np.random.default_rng(seed)
    n, frames = cfg.player_count, cfg.frame_count
    dt = 1.0 / cfg.frame_rate
    motion = cfg.motion
    lo = np.array([cfg.body.radius, cfg.body.radius])
    hi = np.array([cfg.court_length - cfg.body.radius, cfg.court_width - cfg.body.radius])

    pos = _initial_positions(cfg, rng)
    vel = np.zeros((n, 2))
    waypoints, speeds = [], []
    for _ in range(n):
        w, s = _new_waypoint(cfg, rng)
        waypoints.append(w)
        speeds.append(s)
    heading = np.zeros(n)

    positions = np.zeros((frames, n, 2))
    headings = np.zeros((frames, n))
    meeting: dict[int, np.ndarray] = {}
    for i in range(frames):
        positions[i], headings[i] = pos, heading
        t = i * dt
        engaged: dict[int, tuple[CrossingEvent, int]] = {}
        for ci, c in enumerate(cfg.crossings):
            if c.engaged(t):
                engaged[c.player_a - 1] = (c, ci)
                engaged[c.player_b - 1] = (c, ci)
                if ci not in meeting:
                    meeting[ci] = np.clip((pos[c.player_a - 1] + pos[c.player_b - 1]) / 2.0, lo, hi)

        new_vel = np.zeros_like(vel)
        for j in range(n):
            if j in engaged:
                c, ci = engaged[j]
                remaining = c.time_s - t
                if remaining > 1e-9:
                    offset = meeting[ci] - pos[j]
                    steps = max(int(round(remaining / dt)), 1)
                    desired = offset / (steps * dt)
                else:
                    desired = vel[j]
            else:
                offset = waypoints[j] - pos[j]
                dist = float(np.linalg.norm(offset))
                if dist < _WAYPOINT_REACHED or rng.random() < motion.waypoint_churn * dt:
                    waypoints[j], speeds[j] = _new_waypoint(cfg, rng)
                    offset = waypoints[j] - pos[j]
                    dist = float(np.linalg.norm(offset))
                # arrive: never faster than the speed that still stops at the waypoint
                reach = min(speeds[j], math.sqrt(2.0 * motion.max_accel * dist), dist / dt)
                desired = offset / dist * reach if dist > 0 else np.zeros(2)
                for k in range(n):
                    if k == j:
                        continue
                    d = pos[j] - pos[k]
                    r = float(np.linalg.norm(d))
                    if 0 < r < motion.repulsion_radius:
                        desired = desired + motion.repulsion_gain * (1.0 - r / motion.repulsion_radius) * d / r
            new_vel[j] = steer(vel[j], desired, motion, dt)
            speed = float(np.linalg.norm(new_vel[j]))
            if speed > motion.max_speed:
                new_vel[j] *= motion.max_speed / speed
            if speed > 1e-6:
                heading[j] = math.atan2(new_vel[j][1], new_vel[j][0])
        moved = np.clip(pos + new_vel * dt, lo, hi)
        # a player stopped by the court edge keeps only the motion it made
        vel = (moved - pos) / dt
        pos = moved

    return Scenario(cfg, seed, tuple(range(1, n + 1)), positions, headings)


def random_crossings(
    cfg: ScenarioConfig,
    count: int,
    seed: int = 0,
    pass_through_s: float = 1.5,
    lead_s: float = 4.0,
) -> tuple[CrossingEvent, ...]:
    """*count* non-overlapping crossings between random player pairs."""
    if count == 0:
        return ()
    if cfg.player_count < 2:
        raise ConfigurationError("crossings need at least two players")
    spacing = lead_s + pass_through_s + 1.0
    first = lead_s + 0.5
    if first + (count - 1) * spacing + pass_through_s >= cfg.duration_s:
        raise ConfigurationError(f"{count} crossings do not fit in {cfg.duration_s}s")
    rng = np.random.default_rng([int(seed), 7])
    events = []
    for i in range(count):
        a, b = sorted(int(v) + 1 for v in rng.choice(cfg.player_count, size=2, replace=False))
        events.append(CrossingEvent(a, b, round(first + i * spacing, 3), pass_through_s, lead_s))
    return tuple(events)


def with_crossings(cfg: ScenarioConfig, crossings: Sequence[CrossingEvent]) -> ScenarioConfig:
    return replace(cfg, crossings=tuple(crossings))
