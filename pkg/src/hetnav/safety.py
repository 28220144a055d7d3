"""Trajectory-aware safety filter.

Each agent's nominal command is scaled by the largest alpha from a fixed
descending ladder such that its predicted one-step trajectory avoids an
inflated over-approximation of every neighbor's one-step reachable set:

- holonomic neighbor: axis-aligned rectangle centered on the neighbor with
  half-extent v_max*dt + r_i + r_j + d_safe per axis (per-axis speed bound);
- diff-drive neighbor: disc of the same radius (isotropic speed bound).

The ego prediction is a straight segment p + (v + dt/(2m)*alpha*u) * tau for
holonomic agents, and the five RK4 substep positions (checked pointwise) for
diff-drive agents. Boundary contact counts as a hit (closed sets).

When no rung is feasible, alpha = 0 is returned with feasible=False; how the
environment executes that fallback is its decision (see env.fallback modes).
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .config import WorldConfig
from .dynamics import DiffCommand, HoloCommand, unicycle_rk4, unicycle_rk4_trajectory
from .world import AgentKind, AgentState, DiffDriveState, HolonomicState

ALPHA_LADDER: tuple[float, ...] = (1.0, 0.8, 0.6, 0.4, 0.25, 0.1, 0.0)

RK4_SUBSTEPS = 5


@dataclass
class InflatedRect:
    cx: float
    cy: float
    hx: float
    hy: float


@dataclass
class InflatedDisc:
    cx: float
    cy: float
    radius: float


InflatedSet = InflatedRect | InflatedDisc


def inflation(ego_radius: float, neighbor_radius: float, config: WorldConfig) -> float:
    """Reachable-set growth: worst-case travel plus body radii plus margin."""
    return config.v_max * config.dt + ego_radius + neighbor_radius + config.d_safe


def inflated_rect(
    center: np.ndarray, ego_radius: float, neighbor_radius: float, config: WorldConfig
) -> InflatedRect:
    h = inflation(ego_radius, neighbor_radius, config)
    return InflatedRect(cx=float(center[0]), cy=float(center[1]), hx=h, hy=h)


def inflated_disc(
    center: np.ndarray, ego_radius: float, neighbor_radius: float, config: WorldConfig
) -> InflatedDisc:
    return InflatedDisc(
        cx=float(center[0]),
        cy=float(center[1]),
        radius=inflation(ego_radius, neighbor_radius, config),
    )


def build_inflated_sets(
    ego_radius: float, neighbors: list[AgentState], config: WorldConfig
) -> list[InflatedSet]:
    sets: list[InflatedSet] = []
    for nb in neighbors:
        if isinstance(nb, HolonomicState):
            sets.append(inflated_rect(nb.pos, ego_radius, config.r_h, config))
        else:
            sets.append(inflated_disc(nb.pos, ego_radius, config.r_d, config))
    return sets


# --- segment vs set predicates (closed sets: touching counts) ---------------

def segment_hits_rect(
    px: float, py: float, vx: float, vy: float, horizon: float, rect: InflatedRect
) -> bool:
    """Slab test for p + v*tau, tau in [0, horizon], against a closed rect."""
    t_enter = 0.0
    t_exit = horizon
    for p, v, lo, hi in (
        (px, vx, rect.cx - rect.hx, rect.cx + rect.hx),
        (py, vy, rect.cy - rect.hy, rect.cy + rect.hy),
    ):
        if v == 0.0:
            if p < lo or p > hi:
                return False
            continue
        t1 = (lo - p) / v
        t2 = (hi - p) / v
        if t1 > t2:
            t1, t2 = t2, t1
        if t1 > t_enter:
            t_enter = t1
        if t2 < t_exit:
            t_exit = t2
        if t_enter > t_exit:
            return False
    return True


def segment_hits_disc(
    px: float, py: float, vx: float, vy: float, horizon: float, disc: InflatedDisc
) -> bool:
    """Quadratic root-interval test for p + v*tau, tau in [0, horizon]."""
    dx = px - disc.cx
    dy = py - disc.cy
    c0 = dx * dx + dy * dy - disc.radius * disc.radius
    if c0 <= 0.0:
        return True
    a = vx * vx + vy * vy
    if a == 0.0:
        return False
    b = 2.0 * (vx * dx + vy * dy)
    disc_q = b * b - 4.0 * a * c0
    if disc_q < 0.0:
        return False
    sq = math.sqrt(disc_q)
    t_lo = (-b - sq) / (2.0 * a)
    t_hi = (-b + sq) / (2.0 * a)
    return t_lo <= horizon and t_hi >= 0.0


def point_in_set(x: float, y: float, s: InflatedSet) -> bool:
    if isinstance(s, InflatedRect):
        return abs(x - s.cx) <= s.hx and abs(y - s.cy) <= s.hy
    dx = x - s.cx
    dy = y - s.cy
    return dx * dx + dy * dy <= s.radius * s.radius


def segment_hits_set(
    px: float, py: float, vx: float, vy: float, horizon: float, s: InflatedSet
) -> bool:
    if isinstance(s, InflatedRect):
        return segment_hits_rect(px, py, vx, vy, horizon, s)
    return segment_hits_disc(px, py, vx, vy, horizon, s)


# --- the filters -------------------------------------------------------------

@dataclass
class FilterResult:
    alpha: float
    safe_cmd: HoloCommand | DiffCommand
    ladder_verdicts: tuple[bool, ...]  # feasibility per ladder rung, descending
    intervened: bool                   # alpha < 1
    feasible: bool                     # False only for the unconditional fallback


def filter_holonomic(
    state: HolonomicState,
    ego_radius: float,
    cmd: HoloCommand,
    neighbors: list[AgentState],
    config: WorldConfig,
) -> FilterResult:
    sets = build_inflated_sets(ego_radius, neighbors, config)
    px, py = float(state.pos[0]), float(state.pos[1])
    vx, vy = float(state.vel[0]), float(state.vel[1])
    coef = config.dt / (2.0 * config.m_mass)
    horizon = config.dt
    verdicts = []
    for alpha in ALPHA_LADDER:
        pvx = vx + coef * alpha * cmd.fx
        pvy = vy + coef * alpha * cmd.fy
        hit = any(segment_hits_set(px, py, pvx, pvy, horizon, s) for s in sets)
        verdicts.append(not hit)
    return _pick(verdicts, cmd, config)


def filter_diff_drive(
    state: DiffDriveState,
    ego_radius: float,
    cmd: DiffCommand,
    neighbors: list[AgentState],
    config: WorldConfig,
) -> FilterResult:
    sets = build_inflated_sets(ego_radius, neighbors, config)
    px, py = float(state.pos[0]), float(state.pos[1])
    theta = state.heading
    verdicts = []
    for alpha in ALPHA_LADDER:
        lin = alpha * cmd.lin
        ang = alpha * cmd.ang
        pts = unicycle_rk4_trajectory(px, py, theta, lin, ang, config.dt, RK4_SUBSTEPS)
        hit = any(point_in_set(x, y, s) for x, y in pts for s in sets)
        verdicts.append(not hit)
    return _pick(verdicts, cmd, config)


def _pick(
    verdicts: list[bool], cmd: HoloCommand | DiffCommand, config: WorldConfig
) -> FilterResult:
    for idx, ok in enumerate(verdicts):
        if ok:
            alpha = ALPHA_LADDER[idx]
            return FilterResult(
                alpha=alpha,
                safe_cmd=_scale(cmd, alpha, config),
                ladder_verdicts=tuple(verdicts),
                intervened=alpha < 1.0,
                feasible=True,
            )
    return FilterResult(
        alpha=0.0,
        safe_cmd=_scale(cmd, 0.0, config),
        ladder_verdicts=tuple(verdicts),
        intervened=True,
        feasible=False,
    )


def _scale(
    cmd: HoloCommand | DiffCommand, alpha: float, config: WorldConfig
) -> HoloCommand | DiffCommand:
    if isinstance(cmd, HoloCommand):
        return HoloCommand(alpha * cmd.fx, alpha * cmd.fy, config.u_max)
    return DiffCommand(alpha * cmd.lin, alpha * cmd.ang, config.u_max)


def apply_filter(
    state: AgentState,
    ego_radius: float,
    cmd: HoloCommand | DiffCommand,
    neighbors: list[AgentState],
    config: WorldConfig,
) -> FilterResult:
    if isinstance(state, HolonomicState):
        return filter_holonomic(state, ego_radius, cmd, neighbors, config)
    return filter_diff_drive(state, ego_radius, cmd, neighbors, config)


# --- brute-force oracle (test/fuzz harness) ----------------------------------

# The diff-drive oracle re-integrates every substep this finely; RK4 error
# at this resolution (~1e-15 over dt) is far below any clearance of interest,
# so the oracle's accuracy is set by it, not by the tau-grid size.
ORACLE_DIFF_MICRO = 20


def oracle_filter(
    state: AgentState,
    ego_radius: float,
    cmd: HoloCommand | DiffCommand,
    neighbors: list[AgentState],
    config: WorldConfig,
    samples: int = 10_000,
) -> FilterResult:
    """Same contract as the analytic filters, feasibility by brute force.

    Holonomic: the predicted segment is margin-sampled on a `samples`-point
    tau grid; windows the Lipschitz bound cannot decide are re-sampled at
    finer resolution until they are. No root finding or slab math involved.
    Diff-drive: the same five substep positions, each substep re-integrated
    with ORACLE_DIFF_MICRO micro RK4 steps, then checked pointwise.
    """
    if samples < 100:
        raise ValueError("oracle needs samples >= 100")
    sets = build_inflated_sets(ego_radius, neighbors, config)
    px, py = float(state.pos[0]), float(state.pos[1])
    verdicts = []
    if isinstance(state, HolonomicState):
        assert isinstance(cmd, HoloCommand)
        vx, vy = float(state.vel[0]), float(state.vel[1])
        coef = config.dt / (2.0 * config.m_mass)
        for alpha in ALPHA_LADDER:
            pvx = vx + coef * alpha * cmd.fx
            pvy = vy + coef * alpha * cmd.fy
            hit = any(
                _sampled_segment_hit(px, py, pvx, pvy, 0.0, config.dt, s, samples)
                for s in sets
            )
            verdicts.append(not hit)
    else:
        assert isinstance(cmd, DiffCommand)
        sub_h = config.dt / RK4_SUBSTEPS
        for alpha in ALPHA_LADDER:
            lin = alpha * cmd.lin
            ang = alpha * cmd.ang
            x, y, theta = px, py, state.heading
            hit = False
            for _ in range(RK4_SUBSTEPS):
                x, y, theta = unicycle_rk4(x, y, theta, lin, ang, sub_h, ORACLE_DIFF_MICRO)
                if any(point_in_set(x, y, s) for s in sets):
                    hit = True
                    break
            verdicts.append(not hit)
    return _pick(verdicts, cmd, config)


# Refinement floor: windows this small mean the true boundary margin is below
# any clearance a caller could care about, so the sampled verdict stands.
_ORACLE_MAX_DEPTH = 24


def _sampled_point_margins(xs: np.ndarray, ys: np.ndarray, s: InflatedSet) -> np.ndarray:
    if isinstance(s, InflatedRect):
        return np.maximum(np.abs(xs - s.cx) - s.hx, np.abs(ys - s.cy) - s.hy)
    dx = xs - s.cx
    dy = ys - s.cy
    return np.sqrt(dx * dx + dy * dy) - s.radius


def _sampled_segment_hit(
    px: float, py: float, pvx: float, pvy: float,
    t_lo: float, t_hi: float, s: InflatedSet, samples: int, depth: int = 0,
) -> bool:
    """Brute-force hit test: sample boundary margins along tau, refine where
    the sample spacing times the margin's Lipschitz constant cannot rule a
    hit out."""
    taus = np.linspace(t_lo, t_hi, samples)
    margins = _sampled_point_margins(px + pvx * taus, py + pvy * taus, s)
    lowest = float(np.min(margins))
    if lowest <= 0.0:
        return True
    lip = math.sqrt(pvx * pvx + pvy * pvy)
    spacing = (t_hi - t_lo) / (samples - 1)
    if lowest > 0.5 * lip * spacing or depth >= _ORACLE_MAX_DEPTH:
        return False
    # Undecided: re-sample every window that could still dip below zero.
    suspect = np.nonzero(margins <= 0.5 * lip * spacing)[0]
    windows: list[tuple[float, float]] = []
    for idx in suspect:
        lo = max(t_lo, taus[idx] - spacing)
        hi = min(t_hi, taus[idx] + spacing)
        if windows and lo <= windows[-1][1]:
            windows[-1] = (windows[-1][0], hi)
        else:
            windows.append((lo, hi))
    return any(
        _sampled_segment_hit(px, py, pvx, pvy, lo, hi, s, samples, depth + 1)
        for lo, hi in windows
    )


# --- exact boundary margins (instance clearance for fuzz classification) -----

def _point_margin(x: float, y: float, s: InflatedSet) -> float:
    """Signed boundary margin: negative inside, positive outside.

    Rect margin is the Chebyshev-style max of per-axis excesses; only the
    sign and zero set matter for verdict-flip classification.
    """
    if isinstance(s, InflatedRect):
        return max(abs(x - s.cx) - s.hx, abs(y - s.cy) - s.hy)
    dx = x - s.cx
    dy = y - s.cy
    return math.sqrt(dx * dx + dy * dy) - s.radius


def _segment_margin(
    px: float, py: float, vx: float, vy: float, horizon: float, s: InflatedSet
) -> float:
    """min over tau in [0, horizon] of the point margin along the segment."""
    if isinstance(s, InflatedDisc):
        a = vx * vx + vy * vy
        if a == 0.0:
            tau = 0.0
        else:
            tau = min(max(-((px - s.cx) * vx + (py - s.cy) * vy) / a, 0.0), horizon)
        return _point_margin(px + vx * tau, py + vy * tau, s)
    # Rect: the margin is piecewise linear in tau; its minimum over a closed
    # interval sits at an endpoint, a kink of either |axis| term, or a
    # crossing between the two linear pieces.
    A = px - s.cx
    B = vx
    C = py - s.cy
    D = vy
    cands = [0.0, horizon]
    if B != 0.0:
        cands.append(-A / B)
    if D != 0.0:
        cands.append(-C / D)
    for sx in (1.0, -1.0):
        for sy in (1.0, -1.0):
            denom = sx * B - sy * D
            if denom != 0.0:
                cands.append((sy * C - sx * A + s.hx - s.hy) / denom)
    best = math.inf
    for tau in cands:
        tau = min(max(tau, 0.0), horizon)
        m = _point_margin(px + B * tau, py + D * tau, s)
        if m < best:
            best = m
    return best


def instance_clearance(
    state: AgentState,
    ego_radius: float,
    cmd: HoloCommand | DiffCommand,
    neighbors: list[AgentState],
    config: WorldConfig,
) -> float:
    """Smallest |boundary margin| over every ladder rung and inflated set.

    A filter instance whose clearance exceeds a sampling oracle's resolution
    must produce identical verdicts from the analytic and oracle filters.
    """
    sets = build_inflated_sets(ego_radius, neighbors, config)
    if not sets:
        return math.inf
    px, py = float(state.pos[0]), float(state.pos[1])
    best = math.inf
    if isinstance(state, HolonomicState):
        vx, vy = float(state.vel[0]), float(state.vel[1])
        coef = config.dt / (2.0 * config.m_mass)
        for alpha in ALPHA_LADDER:
            pvx = vx + coef * alpha * cmd.fx
            pvy = vy + coef * alpha * cmd.fy
            for s in sets:
                m = abs(_segment_margin(px, py, pvx, pvy, config.dt, s))
                if m < best:
                    best = m
    else:
        for alpha in ALPHA_LADDER:
            lin = alpha * cmd.lin
            ang = alpha * cmd.ang
            pts = unicycle_rk4_trajectory(px, py, state.heading, lin, ang, config.dt, RK4_SUBSTEPS)
            for x, y in pts:
                for s in sets:
                    m = abs(_point_margin(x, y, s))
                    if m < best:
                        best = m
    return best


def substep_gap(
    state: DiffDriveState,
    ego_radius: float,
    cmd: DiffCommand,
    neighbors: list[AgentState],
    config: WorldConfig,
    micro_per_substep: int = 200,
) -> float:
    """Worst-case inter-substep excursion diagnostic for the diff-drive filter.

    Returns the most negative boundary margin reached *between* the five
    checked substep positions at alpha = 1 (0 when the whole dense path stays
    clear). Quantifies the gap the pointwise check accepts.
    """
    sets = build_inflated_sets(ego_radius, neighbors, config)
    if not sets:
        return 0.0
    x, y, theta = float(state.pos[0]), float(state.pos[1]), state.heading
    sub_h = config.dt / RK4_SUBSTEPS
    worst = 0.0
    for _ in range(RK4_SUBSTEPS):
        for _ in range(micro_per_substep):
            x, y, theta = unicycle_rk4(x, y, theta, cmd.lin, cmd.ang, sub_h / micro_per_substep, 1)
            for s in sets:
                m = _point_margin(x, y, s)
                if m < worst:
                    worst = m
    return worst


# --- random instance generation (shared by fuzz CLI and tests) ---------------

def random_filter_instance(
    rng: np.random.Generator, config: WorldConfig
) -> tuple[AgentState, float, HoloCommand | DiffCommand, list[AgentState]]:
    """One random filter call: mixed kinds, 0-4 neighbors near the ego."""
    # Neighbor offsets concentrated around a few inflation radii so feasible,
    # throttled, and fallback outcomes all occur with useful frequency.
    span = 3.0 * inflation(config.r_h, config.r_d, config)
    if rng.uniform() < 0.5:
        state: AgentState = HolonomicState(
            pos=rng.uniform(0.0, config.d, 2),
            vel=rng.uniform(-config.v_max, config.v_max, 2),
        )
        ego_radius = config.r_h
        cmd: HoloCommand | DiffCommand = HoloCommand(
            rng.uniform(-config.u_max, config.u_max),
            rng.uniform(-config.u_max, config.u_max),
            config.u_max,
        )
    else:
        state = DiffDriveState(
            pos=rng.uniform(0.0, config.d, 2),
            heading=rng.uniform(-math.pi, math.pi),
            speed=0.0,
            ang_speed=0.0,
        )
        ego_radius = config.r_d
        cmd = DiffCommand(
            rng.uniform(-config.u_max, config.u_max),
            rng.uniform(-config.u_max, config.u_max),
            config.u_max,
        )
    neighbors: list[AgentState] = []
    for _ in range(int(rng.integers(0, 5))):
        offset = rng.uniform(-span, span, 2)
        pos = state.pos + offset
        if rng.uniform() < 0.5:
            neighbors.append(HolonomicState(pos=pos, vel=rng.uniform(-config.v_max, config.v_max, 2)))
        else:
            neighbors.append(DiffDriveState(pos=pos, heading=rng.uniform(-math.pi, math.pi)))
    return state, ego_radius, cmd, neighbors
