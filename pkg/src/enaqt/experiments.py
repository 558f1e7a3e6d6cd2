"""Dephasing sweeps and representative trajectories for the FMO trimer."""
from __future__ import annotations

import logging
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Optional

import numpy as np

from . import correlations, dynamics
from .errors import EnaqtError, ValidationError
from .model import NetworkModel, RunConfig, config_to_dict, localized_state

logger = logging.getLogger(__name__)

EFFICIENCY_METHODS = ("direct", "integrate")
REPRESENTATIVE_GAMMAS = (1e-6, 12.07, 1e4)


@dataclass(frozen=True)
class SweepConfig:
    model: NetworkModel
    gamma_min: float = 1e-6
    gamma_max: float = 1e4
    points: int = 121
    efficiency_method: str = "direct"
    trajectory_gammas: tuple[float, ...] = REPRESENTATIVE_GAMMAS
    plateau_window: float = 2.0
    plateau_tol: float = 1e-3
    initial_site: int = 1
    qubit_site: int = 1
    # LQU of the raw (unnormalized) site block; see README for the choice
    lqu_normalize: bool = False
    lqu_horizon: float = 20.0
    lqu_dt: float = 0.005
    trajectory_t_end: float = 20.0
    trajectory_dt: Optional[float] = None
    t_max: float = dynamics.T_MAX_DEFAULT
    drain_tol: float = dynamics.DRAIN_TOL
    compute_flux: bool = True
    threads: int = 1
    seed: int = 0

    def __post_init__(self):
        if not (self.gamma_min > 0 and self.gamma_min < self.gamma_max):
            raise ValidationError(f"need 0 < gamma_min < gamma_max, got {self.gamma_min}, {self.gamma_max}")
        if self.points < 2:
            raise ValidationError(f"points must be >= 2, got {self.points}")
        if self.efficiency_method not in EFFICIENCY_METHODS:
            raise ValidationError(f"efficiency_method must be one of {EFFICIENCY_METHODS}, got {self.efficiency_method!r}")
        if self.threads < 1:
            raise ValidationError(f"threads must be >= 1, got {self.threads}")
        if not self.plateau_window < self.lqu_horizon:
            raise ValidationError("plateau_window must be shorter than lqu_horizon")
        object.__setattr__(self, "trajectory_gammas", tuple(float(g) for g in self.trajectory_gammas))
        self.model.layout.index_site(self.initial_site)

    @property
    def gammas(self) -> np.ndarray:
        return np.logspace(math.log10(self.gamma_min), math.log10(self.gamma_max), self.points)

    def as_dict(self) -> dict:
        d = asdict(self)
        d["model"] = config_to_dict(RunConfig(self.model, self.initial_site))
        d["trajectory_gammas"] = list(self.trajectory_gammas)
        return d


@dataclass
class SweepPoint:
    gamma: float
    eta: float = math.nan
    flux: Optional[correlations.FluxResult] = None
    converged: bool = True
    wall_time: float = 0.0
    error: Optional[str] = None


@dataclass
class SweepResult:
    points: list[SweepPoint] = field(default_factory=list)

    @property
    def gammas(self) -> np.ndarray:
        return np.array([p.gamma for p in self.points])

    @property
    def etas(self) -> np.ndarray:
        return np.array([p.eta for p in self.points])

    @property
    def fluxes(self) -> list[Optional[correlations.FluxResult]]:
        return [p.flux for p in self.points]

    @property
    def phis(self) -> np.ndarray:
        return np.array([p.flux.phi if p.flux is not None else math.nan for p in self.points])

    @property
    def wall_times(self) -> np.ndarray:
        return np.array([p.wall_time for p in self.points])

    @property
    def failed(self) -> list[SweepPoint]:
        return [p for p in self.points if p.error is not None]

    def peak_eta(self) -> tuple[float, float]:
        """(max eta, gamma at the max)."""
        i = int(np.nanargmax(self.etas))
        return float(self.etas[i]), float(self.gammas[i])

    def peak_phi(self) -> tuple[float, float]:
        phis = self.phis
        if np.all(np.isnan(phis)):
            return math.nan, math.nan
        i = int(np.nanargmax(phis))
        return float(phis[i]), float(self.gammas[i])


def efficiency(m: NetworkModel, gamma: float, initial_site: int = 1, method: str = "direct",
               t_max: float = dynamics.T_MAX_DEFAULT, tol: float = dynamics.DRAIN_TOL) -> dynamics.EfficiencyReport:
    rho0 = localized_state(m, initial_site)
    if method == "direct":
        return dynamics.efficiency_direct(m, gamma, rho0)
    if method == "integrate":
        return dynamics.efficiency_by_integration(m, gamma, rho0, t_max=t_max, tol=tol)
    raise ValidationError(f"unknown efficiency method {method!r}")


def lqu_trajectory(cfg: SweepConfig, gamma: float, t_end: float, dt: Optional[float]) -> dynamics.Trajectory:
    rho0 = localized_state(cfg.model, cfg.initial_site)
    traj = dynamics.evolve(cfg.model, gamma, rho0, t_end, dt)
    return correlations.with_lqu(traj, normalize=cfg.lqu_normalize, qubit_site=cfg.qubit_site)


def _run_point(cfg: SweepConfig, gamma: float) -> SweepPoint:
    point = SweepPoint(float(gamma))
    start = time.perf_counter()
    try:
        rep = efficiency(cfg.model, gamma, cfg.initial_site, cfg.efficiency_method, cfg.t_max, cfg.drain_tol)
        point.eta, point.converged = rep.eta, rep.converged
        if cfg.compute_flux:
            traj = lqu_trajectory(cfg, gamma, cfg.lqu_horizon, cfg.lqu_dt)
            point.flux = correlations.lqu_flux(traj, cfg.plateau_window, cfg.plateau_tol)
    except EnaqtError as exc:
        logger.warning("sweep point gamma=%g failed: %s", gamma, exc)
        point.error = f"{type(exc).__name__}: {exc}"
    point.wall_time = time.perf_counter() - start
    return point


def run_dephasing_sweep(cfg: SweepConfig) -> SweepResult:
    """Efficiency and LQU flux on the log-spaced dephasing grid.

    Points run independently (optionally on ``cfg.threads`` workers) and are
    assembled in grid order. A failing point is recorded with its error and
    does not stop the sweep.
    """
    gammas = cfg.gammas
    if cfg.threads == 1:
        points = [_run_point(cfg, g) for g in gammas]
    else:
        with ThreadPoolExecutor(max_workers=cfg.threads) as pool:
            points = list(pool.map(lambda g: _run_point(cfg, g), gammas))
    return SweepResult(points)


def record_representative_trajectories(cfg: SweepConfig) -> dict[float, dynamics.Trajectory]:
    """Populations and LQU at each of ``cfg.trajectory_gammas``."""
    if not cfg.trajectory_gammas:
        raise ValidationError("trajectory_gammas is empty")
    return {g: lqu_trajectory(cfg, g, cfg.trajectory_t_end, cfg.trajectory_dt) for g in cfg.trajectory_gammas}
