"""Lindblad dynamics on the ``|g>, sites, |RC>`` space.

Density matrices are vectorized by column stacking, ``vec(rho) =
rho.reshape(-1, order="F")``, so that ``vec(A rho B) = (B^T kron A) vec(rho)``.
Every routine here goes through :func:`vec` / :func:`unvec`.

Each channel carries the factor 2 in front of its rate, so a site coupled
to the sink loses population at ``2 * sink_rate`` and coherences between
sites ``i`` and ``j`` dephase at ``gamma_i + gamma_j``.
"""
from __future__ import annotations

import logging
import math
import warnings
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from . import linalg
from .errors import PropagationError, SingularSystemError, StepSizeError, ValidationError
from .model import BasisLayout, DensityMatrix, NetworkModel, build_hamiltonian, density_violations

logger = logging.getLogger(__name__)

PROPAGATION_TOL = 1e-6
RK4_DRIFT_TOL = 1e-6
DRAIN_TOL = 1e-6
T_MAX_DEFAULT = 2.0e4


def vec(rho: np.ndarray) -> np.ndarray:
    return np.asarray(rho).reshape(-1, order="F")


def unvec(v: np.ndarray, d: int) -> np.ndarray:
    """Inverse of :func:`vec`; also accepts a stack of shape (N, d*d)."""
    v = np.asarray(v)
    if v.ndim == 1:
        return v.reshape(d, d, order="F")
    return v.reshape(v.shape[0], d, d).transpose(0, 2, 1)


@dataclass(frozen=True, eq=False)
class Superoperator:
    matrix: np.ndarray  # (d^2, d^2), ps^-1
    layout: BasisLayout

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def apply(self, rho: np.ndarray) -> np.ndarray:
        d = self.layout.dimension
        return unvec(self.matrix @ vec(rho), d)

    def norm_inf(self) -> float:
        return float(np.max(np.sum(np.abs(self.matrix), axis=1)))

    def site_block_indices(self) -> np.ndarray:
        """Positions in ``vec(rho)`` of the site-site entries, column-stacked."""
        d = self.layout.dimension
        sites = self.layout.site_indices
        return np.array([r + c * d for c in sites for r in sites])


def _dissipator(jump: np.ndarray, rate: float) -> np.ndarray:
    """``rate * (J rho J^+ - 1/2 {J^+ J, rho})`` as a superoperator."""
    d = jump.shape[0]
    eye = np.eye(d)
    jj = jump.conj().T @ jump
    return rate * (np.kron(jump.conj(), jump) - 0.5 * (np.kron(eye, jj) + np.kron(jj.T, eye)))


def _ket_bra(d: int, i: int, j: int) -> np.ndarray:
    op = np.zeros((d, d), dtype=complex)
    op[i, j] = 1.0
    return op


def resolve_dephasing(m: NetworkModel, gamma_override=None) -> np.ndarray:
    n = m.n_sites
    if gamma_override is not None:
        g = np.atleast_1d(np.asarray(gamma_override, dtype=float))
        if g.size == 1:
            g = np.full(n, float(g[0]))
        if g.shape != (n,) or not np.all(np.isfinite(g)) or np.any(g < 0):
            raise ValidationError(f"dephasing override must be a nonnegative scalar or length-{n} array")
        return g
    if m.dephasing_rates is None:
        raise ValidationError("model has no dephasing rates; pass a dephasing override")
    return np.asarray(m.dephasing_rates, dtype=float)


def build_lindbladian(m: NetworkModel, gamma_override=None) -> Superoperator:
    """Assemble the full Lindbladian as a (d^2 x d^2) matrix in ps^-1."""
    layout = m.layout
    d = layout.dimension
    gammas = resolve_dephasing(m, gamma_override)
    h = layout.embed_sites(build_hamiltonian(m)) / m.hbar
    eye = np.eye(d)
    gen = -1j * (np.kron(eye, h) - np.kron(h.T, eye))
    g = layout.index_g
    for i, (gamma_i, diss_i) in enumerate(zip(gammas, m.dissipation_rates), start=1):
        s = layout.index_site(i)
        if gamma_i:
            gen += _dissipator(_ket_bra(d, s, s), 2.0 * gamma_i)
        if diss_i:
            gen += _dissipator(_ket_bra(d, g, s), 2.0 * diss_i)
    if m.sink_rate:
        gen += _dissipator(_ket_bra(d, layout.index_rc, layout.index_site(m.sink_site)), 2.0 * m.sink_rate)
    return Superoperator(gen, layout)


@dataclass(frozen=True, eq=False)
class Trajectory:
    """Time grid (ps) with density-matrix snapshots and derived series."""

    times: np.ndarray
    states: np.ndarray  # (N, d, d)
    layout: BasisLayout
    observables: dict[str, np.ndarray] = field(default_factory=dict)

    def __post_init__(self):
        if len(self.times) != len(self.states):
            raise ValidationError("times and states must have equal length")

    def __len__(self) -> int:
        return len(self.times)

    def state(self, i: int) -> DensityMatrix:
        return DensityMatrix(self.layout, self.states[i])

    @property
    def populations(self) -> np.ndarray:
        return np.real(np.diagonal(self.states, axis1=1, axis2=2))

    @property
    def p_g(self) -> np.ndarray:
        return self.populations[:, self.layout.index_g]

    @property
    def p_rc(self) -> np.ndarray:
        return self.populations[:, self.layout.index_rc]

    def site_population(self, i: int) -> np.ndarray:
        return self.populations[:, self.layout.index_site(i)]

    @property
    def site_blocks(self) -> np.ndarray:
        idx = self.layout.site_indices
        return self.states[:, idx[:, None], idx[None, :]]

    def with_observable(self, name: str, values) -> "Trajectory":
        values = np.asarray(values)
        if len(values) != len(self.times):
            raise ValidationError(f"observable {name!r} has {len(values)} samples, expected {len(self.times)}")
        obs = dict(self.observables)
        obs[name] = values
        return Trajectory(self.times, self.states, self.layout, obs)

    def violations(self) -> dict[str, np.ndarray]:
        return density_violations(self.states)


def _validate_times(times) -> np.ndarray:
    t = np.asarray(times, dtype=float)
    if t.ndim != 1 or t.size < 1:
        raise ValidationError("time grid must be a non-empty 1-D array")
    if t[0] != 0.0:
        raise ValidationError(f"time grid must start at 0, got {t[0]}")
    if np.any(np.diff(t) <= 0):
        raise ValidationError("time grid must be strictly increasing")
    return t


def _check_snapshots(times: np.ndarray, states: np.ndarray, tol: float = PROPAGATION_TOL, chunk: int = 20000) -> None:
    for lo in range(0, len(states), chunk):
        v = density_violations(states[lo:lo + chunk])
        for what, arr in v.items():
            bad = np.flatnonzero(arr > tol)
            if bad.size:
                i = lo + bad[0]
                raise PropagationError(times[i], arr[bad[0]], what)


def uniform_grid(t_end: float, dt: float) -> np.ndarray:
    """``0, dt, 2 dt, ...`` up to and including ``t_end`` (last step shortened if needed)."""
    if not (dt > 0 and t_end >= 0):
        raise ValidationError(f"need dt > 0 and t_end >= 0, got dt={dt}, t_end={t_end}")
    n = int(math.floor(t_end / dt + 1e-9))
    t = np.arange(n + 1) * dt
    if t_end - t[-1] > 1e-9 * dt:
        t = np.append(t, t_end)
    elif n:
        t[-1] = t_end
    return t


def default_output_step(gamma: float) -> float:
    """Output grid step: 0.005 ps, shrunk to 0.5/gamma for gamma above 1e3 ps^-1."""
    return 0.005 if gamma <= 1e3 else 0.5 / gamma


def propagate_expm(l: Superoperator, rho0: DensityMatrix, times: Sequence[float], validate: bool = True) -> Trajectory:
    """Exact propagation with ``expm(L dt)``, one cached propagator per distinct step."""
    t = _validate_times(times)
    d = l.layout.dimension
    if rho0.layout != l.layout:
        raise ValidationError("initial state and generator use different layouts")
    cache: dict[float, np.ndarray] = {}
    vecs = np.empty((t.size, d * d), dtype=complex)
    vecs[0] = vec(rho0.matrix)
    for i, dt in enumerate(np.diff(t), start=1):
        key = float(f"{dt:.13e}")
        prop = cache.get(key)
        if prop is None:
            prop = cache[key] = linalg.expm(l.matrix * dt)
        vecs[i] = prop @ vecs[i - 1]
    states = unvec(vecs, d)
    if validate:
        _check_snapshots(t, states)
    return Trajectory(t, states, l.layout)


def propagate_rk4(l: Superoperator, rho0: DensityMatrix, t_end: float, dt: float) -> Trajectory:
    """Classical fixed-step RK4 on ``vec(rho)' = L vec(rho)``.

    The trace is not renormalized; a drift above 1e-6 raises
    :class:`StepSizeError`.
    """
    if not dt > 0:
        raise ValidationError(f"dt must be positive, got {dt}")
    scale = l.norm_inf()
    if scale > 0 and dt > 0.1 / scale:
        warnings.warn(f"dt={dt:g} ps exceeds the recommended 0.1/||L||_inf = {0.1 / scale:.3g} ps", RuntimeWarning, stacklevel=2)
    t = uniform_grid(t_end, dt)
    d = l.layout.dimension
    a = l.matrix
    diag = np.arange(d) * (d + 1)
    vecs = np.empty((t.size, d * d), dtype=complex)
    y = vecs[0] = vec(rho0.matrix)
    tr0 = y[diag].sum()
    for i, h in enumerate(np.diff(t), start=1):
        k1 = a @ y
        k2 = a @ (y + 0.5 * h * k1)
        k3 = a @ (y + 0.5 * h * k2)
        k4 = a @ (y + h * k3)
        y = vecs[i] = y + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
        drift = abs(y[diag].sum() - tr0)
        if drift > RK4_DRIFT_TOL:
            raise StepSizeError(f"trace drift {drift:.3e} at t={t[i]:.6g} ps exceeds {RK4_DRIFT_TOL:g}; use a smaller dt")
    return Trajectory(t, unvec(vecs, d), l.layout)


def evolve(m: NetworkModel, gamma, rho0: DensityMatrix, t_end: float, dt: Optional[float] = None) -> Trajectory:
    """Propagate on a uniform grid; ``dt`` defaults to :func:`default_output_step`."""
    gammas = resolve_dephasing(m, gamma)
    if dt is None:
        dt = default_output_step(float(np.max(gammas)))
    return propagate_expm(build_lindbladian(m, gammas), rho0, uniform_grid(t_end, dt))


@dataclass(frozen=True)
class EfficiencyReport:
    eta: float
    method: str
    converged: bool = True
    t_final: float = math.inf
    site_population: float = 0.0

    def as_dict(self) -> dict:
        return {
            "eta": self.eta,
            "method": self.method,
            "converged": self.converged,
            "t_final_ps": None if math.isinf(self.t_final) else self.t_final,
            "site_population": self.site_population,
        }


def efficiency_by_integration(
    m: NetworkModel,
    gamma,
    rho0: DensityMatrix,
    t_max: float = T_MAX_DEFAULT,
    tol: float = DRAIN_TOL,
    step: float = 1.0,
) -> EfficiencyReport:
    """Reaction-centre population once the sites have drained (or at ``t_max``)."""
    if not (t_max > 0 and tol > 0 and step > 0):
        raise ValidationError("t_max, tol and step must be positive")
    l = build_lindbladian(m, gamma)
    layout = l.layout
    d = layout.dimension
    site_diag = layout.site_indices * (d + 1)
    rc = layout.index_rc * (d + 1)
    y = vec(rho0.matrix).astype(complex)
    prop = linalg.expm(l.matrix * step)
    t = 0.0
    remaining = float(np.sum(y[site_diag].real))
    while remaining >= tol and t < t_max:
        h = min(step, t_max - t)
        y = (prop if h == step else linalg.expm(l.matrix * h)) @ y
        t += h
        remaining = float(np.sum(y[site_diag].real))
    eta = float(np.clip(y[rc].real, 0.0, 1.0))
    return EfficiencyReport(eta, "integrate", converged=remaining < tol, t_final=t, site_population=remaining)


def site_block_generator(l: Superoperator) -> np.ndarray:
    """Restriction of ``L`` to the site-site coherences and populations.

    Raises if anything outside the site block feeds back into it.
    """
    idx = l.site_block_indices()
    others = np.setdiff1d(np.arange(l.dim), idx)
    if np.any(l.matrix[np.ix_(idx, others)] != 0):
        raise ValidationError("site block is not autonomous: generator maps |g>/|RC> back into the sites")
    return l.matrix[np.ix_(idx, idx)]


def efficiency_direct(m: NetworkModel, gamma, rho0: DensityMatrix) -> EfficiencyReport:
    """Infinite-time efficiency from one linear solve on the site block.

    ``integral_0^inf sigma dt = -L_site^{-1} sigma(0)`` and the sink collects
    ``2 * sink_rate * integral rho_kk``.
    """
    if m.sink_rate == 0 and not any(m.dissipation_rates):
        raise SingularSystemError(
            "site-block generator is singular without dissipation or sink; use the integration method"
        )
    l = build_lindbladian(m, gamma)
    block = site_block_generator(l)
    n = m.n_sites
    sigma0 = vec(rho0.site_block)
    try:
        x = linalg.solve(block, -sigma0)
    except SingularSystemError as exc:
        raise SingularSystemError(f"{exc}; use the integration method") from exc
    k = m.sink_site - 1
    eta = 2.0 * m.sink_rate * unvec(x, n)[k, k].real
    return EfficiencyReport(float(np.clip(eta, 0.0, 1.0)), "direct")
