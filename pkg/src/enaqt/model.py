"""Excitonic network model, basis layout, density matrices and config files.

Energies and couplings are kept in cm^-1 and rates in ps^-1; conversion to
angular frequency happens only when the Lindbladian is assembled.

The full state space is ordered ``|g>, |1>, ..., |n>, |RC>``. Code outside
this module should go through :class:`BasisLayout` rather than hard-coding
indices.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Mapping, Optional, Sequence

import numpy as np

from .errors import ValidationError

SPEED_OF_LIGHT_CM_PS = 0.0299792458
#: hbar expressed in cm^-1 ps, i.e. 1 / (2 pi c) ~= 5.3089
HBAR_CM1_PS = 1.0 / (2.0 * math.pi * SPEED_OF_LIGHT_CM_PS)

SYMMETRY_TOL = 1e-12
DM_HERMITIAN_TOL = 1e-10
DM_TRACE_TOL = 1e-8
DM_EIGEN_TOL = 1e-8


def wavenumber_to_angular_rate(x: float, hbar: float = HBAR_CM1_PS) -> float:
    """Convert an energy in cm^-1 into an angular rate in ps^-1 (``x / hbar``)."""
    if not hbar > 0:
        raise ValidationError(f"hbar must be positive, got {hbar}")
    return x / hbar


def _per_site(value, n: int, name: str) -> tuple[float, ...]:
    arr = np.atleast_1d(np.asarray(value, dtype=float))
    if arr.size == 1:
        arr = np.full(n, float(arr[0]))
    if arr.shape != (n,):
        raise ValidationError(f"{name} must be a scalar or a length-{n} array, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)) or np.any(arr < 0):
        raise ValidationError(f"{name} must be finite and nonnegative, got {arr.tolist()}")
    return tuple(float(x) for x in arr)


@dataclass(frozen=True)
class NetworkModel:
    """Tight-binding network plus dephasing, dissipation and sink rates.

    ``sink_site`` is 1-based. ``dephasing_rates`` may be ``None`` when the
    dephasing strength is supplied per experiment.
    """

    energies: tuple[float, ...]
    couplings: tuple[tuple[float, ...], ...]
    dissipation_rates: tuple[float, ...]
    sink_site: int
    sink_rate: float
    dephasing_rates: Optional[tuple[float, ...]] = None
    hbar: float = HBAR_CM1_PS

    def __post_init__(self):
        energies = np.asarray(self.energies, dtype=float)
        if energies.ndim != 1 or energies.size < 2:
            raise ValidationError(f"energies must list at least 2 sites, got {self.energies!r}")
        if not np.all(np.isfinite(energies)):
            raise ValidationError("energies must be finite")
        n = energies.size
        v = np.asarray(self.couplings, dtype=float)
        if v.shape != (n, n):
            raise ValidationError(f"couplings must be a {n}x{n} matrix, got shape {v.shape}")
        if not np.all(np.isfinite(v)):
            raise ValidationError("couplings must be finite")
        if np.max(np.abs(np.diag(v))) > 0:
            raise ValidationError("couplings must have a zero diagonal")
        asym = np.max(np.abs(v - v.T))
        if asym > SYMMETRY_TOL * max(1.0, np.max(np.abs(v))):
            raise ValidationError(f"couplings must be symmetric (max |V_ij - V_ji| = {asym:.3e})")
        v = 0.5 * (v + v.T)
        if not (isinstance(self.sink_site, (int, np.integer)) and 1 <= self.sink_site <= n):
            raise ValidationError(f"sink_site must be an integer in 1..{n}, got {self.sink_site!r}")
        if not (math.isfinite(self.sink_rate) and self.sink_rate >= 0):
            raise ValidationError(f"sink_rate must be finite and nonnegative, got {self.sink_rate}")
        if not (math.isfinite(self.hbar) and self.hbar > 0):
            raise ValidationError(f"hbar must be positive, got {self.hbar}")
        set_ = object.__setattr__
        set_(self, "energies", tuple(float(x) for x in energies))
        set_(self, "couplings", tuple(tuple(float(x) for x in row) for row in v))
        set_(self, "dissipation_rates", _per_site(self.dissipation_rates, n, "dissipation_rates"))
        if self.dephasing_rates is not None:
            set_(self, "dephasing_rates", _per_site(self.dephasing_rates, n, "dephasing_rates"))
        set_(self, "sink_site", int(self.sink_site))
        set_(self, "sink_rate", float(self.sink_rate))
        set_(self, "hbar", float(self.hbar))

    @property
    def n_sites(self) -> int:
        return len(self.energies)

    @property
    def layout(self) -> "BasisLayout":
        return BasisLayout(self.n_sites)

    def replace(self, **changes) -> "NetworkModel":
        fields_ = dict(
            energies=self.energies,
            couplings=self.couplings,
            dissipation_rates=self.dissipation_rates,
            sink_site=self.sink_site,
            sink_rate=self.sink_rate,
            dephasing_rates=self.dephasing_rates,
            hbar=self.hbar,
        )
        fields_.update(changes)
        return NetworkModel(**fields_)


def fmo3_preset(hbar: float = HBAR_CM1_PS) -> NetworkModel:
    """Sites 1-3 of the FMO complex with the sink attached to site 3."""
    return NetworkModel(
        energies=(215.0, 220.0, 0.0),
        couplings=(
            (0.0, -104.1, 5.1),
            (-104.1, 0.0, 32.6),
            (5.1, 32.6, 0.0),
        ),
        dissipation_rates=(5.0e-4,) * 3,
        sink_site=3,
        sink_rate=1.0,
        dephasing_rates=None,
        hbar=hbar,
    )


def build_hamiltonian(m: NetworkModel) -> np.ndarray:
    """Site-basis Hamiltonian in cm^-1 (n x n, real symmetric)."""
    h = np.array(m.couplings, dtype=complex)
    h[np.diag_indices(m.n_sites)] = m.energies
    return h


@dataclass(frozen=True)
class BasisLayout:
    """Index map for ``|g>, |1>, ..., |n>, |RC>``."""

    n_sites: int

    index_g: int = field(default=0, init=False)

    @property
    def dimension(self) -> int:
        return self.n_sites + 2

    @property
    def index_rc(self) -> int:
        return self.n_sites + 1

    def index_site(self, i: int) -> int:
        if not 1 <= i <= self.n_sites:
            raise ValidationError(f"site index must be in 1..{self.n_sites}, got {i}")
        return i

    @property
    def site_indices(self) -> np.ndarray:
        return np.arange(1, self.n_sites + 1)

    def embed_sites(self, block: np.ndarray) -> np.ndarray:
        """Place an n x n site-basis operator into the full space."""
        full = np.zeros((self.dimension, self.dimension), dtype=complex)
        idx = self.site_indices
        full[np.ix_(idx, idx)] = block
        return full


def density_violations(matrices: np.ndarray) -> dict[str, np.ndarray]:
    """Per-matrix invariant violations for a stack of shape (..., d, d).

    Returns the Hermiticity defect, trace defect and the negative part of the
    smallest eigenvalue.
    """
    a = np.asarray(matrices, dtype=complex)
    herm = np.max(np.abs(a - np.swapaxes(a, -1, -2).conj()), axis=(-1, -2))
    trace = np.abs(np.trace(a, axis1=-2, axis2=-1) - 1.0)
    sym = 0.5 * (a + np.swapaxes(a, -1, -2).conj())
    min_eig = np.linalg.eigvalsh(sym)[..., 0]
    return {"hermiticity": herm, "trace": trace, "negativity": np.maximum(-min_eig, 0.0)}


@dataclass(frozen=True, eq=False)
class DensityMatrix:
    layout: BasisLayout
    matrix: np.ndarray

    def __post_init__(self):
        m = np.array(self.matrix, dtype=complex)
        d = self.layout.dimension
        if m.shape != (d, d):
            raise ValidationError(f"density matrix must be {d}x{d}, got shape {m.shape}")
        if not np.all(np.isfinite(m)):
            raise ValidationError("density matrix contains NaN or Inf entries")
        v = density_violations(m)
        if v["hermiticity"] >= DM_HERMITIAN_TOL:
            raise ValidationError(f"density matrix is not Hermitian (defect {float(v['hermiticity']):.3e})")
        if v["trace"] > DM_TRACE_TOL:
            raise ValidationError(f"density matrix trace deviates from 1 by {float(v['trace']):.3e}")
        if v["negativity"] > DM_EIGEN_TOL:
            raise ValidationError(f"density matrix has eigenvalue {-float(v['negativity']):.3e} < -{DM_EIGEN_TOL:g}")
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    @property
    def populations(self) -> np.ndarray:
        return np.diag(self.matrix).real.copy()

    @property
    def site_block(self) -> np.ndarray:
        idx = self.layout.site_indices
        return self.matrix[np.ix_(idx, idx)].copy()

    def purity(self) -> float:
        return float(np.real(np.trace(self.matrix @ self.matrix)))


def localized_state(m: NetworkModel, site: int) -> DensityMatrix:
    """``|site><site|`` in the full (n + 2)-dimensional space."""
    layout = m.layout
    i = layout.index_site(site)
    rho = np.zeros((layout.dimension, layout.dimension), dtype=complex)
    rho[i, i] = 1.0
    return DensityMatrix(layout, rho)


# -- config files -----------------------------------------------------------

CONFIG_KEYS = (
    "energies_cm1",
    "couplings_cm1",
    "dephasing_ps1",
    "dissipation_ps1",
    "sink_site",
    "sink_rate_ps1",
    "initial_site",
    "hbar_cm1_ps",
)
REQUIRED_KEYS = ("energies_cm1", "couplings_cm1", "sink_site", "sink_rate_ps1")


@dataclass(frozen=True)
class RunConfig:
    model: NetworkModel
    initial_site: int = 1

    def __post_init__(self):
        self.model.layout.index_site(self.initial_site)


def _compact_rates(rates: Sequence[float]):
    return rates[0] if len(set(rates)) == 1 else list(rates)


def config_to_dict(cfg: RunConfig) -> dict[str, Any]:
    m = cfg.model
    out: dict[str, Any] = {
        "energies_cm1": list(m.energies),
        "couplings_cm1": [list(r) for r in m.couplings],
        "dissipation_ps1": _compact_rates(m.dissipation_rates),
        "sink_site": m.sink_site,
        "sink_rate_ps1": m.sink_rate,
        "initial_site": cfg.initial_site,
        "hbar_cm1_ps": m.hbar,
    }
    if m.dephasing_rates is not None:
        out["dephasing_ps1"] = _compact_rates(m.dephasing_rates)
    return out


def config_from_dict(data: Mapping[str, Any]) -> RunConfig:
    if not isinstance(data, Mapping):
        raise ValidationError("config must be a JSON object")
    unknown = [k for k in data if k not in CONFIG_KEYS]
    if unknown:
        raise ValidationError(f"unknown config key {unknown[0]!r} (allowed: {', '.join(CONFIG_KEYS)})")
    missing = [k for k in REQUIRED_KEYS if k not in data]
    if missing:
        raise ValidationError(f"missing required config key {missing[0]!r}")
    try:
        model = NetworkModel(
            energies=tuple(data["energies_cm1"]),
            couplings=tuple(tuple(r) for r in data["couplings_cm1"]),
            dissipation_rates=data.get("dissipation_ps1", 0.0),
            sink_site=data["sink_site"],
            sink_rate=float(data["sink_rate_ps1"]),
            dephasing_rates=data.get("dephasing_ps1"),
            hbar=float(data.get("hbar_cm1_ps", HBAR_CM1_PS)),
        )
    except (TypeError, ValueError) as exc:
        if isinstance(exc, ValidationError):
            raise
        raise ValidationError(f"malformed config value: {exc}") from exc
    initial = data.get("initial_site", 1)
    if not isinstance(initial, int) or isinstance(initial, bool):
        raise ValidationError(f"initial_site must be an integer, got {initial!r}")
    return RunConfig(model, initial)


def load_config(path) -> RunConfig:
    text = Path(path).read_text()
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ValidationError(f"{path}: invalid JSON ({exc})") from exc
    return config_from_dict(data)


def dump_config(cfg: RunConfig, path) -> None:
    Path(path).write_text(json.dumps(config_to_dict(cfg), indent=2) + "\n")
