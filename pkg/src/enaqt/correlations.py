"""Local quantum uncertainty (LQU) of a qubit against the rest of the network.

Two evaluation routes are provided:

* :func:`lqu_general` works on any qubit-qudit density matrix (qubit-major
  tensor order) through the 3x3 ``W`` matrix built from ``sqrt(rho)`` and the
  Pauli matrices of the qubit.
* :func:`lqu_single_excitation` works directly on the n x n site block of a
  single-excitation state. There only ``W_zz`` survives, so the LQU reduces to
  ``1 - sum_lm sqrt(l_l l_m) |<v_l|D|v_m>|^2`` with ``D = sigma_z (x) 1``
  restricted to the one-excitation states.

:func:`embed_single_excitation` maps a site block into the qubit register so
the two routes can be checked against each other.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
from scipy.ndimage import maximum_filter1d, minimum_filter1d

from . import linalg
from .errors import EmptySiteBlockError, NotPositiveSemidefiniteError, ValidationError

EMPTY_TRACE = 1e-9
TRACE_TOL = 1e-8

PAULI = {
    "x": np.array([[0, 1], [1, 0]], dtype=complex),
    "y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "z": np.array([[1, 0], [0, -1]], dtype=complex),
}


@dataclass(frozen=True)
class PartitionSpec:
    """Party A is one site (the qubit); party B the remaining sites, in order."""

    qubit_site: int = 1
    qudit_sites: tuple[int, ...] = (2, 3)

    def __post_init__(self):
        object.__setattr__(self, "qudit_sites", tuple(int(s) for s in self.qudit_sites))
        if self.qubit_site in self.qudit_sites:
            raise ValidationError(f"qubit site {self.qubit_site} also listed in the qudit party")
        if len(set(self.qudit_sites)) != len(self.qudit_sites):
            raise ValidationError(f"qudit sites repeat: {self.qudit_sites}")

    @classmethod
    def default(cls, n_sites: int, qubit_site: int = 1) -> "PartitionSpec":
        return cls(qubit_site, tuple(s for s in range(1, n_sites + 1) if s != qubit_site))

    @property
    def order(self) -> tuple[int, ...]:
        return (self.qubit_site,) + self.qudit_sites

    def check_covers(self, n_sites: int) -> None:
        if sorted(self.order) != list(range(1, n_sites + 1)):
            raise ValidationError(f"partition {self.order} does not cover sites 1..{n_sites} exactly once")


@dataclass(frozen=True, eq=False)
class LquResult:
    value: float
    w_matrix: np.ndarray
    lambda_max: float
    method: str

    def as_dict(self) -> dict:
        return {
            "lqu": self.value,
            "lambda_max": self.lambda_max,
            "w_matrix": self.w_matrix.tolist(),
            "method": self.method,
        }


def lqu_general(rho_ab, d: Optional[int] = None) -> LquResult:
    """LQU of qubit A for a state on C^2 (x) C^d, qubit-major ordering."""
    rho = linalg.as_matrix(rho_ab, "rho_ab")
    if rho.shape[0] != rho.shape[1] or rho.shape[0] % 2:
        raise ValidationError(f"rho_ab must be square with even dimension, got shape {rho.shape}")
    if d is None:
        d = rho.shape[0] // 2
    if rho.shape[0] != 2 * d:
        raise ValidationError(f"rho_ab is {rho.shape[0]}x{rho.shape[0]}, expected {2 * d}x{2 * d} for d={d}")
    tr = np.trace(rho).real
    if abs(tr - 1.0) > TRACE_TOL:
        raise ValidationError(f"rho_ab must have unit trace, got {tr:.12g}")
    root = linalg.sqrtm_psd(rho)
    eye = np.eye(d)
    ops = [np.kron(PAULI[a], eye) for a in "xyz"]
    left = [root @ op for op in ops]
    w = np.empty((3, 3))
    for i in range(3):
        for j in range(3):
            w[i, j] = np.real(np.trace(left[i] @ left[j]))
    w = 0.5 * (w + w.T)
    lam = float(np.linalg.eigvalsh(w)[-1])
    return LquResult(1.0 - lam, w, lam, "general")


def _sigma_z_diag(n: int, qubit_site: int) -> np.ndarray:
    # sigma_z |excited> = -|excited>: -1 on the qubit site, +1 elsewhere
    dvec = np.ones(n)
    dvec[qubit_site - 1] = -1.0
    return dvec


def _prepare_blocks(blocks: np.ndarray, normalize: bool):
    blocks = np.asarray(blocks, dtype=complex)
    traces = np.real(np.trace(blocks, axis1=-2, axis2=-1))
    if normalize:
        empty = traces <= EMPTY_TRACE
        safe = np.where(empty, 1.0, traces)
        blocks = blocks / safe[..., None, None]
    else:
        empty = np.zeros(traces.shape, dtype=bool)
    return blocks, empty


def _w_zz(blocks: np.ndarray, dvec: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    herm = 0.5 * (blocks + np.swapaxes(blocks, -1, -2).conj())
    lam, v = np.linalg.eigh(herm)
    m = np.swapaxes(v, -1, -2).conj() @ (dvec[:, None] * v)
    root = np.sqrt(np.clip(lam, 0.0, None))
    wzz = np.einsum("...l,...m,...lm->...", root, root, np.abs(m) ** 2)
    return wzz, lam[..., 0]


def lqu_single_excitation(site_block, normalize: bool = True, qubit_site: int = 1) -> LquResult:
    """LQU of one site against the others for a single-excitation site block."""
    block = linalg.as_matrix(site_block, "site_block")
    n = block.shape[0]
    if block.shape != (n, n):
        raise ValidationError(f"site block must be square, got shape {block.shape}")
    if not 1 <= qubit_site <= n:
        raise ValidationError(f"qubit_site must be in 1..{n}, got {qubit_site}")
    dev = linalg.max_abs(block - block.conj().T)
    if dev >= linalg.HERMITIAN_TOL:
        raise ValidationError(f"site block must be Hermitian (defect {dev:.3e})")
    prepared, empty = _prepare_blocks(block, normalize)
    if empty:
        raise EmptySiteBlockError(f"site block trace {np.trace(block).real:.3e} is too small to normalize")
    wzz, min_eig = _w_zz(prepared, _sigma_z_diag(n, qubit_site))
    if min_eig < -linalg.PSD_TOL:
        raise NotPositiveSemidefiniteError(min_eig)
    wzz = float(wzz)
    w = np.zeros((3, 3))
    w[2, 2] = wzz
    return LquResult(1.0 - wzz, w, wzz, "single_excitation")


def lqu_series(site_blocks, normalize: bool = True, qubit_site: int = 1) -> np.ndarray:
    """Vectorized :func:`lqu_single_excitation` over a stack of site blocks.

    With ``normalize`` set, blocks whose trace is below 1e-9 yield NaN
    (LQU undefined).
    """
    blocks = np.asarray(site_blocks, dtype=complex)
    n = blocks.shape[-1]
    prepared, empty = _prepare_blocks(blocks, normalize)
    wzz, _ = _w_zz(prepared, _sigma_z_diag(n, qubit_site))
    out = 1.0 - wzz
    out[empty] = np.nan
    return out


def embed_single_excitation(site_block, partition: Optional[PartitionSpec] = None) -> np.ndarray:
    """Place an n x n single-excitation block into the 2^n-dimensional register.

    Site ``i`` becomes the product state with only qubit ``i`` excited; qubits
    are ordered as ``partition.order`` so that party A is the leading factor.
    """
    block = linalg.as_matrix(site_block, "site_block")
    n = block.shape[0]
    if block.shape != (n, n):
        raise ValidationError(f"site block must be square, got shape {block.shape}")
    partition = partition or PartitionSpec.default(n)
    partition.check_covers(n)
    position = {site: p for p, site in enumerate(partition.order)}
    idx = np.array([1 << (n - 1 - position[s]) for s in range(1, n + 1)])
    out = np.zeros((1 << n, 1 << n), dtype=complex)
    out[np.ix_(idx, idx)] = block
    return out


def with_lqu(traj, normalize: bool = False, qubit_site: int = 1, name: str = "lqu"):
    """Attach the LQU series of a trajectory's site blocks as an observable."""
    return traj.with_observable(name, lqu_series(traj.site_blocks, normalize, qubit_site))


@dataclass(frozen=True)
class FluxResult:
    phi: float
    t_star: float
    plateau_found: bool
    lqu_start: float
    lqu_end: float
    tail_undefined: bool = False

    def as_dict(self) -> dict:
        return {
            "phi_lqu": self.phi,
            "t_star_ps": self.t_star,
            "plateau_found": self.plateau_found,
            "lqu_start": self.lqu_start,
            "lqu_end": self.lqu_end,
            "tail_undefined": self.tail_undefined,
        }


def _window_variation(u: np.ndarray, size: int) -> np.ndarray:
    """max - min of ``u[i:i+size]`` for every full window start ``i``."""
    shift = size // 2
    hi = maximum_filter1d(u, size=size, mode="nearest")
    lo = minimum_filter1d(u, size=size, mode="nearest")
    starts = np.arange(u.size - size + 1)
    return hi[starts + shift] - lo[starts + shift]


def find_plateau(times: np.ndarray, u: np.ndarray, window: float, tol: float) -> Optional[int]:
    """Earliest index after which every ``window``-long stretch varies by < ``tol``."""
    steps = np.diff(times)
    if steps.size == 0:
        return None
    dt = float(np.median(steps))
    if np.max(np.abs(steps - dt)) > 1e-6 * dt + 1e-12:
        raise ValidationError("plateau detection needs a uniform time grid")
    size = int(round(window / dt)) + 1
    if size > u.size:
        return None
    ok = _window_variation(u, size) < tol
    if not ok[-1]:
        return None
    bad = np.flatnonzero(~ok)
    return 0 if bad.size == 0 else int(bad[-1] + 1)


def lqu_flux(traj, plateau_window: float = 2.0, plateau_tol: float = 1e-3, name: str = "lqu") -> FluxResult:
    """Late-time minus initial LQU along a trajectory.

    "Late time" is the start of the first stretch after which the series stays
    within ``plateau_tol`` over every ``plateau_window``; when no such stretch
    exists the last sample is used. If the series becomes undefined (drained
    site block) only the defined prefix is considered and the result is flagged.
    """
    if name not in traj.observables:
        raise ValidationError(f"trajectory has no {name!r} observable")
    t = np.asarray(traj.times, dtype=float)
    u = np.asarray(traj.observables[name], dtype=float)
    if not plateau_window > 0 or plateau_window >= t[-1] - t[0]:
        raise ValidationError(f"plateau window {plateau_window} must be positive and shorter than the trajectory span")
    if math.isnan(u[0]):
        raise ValidationError("LQU is undefined at the start of the trajectory")
    undefined = np.flatnonzero(np.isnan(u))
    tail_undefined = undefined.size > 0
    last = (undefined[0] - 1) if tail_undefined else u.size - 1
    i = find_plateau(t[: last + 1], u[: last + 1], plateau_window, plateau_tol)
    found = i is not None
    k = i if found else last
    return FluxResult(float(u[k] - u[0]), float(t[k]), found, float(u[0]), float(u[k]), tail_undefined)
