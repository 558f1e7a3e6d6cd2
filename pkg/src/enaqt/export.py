"""CSV and JSON writers. All numbers are written with 12 significant digits."""
from __future__ import annotations

import csv
import io
import json
import math
from pathlib import Path
from typing import Any, Iterable, Sequence

from . import __version__


def fmt(x: float) -> str:
    return f"{float(x):.12g}"


def _jsonable(x: Any) -> Any:
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if hasattr(x, "tolist"):
        return _jsonable(x.tolist())
    if isinstance(x, float):
        if math.isnan(x) or math.isinf(x):
            return None
        return float(fmt(x))
    return x


def _write_rows(path, header: Sequence[str], rows: Iterable[Sequence[str]]) -> None:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    Path(path).write_text(buf.getvalue())


def trajectory_header(n_sites: int, with_lqu: bool) -> list[str]:
    cols = ["t_ps", "p_g"] + [f"p{i}" for i in range(1, n_sites + 1)] + ["p_rc"]
    return cols + (["lqu"] if with_lqu else [])


def write_trajectory_csv(traj, path, with_lqu: bool = True) -> None:
    with_lqu = with_lqu and "lqu" in traj.observables
    pops = traj.populations
    lqu = traj.observables.get("lqu")
    rows = []
    for i, t in enumerate(traj.times):
        row = [fmt(t)] + [fmt(p) for p in pops[i]]
        if with_lqu:
            row.append(fmt(lqu[i]))
        rows.append(row)
    _write_rows(path, trajectory_header(traj.layout.n_sites, with_lqu), rows)


SWEEP_HEADER = ["gamma_ps1", "eta", "phi_lqu", "t_star_ps", "plateau_found"]


def write_sweep_csv(result, path) -> None:
    rows = []
    for p in result.points:
        f = p.flux
        rows.append([
            fmt(p.gamma),
            fmt(p.eta),
            fmt(f.phi) if f else "nan",
            fmt(f.t_star) if f else "nan",
            str(int(f.plateau_found)) if f else "",
        ])
    _write_rows(path, SWEEP_HEADER, rows)


def write_json(data: dict, path=None) -> str:
    payload = dict(_jsonable(data))
    payload.setdefault("version", __version__)
    text = json.dumps(payload, indent=2, sort_keys=False) + "\n"
    if path is not None:
        Path(path).write_text(text)
    return text
