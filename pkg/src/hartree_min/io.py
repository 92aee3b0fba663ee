"""Versioned containers, the ground-state cache, records and CSV output.

Container layout: one header line, one line with the byte length of the
metadata block, the metadata block (``key = value`` lines, UTF-8), then the
raw fields as little-endian float64 in C order.
"""
from __future__ import annotations

import csv
import logging
import os
from pathlib import Path
from typing import IO, Iterable, Mapping

import numpy as np

from .grid import Field, make_grid

log = logging.getLogger(__name__)

GS_HEADER = "HARTREE-GS-1"
MIN_HEADER = "HARTREE-MIN-1"
RECORD_HEADER = "HARTREE-RECORD-1"
CACHE_ENV = "HARTREE_CACHE_DIR"


class ContainerError(ValueError):
    pass


def _fmt(v) -> str:
    if v is None:
        return "none"
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    return str(v)


def format_record(items: Mapping, header: str = RECORD_HEADER) -> str:
    lines = [header] + [f"{k}: {_fmt(v)}" for k, v in items.items()]
    return "\n".join(lines) + "\n"


def parse_record(text: str) -> tuple[str, dict[str, str]]:
    lines = text.splitlines()
    if not lines:
        raise ContainerError("empty record")
    out = {}
    for line in lines[1:]:
        if not line.strip():
            continue
        key, sep, value = line.partition(": ")
        if not sep:
            raise ContainerError(f"malformed record line {line!r}")
        out[key] = value
    return lines[0], out


def write_container(path: Path, header: str, meta: Mapping, fields: Iterable[np.ndarray]) -> None:
    arrays = [np.ascontiguousarray(f, dtype="<f8") for f in fields]
    meta = dict(meta)
    meta["fields"] = len(arrays)
    block = "".join(f"{k} = {_fmt(v)}\n" for k, v in meta.items()).encode()
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_suffix(path.suffix + ".tmp")
    with open(tmp, "wb") as fh:
        fh.write(header.encode() + b"\n")
        fh.write(f"{len(block)}\n".encode())
        fh.write(block)
        for a in arrays:
            fh.write(a.tobytes())
    os.replace(tmp, path)


def read_container(path: Path, header: str) -> tuple[dict[str, str], list[np.ndarray]]:
    data = Path(path).read_bytes()
    first, _, rest = data.partition(b"\n")
    if first.decode(errors="replace") != header:
        raise ContainerError(f"{path}: expected header {header!r}, found {first[:40]!r}")
    size_line, _, rest = rest.partition(b"\n")
    try:
        size = int(size_line)
    except ValueError as exc:
        raise ContainerError(f"{path}: bad metadata length") from exc
    block, raw = rest[:size].decode(), rest[size:]
    meta = {}
    for line in block.splitlines():
        key, sep, value = line.partition(" = ")
        if not sep:
            raise ContainerError(f"{path}: malformed metadata line {line!r}")
        meta[key] = value
    count = int(meta.get("fields", 0))
    n = int(meta["n"])
    per = n**3
    flat = np.frombuffer(raw, dtype="<f8")
    if flat.size != count * per:
        raise ContainerError(f"{path}: expected {count} fields of {n}^3 samples, found {flat.size} values")
    return meta, [flat[i * per:(i + 1) * per].reshape(n, n, n).astype(float) for i in range(count)]


# ground-state cache -------------------------------------------------------------

def cache_dir() -> Path:
    root = os.environ.get(CACHE_ENV)
    return Path(root) if root else Path.home() / ".cache" / "hartree-min"


def cache_path(n: int, box_length: float, root: Path | None = None) -> Path:
    return (root or cache_dir()) / f"gs_n{n}_L{box_length!r}.bin"


def save_ground_state(gs, path: Path) -> None:
    meta = {
        "n": gs.solve_grid.n,
        "solve_box": gs.solve_grid.box_length,
        "q_box": gs.q.grid.box_length,
        "a_star": gs.a_star,
        "weinstein_min": gs.weinstein_min,
        "pohozaev_residual": gs.pohozaev_residual,
        "decay_constant": gs.decay_constant,
        "el_residual": gs.el_residual,
        "gauge": gs.gauge,
        "iterations": gs.iterations,
    }
    write_container(path, GS_HEADER, meta, [gs.q.values])


def load_ground_state(path: Path):
    from .ground_state import GroundState

    meta, (q,) = read_container(path, GS_HEADER)
    n = int(meta["n"])
    return GroundState(
        q=Field(make_grid(n, float(meta["q_box"])), q),
        a_star=float(meta["a_star"]),
        weinstein_min=float(meta["weinstein_min"]),
        pohozaev_residual=float(meta["pohozaev_residual"]),
        decay_constant=float(meta["decay_constant"]),
        el_residual=float(meta["el_residual"]),
        solve_grid=make_grid(n, float(meta["solve_box"])),
        gauge=float(meta["gauge"]),
        iterations=int(meta["iterations"]),
    )


def get_ground_state(n: int = 64, box_length: float = 32.0, root: Path | None = None,
                     recompute: bool = False, **solver_kw):
    """Load Q for (n, L) from the cache, solving and storing it when missing."""
    from .ground_state import solve_scalar_ground_state

    path = cache_path(n, float(box_length), root)
    if path.exists() and not recompute:
        try:
            return load_ground_state(path)
        except (ContainerError, KeyError, ValueError) as exc:
            log.warning("ignoring unreadable cache %s: %s", path, exc)
    gs = solve_scalar_ground_state(make_grid(n, box_length), **solver_kw)
    save_ground_state(gs, path)
    return gs


# minimizer results -----------------------------------------------------------------

def result_scalars(res) -> dict:
    return {
        "energy": res.energy,
        "mu1": res.mu1,
        "mu2": res.mu2,
        "el_residual1": res.el_residual1,
        "el_residual2": res.el_residual2,
        "converged": res.converged,
        "diverged": res.diverged,
        "reason": res.reason,
        "iterations": res.iterations,
        "min_sample": res.min_sample,
        "warning": res.warning,
    }


def save_result(res, path: Path, config_text: str = "", with_fields: bool = True) -> None:
    g = res.u1.grid
    meta = {"n": g.n, "box": g.box_length, **result_scalars(res)}
    if config_text:
        meta["config"] = config_text.strip().replace("\n", "; ")
    fields = [f.values for f in res.fields] if with_fields else []
    write_container(path, MIN_HEADER, meta, fields)


def write_csv(stream: IO[str], header: list[str], rows: Iterable[Iterable]) -> None:
    w = csv.writer(stream, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([_fmt(v) for v in row])
