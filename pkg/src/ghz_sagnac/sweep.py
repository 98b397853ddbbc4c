"""
Deterministic parameter sweeps that regenerate every figure as a table.

A :class:`SweepSpec` fully describes a run.  Grid points are evaluated
independently (optionally in a process pool) and collated by index, so the
table body never depends on the worker count.  Tables are written as CSV with
a ``#``-prefixed ``key=value`` metadata block; the ``spec.*`` lines in that
block can be fed back through ``--config`` to reproduce the run.
"""

from __future__ import annotations

import logging
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from . import __version__
from .core import DriveProfile, PhysicalParams, SpinBranch
from .errors import CapacityError, DomainError, SagnacError
from .evolution import branch_state, fock_distribution, ground_fidelity
from .metrology import GhzModel, qcrb, qfi_coherent_spin, qfi_exact, qfi_truncated_analytic, scaling_exponent
from .parity import (
    parity_expectation_exact,
    parity_moments_truncated,
    rotation_precision,
    rotation_precision_coherent_spin,
    rotation_precision_truncated,
)

log = logging.getLogger(__name__)

AXIS_NAMES = ("omega_s", "omega_p", "N")
ENGINES = ("exact", "truncated", "both")
COMMANDS = ("phase-diagram", "fock-histogram", "qfi-scaling", "parity-scan", "precision-scaling")
QFI_AGREEMENT_RTOL = 1e-6
PARITY_AGREEMENT_ATOL = 1e-9
OPERATING_MARGIN = 0.3
MAX_POINTS = 1_000_000
MAX_HISTOGRAM_NMAX = 10_000


@dataclass(frozen=True)
class Axis:
    """One grid axis: ``count`` points from ``start`` to ``stop``, linear or log spaced."""

    name: str
    start: float
    stop: float
    count: int
    log: bool = False

    def __post_init__(self):
        if self.name not in AXIS_NAMES:
            raise DomainError(f"axis name must be one of {AXIS_NAMES}, got {self.name!r}")
        if self.count < 2:
            raise DomainError(f"axis {self.name} needs at least 2 points, got {self.count}")
        if self.log and not (self.start > 0 and self.stop > 0):
            raise DomainError(f"log spacing on {self.name} needs positive bounds")
        if self.name == "N" and min(self.start, self.stop) < 1:
            raise DomainError("particle numbers must be >= 1")

    @classmethod
    def parse(cls, name: str, text: str) -> "Axis":
        """Parse ``min:max:count[:log]``."""
        parts = text.strip().split(":")
        if len(parts) not in (3, 4) or (len(parts) == 4 and parts[3] not in ("log", "lin")):
            raise DomainError(f"grid must look like min:max:count[:log], got {text!r}")
        try:
            start, stop, count = float(parts[0]), float(parts[1]), int(parts[2])
        except ValueError:
            raise DomainError(f"grid must look like min:max:count[:log], got {text!r}") from None
        return cls(name, start, stop, count, len(parts) == 4 and parts[3] == "log")

    def values(self) -> list:
        if self.log:
            pts = np.geomspace(self.start, self.stop, self.count)
        else:
            pts = np.linspace(self.start, self.stop, self.count)
        if self.name != "N":
            return [float(v) for v in pts]
        out = []
        for v in pts:
            n = int(round(v))
            if n not in out:
                out.append(n)
        return out

    def __str__(self):
        text = f"{_fmt(self.start)}:{_fmt(self.stop)}:{self.count}"
        return text + ":log" if self.log else text


@dataclass(frozen=True)
class SweepSpec:
    """Everything needed to reproduce one table.

    ``omega_s`` empty means "choose automatically" (precision-scaling only);
    the chosen value is written back before the table is produced.
    """

    command: str
    axes: tuple = ()
    omega_s: tuple = (0.1,)
    omega_p: tuple = (0.5,)
    n_particles: int = 5
    engine: str = "both"
    branch: str = "up"
    nmax: int = 40
    dt: Optional[float] = None
    workers: int = 1
    out: str = "-"

    def __post_init__(self):
        if self.command not in COMMANDS:
            raise DomainError(f"unknown command {self.command!r}")
        if self.engine not in ENGINES:
            raise DomainError(f"engine must be one of {ENGINES}, got {self.engine!r}")
        if self.workers < 1:
            raise DomainError(f"workers must be >= 1, got {self.workers}")
        if self.n_particles < 1:
            raise DomainError(f"n_particles must be >= 1, got {self.n_particles}")
        SpinBranch.parse(self.branch)

    def axis(self, name: str) -> Axis:
        for ax in self.axes:
            if ax.name == name:
                return ax
        raise DomainError(f"{self.command} needs a grid on {name}")

    def items(self) -> list:
        """Flat ``(key, text)`` pairs, the same keys accepted by config files."""
        return [
            ("command", self.command),
            ("grid", ";".join(f"{ax.name}={ax}" for ax in self.axes)),
            ("omega_s", ",".join(_fmt(v) for v in self.omega_s) or "auto"),
            ("omega_p", ",".join(_fmt(v) for v in self.omega_p)),
            ("n_particles", str(self.n_particles)),
            ("engine", self.engine),
            ("branch", self.branch),
            ("nmax", str(self.nmax)),
            ("dt", "" if self.dt is None else _fmt(self.dt)),
            ("workers", str(self.workers)),
            ("out", self.out),
        ]

    @property
    def wants_exact(self) -> bool:
        return self.engine in ("exact", "both")

    @property
    def wants_truncated(self) -> bool:
        return self.engine in ("truncated", "both")


@dataclass
class ResultTable:
    """Rectangular table plus an ordered metadata block."""

    columns: list
    rows: list
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        width = len(self.columns)
        for i, row in enumerate(self.rows):
            if len(row) != width:
                raise ValueError(f"row {i} has {len(row)} cells, expected {width}")

    def column(self, name: str) -> list:
        idx = self.columns.index(name)
        return [row[idx] for row in self.rows]

    def body(self) -> str:
        lines = [",".join(self.columns)]
        lines.extend(",".join(_cell(v) for v in row) for row in self.rows)
        return "\n".join(lines) + "\n"

    def to_csv(self) -> str:
        head = "".join(f"# {k}={v}\n" for k, v in self.metadata.items())
        return head + self.body()

    @classmethod
    def from_csv(cls, text: str) -> "ResultTable":
        meta, lines = {}, []
        for line in text.splitlines():
            if line.startswith("#"):
                key, _, value = line[1:].strip().partition("=")
                meta[key] = value
            elif line.strip():
                lines.append(line)
        columns = lines[0].split(",")
        rows = [[_parse_cell(c) for c in line.split(",")] for line in lines[1:]]
        return cls(columns, rows, meta)


def _fmt(x: float) -> str:
    return f"{x:.12g}"


def _cell(v) -> str:
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return str(int(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return _fmt(float(v))


def _parse_cell(text: str):
    if text == "":
        return None
    try:
        return int(text)
    except ValueError:
        return float(text)


def run_points(fn, points: list, workers: int = 1) -> list:
    """Evaluate ``fn`` on every point; results come back in input order."""
    if workers <= 1 or len(points) < 2:
        return [fn(p) for p in points]
    chunk = max(1, math.ceil(len(points) / (workers * 8)))
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, points, chunksize=chunk))


def _guarded(fn, *args):
    """Call ``fn``; return ``(value, None)`` or ``(None, message)`` on a package error."""
    try:
        return fn(*args), None
    except SagnacError as exc:
        return None, f"{type(exc).__name__}: {exc}"


# --- per-point workers (module level so a process pool can pickle them) ---


def _phase_point(point):
    ws, wp = point
    if wp <= 0:
        return (ws, wp, None, None), "omega_p=0: total time diverges; point skipped"
    model = GhzModel.constant(ws, wp, 1)
    up, down = model.branches()
    return (ws, wp, ground_fidelity(up), ground_fidelity(down)), None


def _qfi_point(point):
    ws, wp, n, engine = point
    model = GhzModel.constant(ws, wp, n)
    errors = []
    exact = trunc = css = None
    if engine in ("exact", "both"):
        exact, err = _guarded(lambda: qfi_exact(model).value)
        errors.append(err)
        css, err = _guarded(lambda: qfi_coherent_spin(model).value)
        errors.append(err)
    if engine in ("truncated", "both"):
        trunc, err = _guarded(lambda: qfi_truncated_analytic(model).value)
        errors.append(err)
    row = [ws, wp, n]
    if engine in ("exact", "both"):
        row.append(exact)
    if engine in ("truncated", "both"):
        row.append(trunc)
    if engine in ("exact", "both"):
        row.append(css)
    if engine == "both":
        agree = exact is not None and trunc is not None and abs(exact - trunc) <= QFI_AGREEMENT_RTOL * abs(exact)
        row.append(int(not agree))
    return tuple(row), "; ".join(e for e in errors if e) or None


def _parity_point(point):
    ws, wp, n, engine = point
    model = GhzModel.constant(ws, wp, n)
    errors = []
    row = [ws, wp]
    p_exact = p_trunc = None
    if engine in ("exact", "both"):
        p_exact = parity_expectation_exact(model)
        row.append(p_exact)
    if engine in ("truncated", "both"):
        p_trunc = parity_moments_truncated(model).mean
        row.append(p_trunc)
    if engine in ("exact", "both"):
        d, err = _guarded(rotation_precision, model)
        row.append(d)
        errors.append(err)
    if engine in ("truncated", "both"):
        d, err = _guarded(rotation_precision_truncated, model)
        row.append(d)
        errors.append(err)
    if engine == "both":
        row.append(int(abs(p_exact - p_trunc) > PARITY_AGREEMENT_ATOL))
    return tuple(row), "; ".join(e for e in errors if e) or None


def _precision_point(point):
    ws, wp, n = point
    model = GhzModel.constant(ws, wp, n)
    ghz, e1 = _guarded(rotation_precision, model)
    css, e2 = _guarded(rotation_precision_coherent_spin, model)
    bound, e3 = _guarded(lambda: qcrb(qfi_exact(model)))
    return (n, ghz, css, bound), "; ".join(e for e in (e1, e2, e3) if e) or None


# --- table builders ---


def _collect(spec: SweepSpec, fn, points):
    if len(points) > MAX_POINTS:
        raise CapacityError(f"{len(points)} grid points exceeds the limit of {MAX_POINTS}")
    t0 = time.perf_counter()
    results = run_points(fn, points, spec.workers)
    rows, errors = [], []
    for i, (row, err) in enumerate(results):
        rows.append(list(row))
        if err:
            errors.append((i, err))
    return rows, errors, time.perf_counter() - t0


def _metadata(spec: SweepSpec, wall: float, errors: list, extra: dict = None) -> dict:
    meta = {"tool": f"ghz-sagnac {__version__}"}
    meta.update({f"spec.{k}": v for k, v in spec.items()})
    meta["wall_time_s"] = f"{wall:.3f}"
    meta.update(extra or {})
    for i, err in errors:
        meta[f"row_error.{i}"] = err
    return meta


def phase_diagram(spec: SweepSpec) -> ResultTable:
    """Ground-state fidelity of both branches over an ``omega_s x omega_p`` grid."""
    ws_axis, wp_axis = spec.axis("omega_s"), spec.axis("omega_p")
    points = [(ws, wp) for ws in ws_axis.values() for wp in wp_axis.values()]
    rows, errors, wall = _collect(spec, _phase_point, points)
    if errors:
        log.warning("phase diagram: %d grid points skipped (omega_p = 0)", len(errors))
    meta = _metadata(spec, wall, errors, {"skipped_points": str(len(errors))})
    return ResultTable(["omega_s", "omega_p", "F0_up", "F0_down"], rows, meta)


def fock_histogram(spec: SweepSpec) -> ResultTable:
    """Occupation distribution ``F_n`` of one branch at a single operating point."""
    if not 0 <= spec.nmax <= MAX_HISTOGRAM_NMAX:
        raise CapacityError(f"nmax must be in [0, {MAX_HISTOGRAM_NMAX}], got {spec.nmax}")
    t0 = time.perf_counter()
    branch = SpinBranch.parse(spec.branch)
    model = GhzModel.constant(spec.omega_s[0], spec.omega_p[0], 1)
    state = branch_state(model.params, model.profile, branch)
    probs = fock_distribution(state, spec.nmax)
    rows = [[n, float(p)] for n, p in enumerate(probs)]
    meta = _metadata(spec, time.perf_counter() - t0, [], {"mean_occupation": _fmt(state.mean_occupation)})
    return ResultTable(["n", "F_n"], rows, meta)


def _slopes(rows, columns, group_cols=("omega_s", "omega_p"), value_cols=(), n_col="N") -> dict:
    out = {}
    gidx = [columns.index(c) for c in group_cols]
    nidx = columns.index(n_col)
    groups = {}
    for row in rows:
        groups.setdefault(tuple(row[i] for i in gidx), []).append(row)
    for key, grp in groups.items():
        label = ";".join(f"{c}={_fmt(v)}" for c, v in zip(group_cols, key))
        for col in value_cols:
            vidx = columns.index(col)
            pts = [(r[nidx], r[vidx]) for r in grp if r[vidx] is not None and r[vidx] > 0]
            tag = f"slope.{col}[{label}]" if label else f"slope.{col}"
            if len(pts) >= 3:
                out[tag] = _fmt(scaling_exponent(pts))
            else:
                out[tag] = "nan"
    return out


def qfi_scaling(spec: SweepSpec) -> ResultTable:
    """QFI versus particle number for each fixed ``(omega_s, omega_p)``; slopes in metadata."""
    ns = spec.axis("N").values()
    points = [(ws, wp, n, spec.engine) for ws in spec.omega_s for wp in spec.omega_p for n in ns]
    rows, errors, wall = _collect(spec, _qfi_point, points)
    columns = ["omega_s", "omega_p", "N"]
    values = []
    if spec.wants_exact:
        values.append("F_Q_exact")
    if spec.wants_truncated:
        values.append("F_Q_truncated")
    if spec.wants_exact:
        values.append("F_Q_coherent_spin")
    columns += values
    if spec.engine == "both":
        columns.append("disagree")
    extra = {"agreement_rtol": _fmt(QFI_AGREEMENT_RTOL)}
    extra.update(_slopes(rows, columns, value_cols=values))
    return ResultTable(columns, rows, _metadata(spec, wall, errors, extra))


def parity_scan(spec: SweepSpec) -> ResultTable:
    """Parity fringe and error-propagation precision versus ``omega_s``."""
    ws_values = spec.axis("omega_s").values()
    points = [(ws, wp, spec.n_particles, spec.engine) for wp in spec.omega_p for ws in ws_values]
    rows, errors, wall = _collect(spec, _parity_point, points)
    columns = ["omega_s", "omega_p"]
    if spec.wants_exact:
        columns.append("P_exact")
    if spec.wants_truncated:
        columns.append("P_truncated")
    if spec.wants_exact:
        columns.append("delta_omega_exact")
    if spec.wants_truncated:
        columns.append("delta_omega_truncated")
    if spec.engine == "both":
        columns.append("disagree")
    extra = {"agreement_atol": _fmt(PARITY_AGREEMENT_ATOL), "insensitive_points": str(len(errors))}
    return ResultTable(columns, rows, _metadata(spec, wall, errors, extra))


def fringe_phase_rate(omega_p: float, params: PhysicalParams = None) -> float:
    """Per-particle fringe phase per unit omega_s, ``d arg<A|p|B> / d omega_s``, for a constant drive."""
    params = params or PhysicalParams()

    def phase_gap(ws):
        up, down = GhzModel(params, DriveProfile.constant(ws, omega_p), 1).branches()
        return down.phase - up.phase

    # linear in omega_s for constant drives
    return phase_gap(1.0) - phase_gap(0.0)


def choose_operating_point(ns, omega_p: float, margin: float = OPERATING_MARGIN, resolution: int = 5000) -> float:
    """omega_s in (0, 1/2] keeping every fringe phase far from a multiple of pi.

    Picks the candidate that maximises the smallest distance over all N (and
    N = 1, which the coherent-spin readout uses), first one on ties.  Raises
    :class:`DomainError` if even the best distance is below ``margin``.
    """
    rate = abs(fringe_phase_rate(omega_p))
    counts = sorted(set(int(n) for n in ns) | {1})
    candidates = np.arange(1, resolution + 1) / (2.0 * resolution)
    phase = np.mod(np.outer(candidates, np.asarray(counts, dtype=float)) * rate, math.pi)
    distance = np.minimum(phase, math.pi - phase).min(axis=1)
    best = int(np.argmax(distance))
    if distance[best] < margin:
        raise DomainError(
            f"no omega_s keeps every fringe phase {margin} rad from an extremum for N in {list(ns)}"
        )
    return float(candidates[best])


def precision_scaling(spec: SweepSpec) -> ResultTable:
    """GHZ versus coherent-spin-state precision against N at one operating point."""
    ns = spec.axis("N").values()
    wp = spec.omega_p[0]
    extra = {}
    if not spec.omega_s:
        ws = choose_operating_point(ns, wp)
        spec = replace(spec, omega_s=(ws,))
        extra["operating_point"] = (
            f"omega_s={_fmt(ws)} chosen so N*fringe_phase stays >= {OPERATING_MARGIN} rad from k*pi"
        )
    ws = spec.omega_s[0]
    rows, errors, wall = _collect(spec, _precision_point, [(ws, wp, n) for n in ns])
    columns = ["N", "delta_omega_ghz", "delta_omega_csstate", "qcrb_ghz"]
    extra.update(_slopes(rows, columns, group_cols=(), value_cols=columns[1:]))
    return ResultTable(columns, rows, _metadata(spec, wall, errors, extra))


BUILDERS = {
    "phase-diagram": phase_diagram,
    "fock-histogram": fock_histogram,
    "qfi-scaling": qfi_scaling,
    "parity-scan": parity_scan,
    "precision-scaling": precision_scaling,
}


def run(spec: SweepSpec) -> ResultTable:
    return BUILDERS[spec.command](spec)
