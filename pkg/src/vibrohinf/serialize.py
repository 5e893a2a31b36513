"""CSV tables with ``key: value`` metadata sidecars.

Every CSV ``name.csv`` is accompanied by ``name.csv.meta``. Numbers use
'.' as decimal separator and ``digits`` significant digits; matrices are
written in long form with explicit dimensions (``rows``, ``cols``) and
row-major ``i, j`` indices.
"""
from __future__ import annotations

import csv
import io
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from . import __version__
from .harness import SimulationResult, VerificationReport
from .hinf import GammaResult, TableRow

__all__ = [
    "fmt",
    "write_table",
    "read_table",
    "read_metadata",
    "write_gamma_result",
    "write_matrices",
    "write_series",
    "write_report",
    "write_simulation",
    "read_simulation",
    "write_paper_table",
    "paper_table_csv",
]

MATRIX_HEADER = ["name", "tau", "rows", "cols", "i", "j", "value"]


def fmt(x, digits: int = 6, comma: bool = False) -> str:
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if x is None:
        return ""
    s = f"{float(x):.{digits}g}"
    return s.replace(".", ",") if comma else s


def _csv_text(header: Sequence[str], rows: Iterable[Sequence[str]]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow(r)
    return buf.getvalue()


def _meta_text(meta: Mapping[str, object]) -> str:
    lines = [f"version: {__version__}"]
    for k, v in meta.items():
        lines.append(f"{k}: {v}")
    return "\n".join(lines) + "\n"


def write_table(path, header: Sequence[str], rows: Iterable[Sequence[str]],
                meta: Mapping[str, object]) -> list[Path]:
    """Write ``path`` (CSV) and ``path.meta``; return both paths."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    meta_path = path.with_name(path.name + ".meta")
    path.write_text(_csv_text(header, rows), encoding="utf-8")
    meta_path.write_text(_meta_text(meta), encoding="utf-8")
    return [path, meta_path]


def read_table(path) -> tuple[list[str], list[list[str]]]:
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    return rows[0], rows[1:]


def read_metadata(path) -> dict[str, str]:
    path = Path(path)
    if path.suffix != ".meta":
        path = path.with_name(path.name + ".meta")
    out = {}
    for line in path.read_text(encoding="utf-8").splitlines():
        key, _, value = line.partition(": ")
        out[key] = value
    return out


def _matrix_rows(name: str, M: np.ndarray, digits: int, tau: str = ""):
    M = np.atleast_2d(M)
    r, c = M.shape
    for i in range(r):
        for j in range(c):
            yield [name, tau, str(r), str(c), str(i), str(j), fmt(M[i, j], digits)]


def write_matrices(path, matrices: Mapping[str, np.ndarray], meta, digits: int = 6):
    rows = [row for name, M in matrices.items() for row in _matrix_rows(name, M, digits)]
    return write_table(path, MATRIX_HEADER, rows, meta)


def write_gamma_result(path, res: GammaResult, meta, digits: int = 6):
    lo, hi = res.bracket
    rows = [
        ["gamma_star", fmt(res.gamma_star, digits)],
        ["gamma_lo_infeasible", fmt(lo, digits)],
        ["gamma_hi_feasible", fmt(hi, digits)],
        ["tolerance", fmt(res.tolerance, digits)],
        ["evaluations", fmt(res.evaluations)],
        ["certificate_residual", fmt(res.certificate_at_hi.residual_norm, digits)],
        ["certificate_margin", fmt(res.certificate_at_hi.stability_margin, digits)],
    ]
    R = res.certificate_at_hi.R
    rows += [[f"R[{i},{j}]", fmt(R[i, j], digits)]
             for i in range(R.shape[0]) for j in range(R.shape[1])]
    return write_table(path, ["quantity", "value"], rows, meta)


def write_series(prefix, series, meta, digits: int = 6, zero_tol: float = 1e-13):
    """Constants ``R_0..R_N`` and periodic parts ``Pi_k`` (grid samples).

    Periodic terms whose samples are all below ``zero_tol * (1 + |R_0|)``
    are omitted; the sidecar records the threshold.
    """
    prefix = Path(prefix)
    files = write_matrices(
        prefix.with_name(prefix.name + "_constants.csv"),
        {f"R_{k}": R for k, R in enumerate(series.constants)},
        meta, digits,
    )
    scale = 1.0 + float(np.linalg.norm(series.constants[0]))
    rows = []
    for k, Pi in enumerate(series.periodics, start=1):
        if np.abs(Pi.samples).max() <= zero_tol * scale:
            continue
        for tau, S in zip(Pi.nodes, Pi.samples):
            rows.extend(_matrix_rows(f"Pi_{k}", S, digits, fmt(tau, digits)))
    pmeta = dict(meta)
    pmeta["periodic_zero_threshold"] = fmt(zero_tol * scale, 3)
    files += write_table(prefix.with_name(prefix.name + "_periodics.csv"),
                         MATRIX_HEADER, rows, pmeta)
    return files


def write_report(path, rep: VerificationReport, meta, digits: int = 6):
    header = ["epsilon", "defect_sup", "series_error_sup", "floquet_radius",
              "reference_floquet_radius", "positive_definite_ok"]
    rows = [[fmt(e, digits), fmt(d, digits), fmt(s, digits), fmt(f, digits),
             fmt(rf, digits), fmt(ok)]
            for e, d, s, f, rf, ok in zip(rep.epsilon_grid, rep.defect_sup,
                                          rep.series_error_sup, rep.floquet_radius,
                                          rep.reference_floquet_radius,
                                          rep.positive_definite_ok)]
    m = dict(meta)
    m.update({
        "order": rep.order,
        "defect_order_fit": fmt(rep.estimated_orders[0], digits),
        "error_order_fit": fmt(rep.estimated_orders[1], digits),
        "defect_orders_pairwise": " ".join(fmt(x, digits) for x in rep.defect_orders),
        "error_orders_pairwise": " ".join(fmt(x, digits) for x in rep.error_orders),
        "epsilon_star": fmt(rep.epsilon_star, digits),
        "exact_regime": fmt(rep.exact_regime),
        "certified": fmt(rep.certified),
    })
    for i, note in enumerate(rep.notes):
        m[f"note_{i}"] = note
    return write_table(path, header, rows, m)


def write_simulation(path, sim: SimulationResult, meta, digits: int = 6):
    n, m_, p, q = (sim.state_trajectory.shape[1], sim.z_trajectory.shape[1],
                   sim.u_trajectory.shape[1], sim.w_trajectory.shape[1])
    header = (["t"] + [f"x{i}" for i in range(n)] + [f"z{i}" for i in range(m_)]
              + [f"u{i}" for i in range(p)] + [f"w{i}" for i in range(q)])
    data = np.hstack([sim.time_grid[:, None], sim.state_trajectory, sim.z_trajectory,
                      sim.u_trajectory, sim.w_trajectory])
    rows = ([fmt(v, digits) for v in r] for r in data)
    md = dict(meta)
    md.update({
        "dims": f"n={n} m={m_} p={p} q={q}",
        "J_value": fmt(sim.J_value, digits),
        "gain_estimate": fmt(sim.gain_estimate, digits),
        "z_energy": fmt(sim.z_energy, digits),
        "u_energy": fmt(sim.u_energy, digits),
        "w_energy": fmt(sim.w_energy, digits),
    })
    return write_table(path, header, rows, md)


def read_simulation(path) -> SimulationResult:
    header, rows = read_table(path)
    meta = read_metadata(path)
    data = np.array(rows, dtype=float).reshape(len(rows), len(header))
    cols = {pre: [i for i, h in enumerate(header) if h[0] == pre and h != "t"]
            for pre in "xzuw"}
    return SimulationResult(
        time_grid=data[:, 0],
        state_trajectory=data[:, cols["x"]],
        z_trajectory=data[:, cols["z"]],
        u_trajectory=data[:, cols["u"]],
        w_trajectory=data[:, cols["w"]],
        J_value=float(meta["J_value"]),
        gain_estimate=float(meta["gain_estimate"]),
        z_energy=float(meta["z_energy"]),
        w_energy=float(meta["w_energy"]),
        u_energy=float(meta["u_energy"]),
    )


def paper_table_csv(rows: Sequence[TableRow], comma: bool = False) -> str:
    body = [[f"{r.k:.3f}", f"{r.gamma_fixture:.3f}", f"{r.gamma_pipeline:.3f}"] for r in rows]
    if comma:
        body = [[c.replace(".", ",") for c in r] for r in body]
    return _csv_text(["k", "gamma_fixture", "gamma_pipeline"], body)


def write_paper_table(path, rows: Sequence[TableRow], meta, comma: bool = False):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(paper_table_csv(rows, comma), encoding="utf-8")
    meta_path = path.with_name(path.name + ".meta")
    meta_path.write_text(_meta_text(meta), encoding="utf-8")
    return [path, meta_path]
