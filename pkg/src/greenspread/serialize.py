"""Network JSON documents and result tables (CSV / JSON lines)."""

from __future__ import annotations

import csv
import json
import os
from functools import lru_cache
from pathlib import Path

from .metrics import METRIC_NAMES
from .netgen import MultilayerNetwork, NetworkConfig

RESULT_COLUMNS = (
    "run_id", "cell_index", "replicate", "seed",
    "alpha", "delta", "eip", "eit", "lt", "step",
    *METRIC_NAMES,
)
_INT_COLUMNS = {"run_id", "cell_index", "replicate", "seed", "eit", "step"}


def format_real(x: float) -> str:
    """10 significant digits, or the shortest exact repr when 10 would lose bits."""
    x = float(x)
    s = f"{x:.10g}"
    return s if float(s) == x else repr(x)


# ---- networks ---------------------------------------------------------------

def network_to_dict(net: MultilayerNetwork) -> dict:
    return {
        "config": net.config.to_dict(),
        "bank_edges": net.bank_edges.tolist(),
        "firm_edges": net.firm_edges.tolist(),
        "interlayer_edges": net.interlayer_edges.tolist(),
        "assets": net.assets.tolist(),
        "firm_sizes": net.firm_sizes.tolist(),
    }


def dumps_network(net: MultilayerNetwork) -> str:
    return json.dumps(network_to_dict(net), separators=(",", ":")) + "\n"


def network_from_dict(doc: dict) -> MultilayerNetwork:
    expected = {"config", "bank_edges", "firm_edges", "interlayer_edges", "assets", "firm_sizes"}
    missing = expected - doc.keys()
    if missing:
        raise ValueError(f"network document lacks {sorted(missing)}")
    return MultilayerNetwork(
        config=NetworkConfig(**doc["config"]),
        bank_edges=doc["bank_edges"],
        firm_edges=doc["firm_edges"],
        interlayer_edges=doc["interlayer_edges"],
        assets=doc["assets"],
        firm_sizes=doc["firm_sizes"],
    )


def save_network(net: MultilayerNetwork, path) -> None:
    Path(path).write_text(dumps_network(net), encoding="utf-8")


def load_network(path) -> MultilayerNetwork:
    with open(path, encoding="utf-8") as fh:
        return network_from_dict(json.load(fh))


# ---- results ----------------------------------------------------------------

def trajectory_rows(traj, cell_index: int = 0, replicate: int = 0, run_id: int | None = None):
    p = traj.params
    run_id = cell_index if run_id is None else run_id
    for step, m in enumerate(traj.metrics.tolist()):
        yield {
            "run_id": run_id, "cell_index": cell_index, "replicate": replicate,
            "seed": p.seed, "alpha": p.alpha, "delta": p.delta, "eip": p.eip,
            "eit": p.eit, "lt": p.lt, "step": step,
            **dict(zip(METRIC_NAMES, m)),
        }


def _as_rows(results):
    if hasattr(results, "rows"):
        return results.rows()
    if hasattr(results, "metrics") and hasattr(results, "params"):
        return trajectory_rows(results)
    return iter(results)


def _fmt(name, value):
    return str(int(value)) if name in _INT_COLUMNS else format_real(value)


# metric values repeat heavily (plateaus, 0, 1); formatting dominates write time
_fmt_metric = lru_cache(maxsize=1 << 16)(format_real)


def _sweep_lines(result, fmt):
    """Fast path for SweepResult: one prefix per run, cached metric formatting."""
    n_steps = result.grid.ss + 1
    head = RESULT_COLUMNS[:RESULT_COLUMNS.index("step")]
    tail = RESULT_COLUMNS[RESULT_COLUMNS.index("step"):]
    metrics = result.metrics.tolist()
    for start in range(0, len(result), n_steps):
        row = next(result.rows_at(start, start + 1))
        if fmt == "csv":
            prefix = ",".join(_fmt(c, row[c]) for c in head) + ","
        else:
            prefix = "{" + ",".join(f'"{c}":{_fmt(c, row[c])}' for c in head) + ","
        for k in range(start, start + n_steps):
            vals = [str(k - start), *map(_fmt_metric, metrics[k])]
            if fmt == "csv":
                yield prefix + ",".join(vals) + "\n"
            else:
                yield prefix + ",".join(f'"{c}":{v}' for c, v in zip(tail, vals)) + "}\n"


def write_results(results, path, fmt: str = "csv") -> Path:
    """Write a SweepResult, Trajectory or iterable of row dicts.

    Returns the path written. I/O failures are re-raised naming the path.
    """
    path = Path(path)
    if fmt not in ("csv", "jsonl"):
        raise ValueError(f"unknown output format {fmt!r}")
    rows = _as_rows(results)
    try:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            if hasattr(results, "rows_at"):
                if fmt == "csv":
                    fh.write(",".join(RESULT_COLUMNS) + "\n")
                fh.writelines(_sweep_lines(results, fmt))
            elif fmt == "csv":
                fh.write(",".join(RESULT_COLUMNS) + "\n")
                for row in rows:
                    fh.write(",".join(_fmt(c, row[c]) for c in RESULT_COLUMNS) + "\n")
            else:
                for row in rows:
                    # literal numbers so the formatting matches the CSV writer
                    body = ",".join(f'"{c}":{_fmt(c, row[c])}' for c in RESULT_COLUMNS)
                    fh.write("{" + body + "}\n")
    except OSError as exc:
        raise OSError(exc.errno, f"cannot write results: {exc.strerror}", os.fspath(path)) from exc
    return path


def iter_results(path):
    """Stream typed row dicts from a results file (CSV or JSON lines, by content)."""
    path = Path(path)
    with open(path, encoding="utf-8") as fh:
        first = fh.readline()
        fh.seek(0)
        if first.startswith("{"):
            raw = (json.loads(line) for line in fh if line.strip())
        else:
            raw = csv.DictReader(fh)
            if tuple(raw.fieldnames or ()) != RESULT_COLUMNS:
                raise ValueError(f"{path}: unexpected header {raw.fieldnames}")
        for r in raw:
            yield {c: (int(r[c]) if c in _INT_COLUMNS else float(r[c])) for c in RESULT_COLUMNS}


def read_results(path) -> list[dict]:
    return list(iter_results(path))


def echo_path(output_path) -> Path:
    p = Path(output_path)
    return p.with_name(p.name + ".config.json")


def write_config_echo(output_path, config: dict) -> Path:
    target = echo_path(output_path)
    target.write_text(json.dumps(config, indent=2, sort_keys=False) + "\n", encoding="utf-8")
    return target
