"""Output files: atomic CSV/JSON writers, run manifests, summary figures.

Numeric report files never embed timestamps, so re-running a job with the
same seed yields byte-identical outputs; wall-clock metadata lives in the
manifest only.  Figures are rendered by the report path alone, which is the
only place matplotlib gets imported.
"""

from __future__ import annotations

import json
import os
import tempfile
from dataclasses import dataclass, field
from datetime import datetime, timezone

import numpy as np

from . import __version__
from .errors import ConfigError
from .serde import canonical_json


def atomic_write_text(path: str, text: str):
    """Write-then-rename so readers never observe a partial file."""
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def format_number(value) -> str:
    """Shortest representation that round-trips the double exactly."""
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    return str(value)


def write_csv(path: str, header, rows):
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(format_number(v) for v in row))
    atomic_write_text(path, "\n".join(lines) + "\n")


def write_json(path: str, payload):
    atomic_write_text(path, json.dumps(payload, sort_keys=True, indent=2) + "\n")


# ---------------------------------------------------------------------------
# run manifests


@dataclass
class RunManifest:
    """Append-only job ledger for one output directory."""

    path: str
    data: dict = field(default_factory=dict)

    @classmethod
    def load(cls, out_dir: str) -> "RunManifest":
        path = os.path.join(out_dir, "manifest.json")
        if os.path.exists(path):
            with open(path, "r", encoding="utf-8") as fh:
                data = json.load(fh)
        else:
            data = {"tool_version": __version__, "jobs": []}
        return cls(path=path, data=data)

    def completed(self, job_digest: str) -> bool:
        return any(j["digest"] == job_digest and j["status"] == "completed"
                   for j in self.data["jobs"])

    def record(self, name: str, job_digest: str, outputs, status: str = "completed"):
        self.data["jobs"].append({
            "name": name,
            "digest": job_digest,
            "status": status,
            "finished": datetime.now(timezone.utc).isoformat(),
            "outputs": sorted(outputs),
        })
        self.data["tool_version"] = __version__
        atomic_write_text(self.path, json.dumps(self.data, indent=2) + "\n")


# ---------------------------------------------------------------------------
# report tables and figures


def coefficient_table_csv(table, path: str):
    """Rows k, columns i, plus a trailing diagonal row."""
    n = table.horizon
    header = ["k", *[f"i={i}" for i in range(n)]]
    rows = []
    for k in range(n):
        cells = [k]
        for i in range(n):
            cells.append("" if i < k else repr(float(table.table[k, i])))
        rows.append(cells)
    rows.append(["diagonal", *[repr(float(v)) for v in table.diagonal]])
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(str(c) for c in row))
    atomic_write_text(path, "\n".join(lines) + "\n")


def trajectory_csv(trajectory, path: str):
    write_csv(path, ["t", "value"],
              [(t + 1, float(v)) for t, v in enumerate(trajectory.values)])


def bound_curve_rows(results):
    rows = []
    for r in results:
        rows.append((r.kind, r.x, r.value, r.raw_value, r.side, r.validity,
                     r.clamped, canonical_json(dict(r.aggregates))))
    return rows


def verification_csv(report, path: str):
    header = ["x", "tail_freq", "empirical_lower", "empirical_upper",
              "bound", "pass", "certified", "validity"]
    rows = []
    for i, x in enumerate(report.x_grid):
        rows.append((x, report.tail_freq[i], report.empirical_lower[i],
                     report.empirical_upper[i], report.theoretical[i],
                     report.passes[i], report.certified[i], report.validity[i]))
    write_csv(path, header, rows)


def summary_lines(reports) -> list[str]:
    """Human-readable one-line-per-bound verification summary."""
    out = []
    head = f"{'bound':<24}{'coverage':>9}{'certified':>10}{'thresholds':>11}  flags"
    out.append(head)
    out.append("-" * len(head))
    for rep in reports:
        flags = "experimental" if rep.experimental else ""
        out.append(
            f"{rep.bound_kind:<24}{rep.coverage:>9.3f}"
            f"{rep.certified_fraction:>10.3f}{len(rep.x_grid):>11}  {flags}"
        )
    return out


def render_verification_figure(report, path: str):
    """Empirical tail (with CI band) against the theoretical bound, log scale."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    x = list(report.x_grid)
    floor = 0.5 / max(1, report.horizon * 10**6)
    clip = lambda seq: [max(v, floor) if v == v else floor for v in seq]
    ax.plot(x, clip(report.theoretical), "-", color="tab:red",
            label=f"{report.bound_kind} bound")
    ax.plot(x, clip(report.tail_freq), ".", color="tab:blue", label="empirical tail")
    ax.fill_between(x, clip(report.empirical_lower), clip(report.empirical_upper),
                    color="tab:blue", alpha=0.25, label="Wilson band")
    ax.set_yscale("log")
    ax.set_xlabel("threshold x")
    ax.set_ylabel("tail probability")
    title = f"{report.bound_kind}  coverage={report.coverage:.3f}"
    if report.experimental:
        title += "  [experimental]"
    ax.set_title(title)
    ax.legend(loc="best", fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def render_bound_curves_figure(results, path: str):
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    by_kind: dict = {}
    for r in results:
        by_kind.setdefault(r.kind, []).append(r)
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    for kind, rs in sorted(by_kind.items()):
        rs = sorted(rs, key=lambda r: r.x)
        ax.plot([r.x for r in rs], [max(r.value, 1e-18) for r in rs], label=kind)
    ax.set_yscale("log")
    ax.set_xlabel("threshold x")
    ax.set_ylabel("bound value")
    ax.legend(loc="best", fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def ensure_out_dir(path: str) -> str:
    try:
        os.makedirs(path, exist_ok=True)
    except OSError as exc:
        raise ConfigError(f"cannot create output directory {path}: {exc}") from exc
    return path
