"""Report rendering: aligned text tables, delimited files and figures.

Every eval subcommand writes a TSV next to a PNG into its report
directory. Figure metadata is stripped so identical inputs produce
byte-identical files.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

from .appmodel import PermissionType
from .evalharness import BenchStats, CvResult, PersonalizationResult
from .learners import Label

_PNG_META = {"Software": None, "CreationDate": None}


def format_table(headers: list[str], rows: list[list[str]]) -> str:
    widths = [len(h) for h in headers]
    for row in rows:
        for i, cell in enumerate(row):
            widths[i] = max(widths[i], len(cell))
    lines = [
        "  ".join(h.ljust(widths[i]) for i, h in enumerate(headers)).rstrip(),
        "  ".join("-" * widths[i] for i in range(len(headers))),
    ]
    for row in rows:
        lines.append("  ".join(cell.ljust(widths[i]) for i, cell in enumerate(row)).rstrip())
    return "\n".join(lines) + "\n"


def _write_tsv(path: Path, headers: list[str], rows: list[list[str]]) -> None:
    with open(path, "w", encoding="utf-8") as f:
        f.write("\t".join(headers) + "\n")
        for row in rows:
            f.write("\t".join(row) + "\n")


def _pct(x: float) -> str:
    return f"{100.0 * x:.1f}%"


def write_cv_report(result: CvResult, out_dir: str | Path) -> str:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    headers = ["permission", "precision", "recall", "f_measure", "support"]
    rows = []
    present = [p for p in PermissionType if p in result.per_permission]
    for perm in present:
        m = result.per_permission[perm]
        rows.append(
            [
                perm.value,
                f"{m.weighted_precision:.4f}",
                f"{m.weighted_recall:.4f}",
                f"{m.weighted_f:.4f}",
                str(m.total),
            ]
        )
    _write_tsv(out / "cv_per_permission.tsv", headers, rows)
    _write_tsv(
        out / "cv_summary.tsv",
        ["algo", "k", "median_f", "average_precision", "average_recall"],
        [[
            result.algo.value,
            str(result.k),
            f"{result.median_f:.4f}",
            f"{result.average_precision:.4f}",
            f"{result.average_recall:.4f}",
        ]],
    )

    fig, ax = plt.subplots(figsize=(7, 4))
    names = [p.value for p in present]
    values = [result.per_permission[p].weighted_f for p in present]
    ax.bar(names, values, color="#4878d0")
    ax.set_ylabel("weighted F-measure")
    ax.set_ylim(0.0, 1.05)
    ax.set_title(f"{result.algo.value}: {result.k}-fold CV by permission")
    ax.tick_params(axis="x", rotation=30)
    fig.tight_layout()
    fig.savefig(out / "cv_f_by_permission.png", metadata=_PNG_META)
    plt.close(fig)

    text = format_table(headers, rows)
    text += "\n"
    text += format_table(
        ["algo", "median F", "avg precision", "avg recall"],
        [[result.algo.value, _pct(result.median_f),
          _pct(result.average_precision), _pct(result.average_recall)]],
    )
    return text


def write_comparison_report(results: dict[str, CvResult], out_dir: str | Path) -> str:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    headers = ["algo", "median_f", "average_precision", "average_recall"]
    rows = [
        [name, f"{r.median_f:.4f}", f"{r.average_precision:.4f}", f"{r.average_recall:.4f}"]
        for name, r in results.items()
    ]
    _write_tsv(out / "cv_comparison.tsv", headers, rows)

    fig, ax = plt.subplots(figsize=(6, 4))
    ax.bar(list(results), [r.median_f for r in results.values()], color="#4878d0")
    ax.set_ylabel("median F-measure")
    ax.set_ylim(0.0, 1.05)
    ax.set_title("classifier comparison")
    fig.tight_layout()
    fig.savefig(out / "cv_comparison.png", metadata=_PNG_META)
    plt.close(fig)
    return format_table(headers, rows)


def write_ablation_report(results: dict[str, CvResult], out_dir: str | Path) -> str:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    headers = ["feature_sets", "precision", "recall", "f_measure"]
    rows = []
    for key, r in results.items():
        rows.append(
            [key, f"{r.average_precision:.4f}", f"{r.average_recall:.4f}", f"{r.median_f:.4f}"]
        )
    _write_tsv(out / "ablation.tsv", headers, rows)

    fig, ax = plt.subplots(figsize=(7, 4))
    ax.bar(list(results), [r.median_f for r in results.values()], color="#6acc64")
    ax.set_ylabel("median F-measure")
    ax.set_ylim(0.0, 1.05)
    ax.set_title("feature-set ablation")
    ax.tick_params(axis="x", rotation=30)
    fig.tight_layout()
    fig.savefig(out / "ablation.png", metadata=_PNG_META)
    plt.close(fig)
    return format_table(headers, rows)


def write_personalization_report(result: PersonalizationResult, out_dir: str | Path) -> str:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    headers = ["profile", "weighted_f", "allow_precision", "allow_recall", "decisions", "allowed"]
    rows = [
        [
            u.profile_id,
            f"{u.weighted_f:.4f}",
            f"{u.allow_precision:.4f}",
            f"{u.allow_recall:.4f}",
            str(u.decisions),
            str(u.allowed),
        ]
        for u in result.per_user
    ]
    _write_tsv(out / "personalization_per_user.tsv", headers, rows)
    _write_tsv(out / "personalization_summary.tsv", ["median_f"], [[f"{result.median_f:.4f}"]])

    fig, ax = plt.subplots(figsize=(5, 5))
    ax.scatter(
        [u.allow_precision for u in result.per_user],
        [u.allow_recall for u in result.per_user],
        alpha=0.7, color="#d65f5f",
    )
    ax.set_xlabel("allow precision")
    ax.set_ylabel("allow recall")
    ax.set_xlim(-0.05, 1.05)
    ax.set_ylim(-0.05, 1.05)
    ax.set_title("per-user precision vs recall")
    fig.tight_layout()
    fig.savefig(out / "personalization_users.png", metadata=_PNG_META)
    plt.close(fig)

    text = format_table(headers, rows)
    text += f"\nmedian F over {len(result.per_user)} users: {_pct(result.median_f)}\n"
    return text


def write_bench_report(stats: BenchStats, out_dir: str | Path) -> str:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    headers = ["requests", "repetitions", "mean_ms", "median_ms", "p95_ms", "requests_per_minute"]
    row = [
        str(stats.requests),
        str(stats.repetitions),
        f"{stats.mean_ms:.3f}",
        f"{stats.median_ms:.3f}",
        f"{stats.p95_ms:.3f}",
        f"{stats.requests_per_minute:.1f}",
    ]
    _write_tsv(out / "bench.tsv", headers, [row])

    fig, ax = plt.subplots(figsize=(6, 4))
    ax.hist(stats.latencies_ms, bins=40, color="#956cb4")
    ax.set_xlabel("pipeline latency per request (ms)")
    ax.set_ylabel("count")
    ax.set_title("mediation latency")
    fig.tight_layout()
    fig.savefig(out / "bench_latency.png", metadata=_PNG_META)
    plt.close(fig)
    return format_table(headers, [row])


def format_metrics_line(label: Label, result) -> str:
    m = result.per_class[label]
    return (
        f"{label.value}: P={_pct(m.precision)} R={_pct(m.recall)} "
        f"F={_pct(m.f_measure)} (n={m.support})"
    )
