"""Question-subset x length-penalty ablation grids and their tables.

Grid spec strings look like ``questions=content_only,all;penalty=1,2,3``.
``questions`` accepts ``all``, ``content_only`` and single foci (``race``,
``gender``, ``religion``, ``nationality``, ``disability``, ``animal``).

Cache sharing: answers are cached per (meme, focus, decode params), so every
cell at a given penalty reads the same rows whatever its question subset. The
``content_only`` (no centric) cell is run once, at the base config's length
penalty, and the grid's other penalties collapse into that row.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping, Optional, Sequence

from ..errors import ConfigError, MissingCaptionError
from ..probing import FOCUS_ORDER, load_procaps
from .config import RunConfig
from .metrics import MetricsReport
from .training import run_seeds

NO_CENTRIC = "No Centric"


def parse_grid(spec: str) -> dict[str, list]:
    """Parse a grid spec string or the path of a JSON file holding the same keys."""
    path = Path(spec)
    if spec.endswith(".json") and path.is_file():
        raw = json.loads(path.read_text(encoding="utf-8"))
    else:
        raw = {}
        for part in filter(None, (p.strip() for p in spec.split(";"))):
            if "=" not in part:
                raise ConfigError(f"bad grid clause {part!r}; expected key=v1,v2")
            key, values = part.split("=", 1)
            raw[key.strip()] = [v.strip() for v in values.split(",") if v.strip()]
    grid = {"questions": [], "penalty": []}
    for key, values in raw.items():
        key = {"question_subset": "questions", "length_penalty": "penalty"}.get(key, key)
        if key not in grid:
            raise ConfigError(f"unknown grid key {key!r}")
        grid[key] = list(values)
    try:
        grid["penalty"] = [float(p) for p in grid["penalty"]]
    except ValueError as exc:
        raise ConfigError(f"bad length penalty in grid: {exc}") from None
    return grid


@dataclass(frozen=True)
class AblationCell:
    label: str
    config: RunConfig


def _title(subset: str) -> str:
    return " + ".join(f.capitalize() for f in subset.split(","))


def expand_grid(grid: Mapping[str, Sequence], base: RunConfig) -> list[AblationCell]:
    subsets = list(grid.get("questions") or [])
    penalties = list(grid.get("penalty") or [])
    if not subsets:
        return []
    if not penalties:
        penalties = [base.length_penalty]
    cells, seen = [], set()
    for subset in subsets:
        for penalty in penalties:
            try:
                cfg = base.replace(question_subset=subset, length_penalty=float(penalty))
            except ConfigError as exc:
                raise ConfigError(f"bad grid cell ({subset}, {penalty}): {exc}") from None
            if cfg.question_subset == "content_only":
                cfg = cfg.replace(length_penalty=base.length_penalty)
                label = NO_CENTRIC
            elif cfg.question_subset == "all":
                label = f"Penalty = {cfg.length_penalty:g}"
            else:
                label = _title(cfg.question_subset)
                if len(penalties) > 1:
                    label += f" (Penalty = {cfg.length_penalty:g})"
            if cfg.fingerprint in seen:
                continue
            seen.add(cfg.fingerprint)
            cells.append(AblationCell(label, cfg))

    def order(cell):
        s = cell.config.question_subset
        group = 0 if s == "content_only" else 1 if s == "all" else 2
        focus = FOCUS_ORDER.index(s.split(",")[0]) if group == 2 else 0
        return group, focus, cell.config.length_penalty

    return sorted(cells, key=order)


@dataclass
class AblationRow:
    label: str
    question_subset: str
    length_penalty: float
    config_fingerprint: str
    params_fingerprint: str
    report: MetricsReport

    def to_json(self) -> dict:
        return {"label": self.label, "question_subset": self.question_subset,
                "length_penalty": self.length_penalty, "config_fingerprint": self.config_fingerprint,
                "params_fingerprint": self.params_fingerprint, "report": self.report.to_json()}

    @classmethod
    def from_json(cls, d: dict) -> "AblationRow":
        return cls(d["label"], d["question_subset"], d["length_penalty"], d["config_fingerprint"],
                   d["params_fingerprint"], MetricsReport.from_json(d["report"]))


@dataclass
class AblationTable:
    dataset_name: str
    rows: list[AblationRow]

    def to_json(self) -> dict:
        return {"kind": "ablation", "dataset_name": self.dataset_name, "rows": [r.to_json() for r in self.rows]}

    @classmethod
    def from_json(cls, d: dict) -> "AblationTable":
        return cls(d["dataset_name"], [AblationRow.from_json(r) for r in d["rows"]])

    def save(self, path) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(json.dumps(self.to_json(), indent=2, sort_keys=True) + "\n", encoding="utf-8")
        return path

    @classmethod
    def load(cls, path) -> "AblationTable":
        return cls.from_json(json.loads(Path(path).read_text(encoding="utf-8")))

    def render(self) -> str:
        return render_tables([self])


def run_ablation(grid: Mapping[str, Sequence], config: RunConfig, train_set, test_set, cache,
                 checkpoint_root=None) -> AblationTable:
    """One multi-seed report per grid cell, captions read strictly from ``cache``."""
    rows = []
    ids = [r.id for r in train_set] + [r.id for r in test_set]
    for cell in expand_grid(grid, config):
        cfg = cell.config
        try:
            procaps = load_procaps(ids, cfg.bank, cfg.decode_params, cache)
        except MissingCaptionError as exc:
            raise MissingCaptionError(f"cache cell missing for {cell.label!r} "
                                      f"(params {cfg.decode_params.fingerprint}): {exc}") from None
        ckpt = None if checkpoint_root is None else Path(checkpoint_root) / cfg.fingerprint
        report = run_seeds(cfg, train_set, test_set, procaps, checkpoint_dir=ckpt)
        rows.append(AblationRow(cell.label, cfg.question_subset, cfg.length_penalty, cfg.fingerprint,
                                cfg.decode_params.fingerprint, report))
    return AblationTable(config.dataset_name, rows)


def _cell(mean: float, std: float) -> str:
    return f"{100 * mean:.2f} ± {100 * std:.2f}"


def _layout(tables: Sequence[AblationTable]) -> str:
    single = any(r.question_subset not in ("all", "content_only") for t in tables for r in t.rows)
    return "single" if single else "length"


def render_tables(tables: Sequence[AblationTable], layout: Optional[str] = None) -> str:
    """Plain-text table, one column group per dataset.

    ``length`` layout: accuracy per dataset with rows No Centric /
    Penalty = k. ``single`` layout: AUC and accuracy per dataset, one row per
    question subset. Values are percentages, mean ± population std.
    """
    layout = layout or _layout(tables)
    labels = []
    for t in tables:
        for r in t.rows:
            if r.label not in labels:
                labels.append(r.label)
    if layout == "length":
        header = ["Ans. Length"] + [t.dataset_name or "-" for t in tables]
    else:
        header = ["Model"]
        for t in tables:
            header += [f"{t.dataset_name or '-'} AUC.", f"{t.dataset_name or '-'} Acc."]
    body = []
    for label in labels:
        line = [label]
        for t in tables:
            row = next((r for r in t.rows if r.label == label), None)
            if row is None:
                line += ["-"] * (1 if layout == "length" else 2)
                continue
            rep = row.report
            if layout == "single":
                line.append(_cell(rep.mean_auc, rep.std_auc))
            line.append(_cell(rep.mean_acc, rep.std_acc))
        body.append(line)
    if not body:
        return ""
    widths = [max(len(r[i]) for r in [header] + body) for i in range(len(header))]
    fmt = lambda cells: " | ".join(c.ljust(w) for c, w in zip(cells, widths)).rstrip()  # noqa: E731
    rule = "-+-".join("-" * w for w in widths)
    return "\n".join([fmt(header), rule] + [fmt(r) for r in body]) + "\n"


def render_report(report: MetricsReport, title: str = "") -> str:
    lines = [title] if title else []
    lines.append(f"{'seed':>6} | {'AUC':>8} | {'Acc':>8}")
    for r in report.per_seed:
        lines.append(f"{r.seed:>6} | {100 * r.auc:8.2f} | {100 * r.accuracy:8.2f}")
    lines.append(f"{'mean':>6} | {_cell(report.mean_auc, report.std_auc)} | {_cell(report.mean_acc, report.std_acc)}")
    return "\n".join(lines) + "\n"
