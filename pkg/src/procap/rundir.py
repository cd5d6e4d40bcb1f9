from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path


@dataclass(frozen=True)
class RunDirectory:
    """Layout of everything one run writes::

        <root>/config.json          resolved RunConfig snapshot
        <root>/images/<id>.png      cleaned images
        <root>/images/regions.jsonl detected text regions
        <root>/cache/answers.jsonl  VQA answer cache
        <root>/checkpoints/...      trained heads
        <root>/reports/...          metrics, tables, figures
    """

    root: Path

    def __post_init__(self):
        object.__setattr__(self, "root", Path(self.root))

    @property
    def config_path(self) -> Path:
        return self.root / "config.json"

    @property
    def images(self) -> Path:
        return self.root / "images"

    @property
    def cache(self) -> Path:
        return self.root / "cache" / "answers.jsonl"

    @property
    def checkpoints(self) -> Path:
        return self.root / "checkpoints"

    @property
    def reports(self) -> Path:
        return self.root / "reports"

    def ensure(self) -> "RunDirectory":
        self.root.mkdir(parents=True, exist_ok=True)
        return self

    def write_config(self, config) -> Path:
        self.ensure()
        return config.save(self.config_path)
