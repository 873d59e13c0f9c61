"""Line-delimited JSON dataset manifest.

The first line is a header object (``"type": "header"``); every following
line is one clear image with its hazy variants. Paths are relative to the
directory holding the manifest.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from pathlib import Path

from ..exceptions import ValidationError

SPLITS = ("train", "val", "test")


@dataclass
class Variant:
    hazy_path: str
    beta: float
    airlight: float
    variant_index: int


@dataclass
class ClearRecord:
    image_id: str
    clear_path: str
    depth_path: str
    split: str
    variants: list = field(default_factory=list)
    depth_scale: float | None = None


@dataclass
class Manifest:
    records: list
    seed: int
    k: int = 3
    tool_version: str = ""
    resolution: tuple | None = None

    def split(self, name):
        return [r for r in self.records if r.split == name]

    def split_sizes(self):
        return {s: len(self.split(s)) for s in SPLITS}

    @property
    def hazy_count(self):
        return sum(len(r.variants) for r in self.records)

    def to_lines(self):
        header = {
            "type": "header",
            "seed": self.seed,
            "k": self.k,
            "tool_version": self.tool_version,
            "resolution": list(self.resolution) if self.resolution else None,
        }
        lines = [json.dumps(header, sort_keys=True)]
        for r in self.records:
            d = asdict(r)
            d["type"] = "record"
            lines.append(json.dumps(d, sort_keys=True))
        return lines

    def write(self, path):
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text("\n".join(self.to_lines()) + "\n", encoding="utf-8")

    @classmethod
    def read(cls, path):
        path = Path(path)
        header, records = None, []
        for lineno, line in enumerate(path.read_text(encoding="utf-8").splitlines(), 1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ValidationError(f"{path}:{lineno}: {exc.msg}") from None
            kind = obj.pop("type", None)
            if kind == "header":
                header = obj
            elif kind == "record":
                obj["variants"] = [Variant(**v) for v in obj.get("variants", [])]
                records.append(ClearRecord(**obj))
            else:
                raise ValidationError(f"{path}:{lineno}: unknown line type {kind!r}")
        if header is None:
            raise ValidationError(f"{path}: manifest header missing")
        res = header.get("resolution")
        return cls(records, header["seed"], header.get("k", 3), header.get("tool_version", ""), tuple(res) if res else None)

    def validate(self, root):
        """Problems found against the files under ``root`` (empty list when valid)."""
        root = Path(root)
        problems = []
        seen = {}
        for r in self.records:
            if r.split not in SPLITS:
                problems.append(f"{r.image_id}: unknown split {r.split!r}")
            if r.clear_path in seen:
                problems.append(f"{r.clear_path}: listed in both {seen[r.clear_path]} and {r.split}")
            seen[r.clear_path] = r.split
            if len(r.variants) != self.k:
                problems.append(f"{r.image_id}: {len(r.variants)} variants, expected {self.k}")
            indices = sorted(v.variant_index for v in r.variants)
            if indices != list(range(len(r.variants))):
                problems.append(f"{r.image_id}: variant indices {indices} are not 0..{len(r.variants) - 1}")
            for rel in [r.clear_path, r.depth_path] + [v.hazy_path for v in r.variants]:
                if not (root / rel).is_file():
                    problems.append(f"missing file: {rel}")
        return problems
