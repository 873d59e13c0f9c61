"""Clear + depth directory -> resized, hazed, split dataset with a manifest.

Input pairing is by file stem: ``<stem>.png`` is the clear image and
``<stem>.depth.pfm`` (or a 16-bit ``<stem>.depth.png``) its depth map.

Output layout under ``output_dir``::

    clear/<stem>.png            resized 8-bit clear image
    depth/<stem>.depth.pfm      resized float32 depth
    hazy/<stem>_<i>.png         variant i
    manifest.jsonl

Hazy images are composited from the *stored* clear and depth rasters, so a
variant can be regenerated bit-for-bit from the files and its recorded
(beta, airlight).
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .._version import __version__
from .._rng import stream
from ..exceptions import ConfigError, ValidationError
from ..haze import HazeParams, replay_variant, synthesize_variants
from .io import dequantize, load_depth, load_image, quantize, resize_bilinear, save_depth, save_image
from .manifest import ClearRecord, Manifest, Variant

log = logging.getLogger(__name__)

MANIFEST_NAME = "manifest.jsonl"
DEFAULT_FRACTIONS = (0.9, 0.05, 0.05)


@dataclass(frozen=True)
class PipelineConfig:
    input_dir: str
    output_dir: str
    k: int = 3
    seed: int = 0
    split_counts: tuple | None = None
    split_fractions: tuple = DEFAULT_FRACTIONS
    width: int = 640
    height: int = 480
    depth_scale: float | None = None
    allow_partial: bool = False

    def __post_init__(self):
        if self.k < 1:
            raise ConfigError("k must be at least 1")
        if self.width <= 0 or self.height <= 0:
            raise ConfigError("target resolution must be positive")
        if self.split_counts is not None and len(self.split_counts) != 3:
            raise ConfigError("split_counts needs train, val and test counts")
        if len(self.split_fractions) != 3 or abs(sum(self.split_fractions) - 1.0) > 1e-9:
            raise ConfigError("split_fractions must be three values summing to 1")


def split_counts(n_clear, cfg: PipelineConfig):
    """Train/val/test clear-image counts; explicit counts must sum to ``n_clear``."""
    if cfg.split_counts is not None:
        counts = tuple(int(c) for c in cfg.split_counts)
        if any(c < 0 for c in counts) or sum(counts) != n_clear:
            raise ConfigError(f"split counts {counts} do not sum to {n_clear} clear images")
        return counts
    val = int(round(n_clear * cfg.split_fractions[1]))
    test = int(round(n_clear * cfg.split_fractions[2]))
    return (n_clear - val - test, val, test)


def plan_counts(n_clear, cfg: PipelineConfig):
    """Dataset size arithmetic without touching any file."""
    train, val, test = split_counts(n_clear, cfg)
    return {
        "clear": n_clear,
        "hazy": n_clear * cfg.k,
        "splits": {
            "train": {"clear": train, "hazy": train * cfg.k},
            "val": {"clear": val, "hazy": val * cfg.k},
            "test": {"clear": test, "hazy": test * cfg.k},
        },
    }


def discover_pairs(input_dir):
    """Return ``(pairs, problems)``; ``pairs`` maps stem -> (clear, depth) paths."""
    input_dir = Path(input_dir)
    if not input_dir.is_dir():
        raise ValidationError(f"{input_dir}: not a directory")
    clears, depths = {}, {}
    for p in sorted(input_dir.iterdir()):
        name = p.name
        if name.endswith(".depth.pfm") or name.endswith(".depth.png"):
            stem = name[: -len(".depth.pfm")]
            depths.setdefault(stem, []).append(p)
        elif name.endswith(".png"):
            clears[p.stem] = p
    problems = []
    pairs = {}
    for stem in sorted(set(clears) | set(depths)):
        c, d = clears.get(stem), depths.get(stem, [])
        if c is None:
            problems.append(f"{stem}: depth map without clear image")
        elif not d:
            problems.append(f"{stem}: clear image without depth map")
        elif len(d) > 1:
            problems.append(f"{stem}: several depth maps ({', '.join(x.name for x in d)})")
        else:
            pairs[stem] = (c, d[0])
    return pairs, problems


def assign_splits(stems, counts, seed):
    order = stream(seed, "split").permutation(len(stems))
    names = ["train"] * counts[0] + ["val"] * counts[1] + ["test"] * counts[2]
    return {stems[i]: names[rank] for rank, i in enumerate(order)}


def _prepare(clear_path, depth_path, cfg):
    clear = load_image(clear_path)
    if clear.shape[2] == 1:
        clear = np.repeat(clear, 3, axis=2)
    depth = load_depth(depth_path, cfg.depth_scale)
    clear = resize_bilinear(clear.astype(np.float32), cfg.width, cfg.height)
    depth = resize_bilinear(depth.astype(np.float32), cfg.width, cfg.height)
    return quantize(clear), np.maximum(depth, 0).astype(np.float32)


def build_dataset(cfg: PipelineConfig) -> Manifest:
    pairs, problems = discover_pairs(cfg.input_dir)
    out = Path(cfg.output_dir)
    if problems:
        report = "\n".join(problems)
        if not cfg.allow_partial:
            raise ValidationError(f"unpaired inputs:\n{report}")
        out.mkdir(parents=True, exist_ok=True)
        (out / "validation_report.txt").write_text(report + "\n", encoding="utf-8")
        log.warning("skipping %d unpaired inputs", len(problems))
    if not pairs:
        raise ValidationError(f"{cfg.input_dir}: no clear/depth pairs found")

    stems = sorted(pairs)
    splits = assign_splits(stems, split_counts(len(stems), cfg), cfg.seed)
    records = []
    for stem in stems:
        clear_codes, depth = _prepare(*pairs[stem], cfg)
        clear_rel = f"clear/{stem}.png"
        depth_rel = f"depth/{stem}.depth.pfm"
        save_image(clear_codes, out / clear_rel)
        save_depth(depth, out / depth_rel)
        variants = []
        for i, (hazy, params) in enumerate(
            synthesize_variants(dequantize(clear_codes), depth.astype(np.float64), cfg.k, cfg.seed, stem)
        ):
            rel = f"hazy/{stem}_{i}.png"
            save_image(hazy, out / rel)
            variants.append(Variant(rel, params.beta, params.airlight, i))
        records.append(ClearRecord(stem, clear_rel, depth_rel, splits[stem], variants))

    manifest = Manifest(records, cfg.seed, cfg.k, __version__, (cfg.width, cfg.height))
    manifest.write(out / MANIFEST_NAME)
    return manifest


def replay_check(manifest: Manifest, root):
    """Regenerate every hazy file from its recorded parameters.

    Returns the relative paths whose decoded pixels differ from the replay.
    """
    root = Path(root)
    mismatched = []
    for r in manifest.records:
        clear = load_image(root / r.clear_path)
        depth = load_depth(root / r.depth_path, r.depth_scale)
        for v in r.variants:
            expected = quantize(replay_variant(clear, depth, HazeParams(v.beta, v.airlight)))
            stored = quantize(load_image(root / v.hazy_path))
            if not np.array_equal(expected, stored):
                mismatched.append(v.hazy_path)
    return mismatched


def load_pairs(manifest_path, split="train", size=None):
    """Stack every (hazy variant, clear) pair of one split as NCHW arrays.

    ``size`` is an optional ``(width, height)`` to resize to.
    """
    manifest_path = Path(manifest_path)
    root = manifest_path.parent
    manifest = Manifest.read(manifest_path)
    hazy, clear = [], []
    for r in manifest.split(split):
        c = load_image(root / r.clear_path)
        if size is not None:
            c = resize_bilinear(c, *size)
        for v in r.variants:
            h = load_image(root / v.hazy_path)
            if size is not None:
                h = resize_bilinear(h, *size)
            hazy.append(h.transpose(2, 0, 1))
            clear.append(c.transpose(2, 0, 1))
    if not hazy:
        return np.zeros((0, 3, 1, 1)), np.zeros((0, 3, 1, 1))
    return np.stack(hazy), np.stack(clear)
