"""Command-line entry point: ``incepdehaze <command> [options]``.

Exit status is 0 on success, 1 for usage and validation errors and 2 for
anything unexpected. Relative paths resolve against ``--root`` and the
default seed comes from ``$INCEPDEHAZE_SEED`` when set.
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import os
import sys
import time
from pathlib import Path

import numpy as np

from .exceptions import IncepDehazeError, NonFiniteError

log = logging.getLogger("incepdehaze")

SEED_ENV = "INCEPDEHAZE_SEED"


class UsageError(IncepDehazeError, ValueError):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(f"{self.prog}: {message}")


def _default_seed():
    raw = os.environ.get(SEED_ENV)
    if raw is None:
        return 0
    try:
        return int(raw)
    except ValueError:
        raise UsageError(f"{SEED_ENV} must be an integer, got {raw!r}") from None


def _path(args, p):
    p = Path(p)
    return p if p.is_absolute() else Path(args.root) / p


def _dump(obj):
    def fix(v):
        if isinstance(v, float) and math.isinf(v):
            return "inf"
        if isinstance(v, dict):
            return {k: fix(x) for k, x in v.items()}
        if isinstance(v, list):
            return [fix(x) for x in v]
        return v

    print(json.dumps(fix(obj), indent=2, sort_keys=True))


def _png_files(directory):
    directory = Path(directory)
    if not directory.is_dir():
        raise UsageError(f"{directory}: not a directory")
    return sorted(p for p in directory.iterdir() if p.suffix.lower() == ".png")


# ---------------------------------------------------------------------------
# subcommands


def cmd_synth(args):
    from .data import PipelineConfig, build_dataset, discover_pairs, plan_counts

    cfg = PipelineConfig(
        input_dir=str(_path(args, args.input)) if args.input else "",
        output_dir=str(_path(args, args.output)) if args.output else "",
        k=args.k,
        seed=args.seed,
        split_counts=tuple(args.splits) if args.splits else None,
        split_fractions=tuple(args.fractions),
        width=args.width,
        height=args.height,
        depth_scale=args.depth_scale,
        allow_partial=args.allow_partial,
    )
    if args.dry_run:
        if args.count is not None:
            n = args.count
        elif args.input:
            n = len(discover_pairs(cfg.input_dir)[0])
        else:
            raise UsageError("--dry-run needs --count or --in")
        _dump(plan_counts(n, cfg))
        return 0
    if not args.input or not args.output:
        raise UsageError("synth needs --in and --out")
    manifest = build_dataset(cfg)
    _dump({"clear": len(manifest.records), "hazy": manifest.hazy_count, "splits": manifest.split_sizes()})
    return 0


def cmd_train(args):
    from .data import load_pairs
    from .model import DiscriminatorConfig, GeneratorConfig, PairedDataset, TrainConfig, load_checkpoint, train_loop

    manifest = _path(args, args.manifest)
    size = tuple(args.size) if args.size else None
    hazy, clear = load_pairs(manifest, "train", size)
    val_hazy, val_clear = load_pairs(manifest, "val", size)
    data = PairedDataset(hazy, clear, val_hazy if len(val_hazy) else None, val_clear if len(val_clear) else None)
    params = opt = None
    start = 0
    if args.resume:
        params, opt, cfg, start = load_checkpoint(_path(args, args.resume))
        if args.epochs is not None:
            cfg = TrainConfig.from_dict({**cfg.to_dict(), "epochs": args.epochs})
    else:
        cfg = TrainConfig(
            epochs=args.epochs if args.epochs is not None else 50,
            batch_size=args.batch_size,
            lambda_l1=args.lambda_l1,
            learning_rate=args.lr,
            seed=args.seed,
            generator=GeneratorConfig(base_width=args.base_width, num_stages=args.num_stages),
            discriminator=DiscriminatorConfig(base_width=args.disc_base_width),
        )
    out = _path(args, args.out)
    out.mkdir(parents=True, exist_ok=True)
    _, _, history = train_loop(
        data, cfg, params, opt, start_epoch=start, checkpoint_dir=out, log_path=out / "train_log.jsonl"
    )
    _dump({"epochs_run": len(history), "last": history[-1] if history else None})
    return 0


def cmd_dehaze(args):
    from .data import load_image, save_image
    from .model import dehaze_array, load_checkpoint

    params, _, cfg, _ = load_checkpoint(_path(args, args.checkpoint))
    src, dst = _path(args, args.input), _path(args, args.output)
    files = _png_files(src)
    if not files:
        raise UsageError(f"{src}: no PNG images")
    for f in files:
        img = load_image(f)
        if img.shape[2] == 1:
            img = np.repeat(img, 3, axis=2)
        out = dehaze_array(params, cfg.generator, img.transpose(2, 0, 1)[None], 1)[0]
        save_image(out.transpose(1, 2, 0).astype(np.float64), dst / f.name)
    _dump({"images": len(files), "output": str(dst)})
    return 0


def cmd_eval(args):
    from .data import load_image
    from .metrics import QualityReport

    pred_dir, ref_dir = _path(args, args.pred), _path(args, args.ref)
    preds = {p.name: p for p in _png_files(pred_dir)}
    refs = {p.name: p for p in _png_files(ref_dir)}
    missing = sorted(set(preds) ^ set(refs))
    if missing:
        raise UsageError(f"unpaired files between {pred_dir} and {ref_dir}: {', '.join(missing)}")
    if not preds:
        raise UsageError(f"{pred_dir}: no PNG images")
    report = QualityReport()
    for name in sorted(preds):
        report.add(name, load_image(preds[name]), load_image(refs[name]), with_fsim=not args.no_fsim)
    summary = report.to_dict()
    if not args.per_image:
        summary.pop("per_image", None)
    _dump(summary)
    return 0


def cmd_detmetrics(args):
    from .metrics import evaluate_detections, read_detections

    preds = read_detections(_path(args, args.pred), with_confidence=True)
    gts = read_detections(_path(args, args.gt), with_confidence=False)
    m_ap, m_iou = evaluate_detections(preds, gts, args.iou)
    _dump({"mAP": m_ap, "mIoU": m_iou, "iou_threshold": args.iou, "predictions": len(preds), "ground_truth": len(gts)})
    return 0


def cmd_gradcheck(args):
    from .diagnostics import format_table, run_gradcheck_suite

    results = run_gradcheck_suite(seed=args.seed, eps=args.eps)
    print(format_table(results))
    return 0 if all(r.passed for r in results) else 1


def cmd_bench(args):
    from .haze import synthesize_variants, synthetic_depth
    from .metrics import fsim, psnr, ssim

    rng = np.random.default_rng(args.seed)
    h, w = args.height, args.width
    clear = rng.random((h, w, 3))
    other = np.clip(clear + 0.05 * rng.standard_normal(clear.shape), 0, 1)
    depth = synthetic_depth(h, w, "radial", args.seed)

    def rate(fn):
        fn()
        t = time.perf_counter()
        for _ in range(args.repeats):
            fn()
        return args.repeats / (time.perf_counter() - t)

    res = {
        "resolution": [w, h],
        "synthesize_variants_k3_per_s": rate(lambda: synthesize_variants(clear, depth, 3, args.seed, "bench")),
        "psnr_per_s": rate(lambda: psnr(clear, other)),
        "ssim_per_s": rate(lambda: ssim(clear, other)),
        "fsim_per_s": rate(lambda: fsim(clear, other)),
    }
    _dump(res)
    return 0


# ---------------------------------------------------------------------------


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=argparse.SUPPRESS, help=f"RNG seed (default ${SEED_ENV} or 0)")
    common.add_argument("--root", default=argparse.SUPPRESS, help="base directory for relative paths")

    p = _Parser(prog="incepdehaze", description=__doc__.splitlines()[0], parents=[common])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("synth", parents=[common], help="build a hazy dataset from clear images and depth maps")
    s.add_argument("--in", dest="input", help="directory of <stem>.png and <stem>.depth.{pfm,png}")
    s.add_argument("--out", dest="output")
    s.add_argument("--k", type=int, default=3, help="hazy variants per clear image")
    s.add_argument("--splits", type=int, nargs=3, metavar=("TRAIN", "VAL", "TEST"))
    s.add_argument("--fractions", type=float, nargs=3, default=(0.9, 0.05, 0.05), metavar=("TRAIN", "VAL", "TEST"))
    s.add_argument("--width", type=int, default=640)
    s.add_argument("--height", type=int, default=480)
    s.add_argument("--depth-scale", type=float, help="metres per full-scale code for 16-bit depth PNGs")
    s.add_argument("--allow-partial", action="store_true", help="skip unpaired inputs instead of aborting")
    s.add_argument("--dry-run", action="store_true", help="print the count plan and write nothing")
    s.add_argument("--count", type=int, help="clear-image count for --dry-run")
    s.set_defaults(func=cmd_synth)

    t = sub.add_parser("train", parents=[common], help="train on the train split of a manifest")
    t.add_argument("--manifest", required=True)
    t.add_argument("--out", required=True, help="checkpoint and log directory")
    t.add_argument("--epochs", type=int)
    t.add_argument("--batch-size", type=int, default=4)
    t.add_argument("--lr", type=float, default=2e-4)
    t.add_argument("--lambda-l1", type=float, default=100.0)
    t.add_argument("--base-width", type=int, default=64)
    t.add_argument("--num-stages", type=int, default=4)
    t.add_argument("--disc-base-width", type=int, default=64)
    t.add_argument("--size", type=int, nargs=2, metavar=("W", "H"), help="resize pairs before training")
    t.add_argument("--resume", help="checkpoint to continue from")
    t.set_defaults(func=cmd_train)

    d = sub.add_parser("dehaze", parents=[common], help="run a checkpoint over a directory of PNGs")
    d.add_argument("--checkpoint", required=True)
    d.add_argument("--in", dest="input", required=True)
    d.add_argument("--out", dest="output", required=True)
    d.set_defaults(func=cmd_dehaze)

    e = sub.add_parser("eval", parents=[common], help="PSNR/SSIM/FSIM over same-named PNG pairs")
    e.add_argument("--pred", required=True)
    e.add_argument("--ref", required=True)
    e.add_argument("--no-fsim", action="store_true")
    e.add_argument("--per-image", action="store_true")
    e.set_defaults(func=cmd_eval)

    m = sub.add_parser("detmetrics", parents=[common], help="mAP and mIoU from detection files")
    m.add_argument("--pred", required=True, help="image_id class_id confidence x_min y_min x_max y_max")
    m.add_argument("--gt", required=True, help="image_id class_id x_min y_min x_max y_max")
    m.add_argument("--iou", type=float, default=0.5)
    m.set_defaults(func=cmd_detmetrics)

    g = sub.add_parser("gradcheck", parents=[common], help="finite-difference check of every op")
    g.add_argument("--eps", type=float, default=1e-6)
    g.set_defaults(func=cmd_gradcheck)

    b = sub.add_parser("bench", parents=[common], help="throughput of synthesis and metrics")
    b.add_argument("--width", type=int, default=640)
    b.add_argument("--height", type=int, default=480)
    b.add_argument("--repeats", type=int, default=3)
    b.set_defaults(func=cmd_bench)
    return p


def main(argv=None):
    try:
        args = build_parser().parse_args(argv)
        if not hasattr(args, "seed"):
            args.seed = _default_seed()
        if not hasattr(args, "root"):
            args.root = "."
        logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
        return args.func(args)
    except NonFiniteError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (IncepDehazeError, FileNotFoundError, NotADirectoryError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # noqa: BLE001
        log.debug("internal error", exc_info=True)
        print(f"internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
