"""Batch and operational entry points.

Exit codes: 0 success, 1 usage or IO error, 2 partial degeneracy (some
images could not be segmented, or an audit found violations).  Data goes to
stdout, diagnostics to stderr; given identical inputs and seeds, the CSV,
JSON, and mask outputs are byte-identical across runs.
"""

from __future__ import annotations

import argparse
import sys
import time
from pathlib import Path

from .errors import (
    DecodeError,
    DegenerateChannel,
    DegenerateHistogram,
    EasyGtError,
    EmptySession,
    IoError,
)
from .image import load_image, save_image
from .masks import load_mask, save_mask
from .metrics import alpha_grid, alpha_sweep, compare_masks
from .phantom import PhantomSpec, generate_phantom
from .session import is_image_name, open_session
from .thresholding import segment


def _fail(message: str) -> int:
    print(f"error: {message}", file=sys.stderr)
    return 1


def _check_alpha(alpha: float) -> bool:
    return 0.0 <= alpha <= 1.0


def discover_images(folder: Path) -> list[str]:
    """Sorted source-image names; files named gt_* are ground truth, not input."""
    return sorted(e.name for e in folder.iterdir() if e.is_file() and is_image_name(e.name))


def _truth_name_for(name: str, gt_dir: Path) -> str | None:
    """Resolve the ground-truth file paired with an image or mask name.

    Tries, in order: the identical filename, the stem with a .png extension,
    and the phantom convention img_XXXX -> gt_XXXX.
    """
    candidates = [name, Path(name).stem + ".png"]
    if name.startswith("img_"):
        suffix = name[len("img_"):]
        candidates += ["gt_" + suffix, "gt_" + Path(suffix).stem + ".png"]
    for candidate in candidates:
        if (gt_dir / candidate).is_file():
            return candidate
    return None


def _pair_with_truth(names: list[str], gt_dir: Path) -> tuple[list[tuple[str, str]], list[str]]:
    pairs = []
    missing = []
    for name in names:
        truth = _truth_name_for(name, gt_dir)
        if truth is None:
            missing.append(name)
        else:
            pairs.append((name, truth))
    return pairs, missing


def _parse_grid(spec: str) -> list[float]:
    parts = spec.split(":")
    if len(parts) != 3:
        raise ValueError(f"grid must be start:stop:step, got {spec!r}")
    start, stop, step = (float(p) for p in parts)
    if step <= 0:
        raise ValueError("grid step must be positive")
    return alpha_grid(start, stop, step)


# -- subcommands -------------------------------------------------------------


def cmd_segment(args: argparse.Namespace) -> int:
    if not _check_alpha(args.alpha):
        return _fail("alpha must be in [0,1]")
    input_dir = Path(args.input)
    if not input_dir.is_dir():
        return _fail(f"input is not a folder: {args.input}")
    names = discover_images(input_dir)
    if not names:
        return _fail(f"no supported images under {args.input}")
    output_dir = Path(args.output)
    try:
        output_dir.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        return _fail(f"cannot create output folder: {exc}")

    print("image,thv1,thv2,uthv,effective")
    degenerate = []
    for name in names:
        start = time.perf_counter()
        try:
            img = load_image(input_dir / name)
            mask, tset = segment(img, args.alpha, args.offset)
        except (DegenerateChannel, DegenerateHistogram, DecodeError) as exc:
            degenerate.append(name)
            print(f"{name}: skipped ({exc})", file=sys.stderr)
            continue
        save_mask(mask, output_dir / (Path(name).stem + ".png"))
        elapsed_ms = (time.perf_counter() - start) * 1000
        print(f"{name},{tset.thv1:g},{tset.thv2:g},{tset.uthv:g},{tset.effective:g}")
        print(f"{name}: {elapsed_ms:.1f} ms", file=sys.stderr)

    if degenerate:
        print(f"{len(degenerate)} image(s) could not be segmented:", file=sys.stderr)
        for name in degenerate:
            print(f"  {name}", file=sys.stderr)
        return 2
    return 0


def cmd_eval(args: argparse.Namespace) -> int:
    pred_dir = Path(args.pred)
    gt_dir = Path(args.gt)
    if not pred_dir.is_dir() or not gt_dir.is_dir():
        return _fail("both --pred and --gt must be folders")
    names = sorted(e.name for e in pred_dir.iterdir()
                   if e.is_file() and e.suffix.lower() == ".png")
    if not names:
        return _fail(f"no mask PNGs under {args.pred}")
    pairs, missing = _pair_with_truth(names, gt_dir)
    if missing:
        for name in missing:
            print(f"no ground truth found for {name}", file=sys.stderr)
        return 1

    print("image,sensitivity_pct,precision_pct,dsc_pct")
    sums = [0.0, 0.0, 0.0]
    try:
        for name, truth_name in pairs:
            result = compare_masks(load_mask(pred_dir / name), load_mask(gt_dir / truth_name))
            sums[0] += result.sensitivity
            sums[1] += result.precision
            sums[2] += result.dsc
            print(f"{name},{100 * result.sensitivity:.2f},"
                  f"{100 * result.precision:.2f},{100 * result.dsc:.2f}")
    except EasyGtError as exc:
        return _fail(str(exc))
    n = len(pairs)
    print(f"MEAN,{100 * sums[0] / n:.2f},{100 * sums[1] / n:.2f},{100 * sums[2] / n:.2f}")
    return 0


def cmd_sweep(args: argparse.Namespace) -> int:
    input_dir = Path(args.input)
    gt_dir = Path(args.gt)
    if not input_dir.is_dir() or not gt_dir.is_dir():
        return _fail("both --input and --gt must be folders")
    try:
        alphas = _parse_grid(args.alphas)
    except ValueError as exc:
        return _fail(str(exc))
    names = discover_images(input_dir)
    if not names:
        return _fail(f"no supported images under {args.input}")
    pairs, missing = _pair_with_truth(names, gt_dir)
    if missing:
        for name in missing:
            print(f"no ground truth found for {name}", file=sys.stderr)
        return 1

    try:
        images = [load_image(input_dir / name) for name, _ in pairs]
        truths = [load_mask(gt_dir / truth_name) for _, truth_name in pairs]
        report = alpha_sweep(images, truths, alphas)
    except EasyGtError as exc:
        return _fail(str(exc))

    sys.stdout.write(report.to_csv())
    print(f"best_alpha,{report.best_alpha:g}")
    if args.json:
        try:
            Path(args.json).write_text(report.to_json(), encoding="utf-8")
        except OSError as exc:
            return _fail(f"cannot write JSON report: {exc}")
    if report.failures:
        print(f"{report.failures} image(s) could not be segmented", file=sys.stderr)
        return 2
    return 0


def cmd_phantom(args: argparse.Namespace) -> int:
    if args.count < 1:
        return _fail("count must be at least 1")
    output_dir = Path(args.output)
    try:
        output_dir.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        return _fail(f"cannot create output folder: {exc}")
    import numpy as np

    child_seeds = np.random.SeedSequence(args.seed).generate_state(args.count, dtype=np.uint64)
    try:
        for i in range(args.count):
            spec = PhantomSpec(lobes=1 + i % 5, seed=int(child_seeds[i]))
            image, truth = generate_phantom(spec)
            save_image(image, output_dir / f"img_{i + 1:04d}.png")
            save_mask(truth, output_dir / f"gt_{i + 1:04d}.png")
    except (EasyGtError, OSError) as exc:
        return _fail(str(exc))
    print(f"wrote {args.count} image/mask pairs to {output_dir}", file=sys.stderr)
    return 0


def cmd_audit(args: argparse.Namespace) -> int:
    try:
        session = open_session(args.folder)
    except (EmptySession, IoError) as exc:
        return _fail(str(exc))
    issues = session.audit()
    summary = session.summary()
    print(f"records={summary['image_count']} pending={summary['pending']} "
          f"accepted={summary['accepted']} failed={summary['failed']} "
          f"orphaned={summary['orphaned']}")
    if not issues:
        print("audit clean")
        return 0
    for item in issues:
        print(f"{item['image_id']}: {item['kind']}: {item['detail']}")
    return 2


def cmd_serve(args: argparse.Namespace) -> int:
    from .service import create_server

    if not _check_alpha(args.alpha):
        return _fail("alpha must be in [0,1]")
    try:
        server = create_server(args.folder, port=args.port, alpha=args.alpha,
                               host=args.host, static_dir=args.ui)
    except (EmptySession, IoError) as exc:
        return _fail(str(exc))
    except OSError as exc:
        return _fail(f"cannot bind {args.host}:{args.port}: {exc}")
    host, port = server.server_address[:2]
    print(f"serving http://{host}:{port}/ (folder: {args.folder})")
    sys.stdout.flush()
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        pass
    finally:
        server.server_close()
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="easygt",
        description="Threshold-based nucleus segmentation and ground-truth annotation tools.",
    )
    sub = parser.add_subparsers(dest="subcommand", required=True)

    p = sub.add_parser("segment", help="segment a folder of images into mask PNGs")
    p.add_argument("--input", required=True, help="folder of source images")
    p.add_argument("--output", required=True, help="folder for mask PNGs")
    p.add_argument("--alpha", type=float, default=0.3, help="threshold fusion weight (default 0.3)")
    p.add_argument("--offset", type=int, default=0, help="threshold offset in intensity levels")
    p.set_defaults(func=cmd_segment)

    p = sub.add_parser("eval", help="score predicted masks against ground truth")
    p.add_argument("--pred", required=True, help="folder of predicted mask PNGs")
    p.add_argument("--gt", required=True, help="folder of ground-truth mask PNGs")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("sweep", help="sweep the fusion weight and report mean metrics")
    p.add_argument("--input", required=True, help="folder of source images")
    p.add_argument("--gt", required=True, help="folder of ground-truth mask PNGs")
    p.add_argument("--alphas", default="0:1:0.1", help="grid as start:stop:step (default 0:1:0.1)")
    p.add_argument("--json", default=None, help="also write the JSON report here")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("phantom", help="generate seeded synthetic image/mask pairs")
    p.add_argument("--count", type=int, required=True, help="number of phantoms")
    p.add_argument("--seed", type=int, default=42, help="suite seed (default 42)")
    p.add_argument("--output", required=True, help="output folder")
    p.set_defaults(func=cmd_phantom)

    p = sub.add_parser("audit", help="check a session folder for integrity violations")
    p.add_argument("--folder", required=True, help="session root folder")
    p.set_defaults(func=cmd_audit)

    p = sub.add_parser("serve", help="serve the annotation API and UI for one folder")
    p.add_argument("--folder", required=True, help="session root folder")
    p.add_argument("--port", type=int, default=8080)
    p.add_argument("--alpha", type=float, default=0.3)
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--ui", default=None, help="static directory with the built UI bundle")
    p.set_defaults(func=cmd_serve)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 1 if exc.code not in (0, None) else 0
    return args.func(args)


def entrypoint() -> None:
    sys.exit(main())
