"""unimer regions：输出全部 ROI 掩码图与覆盖率报告"""
import logging
from pathlib import Path

import numpy as np

from unimer.commands import dump_json, emit, parse_dims
from unimer.errors import EXIT_OK
from unimer.services.geometry import builtin_roi_catalog, extract_rois, read_landmarks_file
from unimer.services.viz import write_image

logger = logging.getLogger(__name__)


def register(subparsers) -> None:
    parser = subparsers.add_parser("regions", help="rasterize every ROI of a landmark file")
    parser.add_argument("landmarks", help="landmark file (JSON array of 468 [x, y])")
    parser.add_argument("--dims", help="frame size WIDTHxHEIGHT (default: smallest frame holding all points)")
    parser.add_argument("--normalized", action="store_true", help="coordinates are in [0, 1]")
    parser.add_argument("--out", required=True, help="output directory")
    parser.set_defaults(handler=run)


def run(args) -> int:
    landmarks = read_landmarks_file(args.landmarks, frame_dims=parse_dims(args.dims), normalized=args.normalized)
    catalog = builtin_roi_catalog()
    masks = extract_rois(landmarks, catalog)
    out = Path(args.out)
    width, height = landmarks.frame_dims
    region_aus = catalog.regions_to_aus()

    report = {}
    for name, mask in masks.items():
        write_image(out / f"{name}.png", mask.bits.astype(np.uint8) * 255)
        report[name] = {
            "pixel_count": mask.pixel_count,
            "coverage": round(mask.pixel_count / (width * height), 6),
            "fallback": mask.fallback,
            "side": catalog.regions[name].side.value,
            "aus": list(region_aus[name]),
        }

    emit(dump_json({"frame_dims": [width, height], "regions": report}), out / "coverage.json")
    logger.info(f"已写出 {len(masks)} 张掩码到 {out}")
    return EXIT_OK
