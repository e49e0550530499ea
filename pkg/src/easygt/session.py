"""Annotation workflow state: open a folder, iterate, adjust, accept, fail.

Layout under a session root:

    <root>/*.png|jpg|jpeg|bmp     source images (files named gt_* are treated
                                  as ground-truth sidecars, not images)
    <root>/masks/<stem>.png       accepted masks
    <root>/failed/<name>          copies of images no threshold can capture
    <root>/easygt_session.json    the session sidecar - the source of truth

Every mutation ends with an atomic sidecar rewrite (write-temp-then-rename),
so killing the process after any completed operation loses nothing.
"""

from __future__ import annotations

import json
import math
import os
import shutil
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from .errors import (
    DegenerateChannel,
    DegenerateHistogram,
    EmptySession,
    IoError,
    NotFound,
)
from .image import RgbImage, load_image
from .masks import load_mask, mask_to_png_bytes
from .thresholding import BinaryMask, ThresholdSet, magenta_channel, segment, thresholds_from

SUPPORTED_EXTENSIONS = (".png", ".jpg", ".jpeg", ".bmp")
SIDECAR_NAME = "easygt_session.json"
MASKS_DIR = "masks"
FAILED_DIR = "failed"
SIDECAR_VERSION = 1

STATUS_PENDING = "pending"
STATUS_ACCEPTED = "accepted"
STATUS_FAILED = "failed"


def _utcnow() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="milliseconds").replace("+00:00", "Z")


def is_image_name(name: str) -> bool:
    """Supported extension and not a gt_* ground-truth file."""
    lower = name.lower()
    return lower.endswith(SUPPORTED_EXTENSIONS) and not lower.startswith("gt_")


@dataclass
class AnnotationRecord:
    """One image's annotation state; thresholds stay null until first computed."""

    image_id: str
    status: str = STATUS_PENDING
    alpha: float = 0.3
    thv1: float | None = None
    thv2: float | None = None
    uthv: float | None = None
    user_offset: int = 0
    mask_path: str | None = None
    updated_at: str = field(default_factory=_utcnow)

    def to_dict(self) -> dict:
        return {
            "image_id": self.image_id,
            "status": self.status,
            "alpha": self.alpha,
            "thv1": self.thv1,
            "thv2": self.thv2,
            "uthv": self.uthv,
            "user_offset": self.user_offset,
            "mask_path": self.mask_path,
            "updated_at": self.updated_at,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "AnnotationRecord":
        return cls(
            image_id=data["image_id"],
            status=data["status"],
            alpha=data["alpha"],
            thv1=data["thv1"],
            thv2=data["thv2"],
            uthv=data["uthv"],
            user_offset=data["user_offset"],
            mask_path=data["mask_path"],
            updated_at=data["updated_at"],
        )


@dataclass(frozen=True)
class SessionView:
    """Everything the UI needs for one image, recomputed on demand."""

    image: RgbImage
    mask: BinaryMask
    thresholds: ThresholdSet | None
    record: AnnotationRecord
    degenerate: str | None = None


class Session:
    """Single-writer annotation session over one image folder."""

    def __init__(self, root: Path, default_alpha: float, records: dict[str, AnnotationRecord],
                 orphaned: set[str]):
        self.root = root
        self.default_alpha = default_alpha
        self.records = records  # insertion order == lexicographic by image_id
        self.order = list(records)
        self.orphaned = orphaned
        self.cursor = self._first_pending()

    # -- persistence -------------------------------------------------------

    def _first_pending(self) -> int:
        for i, image_id in enumerate(self.order):
            if self.records[image_id].status == STATUS_PENDING:
                return i
        return 0

    def sidecar_path(self) -> Path:
        return self.root / SIDECAR_NAME

    def save(self) -> None:
        payload = {
            "version": SIDECAR_VERSION,
            "default_alpha": self.default_alpha,
            "records": [self.records[i].to_dict() for i in self.order],
        }
        data = json.dumps(payload, indent=2) + "\n"
        tmp = self.root / (SIDECAR_NAME + ".tmp")
        try:
            tmp.write_text(data, encoding="utf-8")
            os.replace(tmp, self.sidecar_path())
        except OSError as exc:
            raise IoError(f"cannot write sidecar: {exc}") from exc

    # -- lookups -----------------------------------------------------------

    def _target(self, image_id: str | None) -> AnnotationRecord:
        if image_id is None:
            image_id = self.order[self.cursor]
        record = self.records.get(image_id)
        if record is None:
            raise NotFound(f"no such image in session: {image_id}")
        return record

    def image_path(self, image_id: str) -> Path:
        return self.root / image_id

    def _load_source(self, record: AnnotationRecord) -> RgbImage:
        path = self.image_path(record.image_id)
        if not path.is_file():
            self.orphaned.add(record.image_id)
            raise IoError(f"image file vanished: {record.image_id}")
        return load_image(path)

    def summary(self) -> dict:
        counts = {STATUS_PENDING: 0, STATUS_ACCEPTED: 0, STATUS_FAILED: 0}
        for record in self.records.values():
            counts[record.status] += 1
        return {
            "image_count": len(self.records),
            "pending": counts[STATUS_PENDING],
            "accepted": counts[STATUS_ACCEPTED],
            "failed": counts[STATUS_FAILED],
            "cursor": self.cursor,
            "default_alpha": self.default_alpha,
            "orphaned": len(self.orphaned),
        }

    def record_dicts(self) -> list[dict]:
        out = []
        for image_id in self.order:
            d = self.records[image_id].to_dict()
            d["orphaned"] = image_id in self.orphaned
            out.append(d)
        return out

    # -- views (read-only, nothing persisted) ------------------------------

    def view(self, image_id: str | None = None) -> SessionView:
        """Segment the target image at its stored (alpha, offset).

        A degenerate image comes back as a failed-eligible view with an
        empty mask instead of raising.
        """
        record = self._target(image_id)
        image = self._load_source(record)
        try:
            mask, tset = segment(image, record.alpha, record.user_offset)
            return SessionView(image=image, mask=mask, thresholds=tset, record=record)
        except (DegenerateChannel, DegenerateHistogram) as exc:
            empty = BinaryMask(np.zeros((image.height, image.width), dtype=bool))
            return SessionView(image=image, mask=empty, thresholds=None,
                               record=record, degenerate=str(exc))

    def preview(self, image_id: str, offset: int) -> tuple[BinaryMask, ThresholdSet]:
        """Segment at an explicit offset without touching the record.

        Raises DegenerateChannel/DegenerateHistogram for unsegmentable images.
        """
        record = self._target(image_id)
        image = self._load_source(record)
        return segment(image, record.alpha, offset)

    # -- mutations (each one persists before returning) ---------------------

    def _ensure_thresholds(self, record: AnnotationRecord) -> None:
        if record.uthv is not None:
            return
        image = self._load_source(record)
        tset = thresholds_from(magenta_channel(image), record.alpha)
        record.thv1, record.thv2, record.uthv = tset.thv1, tset.thv2, tset.uthv

    def _mask_rel_path(self, image_id: str) -> str:
        return f"{MASKS_DIR}/{Path(image_id).stem}.png"

    def _delete_mask(self, record: AnnotationRecord) -> None:
        if record.mask_path:
            target = self.root / record.mask_path
            if target.exists():
                target.unlink()
        record.mask_path = None

    def _failed_copy_path(self, image_id: str) -> Path:
        return self.root / FAILED_DIR / image_id

    def _advance_from(self, index: int) -> None:
        for j in range(index + 1, len(self.order)):
            if self.records[self.order[j]].status == STATUS_PENDING:
                self.cursor = j
                return
        self.cursor = index

    def adjust_threshold(self, delta: int, image_id: str | None = None) -> AnnotationRecord:
        """Shift the user offset; the effective threshold stays inside [0, 255].

        Offsets clamp to the smallest magnitude that already saturates an
        end of the range.  Adjusting an accepted record invalidates it: the
        mask file is removed and the status reverts to pending.
        """
        record = self._target(image_id)
        try:
            self._ensure_thresholds(record)
        except (DegenerateChannel, DegenerateHistogram, IoError):
            pass  # no thresholds to clamp against; keep a sane raw bound
        new_offset = record.user_offset + int(delta)
        if record.uthv is not None:
            low = math.floor(-record.uthv)
            high = math.ceil(255.0 - record.uthv)
        else:
            low, high = -255, 255
        record.user_offset = min(max(new_offset, low), high)
        if record.status == STATUS_ACCEPTED:
            self._delete_mask(record)
            record.status = STATUS_PENDING
        record.updated_at = _utcnow()
        self.save()
        return record

    def accept(self, image_id: str | None = None) -> AnnotationRecord:
        """Render the mask at the effective threshold and persist everything.

        Raises:
            DegenerateChannel/DegenerateHistogram: image cannot be segmented.
            IoError: source vanished or the mask cannot be written.
        """
        record = self._target(image_id)
        index = self.order.index(record.image_id)
        image = self._load_source(record)
        mask, tset = segment(image, record.alpha, record.user_offset)

        rel = self._mask_rel_path(record.image_id)
        target = self.root / rel
        try:
            target.parent.mkdir(exist_ok=True)
            tmp = target.with_name(target.name + ".tmp")
            tmp.write_bytes(mask_to_png_bytes(mask))
            os.replace(tmp, target)
        except OSError as exc:
            raise IoError(f"cannot write mask for {record.image_id}: {exc}") from exc

        if record.status == STATUS_FAILED:
            copy = self._failed_copy_path(record.image_id)
            if copy.exists():
                copy.unlink()
        record.thv1, record.thv2, record.uthv = tset.thv1, tset.thv2, tset.uthv
        record.mask_path = rel
        record.status = STATUS_ACCEPTED
        record.updated_at = _utcnow()
        self.save()
        self._advance_from(index)
        return record

    def mark_failed(self, image_id: str | None = None) -> AnnotationRecord:
        """Route the image to failed/: copy the original, drop any mask.

        Raises:
            IoError: the original cannot be copied.
        """
        record = self._target(image_id)
        index = self.order.index(record.image_id)
        source = self.image_path(record.image_id)
        if not source.is_file():
            self.orphaned.add(record.image_id)
            raise IoError(f"image file vanished: {record.image_id}")
        copy = self._failed_copy_path(record.image_id)
        try:
            copy.parent.mkdir(exist_ok=True)
            tmp = copy.with_name(copy.name + ".tmp")
            shutil.copyfile(source, tmp)
            os.replace(tmp, copy)
        except OSError as exc:
            raise IoError(f"cannot copy {record.image_id} to failed/: {exc}") from exc

        self._delete_mask(record)
        record.status = STATUS_FAILED
        record.updated_at = _utcnow()
        self.save()
        self._advance_from(index)
        return record

    def navigate(self, direction: str) -> int:
        """Move the cursor one step, saturating at both ends."""
        if direction == "next":
            self.cursor = min(self.cursor + 1, len(self.order) - 1)
        elif direction == "prev":
            self.cursor = max(self.cursor - 1, 0)
        else:
            raise ValueError(f"direction must be 'next' or 'prev', got {direction!r}")
        return self.cursor

    # -- integrity ----------------------------------------------------------

    def audit(self) -> list[dict]:
        """Check status/file coherence and mask dimensions; list violations."""
        issues = []

        def issue(image_id: str, kind: str, detail: str) -> None:
            issues.append({"image_id": image_id, "kind": kind, "detail": detail})

        referenced_masks = set()
        referenced_failed = set()
        for image_id in self.order:
            record = self.records[image_id]
            mask_file = self.root / record.mask_path if record.mask_path else None
            failed_copy = self._failed_copy_path(image_id)
            if image_id in self.orphaned or not self.image_path(image_id).is_file():
                issue(image_id, "orphaned", "source image missing on disk")
            if record.status == STATUS_ACCEPTED:
                if mask_file is None or not mask_file.is_file():
                    issue(image_id, "missing_mask", "accepted but mask file absent")
                else:
                    referenced_masks.add(mask_file.name)
                    try:
                        mask = load_mask(mask_file)
                        image = load_image(self.image_path(image_id))
                        if (mask.height, mask.width) != (image.height, image.width):
                            issue(image_id, "dimension_mismatch",
                                  f"mask {mask.width}x{mask.height} vs image {image.width}x{image.height}")
                    except Exception as exc:  # unreadable pair counts as a violation
                        issue(image_id, "unreadable", str(exc))
            else:
                if record.mask_path:
                    issue(image_id, "stale_mask_path", f"status {record.status} with mask_path set")
            if record.status == STATUS_FAILED:
                if not failed_copy.is_file():
                    issue(image_id, "missing_failed_copy", "failed but no copy under failed/")
                else:
                    referenced_failed.add(image_id)
            elif failed_copy.is_file():
                issue(image_id, "stray_failed_copy", f"status {record.status} but copy present in failed/")

        masks_dir = self.root / MASKS_DIR
        if masks_dir.is_dir():
            for entry in sorted(masks_dir.iterdir()):
                if entry.is_file() and entry.suffix == ".png" and entry.name not in referenced_masks:
                    issue(entry.name, "stray_mask", "mask file not referenced by any accepted record")
        return issues


def open_session(folder: str | os.PathLike, alpha: float = 0.3) -> Session:
    """Scan a folder and build (or resume) its annotation session.

    New images get pending records; known ones keep their sidecar state.
    Records whose image has vanished are retained and flagged orphaned.  The
    cursor lands on the first pending record, or 0 when none are pending.

    Raises:
        EmptySession: no supported images in the folder.
        IoError: unreadable folder or corrupt sidecar.
    """
    root = Path(folder)
    if not root.is_dir():
        raise IoError(f"not a readable folder: {folder}")

    stored: dict[str, AnnotationRecord] = {}
    default_alpha = alpha
    sidecar = root / SIDECAR_NAME
    if sidecar.is_file():
        try:
            payload = json.loads(sidecar.read_text(encoding="utf-8"))
            if payload.get("version") != SIDECAR_VERSION:
                raise IoError(f"unsupported sidecar version: {payload.get('version')}")
            default_alpha = float(payload["default_alpha"])
            for item in payload["records"]:
                record = AnnotationRecord.from_dict(item)
                stored[record.image_id] = record
        except IoError:
            raise
        except (OSError, ValueError, KeyError, TypeError) as exc:
            raise IoError(f"corrupt sidecar {sidecar}: {exc}") from exc

    try:
        names = sorted(e.name for e in root.iterdir() if e.is_file() and is_image_name(e.name))
    except OSError as exc:
        raise IoError(f"cannot scan {folder}: {exc}") from exc
    if not names:
        raise EmptySession(f"no supported images under {folder}")

    all_ids = sorted(set(names) | set(stored))
    records: dict[str, AnnotationRecord] = {}
    created = False
    for image_id in all_ids:
        if image_id in stored:
            records[image_id] = stored[image_id]
        else:
            records[image_id] = AnnotationRecord(image_id=image_id, alpha=default_alpha)
            created = True
    orphaned = set(stored) - set(names)

    session = Session(root=root, default_alpha=default_alpha, records=records, orphaned=orphaned)
    if created or not sidecar.is_file():
        session.save()
    return session
