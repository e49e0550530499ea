"""Local HTTP facade over one annotation session, plus static UI hosting.

Preview GETs are pure (no sidecar writes); every mutating POST is serialized
through one lock, so concurrent clients see a consistent total order.  Binds
to loopback by default: the images never leave the annotator's machine
unless explicitly exposed.
"""

from __future__ import annotations

import io
import json
import mimetypes
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from pathlib import Path
from urllib.parse import unquote, urlsplit, parse_qs

import numpy as np
from PIL import Image

from .errors import DegenerateChannel, DegenerateHistogram, IoError
from .image import load_image
from .masks import mask_to_png_bytes
from .session import Session, open_session

_PLACEHOLDER_PAGE = b"""<!doctype html>
<html><head><meta charset="utf-8"><title>easygt</title></head>
<body><h1>easygt annotation service</h1>
<p>No UI bundle is configured. The JSON API is live under <code>/api/</code>;
start the server with <code>--ui &lt;dist-dir&gt;</code> to serve the browser front end.</p>
</body></html>
"""

# code -> HTTP status
_ERROR_STATUS = {
    "not_found": 404,
    "invalid_param": 400,
    "degenerate_image": 422,
    "io_error": 500,
    "conflict": 409,
}


class ApiError(Exception):
    """Machine-readable service error; ``code`` is one of the closed set."""

    def __init__(self, code: str, message: str):
        assert code in _ERROR_STATUS, code
        super().__init__(message)
        self.code = code
        self.message = message
        self.http_status = _ERROR_STATUS[code]


class EasyGtServer(ThreadingHTTPServer):
    """HTTP server owning the session and its single-writer mutation lock."""

    daemon_threads = True

    def __init__(self, address: tuple[str, int], session: Session, static_dir: str | None = None):
        super().__init__(address, _Handler)
        self.session = session
        self.static_dir = Path(static_dir) if static_dir else None
        self.mutate_lock = threading.Lock()


def create_server(folder: str, port: int = 8080, alpha: float = 0.3,
                  host: str = "127.0.0.1", static_dir: str | None = None) -> EasyGtServer:
    """Open the session and bind the server (port 0 picks an ephemeral port).

    Raises:
        EmptySession/IoError: folder not servable.
        OSError: address busy or unbindable.
    """
    session = open_session(folder, alpha=alpha)
    return EasyGtServer((host, port), session, static_dir=static_dir)


class _Handler(BaseHTTPRequestHandler):
    server_version = "easygt"
    protocol_version = "HTTP/1.1"

    # the default handler logs every request to stderr; keep the server quiet
    def log_message(self, format: str, *args) -> None:
        pass

    @property
    def session(self) -> Session:
        return self.server.session  # type: ignore[attr-defined]

    # -- plumbing -----------------------------------------------------------

    def _send_bytes(self, payload: bytes, content_type: str, status: int = 200,
                    headers: dict[str, str] | None = None) -> None:
        self.send_response(status)
        self.send_header("Content-Type", content_type)
        self.send_header("Content-Length", str(len(payload)))
        self.send_header("Cache-Control", "no-store")
        for name, value in (headers or {}).items():
            self.send_header(name, value)
        self.end_headers()
        self.wfile.write(payload)

    def _send_json(self, payload: dict, status: int = 200) -> None:
        body = json.dumps(payload).encode("utf-8")
        self._send_bytes(body, "application/json; charset=utf-8", status=status)

    def _send_api_error(self, err: ApiError) -> None:
        self._send_json({"code": err.code, "message": err.message}, status=err.http_status)

    def _read_json_body(self) -> dict:
        length = int(self.headers.get("Content-Length") or 0)
        raw = self.rfile.read(length) if length else b""
        if not raw:
            return {}
        try:
            payload = json.loads(raw.decode("utf-8"))
        except (UnicodeDecodeError, json.JSONDecodeError) as exc:
            raise ApiError("invalid_param", f"body is not valid JSON: {exc}")
        if not isinstance(payload, dict):
            raise ApiError("invalid_param", "body must be a JSON object")
        return payload

    # -- routing ------------------------------------------------------------

    def do_GET(self) -> None:
        parts = urlsplit(self.path)
        segments = [unquote(s) for s in parts.path.split("/") if s]
        try:
            if segments[:2] == ["api", "session"] and len(segments) == 2:
                self._send_json(self.session.summary())
            elif segments[:2] == ["api", "records"] and len(segments) == 2:
                self._send_json({"records": self.session.record_dicts()})
            elif segments[:2] == ["api", "images"] and len(segments) == 3:
                self._get_image(segments[2])
            elif segments[:2] == ["api", "images"] and len(segments) == 4 and segments[3] == "mask":
                self._get_mask(segments[2], parse_qs(parts.query))
            elif segments and segments[0] == "api":
                raise ApiError("not_found", f"no such endpoint: {parts.path}")
            else:
                self._serve_static(segments)
        except ApiError as err:
            self._send_api_error(err)
        except Exception as exc:  # surface crashes as structured errors, not resets
            self._send_api_error(ApiError("io_error", f"internal error: {exc}"))

    def do_POST(self) -> None:
        parts = urlsplit(self.path)
        segments = [unquote(s) for s in parts.path.split("/") if s]
        try:
            if segments[:2] == ["api", "images"] and len(segments) == 4:
                self._post_image_action(segments[2], segments[3])
            elif segments == ["api", "session", "cursor"]:
                self._post_cursor()
            else:
                raise ApiError("not_found", f"no such endpoint: {parts.path}")
        except ApiError as err:
            self._send_api_error(err)
        except Exception as exc:
            self._send_api_error(ApiError("io_error", f"internal error: {exc}"))

    # -- GET handlers ---------------------------------------------------------

    def _require_record(self, image_id: str):
        record = self.session.records.get(image_id)
        if record is None:
            raise ApiError("not_found", f"no such image in session: {image_id}")
        return record

    def _get_image(self, image_id: str) -> None:
        record = self._require_record(image_id)
        path = self.session.image_path(record.image_id)
        if not path.is_file():
            raise ApiError("io_error", f"image file vanished: {image_id}")
        if path.suffix.lower() == ".png":
            payload = path.read_bytes()
        else:
            try:
                img = load_image(path)
            except Exception as exc:
                raise ApiError("io_error", f"cannot decode {image_id}: {exc}")
            buf = io.BytesIO()
            Image.fromarray(np.asarray(img.pixels), "RGB").save(buf, format="PNG")
            payload = buf.getvalue()
        self._send_bytes(payload, "image/png")

    def _get_mask(self, image_id: str, query: dict[str, list[str]]) -> None:
        self._require_record(image_id)
        raw = query.get("offset", ["0"])[0]
        try:
            offset = int(raw)
        except ValueError:
            raise ApiError("invalid_param", f"offset must be an integer, got {raw!r}")
        try:
            mask, tset = self.session.preview(image_id, offset)
        except (DegenerateChannel, DegenerateHistogram) as exc:
            raise ApiError("degenerate_image", str(exc))
        except IoError as exc:
            raise ApiError("io_error", str(exc))
        headers = {
            "X-THV1": repr(tset.thv1),
            "X-THV2": repr(tset.thv2),
            "X-UTHV": repr(tset.uthv),
            "X-Effective": repr(tset.effective),
        }
        self._send_bytes(mask_to_png_bytes(mask), "image/png", headers=headers)

    def _serve_static(self, segments: list[str]) -> None:
        static_dir = self.server.static_dir  # type: ignore[attr-defined]
        if static_dir is None:
            if not segments:
                self._send_bytes(_PLACEHOLDER_PAGE, "text/html; charset=utf-8")
            else:
                raise ApiError("not_found", "no static bundle configured")
            return
        name = "/".join(segments) if segments else "index.html"
        target = (static_dir / name).resolve()
        try:
            target.relative_to(static_dir.resolve())
        except ValueError:
            raise ApiError("not_found", f"no such file: {name}")
        if not target.is_file():
            raise ApiError("not_found", f"no such file: {name}")
        ctype = mimetypes.guess_type(target.name)[0] or "application/octet-stream"
        self._send_bytes(target.read_bytes(), ctype)

    # -- POST handlers ----------------------------------------------------------

    def _post_image_action(self, image_id: str, action: str) -> None:
        self._require_record(image_id)
        lock = self.server.mutate_lock  # type: ignore[attr-defined]
        if action == "offset":
            body = self._read_json_body()
            delta = body.get("delta")
            if not isinstance(delta, int) or isinstance(delta, bool):
                raise ApiError("invalid_param", "body must carry an integer 'delta'")
            with lock:
                record = self.session.adjust_threshold(delta, image_id)
                self._respond_record(record)
        elif action == "accept":
            with lock:
                try:
                    record = self.session.accept(image_id)
                except (DegenerateChannel, DegenerateHistogram) as exc:
                    raise ApiError("conflict", f"cannot accept a degenerate image: {exc}")
                except IoError as exc:
                    raise ApiError("io_error", str(exc))
                self._respond_record(record)
        elif action == "fail":
            with lock:
                try:
                    record = self.session.mark_failed(image_id)
                except IoError as exc:
                    raise ApiError("io_error", str(exc))
                self._respond_record(record)
        else:
            raise ApiError("not_found", f"no such action: {action}")

    def _respond_record(self, record) -> None:
        payload = {
            "record": record.to_dict(),
            "cursor": self.session.cursor,
            "summary": self.session.summary(),
        }
        self._send_json(payload)

    def _post_cursor(self) -> None:
        body = self._read_json_body()
        direction = body.get("direction")
        if direction not in ("next", "prev"):
            raise ApiError("invalid_param", "direction must be 'next' or 'prev'")
        lock = self.server.mutate_lock  # type: ignore[attr-defined]
        with lock:
            self.session.navigate(direction)
            self._send_json(self.session.summary())
