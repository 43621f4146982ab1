"""Client for the ingestion-service upload API.

TransportError means the network (or server) was unreachable and the
call may be retried; IngestError is a definitive server-side answer.
"""

from __future__ import annotations

from typing import Optional, Protocol

import requests

from drivelab.model.manifest import SessionManifest


class TransportError(Exception):
    """Network-level failure; retriable."""


class IngestError(Exception):
    def __init__(self, status: int, code: str, message: str = "", report: Optional[dict] = None):
        super().__init__(f"{code} ({status}): {message}" if message else f"{code} ({status})")
        self.status = status
        self.code = code
        self.report = report


class IngestClient(Protocol):
    def create_upload(self, manifest: SessionManifest) -> str: ...

    def put_chunk(self, upload_id: str, stream: str, index: int, data: bytes, digest: str) -> int: ...

    def get_offset(self, upload_id: str) -> set[tuple[str, int]]: ...

    def complete(self, upload_id: str, final_manifest: Optional[SessionManifest] = None) -> dict: ...

    def abort(self, upload_id: str) -> None: ...


class HttpIngestClient:
    def __init__(self, base_url: str, token: str, timeout: float = 10.0):
        self.base_url = base_url.rstrip("/")
        self.token = token
        self.timeout = timeout
        self._http = requests.Session()

    def _request(self, method: str, path: str, **kwargs) -> dict:
        headers = kwargs.pop("headers", {})
        headers["Authorization"] = f"Bearer {self.token}"
        try:
            resp = self._http.request(method, self.base_url + path, headers=headers,
                                      timeout=self.timeout, **kwargs)
        except requests.RequestException as exc:
            raise TransportError(str(exc)) from exc
        if resp.status_code >= 400:
            try:
                body = resp.json()
            except ValueError:
                body = {}
            raise IngestError(resp.status_code, body.get("error", "HTTP_ERROR"),
                              body.get("message", ""), body.get("report"))
        return resp.json() if resp.content else {}

    def create_upload(self, manifest: SessionManifest) -> str:
        return self._request("POST", "/v1/uploads", json={"manifest": manifest.to_dict()})["uploadId"]

    def put_chunk(self, upload_id: str, stream: str, index: int, data: bytes, digest: str) -> int:
        return self._request(
            "PUT",
            f"/v1/uploads/{upload_id}/chunks/{stream}/{index}",
            data=data,
            headers={"X-Content-Digest": digest, "Content-Type": "application/octet-stream"},
        )["confirmed"]

    def get_offset(self, upload_id: str) -> set[tuple[str, int]]:
        body = self._request("GET", f"/v1/uploads/{upload_id}/offset")
        return {(s, int(i)) for s, i in body.get("confirmed", [])}

    def complete(self, upload_id: str, final_manifest: Optional[SessionManifest] = None) -> dict:
        payload = {"manifest": final_manifest.to_dict()} if final_manifest is not None else {}
        return self._request("POST", f"/v1/uploads/{upload_id}/complete", json=payload)

    def abort(self, upload_id: str) -> None:
        self._request("DELETE", f"/v1/uploads/{upload_id}")
