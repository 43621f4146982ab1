"""HTTP surface of the ingestion service."""

from __future__ import annotations

import mimetypes
from pathlib import Path
from typing import Optional

from drivelab.clock import Clock
from drivelab.httpd import ApiError, HttpServer, Request, Response, Router
from drivelab.server.accounts import AccountError
from drivelab.server.service import IngestionService, ServiceError

_ACCOUNT_STATUS = {
    "EMAIL_TAKEN": 409,
    "BAD_EMAIL": 422,
    "WEAK_PASSWORD": 422,
    "BAD_CODE": 422,
    "EXPIRED_CODE": 422,
    "BAD_CREDENTIALS": 401,
    "NOT_CONFIRMED": 403,
    "NOT_FOUND": 404,
    "UNAUTHENTICATED": 401,
}

DIGEST_HEADER = "x-content-digest"


def _to_api_error(exc: Exception) -> ApiError:
    if isinstance(exc, AccountError):
        return ApiError(_ACCOUNT_STATUS.get(exc.code, 400), exc.code, str(exc))
    if isinstance(exc, ServiceError):
        extra = {"report": exc.report.to_dict()} if exc.report else {}
        return ApiError(exc.status, exc.code, exc.message, extra)
    raise exc


def build_router(service: IngestionService, console_dir: Optional[Path] = None) -> Router:
    router = Router()

    def guarded(handler):
        def wrap(request: Request) -> Response:
            try:
                return handler(request)
            except (AccountError, ServiceError) as exc:
                raise _to_api_error(exc)

        return wrap

    def auth(request: Request):
        return service.authenticate(request.bearer_token())

    @_route(router, "POST", "/v1/register")
    @guarded
    def register(request: Request) -> Response:
        body = request.json()
        account = service.accounts.register(body.get("email", ""), body.get("password", ""))
        return Response(201, {"userId": account.user_id, "state": account.state})

    @_route(router, "POST", "/v1/confirm")
    @guarded
    def confirm(request: Request) -> Response:
        body = request.json()
        account = service.accounts.confirm(body.get("email", ""), body.get("code", ""))
        return Response(200, {"userId": account.user_id, "state": account.state})

    @_route(router, "POST", "/v1/login")
    @guarded
    def login(request: Request) -> Response:
        body = request.json()
        token = service.accounts.login(body.get("email", ""), body.get("password", ""))
        return Response(200, {"token": token, "expiresInMs": 24 * 3600 * 1000})

    @_route(router, "PUT", "/v1/consent")
    @guarded
    def put_consent(request: Request) -> Response:
        account = auth(request)
        return Response(200, service.set_consent(account, request.json()))

    @_route(router, "POST", "/v1/uploads")
    @guarded
    def create_upload(request: Request) -> Response:
        account = auth(request)
        body = request.json()
        return Response(201, service.create_upload(account, body.get("manifest", body)))

    @_route(router, "PUT", "/v1/uploads/{id}/chunks/{stream}/{index}")
    @guarded
    def put_chunk(request: Request) -> Response:
        account = auth(request)
        try:
            index = int(request.params["index"])
        except ValueError:
            raise ApiError(400, "BAD_INDEX", request.params["index"])
        digest = request.headers.get(DIGEST_HEADER, "")
        result = service.put_chunk(account, request.params["id"], request.params["stream"], index, request.body, digest)
        return Response(200, result)

    @_route(router, "GET", "/v1/uploads/{id}/offset")
    @guarded
    def get_offset(request: Request) -> Response:
        account = auth(request)
        return Response(200, service.get_offset(account, request.params["id"]))

    @_route(router, "POST", "/v1/uploads/{id}/complete")
    @guarded
    def complete(request: Request) -> Response:
        account = auth(request)
        body = request.json()
        return Response(200, service.complete_upload(account, request.params["id"], body.get("manifest")))

    @_route(router, "DELETE", "/v1/uploads/{id}")
    @guarded
    def abort(request: Request) -> Response:
        account = auth(request)
        return Response(200, service.abort_upload(account, request.params["id"]))

    @_route(router, "GET", "/v1/sessions")
    @guarded
    def sessions(request: Request) -> Response:
        account = auth(request)
        return Response(200, {"sessions": service.list_sessions(account)})

    @_route(router, "GET", "/v1/sessions/{id}/series/{stream}")
    @guarded
    def series(request: Request) -> Response:
        account = auth(request)
        return Response(200, service.get_series(
            account,
            request.params["id"],
            request.params["stream"],
            points=request.query_int("points", 0),
            field=request.query_str("field", "") or None,
        ))

    @_route(router, "GET", "/v1/notifications")
    @guarded
    def notifications(request: Request) -> Response:
        account = auth(request)
        return Response(200, {"notifications": service.notifications(account)})

    if console_dir is not None and console_dir.is_dir():
        def static(request: Request) -> Response:
            rel = request.params.get("path") or "index.html"
            target = (console_dir / rel).resolve()
            if not str(target).startswith(str(console_dir.resolve())) or not target.is_file():
                raise ApiError(404, "NOT_FOUND", rel)
            ctype = mimetypes.guess_type(target.name)[0] or "application/octet-stream"
            return Response(200, raw=target.read_bytes(), content_type=ctype)

        router.add("GET", "/console/", static)
        router.add("GET", "/console/{path}", static)

    return router


def _route(router: Router, method: str, pattern: str):
    def deco(handler):
        router.add(method, pattern, handler)
        return handler

    return deco


def serve(data_dir, master_key: bytes, host: str = "127.0.0.1", port: int = 0,
          clock: Optional[Clock] = None, console_dir: Optional[Path] = None) -> tuple[HttpServer, IngestionService]:
    service = IngestionService(data_dir, master_key, clock=clock)
    server = HttpServer(build_router(service, console_dir=console_dir), host=host, port=port)
    return server.start(), service
