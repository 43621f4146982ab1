"""drivelab command line: run the simulator, agent, and server headless,
orchestrate end-to-end drives, manage uploads, and export chart data.

Exit codes: 0 success, 1 usage, 2 validation failed, 3 network error,
4 state conflict.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import secrets
import signal
import sys
import threading
from pathlib import Path

import requests

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_VALIDATION = 2
EXIT_NETWORK = 3
EXIT_CONFLICT = 4

DEFAULT_BIND = "127.0.0.1:8080"
DEFAULT_CONTROL = "127.0.0.1:7465"

logger = logging.getLogger(__name__)


def _split_endpoint(value: str) -> tuple[str, int]:
    host, _, port = value.rpartition(":")
    if not port.isdigit():
        raise argparse.ArgumentTypeError(f"expected HOST:PORT, got {value!r}")
    return host or "127.0.0.1", int(port)


def _wait_forever() -> None:
    stop = threading.Event()
    for sig in (signal.SIGINT, signal.SIGTERM):
        try:
            signal.signal(sig, lambda *_: stop.set())
        except ValueError:
            pass  # non-main thread
    while not stop.is_set():
        stop.wait(0.5)


def cmd_serve(args) -> int:
    from drivelab.server.api import serve
    from drivelab.server.storage import master_key_from_hex

    key_hex = args.master_key or os.environ.get("MASTER_KEY", "")
    if not key_hex:
        key_hex = secrets.token_hex(32)
        print(f"MASTER_KEY not set; using ephemeral key {key_hex}", file=sys.stderr)
    host, port = _split_endpoint(args.bind)
    console = Path(args.console).resolve() if args.console else None
    server, _service = serve(args.data, master_key_from_hex(key_hex), host=host, port=port,
                             console_dir=console)
    print(f"ingestion service on {server.base_url} (data: {args.data})")
    try:
        _wait_forever()
    finally:
        server.stop()
    return EXIT_OK


def cmd_sim(args) -> int:
    from drivelab.model.records import UserSettings
    from drivelab.sim import emitters
    from drivelab.sim.dongle import run_dongle_emulator
    from drivelab.sim.scenario import Scenario

    scenario = Scenario.load(args.scenario)
    settings = UserSettings()
    counts = {
        "motion": sum(1 for _ in emitters.emit_motion(scenario, settings.frequency)),
        "location": sum(1 for _ in emitters.emit_location(scenario, 5.0)),
        "heart": sum(1 for _ in emitters.emit_heart(scenario)),
        "videoFront": sum(1 for _ in emitters.emit_video(scenario, "front", settings.frameRate)),
    }
    emulator = run_dongle_emulator(scenario, endpoint=args.obd_listen)
    print(f"dongle emulator on {emulator.host}:{emulator.port} "
          f"(scenario: {args.scenario}, {scenario.duration:.0f}s, VIN {scenario.vin})")
    print("emitter output for this scenario at default settings: "
          + ", ".join(f"{k}={v}" for k, v in counts.items())
          + f", connectivity transitions={len(emitters.connectivity_signal(scenario))}")
    try:
        _wait_forever()
    finally:
        emulator.stop()
    return EXIT_OK


def cmd_agent(args) -> int:
    from drivelab.agent.control_api import AgentDaemon, serve_control
    from drivelab.agent.recorder import RecorderAgent
    from drivelab.model.records import UserSettings
    from drivelab.sim.devices import scenario_sources
    from drivelab.sim.scenario import Scenario
    from drivelab.sync.client import HttpIngestClient
    from drivelab.sync.engine import DirStore, SyncEngine

    scenario = Scenario.load(args.scenario)
    obd = _split_endpoint(args.obd) if args.obd else None

    engine = None
    agent = RecorderAgent(args.data, user_id=args.email or "local",
                          chunk_bytes=args.chunk_bytes)
    if args.server:
        try:
            r = requests.post(f"{args.server}/v1/login",
                              json={"email": args.email, "password": args.password}, timeout=10)
        except requests.RequestException as exc:
            print(f"cannot reach server: {exc}", file=sys.stderr)
            return EXIT_NETWORK
        if r.status_code != 200:
            print(f"login failed: {r.status_code} {r.text}", file=sys.stderr)
            return EXIT_CONFLICT
        token = r.json()["token"]
        engine = SyncEngine(DirStore(args.data), HttpIngestClient(args.server, token), args.data).start()

    def factory(settings: UserSettings):
        return scenario_sources(Scenario.load(args.scenario), settings, obd_endpoint=obd)

    daemon = AgentDaemon(agent, engine, factory)
    host, port = _split_endpoint(args.control)
    server = serve_control(daemon, host=host, port=port)
    print(f"agent control API on {server.base_url} (data: {args.data}"
          + (f", server: {args.server}" if args.server else ", record-only") + ")")
    try:
        _wait_forever()
    finally:
        server.stop()
        if engine is not None:
            engine.shutdown()
    return EXIT_OK


def cmd_run(args) -> int:
    from drivelab.orchestrator import run_scenario
    from drivelab.sim.scenario import Scenario

    scenario = Scenario.load(args.scenario)
    result = run_scenario(
        scenario,
        time_scale=args.time_scale,
        base_dir=Path(args.data) if args.data else None,
        collect_series=bool(args.report),
    )
    print(f"session {result.session_id}: upload {result.task_state}")
    for stream in sorted(result.counts):
        print(f"  {stream:<12} {result.counts[stream]:>7} records")
    print(f"  digest fidelity: {'ok' if result.digests_match else 'MISMATCH'}")
    print(f"  revalidation:    {'ok' if result.revalidate_ok else 'FAILED'}")
    for w in result.warnings:
        print(f"  warning: {w}")
    if args.report:
        _write_run_report(args.report, result)
    return EXIT_OK if result.ok else EXIT_VALIDATION


def _write_run_report(report_dir: str, result) -> None:
    """Run summary plus, per chartable stream, a CSV and a rendered figure."""
    from drivelab import report as rpt

    out = Path(report_dir)
    out.mkdir(parents=True, exist_ok=True)
    summary = {
        "sessionId": result.session_id,
        "counts": result.counts,
        "taskState": result.task_state,
        "digestsMatch": result.digests_match,
        "revalidateOk": result.revalidate_ok,
    }
    (out / "summary.json").write_text(json.dumps(summary, indent=2) + "\n")
    for stream, series in result.series.items():
        field = rpt.DEFAULT_EXPORT_FIELD[stream]
        rpt.write_csv(series, field, out / f"{stream}.csv")
        rpt.render_figure(series, field, stream, out / f"{stream}.png",
                          title=f"session {result.session_id[:8]}: {stream}")
    print(f"  report: {out}/ ({', '.join(sorted(result.series))})")


def cmd_uploads(args) -> int:
    base = args.control if args.control.startswith("http") else f"http://{args.control}"
    try:
        if args.action == "list":
            r = requests.get(f"{base}/control/uploads", timeout=10)
        else:
            if not args.task:
                print("TASKID required", file=sys.stderr)
                return EXIT_USAGE
            r = requests.post(f"{base}/control/uploads/{args.task}/{args.action}", timeout=10)
    except requests.RequestException as exc:
        print(f"cannot reach agent control API: {exc}", file=sys.stderr)
        return EXIT_NETWORK
    body = r.json()
    if r.status_code >= 400:
        print(f"{body.get('error')}: {body.get('message', '')}", file=sys.stderr)
        return EXIT_CONFLICT
    if args.action == "list":
        tasks = body["tasks"]
        if not tasks:
            print("no upload tasks")
        for t in tasks:
            frac = 0.0 if not t["bytesTotal"] else t["bytesSent"] / t["bytesTotal"]
            print(f"{t['taskId']}  {t['state']:<9} {t['mode']:<8} "
                  f"{t['bytesSent']}/{t['bytesTotal']} ({frac:.0%})  session {t['sessionId']}")
    else:
        t = body["task"]
        print(f"{t['taskId']} -> {t['state']}")
    return EXIT_OK


def cmd_export(args) -> int:
    from drivelab import report as rpt
    from drivelab.agent.journal import iter_stream_records, load_manifest, session_dir

    directory = session_dir(args.data, args.session)
    if not (directory / "manifest.json").exists():
        print(f"session {args.session} not found under {args.data}", file=sys.stderr)
        return EXIT_CONFLICT
    manifest = load_manifest(directory)
    if args.stream not in manifest.streams:
        print(f"session has no {args.stream} stream (has: {', '.join(manifest.streams)})", file=sys.stderr)
        return EXIT_CONFLICT
    records = list(iter_stream_records(directory, manifest, args.stream))
    field = args.field or rpt.DEFAULT_EXPORT_FIELD.get(args.stream, "t")

    if args.format == "json":
        if args.out:
            n = rpt.write_json(records, args.out)
            print(f"wrote {n} records to {args.out}")
        else:
            json.dump(records, sys.stdout, indent=2)
            print()
    else:
        series = rpt.extract_series(records, args.stream, field)
        if args.out:
            n = rpt.write_csv(series, field, args.out)
            print(f"wrote {n} rows to {args.out}")
        else:
            sys.stdout.write(f"t,{field}\n")
            for t, v in series:
                sys.stdout.write(f"{t},{v}\n")

    if args.plot is not None:
        series = rpt.extract_series(records, args.stream, field)
        plot_path = args.plot or (str(Path(args.out).with_suffix(".png")) if args.out
                                  else f"{args.stream}-{field}.png")
        rpt.render_figure(series, field, args.stream, plot_path,
                          title=f"session {args.session[:8]} {args.stream}")
        print(f"figure: {plot_path}")
    return EXIT_OK


def cmd_validate(args) -> int:
    from drivelab.agent.journal import load_manifest, local_chunk_reader
    from drivelab.model.revalidate import revalidate_manifest

    directory = Path(args.path)
    if not (directory / "manifest.json").exists():
        print(f"{args.path} has no manifest.json", file=sys.stderr)
        return EXIT_USAGE
    manifest = load_manifest(directory)
    report = revalidate_manifest(manifest, local_chunk_reader(directory))
    print(f"session {manifest.sessionId}: {'ok' if report.ok else 'INVALID'}")
    for issue in report.errors:
        where = f" [{issue.stream}]" if issue.stream else ""
        print(f"  error {issue.code}{where}: {issue.message}")
    for issue in report.warnings:
        print(f"  warning {issue.code}: {issue.message}")
    return EXIT_OK if report.ok else EXIT_VALIDATION


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="drivelab",
                                     description="desk-scale driving-telemetry rig")
    parser.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("serve", help="run the ingestion service")
    p.add_argument("--bind", default=os.environ.get("BIND_ADDR", DEFAULT_BIND))
    p.add_argument("--data", default=os.environ.get("SERVER_DATA_DIR", "./server-data"))
    p.add_argument("--master-key", default=None, help="256-bit key, hex (or env MASTER_KEY)")
    p.add_argument("--console", default=None, help="directory of built console static files")
    p.set_defaults(func=cmd_serve)

    p = sub.add_parser("agent", help="run the recorder agent + sync engine")
    p.add_argument("--data", default=os.environ.get("DATA_DIR", "./agent-data"))
    p.add_argument("--server", default=os.environ.get("SERVER_URL"), help="ingestion service URL")
    p.add_argument("--obd", default=os.environ.get("OBD_ENDPOINT"), help="dongle endpoint HOST:PORT")
    p.add_argument("--scenario", required=True, help="scenario JSON for the simulated phone sensors")
    p.add_argument("--control", default=os.environ.get("CONTROL_ADDR", DEFAULT_CONTROL))
    p.add_argument("--email", default=os.environ.get("DRIVELAB_EMAIL"))
    p.add_argument("--password", default=os.environ.get("DRIVELAB_PASSWORD"))
    p.add_argument("--chunk-bytes", type=int, default=4 * 1024 * 1024,
                   help="journal chunk rotation size (default 4 MiB)")
    p.set_defaults(func=cmd_agent)

    p = sub.add_parser("sim", help="run device emitters + dongle emulator")
    p.add_argument("--scenario", required=True)
    p.add_argument("--obd-listen", default="127.0.0.1:35000")
    p.set_defaults(func=cmd_sim)

    p = sub.add_parser("run", help="orchestrate an end-to-end scripted drive")
    p.add_argument("--scenario", required=True)
    p.add_argument("--time-scale", type=float, default=10.0,
                   help="clock compression factor (default 10x)")
    p.add_argument("--data", default=None, help="keep run data under this directory")
    p.add_argument("--report", default=None, help="write a run summary to this directory")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("uploads", help="manage upload tasks via the agent control API")
    p.add_argument("action", choices=["list", "pause", "resume", "cancel"])
    p.add_argument("task", nargs="?", help="task id (for pause/resume/cancel)")
    p.add_argument("--control", default=os.environ.get("CONTROL_ADDR", DEFAULT_CONTROL))
    p.set_defaults(func=cmd_uploads)

    p = sub.add_parser("export", help="export a chart-ready series from a local session")
    p.add_argument("--data", default=os.environ.get("DATA_DIR", "./agent-data"))
    p.add_argument("--session", required=True)
    p.add_argument("--stream", required=True,
                   choices=["motion", "location", "heart", "vehicle"])
    p.add_argument("--field", default=None, help="record field (default per stream)")
    p.add_argument("--format", choices=["csv", "json"], default="csv")
    p.add_argument("--out", default=None)
    p.add_argument("--plot", nargs="?", const="", default=None,
                   help="also render a PNG figure (optional path)")
    p.set_defaults(func=cmd_export)

    p = sub.add_parser("validate", help="revalidate a local session directory")
    p.add_argument("path", help="session directory (contains manifest.json)")
    p.set_defaults(func=cmd_validate)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.WARNING,
        format="%(asctime)s %(name)s %(levelname)s %(message)s",
    )
    try:
        return args.func(args)
    except KeyboardInterrupt:
        return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
