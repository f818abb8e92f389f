"""Command-line front end.

Exit codes: 0 everything passed, 2 finished but something failed a check
(unverified conversion, metric outside its success value, calibration not
converged), 1 hard error.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from gridfreq.calibrate import CalibrationConfig, calibrate
from gridfreq.convert import FitConfig, convert
from gridfreq.errors import GridFreqError
from gridfreq.fixtures import FIXTURES, load_grid
from gridfreq.govblocks import DeadbandSpec, governor_from_dict
from gridfreq.metrics import MetricsConfig, score, trace_metrics
from gridfreq.simcore import EventSpec, GridModel, SimConfig, simulate
from gridfreq.trace import FrequencyTrace
from gridfreq.validation import emit_plotdata, ingest_measurement, load_cases, run_validate

log = logging.getLogger("gridfreq")

OK, HARD_ERROR, CHECK_FAILED = 0, 1, 2


def _load_grid(arg: str) -> GridModel:
    if arg.startswith("fixture:") or (arg in FIXTURES and not Path(arg).exists()):
        return load_grid(arg.split(":", 1)[-1])
    return GridModel.from_dict(json.loads(Path(arg).read_text()))


def _load_event(arg: str) -> EventSpec:
    return EventSpec.from_dict(json.loads(Path(arg).read_text()))


def _metrics_cfg(arg) -> MetricsConfig:
    return MetricsConfig() if arg is None else MetricsConfig.from_dict(json.loads(Path(arg).read_text()))


def _emit(text: str, out):
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text if text.endswith("\n") else text + "\n")


def _read_trace(path, time_col="time_s", freq_col=None) -> FrequencyTrace:
    if freq_col is None:
        with open(path) as fh:
            header = fh.readline().strip().split(",")
        if len(header) > 2:
            return FrequencyTrace.from_csv(path)
        freq_col = header[1]
    return ingest_measurement(path, time_col, freq_col)[0]


def cmd_simulate(a) -> int:
    cfg = SimConfig(dt=a.dt, horizon=a.horizon, report_rate=a.rate)
    tr = simulate(_load_grid(a.grid), _load_event(a.event), cfg)
    _emit(tr.to_csv(), a.out)
    return OK


def cmd_convert(a) -> int:
    source = governor_from_dict(json.loads(Path(a.input).read_text()))
    db = DeadbandSpec(a.deadband / 1000.0) if a.deadband is not None else DeadbandSpec()
    rep = convert(source, db, a.method, FitConfig())
    _emit(json.dumps(rep.to_dict(), indent=2), a.out)
    return OK if rep.verified else CHECK_FAILED


def cmd_metrics(a) -> int:
    tr = FrequencyTrace.from_csv(a.trace)
    cfg = _metrics_cfg(a.config)
    out = {}
    for label in tr.labels:
        one = tr.select(label)
        if a.t0 is not None:
            one.t_event = a.t0
        out[label] = trace_metrics(one, cfg).to_dict()
    _emit(json.dumps(out, indent=2), a.out)
    return OK


def cmd_compare(a) -> int:
    cfg = _metrics_cfg(a.config)
    measured = _read_trace(a.measured, freq_col=a.freq_col)
    simulated = FrequencyTrace.from_csv(a.simulated)
    rep = score(trace_metrics(measured, cfg), trace_metrics(simulated.select(simulated.labels[0]), cfg))
    _emit(rep.to_json() if a.json else rep.to_csv(), a.out)
    return OK if rep.passed else CHECK_FAILED


def cmd_calibrate(a) -> int:
    grid = _load_grid(a.grid)
    event = _load_event(a.event)
    mcfg = _metrics_cfg(a.config)
    measured = _read_trace(a.measured, freq_col=a.freq_col)
    target = trace_metrics(measured, mcfg)
    res = calibrate(grid, event, target, cfg=CalibrationConfig(max_iters=a.max_iters, metrics=mcfg))
    doc = res.to_dict()
    doc["target"] = target.to_dict()
    _emit(json.dumps(doc, indent=2), a.out)
    return OK if res.converged else CHECK_FAILED


def cmd_validate(a) -> int:
    summary = run_validate(load_cases(a.cases))
    _emit(summary.to_csv(), a.out)
    if a.json:
        Path(a.json).write_text(json.dumps(summary.to_dict(), indent=2))
    return OK if summary.passed else CHECK_FAILED


def cmd_plotdata(a) -> int:
    cfg = _metrics_cfg(a.config)
    simulated = FrequencyTrace.from_csv(a.simulated)
    simulated = simulated.select(simulated.labels[0])
    trace_metrics(simulated, cfg)
    measured = None
    if a.measured:
        measured = _read_trace(a.measured, freq_col=a.freq_col)
        trace_metrics(measured, cfg)
    emit_plotdata(measured, simulated, a.out)
    return OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="gridfreq", description="Interconnection frequency-response toolkit")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("simulate", help="simulate a generation trip")
    s.add_argument("--grid", required=True, help="grid JSON, or fixture:<name>")
    s.add_argument("--event", required=True)
    s.add_argument("--out")
    s.add_argument("--dt", type=float, default=0.005)
    s.add_argument("--horizon", type=float, default=60.0)
    s.add_argument("--rate", type=float, default=10.0, help="reporting samples per second")
    s.set_defaults(func=cmd_simulate)

    s = sub.add_parser("convert", help="convert a governor to WSIEG1")
    s.add_argument("--in", dest="input", required=True)
    s.add_argument("--method", choices=("analytic", "fit"), default="analytic")
    s.add_argument("--deadband", type=float, help="deadband width in mHz (default 36)")
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_convert)

    s = sub.add_parser("metrics", help="extract the four response metrics from a trace CSV")
    s.add_argument("--trace", required=True)
    s.add_argument("--config")
    s.add_argument("--t0", type=float, help="event time; detected when omitted")
    s.add_argument("--out")
    s.set_defaults(func=cmd_metrics)

    s = sub.add_parser("compare", help="score a simulated trace against a measurement")
    s.add_argument("--measured", required=True)
    s.add_argument("--simulated", required=True)
    s.add_argument("--freq-col")
    s.add_argument("--config")
    s.add_argument("--json", action="store_true")
    s.add_argument("--out")
    s.set_defaults(func=cmd_compare)

    s = sub.add_parser("calibrate", help="tune ratio, deadband and inertia to a measurement")
    s.add_argument("--grid", required=True)
    s.add_argument("--event", required=True)
    s.add_argument("--measured", required=True)
    s.add_argument("--freq-col")
    s.add_argument("--max-iters", type=int, default=200)
    s.add_argument("--config")
    s.add_argument("--out")
    s.set_defaults(func=cmd_calibrate)

    s = sub.add_parser("validate", help="batch validation over a case list")
    s.add_argument("--cases", required=True)
    s.add_argument("--out")
    s.add_argument("--json", help="also write the full-precision summary here")
    s.set_defaults(func=cmd_validate)

    s = sub.add_parser("plotdata", help="emit aligned measured/simulated overlay CSV")
    s.add_argument("--measured")
    s.add_argument("--simulated", required=True)
    s.add_argument("--freq-col")
    s.add_argument("--config")
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_plotdata)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (GridFreqError, OSError, ValueError, KeyError, json.JSONDecodeError) as exc:
        log.error("%s", exc)
        return HARD_ERROR


if __name__ == "__main__":
    sys.exit(main())
