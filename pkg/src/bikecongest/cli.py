"""Command-line entry point: ``bikecongest {validate,trips,congestion,classify,synth}``.

Exit codes: 0 ok, 2 config error, 3 input error, 4 internal invariant
violation. Failures print a JSON error object naming the stage on stderr.
"""

import argparse
import json
import logging
import sys
from pathlib import Path

from . import pipeline, synth
from .config import RunConfig, config_from_mapping, load_config
from .errors import BikeCongestError, ConfigError
from .outputs import json_bytes, write_atomic

log = logging.getLogger("bikecongest")

ANALYSIS_COMMANDS = ("validate", "trips", "congestion", "classify")


def _int_list(text):
    try:
        return [int(x) for x in text.split(",") if x.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers: {text!r}") from exc


def _date_list(text):
    return [x.strip() for x in text.split(",") if x.strip()]


def _add_run_flags(p):
    p.add_argument("--config", help="JSON run configuration")
    p.add_argument("--out", help="output directory")
    p.add_argument("--events", help="lock/unlock events CSV")
    p.add_argument("--fences", help="fence polygons (GeoJSON or CSV)")
    p.add_argument("--pois", help="POI CSV")
    p.add_argument("--transit", action="append", help="transit stations CSV (repeatable)")
    p.add_argument("--trajectories", help="optional GPS trajectory CSV")
    p.add_argument("--threads", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--widths", type=_int_list, help="bin widths in seconds, e.g. 300,900,1800")
    p.add_argument("--window", help="daily analysis window, e.g. 06:00-10:00")
    p.add_argument("--exclude-dates", type=_date_list, dest="excluded_dates",
                   help="comma-separated YYYY-MM-DD dates to drop")
    p.add_argument("--emit-heatmap", action="store_true", default=None)
    p.add_argument("--silhouette-raw", action="store_true", default=None)
    p.add_argument("--print-config", action="store_true",
                   help="print the effective configuration and exit")


def build_parser():
    parser = argparse.ArgumentParser(prog="bikecongest", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    helps = {
        "validate": "load all inputs and report rejected rows",
        "trips": "reconstruct and summarize trips",
        "congestion": "per-fence flows and congested spots",
        "classify": "full pipeline including spot clustering",
    }
    for name in ANALYSIS_COMMANDS:
        _add_run_flags(sub.add_parser(name, help=helps[name]))

    sp = sub.add_parser("synth", help="generate a synthetic dataset with ground truth")
    sp.add_argument("--out", required=True)
    sp.add_argument("--n-fences", type=int, default=synth.SynthSpec.n_fences)
    sp.add_argument("--n-bikes", type=int, default=synth.SynthSpec.n_bikes)
    sp.add_argument("--n-trips", type=int, default=synth.SynthSpec.n_trips)
    sp.add_argument("--n-pois", type=int, default=synth.SynthSpec.n_pois)
    sp.add_argument("--days", type=int, default=synth.SynthSpec.days)
    sp.add_argument("--start-date", default=synth.SynthSpec.start_date)
    sp.add_argument("--spacing-m", type=float, default=synth.SynthSpec.spacing_m)
    sp.add_argument("--seed", type=int, default=synth.SynthSpec.seed)
    return parser


_OVERRIDES = (
    "out", "events", "fences", "pois", "transit", "trajectories", "threads", "seed", "widths",
    "window", "excluded_dates", "emit_heatmap", "silhouette_raw",
)


def resolve_config(args):
    cfg = load_config(args.config) if args.config else RunConfig()
    mapping = cfg.to_dict()
    for key in _OVERRIDES:
        value = getattr(args, key, None)
        if value is not None:
            mapping[key] = value
    return config_from_mapping(mapping)


def _error_doc(stage, exc):
    return {"stage": stage, "error": type(exc).__name__, "message": str(exc)}


def run_command(args):
    try:
        cfg = resolve_config(args)
        if args.print_config:
            print(cfg.to_json())
            return 0
        cfg.validate(pipeline.STAGE_INPUTS[args.command])
    except BikeCongestError as exc:
        print(json.dumps(_error_doc("config", exc)), file=sys.stderr)
        return exc.exit_code

    out_dir = Path(cfg.out)
    manifest = pipeline.Manifest(command=args.command, config=cfg.to_dict())
    code = 0
    try:
        outputs = pipeline.run(args.command, cfg, manifest)
        for name in sorted(outputs):
            write_atomic(out_dir / name, outputs[name])
        manifest.outputs = sorted(outputs)
        manifest.status = "ok"
    except BikeCongestError as exc:
        manifest.status = "failed"
        manifest.error = _error_doc(manifest.current_stage, exc)
        code = exc.exit_code
    except Exception as exc:  # noqa: BLE001 -- surfaced as exit code 4
        log.debug("unexpected failure", exc_info=True)
        manifest.status = "failed"
        manifest.error = _error_doc(manifest.current_stage, exc)
        code = 4
    write_atomic(out_dir / "manifest.json", json_bytes(manifest.to_dict()))
    if code:
        print(json.dumps(manifest.error), file=sys.stderr)
    else:
        log.info("%s: wrote %d files to %s", args.command, len(manifest.outputs), out_dir)
    return code


def run_synth(args):
    spec = synth.SynthSpec(
        n_fences=args.n_fences, n_bikes=args.n_bikes, n_trips=args.n_trips,
        n_pois=args.n_pois, days=args.days, start_date=args.start_date,
        spacing_m=args.spacing_m, seed=args.seed,
    )
    try:
        if min(spec.n_fences, spec.n_bikes, spec.n_trips, spec.n_pois) < 0 or spec.days < 1:
            raise ConfigError("synth counts must be non-negative and days >= 1")
        files = synth.write(synth.generate(spec), args.out)
    except BikeCongestError as exc:
        print(json.dumps(_error_doc("synth", exc)), file=sys.stderr)
        return exc.exit_code
    except ValueError as exc:
        print(json.dumps(_error_doc("synth", exc)), file=sys.stderr)
        return 2
    log.info("synth: wrote %s to %s", ", ".join(files), args.out)
    return 0


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    if args.command == "synth":
        return run_synth(args)
    return run_command(args)


if __name__ == "__main__":
    sys.exit(main())
