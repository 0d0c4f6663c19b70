"""Command line: ``sqzsim <scenario> --config FILE --out DIR [--seed N] [--set key=value]...``.

Also ``sqzsim validate [--config FILE]`` and ``sqzsim list``.
Exit codes: 0 ok, 1 config/data error, 2 usage error, 3 fit did not converge.
"""

from __future__ import annotations

import argparse
import math
import logging
import sys
import warnings

from .config import ConfigError, ConfigWarning, default_config_path, load_config
from .fitting import FitError
from .netlist import build_pic, detection_efficiency, propagate
from .scenarios import SCENARIOS, run_scenario

log = logging.getLogger("sqzsim")

EXIT_OK, EXIT_CONFIG, EXIT_USAGE, EXIT_FIT = 0, 1, 2, 3


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="sqzsim", description="Squeezed-light sensor scenario runner.")
    p.add_argument("command", help="scenario name, 'validate' or 'list'")
    p.add_argument("--config", help="TOML config (default: bundled operating point)")
    p.add_argument("--out", help="output directory for scenario artifacts")
    p.add_argument("--seed", type=int, help="override the scenario seed")
    p.add_argument("--set", dest="overrides", action="append", default=[], metavar="KEY=VALUE",
                   help="override a config value (repeatable)")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def derived_report(cfg) -> list[str]:
    """Quantities computed from the resolved parameters, echoed by ``validate``."""
    res = propagate(build_pic(cfg), cfg["laser.power_mW"] * 1e-3)
    zeta = detection_efficiency(cfg)
    return [
        f"derived: squeezer.eta = {cfg['squeezer.eta_pct_per_W_cm2']:g} %/(W cm^2)",
        f"derived: lo.vpi = {cfg['lo.vpi_V']:g} V",
        f"derived: leakage epsilon target = {100 * cfg['leakage.epsilon']:.1f} %",
        f"derived: detection efficiency zeta = {100 * zeta:.1f} %",
        f"derived: pump into SHG = {res.nodes['shg_in_fh'] * 1e3:.2f} mW, "
        f"LO at BHD = {res.nodes['bhd_in_lo'] * 1e3:.2f} mW",
        f"derived: propagated epsilon = {100 * res.eps:.2f} %",
        f"derived: on-chip squeezing = {-10 * math.log10(res.onchip_ratio):.3f} dB",
    ]


def _validate(args) -> int:
    path = args.config or default_config_path()
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", ConfigWarning)
        cfg = load_config(path, args.overrides)
    for w in cfg.warnings:
        print(f"warning: {w}")
    for line in cfg.report() + derived_report(cfg):
        print(line)
    print(f"ok: {path}")
    return EXIT_OK


def main(argv=None) -> int:
    parser = _parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        if args.command == "list":
            for name in SCENARIOS:
                print(name)
            return EXIT_OK
        if args.command == "validate":
            return _validate(args)
        if args.command not in SCENARIOS:
            parser.print_usage(sys.stderr)
            print(f"sqzsim: unknown scenario {args.command!r}; try 'sqzsim list'", file=sys.stderr)
            return EXIT_USAGE
        if not args.out:
            parser.print_usage(sys.stderr)
            print("sqzsim: --out is required", file=sys.stderr)
            return EXIT_USAGE
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always", ConfigWarning)
            cfg = load_config(args.config, args.overrides)
        for w in caught:
            print(f"warning: {w.message}", file=sys.stderr)
        manifest = run_scenario(cfg, args.command, args.out, seed=args.seed)
        log.info("wrote %d files to %s", len(manifest["files"]), args.out)
        for key, value in manifest["summary"].items():
            print(f"{key} = {value}")
        return EXIT_OK
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except FitError as exc:
        print(f"fit error: {exc}", file=sys.stderr)
        return EXIT_FIT
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
