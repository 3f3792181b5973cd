"""``recon`` command-line entry point."""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from .config import (METHODS, ConfigError, ExperimentSpec, emit_config, parse_config,
                     parse_config_text)
from .experiments import run_experiment
from .imageio import RAW_SUFFIXES, read_image, write_image, write_raw
from .metrics import entropy, psnr, ssim
from .phantoms import KINDS, Phantom, render_phantom

__all__ = ["main", "build_parser"]

# direct flags and the config keys they stand for
_DIRECT = {
    "seed": "experiment.seed",
    "out_dir": "experiment.output_dir",
    "views": "experiment.views",
    "noise": "experiment.noise",
    "phantom": "phantom.kind",
    "size": "phantom.size",
    "phantom_path": "phantom.path",
    "epochs": "drp.epochs",
    "lr": "drp.lr",
    "channels": "drp.channels",
    "filter": "fbp.filter",
}


def _add_run_flags(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("overrides (each maps onto one config key)")
    g.add_argument("--seed", type=int, help="experiment.seed")
    g.add_argument("--out-dir", dest="out_dir", help="experiment.output_dir")
    g.add_argument("--views", help="experiment.views, comma separated (e.g. 30,60)")
    g.add_argument("--noise", type=float, help="experiment.noise (sinogram noise sigma)")
    g.add_argument("--phantom", choices=KINDS[:-1], help="phantom.kind")
    g.add_argument("--phantom-path", dest="phantom_path",
                   help="phantom.path (sets phantom.kind = file)")
    g.add_argument("--size", type=int, help="phantom.size")
    g.add_argument("--filter", choices=("ramlak", "shepp-logan"), help="fbp.filter")
    g.add_argument("--epochs", type=int, help="drp.epochs")
    g.add_argument("--beta", type=float,
                   help="step_beta of the method being run (drp.step_beta for `run`)")
    g.add_argument("--lr", type=float, help="drp.lr")
    g.add_argument("--channels", help="drp.channels, five comma-separated ints")
    g.add_argument("--set", action="append", default=[], metavar="SECTION.KEY=VALUE",
                   help="any other config key; repeatable")


def build_parser() -> argparse.ArgumentParser:
    defaults = emit_config(ExperimentSpec())
    parser = argparse.ArgumentParser(
        prog="recon",
        description="Sparse-view CT reconstruction: FBP, gradient descent, ADMM-TV and "
                    "Deep Radon Prior with its ablations.",
        epilog="configuration keys and their defaults:\n\n" + defaults,
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    parser.add_argument("-v", "--verbose", action="count", default=0,
                        help="log progress (-vv for debug output)")
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")

    run = sub.add_parser("run", help="run every method/view cell of a config file",
                         epilog="configuration keys and their defaults:\n\n" + defaults,
                         formatter_class=argparse.RawDescriptionHelpFormatter)
    run.add_argument("config", help="key = value config file")
    _add_run_flags(run)

    for method in METHODS:
        m = sub.add_parser(method, help=f"reconstruct with {method} only")
        m.add_argument("--config", help="optional config file to start from")
        _add_run_flags(m)

    ph = sub.add_parser("phantom", help="render a phantom to an image file")
    ph.add_argument("--kind", choices=KINDS, default="shepp_logan")
    ph.add_argument("--size", type=int, default=64)
    ph.add_argument("--path", help="source image for --kind file")
    ph.add_argument("--out", required=True,
                    help="output path; .png/.pgm for 8-bit, .f64/.raw for float64")

    me = sub.add_parser("metrics", help="PSNR, SSIM and entropy of an image vs a reference")
    me.add_argument("image")
    me.add_argument("reference")
    me.add_argument("--peak", type=float, default=1.0, help="PSNR peak value (default 1)")
    return parser


def _overrides(args, method: str | None) -> dict[str, str]:
    out = {}
    for dest, key in _DIRECT.items():
        value = getattr(args, dest, None)
        if value is not None:
            out[key] = str(value)
    if args.phantom_path is not None:
        out["phantom.kind"] = "file"
    if args.beta is not None:
        section = "gd" if method == "gd" else "drp"
        out[f"{section}.step_beta"] = str(args.beta)
    for item in args.set:
        key, sep, value = item.partition("=")
        if not sep:
            raise ConfigError(f"--set expects SECTION.KEY=VALUE, got {item!r}")
        out[key.strip()] = value.strip()
    if method is not None:
        out["experiment.methods"] = method
    return out


def _spec(args) -> ExperimentSpec:
    method = None if args.command == "run" else args.command
    overrides = _overrides(args, method)
    if args.config:
        return parse_config(args.config, overrides)
    return parse_config_text("", overrides)


def _cmd_experiment(args) -> int:
    spec = _spec(args)
    rows = run_experiment(spec, echo=print)
    return 0 if any(r.status == "ok" for r in rows) else 1


def _cmd_phantom(args) -> int:
    img = render_phantom(Phantom(args.kind, args.size, path=args.path))
    out = Path(args.out)
    written = write_raw(out, img) if out.suffix.lower() in RAW_SUFFIXES else write_image(out, img)
    print(f"wrote {written}")
    return 0


def _cmd_metrics(args) -> int:
    img, ref = read_image(args.image), read_image(args.reference)
    print(f"psnr    {psnr(img, ref, args.peak):.4f}")
    print(f"ssim    {ssim(img, ref):.6f}")
    print(f"entropy {entropy(img):.6f}")
    return 0


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    level = (logging.WARNING, logging.INFO, logging.DEBUG)[min(args.verbose, 2)]
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "phantom":
            return _cmd_phantom(args)
        if args.command == "metrics":
            return _cmd_metrics(args)
        return _cmd_experiment(args)
    except (ConfigError, ValueError, OSError) as exc:
        print(f"recon: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
