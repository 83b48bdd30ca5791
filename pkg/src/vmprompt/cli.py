"""Command-line entry point.

Exit codes: 0 success, 1 usage error, 2 data error, 3 failed check.
"""

import argparse
import logging
import os
import sys

import numpy as np

from . import imageio
from .config import RunConfig, build_config, load_config
from .errors import TrainingDiverged, VmpError
from .framediff import diff_maps
from .gradients import run_gradcheck
from .pn import PnHyper, PnKind, PnParams, apply_pn, classic_pn, params_from_slope_shift
from .prompts import attention_sequence, motion_prompts
from .synthetic import generate_synthetic, split_dataset
from .training import lambda_sweep, train

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_CHECK = 0, 1, 2, 3

CLASSIC_DEFAULTS = {
    PnKind.GAMMA: 0.5,
    PnKind.MAXEXP: 10.0,
    PnKind.ASINHE: 10.0,
    PnKind.SIGME: 10.0,
}

log = logging.getLogger("vmprompt")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: error: {message}")


def _hyper_flags(p):
    p.add_argument("--alpha", type=float)
    p.add_argument("--beta", type=float)
    p.add_argument("--gamma", type=float)
    p.add_argument("--epsilon", type=float)


def _param_flags(p):
    p.add_argument("--m", type=float, help="raw slope parameter")
    p.add_argument("--n", type=float, help="raw shift parameter")
    p.add_argument("--a", type=float, help="target slope (alternative to --m)")
    p.add_argument("--b", type=float, help="target shift (alternative to --n)")


def build_parser():
    parser = _Parser(prog="vmprompt", description="Video motion prompt toolkit")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)

    for name, text in (
        ("diff", "colour-mapped frame differencing maps"),
        ("attn", "attention maps from the learnable PN"),
        ("prompt", "motion prompt frames"),
        ("compare-pn", "classic PN maps next to the learnable one"),
    ):
        p = sub.add_parser(name, help=text)
        p.add_argument("pattern", help="glob matching P5/P6 frames, sorted by name")
        p.add_argument("-o", "--out", required=True, help="output directory")
        if name != "diff":
            _param_flags(p)
            _hyper_flags(p)
        if name == "compare-pn":
            p.add_argument(
                "--classic-param", action="append", default=[], metavar="KIND=VALUE",
                help="override a classic PN parameter, e.g. gamma=0.3",
            )

    p = sub.add_parser("gradcheck", help="verify analytic gradients against finite differences")
    p.add_argument("--points", type=int, default=1000)
    p.add_argument("--seed", type=int, default=0)

    for name in ("train", "sweep"):
        p = sub.add_parser(name, help=f"{name} on synthetic clips from a config file")
        p.add_argument("config", nargs="?", help="key = value configuration file")
        p.add_argument("-o", "--out", required=True, help="output directory")
        p.add_argument("--seed", type=int)
        p.add_argument("--lambda", dest="lam", type=float)
        _hyper_flags(p)
        if name == "sweep":
            p.add_argument("--lambdas", help="comma-separated lambda values")
    return parser


def _hyper(args):
    overrides = {k: getattr(args, k) for k in ("alpha", "beta", "gamma", "epsilon")}
    return PnHyper(**{k: v for k, v in overrides.items() if v is not None})


def _params(args, hyper):
    target = (args.a, args.b)
    if any(v is not None for v in target):
        if None in target:
            raise UsageError("--a and --b must be given together")
        if args.m is not None or args.n is not None:
            raise UsageError("give either --m/--n or --a/--b, not both")
        return params_from_slope_shift(args.a, args.b, hyper)
    return PnParams(args.m or 0.0, args.n or 0.0, hyper)


def _frame_name(out, stem, t):
    return os.path.join(out, f"{stem}_{t:03d}.ppm")


def _write_maps(out, stem, maps, spec):
    for t in range(maps.shape[-1]):
        imageio.write_colormapped(maps[..., t], spec, _frame_name(out, stem, t))


def _write_clip_outputs(out, frames, params):
    diffs = diff_maps(frames)
    attn = attention_sequence(diffs, params)
    prompts = motion_prompts(frames, attn)
    _write_maps(out, "diff", diffs, imageio.DIFF_MAP)
    _write_maps(out, "attn", attn, imageio.ATTENTION_MAP)
    for t in range(prompts.shape[-1]):
        imageio.write_pnm(_frame_name(out, "prompt", t), imageio.to_uint8(prompts[..., t]))


def cmd_maps(args):
    params = None if args.command == "diff" else _params(args, _hyper(args))
    frames = imageio.read_frames(args.pattern)
    os.makedirs(args.out, exist_ok=True)
    diffs = diff_maps(frames)
    if args.command == "diff":
        _write_maps(args.out, "diff", diffs, imageio.DIFF_MAP)
        return EXIT_OK
    attn = attention_sequence(diffs, params)
    if args.command == "attn":
        _write_maps(args.out, "attn", attn, imageio.ATTENTION_MAP)
    elif args.command == "prompt":
        prompts = motion_prompts(frames, attn)
        for t in range(prompts.shape[-1]):
            imageio.write_pnm(_frame_name(args.out, "prompt", t), imageio.to_uint8(prompts[..., t]))
    else:
        classic = dict(CLASSIC_DEFAULTS)
        for item in args.classic_param:
            try:
                kind, value = item.split("=")
                classic[PnKind(kind.strip().lower())] = float(value)
            except ValueError:
                raise UsageError(f"bad --classic-param {item!r}") from None
        for kind, value in classic.items():
            _write_maps(args.out, f"pn-{kind.value}", classic_pn(kind, diffs, value), imageio.DIFF_MAP)
        _write_maps(args.out, "pn-learnable", apply_pn(diffs, params), imageio.ATTENTION_MAP)
    return EXIT_OK


def cmd_gradcheck(args):
    partials, end_to_end = run_gradcheck(args.points, args.seed)
    ok = True
    for r in partials + end_to_end:
        informative = "sign dropped" in r.name
        status = "PASS" if r.passed else ("FAIL (expected)" if informative else "FAIL")
        print(f"{status:16s} {r.name:32s} max rel err {r.max_rel_error:.3e} "
              f"(tol {r.tolerance:g}, n={r.checked})")
        if not informative:
            ok = ok and r.passed
    return EXIT_OK if ok else EXIT_CHECK


def _run_config(args):
    cfg = load_config(args.config) if args.config else RunConfig()
    overrides = {}
    if args.seed is not None:
        overrides["seed"] = str(args.seed)
    if args.lam is not None:
        overrides["lam"] = str(args.lam)
    for key in ("alpha", "beta", "gamma", "epsilon"):
        if getattr(args, key) is not None:
            overrides[key] = str(getattr(args, key))
    if getattr(args, "lambdas", None):
        overrides["lambdas"] = args.lambdas
    return build_config(overrides, cfg)


def _write_text(path, text):
    imageio.atomic_write(path, text.encode("utf-8"))


def cmd_train(args):
    cfg = _run_config(args)
    data = generate_synthetic(cfg.data)
    train_set, val_set = split_dataset(data, cfg.val_fraction, cfg.data.seed)
    os.makedirs(args.out, exist_ok=True)
    if args.command == "train":
        report = train(train_set, cfg.train, val=val_set, hyper=cfg.hyper)
        _write_text(os.path.join(args.out, "report.csv"), report.to_csv())
        final = report.final
        print(f"final a={final.a:.4f} b={final.b:.4f} variation={final.variation:.4f} "
              f"train_acc={final.train_acc:.3f} val_acc={final.val_acc:.3f}")
        sample = val_set if len(val_set) else train_set
        _write_clip_outputs(args.out, sample.frames[0], report.params)
        return EXIT_OK
    sweep = lambda_sweep(train_set, cfg.train, cfg.lambdas, val=val_set, hyper=cfg.hyper)
    _write_text(os.path.join(args.out, "sweep.csv"), sweep.to_csv())
    sample = val_set if len(val_set) else train_set
    for lam, report in zip(sweep.lambdas, sweep.reports):
        tag = f"lambda_{lam:g}"
        _write_text(os.path.join(args.out, f"report_{tag}.csv"), report.to_csv())
        clip_dir = os.path.join(args.out, tag)
        os.makedirs(clip_dir, exist_ok=True)
        _write_clip_outputs(clip_dir, sample.frames[0], report.params)
    print(sweep.to_csv(), end="")
    return EXIT_OK


COMMANDS = {
    "diff": cmd_maps,
    "attn": cmd_maps,
    "prompt": cmd_maps,
    "compare-pn": cmd_maps,
    "gradcheck": cmd_gradcheck,
    "train": cmd_train,
    "sweep": cmd_train,
}


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command is None:
            raise UsageError("a subcommand is required")
        logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING)
        return COMMANDS[args.command](args)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        parser.print_usage(sys.stderr)
        return EXIT_USAGE
    except TrainingDiverged as exc:
        print(f"error: {exc}", file=sys.stderr)
        for key, value in exc.state.items():
            print(f"  {key} = {np.array2string(np.asarray(value), precision=6)}", file=sys.stderr)
        return EXIT_DATA
    except (VmpError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
