"""Command-line front end.

Subcommands: ``simulate``, ``mindet``, ``papr``, ``verify-nvd``,
``worst-case``, ``slice-demo``. Exit status is 0 on success, 1 when a
verification fails and 2 on usage or runtime errors.
"""
import argparse
import os
import sys
import time
from dataclasses import dataclass, field

import numpy as np

from .channel import Constellation
from .codes import CODE_NAMES, make_code
from .detector import pam_slice
from .errors import STBCError
from .metrics import DECODERS, SimConfig, min_det, papr, run_cer, worst_case_count
from .nvdproof import verify_nvd

COMMANDS = ("simulate", "mindet", "papr", "verify-nvd", "worst-case", "slice-demo")
SUPPORTED_M = (4, 16, 64)

EXIT_OK, EXIT_FAILED, EXIT_ERROR = 0, 1, 2


class UsageError(Exception):
    pass


@dataclass
class RunConfig:
    command: str
    code: str = "new54"
    M: int | None = None
    nr: int = 2
    snr_db: list = field(default_factory=lambda: [0.0, 5.0, 10.0, 15.0, 20.0])
    seed: int = 1
    n_max: int = 2
    x_max: int = 50
    max_trials: int = 10_000_000
    target_errors: int = 100
    decoder: str = "sphere"
    workers: int | None = None
    phi: float | None = None
    z: float = 0.3
    r_diag: float = 1.0
    out_path: str | None = None

    @property
    def m(self):
        return 4 if self.M is None else self.M


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _snr_list(text):
    try:
        vals = [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad SNR list {text!r}") from None
    if not vals:
        raise argparse.ArgumentTypeError("empty SNR list")
    return vals


def _square_m(text):
    try:
        m = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"--m must be an integer, got {text!r}") from None
    if m not in SUPPORTED_M:
        raise argparse.ArgumentTypeError(f"--m {m} is not a supported square QAM size {SUPPORTED_M}")
    return m


def _positive(text):
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text}")
    return v


def build_parser():
    common = _Parser(add_help=False)
    common.add_argument("--code", choices=CODE_NAMES, default="new54")
    common.add_argument("--m", dest="M", type=_square_m, default=None, help="QAM size: 4, 16 or 64 (default 4)")
    common.add_argument("--nr", type=_positive, default=2, help="receive antennas")
    common.add_argument("--snr", dest="snr_db", type=_snr_list, default=[0.0, 5.0, 10.0, 15.0, 20.0],
                        help="comma-separated SNR points in dB")
    common.add_argument("--seed", type=int, default=1)
    common.add_argument("--n-max", type=_positive, default=2, help="difference grid bound |n_i| <= n_max")
    common.add_argument("--x-max", type=_positive, default=50, help="Diophantine search bound")
    common.add_argument("--max-trials", type=_positive, default=10_000_000)
    common.add_argument("--target-errors", type=_positive, default=100)
    common.add_argument("--decoder", choices=DECODERS, default="sphere")
    common.add_argument("--workers", type=_positive, default=None, help="default: CPU count")
    common.add_argument("--phi", type=float, default=None, help="rotation angle for new54 (radians)")
    common.add_argument("--z", type=float, default=0.3, help="slice-demo: received value")
    common.add_argument("--r-diag", type=float, default=1.0, help="slice-demo: diagonal gain")
    common.add_argument("--out", dest="out_path", default=None, help="output file (default: stdout)")

    parser = _Parser(prog="stbc54", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for name in COMMANDS:
        sub.add_parser(name, parents=[common])
    return parser


def parse_args(argv=None):
    ns = build_parser().parse_args(argv)
    cfg = RunConfig(**vars(ns))
    if cfg.seed < 0 or cfg.seed >= 2**64:
        raise UsageError("--seed must fit in 64 unsigned bits")
    if cfg.r_diag <= 0:
        raise UsageError("--r-diag must be positive")
    return cfg


def _emit(cfg, text):
    if cfg.out_path:
        with open(cfg.out_path, "w", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _summary(cfg, line):
    print(line, file=sys.stderr if cfg.out_path is None else sys.stdout)


def _code(cfg):
    return make_code(cfg.code, cfg.phi)


def _simulate(cfg):
    sim = SimConfig(code=cfg.code, M=cfg.m, nr=cfg.nr, snr_db=cfg.snr_db, seed=cfg.seed,
                    target_errors=cfg.target_errors, max_trials=cfg.max_trials,
                    decoder=cfg.decoder, workers=cfg.workers)
    t0 = time.perf_counter()
    rep = run_cer(sim)
    _emit(cfg, rep.to_csv())
    _summary(cfg, f"simulate {cfg.code} M={cfg.m} nr={cfg.nr}: {sum(rep.trials)} trials, "
                  f"{sum(rep.errors_observed)} errors in {time.perf_counter() - t0:.1f}s")
    return EXIT_OK


def _mindet(cfg):
    res = min_det(_code(cfg), cfg.n_max)
    arg = " ".join(str(int(v)) for v in res.argmin_delta)
    _emit(cfg, f"n_max,min_det,argmin\n{cfg.n_max},{res.value:.9f},{arg}\n")
    _summary(cfg, f"min |det| = {res.value:.6f} for {cfg.code} (n_max={cfg.n_max})")
    return EXIT_OK


def _papr(cfg):
    sizes = SUPPORTED_M if cfg.M is None else (cfg.M,)
    code = _code(cfg)
    values = {m: float(papr(code, m)[0]) for m in sizes}
    _emit(cfg, "m,papr_db\n" + "".join(f"{m},{v:.4f}\n" for m, v in values.items()))
    _summary(cfg, "PAPR " + ", ".join(f"{m}-QAM {v:.3f} dB" for m, v in values.items()))
    return EXIT_OK


def _verify(cfg):
    rep = verify_nvd(cfg.n_max, cfg.x_max)
    _emit(cfg, rep.format() + "\n")
    if cfg.out_path:
        print(f"verify-nvd: {'PASS' if rep.passed else 'FAIL'} ({len(rep.claims)} checks)")
    return EXIT_OK if rep.passed else EXIT_FAILED


def _worst(cfg):
    count = worst_case_count(_code(cfg), cfg.m)
    _emit(cfg, f"m,worst_case\n{cfg.m},{count}\n")
    _summary(cfg, f"worst-case leaves for {cfg.code} at {cfg.m}-QAM: {count}")
    return EXIT_OK


def _slice_demo(cfg):
    got = float(pam_slice(cfg.z, cfg.r_diag, cfg.m))
    axis = Constellation(cfg.m).pam_axis
    brute = float(axis[np.argmin((cfg.z - cfg.r_diag * axis) ** 2)])
    _emit(cfg, f"z,r_diag,m,slice,brute_force\n{cfg.z:g},{cfg.r_diag:g},{cfg.m},{got:g},{brute:g}\n")
    _summary(cfg, f"slice({cfg.z:g}/{cfg.r_diag:g}) on {cfg.m}-QAM axis -> {got:g}")
    return EXIT_OK if got == brute else EXIT_FAILED


_HANDLERS = {
    "simulate": _simulate,
    "mindet": _mindet,
    "papr": _papr,
    "verify-nvd": _verify,
    "worst-case": _worst,
    "slice-demo": _slice_demo,
}


def execute(cfg):
    try:
        return _HANDLERS[cfg.command](cfg)
    except (STBCError, ValueError, KeyError, OSError) as exc:
        print(f"stbc54 {cfg.command}: error: {exc}", file=sys.stderr)
        return EXIT_ERROR


def main(argv=None):
    try:
        cfg = parse_args(argv)
    except UsageError as exc:
        print(f"stbc54: usage error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    return execute(cfg)


if __name__ == "__main__":
    sys.exit(main())
