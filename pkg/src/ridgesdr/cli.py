"""Command-line entry point: ``ridgesdr {fit,sweep,verify,plot}``.

Exit codes: 0 success, 1 usage error, 2 numerical failure.
"""

from __future__ import annotations

import argparse
import sys
from contextlib import nullcontext

from .driver import PRESETS, RunAborted, preset_config, run_alternating
from .experiments import (DEFAULT_CS, DEFAULT_LAMBDAS, SweepSpec, ackley_indicator_target, emit_chart,
                          read_sweep_csv, run_sweep)
from .optimizer import NonFiniteError, OptimizerConfig
from .spectral import coordinate_projector

EXIT_OK, EXIT_USAGE, EXIT_NUMERIC = 0, 1, 2
VERIFY_TOL = 1e-6


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.format_usage()}{self.prog}: error: {message}")


def _floats(text):
    return tuple(float(v) for v in text.split(",") if v.strip())


def _ints(text):
    return tuple(int(v) for v in text.split(",") if v.strip())


def read_config_file(path):
    """Flat ``key = value`` lines; '#' starts a comment. Returns argv tokens."""
    tokens = []
    with open(path) as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise UsageError(f"{path}:{lineno}: expected 'key = value'")
            key, value = (p.strip() for p in line.split("=", 1))
            flag = "--" + key.replace("_", "-")
            if value.lower() in ("true", "yes", "on") and key.replace("_", "-") == "cold-start":
                tokens.append(flag)
            elif value.lower() in ("false", "no", "off") and key.replace("_", "-") == "cold-start":
                continue
            else:
                tokens.extend([flag, value])
    return tokens


def build_parser():
    p = _Parser(prog="ridgesdr", description="Penalised alternating subspace recovery.")
    sub = p.add_subparsers(dest="command", parser_class=_Parser)

    fit = sub.add_parser("fit", help="run the alternating scheme on the Ackley target")
    fit.add_argument("--config", help="flat key = value file; flags override it")
    fit.add_argument("--n", type=int, required=True)
    fit.add_argument("--k", type=int, required=True)
    fit.add_argument("--lambda", dest="lam", type=float, default=0.1)
    fit.add_argument("--C", dest="C", type=float, default=0.0, help="height of the unit-ball bump")
    fit.add_argument("--gamma", type=float, default=None, help="cutoff steepness, 'inf' for a hard ball")
    g = fit.add_mutually_exclusive_group()
    g.add_argument("--radius", type=float, default=None)
    g.add_argument("--quantile-p", type=float, default=None)
    fit.add_argument("--iters", type=int, default=None, help="outer iterations N")
    fit.add_argument("--units", type=int, default=None, help="ridge units M")
    fit.add_argument("--gauss-samples", type=int, default=None, help="K")
    fit.add_argument("--cutoff-samples", type=int, default=None, help="L")
    fit.add_argument("--steps", type=int, default=None, help="inner Adam steps per outer iteration")
    fit.add_argument("--lr", type=float, default=None)
    fit.add_argument("--cold-start", action="store_true")
    fit.add_argument("--seed", type=int, default=0)
    fit.add_argument("--preset", choices=sorted(PRESETS), default="desk")
    fit.add_argument("--out", required=True, help="JSON result path")
    fit.add_argument("--trace", help="optional CSV trace path")
    fit.add_argument("--threads", type=int, default=None)

    sw = sub.add_parser("sweep", help="accuracy sweep over lambda and C")
    sw.add_argument("--dims", type=_ints, default=(4,))
    sw.add_argument("--C", dest="Cs", type=_floats, default=DEFAULT_CS)
    sw.add_argument("--lambdas", type=_floats, default=DEFAULT_LAMBDAS)
    sw.add_argument("--seeds", type=_ints, default=(0, 1, 2))
    sw.add_argument("--preset", choices=sorted(PRESETS), default="desk")
    sw.add_argument("--iters", type=int, default=None)
    sw.add_argument("--out", required=True, help="CSV table path")
    sw.add_argument("--chart", help="optional SVG path")
    sw.add_argument("--threads", type=int, default=None)

    ve = sub.add_parser("verify", help="grid checks of the Fourier identities")
    ve.add_argument("--points", type=int, default=512)
    ve.add_argument("--extent", type=float, default=12.0)

    pl = sub.add_parser("plot", help="sweep CSV to SVG chart")
    pl.add_argument("--in", dest="inp", required=True)
    pl.add_argument("--out", required=True)
    return p


def _thread_limit(threads):
    if threads is None:
        return nullcontext()
    from threadpoolctl import threadpool_limits

    return threadpool_limits(limits=threads)


def _fit_config(args):
    over = {"lam": args.lam, "seed": args.seed}
    if args.gamma is not None:
        over["gamma"] = args.gamma
    if args.radius is not None:
        over["radius"] = args.radius
    if args.quantile_p is not None:
        over["quantile_p"], over["radius"] = args.quantile_p, None
    for flag, key in (("iters", "N"), ("units", "M"), ("gauss_samples", "K"), ("cutoff_samples", "L")):
        if getattr(args, flag) is not None:
            over[key] = getattr(args, flag)
    opt = {}
    if args.steps is not None:
        opt["step_count"] = args.steps
    if args.lr is not None:
        opt["learning_rate"] = args.lr
    if args.cold_start:
        opt["warm_start"] = False
    over["optimizer"] = OptimizerConfig(**opt)
    return preset_config(args.preset, args.n, args.k, **over)


def cmd_fit(args):
    try:
        cfg = _fit_config(args)
        target = ackley_indicator_target(cfg.n, args.C)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    P_true = coordinate_projector(cfg.n, range(2)) if cfg.k == 2 else None
    with _thread_limit(args.threads):
        res = run_alternating(cfg, target, P_true)
    res.write_json(args.out)
    if args.trace:
        res.write_trace_csv(args.trace)
    last = res.trace[-1] if res.trace else None
    msg = f"wrote {args.out}"
    if last is not None:
        msg += f" (N={cfg.N}, total={last.total:.6g}"
        msg += f", acc={last.acc:.4f})" if last.acc is not None else ")"
    print(msg)
    return EXIT_OK


def cmd_sweep(args):
    over = {} if args.iters is None else {"N": args.iters}
    try:
        spec = SweepSpec(dims=args.dims, Cs=args.Cs, lambdas=args.lambdas, seeds=args.seeds,
                         preset=args.preset, overrides=over)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc

    def progress(row):
        flag = " FAILED" if row.get("failed") else ""
        print(f"n={row['n']} C={row['C']:g} lambda={row['lambda']:g} seed={row['seed']} "
              f"acc={row['acc']:.4f}{flag}", flush=True)

    with _thread_limit(args.threads):
        rows = run_sweep(spec, args.out, progress)
    if args.chart:
        emit_chart(rows, args.chart)
    return EXIT_NUMERIC if any(r.get("failed") for r in rows) else EXIT_OK


def cmd_verify(args):
    from .fourier import verify_suite

    try:
        results = verify_suite(args.points, args.extent)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    ok = True
    for name, value in results.items():
        good = value < VERIFY_TOL
        ok &= good
        print(f"{name:28s} {value:.3e} {'ok' if good else 'FAIL'}")
    return EXIT_OK if ok else EXIT_NUMERIC


def cmd_plot(args):
    rows = read_sweep_csv(args.inp)
    if not rows:
        raise UsageError(f"{args.inp}: empty table")
    emit_chart(rows, args.out)
    return EXIT_OK


COMMANDS = {"fit": cmd_fit, "sweep": cmd_sweep, "verify": cmd_verify, "plot": cmd_plot}


def parse_and_dispatch(argv=None):
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        if not argv:
            raise UsageError(parser.format_help())
        if argv[0] == "fit" and "--config" in argv:
            i = argv.index("--config")
            if i + 1 >= len(argv):
                raise UsageError("--config needs a path")
            path = argv[i + 1]
            argv = ["fit"] + read_config_file(path) + argv[1:i] + argv[i + 2:]
        args = parser.parse_args(argv)
        if args.command is None:
            raise UsageError(parser.format_help())
        return COMMANDS[args.command](args)
    except UsageError as exc:
        print(str(exc).rstrip(), file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"ridgesdr: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (RunAborted, NonFiniteError, FloatingPointError) as exc:
        where = f" at iteration {exc.iteration}" if isinstance(exc, RunAborted) else ""
        print(f"ridgesdr: numerical abort{where}: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


def main():
    sys.exit(parse_and_dispatch())


if __name__ == "__main__":
    main()
