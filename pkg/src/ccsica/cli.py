"""Command-line front end: ``ccsica {gen,separate,landscape,sweep,eval}``.

Exit codes: 0 success, 2 usage error, 3 numerical failure, 4 I/O failure.
"""
from __future__ import annotations

import argparse
import csv
import logging
import os
import sys
import time
from pathlib import Path

import numpy as np

from . import datagen, fileio
from .divergence import binary_sweep
from .errors import NumericalError
from .evaluation import evaluate, landscape, landscape_minima
from .ica import IcaConfig, center_whiten, run, standardize

log = logging.getLogger("ccsica")

EXIT_USAGE, EXIT_NUMERIC, EXIT_IO = 2, 3, 4
OUT_DIR_ENV = "CCSICA_OUT_DIR"
MAX_SAMPLES = 4000
WARN_SAMPLES = 2000

# IcaConfig fields settable from flags or a config file, with their parsers
CONFIG_KEYS = {
    "alpha": float,
    "gamma": float,
    "max_iter": int,
    "epsilon": float,
    "bandwidth": float,
    "seed": int,
    "objective": str,
    "backtrack": lambda v: str(v).strip().lower() in ("1", "true", "yes", "on"),
    "truncate": float,
}


class UsageError(ValueError):
    pass


def _out_dir(arg) -> Path:
    d = Path(arg if arg is not None else os.environ.get(OUT_DIR_ENV, "."))
    if not d.is_dir():
        raise FileNotFoundError(f"output directory {str(d)!r} does not exist")
    return d


def read_config_file(path) -> dict:
    """Parse ``key = value`` lines (``#`` comments allowed) into IcaConfig kwargs."""
    out = {}
    with open(path) as fh:
        for n, line in enumerate(fh, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            key, sep, val = line.partition("=")
            key = key.strip().replace("-", "_")
            if not sep or key not in CONFIG_KEYS:
                raise UsageError(f"{path}:{n}: unrecognized config line {line!r}")
            val = val.strip()
            out[key] = None if val.lower() in ("", "none") else CONFIG_KEYS[key](val)
    return out


# -- gen ---------------------------------------------------------------------

def cmd_gen(args) -> int:
    out = _out_dir(args.out)
    if args.preset:
        specs, make_mix = datagen.PRESETS[args.preset]
        mixspec = make_mix(args.snr_db)
    else:
        if not args.sources or not args.mixing:
            raise UsageError("give --preset, or both --sources and --mixing")
        specs = tuple(datagen.SourceSpec.parse(s) for s in args.sources.split(","))
        mixspec = datagen.MixSpec(fileio.read_matrix_csv(args.mixing), args.snr_db)
    if args.sources and args.preset:
        specs = tuple(datagen.SourceSpec.parse(s) for s in args.sources.split(","))

    S = datagen.gen_sources(specs, args.T, args.seed)
    X, sigma = datagen.mix(S, mixspec, args.seed + 1)

    files = {"sources": out / "sources.csv", "mixtures": out / "mixtures.csv", "mixing": out / "mixing.csv"}
    if args.format in ("csv", "both"):
        fileio.write_signals_csv(files["sources"], S)
        fileio.write_signals_csv(files["mixtures"], X)
    else:
        del files["sources"], files["mixtures"]
    if args.format in ("wav", "both"):
        for m in range(S.shape[0]):
            files[f"source{m}_wav"] = out / f"source{m}.wav"
            files[f"mixture{m}_wav"] = out / f"mixture{m}.wav"
            fileio.write_wav(files[f"source{m}_wav"], S[m], args.rate)
            fileio.write_wav(files[f"mixture{m}_wav"], X[m], args.rate)
    fileio.write_matrix_csv(files["mixing"], mixspec.A)
    files["manifest"] = out / "gen_manifest.json"
    fileio.write_json(files["manifest"], {
        "command": "gen",
        "preset": args.preset,
        "sources": [{"kind": s.kind, "tau": s.tau} for s in specs],
        "mixing": mixspec.A.tolist(),
        "T": args.T,
        "seed": args.seed,
        "noise_seed": args.seed + 1,
        "snr_db": args.snr_db,
        "noise_sigma": sigma,
        "outputs": {k: str(v) for k, v in files.items()},
    })
    for k, v in files.items():
        print(f"{k}: {v}")
    return 0


# -- separate ----------------------------------------------------------------

def _separate_config(args) -> IcaConfig:
    kw = {}
    if args.replay:
        kw.update(fileio.read_json(args.replay)["config"])
    if args.config:
        kw.update(read_config_file(args.config))
    for key in CONFIG_KEYS:
        val = getattr(args, key, None)
        if val is not None:
            kw[key] = val
    return IcaConfig(**kw)


def cmd_separate(args) -> int:
    inputs = args.input
    reference = args.reference
    if args.replay:
        prev = fileio.read_json(args.replay)
        inputs = inputs or prev["inputs"]
        reference = reference or prev.get("reference")
    if not inputs:
        raise UsageError("no input given")
    cfg = _separate_config(args)
    out = _out_dir(args.out)

    X, rate = fileio.read_signals(inputs)
    M, T = X.shape
    if not 2 <= M <= 8:
        raise UsageError(f"need 2 to 8 input channels, got {M}")
    if T > args.max_samples:
        raise UsageError(f"{T} samples exceeds --max-samples {args.max_samples}")
    if T > WARN_SAMPLES:
        log.warning("T = %d: cost grows as T^2 per iteration, expect a slow run", T)

    t0 = time.perf_counter()
    state, Y = run(X, cfg)
    wall = time.perf_counter() - t0

    files = {
        "demixed": out / "demixed.csv",
        "demixing": out / "demixing.csv",
        "whitening": out / "whitening.csv",
        "trace": out / "trace.csv",
        "manifest": out / "manifest.json",
    }
    fileio.write_signals_csv(files["demixed"], Y)
    fileio.write_matrix_csv(files["demixing"], state.W)
    fileio.write_matrix_csv(files["whitening"], state.whitening.matrix)
    fileio.write_trace_csv(files["trace"], state.divergence_trace)
    if rate is not None:
        for m in range(M):
            files[f"demixed{m}_wav"] = out / f"demixed{m}.wav"
            fileio.write_wav(files[f"demixed{m}_wav"], Y[m], rate)

    manifest = {
        "command": "separate",
        "config": {k: getattr(cfg, k) for k in CONFIG_KEYS},
        "seed": cfg.seed,
        "inputs": [str(p) for p in inputs],
        "reference": str(reference) if reference else None,
        "outputs": {k: str(v) for k, v in files.items()},
        "iterations": state.iteration,
        "converged": state.converged,
        "final_divergence": state.divergence_trace[-1],
        "W": state.W.tolist(),
        "wall_time_s": wall,
    }
    if reference:
        S = fileio.read_signals([reference])[0]
        report = evaluate(S, Y)
        manifest["sir_db"] = report["sir_db"]
        manifest["sir_total_db"] = report["sir_total_db"]
        manifest["permutation"] = report["permutation"]
    fileio.write_json(files["manifest"], manifest)

    print(f"iterations: {state.iteration}  final divergence: {state.divergence_trace[-1]:.6g}")
    if reference:
        print("SIR (dB): " + " ".join(f"{v:.2f}" for v in manifest["sir_db"])
              + f"  total {manifest['sir_total_db']:.2f}")
    print(f"manifest: {files['manifest']}")
    return 0


# -- landscape ---------------------------------------------------------------

def cmd_landscape(args) -> int:
    if args.input:
        X, _ = fileio.read_signals(args.input)
    else:
        specs, make_mix = datagen.PRESETS[args.preset]
        S = datagen.gen_sources(specs, args.T, args.seed)
        X, _ = datagen.mix(S, make_mix(None), args.seed + 1)
    if X.shape[0] != 2:
        raise UsageError(f"landscape needs 2 channels, got {X.shape[0]}")
    prep = {"standardize": standardize, "whiten": lambda x: center_whiten(x)[0], "none": np.asarray}
    Xp = prep[args.prep](X)
    grid = landscape(Xp, args.alpha, args.grid, args.bandwidth, args.objective, args.threads)
    grid.to_csv(args.out)
    print(f"wrote {args.grid}x{args.grid} grid to {args.out}")
    for i, j, v in landscape_minima(grid, 4):
        print(f"minimum at theta1={grid.theta1[i]:.6f} theta2={grid.theta2[j]:.6f}  divergence={v:.6g}")
    return 0


# -- sweep -------------------------------------------------------------------

def sweep_grid(steps: int, upper: float = 0.7) -> np.ndarray:
    """Interior points of (0, upper) at spacing upper/steps."""
    return np.arange(1, steps) * (upper / steps)


def cmd_sweep(args) -> int:
    p = sweep_grid(args.steps)
    with open(args.out, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["pAA", "alpha", "divergence"])
        for a in args.alpha:
            d = binary_sweep(p, a)
            for x, v in zip(p, d):
                w.writerow([f"{x:.9g}", f"{a:.9g}", f"{v:.9g}"])
            k = int(np.nanargmin(d))
            print(f"alpha={a:g}: argmin pAA={p[k]:.6f} divergence={d[k]:.3g}")
    return 0


# -- eval --------------------------------------------------------------------

def cmd_eval(args) -> int:
    S, _ = fileio.read_signals(args.sources)
    Y, _ = fileio.read_signals(args.demixed)
    if S.shape != Y.shape:
        raise UsageError(f"shape mismatch: sources {S.shape} vs demixed {Y.shape}")
    report = evaluate(S, Y, center=not args.no_center)
    for m, v in enumerate(report["sir_db"]):
        k = report["kurtosis_estimates"][report["permutation"][m]]
        kt = "n/a" if k is None else f"{k:.3f}"
        print(f"source {m}: estimate {report['permutation'][m]}  SIR {v:.2f} dB  kurtosis {kt}")
    print(f"total SIR {report['sir_total_db']:.2f} dB")
    if args.json:
        fileio.write_json(args.json, report)
    return 0


# -- parser ------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("-v", "--verbose", action="store_true")
    common.add_argument("--threads", type=int, default=1,
                        help="worker threads; only the landscape grid is parallelized")
    p = argparse.ArgumentParser(prog="ccsica", description="Convex Cauchy-Schwarz divergence ICA")
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen", parents=[common], help="generate synthetic sources and mixtures")
    g.add_argument("--preset", choices=sorted(datagen.PRESETS))
    g.add_argument("--sources", help="comma list like uniform:3,laplace:1")
    g.add_argument("--mixing", help="mixing matrix CSV (with --sources)")
    g.add_argument("--T", type=int, default=1000)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--snr-db", type=float)
    g.add_argument("--format", choices=["csv", "wav", "both"], default="csv")
    g.add_argument("--rate", type=int, default=8000)
    g.add_argument("--out", help=f"output directory (default ${OUT_DIR_ENV} or .)")
    g.set_defaults(func=cmd_gen)

    s = sub.add_parser("separate", parents=[common], help="run CCS-ICA on a mixture")
    s.add_argument("input", nargs="*", help="one CSV or several mono WAV files")
    s.add_argument("--config", help="key = value config file")
    s.add_argument("--replay", help="manifest.json of an earlier run to reproduce")
    s.add_argument("--alpha", type=float)
    s.add_argument("--gamma", type=float)
    s.add_argument("--max-iter", dest="max_iter", type=int)
    s.add_argument("--epsilon", type=float)
    s.add_argument("--bandwidth", type=float)
    s.add_argument("--truncate", type=float, help="skip kernel terms with |u| above this")
    s.add_argument("--objective", choices=["ccs", "cs"])
    s.add_argument("--seed", type=int)
    s.add_argument("--no-backtrack", dest="backtrack", action="store_const", const=False)
    s.add_argument("--reference", help="true sources CSV; adds SIR to the manifest")
    s.add_argument("--max-samples", type=int, default=MAX_SAMPLES)
    s.add_argument("--out", help=f"output directory (default ${OUT_DIR_ENV} or .)")
    s.set_defaults(func=cmd_separate)

    ls = sub.add_parser("landscape", parents=[common], help="contrast over the 2x2 polar demixer family")
    ls.add_argument("input", nargs="*")
    ls.add_argument("--preset", choices=sorted(datagen.PRESETS), default="paper-identity")
    ls.add_argument("--T", type=int, default=1000)
    ls.add_argument("--seed", type=int, default=0)
    ls.add_argument("--alpha", type=float, default=-1.0)
    ls.add_argument("--grid", type=int, default=65)
    ls.add_argument("--bandwidth", type=float)
    ls.add_argument("--objective", choices=["ccs", "cs"], default="ccs")
    ls.add_argument("--prep", choices=["standardize", "whiten", "none"], default="standardize")
    ls.add_argument("--out", default="landscape.csv")
    ls.set_defaults(func=cmd_landscape)

    sw = sub.add_parser("sweep", parents=[common], help="binary-variable divergence sweep over p(A,A)")
    sw.add_argument("--alpha", type=float, nargs="+", default=[-1.0, 0.0, 1.0])
    sw.add_argument("--steps", type=int, default=700)
    sw.add_argument("--out", default="sweep.csv")
    sw.set_defaults(func=cmd_sweep)

    e = sub.add_parser("eval", parents=[common], help="SIR and kurtosis of demixed signals")
    e.add_argument("--sources", nargs="+", required=True)
    e.add_argument("--demixed", nargs="+", required=True)
    e.add_argument("--json", help="write the report here")
    e.add_argument("--no-center", action="store_true")
    e.set_defaults(func=cmd_eval)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except NumericalError as exc:
        print(f"ccsica: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except OSError as exc:
        print(f"ccsica: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (UsageError, ValueError, KeyError) as exc:
        print(f"ccsica: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
