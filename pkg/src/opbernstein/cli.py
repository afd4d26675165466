"""Command-line entry point: ``opbernstein <subcommand> ...``.

Every subcommand writes a CSV (header row first) to ``--output`` or
standard output and a one-line summary to standard output (standard
error when the CSV itself goes to standard output).  Floats are written
with 17 significant digits, so identical flags give identical bytes.
"""
from __future__ import annotations

import argparse
import csv
import io
import math
import sys
from fractions import Fraction
from typing import Sequence

import numpy as np

from . import bounds, coupling
from .ensembles import MatrixEnsemble, center_ensemble, load_ensemble, random_ensemble
from .samplers import Mode
from .sampling_operator import operator_norm_study

DEFAULT_SEED = 0


class UsageError(Exception):
    """A flag value violates a precondition; carries the flag name."""

    def __init__(self, flag: str, message: str):
        super().__init__(f"{flag}: {message}")
        self.flag = flag


def fmt(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if x is None:
        return ""
    x = float(x)
    if math.isnan(x):
        return "nan"
    return f"{x:.16e}"


# --- argument parsing ---------------------------------------------------------

def _grid(flag: str):
    def parse(text: str) -> list[float]:
        parts = text.split(":")
        if len(parts) != 3:
            raise argparse.ArgumentTypeError(f"{flag} expects a:b:steps, got {text!r}")
        try:
            a, b, steps = float(parts[0]), float(parts[1]), int(parts[2])
        except ValueError:
            raise argparse.ArgumentTypeError(f"{flag} expects numbers in a:b:steps, got {text!r}") from None
        if steps < 1:
            raise argparse.ArgumentTypeError(f"{flag} needs steps >= 1, got {steps}")
        if steps == 1:
            return [a]
        return np.linspace(a, b, steps).tolist()

    return parse


def _random_spec(text: str) -> tuple[int, int, int]:
    try:
        n, count, seed = (int(p) for p in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"--random-ensemble expects n,count,seed, got {text!r}") from None
    return n, count, seed


def _common(p: argparse.ArgumentParser, trials_default: int) -> None:
    p.add_argument("--seed", type=int, default=DEFAULT_SEED, help="master seed (default 0)")
    p.add_argument("--trials", type=int, default=trials_default, help="Monte Carlo trials")
    p.add_argument("--output", "-o", default=None, help="CSV path (default: standard output)")
    p.add_argument("--workers", type=int, default=1, help="worker processes (output does not depend on it)")


def _ensemble_args(p: argparse.ArgumentParser) -> None:
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--ensemble", metavar="PATH", help="ensemble file ('count n' header, then matrices)")
    src.add_argument("--random-ensemble", metavar="N,COUNT,SEED", type=_random_spec)
    p.add_argument("--center", action="store_true", help="subtract the ensemble mean before use")
    p.add_argument("--m", type=int, required=True, help="number of samples per sum")
    p.add_argument("--c", type=float, default=None, help="override the norm bound c (must dominate)")
    p.add_argument("--sigma0sq", type=float, default=None, help="override the variance bound (must dominate)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="opbernstein",
        description="Operator-Bernstein bounds for matrix sampling with and without replacement.",
    )
    sub = parser.add_subparsers(dest="subcommand", required=True)

    p = sub.add_parser("tail-bound", help="empirical tail of ||S|| against the Bernstein bound")
    _ensemble_args(p)
    p.add_argument("--mode", choices=["iid", "noreplace", "both"], default="both")
    p.add_argument("--t-grid", type=_grid("--t-grid"), required=True, metavar="A:B:STEPS")
    _common(p, 10000)

    p = sub.add_parser("mgf-compare", help="operator MGF with vs. without replacement")
    _ensemble_args(p)
    p.add_argument("--scale-grid", type=_grid("--scale-grid"), required=True, metavar="A:B:STEPS")
    _common(p, 10000)

    p = sub.add_parser("coupling-verify", help="law of Z(Y) against the uniform law on C^m")
    p.add_argument("--c-size", type=int, required=True)
    p.add_argument("--m", type=int, required=True)
    p.add_argument("--exact", action="store_true", help="exact rational enumeration")
    _common(p, 100000)

    p = sub.add_parser("sampling-operator", help="norm of (m/n^2) R over random draws")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--m", type=int, required=True)
    p.add_argument("--mode", choices=["iid", "noreplace", "bernoulli"], default="iid")
    _common(p, 100)
    return parser


# --- validation -------------------------------------------------------------

def _positive(args, *flags) -> None:
    for flag in flags:
        value = getattr(args, flag.lstrip("-").replace("-", "_"))
        if value < 1:
            raise UsageError(flag, f"must be >= 1, got {value}")


def _load(args) -> MatrixEnsemble:
    if args.ensemble is not None:
        try:
            e = load_ensemble(args.ensemble)
        except OSError as exc:
            raise UsageError("--ensemble", f"cannot read {args.ensemble}: {exc.strerror}") from None
        except ValueError as exc:
            raise UsageError("--ensemble", str(exc)) from None
    else:
        n, count, seed = args.random_ensemble
        if n < 1 or count < 1:
            raise UsageError("--random-ensemble", f"need n >= 1 and count >= 1, got {n},{count}")
        e = random_ensemble(n, count, seed)
    if args.center:
        e = center_ensemble(e)
    if not e.centered:
        raise UsageError("--ensemble", "ensemble is not centered (E[X] != 0); pass --center")
    try:
        e = e.with_constants(args.c, args.sigma0sq)
    except ValueError as exc:
        raise UsageError("--c" if args.c is not None else "--sigma0sq", str(exc)) from None
    if args.m < 1:
        raise UsageError("--m", f"must be >= 1, got {args.m}")
    return e


def _check_noreplace_m(args, e: MatrixEnsemble, modes) -> None:
    if Mode.WithoutReplacement in modes and args.m > e.size:
        raise UsageError("--m", f"m={args.m} exceeds |C|={e.size} for sampling without replacement")


# --- subcommands --------------------------------------------------------------

def _tail_bound(args, writer) -> str:
    e = _load(args)
    modes = [Mode.WithReplacement, Mode.WithoutReplacement] if args.mode == "both" else [Mode.parse(args.mode)]
    _check_noreplace_m(args, e, modes)
    _positive(args, "--trials", "--workers")
    writer.writerow(["t", "empirical_tail", "wilson_upper", "theoretical_bound", "mode", "bound_capped"])
    worst = -math.inf
    for mode in modes:
        for r in bounds.tail_reports(e, args.m, mode, args.t_grid, args.trials, args.seed, args.workers):
            capped = min(r.theoretical_bound, 1.0) if not math.isnan(r.theoretical_bound) else math.nan
            writer.writerow(
                [fmt(r.t), fmt(r.empirical_tail), fmt(r.wilson_upper), fmt(r.theoretical_bound), mode.value, fmt(capped)]
            )
            if not math.isnan(capped):
                worst = max(worst, r.wilson_upper - capped)
    return (
        f"tail-bound: n={e.dim} |C|={e.size} m={args.m} c={e.norm_bound_c:.6g} "
        f"sigma0^2={e.variance_bound_sigma0sq:.6g}; max(wilson_upper - min(bound,1)) = {worst:.6g}"
    )


def _mgf_compare(args, writer) -> str:
    e = _load(args)
    _check_noreplace_m(args, e, [Mode.WithoutReplacement])
    _positive(args, "--trials", "--workers")
    spectra = {
        mode: bounds.sum_spectra(e, args.m, mode, args.trials, args.seed, args.workers)
        for mode in (Mode.WithReplacement, Mode.WithoutReplacement)
    }
    writer.writerow(["scale", "mgf_iid", "mgf_noreplace", "se_iid", "se_noreplace", "exact_iid", "exact_noreplace"])
    worst = -math.inf
    for s in args.scale_grid:
        try:
            mi, si = bounds.mgf_from_spectra(spectra[Mode.WithReplacement], s)
            mn, sn = bounds.mgf_from_spectra(spectra[Mode.WithoutReplacement], s)
        except ArithmeticError as exc:
            raise UsageError("--scale-grid", str(exc)) from None
        ei = bounds.try_exact_mgf(e, args.m, Mode.WithReplacement, s)
        en = bounds.try_exact_mgf(e, args.m, Mode.WithoutReplacement, s)
        if ei is not None and en is not None:
            worst = max(worst, en - ei)
        writer.writerow([fmt(s), fmt(mi), fmt(mn), fmt(si), fmt(sn), fmt(ei), fmt(en)])
    tail = f"max(exact_noreplace - exact_iid) = {worst:.6g}" if worst > -math.inf else "exact columns refused by guard"
    return f"mgf-compare: n={e.dim} |C|={e.size} m={args.m}; {tail}"


def _outcome_label(x: Sequence[int]) -> str:
    return " ".join(str(v) for v in x)


def _coupling_verify(args, writer) -> str:
    k, m = args.c_size, args.m
    _positive(args, "--c-size", "--m")
    if m > k:
        raise UsageError("--m", f"m={m} exceeds --c-size {k}")
    writer.writerow(["outcome", "probability", "expected_probability", "abs_error"])
    target = Fraction(1, k**m)
    if args.exact:
        try:
            law = coupling.exact_coupling_distribution(k, m)
        except coupling.GuardError as exc:
            raise UsageError("--exact", str(exc)) from None
        worst = Fraction(0)
        for x in sorted(law.support):
            p = law.support[x]
            err = abs(p - target)
            worst = max(worst, err)
            writer.writerow([_outcome_label(x), fmt(float(p)), fmt(float(target)), fmt(float(err))])
        return f"coupling-verify (exact): |C|={k} m={m} outcomes={len(law.support)} max abs_error = {worst}"

    _positive(args, "--trials", "--workers")
    from scipy.stats import chisquare

    counts = coupling.coupling_monte_carlo(k, m, args.trials, args.seed, args.workers)
    expected = float(target)
    for code, cnt in enumerate(counts.tolist()):
        p = cnt / args.trials
        writer.writerow(
            [_outcome_label(coupling.decode_outcome(code, k, m)), fmt(p), fmt(expected), fmt(abs(p - expected))]
        )
    pval = float(chisquare(counts).pvalue) if len(counts) > 1 else 1.0
    return f"coupling-verify (monte carlo): |C|={k} m={m} trials={args.trials} chi-square p = {pval:.6g}"


def _sampling_operator(args, writer) -> str:
    _positive(args, "--n", "--trials", "--workers")
    n2 = args.n * args.n
    if args.mode == "bernoulli":
        if not 0 <= args.m <= n2:
            raise UsageError("--m", f"expected count must lie in [0, n^2={n2}], got {args.m}")
    else:
        _positive(args, "--m")
        if args.mode == "noreplace" and args.m > n2:
            raise UsageError("--m", f"m={args.m} exceeds n^2={n2} for sampling without replacement")
    study = operator_norm_study(args.n, args.m, args.mode, args.trials, args.seed, args.workers)
    writer.writerow(["trial", "norm", "max_multiplicity", "is_projection"])
    for trial, norm, mult, proj in study["rows"]:
        writer.writerow([trial + 1, fmt(norm), mult, fmt(proj)])
    return (
        f"sampling-operator: n={args.n} m={args.m} mode={args.mode} "
        f"norm min={study['min']:.6g} median={study['median']:.6g} max={study['max']:.6g} "
        f"(log n = {math.log(args.n):.6g})"
    )


COMMANDS = {
    "tail-bound": _tail_bound,
    "mgf-compare": _mgf_compare,
    "coupling-verify": _coupling_verify,
    "sampling-operator": _sampling_operator,
}


def run(args: argparse.Namespace, stdout=None, stderr=None) -> int:
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    try:
        summary = COMMANDS[args.subcommand](args, writer)
    except UsageError as exc:
        print(f"opbernstein {args.subcommand}: error: {exc}", file=stderr)
        return 2
    except (ValueError, ArithmeticError) as exc:
        print(f"opbernstein {args.subcommand}: error: {exc}", file=stderr)
        return 1
    if args.output is None:
        stdout.write(buf.getvalue())
        print(summary, file=stderr)
        return 0
    try:
        with open(args.output, "w", newline="") as fh:
            fh.write(buf.getvalue())
    except OSError as exc:
        print(f"opbernstein: error: cannot write {args.output}: {exc.strerror}", file=stderr)
        return 1
    print(summary, file=stdout)
    return 0


_GRID_FLAGS = ("--t-grid", "--scale-grid")


def _glue_grids(argv: list[str]) -> list[str]:
    # "--scale-grid -2:2:9" would otherwise be read as an unknown option
    out = []
    it = iter(argv)
    for tok in it:
        if tok in _GRID_FLAGS:
            nxt = next(it, None)
            out.append(tok if nxt is None else f"{tok}={nxt}")
        else:
            out.append(tok)
    return out


def main(argv: Sequence[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    args = build_parser().parse_args(_glue_grids(argv))
    return run(args)


if __name__ == "__main__":
    sys.exit(main())
