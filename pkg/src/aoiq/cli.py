"""Command-line front end.

Subcommands cover the closed-form calculators (``analyze``, ``optimize``,
``sweep``, ``compare``), the simulator (``simulate``), and the canned
experiment grids behind the standard plots (``figures``). Parameters come
from flags, or from a section of an INI file via ``--config``/``--section``
with flags taking precedence. Output is CSV (floats at 17 significant
digits, so every row is lossless and re-runnable) or JSON.
"""

import argparse
import configparser
import csv
import json
import os
import sys

import numpy as np

from . import __version__
from . import analysis
from ._codes import Discipline
from .distributions import (
    Deterministic,
    Exponential,
    Gamma,
    HyperExponential,
    NegBinomial,
    ScaledNegBinomial,
)
from .harq import FR, IIR, ErasureChannel, service_distribution
from .simulator import SimConfig, run

__all__ = ["main"]

_DIST_FIELDS = {
    "deterministic": (Deterministic, {"duration": float}),
    "exponential": (Exponential, {"mu": float}),
    "gamma": (Gamma, {"shape": float, "scale": float}),
    "hyperexponential": (HyperExponential, {"weights": tuple, "rates": tuple}),
    "negbinomial": (NegBinomial, {"k": int, "q": float}),
    "scaled_negbinomial": (ScaledNegBinomial, {"n": int, "k": int, "q": float}),
}

# config-file keys and CSV headers use these dest names; "lambda" is the
# one flag whose dest must differ from its name
_KEY_TO_DEST = {"lambda": "lam"}

_DEST_PARSERS = {
    "discipline": str,
    "scheme": str,
    "dist_params": str,
    "ks": int,
    "ns": int,
    "kp": int,
    "delta": float,
    "lam": float,
    "deliveries": int,
    "warmup": int,
    "seed": int,
    "out": str,
    "fmt": str,
    "axis": str,
    "figure": str,
    "ns_min": int,
    "ns_max": int,
    "ns_step": int,
    "channel_sim": lambda s: s.strip().lower() in ("1", "true", "yes", "on"),
}

_COMMAND_DESTS = {
    "analyze": ("discipline", "scheme", "dist_params", "ks", "ns", "kp", "delta", "lam", "out", "fmt"),
    "simulate": (
        "discipline", "scheme", "dist_params", "ks", "ns", "kp", "delta", "lam",
        "deliveries", "warmup", "seed", "channel_sim", "out", "fmt",
    ),
    "optimize": ("discipline", "scheme", "dist_params", "ks", "ns", "kp", "delta", "out", "fmt"),
    "sweep": ("discipline", "ks", "kp", "delta", "lam", "ns_min", "ns_max", "ns_step", "out", "fmt"),
    "compare": ("axis", "discipline", "scheme", "dist_params", "ks", "ns", "kp", "delta", "lam", "out", "fmt"),
    "figures": ("figure", "ks", "delta", "out"),
}


def _build_parser():
    parser = argparse.ArgumentParser(
        prog="aoiq",
        description="Average age of information for single-slot status updating: "
        "closed forms, optimizers, and a discrete-event simulator.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add(sp, *dests):
        for dest in dests:
            if dest == "discipline":
                sp.add_argument("--discipline", choices=("blocking", "preemptive"), default=None)
            elif dest == "scheme":
                sp.add_argument(
                    "--scheme",
                    default=None,
                    help="iir, fr, or dist:<name> with <name> one of "
                    + ", ".join(sorted(_DIST_FIELDS)),
                )
            elif dest == "dist_params":
                sp.add_argument(
                    "--dist-params",
                    dest="dist_params",
                    default=None,
                    help="comma-separated key=value pairs; array values use '|' "
                    "(e.g. weights=0.5|0.5,rates=1|10)",
                )
            elif dest == "ks":
                sp.add_argument("--ks", type=int, default=None, help="information symbols per packet")
            elif dest == "ns":
                sp.add_argument("--ns", type=int, default=None, help="coded symbols per packet")
            elif dest == "kp":
                sp.add_argument("--kp", type=int, default=None, help="packets per update")
            elif dest == "delta":
                sp.add_argument("--delta", type=float, default=None, help="symbol erasure probability")
            elif dest == "lam":
                sp.add_argument("--lambda", dest="lam", type=float, default=None, help="arrival rate")
            elif dest == "deliveries":
                sp.add_argument("--deliveries", type=int, default=None, help="stop after this many deliveries")
            elif dest == "warmup":
                sp.add_argument("--warmup", type=int, default=None, help="deliveries discarded before measuring (default 1000)")
            elif dest == "seed":
                sp.add_argument("--seed", type=int, default=None)
            elif dest == "channel_sim":
                sp.add_argument(
                    "--channel-sim",
                    dest="channel_sim",
                    action="store_const",
                    const=True,
                    default=None,
                    help="play the erasure channel symbol by symbol instead of "
                    "sampling whole service times",
                )
            elif dest == "out":
                sp.add_argument("--out", default=None, help="output path (default stdout); a directory for 'figures --figure all'")
            elif dest == "fmt":
                sp.add_argument("--format", dest="fmt", choices=("csv", "json"), default=None)
            elif dest == "axis":
                sp.add_argument("--axis", choices=("discipline", "scheme"), default=None)
            elif dest == "figure":
                sp.add_argument("--figure", choices=("fig4", "fig5", "fig6", "fig7", "fig8", "all"), default=None)
            elif dest == "ns_min":
                sp.add_argument("--ns-min", dest="ns_min", type=int, default=None)
            elif dest == "ns_max":
                sp.add_argument("--ns-max", dest="ns_max", type=int, default=None)
            elif dest == "ns_step":
                sp.add_argument("--ns-step", dest="ns_step", type=int, default=None)
        sp.add_argument("--config", default=None, help="INI file with one section per experiment")
        sp.add_argument("--section", default=None, help="section of --config to use")

    add(sub.add_parser("analyze", help="closed-form age at one operating point"), *_COMMAND_DESTS["analyze"])
    add(sub.add_parser("simulate", help="discrete-event run with analytic cross-check"), *_COMMAND_DESTS["simulate"])
    add(sub.add_parser("optimize", help="arrival rate minimizing the age"), *_COMMAND_DESTS["optimize"])
    add(sub.add_parser("sweep", help="age over a grid of codeword lengths"), *_COMMAND_DESTS["sweep"])
    add(sub.add_parser("compare", help="both disciplines or both coding schemes, side by side"), *_COMMAND_DESTS["compare"])
    add(sub.add_parser("figures", help="CSV grids behind the standard plots"), *_COMMAND_DESTS["figures"])
    return parser


def _apply_config(args):
    """Fill unset parameters from the INI section; unknown keys are errors."""
    if args.config is None:
        if args.section is not None:
            raise ValueError("--section given without --config")
        return
    cp = configparser.ConfigParser()
    if not cp.read(args.config):
        raise ValueError(f"config file not found: {args.config}")
    sections = cp.sections()
    if args.section is not None:
        if args.section not in sections:
            raise ValueError(f"section {args.section!r} not in {args.config} (has: {', '.join(sections) or 'none'})")
        name = args.section
    elif len(sections) == 1:
        name = sections[0]
    else:
        raise ValueError(f"--section required; {args.config} has sections: {', '.join(sections) or 'none'}")
    allowed = _COMMAND_DESTS[args.command]
    for key, value in cp.items(name):
        dest = _KEY_TO_DEST.get(key, key.replace("-", "_"))
        if dest not in allowed:
            raise ValueError(f"unknown config key {key!r} for command {args.command!r}")
        if getattr(args, dest) is None:
            setattr(args, dest, _DEST_PARSERS[dest](value))


def _need(args, **dests):
    """dests maps dest name -> flag spelling for the diagnostic."""
    missing = [flag for dest, flag in dests.items() if getattr(args, dest) is None]
    if missing:
        raise ValueError(f"missing required parameter(s): {', '.join(missing)}")


def _parse_dist_params(text):
    params = {}
    for part in text.split(","):
        part = part.strip()
        if not part:
            continue
        key, sep, value = part.partition("=")
        if not sep:
            raise ValueError(f"malformed --dist-params entry {part!r}; expected key=value")
        params[key.strip()] = value.strip()
    return params


def _build_distribution(scheme, dist_params):
    name = scheme[len("dist:"):]
    if name not in _DIST_FIELDS:
        raise ValueError(f"unknown distribution {name!r}; expected one of {', '.join(sorted(_DIST_FIELDS))}")
    cls, fields = _DIST_FIELDS[name]
    raw = _parse_dist_params(dist_params or "")
    unknown = set(raw) - set(fields)
    if unknown:
        raise ValueError(f"unknown parameter(s) for {name}: {', '.join(sorted(unknown))}")
    missing = set(fields) - set(raw)
    if missing:
        raise ValueError(f"missing parameter(s) for {name}: {', '.join(sorted(missing))}")
    kwargs = {}
    for key, conv in fields.items():
        text = raw[key]
        if conv is tuple:
            kwargs[key] = tuple(float(x) for x in text.split("|"))
        elif conv is int:
            kwargs[key] = int(text)
        else:
            kwargs[key] = float(text)
    return cls(**kwargs)


def _scheme_kind(args):
    _need(args, scheme="--scheme")
    if args.scheme == "iir":
        _need(args, ks="--ks", delta="--delta")
        return "iir"
    if args.scheme == "fr":
        _need(args, ks="--ks", ns="--ns", kp="--kp", delta="--delta")
        return "fr"
    if args.scheme.startswith("dist:"):
        return "dist"
    raise ValueError(f"unknown scheme {args.scheme!r}; expected iir, fr, or dist:<name>")


def _echo_record(args, command):
    return {
        "command": command,
        "discipline": args.discipline,
        "scheme": getattr(args, "scheme", None),
        "dist_params": getattr(args, "dist_params", None),
        "k_s": getattr(args, "ks", None),
        "n_s": getattr(args, "ns", None),
        "k_p": getattr(args, "kp", None),
        "delta": getattr(args, "delta", None),
        "lam": getattr(args, "lam", None),
    }


# ---------------------------------------------------------------------------
# subcommands


def cmd_analyze(args):
    _need(args, discipline="--discipline", lam="--lambda")
    kind = _scheme_kind(args)
    blocking = args.discipline == "blocking"
    if kind == "iir":
        fn = analysis.age_blocking_iir if blocking else analysis.age_preemptive_iir
        report = fn(args.ks, args.delta, args.lam)
    elif kind == "fr":
        fn = analysis.age_blocking_fr if blocking else analysis.age_preemptive_fr
        report = fn(args.ks, args.ns, args.kp, args.delta, args.lam)
    else:
        dist = _build_distribution(args.scheme, args.dist_params)
        fn = analysis.age_blocking if blocking else analysis.age_preemptive
        report = fn(dist, args.lam)
    rec = _echo_record(args, "analyze")
    rec.update(
        avg_age=report.avg_age,
        effective_rate=report.effective_rate,
        utilization_beta=report.utilization_beta,
        notes=report.notes,
    )
    return [rec]


def _analytic_age(args, kind, dist):
    blocking = args.discipline == "blocking"
    if kind == "iir":
        fn = analysis.age_blocking_iir if blocking else analysis.age_preemptive_iir
        return fn(args.ks, args.delta, args.lam).avg_age
    if kind == "fr":
        fn = analysis.age_blocking_fr if blocking else analysis.age_preemptive_fr
        return fn(args.ks, args.ns, args.kp, args.delta, args.lam).avg_age
    fn = analysis.age_blocking if blocking else analysis.age_preemptive
    return fn(dist, args.lam).avg_age


def cmd_simulate(args):
    _need(args, discipline="--discipline", lam="--lambda", deliveries="--deliveries", seed="--seed")
    kind = _scheme_kind(args)
    if args.warmup is None:
        args.warmup = 1000
    dist = None
    if kind == "dist":
        if args.channel_sim:
            raise ValueError("--channel-sim requires scheme iir or fr")
        dist = service = _build_distribution(args.scheme, args.dist_params)
    else:
        scheme = IIR(args.ks) if kind == "iir" else FR(args.ks, args.ns, args.kp)
        channel = ErasureChannel(args.delta)
        if args.channel_sim:
            service = (scheme, channel)
        else:
            service = service_distribution(scheme, channel)
    config = SimConfig(
        discipline=Discipline(args.discipline),
        lam=args.lam,
        service=service,
        stop_rule=args.deliveries,
        seed=args.seed,
        warmup_deliveries=args.warmup,
    )
    result = run(config)
    analytic = _analytic_age(args, kind, dist)
    rec = _echo_record(args, "simulate")
    rec.update(
        deliveries_requested=args.deliveries,
        warmup=args.warmup,
        seed=args.seed,
        channel_sim=bool(args.channel_sim),
        measured_deliveries=result.measured_deliveries,
        elapsed=result.elapsed,
        total_area=result.total_area,
        avg_age=result.avg_age,
        eff_rate=result.eff_rate,
        mean_interdeparture=result.mean_interdeparture,
        mean_sq_interdeparture=result.mean_sq_interdeparture,
        mean_system_time=result.mean_system_time,
        stderr_age=result.stderr_age,
        stderr_eff_rate=result.stderr_eff_rate,
        stderr_interdeparture=result.stderr_interdeparture,
        stderr_sq_interdeparture=result.stderr_sq_interdeparture,
        stderr_system_time=result.stderr_system_time,
        arrivals=result.arrivals,
        deliveries=result.deliveries,
        events=result.events,
        analytic_age=analytic,
        z_age=(result.avg_age - analytic) / result.stderr_age,
        kernel_backend=result.backend,
    )
    return [rec]


def cmd_optimize(args):
    _need(args, discipline="--discipline")
    kind = _scheme_kind(args)
    blocking = args.discipline == "blocking"
    if kind == "iir":
        fn = analysis.min_age_blocking_iir if blocking else analysis.optimal_preemptive_iir
        report = fn(args.ks, args.delta)
    elif kind == "fr":
        fn = analysis.min_age_blocking_fr if blocking else analysis.optimal_preemptive_fr
        report = fn(args.ks, args.ns, args.kp, args.delta)
    elif blocking:
        report = analysis.optimal_blocking(_build_distribution(args.scheme, args.dist_params))
    else:
        raise ValueError(
            "optimize with --discipline preemptive needs --scheme iir or fr; "
            "general laws have no closed-form preemptive optimizer here"
        )
    rec = _echo_record(args, "optimize")
    rec.update(
        optimal_rate=report.optimal_rate,
        unbounded=report.unbounded,
        optimal_age=report.optimal_age,
        method=report.method,
        bound_lower=report.bound_lower,
        approx_rate=report.approx_rate,
    )
    return [rec]


def cmd_sweep(args):
    _need(args, discipline="--discipline", ks="--ks", kp="--kp", delta="--delta", lam="--lambda")
    lo = args.ns_min if args.ns_min is not None else args.ks
    hi = args.ns_max if args.ns_max is not None else 10 * args.ks
    step = args.ns_step if args.ns_step is not None else 1
    if step < 1 or hi < lo:
        raise ValueError(f"bad codeword grid: ns_min={lo}, ns_max={hi}, ns_step={step}")
    result = analysis.sweep_codeword_length(
        args.ks, args.kp, args.delta, args.lam, args.discipline, range(lo, hi + 1, step)
    )
    records = []
    for n, age in result.entries:
        rec = _echo_record(args, "sweep")
        rec["scheme"] = "fr"
        rec["n_s"] = n
        rec.update(avg_age=age, best_n_s=result.best_n_s, best_age=result.best_age)
        records.append(rec)
    return records


def cmd_compare(args):
    axis = args.axis or "discipline"
    _need(args, lam="--lambda")
    if axis == "discipline":
        kind = _scheme_kind(args)
        rec = _echo_record(args, "compare")
        rec["axis"] = axis
        ages = {}
        for disc in ("blocking", "preemptive"):
            args.discipline = disc
            ages[disc] = _analytic_age(args, kind, _build_distribution(args.scheme, args.dist_params) if kind == "dist" else None)
        args.discipline = None
        rec["discipline"] = None
        rec.update(
            blocking_age=ages["blocking"],
            preemptive_age=ages["preemptive"],
            age_gap=ages["preemptive"] - ages["blocking"],
        )
        return [rec]
    # scheme axis: incremental redundancy vs fixed redundancy at equal
    # information payload k_s * k_p
    _need(args, discipline="--discipline", ks="--ks", kp="--kp", delta="--delta")
    blocking = args.discipline == "blocking"
    total = args.ks * args.kp
    if args.ns is not None:
        n_used = args.ns
        fr_fn = analysis.age_blocking_fr if blocking else analysis.age_preemptive_fr
        fr_age = fr_fn(args.ks, n_used, args.kp, args.delta, args.lam).avg_age
    else:
        sweep = analysis.sweep_codeword_length(
            args.ks, args.kp, args.delta, args.lam, args.discipline,
            range(args.ks, 10 * args.ks + 1),
        )
        n_used, fr_age = sweep.best_n_s, sweep.best_age
    iir_fn = analysis.age_blocking_iir if blocking else analysis.age_preemptive_iir
    iir_age = iir_fn(total, args.delta, args.lam).avg_age
    rec = _echo_record(args, "compare")
    rec["axis"] = axis
    rec["scheme"] = None
    rec["n_s"] = n_used
    rec.update(
        iir_total_symbols=total,
        iir_age=iir_age,
        fr_age=fr_age,
        age_gap=fr_age - iir_age,
    )
    return [rec]


# ---------------------------------------------------------------------------
# figure grids

_FIG_LAM_WIDE = tuple(np.logspace(-4.0, -1.0, 41))
_FIG_LAM_ALL = tuple(np.logspace(-3.0, 0.0, 25))
_FIG_DELTAS = (0.1, 0.2, 0.3)
_FIG_TOTAL_SYMBOLS = 100


def _figure_ks_list(args):
    if args.ks is None:
        return [10, 20, 100]
    if _FIG_TOTAL_SYMBOLS % args.ks != 0:
        raise ValueError(
            f"--ks must divide {_FIG_TOTAL_SYMBOLS} so that k_p = {_FIG_TOTAL_SYMBOLS}/k_s "
            f"is an integer; got {args.ks}"
        )
    return [args.ks]


def _fig_age_vs_rate_fr(args, discipline):
    """Fixed-redundancy age vs arrival rate, codeword length re-optimized per point."""
    delta = args.delta if args.delta is not None else 0.2
    rows = []
    for ks in _figure_ks_list(args):
        kp = _FIG_TOTAL_SYMBOLS // ks
        for lam in _FIG_LAM_WIDE:
            sweep = analysis.sweep_codeword_length(
                ks, kp, delta, lam, discipline, range(ks, 10 * ks + 1)
            )
            rows.append({
                "discipline": discipline,
                "scheme": "fr",
                "k_s": ks,
                "k_p": kp,
                "delta": delta,
                "lam": lam,
                "n_s": sweep.best_n_s,
                "avg_age": sweep.best_age,
            })
    return rows


def _fig_age_vs_codeword(args, discipline, lam):
    ks, kp = 20, _FIG_TOTAL_SYMBOLS // 20
    rows = []
    for delta in _FIG_DELTAS:
        result = analysis.sweep_codeword_length(
            ks, kp, delta, lam, discipline, range(ks, 5 * ks + 1)
        )
        for n, age in result.entries:
            rows.append({
                "discipline": discipline,
                "scheme": "fr",
                "k_s": ks,
                "k_p": kp,
                "delta": delta,
                "lam": lam,
                "n_s": n,
                "avg_age": age,
            })
    return rows


def _fig_all_curves(args):
    """Both schemes under both disciplines on a shared arrival-rate grid."""
    delta = args.delta if args.delta is not None else 0.2
    ks_fr, kp = 20, _FIG_TOTAL_SYMBOLS // 20
    # codeword length fixed for the whole figure at the preemptive optimum
    # for a mid-grid rate, so the FR curves vary only in lam
    n_fr = analysis.sweep_codeword_length(
        ks_fr, kp, delta, 0.0066, Discipline.PREEMPTIVE, range(ks_fr, 10 * ks_fr + 1)
    ).best_n_s
    rows = []
    for lam in _FIG_LAM_ALL:
        for disc in ("blocking", "preemptive"):
            blocking = disc == "blocking"
            iir_fn = analysis.age_blocking_iir if blocking else analysis.age_preemptive_iir
            fr_fn = analysis.age_blocking_fr if blocking else analysis.age_preemptive_fr
            rows.append({
                "discipline": disc, "scheme": "iir",
                "k_s": _FIG_TOTAL_SYMBOLS, "k_p": 1, "n_s": None, "delta": delta,
                "lam": lam, "avg_age": iir_fn(_FIG_TOTAL_SYMBOLS, delta, lam).avg_age,
            })
            rows.append({
                "discipline": disc, "scheme": "fr",
                "k_s": ks_fr, "k_p": kp, "n_s": n_fr, "delta": delta,
                "lam": lam, "avg_age": fr_fn(ks_fr, n_fr, kp, delta, lam).avg_age,
            })
    return rows


_FIGURES = {
    "fig4": lambda args: _fig_age_vs_rate_fr(args, "preemptive"),
    "fig5": lambda args: _fig_age_vs_codeword(args, "preemptive", 0.0066),
    "fig6": lambda args: _fig_age_vs_rate_fr(args, "blocking"),
    "fig7": lambda args: _fig_age_vs_codeword(args, "blocking", 1.0),
    "fig8": _fig_all_curves,
}


def cmd_figures(args):
    """Returns {figure name: record list}; serialization handled by the caller."""
    _need(args, figure="--figure")
    names = list(_FIGURES) if args.figure == "all" else [args.figure]
    bundle = {}
    for name in names:
        rows = _FIGURES[name](args)
        for row in rows:
            row["figure"] = name
            row["tool_version"] = __version__
        bundle[name] = rows
    return bundle


# ---------------------------------------------------------------------------
# serialization


def _csv_cell(key, value, record):
    if value is None:
        if key == "optimal_rate" and record.get("unbounded"):
            return "unbounded"
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return format(value, ".17g")
    return str(value)


def _write_records(records, fmt, out_fh):
    if fmt == "json":
        json.dump(records, out_fh, indent=2, allow_nan=True)
        out_fh.write("\n")
        return
    header = list(records[0].keys())
    writer = csv.writer(out_fh, lineterminator="\n")
    writer.writerow(header)
    for rec in records:
        writer.writerow([_csv_cell(key, rec.get(key), rec) for key in header])


def _emit(records, args):
    fmt = getattr(args, "fmt", None) or "csv"
    for rec in records:
        rec.setdefault("tool_version", __version__)
    if args.out is None or args.out == "-":
        _write_records(records, fmt, sys.stdout)
        return
    with open(args.out, "w", newline="") as fh:
        _write_records(records, fmt, fh)


def _emit_figures(bundle, args):
    if len(bundle) > 1:
        out = args.out or "."
        if os.path.exists(out) and not os.path.isdir(out):
            raise ValueError(f"--out must be a directory for --figure all, got file {out!r}")
        os.makedirs(out, exist_ok=True)
        for name, rows in bundle.items():
            with open(os.path.join(out, f"{name}.csv"), "w", newline="") as fh:
                _write_records(rows, "csv", fh)
        return
    (rows,) = bundle.values()
    if args.out is None or args.out == "-":
        _write_records(rows, "csv", sys.stdout)
    else:
        with open(args.out, "w", newline="") as fh:
            _write_records(rows, "csv", fh)


_COMMANDS = {
    "analyze": cmd_analyze,
    "simulate": cmd_simulate,
    "optimize": cmd_optimize,
    "sweep": cmd_sweep,
    "compare": cmd_compare,
}


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        _apply_config(args)
        if args.command == "figures":
            _emit_figures(cmd_figures(args), args)
        else:
            _emit(_COMMANDS[args.command](args), args)
    except (ValueError, TypeError, OverflowError, RuntimeError, OSError) as exc:
        print(f"aoiq: error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
