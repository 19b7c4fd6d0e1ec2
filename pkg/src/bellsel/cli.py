"""Command-line entry point: ``bellsel <command> [flags]``.

Generators write ensemble files (JSONL or CSV with a ``#meta`` header);
``analyze`` reads them back. Exit status is 0 on success (including defined
degradations such as an unavailable CHSH estimate) and 2 on invalid input.
Outputs are written atomically, so a failed command leaves no partial file.
"""
from __future__ import annotations

import argparse
import json
import math
import os
import sys
import time
from dataclasses import asdict, dataclass
from pathlib import Path

from . import __version__
from . import analysis, classical_forks, ensemble, experiments, quantum_core, toy_models
from .quantum_core import AngleConfig, BellLabel

SEED_ENV = "BELLSEL_SEED"
REPORTS = ("chsh", "msbc", "nosignal", "factorizability")


class CliError(Exception):
    pass


@dataclass
class RunManifest:
    command_line: str
    seed: int | None
    config_digest: str | None
    version: str
    outputs: list[str]
    wall_clock_s: float


# argument types

def _positive_int(text: str) -> int:
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text!r}") from None
    if value < 1:
        raise argparse.ArgumentTypeError(f"must be >= 1, got {value}")
    return value


def _seed(text: str) -> int:
    try:
        return experiments.check_seed(int(text))
    except (ValueError, TypeError):
        raise argparse.ArgumentTypeError(f"expected an unsigned 64-bit integer, got {text!r}") from None


def _angles(text: str) -> AngleConfig:
    try:
        return AngleConfig.from_string(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _probability(text: str) -> float:
    try:
        value = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a probability, got {text!r}") from None
    if not 0.0 <= value <= 1.0:
        raise argparse.ArgumentTypeError(f"must lie in [0, 1], got {value}")
    return value


def _z(text: str) -> float:
    try:
        value = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a number, got {text!r}") from None
    if not value > 0:
        raise argparse.ArgumentTypeError(f"must be positive, got {value}")
    return value


def _report_list(text: str) -> list[str]:
    items = [t.strip() for t in text.split(",") if t.strip()]
    bad = [t for t in items if t not in REPORTS]
    if not items or bad:
        raise argparse.ArgumentTypeError(f"choose from {','.join(REPORTS)}; got {text!r}")
    return items


def _mixture(text: str):
    if text == "uniform":
        return (0.25, 0.25, 0.25, 0.25)
    try:
        weights = tuple(float(t) for t in text.split(","))
        quantum_core._validate_weights(weights)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected 'uniform' or four weights summing to 1 ({exc})") from None
    return weights


def resolve_seed(value: int | None) -> int:
    if value is not None:
        return value
    env = os.environ.get(SEED_ENV)
    if env is None or env == "":
        return 0
    try:
        return experiments.check_seed(int(env))
    except (ValueError, TypeError):
        raise CliError(f"environment variable {SEED_ENV} is not a valid seed: {env!r}") from None


# output helpers

def _emit(text: str, out: str | None) -> list[str]:
    if out is None:
        sys.stdout.write(text)
        return []
    ensemble.atomic_write_text(out, text)
    return [out]


def _finite(obj):
    # JSON has no infinity; a zero-sigma discrepancy is reported as "inf"/"-inf"
    if isinstance(obj, float) and not math.isfinite(obj):
        return "nan" if math.isnan(obj) else ("inf" if obj > 0 else "-inf")
    if isinstance(obj, dict):
        return {k: _finite(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_finite(v) for v in obj]
    return obj


def _json(obj) -> str:
    return json.dumps(_finite(obj), indent=2, sort_keys=True, allow_nan=False) + "\n"


def _write_ensemble(ens, out: str | None, fmt: str, command: str) -> list[str]:
    ens.meta["command"] = command
    return _emit(ensemble.dumps(ens, fmt), out)


def _summary_path(out: str) -> str:
    p = Path(out)
    return str(p.with_name(p.stem + ".summary.json"))


# commands

def cmd_vrun(args) -> tuple[list[str], dict]:
    seed = resolve_seed(args.seed)
    if args.state == "product":
        ens = experiments.run_state(quantum_core.basis_state("00"), args.angles, args.shots, seed, coin_labels=True)
    else:
        config = experiments.VConfig(state=args.state, angles=args.angles)
        ens = experiments.run_v(config, args.shots, seed)
    return _write_ensemble(ens, args.out, args.format, "vrun"), ens.meta


def cmd_wrun(args) -> tuple[list[str], dict]:
    seed = resolve_seed(args.seed)
    ens = experiments.run_w(args.angles, args.shots, seed)
    return _write_ensemble(ens, args.out, args.format, "wrun"), ens.meta


def cmd_toy(args) -> tuple[list[str], dict]:
    seed = resolve_seed(args.seed)
    ext = "csv" if args.format == "csv" else "jsonl"
    if args.toy == "retention":
        rule = "qm" if args.rule == "qm" else "perfect_match_only"
        res = toy_models.charlie_retention(args.shots, seed, args.target, args.angles, rule=rule)
        if args.out is None:
            outs = _write_ensemble(res.retained, None, args.format, "toy retention")
        else:
            text = ensemble.dumps(_tag(res.retained, "toy retention"), args.format)
            summary = _json(res.summary())
            ensemble.atomic_write_text(args.out, text)
            ensemble.atomic_write_text(_summary_path(args.out), summary)
            outs = [args.out, _summary_path(args.out)]
        return outs, res.retained.meta
    res = toy_models.charlie_hoppers(args.shots, seed, args.angles)
    out_dir = Path(args.out or "hoppers")
    texts = {
        str(out_dir / f"H{lbl.value}.{ext}"): ensemble.dumps(_tag(ens, "toy hoppers"), args.format)
        for lbl, ens in res.hoppers.items()
    }
    texts[str(out_dir / "summary.json")] = _json(res.summary())
    for path, text in texts.items():
        ensemble.atomic_write_text(path, text)
    return list(texts), res.hoppers[BellLabel.C0].meta


def _tag(ens, command: str):
    ens.meta["command"] = command
    return ens


def analyze_ensemble(ens, reports, group_by: str | None, z: float) -> dict:
    """The JSON document produced by ``bellsel analyze``."""
    grouping = None if group_by == "none" else group_by
    result = {
        "records": len(ens),
        "group_by": group_by,
        "z": z,
        "source": {k: ens.meta.get(k) for k in ("config_digest", "seed", "command") if k in ens.meta},
    }
    if "chsh" in reports:
        result["chsh"] = {g: e.to_dict() for g, e in analysis.chsh_by_group(ens, grouping, z).items()}
        corr = analysis.estimate_correlations(ens, grouping)
        corr = {analysis.ALL: corr} if isinstance(corr, analysis.CorrelationReport) else corr
        result["correlations"] = {g: r.to_dict() for g, r in corr.items()}
    if "msbc" in reports:
        result["msbc"] = analysis.msbc_test(ens, z).to_dict()
    if "nosignal" in reports:
        result["nosignal"] = analysis.no_signalling_check(ens, grouping, z).to_dict()
    if "factorizability" in reports:
        result["factorizability"] = analysis.factorizability_check(ens, grouping, z).to_dict()
    return result


def render_analysis(doc: dict) -> str:
    parts = [f"records: {doc['records']}  group_by: {doc['group_by']}  z: {doc['z']}\n"]
    if "chsh" in doc:
        rows = []
        for g, rep in doc["correlations"].items():
            for p in rep["pairs"]:
                rows.append({"group": g, "a": p["a"], "b": p["b"], "count": p["count"], "E": p["E"], "se": p["se"]})
        parts.append("\ncorrelations\n" + analysis.format_table(rows))
        rows = [{"group": g, "status": c["status"], "S": c["S"], "se": c["se"],
                 "violates_classical": c["violates_classical"]} for g, c in doc["chsh"].items()]
        parts.append("\nCHSH\n" + analysis.format_table(rows))
    if "msbc" in doc:
        m = doc["msbc"]
        parts.append(f"\nMSBC: holds={'yes' if m['msbc_holds'] else 'no'}  max |z|={m['max_discrepancy']:.3f}\n")
        if m["flagged"]:
            cols = ["sel", "a", "b", "E_sub", "E_super", "zscore", "direction"]
            parts.append(analysis.format_table(m["flagged"], cols))
    for key in ("nosignal", "factorizability"):
        if key in doc:
            c = doc[key]
            parts.append(f"\n{key}: {'pass' if c['passed'] else 'fail'}  "
                         f"max deviation={c['max_deviation']:.6f}  max |z|={c['max_abs_z']:.3f}\n")
    return "".join(parts)


def cmd_analyze(args) -> tuple[list[str], dict]:
    path = Path(args.input)
    if not path.is_file():
        raise CliError(f"--in: no such file {args.input}")
    try:
        ens = ensemble.read(path)
    except ensemble.EnsembleFormatError as exc:
        raise CliError(f"--in: malformed record at line {exc.line}: {exc}") from None
    if len(ens) == 0:
        raise CliError("--in: ensemble has no records")
    group_by = "sel" if args.group_by == "sel" else "none"
    if ("msbc" in args.report or group_by == "sel") and not ens.has_sel:
        raise CliError("--in: selection labels are missing on some records (needed for msbc / --group-by sel)")
    doc = analyze_ensemble(ens, args.report, group_by, args.z)
    text = _json(doc) if args.format == "json" else render_analysis(doc)
    return _emit(text, args.out), ens.meta


def cmd_forks(args) -> tuple[list[str], dict]:
    seed = resolve_seed(args.seed)
    if args.fork == "collider":
        rep = classical_forks.collider_demo(args.n, seed, args.condition_on)
    elif args.fork == "parity":
        if args.synthetic:
            s1 = classical_forks.synthetic_digits(args.n, seed, "digits-a")
            s2 = classical_forks.synthetic_digits(args.n, seed, "digits-b")
        else:
            pa = args.digits_a or classical_forks.fixture_path("pi")
            pb = args.digits_b or classical_forks.fixture_path("e")
            try:
                s1 = classical_forks.load_digits(pa, args.n)
                s2 = classical_forks.load_digits(pb, args.n)
            except (OSError, ValueError) as exc:
                raise CliError(f"--digits-a/--digits-b: {exc}") from None
        rep = classical_forks.parity_correlator(s1, s2)
    else:
        rep = classical_forks.mice_demo(args.n, seed, args.p_white, args.p_k, args.p_l)
    doc = dict(rep.to_dict(), fork=args.fork, seed=seed)
    if args.format == "json":
        text = _json(doc)
    else:
        rows = [{k: doc[k] for k in ("fork", "restriction", "population_corr", "restricted_corr",
                                     "population_size", "restricted_size", "direction")}]
        text = analysis.format_table(rows)
        if doc["cells"]:
            cell_rows = [{"population": k, **v} for k, v in doc["cells"].items()]
            text += "\n" + analysis.format_table(cell_rows)
    return _emit(text, args.out), {"seed": seed}


def exact_report(angles: AngleConfig, state: str | None = None, weights=None) -> dict:
    """Closed-form distributions, correlators and CHSH for a Bell state or mixture."""
    pairs = []
    for a in (0, 1):
        for b in (0, 1):
            alpha, beta = angles.alpha(a), angles.beta(b)
            if weights is not None:
                dist = quantum_core.mixed_joint_probabilities(weights, alpha, beta)
            else:
                dist = quantum_core.joint_probabilities(quantum_core.bell_state(state), alpha, beta)
            pairs.append({"a": a, "b": b, "alpha": alpha, "beta": beta,
                          "p00": dist.p00, "p01": dist.p01, "p10": dist.p10, "p11": dist.p11,
                          "E": quantum_core.correlator(dist)})
    es = [p["E"] for p in pairs]
    form = quantum_core.best_chsh_form(es)
    s_val = quantum_core.chsh_form(es, form)
    return {
        "state": state, "weights": None if weights is None else list(weights),
        "angles": angles.to_dict(), "pairs": pairs, "S": s_val, "abs_S": abs(s_val), "chsh_form": form,
    }


def cmd_exact(args) -> tuple[list[str], dict]:
    if args.mixture is not None and args.state is not None:
        raise CliError("--state and --mixture are mutually exclusive")
    state = None if args.mixture is not None else (args.state or "c0").upper()
    doc = exact_report(args.angles, state, args.mixture)
    if args.format == "json":
        text = _json(doc)
    else:
        text = analysis.format_table(doc["pairs"]) + f"\nS = {doc['S']:.12f}  (|S| = {doc['abs_S']:.12f})\n"
    return _emit(text, args.out), {}


# parser

def _add_common(p, *, shots=True, fmt=("jsonl", "csv"), out_help="output file (default: stdout)"):
    if shots:
        p.add_argument("--shots", type=_positive_int, required=True, help="number of runs")
    p.add_argument("--seed", type=_seed, default=None, help=f"64-bit seed (fallback: ${SEED_ENV}, then 0)")
    p.add_argument("--format", choices=fmt, default=fmt[0])
    p.add_argument("--out", default=None, help=out_help)
    p.add_argument("--manifest", default=None, help="also write a run manifest JSON here")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="bellsel", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"bellsel {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    default_angles = AngleConfig()
    angle_help = "analyzer angles a0,a1,b0,b1 in radians (default: 0,pi/4,pi/8,3pi/8)"

    p = sub.add_parser("vrun", help="V-shaped Bell experiment")
    p.add_argument("--state", choices=("c0", "c1", "c2", "c3", "random", "product"), default="random",
                   help="fixed Bell state, uniform random Bell state, or |00> with coin-flip labels")
    p.add_argument("--angles", type=_angles, default=default_angles, help=angle_help)
    _add_common(p)
    p.set_defaults(func=cmd_vrun)

    p = sub.add_parser("wrun", help="W-shaped entanglement-swapping experiment")
    p.add_argument("--angles", type=_angles, default=default_angles, help=angle_help)
    _add_common(p)
    p.set_defaults(func=cmd_wrun)

    p = sub.add_parser("toy", help="classical toy models")
    toy = p.add_subparsers(dest="toy", required=True)
    t = toy.add_parser("retention", help="probabilistic retention of coin-toss runs")
    t.add_argument("--target", choices=("c0", "c1", "c2", "c3"), default="c0")
    t.add_argument("--rule", choices=("qm", "perfect-match"), default="qm")
    t.add_argument("--angles", type=_angles, default=default_angles, help=angle_help)
    _add_common(t, out_help="ensemble file; a .summary.json is written beside it")
    t.set_defaults(func=cmd_toy)
    t = toy.add_parser("hoppers", help="sort coin-toss runs into four hoppers")
    t.add_argument("--angles", type=_angles, default=default_angles, help=angle_help)
    _add_common(t, out_help="output directory for H0..H3 and summary.json (default: ./hoppers)")
    t.set_defaults(func=cmd_toy)

    p = sub.add_parser("analyze", help="statistical checks on an ensemble file")
    p.add_argument("--in", dest="input", required=True, help="ensemble file (JSONL or CSV)")
    p.add_argument("--group-by", choices=("none", "sel"), default="none")
    p.add_argument("--report", type=_report_list, default=list(REPORTS), help="comma list of " + ",".join(REPORTS))
    p.add_argument("--z", type=_z, default=analysis.DEFAULT_Z, help="significance threshold in sigmas")
    p.add_argument("--format", choices=("json", "table"), default="json")
    p.add_argument("--out", default=None, help="report file (default: stdout)")
    p.add_argument("--manifest", default=None)
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("forks", help="classical selection demos")
    forks = p.add_subparsers(dest="fork", required=True)
    f = forks.add_parser("collider", help="collider F = G xor H")
    f.add_argument("--n", type=_positive_int, default=100_000)
    f.add_argument("--condition-on", type=int, choices=(0, 1), default=0)
    _add_common(f, shots=False, fmt=("json", "table"))
    f.set_defaults(func=cmd_forks)
    f = forks.add_parser("parity", help="digit-parity correlator")
    f.add_argument("--digits-a", default=None, help="digit file (default: shipped pi fixture)")
    f.add_argument("--digits-b", default=None, help="digit file (default: shipped e fixture)")
    f.add_argument("--synthetic", action="store_true", help="use seeded uniform digits instead of files")
    f.add_argument("--n", type=_positive_int, default=100_000)
    _add_common(f, shots=False, fmt=("json", "table"))
    f.set_defaults(func=cmd_forks)
    f = forks.add_parser("mice", help="white-mice range restriction")
    f.add_argument("--n", type=_positive_int, default=1_000_000)
    f.add_argument("--p-white", type=_probability, default=0.5)
    f.add_argument("--p-k", type=_probability, default=0.2)
    f.add_argument("--p-l", type=_probability, default=0.2)
    _add_common(f, shots=False, fmt=("json", "table"))
    f.set_defaults(func=cmd_forks)

    p = sub.add_parser("exact", help="closed-form probabilities and CHSH (no sampling)")
    p.add_argument("--state", choices=("c0", "c1", "c2", "c3"), default=None)
    p.add_argument("--mixture", type=_mixture, default=None, help="'uniform' or four weights w0,w1,w2,w3")
    p.add_argument("--angles", type=_angles, default=default_angles, help=angle_help)
    p.add_argument("--format", choices=("json", "table"), default="json")
    p.add_argument("--out", default=None)
    p.add_argument("--manifest", default=None)
    p.set_defaults(func=cmd_exact)
    return parser


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    start = time.perf_counter()
    try:
        outputs, meta = args.func(args)
        if args.manifest:
            manifest = RunManifest(
                command_line=" ".join(["bellsel", *argv]),
                seed=meta.get("seed"),
                config_digest=meta.get("config_digest"),
                version=__version__,
                outputs=outputs,
                wall_clock_s=time.perf_counter() - start,
            )
            ensemble.atomic_write_text(args.manifest, _json(asdict(manifest)))
    except (CliError, ValueError) as exc:
        print(f"bellsel {args.command}: error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
