"""Command-line interface: ``pfsic construct|verify|fisher|simulate|mix``.

Exit codes: 0 success, 1 domain failure (invalid POVM, failed verdict,
singular Fisher matrix), 2 I/O or parse failure.
"""

import argparse
import json
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .constructions import (
    OrthogonalMatrix,
    build_from_descriptor,
    orthogonal_mix,
    random_orthogonal,
)
from .fisher import fisher_report, is_pfsic
from .povm_core import (
    CompletenessError,
    completeness_residual,
    excluded_outcomes,
    povm_from_dict,
    povm_to_dict,
    real_decomposition,
)
from .tomography import GENERATOR, NotLocallyCompleteError, SimConfig, run_trials

EXIT_OK, EXIT_DOMAIN, EXIT_IO = 0, 1, 2


class CLIError(Exception):
    def __init__(self, message, code=EXIT_DOMAIN):
        super().__init__(message)
        self.code = code


def _read_json(path):
    try:
        with open(path) as fh:
            return json.load(fh)
    except OSError as exc:
        raise CLIError(f"cannot read {path}: {exc.strerror}", EXIT_IO) from exc
    except json.JSONDecodeError as exc:
        raise CLIError(f"parse error in {path}: {exc}", EXIT_IO) from exc


def _read_povm(path):
    data = _read_json(path)
    if not isinstance(data, dict) or not {"dim", "n", "vectors"} <= data.keys():
        raise CLIError(f"parse error in {path}: not a POVM object", EXIT_IO)
    try:
        return povm_from_dict(data)
    except CompletenessError:
        raise
    except ValueError as exc:
        raise CLIError(f"parse error in {path}: {exc}", EXIT_IO) from exc


def _dump(obj):
    return json.dumps(obj, indent=1) + "\n"


def _emit(text, out):
    if out is None:
        sys.stdout.write(text)
        return
    try:
        Path(out).write_text(text)
    except OSError as exc:
        raise CLIError(f"cannot write {out}: {exc.strerror}", EXIT_IO) from exc


def _write_manifest(args, argv, outputs, seeds, started):
    """Write ``<output>.manifest.json`` next to every output file.

    ``argv`` includes any seed drawn during the run, so ``pfsic *argv``
    reproduces the outputs.
    """
    options = {k: v for k, v in vars(args).items() if k not in ("func", "extra_argv")}
    manifest = {
        "command": args.command,
        "argv": argv + args.extra_argv,
        "options": options,
        "version": __version__,
        "seeds": seeds,
        "outputs": [str(p) for p in outputs],
        "duration_s": time.perf_counter() - started,
    }
    for path in outputs:
        Path(f"{path}.manifest.json").write_text(_dump(manifest))


def _resolve_seed(args, seed, flag):
    if seed is not None:
        return seed
    seed = int(np.random.SeedSequence().entropy % 2**63)
    print(f"seed: {seed}", file=sys.stderr)
    args.extra_argv += [flag, str(seed)]
    return seed


# -- subcommands ---------------------------------------------------------------


def cmd_construct(args):
    if args.descriptor:
        desc = _read_json(args.descriptor)
    else:
        desc = {"kind": args.kind, "d": args.d}
        if args.kind == "two-basis":
            desc["p_chi"] = args.p_chi
        if args.mix_seed is not None or args.size is not None:
            desc = {"kind": "mix", "base": desc, "seed": _resolve_seed(args, args.mix_seed, "--mix-seed"),
                    "size": args.size}
    povm = build_from_descriptor(desc)
    _emit(_dump(povm_to_dict(povm)), args.out)
    seeds = {"mix": desc["seed"]} if "seed" in desc else {}
    return [args.out] if args.out else [], seeds


def cmd_verify(args):
    povm = _read_povm(args.povm)
    report = {
        "dim": povm.dim,
        "n": povm.n_outcomes,
        "completeness_residual": completeness_residual(povm.vectors),
        "gram_residual": real_decomposition(povm).gram_residual(),
        "excluded_outcomes": excluded_outcomes(povm).tolist(),
    }
    ok = True
    reasons = []
    if args.strict and report["excluded_outcomes"]:
        ok = False
        reasons.append("an outcome is orthogonal to the fiducial state")
    if args.pfsic:
        verdict = is_pfsic(povm)
        report["pfsic"] = verdict.to_dict()
        if not verdict:
            ok = False
            reasons.append(f"not PFSIC ({verdict.reason})")
    report["valid"] = ok
    report["reason"] = "; ".join(reasons)
    sys.stdout.write(_dump(report))
    if not ok:
        raise CLIError(report["reason"])
    return [], {}


def cmd_fisher(args):
    povm = _read_povm(args.povm)
    report = fisher_report(povm, fd_check=args.fd_check, step=args.step)
    _emit(_dump(report.to_dict()), args.out)
    return [args.out] if args.out else [], {}


def _parse_x(text, d):
    if text is None:
        return np.zeros(2 * d - 2)
    return np.array([float(v) for v in text.split(",")])


def cmd_simulate(args):
    if args.config:
        cfg = _read_json(args.config)
        povm_spec = cfg.get("povm")
        shots, trials = int(cfg["shots"]), int(cfg["trials"])
        seed = args.seed if args.seed is not None else cfg.get("seed")
        x = cfg.get("true_params")
    else:
        povm_spec = args.povm
        shots, trials, seed, x = args.shots, args.trials, args.seed, None
    if isinstance(povm_spec, dict) and "kind" in povm_spec:
        povm = build_from_descriptor(povm_spec)
    elif isinstance(povm_spec, dict):
        povm = povm_from_dict(povm_spec)
    elif povm_spec:
        povm = _read_povm(povm_spec)
    else:
        desc = {"kind": args.kind, "d": args.d}
        if args.kind == "two-basis":
            desc["p_chi"] = args.p_chi
        povm = build_from_descriptor(desc)
    if x is None:
        x = _parse_x(args.x, povm.dim)
    seed = _resolve_seed(args, seed, "--seed")
    args.seed = seed
    config = SimConfig(povm, np.asarray(x, dtype=float), shots, trials, seed, args.threads)
    report = run_trials(config)
    _emit(_dump(report.to_dict(include_estimates=not args.csv)), args.out)
    outputs = [args.out] if args.out else []
    if args.csv:
        try:
            with open(args.csv, "w", newline="") as fh:
                report.to_csv(fh)
        except OSError as exc:
            raise CLIError(f"cannot write {args.csv}: {exc.strerror}", EXIT_IO) from exc
        outputs.append(args.csv)
    return outputs, {"simulate": seed, "generator": GENERATOR}


def cmd_mix(args):
    povm = _read_povm(args.povm)
    size = args.size or povm.n_outcomes
    seeds = {}
    if args.matrix:
        O = _read_json(args.matrix)
    elif args.identity:
        O = np.eye(size)
    else:
        seed = _resolve_seed(args, args.seed, "--seed")
        args.seed = seed
        seeds["mix"] = seed
        O = random_orthogonal(size, seed)
    O = OrthogonalMatrix(O)
    mixed = orthogonal_mix(povm, O, strict=not args.lenient)
    _emit(_dump(povm_to_dict(mixed)), args.out)
    return [args.out] if args.out else [], seeds


# -- parser --------------------------------------------------------------------


def build_parser():
    parser = argparse.ArgumentParser(
        prog="pfsic", description="Fisher-symmetric measurements for pure states."
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("construct", help="build a POVM and write it as JSON")
    p.add_argument("--kind", choices=["minimal", "two-basis"], default="minimal")
    p.add_argument("--d", type=int)
    p.add_argument("--p-chi", type=float, default=0.5)
    p.add_argument("--descriptor", help="JSON construction descriptor (overrides --kind)")
    p.add_argument("--mix-seed", type=int, help="mix the construction with a random orthogonal matrix")
    p.add_argument("--size", type=int, help="number of outcomes after mixing")
    p.add_argument("--out")
    p.set_defaults(func=cmd_construct)

    p = sub.add_parser("verify", help="check completeness and optionally the PFSIC conditions")
    p.add_argument("povm")
    p.add_argument("--pfsic", action="store_true", help="also require a PFSIC")
    p.add_argument("--strict", action="store_true", help="reject outcomes orthogonal to |0>")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("fisher", help="Fisher analysis at the fiducial state")
    p.add_argument("povm")
    p.add_argument("--fd-check", action="store_true", help="compare with finite differences")
    p.add_argument("--step", type=float, default=1e-5)
    p.add_argument("--out")
    p.set_defaults(func=cmd_fisher)

    p = sub.add_parser("simulate", help="Monte Carlo local tomography")
    p.add_argument("--config", help="JSON config with povm, true_params, shots, trials, seed")
    p.add_argument("--povm", help="POVM JSON file")
    p.add_argument("--kind", choices=["minimal", "two-basis"], default="minimal")
    p.add_argument("--d", type=int, default=2)
    p.add_argument("--p-chi", type=float, default=0.5)
    p.add_argument("--x", help="comma-separated true local parameters (default 0)")
    p.add_argument("--shots", type=int, default=100_000)
    p.add_argument("--trials", type=int, default=2000)
    p.add_argument("--seed", type=int)
    p.add_argument("--threads", type=int, default=0)
    p.add_argument("--out")
    p.add_argument("--csv", help="write per-trial estimates here")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("mix", help="orthogonally mix a POVM's vectors")
    p.add_argument("povm")
    p.add_argument("--seed", type=int)
    p.add_argument("--size", type=int)
    p.add_argument("--identity", action="store_true", help="mix with the identity matrix")
    p.add_argument("--matrix", help="JSON file with an explicit mixing matrix")
    p.add_argument("--lenient", action="store_true", help="allow outcomes orthogonal to |0>")
    p.add_argument("--out")
    p.set_defaults(func=cmd_mix)
    return parser


def main(argv=None):
    parser = build_parser()
    argv = list(sys.argv[1:] if argv is None else argv)
    args = parser.parse_args(argv)
    args.extra_argv = []
    if args.command == "construct" and args.d is None and not args.descriptor:
        parser.error("construct needs --d or --descriptor")
    started = time.perf_counter()
    try:
        outputs, seeds = args.func(args)
        if outputs:
            _write_manifest(args, argv, outputs, seeds, started)
    except CLIError as exc:
        print(f"pfsic {args.command}: {exc}", file=sys.stderr)
        return exc.code
    except NotLocallyCompleteError as exc:
        print(f"pfsic {args.command}: {exc}", file=sys.stderr)
        return EXIT_DOMAIN
    except (ValueError, np.linalg.LinAlgError) as exc:
        print(f"pfsic {args.command}: {exc}", file=sys.stderr)
        return EXIT_DOMAIN
    except KeyError as exc:
        print(f"pfsic {args.command}: missing field {exc}", file=sys.stderr)
        return EXIT_IO
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
