"""Command-line front end.

Exit codes: 0 success, 1 validation failure, 2 a checked property was
falsified (e.g. a negative eigenvalue beyond tolerance), 3 I/O or parse error.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
import time
import warnings
from fractions import Fraction
from pathlib import Path

from . import __version__
from .heatbath import (
    HeatBathSpec,
    InvalidSpecError,
    Label,
    build_chain,
    dump_spec,
    spec_from_dict,
    spec_to_dict,
    validate_spec,
)
from .matrixcore import (
    RationalMatrix,
    StateSpace,
    TargetDistribution,
    check_stochastic,
    find_reversing_measure,
    format_rational,
    lazify,
    parse_rational,
    read_matrix_csv,
    write_matrix_csv,
)
from .models import (
    CapExceededError,
    ContingencyInstance,
    build_contingency_chain,
    build_spin_heatbath,
    build_swendsen_wang,
    direct_swendsen_wang,
    ising,
    potts,
    proper_colourings,
    read_graph,
)
from .sicanon import (
    reversible_si_equivalence,
    settle_analysis,
    si_classify,
    si_decompose,
)
from .simulate import TrajectoryConfig, dump_trajectory, trajectory, tv_distance
from .spectral import DEFAULT_TOL, MixingBoundError, NotReversibleError, certify_psd, mixing_time_bound
from .transfer import TransferError, compose_transfer, verify_transfer_conditions

SCHEMA = "hbspectra/1"

EXIT_OK = 0
EXIT_INVALID = 1
EXIT_FALSIFIED = 2
EXIT_IO = 3


class CliError(Exception):
    def __init__(self, code: int, message: str):
        self.code = code
        super().__init__(message)


def _report(command: str, inputs: dict, **sections) -> dict:
    out = {"schema": SCHEMA, "command": command, "inputs": inputs}
    out.update({k: v for k, v in sections.items() if v is not None})
    return out


def _emit(report: dict, args, human: str, started: float) -> None:
    report["timing"] = {"seconds": round(time.perf_counter() - started, 6)}
    if args.json:
        sys.stdout.write(json.dumps(report, indent=2) + "\n")
    else:
        sys.stdout.write(human.rstrip("\n") + "\n")


def _read_json(path) -> dict:
    try:
        with open(path) as fh:
            return json.load(fh)
    except OSError as exc:
        raise CliError(EXIT_IO, f"cannot read {path}: {exc.strerror}") from None
    except json.JSONDecodeError as exc:
        raise CliError(EXIT_IO, f"{path}: malformed JSON ({exc.msg} at line {exc.lineno})") from None


def _load_spec(path) -> HeatBathSpec:
    data = _read_json(path)
    if not isinstance(data, dict):
        raise CliError(EXIT_IO, f"{path}: expected a JSON object")
    try:
        return spec_from_dict(data)
    except ValueError as exc:
        raise CliError(EXIT_INVALID, f"{path}: {exc}") from None


def _load_matrix(path) -> RationalMatrix:
    try:
        return read_matrix_csv(path)
    except OSError as exc:
        raise CliError(EXIT_IO, f"cannot read {path}: {exc.strerror}") from None
    except ValueError as exc:
        raise CliError(EXIT_IO, f"{path}: {exc}") from None


def _is_spec_file(path: str) -> bool:
    if path.endswith(".json"):
        return True
    if path.endswith(".csv"):
        return False
    try:
        with open(path) as fh:
            return fh.read(256).lstrip().startswith("{")
    except OSError as exc:
        raise CliError(EXIT_IO, f"cannot read {path}: {exc.strerror}") from None


def _eig_table(eigs) -> str:
    return "\n".join(f"  lambda_{i:<3d} {v: .12f}" for i, v in enumerate(eigs))


def _validation_human(rep) -> str:
    if rep.ok:
        return "valid: conditions (I) and (II) hold for every label"
    lines = ["INVALID:"]
    for v in rep.violations:
        where = f"[{v.label}] " if v.label is not None else ""
        lines.append(f"  {where}{v.message}")
    return "\n".join(lines)


# --- subcommands ------------------------------------------------------------------


def cmd_validate(args) -> int:
    started = time.perf_counter()
    spec = _load_spec(args.spec)
    rep = validate_spec(spec)
    report = _report("validate", {"spec": args.spec}, validation=rep.to_dict())
    _emit(report, args, _validation_human(rep), started)
    return EXIT_OK if rep.ok else EXIT_INVALID


def _lazy_spec(spec: HeatBathSpec) -> HeatBathSpec:
    # (I + P)/2 is itself a heat-bath chain: add an all-singletons label of weight 1/2
    half = Fraction(1, 2)
    ids = {lab.id for lab in spec.labels}
    stay = "stay"
    while stay in ids:
        stay += "_"
    labels = tuple(Label(lab.id, lab.rho * half, lab.blocks) for lab in spec.labels)
    singletons = tuple((i,) for i in range(len(spec.space)))
    return HeatBathSpec(spec.space, spec.pi, labels + (Label(stay, half, singletons),))


def cmd_build(args) -> int:
    started = time.perf_counter()
    spec = _load_spec(args.spec)
    rep = validate_spec(spec)
    if not rep.ok:
        report = _report("build", {"spec": args.spec}, validation=rep.to_dict())
        _emit(report, args, _validation_human(rep), started)
        return EXIT_INVALID
    p = build_chain(spec)
    if args.lazy:
        p = lazify(p)
    text = write_matrix_csv(p)
    if args.out:
        _write(args.out, text)
    report = _report("build", {"spec": args.spec, "lazy": args.lazy},
                     validation=rep.to_dict(),
                     result={"states": len(spec.space), "matrix": args.out or "stdout"})
    if args.json:
        report["result"]["rows"] = [[format_rational(v) for v in r] for r in p.rows]
        _emit(report, args, "", started)
    elif not args.out:
        sys.stdout.write(text)
    else:
        _emit(report, args, f"wrote {len(spec.space)}x{len(spec.space)} matrix to {args.out}",
              started)
    return EXIT_OK


def _spectral_section(p, pi, args) -> tuple[dict, int, str]:
    try:
        srep = certify_psd(p, pi, args.tol)
    except NotReversibleError as exc:
        raise CliError(EXIT_INVALID, str(exc)) from None
    sec = srep.to_dict()
    bound_note = ""
    try:
        tau = mixing_time_bound(srep, pi, args.eps)
        sec["mixing_bound"] = {"epsilon": args.eps, "tau_upper": tau}
        bound_note = f"mixing bound tau({args.eps}) <= {tau:.6f}"
    except MixingBoundError as exc:
        sec["mixing_bound"] = None
        sec["mixing_bound_refused"] = str(exc)
        bound_note = f"mixing bound refused: {exc}"
    human = "\n".join([
        "eigenvalues (descending):",
        _eig_table(srep.eigenvalues),
        f"lambda_min = {srep.lambda_min:.12f}   lambda_star = {srep.lambda_star}",
        f"psd = {srep.psd} (tolerance {srep.tolerance:g}, certificate {srep.certificate})",
        bound_note,
    ])
    return sec, (EXIT_OK if srep.psd else EXIT_FALSIFIED), human


def cmd_spectrum(args) -> int:
    started = time.perf_counter()
    inputs = {"input": args.input, "eps": args.eps, "tol": args.tol}
    if _is_spec_file(args.input):
        spec = _load_spec(args.input)
        rep = validate_spec(spec)
        if not rep.ok:
            _emit(_report("spectrum", inputs, validation=rep.to_dict()), args,
                  _validation_human(rep), started)
            return EXIT_INVALID
        p, pi = build_chain(spec), spec.pi
        validation = rep.to_dict()
    else:
        m = _load_matrix(args.input)
        if m.shape[0] != m.shape[1] or check_stochastic(m) != "stochastic":
            raise CliError(EXIT_INVALID, f"{args.input}: not a square stochastic matrix")
        if args.pi:
            try:
                pi = TargetDistribution(m.row_space, tuple(parse_rational(v)
                                                           for v in args.pi.split(",")))
            except (ValueError, ZeroDivisionError) as exc:
                raise CliError(EXIT_INVALID, f"--pi: {exc}") from None
        else:
            measure = find_reversing_measure(m)
            if measure is None:
                raise CliError(EXIT_INVALID,
                               f"{args.input}: matrix is not reversible w.r.t. any positive pi")
            pi = TargetDistribution(m.row_space, measure)
        p = m.to_stochastic()
        validation = {"valid": True, "pi": [format_rational(v) for v in pi.probs]}
    sec, code, human = _spectral_section(p, pi, args)
    if args.dump:
        _write(args.dump, "index,eigenvalue\n" + "".join(
            f"{i},{v!r}\n" for i, v in enumerate(sec["eigenvalues"])))
    _emit(_report("spectrum", inputs, validation=validation, spectral=sec), args, human, started)
    return code


def cmd_si(args) -> int:
    started = time.perf_counter()
    m = _load_matrix(args.matrix)
    inputs = {"matrix": args.matrix, "action": args.action}
    verdict = si_classify(m)
    result: dict = {"classification": verdict.to_dict()}
    lines = [f"classification: {verdict.kind}" +
             (f" (t={verdict.t}, r={verdict.r})" if verdict.is_si else "")]
    code = EXIT_OK
    if args.action == "decompose":
        if not verdict.is_si:
            code = EXIT_INVALID
        else:
            dec = si_decompose(m)
            result["decomposition"] = dec.to_dict()
            lines.append(f"k={dec.k} t={dec.t} permutation={list(dec.permutation)}")
            for b in dec.blocks:
                lines.append(f"  block {list(b.states)} pi={[format_rational(v) for v in b.pi]}")
            if dec.t:
                lines.append(f"  ephemeral {list(dec.ephemeral)} p="
                             f"{[[format_rational(v) for v in row] for row in dec.p]}")
    elif args.action == "equivalence":
        if not verdict.is_si:
            code = EXIT_INVALID
        else:
            eq = reversible_si_equivalence(m)
            result["equivalence"] = eq.to_dict()
            lines.append(f"no_zero_columns={eq.no_zero_columns} direct_sum={eq.direct_sum} "
                         f"reversible={eq.reversible}")
    elif args.action == "settle":
        if check_stochastic(m) != "stochastic":
            code = EXIT_INVALID
        else:
            rep = settle_analysis(m, args.cap)
            result["settle"] = rep.to_dict()
            lines.append(f"settles={rep.settles} m={rep.m} strict_form={rep.strict_form}")
    _emit(_report("si", inputs, result=result), args, "\n".join(lines), started)
    return code


def _parse_w(args) -> Fraction:
    if args.w is not None and args.beta is not None:
        raise CliError(EXIT_INVALID, "give either --w or --beta, not both")
    if args.beta is not None:
        warnings.warn("--beta is a float; e^beta is rounded to a rational and exactness "
                      "is relative to that rounding", stacklevel=2)
        return Fraction(math.exp(args.beta))
    try:
        return parse_rational(args.w if args.w is not None else "1")
    except (ValueError, ZeroDivisionError) as exc:
        raise CliError(EXIT_INVALID, f"--w: {exc}") from None


def _int_list(text: str, flag: str) -> tuple[int, ...]:
    try:
        return tuple(int(t) for t in text.split(","))
    except ValueError:
        raise CliError(EXIT_INVALID, f"{flag}: expected comma-separated integers") from None


def _graph(args):
    if not args.graph:
        raise CliError(EXIT_INVALID, "--graph is required for this model")
    try:
        return read_graph(args.graph)
    except OSError as exc:
        raise CliError(EXIT_IO, f"cannot read {args.graph}: {exc.strerror}") from None
    except ValueError as exc:
        raise CliError(EXIT_IO, f"{args.graph}: {exc}") from None


def _write(path, text: str) -> None:
    try:
        Path(path).parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", newline="") as fh:
            fh.write(text)
    except OSError as exc:
        raise CliError(EXIT_IO, f"cannot write {path}: {exc.strerror}") from None


def _sw_bundle(sw, out_dir: str) -> dict:
    d = Path(out_dir)
    _write(d / "R.csv", write_matrix_csv(sw.R))
    _write(d / "T.csv", write_matrix_csv(sw.T))
    bundle = {
        "omega": {"states": list(sw.pi.space.states),
                  "pi": [format_rational(v) for v in sw.pi.probs]},
        "omega_prime": {"states": list(sw.mu.space.states),
                        "mu": [format_rational(v) for v in sw.mu.probs]},
        "R": "R.csv",
        "T": "T.csv",
    }
    _write(d / "bundle.json", json.dumps(bundle, indent=2) + "\n")
    return bundle


def cmd_model(args) -> int:
    started = time.perf_counter()
    kind = args.kind
    inputs = {"model": kind}
    try:
        if kind == "contingency":
            if not args.rows or not args.cols:
                raise CliError(EXIT_INVALID, "contingency needs --rows and --cols")
            r, c = _int_list(args.rows, "--rows"), _int_list(args.cols, "--cols")
            inputs.update(rows=list(r), cols=list(c), lazy=args.lazy)
            try:
                inst = ContingencyInstance(r, c)
            except ValueError as exc:
                raise CliError(EXIT_INVALID, str(exc)) from None
            spec = build_contingency_chain(inst)
        elif kind == "sw":
            g = _graph(args)
            w = _parse_w(args)
            q = args.q or 2
            inputs.update(graph=args.graph, q=q, w=format_rational(w))
            try:
                sw = build_swendsen_wang(g, q, w)
            except (ValueError, TransferError) as exc:
                if isinstance(exc, CapExceededError):
                    raise
                raise CliError(EXIT_INVALID, str(exc)) from None
            result = {"states": len(sw.pi), "lifted_states": len(sw.mu),
                      "T_idempotent": True}
            lines = [f"Swendsen-Wang: {len(sw.pi)} states, {len(sw.mu)} lifted states"]
            code = EXIT_OK
            if args.verify:
                equal = direct_swendsen_wang(g, q, w) == sw.P
                result["direct_equal"] = equal
                lines.append("RTR* = direct: " + ("equal" if equal else "DIFFER"))
                code = EXIT_OK if equal else EXIT_FALSIFIED
            if args.out:
                _sw_bundle(sw, args.out)
                result["bundle"] = str(Path(args.out) / "bundle.json")
                lines.append(f"wrote triple bundle to {result['bundle']}")
            result["P"] = [[format_rational(v) for v in row] for row in sw.P.rows]
            _emit(_report("model", inputs, result=result), args, "\n".join(lines), started)
            return code
        else:
            g = _graph(args)
            inputs["graph"] = args.graph
            if kind == "coloring":
                q = args.q or 3
                inputs["q"] = q
                sys_ = proper_colourings(g, q)
            else:
                w = _parse_w(args)
                q = 2 if kind == "ising" else (args.q or 2)
                inputs.update(q=q, w=format_rational(w))
                try:
                    sys_ = ising(g, w) if kind == "ising" else potts(g, q, w)
                except ValueError as exc:
                    raise CliError(EXIT_INVALID, str(exc)) from None
            try:
                spec = build_spin_heatbath(sys_)
            except CapExceededError:
                raise
            except ValueError as exc:
                raise CliError(EXIT_INVALID, str(exc)) from None
            if args.lazy:
                inputs["lazy"] = True
    except CapExceededError as exc:
        raise CliError(EXIT_INVALID, str(exc)) from None
    if args.lazy:
        spec = _lazy_spec(spec)
    if args.out:
        _write(args.out, dump_spec(spec))
    result = {"states": len(spec.space), "labels": len(spec.labels)}
    if args.json:
        result["spec"] = spec_to_dict(spec)
        _emit(_report("model", inputs, result=result), args, "", started)
    elif args.out:
        _emit(_report("model", inputs, result=result), args,
              f"{kind}: {len(spec.space)} states, {len(spec.labels)} labels -> {args.out}",
              started)
    else:
        sys.stdout.write(dump_spec(spec))
    return EXIT_OK


def _load_bundle(path):
    data = _read_json(path)
    base = Path(path).parent
    try:
        omega = data["omega"]
        space = StateSpace(omega["states"])
        pi = TargetDistribution(space, tuple(parse_rational(v) for v in omega["pi"]))
        lifted = data["omega_prime"]
        lspace = StateSpace(lifted["states"])
        mu = TargetDistribution(lspace, tuple(parse_rational(v) for v in lifted["mu"]))
        r_raw = _load_matrix(base / data["R"])
        t_raw = _load_matrix(base / data["T"])
    except (KeyError, TypeError) as exc:
        raise CliError(EXIT_IO, f"{path}: malformed bundle ({exc})") from None
    except (ValueError, ZeroDivisionError) as exc:
        raise CliError(EXIT_INVALID, f"{path}: {exc}") from None
    try:
        r = RationalMatrix(r_raw.rows, space, lspace)
        t = RationalMatrix(t_raw.rows, lspace, lspace)
    except ValueError as exc:
        raise CliError(EXIT_INVALID, f"{path}: {exc}") from None
    return r, t, pi, mu


def cmd_transfer(args) -> int:
    started = time.perf_counter()
    r, t, pi, mu = _load_bundle(args.bundle)
    rep = verify_transfer_conditions(r, t, pi, mu, args.tol)
    inputs = {"bundle": args.bundle, "tol": args.tol}
    lines = [f"  {k:<20s} {'pass' if v else 'FAIL'}" for k, v in rep.checks.items()]
    if not rep.ok:
        _emit(_report("transfer", inputs, validation=rep.to_dict()), args,
              "transfer conditions:\n" + "\n".join(lines), started)
        return EXIT_INVALID
    p = compose_transfer(r, t, pi, mu, args.tol)
    sec, code, human = _spectral_section(p, pi, args)
    _emit(_report("transfer", inputs, validation=rep.to_dict(), spectral=sec,
                  result={"P": [[format_rational(v) for v in row] for row in p.rows]}),
          args, "transfer conditions:\n" + "\n".join(lines) + "\n" + human, started)
    return code


def cmd_simulate(args) -> int:
    started = time.perf_counter()
    spec = _load_spec(args.spec)
    rep = validate_spec(spec)
    if not rep.ok:
        _emit(_report("simulate", {"spec": args.spec}, validation=rep.to_dict()), args,
              _validation_human(rep), started)
        return EXIT_INVALID
    start = 0
    if args.start is not None:
        try:
            start = spec.space.position(args.start)
        except KeyError as exc:
            raise CliError(EXIT_INVALID, str(exc)) from None
    if args.steps < 0:
        raise CliError(EXIT_INVALID, "--steps must be nonnegative")
    path = trajectory(spec, TrajectoryConfig(args.seed, args.steps, start))
    if args.out:
        _write(args.out, dump_trajectory(path, spec.space.states))
    n = len(spec.space)
    counts = [0] * n
    for x in path[1:] if len(path) > 1 else path:
        counts[int(x)] += 1
    total = max(sum(counts), 1)
    freq = [c / total for c in counts]
    tv = tv_distance(freq, [float(p) for p in spec.pi.probs])
    result = {"steps": args.steps, "seed": args.seed,
              "start": spec.space.label(start), "final": spec.space.label(int(path[-1])),
              "visit_frequencies": freq, "tv_to_pi": tv,
              "trajectory": args.out}
    human = (f"{args.steps} steps from {spec.space.label(start)} (seed {args.seed}); "
             f"final state {spec.space.label(int(path[-1]))}; "
             f"tv(visit frequencies, pi) = {tv:.6f}")
    _emit(_report("simulate", {"spec": args.spec, "steps": args.steps, "seed": args.seed},
                  result=result), args, human, started)
    return EXIT_OK


# --- entry point ---------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="hbspectra", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, func, help_):
        p = sub.add_parser(name, help=help_)
        p.add_argument("--json", action="store_true", help="emit a RunReport JSON document")
        p.set_defaults(func=func)
        return p

    p = add("validate", cmd_validate, "check a heat-bath spec against conditions (I), (II)")
    p.add_argument("spec")

    p = add("build", cmd_build, "build the transition matrix of a spec as CSV")
    p.add_argument("spec")
    p.add_argument("--out")
    p.add_argument("--lazy", action="store_true", help="emit (I + P)/2")

    p = add("spectrum", cmd_spectrum, "eigenvalues, PSD verdict and mixing bound")
    p.add_argument("input", help="spec JSON or matrix CSV")
    p.add_argument("--eps", type=float, default=0.01)
    p.add_argument("--tol", type=float, default=DEFAULT_TOL)
    p.add_argument("--pi", help="comma-separated target distribution for a matrix CSV")
    p.add_argument("--dump", help="write the spectrum as CSV")

    p = add("si", cmd_si, "classify or decompose a stochastic idempotent matrix")
    p.add_argument("action", choices=["classify", "decompose", "equivalence", "settle"])
    p.add_argument("matrix")
    p.add_argument("--cap", type=int, default=None, help="settling power cap (default N)")

    p = add("model", cmd_model, "build a model chain")
    p.add_argument("kind", choices=["potts", "ising", "coloring", "contingency", "sw"])
    p.add_argument("--graph", help="edge list file, one 'u v' per line")
    p.add_argument("--q", type=int)
    p.add_argument("--w", help="rational e^beta")
    p.add_argument("--beta", type=float, help="float beta (loses exactness)")
    p.add_argument("--rows")
    p.add_argument("--cols")
    p.add_argument("--lazy", action="store_true")
    p.add_argument("--verify", action="store_true", help="sw: compare R T R* with direct sum")
    p.add_argument("--out", help="spec JSON path (bundle directory for sw)")

    p = add("transfer", cmd_transfer, "verify and compose a triple bundle")
    p.add_argument("bundle")
    p.add_argument("--eps", type=float, default=0.01)
    p.add_argument("--tol", type=float, default=DEFAULT_TOL)

    p = add("simulate", cmd_simulate, "seeded heat-bath trajectory")
    p.add_argument("spec")
    p.add_argument("--steps", type=int, required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--start", help="start state label (default: first state)")
    p.add_argument("--out", help="trajectory CSV path")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse uses 2 for usage errors, which would read as "falsified"
        return EXIT_IO if exc.code == 2 else (exc.code or 0)
    try:
        return args.func(args)
    except CliError as exc:
        sys.stderr.write(f"hbspectra {args.command}: {exc}\n")
        return exc.code
    except InvalidSpecError as exc:
        sys.stderr.write(f"hbspectra {args.command}: invalid spec: {exc}\n")
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
