"""Command-line entry point: ``scmid <command> ...``.

Every report is deterministic JSON (sorted keys, no timings) and records the
solver configuration and the package defaults it ran with.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Sequence

from . import config
from .formulas import (
    emit_feasibility,
    emit_generic_identifiability,
    emit_numeric_identifiability,
    emit_pd_membership,
    to_smt2,
    to_text,
)
from .graph import GraphError, MixedGraph, parse_graph
from .identify import (
    check_edge_generic,
    check_edge_numeric,
    check_feasible,
    check_generic,
    check_numeric,
    sample_parameters,
)
from .matrix import FLOAT, RATIONAL, Matrix, as_matrix
from .poly import fraction_str, to_fraction
from .quad import ConstraintSystem, NormalizedSystem, normalize
from .reduction import ReductionError, read_bundle, reduce_pipeline, verify_bundle, write_bundle
from .scm import ParamPoint, PatternError, fiber_system, phi
from .solver import SolveConfig

EXIT_OK = 0
EXIT_USAGE = 64


class UsageError(Exception):
    pass


@dataclass
class RunConfig:
    command: str
    inputs: list[str]
    solve: SolveConfig
    samples: int = config.SAMPLES
    output: str | None = None
    fmt: str = "json"
    mode: str = RATIONAL
    cyclic: bool = False
    plant: bool = False
    extra: dict[str, Any] = field(default_factory=dict)

    def to_json(self) -> dict[str, Any]:
        return {
            "command": self.command,
            "inputs": list(self.inputs),
            "solver": self.solve.to_json(),
            "samples": self.samples,
            "mode": self.mode,
            "cyclic": self.cyclic,
            "plant": self.plant,
        }


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):
        raise UsageError(message)


def _seeds(text: str) -> tuple[int, ...]:
    try:
        seeds = tuple(int(s) for s in text.split(",") if s.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"seeds must be comma-separated integers, got {text!r}")
    if not seeds:
        raise argparse.ArgumentTypeError("at least one seed is required")
    return seeds


def _edge(text: str) -> tuple[int, int]:
    parts = text.replace("->", ",").split(",")
    try:
        i, j = (int(p) for p in parts)
    except ValueError:
        raise argparse.ArgumentTypeError(f"edge must look like 'i,j', got {text!r}")
    return i, j


def _positive(kind):
    def parse(text: str):
        v = kind(text)
        if v <= 0:
            raise argparse.ArgumentTypeError(f"must be positive, got {text}")
        return v

    return parse


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--box", type=_positive(float), default=config.BOX, help="search box half-width")
    common.add_argument("--budget", type=_positive(int), default=config.SPLIT_BUDGET, help="box split budget")
    common.add_argument("--seeds", type=_seeds, default=config.SEEDS, help="comma-separated seeds")
    common.add_argument("--samples", type=_positive(int), default=config.SAMPLES, help="generic sample count")
    common.add_argument("--mode", choices=(RATIONAL, FLOAT), default=RATIONAL, help="matrix arithmetic")
    common.add_argument("--cyclic", action="store_true", help="allow directed cycles")
    common.add_argument("--format", dest="fmt", choices=("json", "text"), default="json")
    common.add_argument("-o", "--output", help="report path (directory for reduce)")

    p = _Parser(prog="scmid", description="Identifiability of linear structural causal models.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("simulate", parents=[common], help="covariance implied by parameters")
    s.add_argument("graph")
    s.add_argument("params", nargs="?", help='{"lambda": matrix, "omega": matrix}; sampled from --seeds if omitted')

    for name, text in (
        ("fiber", "export the fiber equations"),
        ("feasible", "is sigma in the image of the parametrization"),
        ("check-numeric", "is the fiber of sigma a single point"),
    ):
        s = sub.add_parser(name, parents=[common], help=text)
        s.add_argument("graph")
        s.add_argument("sigma")

    s = sub.add_parser("check-generic", parents=[common], help="sampled generic identifiability")
    s.add_argument("graph")

    s = sub.add_parser("check-edge", parents=[common], help="identifiability of one edge weight")
    s.add_argument("graph")
    s.add_argument("sigma", nargs="?", help="numeric question when given, generic otherwise")
    s.add_argument("--edge", type=_edge, required=True, help="i,j")

    s = sub.add_parser("reduce", parents=[common], help="compile a polynomial system into an instance")
    s.add_argument("system", help="ConstraintSystem JSON, or one polynomial equation per line")
    s.add_argument("--plant", action="store_true", help="add the planted solution first")

    s = sub.add_parser("verify-reduction", parents=[common], help="re-check a reduction bundle")
    s.add_argument("bundle")
    s.add_argument("--witness", help="JSON list of values for the original or compiled system")

    s = sub.add_parser("export-formula", parents=[common], help="emit a quantified sentence")
    s.add_argument("--kind", choices=("pd", "numeric", "feasible", "generic"), required=True)
    s.add_argument("graph", nargs="?")
    s.add_argument("sigma", nargs="?")
    s.add_argument("--n", type=_positive(int), help="matrix size for --kind pd")
    s.add_argument("--pattern", default="", help="allowed off-diagonal pairs for --kind pd, e.g. '1,2;2,3'")
    s.add_argument("--universal", action="store_true", help="quadratic-form version for --kind pd")
    s.add_argument("--edge", type=_edge, help="edge variant for --kind generic")
    return p


# -- input loading --------------------------------------------------------------


def _read(path: str) -> str:
    try:
        return Path(path).read_text()
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc.strerror}")


def load_graph(path: str, cyclic: bool) -> tuple[MixedGraph, list]:
    return parse_graph(_read(path), cyclic=True if cyclic else None)


def load_matrix(path: str, mode: str) -> Matrix:
    data = json.loads(_read(path))
    m = Matrix.from_json(data) if isinstance(data, dict) else as_matrix(data)
    if mode == FLOAT and m.mode != FLOAT:
        m = m.to_float()
    return m


def load_system(path: str) -> NormalizedSystem:
    """A ConstraintSystem JSON file, or polynomial equations one per line."""
    text = _read(path)
    if text.lstrip().startswith("{"):
        cs = ConstraintSystem.from_json(json.loads(text))
        return NormalizedSystem(cs, tuple(f"x{k}" for k in range(1, cs.n + 1)))
    lines = [ln.split("#", 1)[0].strip() for ln in text.splitlines()]
    return normalize([ln for ln in lines if ln])


def load_values(path: str) -> list[Any]:
    data = json.loads(_read(path))
    if isinstance(data, dict):
        data = data.get("values", data.get("witness"))
    if not isinstance(data, list):
        raise UsageError("witness must be a JSON list of values")
    return [to_fraction(v) for v in data]


def _pattern(text: str) -> list[tuple[int, int]]:
    out = []
    for part in filter(None, (p.strip() for p in text.split(";"))):
        out.append(_edge(part))
    return out


# -- commands -------------------------------------------------------------------


def _solve_cfg(a: argparse.Namespace) -> SolveConfig:
    return SolveConfig(box=a.box, split_budget=a.budget, seeds=tuple(a.seeds))


def _cmd_simulate(a, rc: RunConfig):
    g, labels = load_graph(a.graph, a.cyclic)
    if a.params:
        p = ParamPoint.from_json(json.loads(_read(a.params)))
        source = "file"
    else:
        p = sample_parameters(g, rc.solve.seeds[0])
        source = f"sampled with seed {rc.solve.seeds[0]}"
    if a.mode == FLOAT:
        p = ParamPoint(p.lam.to_float(), p.omega.to_float())
    sigma = phi(g, p)
    return {"labels": labels, "parameters": p.to_json(), "parameter_source": source, "sigma": sigma.to_json()}, EXIT_OK


def _cmd_fiber(a, rc: RunConfig):
    g, labels = load_graph(a.graph, a.cyclic)
    fs = fiber_system(g, load_matrix(a.sigma, a.mode))
    return {"labels": labels, "fiber": fs.to_json()}, EXIT_OK


def _verdict_cmd(check):
    def run(a, rc: RunConfig):
        g, labels = load_graph(a.graph, a.cyclic)
        v = check(g, load_matrix(a.sigma, a.mode), rc.solve)
        return {"labels": labels, "result": v.to_json()}, v.exit_code

    return run


def _cmd_generic(a, rc: RunConfig):
    g, labels = load_graph(a.graph, a.cyclic)
    v = check_generic(g, rc.solve, rc.samples)
    return {"labels": labels, "result": v.to_json()}, v.exit_code


def _cmd_edge(a, rc: RunConfig):
    g, labels = load_graph(a.graph, a.cyclic)
    if a.edge not in g.directed:
        raise UsageError(f"{a.edge[0]} -> {a.edge[1]} is not an edge of the graph")
    if a.sigma:
        v = check_edge_numeric(g, load_matrix(a.sigma, a.mode), a.edge, rc.solve)
    else:
        v = check_edge_generic(g, a.edge, rc.solve, rc.samples)
    return {"labels": labels, "result": v.to_json()}, v.exit_code


def _cmd_reduce(a, rc: RunConfig):
    if not a.output:
        raise UsageError("reduce needs -o PATH for the bundle")
    ns = load_system(a.system)
    cs = ns.system
    pipe = reduce_pipeline(cs, plant=a.plant)
    extra = {"original": cs.to_json(), "original_variables": [str(v) for v in ns.variables], "planted": bool(a.plant)}
    path = write_bundle(pipe.instance, a.output, extra)
    cert = verify_bundle(path)
    rc.extra["report_dir"] = str(path.parent)
    report = {
        "bundle": str(path),
        "original": {"n": cs.n, "m": cs.m, "counts": cs.counts()},
        "planted": bool(a.plant),
        "compiled": {"n": pipe.lowered.system.n, "m": pipe.lowered.system.m, "counts": pipe.lowered.system.counts()},
        "nodes": pipe.instance.graph.n,
        "certificate": cert.to_json(),
    }
    return report, EXIT_OK if cert.ok else 1


def _cmd_verify(a, rc: RunConfig):
    data = read_bundle(a.bundle)
    witness = None
    lifted = False
    if a.witness:
        witness = load_values(a.witness)
        source_n = int(data["source"]["n"])
        prov = data["provenance"]
        if len(witness) != source_n and "original" in prov:
            original = ConstraintSystem.from_json(prov["original"])
            names = tuple(prov.get("original_variables") or (f"x{k}" for k in range(1, original.n + 1)))
            if len(witness) == len(names) < original.n:
                witness = list(NormalizedSystem(original, names).extend(dict(zip(names, witness))))
            if len(witness) == original.n:
                pipe = reduce_pipeline(original, plant=bool(prov.get("planted")))
                witness = list(pipe.lift(witness))
                lifted = True
    cert = verify_bundle(data, witness)
    report = {"bundle": a.bundle, "witness_lifted_from_original": lifted, "certificate": cert.to_json()}
    return report, EXIT_OK if cert.ok else 1


def _cmd_export(a, rc: RunConfig):
    if a.kind == "pd":
        if a.n is None:
            raise UsageError("--kind pd needs --n")
        s = emit_pd_membership(a.n, _pattern(a.pattern), existential=not a.universal)
    else:
        if not a.graph:
            raise UsageError(f"--kind {a.kind} needs a graph")
        g, _ = load_graph(a.graph, a.cyclic)
        if a.kind == "generic":
            if a.edge is not None and a.edge not in g.directed:
                raise UsageError(f"{a.edge[0]} -> {a.edge[1]} is not an edge of the graph")
            s = emit_generic_identifiability(g, a.edge)
        else:
            if not a.sigma:
                raise UsageError(f"--kind {a.kind} needs a sigma file")
            sigma = load_matrix(a.sigma, RATIONAL)
            s = emit_numeric_identifiability(g, sigma) if a.kind == "numeric" else emit_feasibility(g, sigma)
    return {"kind": a.kind, "provenance": s.provenance, "smt2": to_smt2(s), "text": to_text(s)}, EXIT_OK


_COMMANDS = {
    "simulate": _cmd_simulate,
    "fiber": _cmd_fiber,
    "feasible": _verdict_cmd(check_feasible),
    "check-numeric": _verdict_cmd(check_numeric),
    "check-generic": _cmd_generic,
    "check-edge": _cmd_edge,
    "reduce": _cmd_reduce,
    "verify-reduction": _cmd_verify,
    "export-formula": _cmd_export,
}


# -- output ---------------------------------------------------------------------


def render_json(report: dict[str, Any]) -> str:
    return json.dumps(report, indent=2, sort_keys=True, default=_jsonable) + "\n"


def _jsonable(x: Any) -> Any:
    from fractions import Fraction

    if isinstance(x, Fraction):
        return fraction_str(x)
    if isinstance(x, tuple):
        return list(x)
    raise TypeError(f"not JSON serializable: {type(x).__name__}")


def render_text(report: dict[str, Any]) -> str:
    lines = [f"command: {report['config']['command']}"]
    body = report.get("report", {})
    result = body.get("result")
    if result is not None:
        lines.append(f"verdict: {result['verdict']}")
        if "agreement" in result:
            lines.append("agreement: " + ", ".join(f"{k} x{v}" for k, v in sorted(result["agreement"].items())))
        for r in result.get("roots", []):
            lines.append("root: " + ", ".join(f"{k}={v}" for k, v in sorted(r.items())))
        if result.get("reason"):
            lines.append(f"reason: {result['reason']}")
        for note in result.get("notes", []):
            lines.append(f"note: {note}")
    cert = body.get("certificate")
    if cert is not None:
        for c in cert["checks"]:
            lines.append(f"{'PASS' if c['ok'] else 'FAIL'}  {c['name']}  {c['detail']}".rstrip())
        lines.append("certificate: " + ("all checks passed" if cert["ok"] else "FAILED"))
    if "sigma" in body:
        lines.append("sigma:")
        lines += ["  " + " ".join(str(x) for x in row) for row in body["sigma"]["entries"]]
    if "fiber" in body:
        lines.append(f"fiber: {len(body['fiber']['equations'])} equations in {', '.join(body['fiber']['variables'])}")
    for key in ("bundle", "nodes"):
        if key in body:
            lines.append(f"{key}: {body[key]}")
    lines.append(f"exit: {report['exit_code']}")
    return "\n".join(lines) + "\n"


def _write(text: str, path: str | None) -> None:
    if path is None:
        sys.stdout.write(text)
        return
    target = Path(path)
    target.parent.mkdir(parents=True, exist_ok=True)
    target.write_text(text)


def run(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        a = parser.parse_args(argv)
        rc = RunConfig(
            command=a.command,
            inputs=[v for k in ("graph", "sigma", "params", "system", "bundle") if (v := getattr(a, k, None))],
            solve=_solve_cfg(a),
            samples=a.samples,
            output=a.output,
            fmt=a.fmt,
            mode=a.mode,
            cyclic=a.cyclic,
            plant=getattr(a, "plant", False),
        )
        body, code = _COMMANDS[a.command](a, rc)
    except UsageError as exc:
        print(f"scmid: usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (GraphError, PatternError, ReductionError, ValueError, KeyError, json.JSONDecodeError) as exc:
        print(f"scmid: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_USAGE

    if a.command == "export-formula" and a.output:
        out = Path(a.output)
        stem = str(out.with_suffix("") if out.suffix in (".smt2", ".txt") else out)
        _write(body["smt2"], stem + ".smt2")
        _write(body["text"], stem + ".txt")
        return code
    if a.command == "export-formula" and a.fmt == "text":
        sys.stdout.write(body["text"])
        return code

    report = {"config": rc.to_json(), "defaults": config.defaults(), "report": body, "exit_code": code}
    text = render_json(report) if a.fmt == "json" else render_text(report)
    if a.command == "reduce":
        _write(text, str(Path(rc.extra["report_dir"]) / ("report.json" if a.fmt == "json" else "report.txt")))
        sys.stdout.write(text)
    else:
        _write(text, a.output)
    return code


def main() -> None:
    sys.exit(run())
