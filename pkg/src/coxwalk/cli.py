"""Command-line front end.

Scores are given in half-units: ``--score -2,0,2`` means s = (-1, 0, 1).

Exit codes: 0 ok, 2 invalid input, 3 infeasible score, 4 lemma
falsification, 5 cap exceeded.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from dataclasses import asdict, dataclass
from pathlib import Path

from . import __version__
from .dynamics import (WalkKernel, exact_tv_curve, mixing_time_exact, occupancy, prepare_coupling, run_walk,
                       verify_all_couplings)
from .errors import CapExceededError, CoxwalkError, InfeasibleScoreError, InvalidInputError, LemmaViolation
from .interchange import (DEFAULT_CAPS, NetworkCensus, all_fibers, build_interchange_graph, check_cap,
                          enumerate_fiber, extended_networks_and_crystals, graph_metrics, network_census)
from .signed import RootType, bitstring, build_complete_graph, check_score, degree_formula, parse_score
from .verify import default_threads, verify_suite

EXIT_OK, EXIT_INVALID, EXIT_INFEASIBLE, EXIT_LEMMA, EXIT_CAP = 0, 2, 3, 4, 5

COMMANDS = ("fiber", "graph", "networks", "walk", "couple", "verify")
DEFAULT_FORMAT = {"fiber": "json", "graph": "dot", "networks": "json", "walk": "csv", "couple": "csv",
                  "verify": "json"}


@dataclass(frozen=True)
class RunConfig:
    command: str
    root_type: str
    n: int
    score: tuple[int, ...] | None
    seed: int
    steps: int
    horizon: int | None
    cap: int
    format: str
    out: str | None

    def echo(self) -> dict:
        d = asdict(self)
        d["score"] = None if self.score is None else list(self.score)
        return d


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--type", dest="root_type", required=True, help="root type: A, B, C or D")
    common.add_argument("--n", type=int, required=True, help="number of players")
    common.add_argument("--score", help="comma-separated score in half-units, e.g. -2,0,2")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--steps", type=int, default=0, help="simulated walk length (walk)")
    common.add_argument("--horizon", type=int, help="last time step of the TV curve (walk)")
    common.add_argument("--cap", type=int, help="largest n allowed for exhaustive work")
    common.add_argument("--out", help="output file (default: stdout)")
    common.add_argument("--format", choices=("json", "dot", "csv"))
    common.add_argument("--threads", type=int, help="worker processes (verify); default: available cores")

    parser = argparse.ArgumentParser(prog="coxwalk", description=__doc__.split("\n")[0],
                                     formatter_class=argparse.RawDescriptionHelpFormatter,
                                     epilog="Scores are half-units. Exit codes: 0 ok, 2 invalid input, "
                                            "3 infeasible score, 4 lemma falsification, 5 cap exceeded.")
    parser.add_argument("--version", action="version", version=f"coxwalk {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    helps = {
        "fiber": "list the tournaments with a given score",
        "graph": "interchange graph as DOT or JSON, with metrics",
        "networks": "distance-two network census and crystal statistics",
        "walk": "exact TV curve and mixing time; optional simulated walk",
        "couple": "per-edge contraction table of the path coupling",
        "verify": "run every structural check over all fibers",
    }
    for name in COMMANDS:
        sub.add_parser(name, parents=[common], help=helps[name])
    return parser


def _fix_negative_scores(argv: list[str]) -> list[str]:
    # "--score -2,0,2" would be read as an option; glue it to its flag
    out = []
    it = iter(argv)
    for tok in it:
        if tok == "--score":
            nxt = next(it, None)
            out.append(tok if nxt is None else f"--score={nxt}")
        else:
            out.append(tok)
    return out


def resolve_config(ns: argparse.Namespace) -> RunConfig:
    rt = RootType.parse(ns.root_type)
    if ns.n < 1:
        raise InvalidInputError("--n must be at least 1")
    if ns.steps < 0 or (ns.horizon is not None and ns.horizon < 0):
        raise InvalidInputError("--steps and --horizon must be non-negative")
    if ns.threads is not None and ns.threads < 1:
        raise InvalidInputError("--threads must be at least 1")
    score = None
    if ns.score is not None:
        score = check_score(build_complete_graph(rt, ns.n), parse_score(ns.score))
    elif ns.command in ("fiber", "graph", "walk", "couple"):
        raise InvalidInputError(f"{ns.command} needs --score")
    fmt = ns.format or DEFAULT_FORMAT[ns.command]
    if fmt == "dot" and ns.command != "graph":
        raise InvalidInputError("--format dot is only available for graph")
    cap = ns.cap if ns.cap is not None else DEFAULT_CAPS[rt]
    return RunConfig(ns.command, rt.value, ns.n, score, ns.seed, ns.steps, ns.horizon, cap, fmt, ns.out)


# ---------------------------------------------------------------------------
# Rendering
# ---------------------------------------------------------------------------

def _json(cfg: RunConfig, payload: dict) -> str:
    return json.dumps({"config": cfg.echo(), **payload}, indent=1, sort_keys=False) + "\n"


def _csv(cfg: RunConfig, header: list[str], rows, extra: dict | None = None) -> str:
    buf = io.StringIO()
    for k, v in {**cfg.echo(), **(extra or {})}.items():
        buf.write(f"# {k}={json.dumps(v)}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def _dot(cfg: RunConfig, body: str, extra: dict) -> str:
    lines = [f"// {k}={json.dumps(v)}" for k, v in {**cfg.echo(), **extra}.items()]
    return "\n".join(lines) + "\n" + body


def _emit(cfg: RunConfig, text: str, suffix: str | None = None) -> None:
    if cfg.out is None:
        if suffix is None:
            sys.stdout.write(text)
        return
    path = Path(cfg.out)
    if suffix is not None:
        path = path.with_suffix(suffix)
    path.write_text(text)


def _fiber(cfg: RunConfig):
    check_cap(cfg.root_type, cfg.n, cfg.cap)
    try:
        degree_formula(cfg.root_type, cfg.n, cfg.score)
    except InvalidInputError as exc:
        raise InfeasibleScoreError(str(exc)) from None
    fiber = enumerate_fiber(cfg.root_type, cfg.n, cfg.score, cfg.cap)
    if len(fiber) == 0:
        raise InfeasibleScoreError(f"no tournament on {cfg.root_type}{cfg.n} has score {list(cfg.score)}")
    return fiber


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------

def cmd_fiber(cfg: RunConfig) -> int:
    fiber = _fiber(cfg)
    if cfg.format == "csv":
        labels = [bitstring(int(w), fiber.graph.m) for w in fiber.masks]
        _emit(cfg, _csv(cfg, ["index", "bits"], enumerate(labels)))
    else:
        _emit(cfg, _json(cfg, fiber.to_dict()))
    return EXIT_OK


def cmd_graph(cfg: RunConfig) -> int:
    g = build_interchange_graph(_fiber(cfg))
    metrics = graph_metrics(g).to_dict()
    doc = _json(cfg, {"graph": g.to_dict(), "metrics": metrics})
    if cfg.format == "dot":
        _emit(cfg, _dot(cfg, g.to_dot(), metrics))
        if cfg.out:
            _emit(cfg, doc, ".json")
    elif cfg.format == "csv":
        _emit(cfg, _csv(cfg, ["u", "v", "multiplicity"], [(u, v, m) for u, v, m, _ in g.edges()]))
    else:
        _emit(cfg, doc)
    return EXIT_OK


def cmd_networks(cfg: RunConfig) -> int:
    check_cap(cfg.root_type, cfg.n, cfg.cap)
    fibers = [_fiber(cfg)] if cfg.score is not None else all_fibers(cfg.root_type, cfg.n, cfg.cap)
    census = NetworkCensus()
    crystals, gamma, failures, rows = 0, 0, [], []
    for fiber in fibers:
        g = build_interchange_graph(fiber)
        census.merge(network_census(g))
        ext = extended_networks_and_crystals(g)
        crystals += len(ext.stats.crystals)
        gamma = max(gamma, ext.stats.gamma)
        failures += ext.failures
        rows.append([",".join(map(str, fiber.score)), len(fiber), g.degree, len(ext.stats.crystals), ext.stats.gamma])
    if cfg.format == "csv":
        body = [[r["class"], r["shape"], r["count"]] for r in census.to_rows()]
        _emit(cfg, _csv(cfg, ["class", "shape", "count"], body))
    else:
        _emit(cfg, _json(cfg, {
            "pairs": census.pairs, "by_class": census.by_class(), "by_shape": census.to_rows(),
            "unclassified": census.unclassified, "inconsistent": census.inconsistent,
            "crystals": crystals, "gamma": gamma, "failures": failures,
            "fibers": [dict(zip(("score", "vertices", "d", "crystals", "gamma"), r)) for r in rows],
        }))
    if census.unclassified or census.inconsistent or failures:
        return EXIT_LEMMA
    return EXIT_OK


def cmd_walk(cfg: RunConfig) -> int:
    g = build_interchange_graph(_fiber(cfg))
    kernel = WalkKernel(g)
    mix = mixing_time_exact(kernel)
    horizon = cfg.horizon if cfg.horizon is not None else max(2 * mix.t_mix, 10)
    curve = exact_tv_curve(kernel, horizon)
    report = {"vertices": g.n_vertices, "d": g.degree, "t_mix": mix.t_mix, "monotone": curve.monotone(),
              "max_spot_error": curve.max_spot_error}
    if cfg.steps:
        occ = occupancy(run_walk(kernel, 0, cfg.steps, cfg.seed), g.n_vertices)
        report["occupancy"] = occ.tolist()
    table = [(t, f"{tau:.12g}") for t, tau in enumerate(curve.taus.tolist())]
    if cfg.format == "csv":
        _emit(cfg, _csv(cfg, ["t", "tau"], table, report))
        if cfg.out:
            _emit(cfg, _json(cfg, report), ".json")
    else:
        _emit(cfg, _json(cfg, {**report, "taus": [float(x) for _, x in table]}))
    return EXIT_OK if curve.monotone() else EXIT_LEMMA


def cmd_couple(cfg: RunConfig) -> int:
    g = build_interchange_graph(_fiber(cfg))
    ctx = prepare_coupling(g)
    checks = verify_all_couplings(ctx)
    header = ["u", "v", "case", "d", "gamma", "gamma_prime", "weight", "expected", "predicted", "contracts", "ok"]
    rows = [[c.u, c.v, c.case, c.d, c.gamma, c.gamma_prime, str(c.weight), str(c.expected), str(c.predicted),
             c.contracts, c.ok] for c in checks]
    if cfg.format == "csv":
        _emit(cfg, _csv(cfg, header, rows))
    else:
        _emit(cfg, _json(cfg, {"gamma": ctx.gamma, "pairs": [dict(zip(header, r)) for r in rows]}))
    return EXIT_OK if all(c.ok for c in checks) else EXIT_LEMMA


def cmd_verify(cfg: RunConfig, threads: int) -> int:
    report = verify_suite(cfg.root_type, cfg.n, threads=threads, seed=cfg.seed, cap=cfg.cap)
    if cfg.format == "csv":
        rows = [[name, row["passed"], row["cases"], " | ".join(row["failures"][:3])]
                for name, row in report.summary().items()]
        _emit(cfg, _csv(cfg, ["check", "passed", "cases", "failures"], rows))
    else:
        _emit(cfg, _json(cfg, report.to_dict()))
    return EXIT_OK if report.passed else EXIT_LEMMA


def main(argv: list[str] | None = None) -> int:
    argv = _fix_negative_scores(list(sys.argv[1:] if argv is None else argv))
    ns = build_parser().parse_args(argv)
    try:
        cfg = resolve_config(ns)
        if cfg.command == "verify":
            return cmd_verify(cfg, ns.threads or default_threads())
        return globals()[f"cmd_{cfg.command}"](cfg)
    except InfeasibleScoreError as exc:
        print(f"infeasible score: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except CapExceededError as exc:
        print(f"cap exceeded: {exc}", file=sys.stderr)
        return EXIT_CAP
    except LemmaViolation as exc:
        print(f"lemma falsified: {exc}", file=sys.stderr)
        return EXIT_LEMMA
    except (InvalidInputError, CoxwalkError) as exc:
        print(f"invalid input: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
