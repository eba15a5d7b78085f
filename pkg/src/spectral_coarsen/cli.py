"""``spectral-coarsen`` command-line entry point.

Exit status: 0 when every per-realization check passed, 1 when a check
failed (summary on stderr), 2 on usage or input errors.
"""
from __future__ import annotations

import argparse
import csv
import datetime as _dt
import io
import json
import math
import os
import subprocess
import sys
from pathlib import Path

import numpy as np

from .analysis import AnalysisError, eigenvalue_upper_bound, rss_measure
from .bounds import (
    HypothesisError,
    bound_constants,
    fiedler_value_bound,
    heavy_edge_probability,
    regular_graph_probability,
    rss_epsilon_bound,
    rss_success_probability,
)
from .coarsen import CoarseningError, CoarseningMap
from .config import DEFAULT_TOLERANCES, SEED_ENV_VAR, Tolerances, trial_seed
from .eigen import EigenError, sym_eig
from .experiments import CoarseningPlan, Violations, cluster_sweep, realization_checks, rss_sweep, sintheta_sweep
from .graph import (
    SBM,
    EdgeListError,
    ErdosRenyi,
    Graph,
    GraphError,
    KnnCloud,
    Regular,
    SwissRoll,
    build_laplacian,
    generate,
    generate_sbm,
    read_edgelist,
    write_edgelist,
)
from .rec import NEIGHBORHOODS, InfeasibleRatio, Potential, iterations_for_ratio, rec_coarsen, rec_coarsen_fast

EXIT_OK, EXIT_CHECKS, EXIT_ERROR = 0, 1, 2


class CliError(Exception):
    pass


# --- argument helpers ------------------------------------------------------


def _kv(text: str) -> dict[str, str]:
    out = {}
    for part in filter(None, (p.strip() for p in text.split(","))):
        if "=" not in part:
            raise CliError(f"expected key=value, got {part!r}")
        k, v = part.split("=", 1)
        out[k.strip()] = v.strip()
    return out


def _int_list(text: str) -> list[int]:
    """``"2,5,10"`` or a range ``"1-12"``."""
    out: list[int] = []
    for part in text.split(","):
        if "-" in part.strip()[1:]:
            a, b = part.split("-", 1)
            out.extend(range(int(a), int(b) + 1))
        else:
            out.append(int(part))
    return out


def _float_list(text: str) -> list[float]:
    return [float(x) for x in text.split(",") if x.strip()]


def _T(text: str) -> float:
    return math.inf if text.lower() in ("inf", "infinity") else float(text)


def _load_graph(args) -> tuple[Graph, dict]:
    """Build the graph from the single source flag; returns it with a description."""
    sources = [s for s in ("regular", "sbm", "er", "swissroll", "knn", "graph") if getattr(args, s, None)]
    if len(sources) != 1:
        raise CliError("exactly one graph source is required (--regular, --sbm, --er, --swissroll, --knn or --graph)")
    src = sources[0]
    seed = args.graph_seed if args.graph_seed is not None else args.seed
    if src == "graph":
        path = Path(args.graph)
        if not path.exists():
            raise CliError(f"graph file not found: {path}")
        return read_edgelist(path), {"source": "file", "path": str(path)}
    p = _kv(getattr(args, src))
    try:
        if src == "regular":
            spec = Regular(int(p["N"]), int(p["d"]))
        elif src == "sbm":
            spec = SBM(int(p["N"]), int(p["K"]), float(p["p"]), float(p["q"]))
        elif src == "er":
            spec = ErdosRenyi(int(p["N"]), float(p["p"]))
        elif src == "swissroll":
            spec = SwissRoll(int(p["N"]), int(p.get("k", 10)), float(p.get("sigma", 1.0)))
        else:
            points = np.loadtxt(p["path"], ndmin=2)
            spec = KnnCloud(points, int(p.get("k", 10)), float(p.get("sigma", 1.0)))
    except KeyError as exc:
        raise CliError(f"--{src} is missing parameter {exc.args[0]}") from None
    desc = {"source": src, "params": p, "seed": seed}
    return generate(spec, seed), desc


def _tolerances(args) -> Tolerances:
    tol = DEFAULT_TOLERANCES
    for item in args.tol or []:
        for k, v in _kv(item).items():
            if not hasattr(tol, k):
                raise CliError(f"unknown tolerance {k!r}")
            tol = tol.override(**{k: float(v)})
    return tol


def _plan(args, g: Graph) -> CoarseningPlan:
    cmap = None
    if getattr(args, "map", None):
        path = Path(args.map)
        if not path.exists():
            raise CliError(f"map file not found: {path}")
        data = json.loads(path.read_text())
        cmap = CoarseningMap.from_json(data.get("map", data))
        if cmap.n_vertices != g.n_vertices:
            raise CliError(f"map covers {cmap.n_vertices} vertices, graph has {g.n_vertices}")
    return CoarseningPlan(pot=args.potential, ratio=args.ratio, T=args.T, neighborhood=args.neighborhood, cmap=cmap)


# --- output ----------------------------------------------------------------


def _git_describe() -> str:
    try:
        out = subprocess.run(
            ["git", "describe", "--always", "--dirty", "--tags"],
            capture_output=True, text=True, timeout=5, cwd=Path(__file__).resolve().parent,
        )
        return out.stdout.strip() or "unknown"
    except (OSError, subprocess.SubprocessError):
        return "unknown"


def _jsonable(value):
    if isinstance(value, float) and not math.isfinite(value):
        return str(value)
    if isinstance(value, (np.floating, np.integer)):
        return _jsonable(value.item())
    if isinstance(value, dict):
        return {k: _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    return value


class Output:
    """Writes the main artifact to ``--out`` (or stdout) plus a metadata sidecar."""

    def __init__(self, args, tol: Tolerances):
        self.args = args
        self.tol = tol
        self.path = Path(args.out) if getattr(args, "out", None) else None
        if self.path is not None and self.path.exists() and not args.force:
            raise CliError(f"refusing to overwrite {self.path} (use --force)")

    def _header(self) -> str:
        if self.args.no_timestamp:
            return ""
        return f"# generated {_dt.datetime.now(_dt.timezone.utc).isoformat(timespec='seconds')}\n"

    def write_text(self, text: str) -> None:
        if self.path is None:
            sys.stdout.write(text)
            return
        self.path.parent.mkdir(parents=True, exist_ok=True)
        self.path.write_text(text)
        self.write_meta()

    def write_csv(self, rows: list[dict]) -> None:
        buf = io.StringIO()
        buf.write(self._header())
        if rows:
            writer = csv.DictWriter(buf, fieldnames=list(rows[0]), lineterminator="\n")
            writer.writeheader()
            for row in rows:
                writer.writerow({k: (repr(v) if isinstance(v, float) else v) for k, v in row.items()})
        self.write_text(buf.getvalue())

    def write_json(self, payload: dict) -> None:
        self.write_text(json.dumps(_jsonable(payload), indent=2, sort_keys=True) + "\n")

    def sidecar(self, suffix: str) -> Path:
        return self.path.with_name(self.path.name + suffix)

    def write_meta(self, extra: dict | None = None) -> None:
        if self.path is None:
            return
        config = {k: v for k, v in vars(self.args).items() if k != "func"}
        meta = {
            "command": self.args.command,
            "config": config,
            "git_describe": _git_describe(),
            "tolerances": self.tol.as_dict(),
            **(extra or {}),
        }
        self.sidecar(".meta.json").write_text(json.dumps(_jsonable(meta), indent=2, sort_keys=True) + "\n")


def _report(viol: Violations) -> int:
    if viol.count:
        print(f"check violations ({viol.count}): {viol.summary()}", file=sys.stderr)
        for name, items in sorted(viol.items.items()):
            for item in items[:5]:
                print(f"  {name}: {item}", file=sys.stderr)
        return EXIT_CHECKS
    return EXIT_OK


# --- commands --------------------------------------------------------------


def cmd_generate(args, tol) -> int:
    if not args.out:
        raise CliError("generate requires --out")
    out = Output(args, tol)
    g, desc = _load_graph(args)
    out.path.parent.mkdir(parents=True, exist_ok=True)
    write_edgelist(g, out.path)
    extra = {"graph": desc, "n_vertices": g.n_vertices, "n_edges": g.n_edges}
    if args.sbm:
        p = _kv(args.sbm)
        spec = SBM(int(p["N"]), int(p["K"]), float(p["p"]), float(p["q"]))
        _, labels = generate_sbm(spec, desc["seed"])
        out.sidecar(".labels.json").write_text(json.dumps({"labels": labels.tolist()}) + "\n")
    out.write_meta(extra)
    return EXIT_OK


def cmd_coarsen(args, tol) -> int:
    g, desc = _load_graph(args)
    out = Output(args, tol)
    const = bound_constants(g, args.potential, args.neighborhood)
    if args.T is not None:
        T = args.T
    elif args.ratio is not None and args.sampler == "fixed":
        T = iterations_for_ratio(g.n_vertices, const.c1, args.ratio)
    else:
        T = None
    L = build_laplacian(g)
    eig_L = sym_eig(L)
    viol = Violations()
    runs = []
    for t in range(args.trials):
        seed = trial_seed(args.seed, t)
        if args.ratio == 0 and args.T is None:
            cmap = CoarseningMap.identity(g.n_vertices)
            record = {"map": json.loads(cmap.to_json()), "contracted": [], "t": 0, "p_null": 0.0,
                      "ratio": 0.0, "exhausted": False}
        elif T is not None:
            res = rec_coarsen(g, T, args.potential, seed, args.neighborhood)
            cmap, record = res.cmap, json.loads(res.to_json())
        else:
            res = rec_coarsen_fast(g, ratio=args.ratio, pot=args.potential, seed=seed, neighborhood=args.neighborhood)
            cmap, record = res.cmap, json.loads(res.to_json())
        record["seed"] = seed
        v, _, _ = realization_checks(g, L, eig_L, cmap, min(args.K, cmap.n), tol, label=f"seed={seed}")
        viol.merge(v)
        runs.append(record)
    ratios = np.array([r["ratio"] for r in runs])
    payload = {
        "N": g.n_vertices,
        "T": T,
        "c1": const.c1,
        "expected_ratio_lower": (-math.expm1(-const.c1 * T / g.n_vertices) / const.c1) if T is not None else None,
        "ratio_mean": float(ratios.mean()),
        "ratio_std": float(ratios.std(ddof=1)) if len(ratios) > 1 else 0.0,
        "runs": runs if args.trials > 1 else None,
        **({} if args.trials > 1 else runs[0]),
    }
    out.write_json(payload)
    return _report(viol)


def cmd_rss(args, tol) -> int:
    g, _ = _load_graph(args)
    out = Output(args, tol)
    ks = args.ks or list(range(1, args.K + 1))
    sweep = rss_sweep(g, ks, _plan(args, g), args.trials, args.seed, jobs=args.jobs, tol=tol)
    out.write_csv(sweep.rows())
    out.write_meta({"bound_T": sweep.bound_T, "ratio_mean": float(sweep.ratios.mean())})
    return _report(sweep.violations)


def cmd_spectrum(args, tol) -> int:
    g, _ = _load_graph(args)
    out = Output(args, tol)
    L = build_laplacian(g)
    eig_L = sym_eig(L)
    cmap = _plan(args, g).draw(g, args.seed)
    viol, eig_Lc, C = realization_checks(g, L, eig_L, cmap, min(args.K, cmap.n), tol)
    K = min(args.K, cmap.n)
    rss = rss_measure(L, C, eig_L, K, tol) if g.is_connected() else None
    rows = []
    for k in range(1, K + 1):
        row = {"k": k, "lambda": float(eig_L.values[k - 1]), "lambda_coarse": float(eig_Lc.values[k - 1])}
        if rss is not None:
            b = eigenvalue_upper_bound(eig_L, eig_Lc, C, rss, k, tol)
            row.update(epsilon=float(rss.epsilon[k - 1]), upper_bound=b.bound, holds=b.holds)
        rows.append(row)
    out.write_csv(rows)
    return _report(viol)


def cmd_sintheta(args, tol) -> int:
    g, _ = _load_graph(args)
    out = Output(args, tol)
    ks = args.ks or list(range(1, args.K + 1))
    sweep = sintheta_sweep(g, ks, _plan(args, g), args.trials, args.seed, jobs=args.jobs, tol=tol)
    out.write_csv(sweep.rows())
    return _report(sweep.violations)


def cmd_cluster(args, tol) -> int:
    g, _ = _load_graph(args)
    out = Output(args, tol)
    sweep = cluster_sweep(
        g, args.K, args.ratios, args.steps, args.trials, args.seed, args.potential,
        args.restarts, args.neighborhood, args.eps, args.jobs,
    )
    out.write_csv(sweep.rows())
    fails = Violations()
    for r, reps in sweep.reports.items():
        for rep in reps:
            if not rep.cost_gap_holds():
                # k-means is a heuristic: a miss is reported, not treated as a check failure
                print(f"note: cost inequality missed at r={r} seed={rep.seed} (heuristic optimum)", file=sys.stderr)
    return _report(fails)


def cmd_bounds(args, tol) -> int:
    g, desc = _load_graph(args)
    out = Output(args, tol)
    const = bound_constants(g, args.potential, args.neighborhood)
    eig = np.linalg.eigvalsh(build_laplacian(g))
    T = args.T
    if T is None:
        try:
            T = float(iterations_for_ratio(g.n_vertices, const.c1, args.ratio or 0.0))
        except InfeasibleRatio as exc:
            print(f"note: {exc}; evaluating at T=inf", file=sys.stderr)
            T = math.inf
    ks = args.ks or [2]
    rows = []
    for k in ks:
        lam = float(eig[k - 1])
        pr = rss_success_probability(g, args.potential, T, lam, args.eps, args.neighborhood, strict=False, constants=const)
        row = {"k": k, "lambda": lam, "hypothesis_ok": pr.hypothesis_ok, "probability": pr.value, "raw": pr.raw}
        for p_s in (0.5, 0.7):
            row[f"eps_at_p{int(p_s * 100)}"] = rss_epsilon_bound(
                g, args.potential, T, lam, p_s, args.neighborhood, strict=False, constants=const)
        rows.append(row)
    payload = {"constants": const.as_dict(), "T": T, "eps": args.eps, "per_k": rows}
    if args.ratio:
        he = heavy_edge_probability(g, T, float(eig[1]), args.eps, args.neighborhood)
        payload["heavy_edge"] = {"probability": he.probability.value, "raw": he.probability.raw,
                                 "perp_tail": he.perp_tail, "large_n": he.large_n}
        try:
            fb = fiedler_value_bound(g, T, args.ratio, args.eps, float(eig[1]), args.neighborhood)
            payload["fiedler"] = {"factor": fb.factor, "probability": fb.probability.value,
                                  "regular_probability": fb.regular_probability}
        except ValueError as exc:
            payload["fiedler"] = {"error": str(exc)}
        if desc.get("source") == "regular":
            d = int(desc["params"]["d"])
            payload["regular_closed_form"] = regular_graph_probability(d, args.ratio, float(eig[1]), args.eps)
    out.write_json(payload)
    return EXIT_OK


# --- parser ----------------------------------------------------------------


def _read_config(path: str) -> dict[str, str]:
    cfg = {}
    p = Path(path)
    if not p.exists():
        raise CliError(f"config file not found: {p}")
    for lineno, line in enumerate(p.read_text().splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise CliError(f"{p}:{lineno}: expected key = value")
        k, v = line.split("=", 1)
        cfg[k.strip().replace("-", "_")] = v.strip().strip('"')
    return cfg


def _common(sp: argparse.ArgumentParser, analysis: bool = True) -> None:
    src = sp.add_argument_group("graph source (exactly one)")
    src.add_argument("--regular", metavar="N=..,d=..")
    src.add_argument("--sbm", metavar="N=..,K=..,p=..,q=..")
    src.add_argument("--er", metavar="N=..,p=..")
    src.add_argument("--swissroll", metavar="N=..,k=..,sigma=..")
    src.add_argument("--knn", metavar="path=..,k=..,sigma=..")
    src.add_argument("--graph", metavar="PATH", help="edge-list file")
    sp.add_argument("--seed", type=int, default=None, help=f"base seed (default ${SEED_ENV_VAR} or 0)")
    sp.add_argument("--graph-seed", type=int, default=None, help="seed for the generator (default --seed)")
    sp.add_argument("--out", help="output file (stdout when omitted)")
    sp.add_argument("--force", action="store_true", help="overwrite an existing --out")
    sp.add_argument("--no-timestamp", action="store_true", help="omit the timestamp line from CSV output")
    sp.add_argument("--config", help="key = value file; flags given on the command line win")
    sp.add_argument("--tol", action="append", metavar="name=value", help="tolerance override (repeatable)")
    if analysis:
        sp.add_argument("--potential", default="heavy", choices=[p.value for p in Potential])
        sp.add_argument("--neighborhood", default="induced", choices=NEIGHBORHOODS)
        sp.add_argument("--ratio", "-r", type=float, default=None)
        sp.add_argument("-T", type=_T, default=None, help="iterations of the fixed-distribution sampler")
        sp.add_argument("--trials", type=int, default=1)
        sp.add_argument("--jobs", type=int, default=1)
        sp.add_argument("--K", "-K", type=int, default=10)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="spectral-coarsen", description="Randomized edge contraction and spectral checks.")
    sub = parser.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("generate", help="write a generated graph as an edge list")
    _common(sp, analysis=False)
    sp.set_defaults(func=cmd_generate)

    sp = sub.add_parser("coarsen", help="run REC and write the coarsening map")
    _common(sp)
    sp.add_argument("--sampler", choices=("fixed", "live"), default="fixed",
                    help="fixed: categorical over all edges for T steps (T from --ratio if not given); "
                         "live: sample remaining candidates until --ratio")
    sp.set_defaults(func=cmd_coarsen)

    for name, func, help_ in (
        ("rss", cmd_rss, "distortion of eigenvector quadratic forms across seeds"),
        ("spectrum", cmd_spectrum, "original vs coarse eigenvalues for one coarsening"),
        ("sintheta", cmd_sintheta, "eigenspace misalignment across seeds"),
    ):
        sp = sub.add_parser(name, help=help_)
        _common(sp)
        sp.add_argument("--ks", type=_int_list, default=None, help="eigen-indices, e.g. 2,50,100 or 1-12")
        sp.add_argument("--map", help="coarsening map JSON (skips sampling)")
        sp.set_defaults(func=func)

    sp = sub.add_parser("cluster", help="coarse spectral clustering error sweep")
    _common(sp)
    sp.add_argument("--ratios", type=_float_list, default=[0.0, 0.1, 0.2, 0.3])
    sp.add_argument("--steps", type=_int_list, default=[0, 10])
    sp.add_argument("--restarts", type=int, default=20)
    sp.add_argument("--eps", type=float, default=1.0)
    sp.set_defaults(func=cmd_cluster)

    sp = sub.add_parser("bounds", help="evaluate the closed-form probability bounds")
    _common(sp)
    sp.add_argument("--ks", type=_int_list, default=None)
    sp.add_argument("--eps", type=float, default=1.0)
    sp.set_defaults(func=cmd_bounds)
    parser.subcommands = sub.choices
    return parser


def parse_args(argv: list[str] | None = None) -> argparse.Namespace:
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "config", None):
        # config values become subcommand defaults, so explicit flags still win
        sp = parser.subcommands[args.command]
        actions = {a.dest: a for a in sp._actions}
        defaults = {}
        for key, raw in _read_config(args.config).items():
            if key not in actions:
                raise CliError(f"unknown config key {key!r}")
            action = actions[key]
            if action.nargs == 0:
                defaults[key] = raw.lower() in ("1", "true", "yes")
            elif action.dest == "tol":
                defaults[key] = [raw]
            else:
                defaults[key] = action.type(raw) if action.type else raw
        sp.set_defaults(**defaults)
        args = parser.parse_args(argv)
    if args.seed is None:
        env = os.environ.get(SEED_ENV_VAR)
        args.seed = int(env) if env else 0
    if getattr(args, "trials", 1) < 1:
        raise CliError("--trials must be at least 1")
    if getattr(args, "ratio", None) is not None and getattr(args, "T", None) is not None:
        raise CliError("give either --ratio or -T, not both")
    return args


def main(argv: list[str] | None = None) -> int:
    try:
        args = parse_args(argv)
        tol = _tolerances(args)
        return args.func(args, tol)
    except (CliError, GraphError, EdgeListError, CoarseningError, AnalysisError, EigenError,
            InfeasibleRatio, HypothesisError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
