"""Command-line entry point: ``randlip {count,sample,sweep,verify,construct,entropy,replay}``.

Every subcommand accepts ``--config FILE`` (INI, one section per subcommand;
flags override file values) and ``--output PATH``. Files written with
``--output`` carry the full run configuration and the tool version, so
``randlip replay PATH`` reruns them; standard output carries only the payload.

Exit codes: 0 success, 1 unexpected failure, 2 usage error, 3 cap exceeded,
4 sampler did not coalesce.
"""

from __future__ import annotations

import argparse
import configparser
import json
import logging
import os
import sys
import tempfile
from dataclasses import asdict, dataclass, field
from typing import Sequence

from randlip import __version__

log = logging.getLogger("randlip")

EXIT_USAGE, EXIT_CAP, EXIT_NOCOAL = 2, 3, 4


class UsageError(Exception):
    pass


@dataclass
class RunConfig:
    subcommand: str
    options: dict = field(default_factory=dict)

    def header(self) -> dict:
        return {"tool": "randlip", "version": __version__, "run_config": asdict(self)}


def int_list(text: str) -> list[int]:
    """'1,2,5' or '1-8' or '1..8' or mixtures like '1-3,6'."""
    out: list[int] = []
    for part in str(text).replace(" ", "").split(","):
        if not part:
            continue
        for sep in ("..", "-"):
            if sep in part.lstrip("-"):
                a, b = part.split(sep, 1) if sep == ".." else part.rsplit("-", 1)
                out.extend(range(int(a), int(b) + 1))
                break
        else:
            out.append(int(part))
    if not out:
        raise argparse.ArgumentTypeError(f"empty integer list {text!r}")
    return out


# --- output -----------------------------------------------------------------------

def atomic_write(path: str, text: str) -> None:
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".randlip-", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _emit(cfg: RunConfig, payload, fmt: str, output: str | None) -> None:
    """``payload`` is a dict (json), a list of dicts (jsonl) or CSV text (csv)."""
    header = cfg.header()
    if fmt == "json":
        body = json.dumps(payload, sort_keys=True, indent=2) + "\n"
        filed = json.dumps({**header, "result": payload}, sort_keys=True, indent=2) + "\n"
    elif fmt == "jsonl":
        body = "".join(json.dumps(x, sort_keys=True) + "\n" for x in payload)
        filed = json.dumps(header, sort_keys=True) + "\n" + body
    elif fmt == "csv":
        body = payload
        filed = "# " + json.dumps(header, sort_keys=True) + "\n" + body
    else:
        raise UsageError(f"unknown format {fmt!r}")
    if output:
        atomic_write(output, filed)
    else:
        sys.stdout.write(body)


def read_header(path: str) -> dict:
    with open(path, encoding="utf-8") as fh:
        text = fh.read()
    first = text.splitlines()[0] if text else ""
    if first.startswith("# "):
        return json.loads(first[2:])
    try:
        doc = json.loads(text)
        if isinstance(doc, dict) and "run_config" in doc:
            return doc
    except json.JSONDecodeError:
        pass
    head = json.loads(first)
    if "run_config" not in head:
        raise UsageError(f"{path} has no embedded run configuration")
    return head


# --- helpers -------------------------------------------------------------------------

def _graph(opts):
    from randlip.graph import parse_graph_spec

    if not opts.get("graph"):
        raise UsageError("--graph is required")
    return parse_graph_spec(opts["graph"])


def _cnk_params(spec: str) -> tuple[int, int] | None:
    spec = spec.replace(" ", "")
    if not spec.startswith("cnk:"):
        return None
    kv = dict(p.split("=", 1) for p in spec[4:].split(",") if p)
    return int(kv["n"]), int(kv["k"])


def _model(opts):
    from randlip.lipschitz import ModelKind

    return ModelKind.parse(opts.get("model") or "lip", int(opts.get("M") or 1))


# --- subcommands ---------------------------------------------------------------------

def cmd_count(opts) -> dict:
    from randlip import exact

    model = _model(opts)
    v0 = int(opts.get("v0") or 0)
    method = opts.get("method") or "auto"
    cnk = _cnk_params(opts.get("graph") or "")
    if method == "auto":
        method = "transfer" if cnk and v0 == 0 else "bruteforce"
    out = {"graph": opts["graph"], "model": str(model), "v0": v0, "method": method}
    if method == "transfer":
        if not cnk or v0 != 0:
            raise UsageError("transfer-matrix counting needs a cnk:n=..,k=.. graph pinned at vertex 0")
        n, k = cnk
        out["count"] = str(exact.tm_count(n, k, model).count)
        if opts.get("range_le") is not None:
            out["count_range_le"] = str(exact.tm_range_le_count(n, k, model, int(opts["range_le"])))
    elif method == "bruteforce":
        g = _graph(opts)
        cap = int(float(opts.get("cap") or exact.DEFAULT_ORACLE_CAP))
        out["count"] = str(exact.count_bruteforce(g, v0, model, cap))
    else:
        raise UsageError(f"unknown count method {method!r}")
    return out


def cmd_sample(opts) -> list[dict]:
    from randlip import exact
    from randlip.mcmc import SamplerConfig, cftp_sample, heat_bath_chain

    model = _model(opts)
    method = opts.get("method") or "cftp"
    seed = int(opts.get("seed") or 0)
    trials = int(opts.get("trials") or 1)
    v0 = int(opts.get("v0") or 0)
    rows = []
    if method == "cftp":
        if model.kind != "lip":
            raise UsageError("CFTP samples the integer Lipschitz model only")
        g = _graph(opts)
        cap = int(float(opts.get("max_updates") or 2**30))
        for i in range(trials):
            res = cftp_sample(g, v0, model.M, seed, index=i, max_updates=cap)
            vals = list(res.function.values)
            rows.append({"index": i, "epochs": res.epochs, "range": max(vals) - min(vals) + 1, "values": vals})
    elif method == "tm-sample":
        cnk = _cnk_params(opts.get("graph") or "")
        if not cnk or v0 != 0:
            raise UsageError("tm-sample needs a cnk:n=..,k=.. graph pinned at vertex 0")
        for i, f in enumerate(exact.tm_sample(cnk[0], cnk[1], model, seed, trials)):
            rows.append({"index": i, "range": f.range, "values": list(f.values)})
    elif method == "mcmc":
        g = _graph(opts)
        cfg = SamplerConfig(seed=seed, scan=opts.get("scan") or "random",
                            burn_in=int(opts.get("burn_in") or 1000), thinning=int(opts.get("thinning") or 1))
        chain = heat_bath_chain(g, v0, model, cfg, trials)
        for i, f in enumerate(chain.samples):
            rows.append({"index": i, "range": chain.range_trace[i], "values": list(f.values)})
    else:
        raise UsageError(f"unknown sampling method {method!r}")
    return rows


def _sweep_spec(opts):
    from randlip.experiments import SweepSpec

    for key in ("n", "k"):
        if not opts.get(key):
            raise UsageError(f"sweep needs --{key}")
    return SweepSpec(
        n=int_list(opts["n"]), k=int_list(opts["k"]), M=int_list(opts.get("M") or "1"),
        model=opts.get("model") or "lip", method=opts.get("method") or "exact",
        trials=int(opts.get("trials") or 2000), seed=int(opts.get("seed") or 0),
        range_threshold=None if opts.get("range_threshold") in (None, "") else int(opts["range_threshold"]),
        threads=int(opts.get("threads") or os.cpu_count() or 1),
    )


def cmd_sweep(opts, cfg: RunConfig, fmt: str, output: str | None) -> None:
    from randlip.experiments import plot_series, row_dict, rows_to_csv, sweep_phase_transition

    rows = sweep_phase_transition(_sweep_spec(opts))
    for r in rows:
        if r.error:
            log.warning("row n=%d k=%d M=%d failed: %s", r.n, r.k, r.M, r.error)
    timing = bool(opts.get("timing"))
    if fmt == "csv":
        _emit(cfg, rows_to_csv(rows, timing), "csv", output)
    else:
        _emit(cfg, [row_dict(r, timing) for r in rows], "jsonl", output)
    plot_dir = opts.get("plot_data")
    if plot_dir:
        os.makedirs(plot_dir, exist_ok=True)
        for name, text in plot_series(rows, opts.get("plot_y") or "pr_range_le").items():
            atomic_write(os.path.join(plot_dir, name), text)


def cmd_verify(opts) -> dict:
    from randlip import experiments
    from randlip.lipschitz import ModelKind

    check = opts.get("check") or "range"
    seed = int(opts.get("seed") or 0)
    trials = int(opts.get("trials") or 2000)
    if check == "range":
        model = _model(opts)
        g = _graph(opts)
        if opts.get("r") is None:
            raise UsageError("verify range needs --r")
        res = experiments.verify_range_lower_bound(
            g, model if model.kind == "real" else model.M, int(opts["r"]), trials, seed,
            threshold=float(opts.get("threshold") or 0.1), method=opts.get("method") or "cftp",
            v0=int(opts.get("v0") or 0), c=None if opts.get("c") is None else float(opts["c"]),
            max_updates=int(float(opts.get("max_updates") or 2**30)))
        return {**asdict(res), "probability": res.probability, "passed": res.passed}
    if check == "convergence":
        g = _graph(opts)
        Ms = int_list(opts.get("M") or "1,4,16,64")
        res = experiments.convergence_check(g, Ms, trials, seed, v0=int(opts.get("v0") or 0))
        return {**asdict(res), "nonincreasing": res.nonincreasing()}
    if check == "ratio":
        for key in ("n", "k", "M"):
            if opts.get(key) is None:
                raise UsageError(f"verify ratio needs --{key}")
        res = experiments.ratio_example_check(int(opts["n"]), int(opts["k"]), int(opts["M"]))
        return {**asdict(res), "ratio": str(res.ratio), "displayed": str(res.displayed),
                "pinned_closed_form": str(res.pinned)}
    raise UsageError(f"unknown check {check!r}")


def cmd_construct(opts) -> dict:
    from randlip import constructions
    from randlip.graph import ball
    from randlip.lipschitz import assignment_from_csv, assignment_to_csv

    g = _graph(opts)
    for key in ("center", "radius", "boundary"):
        if opts.get(key) is None:
            raise UsageError(f"construct needs --{key}")
    b = ball(g, int(opts["center"]), int(opts["radius"]))
    with open(opts["boundary"], encoding="utf-8") as fh:
        f = assignment_from_csv(fh.read())
    M = int(opts.get("M") or 1)
    missing = sorted(v for v in b.vertices if v not in f)
    if missing:
        raise UsageError(f"boundary CSV misses ball vertices {missing[:5]}")
    if not constructions.is_valid_on_ball(g, {v: f[v] for v in b.vertices}, M):
        raise UsageError("input is not M-Lipschitz on the ball")
    out = {"center": b.center, "radius": b.radius, "exact_radius": b.exact_radius, "M": M}
    if M == 1:
        h = constructions.lift_one_lipschitz(g, b, {v: abs(f[v]) for v in b.vertices})
        out.update(construction="lift", center_value=h[b.center], max=max(h.values()))
        if opts.get("emit"):
            atomic_write(opts["emit"], assignment_to_csv(h))
        return out
    dec = constructions.high_set_decomposition(g, b, f, M)
    limit = None if opts.get("limit") in (None, "") else int(opts["limit"])
    out.update(construction="banded", A=sorted(dec.A), Qstar=sorted(dec.Qstar),
               free_vertices=len(dec.free_vertices()),
               family_size=str(constructions.extension_family_size(dec)),
               lower_bound=constructions.family_lower_bound(dec))
    if opts.get("emit"):
        free = sorted(b.vertices)
        lines = ["index," + ",".join(f"v{v}" for v in free)]
        emitted = 0
        for i, gext in enumerate(constructions.iter_extensions(dec, limit if limit is not None else 1000)):
            lines.append(f"{i}," + ",".join(str(gext[v]) for v in free))
            emitted += 1
        atomic_write(opts["emit"], "\n".join(lines) + "\n")
        out["emitted"] = emitted
    return out


def cmd_entropy(opts) -> dict:
    from randlip import entropy, exact

    model = _model(opts)
    g = _graph(opts)
    v0 = int(opts.get("v0") or 0)
    cap = int(float(opts.get("cap") or exact.DEFAULT_ORACLE_CAP))
    dist = entropy.exact_field_distribution(g, v0, model, cap)
    cnk = _cnk_params(opts["graph"])
    cover = entropy.layered_cycle_cover(*cnk) if cnk and v0 == 0 else entropy.distance_order_cover(g, v0)
    res = entropy.shearer_bound(dist, cover)
    return {"count": str(len(dist)), "entropy_bits": entropy.entropy(dist), "shearer_lhs": res.lhs,
            "shearer_rhs": res.rhs, "slack": res.slack,
            "cover": "layered" if cnk and v0 == 0 else "distance-order"}


# --- argument parsing --------------------------------------------------------------------

def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="INI file; the section named after the subcommand supplies defaults")
    p.add_argument("--output", "-o", help="write here (atomically) instead of stdout")
    p.add_argument("--format", choices=["json", "jsonl", "csv"], help="output format")
    p.add_argument("--seed", type=int)
    p.add_argument("--threads", type=int, help="worker processes (default: available cores)")
    p.add_argument("-v", "--verbose", action="store_true")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="randlip", description="Random Lipschitz functions on graphs")
    ap.add_argument("--version", action="version", version=f"randlip {__version__}")
    sub = ap.add_subparsers(dest="subcommand", required=True)

    p = sub.add_parser("count", help="exact number of pinned functions")
    _add_common(p)
    p.add_argument("--graph")
    p.add_argument("--M", type=int)
    p.add_argument("--model", choices=["lip", "hom"])
    p.add_argument("--method", choices=["auto", "transfer", "bruteforce"])
    p.add_argument("--v0", type=int)
    p.add_argument("--cap", type=float, help="brute-force search node cap")
    p.add_argument("--range-le", dest="range_le", type=int, help="also count functions with R <= this")

    p = sub.add_parser("sample", help="draw pinned functions")
    _add_common(p)
    p.add_argument("--graph")
    p.add_argument("--M", type=int)
    p.add_argument("--model", choices=["lip", "real", "hom"])
    p.add_argument("--method", choices=["cftp", "mcmc", "tm-sample"])
    p.add_argument("--trials", type=int)
    p.add_argument("--v0", type=int)
    p.add_argument("--burn-in", dest="burn_in", type=int)
    p.add_argument("--thinning", type=int)
    p.add_argument("--scan", choices=["random", "systematic"])
    p.add_argument("--max-updates", dest="max_updates", type=float)

    p = sub.add_parser("sweep", help="phase-transition sweep over C_{n,k}")
    _add_common(p)
    p.add_argument("--n")
    p.add_argument("--k")
    p.add_argument("--M")
    p.add_argument("--model", choices=["lip", "hom"])
    p.add_argument("--method", choices=["exact", "bruteforce", "tm-sample", "cftp", "mcmc"])
    p.add_argument("--trials", type=int)
    p.add_argument("--range-threshold", dest="range_threshold", type=int)
    p.add_argument("--plot-data", dest="plot_data", help="directory for two-column (k, value) files")
    p.add_argument("--plot-y", dest="plot_y", help="ResultRow column plotted (default pr_range_le)")
    p.add_argument("--timing", action="store_true", default=None, help="include per-row wall time")

    p = sub.add_parser("verify", help="statistical checks")
    _add_common(p)
    p.add_argument("--check", choices=["range", "convergence", "ratio"])
    p.add_argument("--graph")
    p.add_argument("--M", help="modulus (a list for --check convergence)")
    p.add_argument("--model", choices=["lip", "real"])
    p.add_argument("--r", type=int)
    p.add_argument("--n", type=int)
    p.add_argument("--k", type=int)
    p.add_argument("--c", type=float)
    p.add_argument("--trials", type=int)
    p.add_argument("--threshold", type=float)
    p.add_argument("--method", choices=["cftp", "cycle-exact", "mcmc"])
    p.add_argument("--v0", type=int)
    p.add_argument("--max-updates", dest="max_updates", type=float)

    p = sub.add_parser("construct", help="high-reaching extensions on a ball")
    _add_common(p)
    p.add_argument("--graph")
    p.add_argument("--center", type=int)
    p.add_argument("--radius", type=int)
    p.add_argument("--M", type=int)
    p.add_argument("--boundary", help="CSV vertex,value covering the ball")
    p.add_argument("--limit", type=int)
    p.add_argument("--emit", help="write the constructed functions here as CSV")

    p = sub.add_parser("entropy", help="entropy and Shearer check of the exact uniform law")
    _add_common(p)
    p.add_argument("--graph")
    p.add_argument("--M", type=int)
    p.add_argument("--model", choices=["lip", "hom"])
    p.add_argument("--v0", type=int)
    p.add_argument("--cap", type=float)

    p = sub.add_parser("replay", help="rerun the configuration embedded in an output file")
    p.add_argument("file")
    p.add_argument("--output", "-o")
    return ap


_META = ("config", "output", "verbose", "subcommand")


def resolve_options(args: argparse.Namespace) -> dict:
    """Config-file section values, overridden by flags that were given."""
    opts: dict = {}
    if getattr(args, "config", None):
        cp = configparser.ConfigParser()
        if not cp.read(args.config):
            raise UsageError(f"cannot read config file {args.config}")
        if cp.has_section(args.subcommand):
            opts.update({k.replace("-", "_"): v for k, v in cp.items(args.subcommand)})
    for k, v in vars(args).items():
        if k in _META or v is None:
            continue
        opts[k] = ",".join(map(str, v)) if isinstance(v, list) else v
    return opts


_DEFAULT_FORMAT = {"count": "json", "sample": "jsonl", "sweep": "csv", "verify": "json",
                   "construct": "json", "entropy": "json"}


def dispatch(subcommand: str, opts: dict, output: str | None) -> None:
    cfg = RunConfig(subcommand, dict(sorted(opts.items())))
    fmt = opts.get("format") or _DEFAULT_FORMAT[subcommand]
    if subcommand == "sweep":
        cmd_sweep(opts, cfg, fmt, output)
    elif subcommand == "sample":
        _emit(cfg, cmd_sample(opts), "jsonl", output)
    else:
        fn = {"count": cmd_count, "verify": cmd_verify, "entropy": cmd_entropy,
              "construct": cmd_construct}[subcommand]
        _emit(cfg, fn(opts), "json", output)


def parse_and_dispatch(argv: Sequence[str] | None = None) -> int:
    from randlip.exact import OracleTooLarge, StateSpaceTooLarge
    from randlip.mcmc import NoCoalescence

    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.DEBUG if getattr(args, "verbose", False) else logging.WARNING,
                        format="randlip: %(levelname)s: %(message)s")
    try:
        if args.subcommand == "replay":
            head = read_header(args.file)
            rc = head["run_config"]
            dispatch(rc["subcommand"], dict(rc["options"]), args.output)
        else:
            dispatch(args.subcommand, resolve_options(args), args.output)
    except (OracleTooLarge, StateSpaceTooLarge) as exc:
        print(f"randlip: cap exceeded: {exc}", file=sys.stderr)
        return EXIT_CAP
    except NoCoalescence as exc:
        print(f"randlip: sampler did not coalesce: {exc}", file=sys.stderr)
        return EXIT_NOCOAL
    except (UsageError, ValueError, KeyError, FileNotFoundError) as exc:
        print(f"randlip: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    return 0


def main() -> None:
    sys.exit(parse_and_dispatch())
