"""Command-line entry point: ``ergmclt <command> [--config FILE] [flags]``.

Commands: phase, sample, clt, hajek, couple, stein, oracle.  Each writes CSV
tables, a JSON summary and ``manifest.json`` (the resolved config plus the list
of outputs) into ``--out``.  Exit status is 0 on success, 2 on a validation
error and 3 when a critical-regime spec is refused.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from typing import Optional

import numpy as np

from . import __version__
from .config import ExperimentConfig
from .dynamics import (
    ChainConfig,
    Init,
    Well,
    check_regime,
    coupling_experiment,
    default_eta,
    format_value,
    resolve_workers,
    run_chain,
    run_chains,
)
from .exceptions import ConfigError, CriticalRegimeError, ErgmError, NotAttractingError
from .model import MotifGraph
from .observables import (
    Degree,
    EdgeCount,
    batch_means_se,
    kolmogorov_distance_to_normal,
    parse_observable,
    residual_variance_scan,
    standardize,
    wasserstein_distance_to_normal,
)
from .phase import (
    find_stationary_points,
    phase_grid,
    phase_report,
    regime_map,
    variance_proxies,
    variance_proxy_degree,
    variance_proxy_edge,
)

COMMANDS = ("phase", "sample", "clt", "hajek", "couple", "stein", "oracle")
EXIT_OK, EXIT_INVALID, EXIT_CRITICAL = 0, 2, 3


# ---------------------------------------------------------------------------
# output helpers


def _jsonable(o):
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, (np.integer,)):
        return int(o)
    if isinstance(o, (np.floating,)):
        return float(o)
    if isinstance(o, tuple):
        return list(o)
    raise TypeError(f"cannot serialize {type(o).__name__}")


class Output:
    """Single-writer output directory that remembers what it wrote."""

    def __init__(self, root: str):
        self.root = root
        self.files: list[str] = []
        os.makedirs(root, exist_ok=True)

    def path(self, name: str) -> str:
        self.files.append(name)
        return os.path.join(self.root, name)

    def json(self, name: str, obj) -> None:
        with open(self.path(name), "w", encoding="utf-8", newline="\n") as fh:
            json.dump(obj, fh, indent=2, sort_keys=True, default=_jsonable)
            fh.write("\n")

    def csv(self, name: str, schema: str, header: list[str], rows) -> None:
        with open(self.path(name), "w", encoding="utf-8", newline="\n") as fh:
            fh.write(f"# schema: {schema}\n")
            fh.write(",".join(header) + "\n")
            for row in rows:
                fh.write(",".join(c if isinstance(c, str) else format_value(c) for c in row) + "\n")

    def manifest(self, command: str, cfg: ExperimentConfig, extra: Optional[dict] = None) -> None:
        body = {
            "command": command,
            "version": __version__,
            "seed": cfg["seed"],
            "config": cfg.to_dict(),
            "outputs": sorted(self.files),
        }
        if extra:
            body.update(extra)
        self.json("manifest.json", body)


# ---------------------------------------------------------------------------
# shared resolution


def resolve_well(cfg: ExperimentConfig, report) -> Optional[Well]:
    dyn = cfg["dynamics"]
    p = report.p_star if dyn["p"] == "auto" else float(dyn["p"])
    mode = dyn["well"]
    if mode is True:
        mode = "on"
    elif mode is False:
        mode = "off"
    if mode == "off":
        return None
    if mode == "auto" and len(report.local_maxima) < 2 and dyn["p"] == "auto":
        return None
    eta = default_eta(report, p) if dyn["eta"] == "auto" else float(dyn["eta"])
    return Well(p, eta)


def chain_configs(cfg: ExperimentConfig, well: Optional[Well], samples: Optional[int] = None) -> list[ChainConfig]:
    dyn = cfg["dynamics"]
    return [
        ChainConfig(
            cfg.spec, int(n), well=well, init=Init(dyn["init"]), burn_in=dyn["burn_in"], thinning=dyn["thinning"],
            samples=dyn["samples"] if samples is None else samples, seed=cfg["seed"], chain_index=i,
        )
        for i, n in enumerate(dyn["sizes"])
    ]


def _prepare(cfg: ExperimentConfig):
    spec = cfg.spec
    report = phase_report(spec)
    well = resolve_well(cfg, report)
    check_regime(spec, well, cfg["force_critical"], cfg["allow_local_well"])
    return spec, report, well


def _target_p(report, well: Optional[Well]) -> float:
    return well.p_star if well is not None else report.p_star


# ---------------------------------------------------------------------------
# commands


def cmd_phase(cfg: ExperimentConfig, out: Output) -> dict:
    spec = cfg.spec
    rep = find_stationary_points(spec)
    body = rep.to_dict()
    body["spec"] = spec.to_dict()
    proxies = []
    for n in cfg["dynamics"]["sizes"]:
        try:
            vp = variance_proxies(spec, rep.p_star, int(n))
            proxies.append({"n": n, **vp.__dict__})
        except NotAttractingError as exc:
            proxies.append({"n": n, "error": str(exc)})
    body["proxies"] = proxies
    out.json("phase.json", body)
    out.csv("phase_grid.csv", "ergmclt.phase-grid/1", ["q", "L_beta", "phi_beta"], phase_grid(spec, cfg["phase"]["grid"]))
    ph = cfg["phase"]
    if ph["regime_map"]:
        if not ph["beta0_values"] or not ph["beta1_values"]:
            raise ConfigError("phase.regime_map needs beta0_values and beta1_values")
        rows = regime_map(spec.motifs[:3], ph["beta0_values"], ph["beta1_values"], ph["beta2_values"], ph["map_grid"])
        out.csv(
            "regime_map.csv", "ergmclt.regime-map/1", ["beta0", "beta1", "beta2", "regime", "p"],
            [(r["beta"][0], r["beta"][1] if len(r["beta"]) > 1 else 0.0, r["beta"][2] if len(r["beta"]) > 2 else 0.0,
              r["regime"], r["p"]) for r in rows],
        )
    return {"regime": rep.regime, "local_maxima": rep.local_maxima, "p_star": rep.p_star}


def cmd_sample(cfg: ExperimentConfig, out: Output) -> dict:
    spec, report, well = _prepare(cfg)
    p = _target_p(report, well)
    obs = [parse_observable(t, p) for t in cfg["observables"]["sample"]]
    runs = run_chains(chain_configs(cfg, well), obs, workers=cfg["workers"], force=cfg["force_critical"],
                      allow_local_well=cfg["allow_local_well"])
    summary = []
    for run in runs:
        n = run.config.n
        run.to_csv(out.path(f"sample_n{n}.csv"))
        stats = {}
        for j, name in enumerate(run.names):
            col = run.values[:, j]
            stats[name] = {"mean": float(col.mean()), "var": float(col.var(ddof=1)) if len(col) > 1 else 0.0,
                           "se": batch_means_se(col)}
        summary.append({"n": n, "rejections": run.rejections, "min_edges": run.min_edges,
                        "max_edges": run.max_edges, "steps": run.steps, "observables": stats})
    body = {"well": None if well is None else well.__dict__, "runs": summary}
    out.json("sample.json", body)
    return body


def cmd_clt(cfg: ExperimentConfig, out: Output) -> dict:
    spec, report, well = _prepare(cfg)
    p = _target_p(report, well)
    kind = cfg["observables"]["clt"]
    v = cfg["observables"]["vertex"]
    obs = EdgeCount() if kind == "edges" else Degree(v)
    runs = run_chains(chain_configs(cfg, well), [obs], workers=cfg["workers"], force=cfg["force_critical"],
                      allow_local_well=cfg["allow_local_well"])
    table = []
    for run in runs:
        n = run.config.n
        proxy = variance_proxy_edge(spec, p, n) if kind == "edges" else variance_proxy_degree(spec, p, n)
        vals = run.values[:, 0]
        z = standardize(vals, proxy)
        emp = float(vals.var(ddof=1))
        table.append({"n": n, "d_kol": kolmogorov_distance_to_normal(z), "d_was": wasserstein_distance_to_normal(z),
                      "proxy": proxy, "empirical_variance": emp, "ratio": emp / proxy, "samples": len(vals)})
        run.to_csv(out.path(f"clt_samples_n{n}.csv"))
    cols = ["n", "d_kol", "d_was", "proxy", "empirical_variance", "ratio", "samples"]
    out.csv("clt.csv", "ergmclt.clt/1", cols, [[r[c] for c in cols] for r in table])
    body = {"observable": obs.name, "p": p, "table": table}
    out.json("clt.json", body)
    return body


def cmd_hajek(cfg: ExperimentConfig, out: Output) -> dict:
    spec, report, well = _prepare(cfg)
    o = cfg["observables"]
    dyn = cfg["dynamics"]
    G = MotifGraph.from_name(o["hajek_motif"])
    scan = residual_variance_scan(
        spec, G, dyn["sizes"], dyn["samples"], seed=cfg["seed"], rooted=o["rooted"], rho=o["rho"], v=o["vertex"],
        p=_target_p(report, well), burn_in=dyn["burn_in"], thinning=dyn["thinning"], force=cfg["force_critical"],
        workers=cfg["workers"],
    )
    out.csv("hajek.csv", "ergmclt.hajek/1", ["n", "variance", "normalizer", "ratio", "samples"],
            [(r.n, r.variance, r.normalizer, r.ratio, r.samples) for r in scan.rows])
    body = scan.to_dict()
    body["motif"] = G.label
    out.json("hajek.json", body)
    return body


def cmd_couple(cfg: ExperimentConfig, out: Output) -> dict:
    spec, report, well = _prepare(cfg)
    dyn = cfg["dynamics"]
    rows = []
    for c in chain_configs(cfg, well):
        s = coupling_experiment(c, dyn["replicas"], dyn["horizon"], dyn["record_every"], workers=cfg["workers"],
                                force=cfg["force_critical"], allow_local_well=cfg["allow_local_well"])
        s.to_csv(out.path(f"coupling_n{c.n}.csv"))
        rows.append(s.to_dict())
    body = {"well": None if well is None else well.__dict__, "sizes": rows}
    out.json("coupling.json", body)
    return body


def _stein_one(args):
    from .stein import stein_experiment

    return stein_experiment(**args)


def cmd_stein(cfg: ExperimentConfig, out: Output) -> dict:
    from .stein import terms_to_csv

    spec, report, well = _prepare(cfg)
    st, dyn = cfg["stein"], cfg["dynamics"]
    jobs = [
        dict(spec=spec, n=int(n), samples=dyn["samples"], seed=cfg["seed"], mode=st["mode"], v=st["vertex"],
             p=_target_p(report, well), well=well, integrate_y=st["integrate_y"], burn_in=dyn["burn_in"],
             thinning=dyn["thinning"], chain_index=i, force=cfg["force_critical"], blocks=st["blocks"])
        for i, n in enumerate(dyn["sizes"])
    ]
    workers = resolve_workers(cfg["workers"])
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            results = list(ex.map(_stein_one, jobs))
    else:
        results = [_stein_one(j) for j in jobs]
    reports = []
    for rep, T in results:
        terms_to_csv(T, rep.scale_sq, out.path(f"stein_n{rep.n}.csv"), rep.mode)
        reports.append(rep.to_dict())
    body = {"reports": reports}
    out.json("stein.json", body)
    return body


def _z(a: float, b: float, se: float) -> float:
    if se > 0:
        return (a - b) / se
    return 0.0 if a == b else math.inf


def cmd_oracle(cfg: ExperimentConfig, out: Output) -> dict:
    from .oracle import TRANSITION_MAX_N, build_exact, exact_moments, exact_transition_check, memory_estimate

    spec = cfg.spec
    report = phase_report(spec)
    well = resolve_well(cfg, report)
    o = cfg["oracle"]
    rows, sizes = [], []
    checks = cfg["oracle"]["check_samples"]
    for c in chain_configs(cfg, well, samples=max(checks, 1)):
        n = c.n
        est = memory_estimate(n, len(spec.motifs))
        print(f"oracle n={n}: about {est / 2**20:.1f} MiB", file=sys.stderr)
        dist = build_exact(spec, n, well, max_n=o["max_n"])
        info = dist.summary()
        info["memory_estimate_bytes"] = est
        if n <= TRANSITION_MAX_N:
            info["transition_check"] = exact_transition_check(dist).to_dict()
        out.json(f"oracle_n{n}.json", info)
        if o["dump"]:
            dist.dump(out.path(f"oracle_n{n}.bin"))
        if checks > 0:
            run = run_chain(c, [EdgeCount(), Degree(0)], force=True, allow_local_well=True)
            for j, ob in enumerate((EdgeCount(), Degree(0))):
                col = run.values[:, j]
                m_ex, v_ex = exact_moments(dist, ob)
                m_se = batch_means_se(col)
                sq = (col - col.mean()) ** 2
                v_se = batch_means_se(sq)
                rows.append((n, ob.name, m_ex, v_ex, float(col.mean()), m_se, _z(col.mean(), m_ex, m_se),
                             float(col.var(ddof=1)), v_se, _z(col.var(ddof=1), v_ex, v_se)))
        sizes.append(info)
    if rows:
        out.csv("oracle.csv", "ergmclt.oracle-moments/1",
                ["n", "observable", "exact_mean", "exact_var", "sample_mean", "mean_se", "z_mean", "sample_var",
                 "var_se", "z_var"], rows)
    body = {"sizes": [{"n": s["n"], "log_partition": s["log_partition"], "edge_mean": s["edge_mean"]} for s in sizes],
            "max_abs_z": max((max(abs(r[6]), abs(r[9])) for r in rows), default=0.0)}
    out.json("oracle.json", body)
    return body


HANDLERS = {
    "phase": cmd_phase,
    "sample": cmd_sample,
    "clt": cmd_clt,
    "hajek": cmd_hajek,
    "couple": cmd_couple,
    "stein": cmd_stein,
    "oracle": cmd_oracle,
}


# ---------------------------------------------------------------------------
# argument parsing


def _int_list(text: str) -> list[int]:
    try:
        return [int(t) for t in text.split(",") if t.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from exc


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="TOML experiment file")
    common.add_argument("--seed", type=int, help="master seed (overrides the file)")
    common.add_argument("--out", help="output directory")
    common.add_argument("--workers", type=int, help="worker processes; 0 reads ERGMCLT_WORKERS")
    common.add_argument("--force-critical", action="store_true", default=None,
                        help="run even if the model is in the critical regime")
    common.add_argument("--allow-local-well", action="store_true", default=None,
                        help="allow a well around a non-global local maximizer")
    common.add_argument("--sizes", type=_int_list, help="comma-separated graph sizes")
    common.add_argument("--samples", type=int, help="retained samples per size")
    common.add_argument("--replicas", type=int, help="coupled replicas per size")
    common.add_argument("-p", "--p", dest="p", type=float, help="well centre (default: from the phase scan)")
    common.add_argument("--eta", type=float, help="well half-width in edge density")

    ap = argparse.ArgumentParser(prog="ergmclt", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)
    helps = {
        "phase": "stationary points, regime and variance proxies",
        "sample": "run Glauber chains and record observables",
        "clt": "distance of standardized edge count or degree to N(0,1)",
        "hajek": "variance of Hajek residuals across sizes",
        "couple": "monotone coupling contraction and local homogeneity",
        "stein": "Stein error terms for edge count or degree",
        "oracle": "exact enumeration at tiny n, compared with the sampler",
    }
    for name in COMMANDS:
        sub.add_parser(name, parents=[common], help=helps[name])
    return ap


def resolve_config(args) -> ExperimentConfig:
    return ExperimentConfig.from_file(
        args.config,
        seed=args.seed,
        out=args.out,
        workers=args.workers,
        force_critical=args.force_critical,
        allow_local_well=args.allow_local_well,
        **{
            "dynamics.sizes": args.sizes,
            "dynamics.samples": args.samples,
            "dynamics.replicas": args.replicas,
            "dynamics.p": args.p,
            "dynamics.eta": args.eta,
        },
    )


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = resolve_config(args)
        out = Output(cfg["out"])
        result = HANDLERS[args.command](cfg, out)
        out.manifest(args.command, cfg)
    except CriticalRegimeError as exc:
        print(f"refused: {exc}", file=sys.stderr)
        return EXIT_CRITICAL
    except (ErgmError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    print(json.dumps(result, indent=2, sort_keys=True, default=_jsonable))
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
