"""Experiment runner: simulate | qsd | learn | verify | sweep.

Every subcommand takes --config (TOML), optional --seed override,
--jobs for concurrent replications or sweep points, and --out for the
results root.  Exit codes: 0 success, 1 config error, 2 verification
failure, 3 numerical failure.
"""

from __future__ import annotations

import json
import sys
from dataclasses import replace
from pathlib import Path

import click
import numpy as np
from joblib import Parallel, delayed

from . import config as cfgmod
from .adversary import augment, save_chain_matrix
from .engine import (
    extinction_intervals,
    events_to_jsonl,
    replicate,
    run_decafork_baseline,
    run_dominated_single,
    run_with_learning,
    trace_to_csv,
)
from .errors import ConfigError, NumericalError, VerificationFailure
from .graph import metropolis_hastings, save_distribution, save_graph
from .learn import chain_loss_trace, optima_report, run_gossip_baseline
from .rng import substream_seed
from .spectral import qsd, total_variation
from .verify import (
    DriftConstants,
    check_boundedness,
    check_drift,
    check_iteration_rate,
    check_peak,
    peak_bound,
)


def common_options(fn):
    fn = click.option("--config", "config_path", required=True,
                      type=click.Path(), help="TOML experiment file")(fn)
    fn = click.option("--seed", type=int, default=None,
                      help="override the master simulation seed")(fn)
    fn = click.option("--jobs", type=int, default=1, show_default=True,
                      help="concurrent replications / sweep points")(fn)
    fn = click.option("--out", "out_dir", type=click.Path(), default=None,
                      help="results root (default: [output].directory or ./runs)")(fn)
    return fn


def _load(config_path: str, seed: int | None) -> dict:
    cfg = cfgmod.load_config(config_path)
    if seed is not None:
        cfg.setdefault("cil", {})["seed"] = int(seed)
        cfgmod.validate_config(cfg)
    return cfg


def _out_root(cfg: dict, out_dir: str | None) -> Path:
    base = out_dir or cfg.get("output", {}).get("directory", "runs")
    return cfgmod.output_dir(cfg, base)


def _write_json(path: Path, payload) -> None:
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")


@click.group()
def cli():
    """Random-walk self-creation protocol: simulation and verification."""


def _simulate_into(cfg: dict, dest: Path, jobs: int) -> dict:
    g = cfgmod.build_graph(cfg)
    P = metropolis_hastings(g)
    adv = cfgmod.build_adversary(cfg, g)
    cil = cfgmod.build_cil(cfg)
    n_rep = cfgmod.replications(cfg)

    baseline = cfg.get("baseline", {}).get("type")
    if baseline == "decafork":
        base_cfg = cfgmod.build_decafork(cfg)
        seeds = [substream_seed(base_cfg.seed, k) for k in range(n_rep)]
        traces = Parallel(n_jobs=jobs)(
            delayed(run_decafork_baseline)(g, P, adv, replace(base_cfg, seed=s))
            for s in seeds
        )
    elif baseline == "dominated":
        seeds = [substream_seed(cil.seed, k) for k in range(n_rep)]
        traces = Parallel(n_jobs=jobs)(
            delayed(run_dominated_single)(g, P, adv, replace(cil, seed=s))
            for s in seeds
        )
    else:
        traces = replicate(g, P, adv, cil, n_rep, n_jobs=jobs)

    save_graph(g, dest / "graph.txt")
    save_distribution(g.pi, dest / "pi.txt")
    hist: dict[int, int] = {}
    per_seed = []
    for k, tr in enumerate(traces):
        trace_to_csv(tr, dest / f"trace_{k}.csv")
        events_to_jsonl(tr, dest / f"events_{k}.jsonl")
        for a, b in extinction_intervals(tr):
            length = b - a + 1
            hist[length] = hist.get(length, 0) + 1
        per_seed.append(
            {
                "replication": k,
                "max_z": int(tr.z_series.max(initial=0)),
                "final_z": int(tr.z_series[-1]) if tr.horizon else 0,
                "extinction_intervals": len(extinction_intervals(tr)),
            }
        )
    if traces and traces[0].horizon:
        zmat = np.stack([tr.z_series for tr in traces]).astype(float)
        zbar = float(zmat.mean(axis=0).max())
    else:
        zbar = 0.0
    summary = {
        "config_hash": cfgmod.config_hash(cfg),
        "replications": n_rep,
        "peak_mean_population": zbar,
        "extinction_length_histogram": {str(k): v for k, v in sorted(hist.items())},
        "per_seed": per_seed,
    }
    _write_json(dest / "summary.json", summary)
    return summary


@cli.command()
@common_options
def simulate(config_path, seed, jobs, out_dir):
    """Run the protocol (or a configured baseline) and export traces."""
    cfg = _load(config_path, seed)
    dest = _out_root(cfg, out_dir)
    summary = _simulate_into(cfg, dest, jobs)
    click.echo(f"wrote {dest}")
    click.echo(f"peak mean population: {summary['peak_mean_population']:.2f}")
    click.echo(
        "extinction intervals by length: "
        + (json.dumps(summary["extinction_length_histogram"]) or "{}")
    )


@cli.command(name="qsd")
@common_options
def qsd_cmd(config_path, seed, jobs, out_dir):
    """Survival-conditioned occupancy: eigenvalue, distribution, gap."""
    cfg = _load(config_path, seed)
    g = cfgmod.build_graph(cfg)
    P = metropolis_hastings(g)
    adv = cfgmod.build_adversary(cfg, g)
    chain = augment(P, adv)
    res = qsd(chain)
    pi_r = g.pi[[u - 1 for u in chain.transient_states]]
    pi_r = pi_r / pi_r.sum()
    payload = {
        "alpha": res.alpha,
        "gamma_chain": res.spectral_gap,
        "nu": [float(v) for v in res.nu],
        "transient_states": list(chain.transient_states),
        "tv_to_pi_restricted": total_variation(res.nu, pi_r),
        "eigen_residual": res.residual,
    }
    dest = _out_root(cfg, out_dir)
    _write_json(dest / "qsd.json", payload)
    save_chain_matrix(chain, dest / "chain_matrix.txt")
    click.echo(json.dumps(payload, indent=2, sort_keys=True))


@cli.command(name="learn")
@common_options
def learn_cmd(config_path, seed, jobs, out_dir):
    """Chain SGD losses plus the optimum-shift report."""
    cfg = _load(config_path, seed)
    if "learn" not in cfg:
        raise ConfigError("learning run requested but no [learn] section present")
    g = cfgmod.build_graph(cfg)
    P = metropolis_hastings(g)
    adv = cfgmod.build_adversary(cfg, g)
    cil = cfgmod.build_cil(cfg)
    problem = cfgmod.build_problem(cfg, g)
    sgd = cfgmod.build_sgd(cfg)
    chain = augment(P, adv)
    res = qsd(chain)
    report = optima_report(problem, res, sgd)

    dest = _out_root(cfg, out_dir)
    n_rep = cfgmod.replications(cfg)
    seeds = [substream_seed(cil.seed, k) for k in range(n_rep)]
    traces = Parallel(n_jobs=jobs)(
        delayed(run_with_learning)(g, P, adv, replace(cil, seed=s), problem, sgd)
        for s in seeds
    )
    final_dist = []
    for k, tr in enumerate(traces):
        losses = chain_loss_trace(tr.chain_models, problem)
        chain_id = int(tr.chain_walks[0])
        lines = ["t,iter,loss,chain_id"]
        for t in range(tr.horizon):
            lines.append(f"{t},{tr.chain_iter[t]},{losses[t]!r},{chain_id}")
        (dest / f"loss_{k}.csv").write_text("\n".join(lines) + "\n")
        final_dist.append(
            float(np.linalg.norm(tr.chain_models[-1] - report.x_tilde_star))
        )
    payload = report.to_dict()
    payload["final_distance_to_surrogate"] = final_dist
    _write_json(dest / "optima.json", payload)

    if cfg.get("baseline", {}).get("type") == "gossip":
        steps = int(cfg["baseline"].get("steps", cil.horizon))
        gos = run_gossip_baseline(g, adv, problem, steps, sgd, cil.seed)
        lines = ["step,loss,consensus_error"]
        for k in range(steps):
            lines.append(f"{k},{gos['loss'][k]!r},{gos['consensus_error'][k]!r}")
        (dest / "gossip_loss.csv").write_text("\n".join(lines) + "\n")

    click.echo(f"wrote {dest}")
    click.echo(
        f"deviation {report.deviation:.6f} in "
        f"[{report.lower_bound:.6f}, {report.upper_bound:.6f}] "
        f"(loose upper {report.upper_bound_loose:.6f})"
    )
    click.echo(f"final distance to surrogate optimum per seed: {final_dist}")


@cli.command(name="verify")
@common_options
def verify_cmd(config_path, seed, jobs, out_dir):
    """Run the configured bound checks; nonzero exit on failure."""
    cfg = _load(config_path, seed)
    vc = cfg.get("verify", {})
    checks = vc.get("checks", ["boundedness"])
    g = cfgmod.build_graph(cfg)
    P = metropolis_hastings(g)
    adv = cfgmod.build_adversary(cfg, g)
    cil = cfgmod.build_cil(cfg)
    chain = augment(P, adv)
    n_rep = cfgmod.replications(cfg)
    traces = replicate(g, P, adv, cil, n_rep, n_jobs=jobs)

    n = g.node_count
    k = len(adv.pacman_nodes)
    zeta_min = min(adv.zetas())
    q = cil.creation_probability
    z0 = cil.initial_walk_count
    reports = []
    for name in checks:
        if name == "boundedness":
            env = None
            if g.topology_tag == "complete":
                env = peak_bound(n, q, zeta_min, z0, k)
            reports.append(
                check_boundedness(
                    traces, env, float(vc.get("envelope_factor", 10.0))
                )
            )
        elif name == "drift":
            consts = DriftConstants.from_chain(chain, float(vc.get("epsilon", 1.0)))
            reports.append(
                check_drift(traces, consts, int(vc.get("min_bin_count", 50)))
            )
        elif name == "peak":
            reports.extend(check_peak(traces, n, q, zeta_min, z0, k))
        elif name == "iteration_rate":
            a = np.asarray(cil.thresholds)
            if a.ndim != 0:
                raise ConfigError("iteration_rate check needs a uniform threshold")
            dom = run_dominated_single(g, P, adv, cil)
            tol = vc.get("rate_tolerance")
            reports.extend(
                check_iteration_rate(
                    traces,
                    dom,
                    n,
                    zeta_min,
                    int(a),
                    q,
                    rate_tolerance=None if tol is None else float(tol),
                    renewal_tolerance=float(vc.get("renewal_tolerance", 0.02)),
                )
            )
        else:
            raise ConfigError(f"unknown check {name!r}")

    dest = _out_root(cfg, out_dir)
    _write_json(dest / "reports.json", [r.to_dict() for r in reports])
    failed = [r for r in reports if not r.passed]
    for r in reports:
        status = "PASS" if r.passed else "FAIL"
        click.echo(
            f"{status} {r.name}: empirical {r.empirical:.6g} vs "
            f"theoretical {r.theoretical:.6g} (tol {r.tolerance:.3g})"
        )
    click.echo(f"wrote {dest}")
    if failed:
        raise VerificationFailure(
            f"{len(failed)} of {len(reports)} checks failed: "
            + ", ".join(r.name for r in failed)
        )


@cli.command(name="sweep")
@common_options
def sweep_cmd(config_path, seed, jobs, out_dir):
    """Expand the [sweep] section and simulate every point."""
    cfg = _load(config_path, seed)
    points = cfgmod.expand_sweep(cfg)
    dest = _out_root(cfg, out_dir)
    points_dir = dest / "points"
    points_dir.mkdir()

    def one(point):
        pdir = points_dir / point.label
        pdir.mkdir()
        summary = _simulate_into(point.config, pdir, jobs=1)
        return {
            "label": point.label,
            "overrides": point.overrides,
            "seed": point.seed,
            "peak_mean_population": summary["peak_mean_population"],
            "extinction_length_histogram": summary["extinction_length_histogram"],
        }

    merged = Parallel(n_jobs=jobs)(delayed(one)(p) for p in points)
    _write_json(dest / "summary.json", {"points": merged})
    click.echo(f"wrote {dest} ({len(points)} points)")
    for row in merged:
        click.echo(
            f"{row['label']} {row['overrides']}: "
            f"peak mean population {row['peak_mean_population']:.2f}"
        )


def main() -> None:
    try:
        cli(standalone_mode=False)
    except click.exceptions.Exit as exc:
        sys.exit(exc.exit_code)
    except click.exceptions.Abort:
        sys.exit(1)
    except click.UsageError as exc:
        click.echo(f"error: {exc.format_message()}", err=True)
        sys.exit(1)
    except click.ClickException as exc:
        exc.show()
        sys.exit(1)
    except ConfigError as exc:
        click.echo(f"config error: {exc}", err=True)
        sys.exit(1)
    except VerificationFailure as exc:
        click.echo(f"verification failure: {exc}", err=True)
        sys.exit(2)
    except NumericalError as exc:
        click.echo(f"numerical failure: {exc}", err=True)
        sys.exit(3)


if __name__ == "__main__":
    main()
