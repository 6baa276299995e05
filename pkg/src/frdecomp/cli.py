"""Command-line front end tying together the verification suites.

A single nested JSON config governs every subcommand; flags override file
values.  Every command prints one PASS/FAIL line per contract it checks,
names the module and operation with the measured value, writes machine-first
CSV artifacts into --out, and exits 0 iff every contract holds.  Artifacts
carry no timestamps, so a rerun with the same config is byte-identical.
"""

import copy
import json
import os
import sys

import click
import numpy as np

from . import fileio
from .mollifier import build_mollifier, normalization_constant
from .weights import (ContinuousWeightFamily, DiscreteWeightFamily,
                      approximation_rate, chebyshev_coefficients,
                      check_decomposition_identity, coefficient_csv,
                      decay_constants, default_lambda_grid,
                      eval_discrete_weight, eval_discrete_weight_direct,
                      wave_identity_max_residual)

DEFAULT_CONFIG = {
    "seed": 20240801,
    "mollifier": {"grid_step": 1e-3, "x_max": 100.0},
    "weights": {
        "gamma": 1.0,
        "lambda_grid": None,          # null -> 0.05 .. 4 - eps step 0.05
        "eps": 1.0,
        "t_min": 1e-3,
        "t_max": 1e3,
        "nodes_per_octave": 16,
        "coefficient_dump_t": 8.0,
    },
    "backend": {
        "kind": "graph",              # graph | torus
        "graph": "cycle",             # cycle | two_vertex | file
        "n": 16,
        "edges_file": None,
        "operator": "resolvent",      # laplacian | killed | resolvent
        "kappa": 0.9,
        "m2": 1.0,
        "d": 2,
        "N": 8,
        "a": None,                    # null -> identity matrix
        "lattice_m2": 0.5,
        "t_list": [2.0, 3.5],
        "decay_orders": [[0, 0]],     # (l_x, l_y) pairs fitted over t_list
    },
    "scales": {
        "j_min": None,                # null -> automatic plan
        "j_max": None,
        "L_ratio": 2.0,
        "nodes_per_block": 16,
        "target_tail_rel": 1e-7,
    },
    "sampler": {
        "sample_count": 10000,
        "z_bound": None,              # null -> extreme-value-aware bound
        "dump_replicates": 4,
        "deflate_zero_mode": False,
    },
    "tolerances": {
        "identity_discrete": 1e-5,
        "identity_continuous": 1e-6,
        "oracle_equivalence": 1e-9,
        "wave_identity": 1e-12,
        "approx_slope": -0.9,
        "range_rel": 1e-12,
        "psd_rel": 1e-10,
        "reconstruction_rel": 1e-5,
        "reconstruction_rel_massless": 1e-4,
    },
}


def deep_merge(base, override):
    out = copy.deepcopy(base)
    for key, val in override.items():
        if isinstance(val, dict) and isinstance(out.get(key), dict):
            out[key] = deep_merge(out[key], val)
        else:
            out[key] = copy.deepcopy(val)
    return out


class RunConfig:
    """Nested key-value configuration with lossless JSON round-trip."""

    def __init__(self, data=None):
        self.data = deep_merge(DEFAULT_CONFIG, data or {})

    @classmethod
    def from_file(cls, path):
        with open(path) as fh:
            return cls(json.load(fh))

    def to_file(self, path):
        fileio.write_json(path, self.data)

    def __getitem__(self, key):
        return self.data[key]


class CheckList:
    """Collect contract results; render PASS/FAIL lines and the exit code."""

    def __init__(self, tolerance_scale=1.0):
        self.scale = tolerance_scale
        self.rows = []

    def bound(self, name, measured, tolerance):
        tol = tolerance * self.scale
        ok = bool(measured <= tol)
        self.rows.append((name, measured, tol, ok))
        return ok

    def at_most(self, name, measured, threshold):
        """Unscaled one-sided contract (e.g. fitted slopes)."""
        ok = bool(measured <= threshold) and self.scale > 0.0
        self.rows.append((name, measured, threshold, ok))
        return ok

    def render(self):
        for name, measured, tol, ok in self.rows:
            status = "PASS" if ok else "FAIL"
            click.echo(f"{status} {name} measured={measured:.6g} tolerance={tol:.6g}")
        return all(ok for _, _, _, ok in self.rows)


def _components(config):
    mc = config["mollifier"]
    m = build_mollifier(grid_step=mc["grid_step"], x_max=mc["x_max"])
    norm = normalization_constant(m, gamma=config["weights"]["gamma"])
    return m, norm


def _graph_operator(config):
    from .graphs import GraphOperator, WeightedGraph, cycle_graph, two_vertex_graph
    b = config["backend"]
    if b["graph"] == "cycle":
        graph = cycle_graph(int(b["n"]))
    elif b["graph"] == "two_vertex":
        graph = two_vertex_graph()
    elif b["graph"] == "file":
        graph = WeightedGraph.from_edgelist_file(b["edges_file"])
    else:
        raise click.ClickException(f"unknown graph kind {b['graph']!r}")
    kind = b["operator"]
    return GraphOperator(graph, kind=kind, kappa=b.get("kappa"),
                         m2=b.get("m2") if kind == "resolvent" else None)


def _lattice_spec(config):
    from .lattice import LatticeSpec
    b = config["backend"]
    d = int(b["d"])
    a = np.array(b["a"], dtype=float) if b["a"] is not None else np.eye(d)
    return LatticeSpec(d=d, a=a, m2=float(b["lattice_m2"]), N=int(b["N"]))


def _scale_plan(config, op, family):
    from .graphs import default_scale_plan
    from .sampler import ScalePlan
    s = config["scales"]
    j_min, j_max = s["j_min"], s["j_max"]
    if j_min is None or j_max is None:
        auto_min, auto_max = default_scale_plan(
            op, family, s["L_ratio"], target_tail_rel=s["target_tail_rel"])
        j_min = auto_min if j_min is None else int(j_min)
        j_max = auto_max if j_max is None else int(j_max)
    return ScalePlan(j_min=int(j_min), j_max=int(j_max),
                     L_ratio=s["L_ratio"], nodes_per_block=int(s["nodes_per_block"]))


@click.group()
@click.option("--config", "config_path", type=click.Path(exists=True), default=None,
              help="JSON config file; flags override file values.")
@click.option("--out", "out_dir", type=click.Path(), default="frdecomp-out",
              help="Output directory for reports and artifacts.")
@click.option("--seed", type=int, default=None, help="64-bit RNG seed override.")
@click.option("--threads", type=int, default=None, help="Global thread cap.")
@click.option("--tolerance-scale", type=float, default=1.0,
              help="Multiply every bound-type tolerance (0 forces failure).")
@click.pass_context
def main(ctx, config_path, out_dir, seed, threads, tolerance_scale):
    """Finite-range decomposition toolkit: weights, kernels, blocks, fields."""
    config = RunConfig.from_file(config_path) if config_path else RunConfig()
    if seed is not None:
        config.data["seed"] = int(seed)
    os.makedirs(out_dir, exist_ok=True)
    if threads is not None:
        try:
            import threadpoolctl
            ctx.with_resource(threadpoolctl.threadpool_limits(limits=threads))
        except ImportError:
            click.echo(f"note: threadpoolctl unavailable, --threads {threads} ignored")
    ctx.obj = {"config": config, "out": out_dir,
               "checks": CheckList(tolerance_scale)}
    ctx.call_on_close(lambda: None)


def _finish(ctx, command=None):
    if command is not None:
        out = ctx.obj["out"]
        artifacts = [n for n in os.listdir(out) if n != "report_manifest.json"]
        fileio.write_manifest(out, command, artifacts)
    ok = ctx.obj["checks"].render()
    if not ok:
        failed = [name for name, _, _, okk in ctx.obj["checks"].rows if not okk]
        click.echo(f"FAILED contracts: {', '.join(failed)}")
        sys.exit(1)


@main.command()
@click.option("--lambda-grid", default=None,
              help="Comma-separated lambda values for the identity check.")
@click.pass_context
def weights(ctx, lambda_grid):
    """Run the weight-family identity/decay/approximation checks."""
    config, out, checks = ctx.obj["config"], ctx.obj["out"], ctx.obj["checks"]
    wc = config["weights"]
    tol = config["tolerances"]
    m, norm = _components(config)
    if lambda_grid is not None:
        lam = np.array([float(v) for v in lambda_grid.split(",")])
    elif wc["lambda_grid"] is not None:
        lam = np.array(wc["lambda_grid"], dtype=float)
    else:
        lam = default_lambda_grid(wc["eps"])

    disc = DiscreteWeightFamily(m, norm)
    rep = check_decomposition_identity(disc, lam, wc["t_min"], wc["t_max"],
                                       wc["nodes_per_octave"])
    checks.bound("spectral_weights.check_decomposition_identity[discrete]",
                 rep.max_certified_residual(), tol["identity_discrete"])
    if abs(norm.gamma - 1.0) < 1e-12:
        cont = ContinuousWeightFamily(m, norm)
        rep_c = check_decomposition_identity(cont, lam, wc["t_min"], wc["t_max"],
                                             wc["nodes_per_octave"])
        rep.w_cont = rep_c.w_cont
        checks.bound("spectral_weights.check_decomposition_identity[continuous]",
                     rep_c.max_certified_residual(), tol["identity_continuous"])
    rep.decay_constants = decay_constants(disc)
    rep.approx_rate_fit = approximation_rate(m, 1.0, normalization=norm)
    checks.at_most("spectral_weights.approximation_rate.slope",
                   rep.approx_rate_fit.slope, tol["approx_slope"])
    w = chebyshev_coefficients(m, 7.0)
    clen = eval_discrete_weight(w, 1.3)
    direct = eval_discrete_weight_direct(m, 1.3, 7.0)
    checks.bound("spectral_weights.eval_discrete_weight[oracle@(1.3,7)]",
                 abs(clen - direct) / abs(direct), tol["oracle_equivalence"] * 10)
    checks.bound("spectral_weights.wave_identity",
                 wave_identity_max_residual(32), tol["wave_identity"])

    rep.to_csv(os.path.join(out, "weights_identity.csv"))
    fileio.write_rows_csv(os.path.join(out, "decay_constants.csv"),
                          ["order_l", "sup"],
                          [(l, float(v)) for l, v in sorted(rep.decay_constants.items())])
    fit = rep.approx_rate_fit
    fileio.write_rows_csv(os.path.join(out, "approximation.csv"),
                          ["t", "abs_diff", "slope"],
                          [(float(t), float(d), fit.slope)
                           for t, d in zip(fit.t_list, fit.diffs)])
    coefficient_csv(chebyshev_coefficients(m, wc["coefficient_dump_t"]),
                    os.path.join(out, "coefficients.csv"))
    _finish(ctx, "weights")


@main.command()
@click.pass_context
def decompose(ctx):
    """Build kernels/blocks with certificates and a summary table."""
    config, out, checks = ctx.obj["config"], ctx.obj["out"], ctx.obj["checks"]
    tol = config["tolerances"]
    m, norm = _components(config)
    kind = config["backend"]["kind"]
    rows = []
    if kind == "graph":
        from .graphs import scale_block
        op = _graph_operator(config)
        family = DiscreteWeightFamily(m, norm, B=op.B)
        plan = _scale_plan(config, op, family)
        for j in range(plan.j_min, plan.j_max + 1):
            blk = scale_block(op, family, j, plan.L_ratio, plan.nodes_per_block)
            c = blk.certificates
            sup = float(np.max(np.abs(blk.matrix)))
            rows.append((j, c.range_bound, c.min_eig, sup))
            checks.bound(f"graph_decomposition.scale_block[j={j}].range",
                         c.max_out_of_range / max(sup, 1e-300), tol["range_rel"])
            checks.bound(f"graph_decomposition.scale_block[j={j}].psd",
                         max(0.0, -c.min_eig) / max(c.max_eig, 1e-300),
                         tol["psd_rel"])
            fileio.write_block(os.path.join(out, f"block_j{j:+03d}"), blk,
                               extra={"B": op.B, "kind": op.kind})
        fileio.write_rows_csv(os.path.join(out, "decompose_summary.csv"),
                              ["j", "range_bound", "min_eig", "sup_norm"],
                              [(j, r, float(e), float(s)) for j, r, e, s in rows])
    elif kind == "torus":
        from .lattice import build_symbol_table, lattice_kernel
        spec = _lattice_spec(config)
        table = build_symbol_table(spec)
        family = DiscreteWeightFamily(m, norm, B=table.B)
        for t in config["backend"]["t_list"]:
            ker = lattice_kernel(spec, table, family, float(t))
            rows.append((float(t), ker.range_bound, ker.multiplier_min, ker.sup))
            checks.bound(f"lattice_kernels.lattice_kernel[t={t}].range",
                         ker.max_out_of_range / max(ker.sup, 1e-300),
                         tol["range_rel"])
            checks.bound(f"lattice_kernels.lattice_kernel[t={t}].psd_multiplier",
                         max(0.0, -ker.multiplier_min) / max(ker.multiplier_max, 1e-300),
                         tol["range_rel"])
            base = os.path.join(out, f"kernel_t{t}")
            fileio.write_kernel_binary(f"{base}.bin",
                                       [spec.d, spec.N, t, spec.m2, table.B],
                                       ker.values)
            fileio.write_kernel_csv(f"{base}.csv", ker.values)
        fileio.write_rows_csv(os.path.join(out, "decompose_summary.csv"),
                              ["t", "range_bound", "multiplier_min", "sup_norm"],
                              rows)
        t_list = [float(t) for t in config["backend"]["t_list"]]
        if len(t_list) >= 2 and config["backend"]["decay_orders"]:
            from .lattice import decay_fit
            decay_rows = []
            for l_x, l_y in config["backend"]["decay_orders"]:
                fit = decay_fit(spec, family, t_list, l_x=int(l_x), l_y=int(l_y),
                                table=table)
                decay_rows += [(float(t), int(l_x), int(l_y), float(v), fit.slope)
                               for t, v in zip(fit.t_list, fit.max_abs)]
            fileio.write_rows_csv(os.path.join(out, "decay_fit.csv"),
                                  ["t", "l_x", "l_y", "max_abs", "fitted_exponent"],
                                  decay_rows)
    else:
        raise click.ClickException(f"unknown backend kind {kind!r}")
    _finish(ctx, "decompose")


@main.command()
@click.pass_context
def reconstruct(ctx):
    """Reconstruct the Green's function from scale blocks vs the dense oracle."""
    config, out, checks = ctx.obj["config"], ctx.obj["out"], ctx.obj["checks"]
    tol = config["tolerances"]
    m, norm = _components(config)
    kind = config["backend"]["kind"]
    if kind == "graph":
        from .graphs import reconstruct_green
        op = _graph_operator(config)
        family = DiscreteWeightFamily(m, norm, B=op.B)
        plan = _scale_plan(config, op, family)
        rec = reconstruct_green(op, family, plan.j_min, plan.j_max,
                                plan.L_ratio, plan.nodes_per_block)
        bound = tol["reconstruction_rel_massless"] if rec.deflated \
            else tol["reconstruction_rel"]
        checks.bound("graph_decomposition.reconstruct_green.max_rel_error",
                     rec.max_rel_error, bound)
        report = {"j_min": rec.j_min, "j_max": rec.j_max,
                  "max_rel_error": rec.max_rel_error,
                  "tail_high_bound": rec.tail_high_bound,
                  "deflated": rec.deflated}
    else:
        from .lattice import build_symbol_table, reconstruct_torus_green
        spec = _lattice_spec(config)
        table = build_symbol_table(spec)
        family = DiscreteWeightFamily(m, norm, B=table.B)
        rec = reconstruct_torus_green(spec, family, table=table,
                                      target_tail_rel=config["scales"]["target_tail_rel"])
        bound = tol["reconstruction_rel_massless"] if rec.deflated \
            else tol["reconstruction_rel"]
        checks.bound("lattice_kernels.reconstruct_torus_green.max_rel_error",
                     rec.max_rel_error, bound)
        report = {"t_max": rec.t_max, "max_rel_error": rec.max_rel_error,
                  "tail_bound": rec.tail_bound, "deflated": rec.deflated}
    report["format_version"] = fileio.FORMAT_VERSION
    fileio.write_json(os.path.join(out, "reconstruction.json"), report)
    _finish(ctx, "reconstruct")


@main.command()
@click.pass_context
def sample(ctx):
    """Draw multiscale field replicates and verify covariance statistically."""
    config, out, checks = ctx.obj["config"], ctx.obj["out"], ctx.obj["checks"]
    m, norm = _components(config)
    sc = config["sampler"]
    kind = config["backend"]["kind"]
    seed = int(config["seed"])
    from .sampler import SamplerConfig, covariance_report, sample_graph, sample_torus
    if kind == "graph":
        op = _graph_operator(config)
        family = DiscreteWeightFamily(m, norm, B=op.B)
        plan = _scale_plan(config, op, family)
        cfg = SamplerConfig(backend="graph", plan=plan, seed=seed,
                            sample_count=int(sc["sample_count"]), operator=op,
                            deflate_zero_mode=bool(sc["deflate_zero_mode"])
                            or op.is_singular)
        samples = sample_graph(cfg, family)
        if op.is_singular:
            from .graphs import reconstruct_green
            oracle = reconstruct_green(op, family, plan.j_min, plan.j_max,
                                       plan.L_ratio, plan.nodes_per_block).oracle
        else:
            oracle = np.linalg.solve(op.dense(), np.eye(op.n))
    else:
        from .lattice import build_symbol_table, dense_operator, plan_t_max
        from .sampler import ScalePlan
        spec = _lattice_spec(config)
        table = build_symbol_table(spec)
        family = DiscreteWeightFamily(m, norm, B=table.B)
        s = config["scales"]
        j_max = s["j_max"]
        if j_max is None:
            lam_min = float(np.min(table.values[table.values > 1e-12]))
            t_max = plan_t_max(family, lam_min, s["target_tail_rel"])
            j_max = int(np.ceil(np.log(t_max) / np.log(s["L_ratio"])))
        plan = ScalePlan(j_min=int(s["j_min"]) if s["j_min"] is not None else 0,
                         j_max=int(j_max), L_ratio=s["L_ratio"],
                         nodes_per_block=int(s["nodes_per_block"]))
        cfg = SamplerConfig(backend="torus", plan=plan, seed=seed,
                            sample_count=int(sc["sample_count"]), lattice=spec,
                            deflate_zero_mode=bool(sc["deflate_zero_mode"])
                            or spec.m2 <= 0.0)
        samples = sample_torus(cfg, family, table=table)
        oracle = np.linalg.solve(dense_operator(spec), np.eye(spec.size))
        if spec.m2 <= 0.0:
            raise click.ClickException("massless torus sampling needs m2 > 0 oracle")
    rep = covariance_report(samples, oracle, min_samples=min(1000, sc["sample_count"]))
    z_bound = sc["z_bound"]
    if z_bound is None:
        # expected maximum of m half-normal scores is ~ sqrt(2 ln 2m); a
        # fixed threshold would false-alarm on large covariance matrices
        entries = rep.oracle.shape[0] * (rep.oracle.shape[0] + 1) / 2
        z_bound = float(np.sqrt(2.0 * np.log(2.0 * entries)) + 1.0)
    checks.bound("gff_sampler.covariance_report.max_abs_z", rep.max_abs_z,
                 float(z_bound))
    fileio.write_samples(os.path.join(out, "samples.bin"), samples, kind,
                         plan.j_min, plan.j_max,
                         max_replicates=int(sc["dump_replicates"]))
    n = rep.oracle.shape[0]
    rows = [(x, y, float(rep.empirical[x, y]), float(rep.oracle[x, y]),
             float(rep.z_scores[x, y]))
            for x in range(n) for y in range(x, n)]
    fileio.write_rows_csv(os.path.join(out, "covariance_report.csv"),
                          ["x", "y", "empirical", "oracle", "z"], rows)
    _finish(ctx, "sample")


if __name__ == "__main__":
    main()
