"""Command-line entry point.

    shearlab <command> --config run.json [--out DIR] [--seed N] [--threads K]

Commands: find-cycle, normal-form, shear, singular-limit,
misiurewicz-search, lyapunov, sweep, validate.  Every command writes its
CSV/JSON artifacts plus a machine-readable ``<command>_summary.json`` into
the output directory and is deterministic for a fixed seed.  Exit codes:
0 ok, 1 pipeline failure, 2 configuration error (structured JSON error on
stderr either way).
"""

import json
import os
import sys

import click
import numpy as np

from . import misiurewicz as mz
from .attractor import lyapunov_spectrum, sweep_T
from .config import ConfigError, RunConfig
from .cycles import find_limit_cycle, monodromy
from .normal_form import build_frame, compute_normal_form, compute_phi
from .singular_limit import SingularLimitMap


def _fail(kind, message, code):
    sys.stderr.write(json.dumps({"error": kind, "message": message}) + "\n")
    sys.exit(code)


def _write_summary(out_dir, command, payload):
    os.makedirs(out_dir, exist_ok=True)
    path = os.path.join(out_dir, "%s_summary.json" % command)
    payload = dict(payload)
    payload["command"] = command
    payload["artifacts"] = sorted(payload.get("artifacts", []))
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=1, sort_keys=True)
        fh.write("\n")
    click.echo(path)
    return path


def _gnuplot(out_dir, name, title, lines):
    path = os.path.join(out_dir, name)
    with open(path, "w") as fh:
        fh.write('set datafile separator ","\nset key autotitle columnhead\n')
        fh.write('set title "%s"\n' % title)
        fh.write("\n".join(lines) + "\n")
    return os.path.basename(path)


def _pipeline(cfg, seed, need=("cycle",)):
    prog = cfg.program()
    out = {}
    c = cfg.section("cycle")
    cycle = find_limit_cycle(
        prog, c.get("guess", [1.3, 0.0]),
        n_nodes=int(c.get("nodes", 1024)),
        settle_time=float(c.get("settle_time", 60.0)),
        anchor=c.get("anchor"),
    )
    out["prog"], out["cycle"] = prog, cycle
    if any(k in need for k in ("nf", "phi", "map")):
        p = cfg.section("pipeline")
        frame = build_frame(cycle, p.get("frame_method", "parallel_transport"),
                            prog=prog)
        nf = compute_normal_form(prog, cycle, frame)
        out["frame"], out["nf"] = frame, nf
        if any(k in need for k in ("phi", "map")):
            rho = p.get("rho")
            if rho is None:
                rho = cfg.raw.get("schedule", {}).get("rho", 1.0)
            ph = compute_phi(prog, cycle, nf, rho=float(rho))
            out["phi"] = ph
            if "map" in need:
                Lam = p.get("Lambda")
                if Lam is None:
                    eps = cfg.raw.get("schedule", {}).get("epsilon")
                    if eps is None:
                        raise ConfigError(
                            "pipeline.Lambda or schedule.epsilon required")
                    Lam = nf.hyperbolicity_flow(float(eps))
                out["map"] = SingularLimitMap.from_normal_form(nf, ph, float(Lam))
    return out


@click.group()
def main():
    pass


def _common(fn):
    fn = click.option("--config", "config_path", required=True,
                      type=click.Path(), help="run configuration JSON")(fn)
    fn = click.option("--out", "out_dir", default=None,
                      help="output directory (default from config)")(fn)
    fn = click.option("--seed", default=1234, type=int)(fn)
    fn = click.option("--threads", default=None, type=int,
                      help="worker threads (default SHEARLAB_THREADS or 1)")(fn)
    return fn


def _run(command, config_path, out_dir, seed, threads, body):
    try:
        cfg = RunConfig.load(config_path)
    except ConfigError as e:
        _fail("config", str(e), 2)
    out = out_dir or cfg.output
    if threads is None:
        threads = int(os.environ.get("SHEARLAB_THREADS", "1"))
    try:
        payload = body(cfg, out, seed, threads)
    except ConfigError as e:
        _fail("config", str(e), 2)
    except Exception as e:  # pipeline failure -> exit 1, structured error
        _fail(type(e).__name__, str(e), 1)
    _write_summary(out, command, payload)


@main.command("find-cycle")
@_common
def cmd_find_cycle(config_path, out_dir, seed, threads):
    """Locate the limit cycle and its Floquet multipliers."""
    def body(cfg, out, seed, threads):
        os.makedirs(out, exist_ok=True)
        art = _pipeline(cfg, seed, need=("cycle",))
        prog, cycle = art["prog"], art["cycle"]
        mon = monodromy(prog, cycle)
        prefix = os.path.join(out, "cycle")
        cycle.to_files(prefix, multipliers=mon.multipliers)
        return {
            "p0": cycle.p0, "L": cycle.L, "closure_gap": cycle.closure_gap,
            "multipliers_abs": [float(abs(m)) for m in mon.multipliers],
            "stable": mon.stable,
            "artifacts": ["cycle.csv", "cycle.json"],
        }
    _run("find-cycle", config_path, out_dir, seed, threads, body)


@main.command("normal-form")
@_common
def cmd_normal_form(config_path, out_dir, seed, threads):
    """Moving-frame normal form: b0, b1, Floquet pair, shear integral."""
    def body(cfg, out, seed, threads):
        os.makedirs(out, exist_ok=True)
        art = _pipeline(cfg, seed, need=("nf",))
        nf = art["nf"]
        nf.to_files(os.path.join(out, "normal_form"))
        return {
            "A": list(map(float, nf.A)), "Sigma": list(map(float, nf.Sigma)),
            "sigma": nf.sigma, "mu": list(map(float, nf.mu)),
            "d": list(map(float, nf.d)),
            "floquet_residual": nf.floquet_residual,
            "artifacts": ["normal_form.csv", "normal_form.json"],
        }
    _run("normal-form", config_path, out_dir, seed, threads, body)


@main.command("shear")
@_common
def cmd_shear(config_path, out_dir, seed, threads):
    """Shear summary: Sigma, sigma, lambda1, hyperbolicity, Morse report."""
    def body(cfg, out, seed, threads):
        os.makedirs(out, exist_ok=True)
        art = _pipeline(cfg, seed, need=("phi",))
        nf, ph = art["nf"], art["phi"]
        ph.to_files(os.path.join(out, "phi"))
        eps = cfg.raw.get("schedule", {}).get("epsilon", 0.0)
        arts = ["phi.csv", "phi.json",
                _gnuplot(out, "phi.gp", "pulse response",
                         ['plot "phi.csv" using 1:2 with lines'])]
        return {
            "Sigma": list(map(float, nf.Sigma)), "sigma": nf.sigma,
            "lambda1": nf.lambda1, "mu": list(map(float, nf.mu)),
            "d": list(map(float, nf.d)),
            "Lambda": nf.hyperbolicity(eps) if eps else None,
            "Lambda_flow": nf.hyperbolicity_flow(eps) if eps else None,
            "morse": {
                "is_morse": ph.is_morse, "degenerate": ph.degenerate,
                "critical_points": [[float(s), float(c)]
                                    for s, c in ph.critical_points],
                "constants": vars(ph.morse),
            },
            "artifacts": arts,
        }
    _run("shear", config_path, out_dir, seed, threads, body)


@main.command("singular-limit")
@_common
def cmd_singular_limit(config_path, out_dir, seed, threads):
    """Construct and export the singular-limit circle maps."""
    def body(cfg, out, seed, threads):
        os.makedirs(out, exist_ok=True)
        art = _pipeline(cfg, seed, need=("map",))
        sl = art["map"]
        p = cfg.section("pipeline")
        a_values = p.get("a_values", [0.0])
        arts = []
        for a in a_values:
            name = "map_a%.6f.csv" % a
            sl.export_csv(os.path.join(out, name), float(a),
                          n=int(p.get("grid", 1000)))
            arts.append(name)
        crit = sl.critical_points()
        arts.append(_gnuplot(out, "map.gp", "singular-limit family",
                             ['plot "%s" using 1:2 with lines' % arts[0]]))
        return {
            "Lambda": sl.Lambda, "two_L": sl.two_L, "rho": sl.rho,
            "q0": len(crit), "critical_points": list(map(float, crit)),
            "fitted_constants": sl.fitted_constants(),
            "artifacts": arts,
        }
    _run("singular-limit", config_path, out_dir, seed, threads, body)


@main.command("misiurewicz-search")
@_common
def cmd_misiurewicz(config_path, out_dir, seed, threads):
    """Search and certify a Misiurewicz parameter of the map family."""
    def body(cfg, out, seed, threads):
        os.makedirs(out, exist_ok=True)
        art = _pipeline(cfg, seed, need=("map",))
        sl = art["map"]
        p = cfg.section("pipeline")
        n_target = int(p.get("N_target", 40))
        a_star, trace = mz.search_admissible_parameter(sl, N_target=n_target,
                                                       seed=seed)
        report = mz.certify(sl, a_star=a_star, N_target=n_target,
                            horizon=int(p.get("horizon", 40)))
        trace.trace_csv(os.path.join(out, "search_trace.csv"))
        with open(os.path.join(out, "misiurewicz_report.json"), "w") as fh:
            json.dump(report.to_json_dict(), fh, indent=1, sort_keys=True)
            fh.write("\n")
        payload = report.to_json_dict()
        payload["artifacts"] = ["search_trace.csv", "misiurewicz_report.json"]
        return payload
    _run("misiurewicz-search", config_path, out_dir, seed, threads, body)


@main.command("lyapunov")
@_common
def cmd_lyapunov(config_path, out_dir, seed, threads):
    """Lyapunov spectrum of the time-T map from one orbit."""
    def body(cfg, out, seed, threads):
        os.makedirs(out, exist_ok=True)
        art = _pipeline(cfg, seed, need=("cycle",))
        prog, cycle = art["prog"], art["cycle"]
        sched = cfg.schedule()
        ly_cfg = cfg.section("lyapunov")
        rng = np.random.default_rng(seed)
        x0 = ly_cfg.get("x0") or list(cycle.gamma(rng.uniform(0, cycle.L)))
        res = lyapunov_spectrum(prog, sched, np.asarray(x0, dtype=float),
                                iterates=int(ly_cfg.get("iterates", 400)),
                                burn_in=int(ly_cfg.get("burn_in", 50)),
                                config=cfg.integrator(), seed=seed)
        return {
            "T": sched.T,
            "exponents_per_map": list(map(float, res.exponents)),
            "exponents_per_time": [float(e / sched.T) for e in res.exponents],
            "ci_halfwidth": res.ci_halfwidth,
            "sum_rule_gap": res.sum_rule_gap,
            "iterates": res.iterates,
            "artifacts": [],
        }
    _run("lyapunov", config_path, out_dir, seed, threads, body)


@main.command("sweep")
@_common
def cmd_sweep(config_path, out_dir, seed, threads):
    """Classify attractors over a grid of forcing periods T."""
    def body(cfg, out, seed, threads):
        os.makedirs(out, exist_ok=True)
        art = _pipeline(cfg, seed, need=("cycle",))
        prog, cycle = art["prog"], art["cycle"]
        sw = cfg.section("sweep")
        if not sw:
            raise ConfigError("sweep section missing")
        T_values = np.linspace(sw["T_min"], sw["T_max"], int(sw.get("points", 101)))
        sched = cfg.schedule(T=float(T_values[0]))
        res = sweep_T(prog, sched, T_values, cycle=cycle,
                      config=cfg.integrator(),
                      iterates=int(sw.get("iterates", 300)),
                      burn_in=int(sw.get("burn_in", 50)),
                      seed=seed, threads=threads)
        res.to_csv(os.path.join(out, "sweep.csv"))
        arts = ["sweep.csv",
                _gnuplot(out, "sweep.gp", "top exponent over T",
                         ['plot "sweep.csv" using 1:3 with points'])]
        fracs = res.window_fractions()
        return {
            "points": len(T_values),
            "chaotic_fraction": float(np.mean([k == "chaotic"
                                               for k in res.kinds])),
            "window_fractions": [[float(w), float(f)] for w, f in fracs],
            "kinds_count": {k: res.kinds.count(k) for k in set(res.kinds)},
            "artifacts": arts,
        }
    _run("sweep", config_path, out_dir, seed, threads, body)


@main.command("validate")
@click.option("--out", "out_dir", default="runs/validate")
@click.option("--seed", default=1234, type=int)
@click.option("--fast/--full", default=False,
              help="--fast trims the simulation-heavy criteria")
def cmd_validate(out_dir, seed, fast):
    """Run the benchmark-system acceptance suite (one line per criterion)."""
    from .acceptance import run_all

    os.makedirs(out_dir, exist_ok=True)
    results = run_all(fast=fast, seed=seed)
    all_ok = True
    payload = {"criteria": {}, "artifacts": []}
    for r in results:
        status = "PASS" if r.passed else "FAIL"
        click.echo("[%s] %-42s (%.1fs)" % (status, r.name, r.elapsed))
        payload["criteria"][r.name] = {"passed": r.passed, **r.details}
        all_ok &= r.passed
    path = os.path.join(out_dir, "validate_summary.json")
    payload["passed"] = all_ok
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=1, sort_keys=True, default=float)
        fh.write("\n")
    click.echo(path)
    if not all_ok:
        sys.exit(1)


if __name__ == "__main__":
    main()
