"""Command-line front end: run, check, diagnose, sweep.

Exit codes: 0 success, 1 validation or usage error, 2 aborted simulation.
All CSV output uses 17 significant digits so identical scenarios produce
byte-identical files.
"""

import argparse
import concurrent.futures
import copy
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import controller as ctl
from . import graph as gr
from . import scenario_io as sio
from . import sim

THREADS_ENV = "CONSENSUS_LAB_THREADS"
P1_RESIDUAL_TOL = 1e-10

FIG_FILES = ("fig_positions.csv", "fig_velocities.csv", "fig_pos_error.csv",
             "fig_vel_error.csv", "fig_controls.csv")


def _fmt(x: float) -> str:
    return f"{float(x):.17g}"


def trace_columns(n_agents: int, order: int) -> list[str]:
    """The documented trace.csv header, in order."""
    cols = ["t"]
    for i in range(1, n_agents + 1):
        cols += [f"x{k}_{i}" for k in range(1, order + 1)]
    cols += [f"x{k}_0" for k in range(1, order + 1)]
    cols += [f"u_{i}" for i in range(1, n_agents + 1)]
    for i in range(1, n_agents + 1):
        cols += [f"e{k}_{i}" for k in range(1, order + 1)]
    cols += [f"r_{i}" for i in range(1, n_agents + 1)]
    for i in range(1, n_agents + 1):
        cols += [f"E{k}_{i}" for k in range(1, order + 1)]
    for i in range(1, n_agents + 1):
        cols += [f"thf_norm_{i}", f"thw_norm_{i}", f"thl_norm_{i}"]
    cols += ["min_pair_distance", "min_obstacle_distance"]
    return cols


def write_trace_csv(trace: sim.Trace, path: Path) -> None:
    n_agents, order = trace.n_agents, trace.order
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(",".join(trace_columns(n_agents, order)) + "\n")
        for row in range(trace.times.size):
            vals = [trace.times[row]]
            vals += list(trace.agents[row].ravel())
            vals += list(trace.leader[row])
            vals += list(trace.controls[row])
            vals += list(trace.errors[row].ravel())
            vals += list(trace.r[row])
            vals += list(trace.rel_errors[row].ravel())
            vals += list(trace.weight_norms[row].ravel())
            vals += [trace.min_pair_distance[row], trace.min_obstacle_distance[row]]
            fh.write(",".join(_fmt(v) for v in vals) + "\n")


def _write_series_csv(path: Path, header: list[str], times: np.ndarray, columns: np.ndarray) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(",".join(header) + "\n")
        for row in range(times.size):
            vals = [times[row]] + list(columns[row])
            fh.write(",".join(_fmt(v) for v in vals) + "\n")


def write_figure_data(trace: sim.Trace, out_dir: Path) -> None:
    """Per-figure plot data: positions, velocities, errors, controls."""
    n_agents = trace.n_agents
    agent_ids = [str(i) for i in range(1, n_agents + 1)]
    t = trace.times
    positions = np.concatenate([trace.leader[:, :1], trace.agents[:, :, 0]], axis=1)
    _write_series_csv(out_dir / "fig_positions.csv",
                      ["t", "x1_0"] + [f"x1_{i}" for i in agent_ids], t, positions)
    _write_series_csv(out_dir / "fig_velocities.csv",
                      ["t"] + [f"x2_{i}" for i in agent_ids], t, trace.agents[:, :, 1])
    _write_series_csv(out_dir / "fig_pos_error.csv",
                      ["t"] + [f"E1_{i}" for i in agent_ids], t, trace.rel_errors[:, :, 0])
    _write_series_csv(out_dir / "fig_vel_error.csv",
                      ["t"] + [f"E2_{i}" for i in agent_ids], t, trace.rel_errors[:, :, 1])
    _write_series_csv(out_dir / "fig_controls.csv",
                      ["t"] + [f"u_{i}" for i in agent_ids], t, trace.controls)


def cmd_run(args) -> int:
    try:
        scenario, _doc = sio.load_scenario(args.scenario)
        overrides = {}
        if args.dt is not None:
            overrides["dt"] = args.dt
        if args.duration is not None:
            overrides["duration"] = args.duration
        if args.seed is not None:
            overrides["seed"] = args.seed
        if overrides:
            import dataclasses
            scenario = dataclasses.replace(scenario, **overrides)
        sim.validate_scenario(scenario)
    except (sio.ScenarioError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1

    trace = sim.run(scenario)
    try:
        out_dir = Path(args.out)
        out_dir.mkdir(parents=True, exist_ok=True)
        write_trace_csv(trace, out_dir / "trace.csv")
        write_figure_data(trace, out_dir)
        if trace.aborted is None:
            summary = sim.metrics(trace)
            summary["aborted"] = None
        else:
            summary = {"aborted": trace.aborted, "records": int(trace.times.size)}
        with open(out_dir / "summary.json", "w", encoding="utf-8") as fh:
            json.dump(summary, fh, indent=2, sort_keys=True)
            fh.write("\n")
    except OSError as exc:
        print(f"error: cannot write outputs: {exc}", file=sys.stderr)
        return 1
    if trace.aborted is not None:
        print(f"simulation aborted: {trace.aborted}", file=sys.stderr)
        return 2
    print(f"wrote {out_dir / 'trace.csv'} ({trace.times.size} records)")
    return 0


def cmd_check(args) -> int:
    try:
        scenario, _doc = sio.load_scenario(args.scenario)
    except sio.ScenarioError as exc:
        print(f"FAIL load: {exc}", file=sys.stderr)
        return 1

    topo = scenario.topology
    gains = scenario.gains
    checks = []

    tree_ok = gr.has_leader_spanning_tree(topo)
    checks.append(("leader spanning tree", tree_ok, ""))

    pounds = gr.pinned_laplacian(topo)
    cond = float(np.linalg.cond(pounds))
    checks.append(("pinned laplacian conditioning", bool(np.isfinite(cond)),
                   f"cond = {cond:.6g}"))

    try:
        lyap = gr.graph_lyapunov(topo)
        detail = (f"q in [{lyap.q.min():.6g}, {lyap.q.max():.6g}], "
                  f"P in [{lyap.p_diag.min():.6g}, {lyap.p_diag.max():.6g}], "
                  f"min eig Q = {lyap.min_eig_q:.6g}")
        checks.append(("graph Lyapunov certificate", True, detail))
    except (gr.SingularPinnedLaplacian, gr.NonPositiveQ) as exc:
        checks.append(("graph Lyapunov certificate", False, str(exc)))

    checks.append(("Hurwitz lambda_bar", ctl.check_hurwitz(gains.lambda_bar),
                   f"lambda_bar = {np.array2string(gains.lambda_bar)}"))

    try:
        p1 = ctl.lyapunov_P1(gains.lambda_bar, gains.alpha_bar)
        delta = ctl.companion(gains.lambda_bar)
        residual = float(np.linalg.norm(
            delta.T @ p1 + p1 @ delta + gains.alpha_bar * np.eye(delta.shape[0]), "fro"))
        checks.append(("companion Lyapunov solve", residual <= P1_RESIDUAL_TOL,
                       f"residual = {residual:.3e}"))
    except ctl.NotHurwitz as exc:
        checks.append(("companion Lyapunov solve", False, str(exc)))

    failed = None
    for name, ok, detail in checks:
        line = f"{name}: {'PASS' if ok else 'FAIL'}"
        if detail:
            line += f" ({detail})"
        print(line)
        if not ok and failed is None:
            failed = name
    if failed is not None:
        print(f"FAILED: {failed}", file=sys.stderr)
        return 1
    return 0


def cmd_diagnose(args) -> int:
    try:
        scenario, doc = sio.load_scenario(args.scenario)
        if args.bounds is not None:
            bounds_doc = sio.load_document(args.bounds)
        elif "bounds" in doc:
            bounds_doc = doc["bounds"]
        else:
            print("error: no bounds file given and the scenario embeds none", file=sys.stderr)
            return 1
        bounds = sio.parse_bounds(bounds_doc, scenario)
        lyap = gr.graph_lyapunov(scenario.topology)
    except (sio.ScenarioError, gr.SingularPinnedLaplacian, gr.NonPositiveQ) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1

    report = sim.cuub_diagnostics(bounds, scenario.topology, lyap, scenario.gains)
    for idx, (minor, ok) in enumerate(zip(report.minors, report.minors_pass), start=1):
        print(f"minor {idx}: {minor:.12g} ({'PASS' if ok else 'FAIL'})")
    print(f"mu1 = {report.mu1:.12g} (required > {report.mu1_required:.12g})")
    print(f"omega = {np.array2string(report.omega, precision=6)}")
    print(f"omega_l1 = {report.omega_l1:.12g}")
    print(f"sigma_min(K) = {report.sigma_min_k:.12g}")
    print(f"B_d = {report.b_d:.12g}")
    if args.json is not None:
        payload = {
            "k_matrix": report.k_matrix.tolist(),
            "minors": report.minors.tolist(),
            "minors_pass": list(report.minors_pass),
            "positive_definite": report.positive_definite,
            "first_failing_minor": report.first_failing_minor,
            "mu1": report.mu1,
            "mu1_required": report.mu1_required,
            "omega": report.omega.tolist(),
            "omega_l1": report.omega_l1,
            "sigma_min_k": report.sigma_min_k,
            "b_d": report.b_d,
            "graph_quantities": report.graph_quantities,
            "failure": report.failure,
        }
        with open(args.json, "w", encoding="utf-8") as fh:
            json.dump(payload, fh, indent=2, sort_keys=True)
            fh.write("\n")
    if not report.positive_definite:
        print(report.failure, file=sys.stderr)
        return 1
    print("K is positive definite")
    return 0


def _set_doc_field(doc: dict, dotted: str, value: float) -> bool:
    parts = dotted.split(".")
    node = doc
    for part in parts[:-1]:
        if not isinstance(node, dict) or part not in node:
            return False
        node = node[part]
    if not isinstance(node, dict) or parts[-1] not in node:
        return False
    if not isinstance(node[parts[-1]], (int, float)) or isinstance(node[parts[-1]], bool):
        return False
    node[parts[-1]] = value
    return True


def _resolve_param(doc: dict, name: str) -> str:
    """Resolve a bare parameter name to a dotted path in known sections."""
    if "." in name:
        return name
    hits = []
    for section in ("gains", "nn", "sim", "topology"):
        sub = doc.get(section)
        if isinstance(sub, dict) and name in sub and isinstance(sub[name], (int, float)) \
                and not isinstance(sub[name], bool):
            hits.append(f"{section}.{name}")
    if len(hits) == 1:
        return hits[0]
    if not hits:
        raise sio.ScenarioError(name, "unknown scenario field")
    raise sio.ScenarioError(name, f"ambiguous field; use one of {', '.join(hits)}")


def _sweep_one(doc_json: str) -> tuple:
    doc = json.loads(doc_json)
    value = doc.pop("__sweep_value__")
    scenario = sio.parse_scenario(doc)
    trace = sim.run(scenario)
    if trace.aborted is None:
        summary = sim.metrics(trace)
        return (value, summary["settling_time"], summary["ultimate_bound"][0],
                summary["min_pair_distance"])
    min_pair = float(trace.min_pair_distance.min()) if trace.times.size else float("nan")
    return (value, float("nan"), float("nan"), min_pair)


def cmd_sweep(args) -> int:
    try:
        values = [float(v) for v in args.values.split(",") if v.strip() != ""]
    except ValueError:
        print(f"error: cannot parse values {args.values!r}", file=sys.stderr)
        return 1
    if not values:
        print("error: empty sweep value list", file=sys.stderr)
        return 1
    try:
        _scenario, doc = sio.load_scenario(args.scenario)
        dotted = _resolve_param(doc, args.param)
        jobs = []
        for value in values:
            job = copy.deepcopy(doc)
            if not _set_doc_field(job, dotted, value):
                raise sio.ScenarioError(dotted, "unknown scenario field")
            job["__sweep_value__"] = value
            sio.parse_scenario({k: v for k, v in job.items() if k != "__sweep_value__"})
            jobs.append(json.dumps(job))
    except sio.ScenarioError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1

    cap = os.environ.get(THREADS_ENV)
    try:
        cap = int(cap) if cap else (os.cpu_count() or 1)
    except ValueError:
        cap = 1
    workers = max(1, min(cap, len(jobs)))
    if workers > 1:
        with concurrent.futures.ProcessPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(_sweep_one, jobs))
    else:
        rows = [_sweep_one(job) for job in jobs]

    try:
        out_dir = Path(args.out)
        out_dir.mkdir(parents=True, exist_ok=True)
        with open(out_dir / "sweep.csv", "w", encoding="utf-8", newline="\n") as fh:
            fh.write("value,settling_time,ultimate_bound,min_pair_distance\n")
            for row in rows:
                fh.write(",".join(_fmt(v) for v in row) + "\n")
    except OSError as exc:
        print(f"error: cannot write outputs: {exc}", file=sys.stderr)
        return 1
    print(f"wrote {out_dir / 'sweep.csv'} ({len(rows)} rows)")
    return 0


class _Parser(argparse.ArgumentParser):
    # usage problems are exit code 1, not argparse's default 2
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="consensus-lab",
                     description="Deterministic leader-follower consensus simulation")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="simulate a scenario and write trace/plot data")
    p_run.add_argument("--scenario", required=True,
                       help="scenario JSON path or builtin:<name>")
    p_run.add_argument("--out", required=True, help="output directory")
    p_run.add_argument("--dt", type=float, default=None, help="override integration step")
    p_run.add_argument("--duration", type=float, default=None, help="override horizon")
    p_run.add_argument("--seed", type=int, default=None, help="override scenario seed")
    p_run.set_defaults(func=cmd_run)

    p_check = sub.add_parser("check", help="verify graph and gain prerequisites")
    p_check.add_argument("--scenario", required=True)
    p_check.set_defaults(func=cmd_check)

    p_diag = sub.add_parser("diagnose", help="evaluate the stability diagnostics matrix")
    p_diag.add_argument("--scenario", required=True)
    p_diag.add_argument("--bounds", default=None, help="bounds JSON (defaults to scenario's)")
    p_diag.add_argument("--json", default=None, help="also write the report as JSON")
    p_diag.set_defaults(func=cmd_diagnose)

    p_sweep = sub.add_parser("sweep", help="run one simulation per parameter value")
    p_sweep.add_argument("--scenario", required=True)
    p_sweep.add_argument("--param", required=True, help="scalar field, e.g. nn.kappa or gamma1")
    p_sweep.add_argument("--values", required=True, help="comma-separated values")
    p_sweep.add_argument("--out", required=True)
    p_sweep.set_defaults(func=cmd_sweep)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
