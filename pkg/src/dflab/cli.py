"""Scenario-driven command line front end.

``dflab run <config>`` builds the configured window, executes the task
list in order and writes ``report.json`` plus per-task CSV tables into
the output directory.  Exit code 0 means every task verdict matched its
expectation (tasks may declare ``"expect": "fail"``), 1 means at least
one did not, 2 signals a configuration or runtime error.  Re-running the
same config and seed reproduces every reported number bit-identically;
wall-clock data is isolated in the single ``timing`` field.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import hashlib
import json
import math
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from datetime import datetime, timezone
from importlib import resources
from pathlib import Path

import numpy as np

from . import __version__
from .energy import capacity, energy
from .graphs import GraphForm, ModelSpec, build_model, dump_graph, validate
from .metrics import (IntrinsicWitness, build_metric, cutoff,
                      definitional_check, intrinsic_rowsum_check, jump_size,
                      jump_size_trend, scaled_euclidean)
from .spectral import (PerturbedForm, caccioppoli, gen_eigen_residual,
                       gst_check, hyperbolic_wave, min_cq, plane_wave,
                       shell_criterion, shnol_bound, shnol_ratio, spectrum)

TASK_NAMES = ("verify-metric", "jump-size", "capacity", "spectrum", "gst",
              "caccioppoli", "shnol", "shnol-ratio", "condition-c",
              "counterexample")

DEFAULT_TOLERANCES = {
    "identity_rel": 1e-12,
    "inequality_slack": 1e-12,
    "gst_rel": 1e-9,
    "form_bound": 1e-10,
    "ratio_threshold": 0.05,
    "positivity": 1e-10,
}


@dataclass
class ScenarioConfig:
    name: str
    model: dict
    metric: dict | None
    perturbation: dict | None
    tasks: list
    seed: int
    tolerances: dict

    @classmethod
    def from_dict(cls, data: dict) -> "ScenarioConfig":
        if "seed" not in data:
            raise ValueError("scenario config requires an integer seed")
        tasks = data.get("tasks", [])
        for t in tasks:
            if t.get("task") not in TASK_NAMES:
                raise ValueError(f"unknown task {t.get('task')!r}")
        tol = dict(DEFAULT_TOLERANCES)
        tol.update(data.get("tolerances", {}))
        return cls(name=data.get("name", "scenario"),
                   model=data["model"],
                   metric=data.get("metric"),
                   perturbation=data.get("perturbation"),
                   tasks=tasks,
                   seed=int(data["seed"]),
                   tolerances=tol)


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else repr(v)
    if isinstance(obj, (np.integer, int)):
        return int(obj)
    if isinstance(obj, np.ndarray):
        return [_jsonable(v) for v in obj.tolist()]
    return obj


def _digest(obj) -> str:
    blob = json.dumps(_jsonable(obj), sort_keys=True).encode()
    return hashlib.sha256(blob).hexdigest()[:16]


def _write_csv(path: Path, header, rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for row in rows:
            w.writerow([f"{v:.17g}" if isinstance(v, float) else v
                        for v in row])


class TaskContext:
    def __init__(self, config: ScenarioConfig, G: GraphForm, outdir: Path):
        self.config = config
        self.G = G
        self.outdir = outdir
        self.spec = ModelSpec.from_dict(config.model)
        self._eigs_cache: dict[str, np.ndarray] = {}
        pert = config.perturbation or {}
        n = G.n
        self.nu_plus = self._vec(pert.get("nu_plus", 0.0), n)
        self.nu_minus = self._vec(pert.get("nu_minus", 0.0), n)
        self.q = float(pert.get("q", 0.5))
        self.C_q = pert.get("C_q")
        if np.any(self.nu_minus != 0.0):
            if self.C_q is None:
                raise ValueError("nonzero nu_minus requires an explicit C_q")
            PerturbedForm(G, self.nu_plus, self.nu_minus, self.q,
                          float(self.C_q)).validate(
                              tol=config.tolerances["form_bound"])
        self.C_q = 0.0 if self.C_q is None else float(self.C_q)
        self.nu = self.nu_plus - self.nu_minus

    @staticmethod
    def _vec(val, n):
        if np.isscalar(val):
            return np.full(n, float(val))
        return np.asarray(val, dtype=np.float64)

    def rng(self, index: int) -> np.random.Generator:
        return np.random.default_rng(
            np.random.SeedSequence(self.config.seed, spawn_key=(index,)))

    def metric(self, task: dict):
        spec = task.get("metric", self.config.metric)
        if spec is None:
            raise ValueError("task needs a metric spec")
        return build_metric(self.G, spec)

    def eigs(self) -> np.ndarray:
        key = "default"
        if key not in self._eigs_cache:
            self._eigs_cache[key] = spectrum(self.G, self.nu)
        return self._eigs_cache[key]

    def default_scale(self) -> float:
        d = self.G.coords.shape[1]
        return 1.0 / np.sqrt(2.0 * d)


# ---------------------------------------------------------------------------
# task handlers: each returns (outputs dict, verdict bool, csv file names)


def _run_verify_metric(ctx: TaskContext, task: dict, idx: int):
    rho = ctx.metric(task)
    witness = IntrinsicWitness.full(ctx.G)
    rows = intrinsic_rowsum_check(ctx.G, rho,
                                  tol_rel=ctx.config.tolerances["identity_rel"])
    defn = definitional_check(ctx.G, rho, witness, rng=ctx.rng(idx),
                              tol_rel=ctx.config.tolerances["identity_rel"])
    name = f"{idx:02d}_verify-metric_slack.csv"
    _write_csv(ctx.outdir / name, ["vertex", "slack", "interior"],
               [(x, float(rows.slack[x]), int(ctx.G.interior[x]))
                for x in range(ctx.G.n)])
    out = {
        "rowsum": {"verdict": rows.verdict,
                   "interior_min_slack": rows.interior_min_slack,
                   "boundary_min_slack": rows.boundary_min_slack},
        "definitional": {"verdict": defn.verdict,
                         "worst_violation": defn.worst_violation,
                         "worst_vertex": defn.worst_vertex,
                         "worst_set": list(defn.worst_set),
                         "worst_cap": defn.worst_cap,
                         "n_samples": defn.n_samples},
    }
    return out, rows.verdict and defn.verdict, [name]


def _run_jump_size(ctx: TaskContext, task: dict, idx: int):
    rho = ctx.metric(task)
    value = jump_size(ctx.G, rho)
    out = {"jump_size": value}
    verdict = True
    radii = task.get("radii")
    if radii and ctx.spec.kind in ("lattice", "powerlaw", "exponential"):
        metric_spec = task.get("metric", ctx.config.metric)
        trend = jump_size_trend(ctx.spec, metric_spec, radii)
        out["trend"] = trend
        expect = task.get("expect_trend")
        if expect is not None:
            verdict = trend["verdict"] == expect
    return out, verdict, []


def _run_capacity(ctx: TaskContext, task: dict, idx: int):
    A = task.get("set", "center")
    if A == "center":
        A = [int(np.argmin(np.linalg.norm(ctx.G.coords, axis=1)))]
    res = capacity(ctx.G, np.asarray(A, dtype=np.int64))
    name = f"{idx:02d}_capacity_minimizer.csv"
    _write_csv(ctx.outdir / name, ["vertex", "value"],
               [(x, float(res.minimizer[x])) for x in range(ctx.G.n)])
    rng = ctx.rng(idx)
    trials = int(task.get("monotonicity_trials", 20))
    slack = ctx.config.tolerances["inequality_slack"]
    mono_ok = True
    for _ in range(trials):
        size_b = int(rng.integers(1, max(2, ctx.G.n // 2 + 1)))
        B = rng.choice(ctx.G.n, size=size_b, replace=False)
        size_a = int(rng.integers(1, size_b + 1))
        Asub = rng.choice(B, size=size_a, replace=False)
        ca = capacity(ctx.G, Asub).value
        cb = capacity(ctx.G, B).value
        mono_ok &= ca <= cb + slack * max(1.0, abs(cb))
    out = {"set": list(int(x) for x in A), "value": res.value,
           "monotonicity_trials": trials, "monotone": mono_ok}
    return out, mono_ok, [name]


def _run_spectrum(ctx: TaskContext, task: dict, idx: int):
    eigs = ctx.eigs()
    name = f"{idx:02d}_spectrum_eigenvalues.csv"
    _write_csv(ctx.outdir / name, ["index", "eigenvalue"],
               [(i, float(v)) for i, v in enumerate(eigs)])
    out = {"min": float(eigs[0]), "max": float(eigs[-1]), "count": len(eigs)}
    verdict = True
    if np.all(ctx.nu_minus == 0.0):
        scale = max(1.0, float(np.max(np.abs(eigs))))
        verdict = eigs[0] >= -ctx.config.tolerances["positivity"] * scale
        out["positivity_checked"] = True
    return out, verdict, [name]


def _interior_bump(ctx: TaskContext, rng, margin: int = 2) -> np.ndarray:
    inter = np.nonzero(ctx.G.interior)[0]
    vec = np.zeros(ctx.G.n)
    vec[inter] = rng.normal(size=inter.size)
    return vec


def _run_gst(ctx: TaskContext, task: dict, idx: int):
    rng = ctx.rng(idx)
    trials = int(task.get("trials", 50))
    family = task.get("family", "cosh")
    tol = ctx.config.tolerances["gst_rel"]
    worst = 0.0
    ok = True
    for _ in range(trials):
        if family == "cosh":
            mu = float(rng.uniform(0.05, 0.4))
            u, lam = hyperbolic_wave(ctx.G, mu)
        elif family == "perron":
            H = spectrum  # placeholder to keep imports tight
            import numpy.linalg as la
            from .energy import generator_matrix
            Hm = generator_matrix(ctx.G, ctx.nu)
            w, V = la.eigh(Hm)
            vec = V[:, 0] / np.sqrt(ctx.G.m)
            if np.all(ctx.G.interior):
                u = np.abs(vec)
                lam = float(w[0])
            else:
                raise ValueError("perron family needs a window without boundary")
        else:
            raise ValueError(f"unknown gst family {family!r}")
        phi = _interior_bump(ctx, rng)
        psi = _interior_bump(ctx, rng)
        for variant in ("inverse", "multiplicative"):
            res = gst_check(ctx.G, ctx.nu, u, lam, phi, psi, variant, tol=tol)
            worst = max(worst, res.rel_residual)
            ok &= res.verdict
    return {"trials": trials, "family": family, "worst_rel": worst}, ok, []


def _random_cutoff(ctx: TaskContext, rho, rng, max_radius: float):
    center = int(rng.choice(np.nonzero(ctx.G.interior)[0]))
    a = float(rng.uniform(0.5, max_radius))
    return cutoff(rho, [center], a)


def _run_caccioppoli(ctx: TaskContext, task: dict, idx: int):
    rng = ctx.rng(idx)
    trials = int(task.get("trials", 50))
    rho = ctx.metric(task) if (task.get("metric") or ctx.config.metric) else \
        scaled_euclidean(ctx.G, ctx.default_scale())
    from .energy import generator_matrix
    w, V = np.linalg.eigh(generator_matrix(ctx.G, ctx.nu))
    records = []
    ok = True
    for _ in range(trials):
        i = int(rng.integers(0, ctx.G.n))
        u = V[:, i] / np.sqrt(ctx.G.m)
        lam = float(w[i])
        eta = _random_cutoff(ctx, rho, rng, max_radius=8.0)
        res = caccioppoli(ctx.G, ctx.nu, u, lam, eta, q=ctx.q, C_q=ctx.C_q)
        ok &= res.verdict
        records.append((lam, res.lhs, res.rhs, res.constant, int(res.verdict)))
    name = f"{idx:02d}_caccioppoli_trials.csv"
    _write_csv(ctx.outdir / name,
               ["lambda", "lhs", "rhs", "constant", "verdict"], records)
    out = {"trials": trials, "q": ctx.q, "C_q": ctx.C_q, "all_pass": ok}
    return out, ok, [name]


def _run_shnol(ctx: TaskContext, task: dict, idx: int):
    rng = ctx.rng(idx)
    trials = int(task.get("trials", 20))
    rho = scaled_euclidean(ctx.G, ctx.default_scale())
    s = jump_size(ctx.G, rho)
    coords = ctx.G.coords[:, 0]
    R = int(np.max(np.abs(coords)))
    ok = True
    worst_gap = np.inf
    worst = None
    for _ in range(trials):
        theta = float(rng.uniform(0.2, np.pi - 0.2))
        u, lam = plane_wave(ctx.G, [theta] + [0.0] * (ctx.G.coords.shape[1] - 1))
        a = float(rng.uniform(1.0, 4.0)) / np.sqrt(2.0)
        margin = int(np.ceil((2 * a + s) * np.sqrt(2.0))) + 2
        rmax = R - margin - 1
        r = int(rng.integers(2, max(3, rmax)))
        E = np.nonzero(np.abs(coords) <= r)[0]
        v = _interior_bump(ctx, rng)
        res = shnol_bound(ctx.G, ctx.nu, u, lam, rho, E, a, s, v,
                          q=ctx.q, C_q=ctx.C_q)
        ok &= res.verdict
        if res.rhs - res.lhs_sq < worst_gap:
            worst_gap = res.rhs - res.lhs_sq
            worst = {"lhs_sq": res.lhs_sq, "rhs": res.rhs,
                     "constant": res.constant,
                     "cacc_constant": res.cacc_constant,
                     "d1": res.d1, "d2": res.d2, "d3": res.d3,
                     "term_cs": res.term_cs, "term_cacc": res.term_cacc,
                     "term_far": res.term_far, "verdict": res.verdict}
    return {"trials": trials, "all_pass": ok, "tightest_trial": worst}, ok, []


def _run_shnol_ratio(ctx: TaskContext, task: dict, idx: int):
    family = task.get("family", "plane")
    if family == "plane":
        u, lam = plane_wave(ctx.G, [float(task.get("theta", np.pi / 7))])
    elif family == "cosh":
        u, lam = hyperbolic_wave(ctx.G, float(task.get("mu", 0.3)))
    else:
        raise ValueError(f"unknown family {family!r}")
    rho = scaled_euclidean(ctx.G, ctx.default_scale())
    s = jump_size(ctx.G, rho)
    a = float(task.get("a", s))
    step = int(task.get("step", 5))
    coords = ctx.G.coords[:, 0]
    R = int(np.max(np.abs(coords)))
    shells = [np.nonzero(np.abs(coords) <= step * n)[0]
              for n in range(1, R // step + 1)]
    res = shnol_ratio(ctx.G, ctx.nu, u, lam, rho, shells, a, s,
                      threshold=ctx.config.tolerances["ratio_threshold"],
                      eigs=ctx.eigs())
    name = f"{idx:02d}_shnol-ratio_per_n.csv"
    _write_csv(ctx.outdir / name, ["n", "bulk_ratio", "energy_ratio"],
               list(zip(res.indices, res.bulk_ratios, res.energy_ratios)))
    out = {"family": family, "lambda": lam, "verdict": res.verdict,
           "fit_limit": res.fit_limit, "fit_slope": res.fit_slope,
           "spectrum_dist": res.spectrum_dist, "threshold": res.threshold}
    expected = task.get("expect_verdict", "in_spectrum")
    return out, res.verdict == expected, [name]


def _run_condition_c(ctx: TaskContext, task: dict, idx: int):
    rho = scaled_euclidean(ctx.G, ctx.default_scale())
    s = jump_size(ctx.G, rho)
    a = float(task.get("a", s))
    seed_set = task.get("seed_set", "center")
    if seed_set == "center":
        seed_set = [int(np.argmin(np.linalg.norm(ctx.G.coords, axis=1)))]
    u = None
    if task.get("with_u") == "plane":
        u, _ = plane_wave(ctx.G, [np.pi / 7] + [0.0] * (ctx.G.coords.shape[1] - 1))
    gammas = tuple(task.get("gammas", (0.1, 1.0)))
    deco, diag = shell_criterion(ctx.G, rho, seed_set, a, s, u=u,
                                 gammas=gammas)
    name = f"{idx:02d}_condition-c_shells.csv"
    rows = [(i + 1, float(m)) for i, m in enumerate(deco.masses)]
    _write_csv(ctx.outdir / name, ["n", "mass"], rows)
    verdict = bool(all(diag["decay_ok"].values())) and diag["collar_ok"]
    out = {"n_shells": diag["n_shells"], "decay_ok": diag["decay_ok"],
           "collar_ok": diag["collar_ok"]}
    if "wu_norm" in diag:
        out["wu_norm"] = diag["wu_norm"]
        out["sup_u_sq_basel"] = diag["sup_u_sq_basel"]
    return out, verdict, [name]


def _run_counterexample(ctx: TaskContext, task: dict, idx: int):
    which = task.get("which")
    if which == "three_point_max":
        rho = build_metric(ctx.G, {"kind": "named", "name": "three_point_max"})
        witness = IntrinsicWitness.full(ctx.G)
        defn = definitional_check(ctx.G, rho, witness, rng=ctx.rng(idx))
        reproduced = (not defn.verdict
                      and abs(defn.worst_violation - 1.0) <= 1e-12
                      and defn.worst_vertex == 1)
        out = {"which": which, "worst_violation": defn.worst_violation,
               "worst_vertex": defn.worst_vertex, "reproduced": reproduced}
        return out, reproduced, []
    if which == "mirror_product":
        base = int(task.get("base_n", 64))
        doublings = int(task.get("doublings", 4))
        sizes = [base * 2**i for i in range(doublings + 1)]
        eu, ev, euv = [], [], []
        for N in sizes:
            GM = build_model(ModelSpec(kind="mirror", n=N))
            x = GM.coords[:, 0]
            u = x.copy()
            v = np.abs(x) ** -0.25
            eu.append(energy(GM, None, u))
            ev.append(energy(GM, None, v))
            euv.append(energy(GM, None, u * v))
        incr = [euv[i + 1] - euv[i] for i in range(doublings)]
        target = 4.0 * math.log(2.0)
        in_band = all(abs(d - target) <= 0.1 * target for d in incr)
        du = [abs(eu[i + 1] - eu[i]) for i in range(doublings)]
        converging = all(du[i + 1] < du[i] for i in range(doublings - 1))
        even_zero = all(v == 0.0 for v in ev)
        verdict = in_band and converging and even_zero
        out = {"which": which, "sizes": sizes, "energy_u": eu, "energy_v": ev,
               "energy_uv": euv, "increments": incr, "target": target,
               "divergence_confirmed": verdict}
        name = f"{idx:02d}_counterexample_mirror.csv"
        _write_csv(ctx.outdir / name, ["n", "energy_u", "energy_v", "energy_uv"],
                   list(zip(sizes, eu, ev, euv)))
        return out, verdict, [name]
    raise ValueError(f"unknown counterexample {which!r}")


TASK_RUNNERS = {
    "verify-metric": _run_verify_metric,
    "jump-size": _run_jump_size,
    "capacity": _run_capacity,
    "spectrum": _run_spectrum,
    "gst": _run_gst,
    "caccioppoli": _run_caccioppoli,
    "shnol": _run_shnol,
    "shnol-ratio": _run_shnol_ratio,
    "condition-c": _run_condition_c,
    "counterexample": _run_counterexample,
}


def run_scenario(config: ScenarioConfig, outdir: Path) -> tuple[dict, int]:
    """Execute a scenario; returns (report dict, exit code)."""
    outdir.mkdir(parents=True, exist_ok=True)
    G = build_model(ModelSpec.from_dict(config.model))
    issues = validate(G)
    if issues:
        raise ValueError(f"model fails validation: {issues[:3]}")
    ctx = TaskContext(config, G, outdir)
    records = []
    all_passed = True
    wall = []
    for idx, task in enumerate(config.tasks):
        t0 = time.perf_counter()
        outputs, verdict, files = TASK_RUNNERS[task["task"]](ctx, task, idx)
        wall.append(time.perf_counter() - t0)
        expect = task.get("expect", "pass")
        passed = verdict if expect == "pass" else not verdict
        all_passed &= passed
        records.append({
            "index": idx,
            "task": task["task"],
            "inputs_digest": _digest(task),
            "expect": expect,
            "outputs": _jsonable(outputs),
            "verdict": bool(verdict),
            "passed": bool(passed),
            "csv": files,
        })
    report = {
        "tool": {"name": "dflab", "version": __version__},
        "scenario": _jsonable(dataclasses.asdict(config)),
        "tasks": records,
        "all_passed": bool(all_passed),
        "timing": {
            "timestamp": datetime.now(timezone.utc).isoformat(),
            "wall_times": wall,
        },
    }
    with open(outdir / "report.json", "w") as fh:
        json.dump(report, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return report, 0 if all_passed else 1


def bundled_scenarios() -> dict[str, dict]:
    out = {}
    root = resources.files("dflab").joinpath("scenarios")
    for entry in sorted(root.iterdir(), key=lambda e: e.name):
        if entry.name.endswith(".json"):
            out[entry.name[:-5]] = json.loads(entry.read_text())
    return out


def load_config(ref: str) -> ScenarioConfig:
    path = Path(ref)
    if path.exists():
        data = json.loads(path.read_text())
    else:
        catalog = bundled_scenarios()
        key = ref[:-5] if ref.endswith(".json") else ref
        if key not in catalog:
            raise FileNotFoundError(f"no config file or bundled scenario {ref!r}")
        data = catalog[key]
    return ScenarioConfig.from_dict(data)


def _run_one(ref: str, out_root: str, seed: int | None) -> tuple[str, int]:
    try:
        config = load_config(ref)
        if seed is not None:
            config.seed = seed
        outdir = Path(out_root) / config.name
        _, code = run_scenario(config, outdir)
        return config.name, code
    except Exception as exc:  # config or runtime error
        print(f"error in scenario {ref}: {exc}", file=sys.stderr)
        return ref, 2


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="dflab",
        description="verification scenarios for jump forms on graph windows")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run one or more scenario configs")
    p_run.add_argument("configs", nargs="+",
                       help="config paths or bundled scenario names")
    p_run.add_argument("--jobs", type=int, default=1,
                       help="run scenarios in parallel")
    p_run.add_argument("--out", default="dflab_out", help="output directory")
    p_run.add_argument("--seed", type=int, default=None,
                       help="override the config seed")

    p_dump = sub.add_parser("dump-model", help="emit the graph dump format")
    p_dump.add_argument("config", help="config path or bundled scenario name")

    sub.add_parser("list-scenarios", help="print the bundled catalog")

    args = parser.parse_args(argv)

    if args.command == "list-scenarios":
        for name, data in bundled_scenarios().items():
            desc = data.get("description", "")
            print(f"{name}: {desc}")
        return 0

    if args.command == "dump-model":
        try:
            config = load_config(args.config)
            G = build_model(ModelSpec.from_dict(config.model))
        except Exception as exc:
            print(f"error: {exc}", file=sys.stderr)
            return 2
        sys.stdout.write(dump_graph(G))
        return 0

    if args.command == "run":
        results = []
        if args.jobs > 1 and len(args.configs) > 1:
            with ProcessPoolExecutor(max_workers=args.jobs) as pool:
                futs = [pool.submit(_run_one, ref, args.out, args.seed)
                        for ref in args.configs]
                results = [f.result() for f in futs]
        else:
            results = [_run_one(ref, args.out, args.seed)
                       for ref in args.configs]
        for name, code in results:
            status = {0: "pass", 1: "FAIL", 2: "ERROR"}[code]
            print(f"{name}: {status}")
        return max(code for _, code in results)

    return 2


if __name__ == "__main__":
    sys.exit(main())
