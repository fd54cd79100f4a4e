"""Command line: run one experiment from a JSON config.

Exit codes: 0 all verdicts pass, 1 a verdict fails, 2 config error,
3 numerical-contract error (CFL, coverage, memory budget, failed audit).
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import os
import sys
import time
from importlib import resources
from pathlib import Path

import jsonschema
import numpy as np
from threadpoolctl import threadpool_limits

from . import harness
from .errors import (AuditFailure, CFLViolation, ConfigError, CoverageError, DomainError,
                     InfeasibleCore, MemoryBudgetError, ToleranceUnreachable)
from .example_dist import build_law, discretize
from .pide import SchemeConfig, solve_combined_1d, solve_pure_jump, solve_triple
from .report import ExperimentReport, Table
from .sublinear import DiscreteDistribution, DistributionFamily
from .testfuncs import from_spec
from .uncertainty import UncertaintySetBox

log = logging.getLogger("robust_levy")

THREADS_ENV = "ROBUST_LEVY_THREADS"
EXIT_OK, EXIT_VERDICT, EXIT_CONFIG, EXIT_NUMERIC = 0, 1, 2, 3
NUMERIC_ERRORS = (CFLViolation, CoverageError, MemoryBudgetError, ToleranceUnreachable,
                  AuditFailure)


def load_schema() -> dict:
    text = resources.files("robust_levy").joinpath("config_schema.json").read_text("utf-8")
    return json.loads(text)


def validate(cfg: dict) -> None:
    try:
        jsonschema.validate(cfg, load_schema())
    except jsonschema.ValidationError as e:
        where = "/".join(str(p) for p in e.absolute_path) or "<root>"
        raise ConfigError(f"{where}: {e.message}") from None
    for path, iv in _intervals(cfg):
        if not iv[0] <= iv[1]:
            raise ConfigError(f"{path}: empty interval [{iv[0]}, {iv[1]}]")
    if cfg["kind"] == "audit" and "audit" not in cfg:
        raise ConfigError("kind 'audit' needs an 'audit' entry")


def _intervals(cfg: dict):
    box = cfg.get("box", {})
    for i, a in enumerate(box.get("atoms", [])):
        yield f"box/atoms/{i}", (a["lo"], a["hi"])
    for k in ("q", "Q"):
        if k in box:
            yield f"box/{k}", box[k]
    for i, iv in enumerate(cfg.get("class", [])):
        yield f"class/{i}", iv


# ---------------------------------------------------------------------------
# config → objects

def _alpha(cfg) -> float:
    return float(cfg.get("alpha", harness.ALPHA))


def _box(cfg) -> UncertaintySetBox:
    if "box" in cfg:
        return UncertaintySetBox.from_dict(cfg["box"], _alpha(cfg))
    tb = harness.TRIPLE_BOX
    return UncertaintySetBox.one_dim(_alpha(cfg), tb["weights"][0], tb["weights"][1],
                                     tb["q"], tb["Q"])


def _class(cfg):
    if "class" in cfg:
        return tuple(tuple(float(v) for v in iv) for iv in cfg["class"])
    return harness.DEFAULT_CLASS


def _law(cfg) -> dict:
    d = dict(harness.DEFAULT_LAW)
    d.update(cfg.get("law", {}))
    d["alpha"] = _alpha(cfg)
    return d


def _scheme(cfg, default: SchemeConfig, workers: int, times=()) -> SchemeConfig:
    s = cfg.get("scheme", {})
    kw = {k: (tuple(v) if isinstance(v, list) else v) for k, v in s.items()}
    out = default.with_(workers=workers, **kw)
    if times:
        out = out.with_(times=tuple(sorted(set(out.times) | set(times))))
    return out


def _distribution(spec: dict, alpha: float) -> DiscreteDistribution:
    if "product" in spec:
        return DiscreteDistribution.product(*(_distribution(s, alpha) for s in spec["product"]))
    if "nodes" in spec:
        nodes = np.asarray(spec["nodes"], dtype=float)
        if nodes.ndim == 1:
            nodes = nodes[:, None]
        return DiscreteDistribution(nodes, np.asarray(spec["weights"], dtype=float))
    g = spec["generator"]
    if g == "rademacher":
        return DiscreteDistribution.rademacher(float(spec.get("scale", 1.0)))
    if g == "point-mass":
        return DiscreteDistribution.point_mass(float(spec.get("value", 0.0)))
    law = build_law(alpha, spec.get("k1", 1.0), spec.get("k2", 1.0), spec.get("x0", 2.0))
    return discretize(law, int(spec.get("node_budget", 4096)))


def _family(cfg, box) -> DistributionFamily:
    spec = cfg.get("family", "default")
    if spec == "default":
        return harness.triple_family(box, int(cfg.get("node_budget", 4096)),
                                     _law(cfg)["x0"])
    a = _alpha(cfg)
    if "members" in spec:
        return DistributionFamily(tuple(_distribution(m, a) for m in spec["members"]))
    sets = [[_distribution(m, a) for m in group] for group in spec["cross"]]
    members = [()]
    for group in sets:
        members = [m + (d,) for m in members for d in group]
    return DistributionFamily(tuple(DiscreteDistribution.product(*m) for m in members))


def _phi(cfg, default=None):
    spec = cfg.get("phi", default)
    if spec is None:
        raise ConfigError("a 'phi' entry is required")
    return from_spec(spec), spec


def _probes(raw: list[str]) -> list[tuple[float, ...]]:
    out = []
    for p in raw:
        try:
            vals = tuple(float(v) for v in p.split(","))
        except ValueError:
            raise ConfigError(f"bad --probe {p!r}; expected t,x[,y,z]") from None
        if not 2 <= len(vals) <= 4:
            raise ConfigError(f"bad --probe {p!r}; expected t,x[,y,z]")
        out.append(vals)
    return out


# ---------------------------------------------------------------------------
# kinds

def _solve(cfg, workers, probes) -> ExperimentReport:
    box = _box(cfg)
    phi, phi_spec = _phi(cfg)
    T = float(cfg.get("T", 1.0))
    solver = cfg.get("solver", "triple")
    fn = {"pure-jump": solve_pure_jump, "combined": solve_combined_1d,
          "triple": solve_triple}[solver]
    default = harness.TRIPLE_SCHEME if solver == "triple" else SchemeConfig()
    times = [p[0] for p in probes]
    if any(not 0 <= t <= T for t in times):
        raise ConfigError("probe times must lie in [0, T]")
    scheme = _scheme(cfg, default, workers, times)
    res = fn(box, phi, T, scheme)
    axes = res.solution.axes
    names = ("x", "y", "z")[:len(axes)]
    sol = Table(names + ("value",))
    mesh = res.solution.mesh() if len(axes) > 1 else res.solution.axes[0].nodes[:, None]
    for pt, v in zip(mesh.reshape(-1, len(axes)), res.solution.values.reshape(-1)):
        sol.add(*[float(c) for c in pt], float(v))
    pt_tab = Table(("t", "x", "y", "z", "value"))
    for p in probes:
        if len(p) - 1 != len(axes):
            raise ConfigError(f"probe {p} has {len(p) - 1} coordinates, grid has {len(axes)}")
        v = res.probe(*p[1:], t=p[0])
        pad = list(p[1:]) + [math.nan] * (3 - len(axes))
        pt_tab.add(p[0], *pad, v)
    meta = Table(("dt", "n_steps", "cfl_margin", "scheme", "tail_budget_at_origin"))
    # the budget depends on the distance along the jump coordinate only
    meta.add(res.dt, res.n_steps, res.cfl_margin, res.scheme, res.tail_budget_at(0.0))
    conf = {"solver": solver, "box": box.to_dict(), "alpha": box.alpha, "phi": phi_spec,
            "T": T, "scheme": harness._cfg_dict(scheme), "probes": [list(p) for p in probes]}
    return ExperimentReport("solve", conf, {"solution": sol, "probes": pt_tab, "run": meta},
                            {}, [])


def _limit(cfg, workers) -> ExperimentReport:
    box = _box(cfg)
    fam = _family(cfg, box)
    phi, phi_spec = _phi(cfg, harness.TRIPLE_PHI)
    grid = tuple(harness.AxisPolicy(**g) for g in cfg["grid"]) if "grid" in cfg \
        else harness.TRIPLE_GRID
    n_list = tuple(cfg.get("n_list", harness.DEFAULT_N_TRIPLE))
    scheme = _scheme(cfg, harness.TRIPLE_SCHEME, 1)
    conf = {"box": box.to_dict(), "alpha": box.alpha, "phi": phi_spec,
            "family": cfg.get("family", "default"), "node_budget": cfg.get("node_budget", 4096)}
    return harness.robust_limit_experiment(
        fam, box, phi, n_list, scheme, grid, reference=cfg.get("reference"),
        band=float(cfg.get("band", 5e-2)), label="limit", config=conf, workers=workers)


def _attraction(cfg, workers) -> ExperimentReport:
    kw = {"law": _law(cfg), "workers": workers}
    if "n_list" in cfg:
        kw["n_list"] = tuple(cfg["n_list"])
    if "s_list" in cfg:
        kw["s_list"] = tuple(cfg["s_list"])
    if "node_budget" in cfg:
        kw["node_budget"] = int(cfg["node_budget"])
    kw.update(cfg.get("params", {}))
    return harness.attraction_suite(**kw)


def _consistency(cfg, workers) -> ExperimentReport:
    kw = {"law": _law(cfg), "weights": _class(cfg), "workers": workers,
          "phi_spec": cfg.get("phi", {"form": "cos"})}
    if "s_list" in cfg:
        kw["s_list"] = tuple(cfg["s_list"])
    if "n" in cfg:
        kw["n"] = int(cfg["n"])
    if "node_budget" in cfg:
        kw["node_budget"] = int(cfg["node_budget"])
    kw.update(cfg.get("params", {}))
    return harness.consistency_rate_experiment(**kw)


def _scaling(cfg, workers) -> ExperimentReport:
    kw = {"weights": _class(cfg), "alpha": _alpha(cfg), "workers": workers}
    if "betas" in cfg:
        kw["betas"] = tuple(cfg["betas"])
    s = cfg.get("scheme", {})
    if "steps" in s:
        kw["step"] = float(s["steps"][0])
    if "half_widths" in s:
        kw["half_width"] = float(s["half_widths"][0])
    kw.update(cfg.get("params", {}))
    return harness.scaling_experiment(**kw)


def _generator_limit(cfg, workers) -> ExperimentReport:
    box = cfg.get("box")
    kw = {"weights": _class(cfg), "alpha": _alpha(cfg), "workers": workers}
    if box is not None:
        kw["q"] = tuple(box.get("q", (0.0, 0.0)))
        kw["Q"] = tuple(box.get("Q", (0.0, 0.0)))
    if "triples" in cfg:
        kw["triples"] = tuple(tuple(t) for t in cfg["triples"])
    if "deltas" in cfg:
        kw["deltas"] = tuple(cfg["deltas"])
    if "band" in cfg:
        kw["tol"] = float(cfg["band"])
    kw.update(cfg.get("params", {}))
    return harness.generator_limit_experiment(**kw)


def _audit(cfg, workers) -> ExperimentReport:
    kw = dict(cfg.get("params", {}))
    if "seed" in cfg and cfg["audit"] in ("sublinear-audit", "measure-oracles",
                                          "lipschitz-probe", "stable-triangulation"):
        kw["seed"] = int(cfg["seed"])
    return harness.run_experiment(cfg["audit"], workers=workers, **kw)


KINDS = {"limit": _limit, "attraction": _attraction, "consistency": _consistency,
         "scaling": _scaling, "generator-limit": _generator_limit, "audit": _audit}


def execute(cfg: dict, workers: int = 1, probes=()) -> ExperimentReport:
    validate(cfg)
    t0 = time.perf_counter()
    if cfg["kind"] == "solve":
        rep = _solve(cfg, workers, list(probes))
    elif probes:
        raise ConfigError("--probe is only meaningful for kind 'solve'")
    else:
        rep = KINDS[cfg["kind"]](cfg, workers)
    if not rep.wall_clock:
        rep.wall_clock = time.perf_counter() - t0
    return rep


def write_outputs(rep: ExperimentReport, outputs: dict, base: Path, timing: bool) -> None:
    if "json" in outputs:
        p = base / outputs["json"]
        p.parent.mkdir(parents=True, exist_ok=True)
        with open(p, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(rep.to_json(timing=timing))
    if "csv" in outputs:
        p = base / outputs["csv"]
        p.parent.mkdir(parents=True, exist_ok=True)
        with open(p, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(rep.csv_bundle())


def _default_threads() -> int:
    raw = os.environ.get(THREADS_ENV, "1")
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="robust-levy", description=__doc__.splitlines()[0])
    ap.add_argument("config", help="JSON experiment config")
    ap.add_argument("--dry-run", action="store_true", help="validate the config and exit")
    ap.add_argument("--threads", type=int, default=None,
                    help=f"worker threads (default ${THREADS_ENV} or 1); results do not depend on it")
    ap.add_argument("--probe", action="append", default=[], metavar="t,x[,y,z]",
                    help="extra solution probe (kind 'solve'); repeatable")
    ap.add_argument("--timing", action="store_true", help="include wall-clock in the JSON report")
    ap.add_argument("-v", "--verbose", action="store_true")
    return ap


def run(config_path: str, dry_run: bool = False, threads: int | None = None,
        probe=(), timing: bool = False) -> int:
    try:
        path = Path(config_path)
        try:
            cfg = json.loads(path.read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as e:
            raise ConfigError(f"cannot read config: {e}") from None
        if not isinstance(cfg, dict):
            raise ConfigError("config must be a JSON object")
        probes = _probes(list(probe))
        validate(cfg)
        if dry_run:
            return EXIT_OK
        workers = threads if threads is not None else _default_threads()
        if workers < 1:
            raise ConfigError("--threads must be at least 1")
        # BLAS stays single-threaded so reductions do not depend on the thread count
        with threadpool_limits(limits=1):
            rep = execute(cfg, workers, probes)
        write_outputs(rep, cfg.get("outputs", {}), path.parent, timing)
    except ConfigError as e:
        log.error("config error: %s", e)
        return EXIT_CONFIG
    except NUMERIC_ERRORS as e:
        log.error("numerical contract violated: %s", e)
        return EXIT_NUMERIC
    except (DomainError, InfeasibleCore) as e:
        log.error("invalid parameters: %s", e)
        return EXIT_CONFIG
    for line in rep.summary_lines():
        log.info(line)
    log.info("%s: config digest %s, wall clock %.3f s", rep.experiment, rep.config_digest,
             rep.wall_clock)
    return EXIT_OK if rep.passed else EXIT_VERDICT


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.INFO,
                        format="%(levelname)s %(message)s", stream=sys.stderr)
    return run(args.config, args.dry_run, args.threads, args.probe, args.timing)


if __name__ == "__main__":
    sys.exit(main())
