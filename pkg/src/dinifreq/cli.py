"""Config-driven experiment runner: one subcommand per analysis pipeline, CSV tables plus JSON sidecars."""

from __future__ import annotations

import argparse
import csv
import json
import sys
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import numpy as np

from .analysis.order import field_r0
from .analysis import (constants_ledger, dyadic_iteration, fit_monotonicity, order_vs_M_scan, three_sphere_H,
                       three_sphere_sup)
from .coefficients import coefficient_from_spec, constant_potential, make_frame
from .errors import DomainError, NumericalError
from .fields import catalog, fd_solve, push_entry, write_grid_field
from .functionals import frequency_trace
from .geometry import DiniDomain, chart_from_spec, generalized_star_margin, lambda_of, star_shape_margin
from .quadrature import QuadOptions

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC = 0, 2, 3
DEFAULT_TRIPLES = ((0.05, 0.1, 0.3), (0.02, 0.06, 0.25))
BOUNDARY_DATA = {
    "depth": lambda x, R: -x[..., 1],
    "tilted": lambda x, R: -x[..., 1] * (1 - x[..., 0] / R),
}


class ConfigError(ValueError):
    pass


@dataclass
class ExperimentConfig:
    """Everything a run depends on.  Unset entries fall back to the owning module's defaults."""

    case: str | None = None
    family: list | None = None
    solve: dict | None = None
    anchor: list | None = None
    radii: dict = field(default_factory=lambda: {"kind": "grid", "lo": 0.02, "hi": 0.3, "count": 16})
    alpha: float | None = None
    angular: int = 64
    radial: int = 24
    tol: float = 1e-9
    triples: list = field(default_factory=lambda: [list(t) for t in DEFAULT_TRIPLES])
    r0: float | None = None
    q_max: int = 6
    chart: dict = field(default_factory=lambda: {"kind": "power", "beta": 0.5})
    coeff: dict = field(default_factory=lambda: {"kind": "identity"})
    lam: float = 1.0
    K: float = 1.0
    K1: float = 0.5
    seed: int = 0
    out: str = "results"

    @classmethod
    def from_dict(cls, blob: dict) -> "ExperimentConfig":
        blob = blob.get("config", blob)
        known = {f.name for f in fields(cls)}
        extra = set(blob) - known
        if extra:
            raise ConfigError(f"unknown config keys: {sorted(extra)}")
        return cls(**blob)

    @property
    def quad(self) -> QuadOptions:
        return QuadOptions(int(self.angular), int(self.radial), float(self.tol))


def radii_from_spec(spec) -> np.ndarray:
    if isinstance(spec, (list, tuple)):
        return np.asarray(spec, dtype=float)
    kind = spec.get("kind", "grid")
    if kind == "values":
        return np.asarray(spec["values"], dtype=float)
    if kind == "grid":
        return np.linspace(float(spec["lo"]), float(spec["hi"]), int(spec["count"]))
    if kind == "log":
        return np.geomspace(float(spec["lo"]), float(spec["hi"]), int(spec["count"]))
    if kind == "dyadic":
        return float(spec["r0"]) / 2.0 ** np.arange(int(spec["count"]))[::-1]
    raise ConfigError(f"unknown radii kind {kind!r}")


def _solve_case(cfg: ExperimentConfig):
    """FD solution on the configured chart; returns (u, coeff, V, domain, anchor)."""
    spec = dict(cfg.solve)
    domain = DiniDomain.build(chart_from_spec(spec.get("chart", cfg.chart)), float(spec.get("K1", cfg.K1)))
    coeff = coefficient_from_spec(spec.get("coeff", cfg.coeff))
    V = constant_potential(float(spec.get("potential", 0.0)))
    R = domain.R0_effective
    L = float(spec.get("window_factor", 1.25)) * R
    h = L / int(spec.get("divisions", 32))
    name = spec.get("data", "tilted")
    if name not in BOUNDARY_DATA:
        raise ConfigError(f"unknown boundary data {name!r}; choose from {sorted(BOUNDARY_DATA)}")
    g = BOUNDARY_DATA[name]
    u = fd_solve(domain, coeff, V, data=lambda x: g(x, R), h=h, window=(L, L), tol=float(spec.get("solver_tol", 1e-10)))
    return u, coeff, V, domain, np.zeros(2)


def load_case(cfg: ExperimentConfig):
    """Resolve the configured case into (u, coeff, V, domain, z0, label), pushed so that A(z0) = I."""
    if cfg.case is None and cfg.solve is None:
        raise ConfigError("config needs 'case' (catalog name) or 'solve' (solver spec)")
    if cfg.case is None:
        u, coeff, V, domain, z0 = _solve_case(cfg)
        return u, coeff, V, domain, z0, "fd_solve"
    try:
        e = catalog(cfg.case)
    except DomainError as exc:
        raise ConfigError(str(exc)) from exc
    anchor = e.anchor if cfg.anchor is None else np.asarray(cfg.anchor, dtype=float)
    if np.abs(e.coeff.matrix(anchor) - np.eye(e.coeff.n)).max() > 1e-12:
        frame = make_frame(e.coeff, anchor)
        e = push_entry(e, frame)
        anchor = frame.forward(anchor)
    return e.u, e.coeff, e.potential, e.domain, anchor, cfg.case


def _write_csv(path: Path, header, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(v) for v in row])


def _fmt(v):
    if isinstance(v, (bool, np.bool_)):
        return str(bool(v)).lower()
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return v


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        x = float(obj)
        return x if np.isfinite(x) else str(x)
    return obj


def _sidecar(path: Path, cfg: ExperimentConfig, case: str, constants: dict, passed: bool, witnesses: list):
    blob = {"case": case, "constants": constants, "pass": passed, "witnesses": witnesses, "config": asdict(cfg)}
    with open(path, "w") as fh:
        json.dump(_jsonable(blob), fh, indent=2, sort_keys=True)
        fh.write("\n")


def cmd_trace(cfg: ExperimentConfig, out: Path) -> bool:
    u, coeff, V, domain, z0, label = load_case(cfg)
    radii = radii_from_spec(cfg.radii)
    tr = frequency_trace(u, coeff, V, domain, z0, radii, cfg.alpha, cfg.quad)
    _write_csv(out / "trace.csv", ["r", "H", "I", "N", "valid"], tr.to_rows())
    _sidecar(out / "trace.json", cfg, label, {"alpha": tr.alpha, "M": tr.M}, bool(np.all(tr.valid)), [])
    return True


def cmd_monotone(cfg: ExperimentConfig, out: Path) -> bool:
    u, coeff, V, domain, z0, label = load_case(cfg)
    tr = frequency_trace(u, coeff, V, domain, z0, radii_from_spec(cfg.radii), cfg.alpha, cfg.quad)
    rep = fit_monotonicity(tr)
    adj = tr.adjusted(rep.C1, rep.C2)
    rows = [row + (float(a),) for row, a in zip(tr.to_rows(), adj)]
    _write_csv(out / "monotone.csv", ["r", "H", "I", "N", "valid", "adjusted"], rows)
    consts = {"C1": rep.C1, "C2": rep.C2, "max_violation": rep.max_violation, "slack": rep.slack, "alpha": tr.alpha}
    _sidecar(out / "monotone.json", cfg, label, consts, rep.passed, [])
    return rep.passed


def cmd_three_sphere(cfg: ExperimentConfig, out: Path) -> bool:
    u, coeff, V, domain, z0, label = load_case(cfg)
    rows, wit, ok = [], [], True
    for r1, r2, r3 in cfg.triples:
        for kind, fn in (("H", three_sphere_H), ("sup", three_sphere_sup)):
            rep = fn(u, coeff, V, domain, z0, r1, r2, r3, cfg.alpha, cfg.quad)
            rows.append((r1, r2, r3, kind, rep.alpha_exp, rep.beta_exp, rep.exponent_sum, rep.lhs, rep.rhs, rep.passed))
            wit.append({"kind": kind, "radii": [r1, r2, r3], "constants": rep.constants, "values": rep.witnesses})
            ok &= rep.passed
    _write_csv(out / "three_sphere.csv",
               ["r1", "r2", "r3", "kind", "alpha_exp", "beta_exp", "exponent_sum", "lhs", "rhs", "pass"], rows)
    _sidecar(out / "three_sphere.json", cfg, label, {}, ok, wit)
    return ok


def cmd_order(cfg: ExperimentConfig, out: Path) -> bool:
    if cfg.family:
        try:
            fam = [catalog(name) for name in cfg.family]
        except DomainError as exc:
            raise ConfigError(str(exc)) from exc
        scan = order_vs_M_scan(fam, cfg.q_max, cfg.r0, cfg.quad)
        rows = [(r.kappa, r.M, r.sqrtM, r.fitted_order, r.ratio) for r in scan["rows"]]
        _write_csv(out / "order.csv", ["kappa", "M", "sqrtM", "fitted_order", "ratio"], rows)
        _sidecar(out / "order.json", cfg, "family", {"max_ratio": scan["max_ratio"]}, scan["bounded_by_one"],
                 [asdict(r) for r in scan["rows"]])
        return scan["bounded_by_one"]
    u, coeff, V, domain, z0, label = load_case(cfg)
    r0 = cfg.r0
    if r0 is None and not hasattr(domain, "R0_effective"):
        r0 = field_r0(u)
    est = dyadic_iteration(u, coeff, V, domain, r0, cfg.q_max, z0, cfg.alpha, cfg.quad)
    _write_csv(out / "order.csv", ["q", "radius", "G"], [(q, s, g) for q, (s, g) in enumerate(zip(est.radii, est.G))])
    consts = {"fitted_order": est.fitted_order, "slope": est.slope, "Cbar": est.Cbar, "alpha": est.alpha,
              "predicted_bound": est.predicted_bound, "K0": est.K0, "fit_residual": est.residual}
    _sidecar(out / "order.json", cfg, label, consts, est.passed, [{"log_ratios": est.log_ratios}])
    return est.passed


def cmd_domain(cfg: ExperimentConfig, out: Path) -> bool:
    domain = DiniDomain.build(chart_from_spec(cfg.chart), cfg.K1)
    coeff = coefficient_from_spec(cfg.coeff)
    R = domain.R0_effective
    rows, ok = [], True
    r = R
    while r >= max(domain.smallest_sampled_radius * 4, R * 2.0**-40):
        sm = star_shape_margin(domain, r)
        gv, gp = generalized_star_margin(domain, coeff, r)
        rows.append((r, float(lambda_of(domain, r)), sm.lo, sm.hi, sm.passed, gv, gp))
        ok &= sm.passed and gp
        r /= 2
    _write_csv(out / "domain.csv", ["r", "Lambda", "star_lo", "star_hi", "star_pass", "generalized_min",
                                    "generalized_pass"], rows)
    consts = {"R0_effective": R, "binding": domain.binding, "K1": cfg.K1}
    _sidecar(out / "domain.json", cfg, domain.chart.name, consts, ok, [])
    return ok


def cmd_ledger(cfg: ExperimentConfig, out: Path) -> bool:
    led = constants_ledger(2, cfg.lam, cfg.K, seed=cfg.seed, strict=False)
    rows = []
    for ch, chk in zip(led.chains, led.chain_checks):
        rows.append((ch.r, ch.Lambda, ch.a, ch.r1, ch.r2, ch.r3, all(chk.values())))
    _write_csv(out / "ledger.csv", ["r", "Lambda", "a", "r1", "r2", "r3", "pass"], rows)
    d = led.to_dict()
    consts = {k: d[k] for k in ("K1", "K2", "k", "Lambda_cap", "R0_effective", "c1", "c2_rs", "c3", "c4", "c2",
                                "C_tilde", "f_zero", "f_max", "K0", "K0_tail")}
    _sidecar(out / "ledger.json", cfg, f"lam={cfg.lam:g},K={cfg.K:g}", consts, led.passed,
             [{"checks": c} for c in led.chain_checks] + [{"provenance": led.provenance}])
    return led.passed


def cmd_solve(cfg: ExperimentConfig, out: Path) -> bool:
    if cfg.solve is None:
        raise ConfigError("solve needs a 'solve' section")
    u, coeff, V, domain, _ = _solve_case(cfg)
    grid = u.meta["grid"]
    write_grid_field(out / "solve_grid.json", grid)
    hist = grid.residual_history
    _write_csv(out / "solve.csv", ["iteration", "residual"], list(enumerate(hist)))
    consts = {"h": grid.h, "nx": len(grid.x1) - 1, "ny": len(grid.t) - 1, "R0_effective": domain.R0_effective,
              "iterations": len(hist)}
    _sidecar(out / "solve.json", cfg, "fd_solve", consts, True, [])
    return True


COMMANDS = {"trace": cmd_trace, "monotone": cmd_monotone, "three-sphere": cmd_three_sphere, "order": cmd_order,
            "domain": cmd_domain, "ledger": cmd_ledger, "solve": cmd_solve}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="dinifreq", description=__doc__)
    p.add_argument("command", choices=sorted(COMMANDS))
    p.add_argument("--config", type=Path, help="JSON config (a previous sidecar also works)")
    p.add_argument("--case", help="catalog name, overrides the config")
    p.add_argument("--out", type=Path, help="output directory")
    p.add_argument("--seed", type=int)
    p.add_argument("--angular", type=int)
    p.add_argument("--radial", type=int)
    p.add_argument("--tol", type=float)
    return p


def resolve_config(args) -> ExperimentConfig:
    blob = {}
    if args.config is not None:
        try:
            blob = json.loads(Path(args.config).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config: {exc}") from exc
    try:
        cfg = ExperimentConfig.from_dict(blob)
    except TypeError as exc:
        raise ConfigError(str(exc)) from exc
    for name in ("case", "seed", "angular", "radial", "tol"):
        v = getattr(args, name)
        if v is not None:
            setattr(cfg, name, v)
    if args.out is not None:
        cfg.out = str(args.out)
    return cfg


def _fail(code: int, kind: str, exc: Exception) -> int:
    sys.stderr.write(json.dumps({"error": kind, "type": type(exc).__name__, "message": str(exc)}) + "\n")
    return code


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = resolve_config(args)
        out = Path(cfg.out)
        out.mkdir(parents=True, exist_ok=True)
        ok = COMMANDS[args.command](cfg, out)
    except (ConfigError, DomainError, KeyError) as exc:
        return _fail(EXIT_CONFIG, "config", exc)
    except (NumericalError, FloatingPointError, np.linalg.LinAlgError) as exc:
        return _fail(EXIT_NUMERIC, "numeric", exc)
    print(f"{args.command}: {'PASS' if ok else 'FAIL'} -> {out}")
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
