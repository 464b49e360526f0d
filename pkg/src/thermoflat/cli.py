"""Command-line front end: model ingestion, solver orchestration, reports.

Exit codes: 0 success, 2 model/flag validation failure, 3 solver failure.
All reports are deterministic (sorted keys, repr-exact floats) and echo the
full effective configuration.
"""

import argparse
import csv
import io
import sys

import numpy as np

from . import linearizer, modelio, oracle, transport
from .config import RunConfig
from .measures import entropy_rate
from .ruelle import build_transfer, normalization_residual, rpf_solve


def _build_parser():
    parser = argparse.ArgumentParser(
        prog="thermoflat",
        description="nonlinear topological pressure via max-min linearization",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name in ("pressure", "solve", "game", "transport", "delta", "oracle",
                 "report"):
        p = sub.add_parser(name)
        p.add_argument("model", help="model JSON file (schema thermoflat/1)")
        p.add_argument("--tol", type=float, default=None)
        p.add_argument("--sc-tol", type=float, default=None)
        p.add_argument("--grid", type=int, default=None)
        p.add_argument("--multistart", type=int, default=None)
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--radius-plus", type=float, default=None)
        p.add_argument("--radius-minus", type=float, default=None)
        p.add_argument("--out", type=str, default=None)
        if name == "delta":
            p.add_argument("--measure", type=str, default=None,
                           help="named entry under \"measures\" in the model file")
            p.add_argument("--birkhoff-n", type=int, default=0,
                           help="also evaluate the finite-n approximant")
    return parser


def _effective_config(args, doc):
    """File-level config section, overridden by command-line flags."""
    base = dict(doc.get("config", {}))
    overrides = {
        "tol": args.tol,
        "sc_tol": args.sc_tol,
        "grid": args.grid,
        "multistart_cap": args.multistart,
        "seed": args.seed,
        "radius_plus": args.radius_plus,
        "radius_minus": args.radius_minus,
        "out": args.out,
    }
    for key, val in overrides.items():
        if val is not None:
            base[key] = val
    allowed = set(RunConfig().__dict__)
    unknown = set(base) - allowed
    if unknown:
        raise ValueError(f"unknown config keys: {sorted(unknown)}")
    return RunConfig(**base)


def _serialize_solution(sol):
    out = {
        "p_flat": sol.p_flat,
        "p_sharp": sol.p_sharp,
        "gap": sol.gap,
        "m_flat": [list(x.coords) for x in sol.m_flat],
        "m_flat_of": [
            {"x_plus": list(k), "minimizers": [list(m.coords) for m in v]}
            for k, v in sorted(sol.m_flat_of.items())
        ],
        "m_sharp": [list(x.coords) for x in sol.m_sharp],
        "m_sharp_of": [
            {"x_minus": list(k), "maximizers": [list(m.coords) for m in v]}
            for k, v in sorted(sol.m_sharp_of.items())
        ],
        "growth_radii": list(sol.growth_radii),
        "equilibria": [
            {
                "x_plus": list(e.x_plus),
                "x_minus": list(e.x_minus),
                "residual_plus": e.residual_plus,
                "residual_minus": e.residual_minus,
                "p_value": e.p_value,
                "measure": modelio.serialize_measure(e.measure),
            }
            for e in sol.equilibria
        ],
        "diagnostics": sol.diagnostics,
    }
    return out


def cmd_pressure(model, doc, cfg):
    entries = []
    for side, pots in (("plus", model.plus_potentials),
                       ("minus", model.minus_potentials)):
        for i, phi in enumerate(pots):
            rpf = rpf_solve(build_transfer(phi))
            entries.append({
                "side": side,
                "index": i,
                "name": phi.name,
                "p_l": rpf.log_lambda,
                "eigenfunction": rpf.h.tolist(),
                "eigenmeasure": rpf.nu.tolist(),
                "normalization_residual": normalization_residual(rpf),
                "gibbs_entropy": entropy_rate(rpf.gibbs),
            })
    return {"potentials": entries}


def _scan_csv(model, cfg, sol):
    """(y+, P_flat(y+)) samples for 1-dimensional plus duals."""
    if model.g_plus is None or model.n_plus != 1:
        return None
    radius = sol.growth_radii[0]
    buf = io.StringIO()
    writer = csv.writer(buf)
    writer.writerow(["y_plus", "p_flat_of"])
    for t in np.linspace(-radius, radius, 201):
        v, _ = linearizer.p_flat_of(model, np.array([t]), config=cfg)
        writer.writerow([repr(float(t)), repr(float(v))])
    return buf.getvalue()


def cmd_solve(model, doc, cfg):
    sol = linearizer.solve_flat(model, cfg)
    report = _serialize_solution(sol)
    report["scan_csv"] = _scan_csv(model, cfg, sol)
    return report


def cmd_game(model, doc, cfg):
    sol = linearizer.solve_game(model, cfg)
    return _serialize_solution(sol)


def cmd_transport(model, doc, cfg):
    if "transport" in doc:
        rows = modelio.parse_dual_measure(doc["transport"]["rows"])
        cols = modelio.parse_dual_measure(doc["transport"]["cols"])
        sol = linearizer.solve_flat(model, cfg)
    else:
        # default instance: uniform weights on the solved optimizer pairs
        sol = linearizer.solve_flat(model, cfg)
        pairs = [(e.x_plus, e.x_minus) for e in sol.equilibria]
        if not pairs:
            raise ArithmeticError("no optimizer pairs available for transport")
        n = len(pairs)
        rows = transport.DiscreteDualMeasure(
            tuple(p for p, _ in pairs), (1.0 / n,) * n
        )
        cols = transport.DiscreteDualMeasure(
            tuple(m for _, m in pairs), (1.0 / n,) * n
        )
    value, coupling = transport.kantorovich_primal(model, rows, cols)
    dual = transport.kantorovich_dual_check(
        model, rows, cols, value, p_flat=sol.p_flat
    )
    return {
        "value": value,
        "p_flat": sol.p_flat,
        "coupling": coupling.matrix.tolist(),
        "rows": {"points": [list(p) for p in rows.points],
                 "weights": list(rows.weights)},
        "cols": {"points": [list(p) for p in cols.points],
                 "weights": list(cols.weights)},
        "dual_check": dual,
    }


def cmd_delta(model, doc, cfg, args):
    measures = doc.get("measures", {})
    name = args.measure
    if name is None:
        if len(measures) != 1:
            raise ValueError("--measure required when the file defines "
                             f"{len(measures)} measures")
        name = next(iter(measures))
    if name not in measures:
        raise ValueError(f"measure {name!r} not found in model file")
    mu = modelio.parse_measure(model.alphabet, measures[name])
    report = {
        "measure": name,
        "entropy": entropy_rate(mu),
        "f_flat": transport.affine_pressure_flat(model, mu),
        "f_sharp": transport.affine_pressure_sharp(model, mu),
    }
    if model.g_plus is not None:
        report["delta_plus"] = transport.delta_functional(
            model, mu, model.g_plus.value, side="plus")
    if model.g_minus is not None:
        report["delta_minus"] = transport.delta_functional(
            model, mu, model.g_minus.value, side="minus")
    if args.birkhoff_n > 0 and model.g_plus is not None:
        report["delta_plus_birkhoff_n"] = transport.delta_via_birkhoff(
            model.plus_potentials, mu, model.g_plus.value, args.birkhoff_n)
    return report


def cmd_oracle(model, doc, cfg):
    sol = linearizer.solve_flat(model, cfg)
    memory = max(
        [p.memory for p in model.plus_potentials + model.minus_potentials],
        default=1,
    )
    order = 0 if memory <= 1 else 1
    direct, _ = oracle.direct_pressure(model, order=order)
    bkl, _ = oracle.bkl_pressure(model)
    return {
        "p_flat": sol.p_flat,
        "direct": direct,
        "bkl": bkl,
        "max_abs_diff": max(abs(sol.p_flat - direct), abs(sol.p_flat - bkl)),
    }


def cmd_report(model, doc, cfg, args):
    return {
        "label": model.label,
        "pressure": cmd_pressure(model, doc, cfg),
        "game": cmd_game(model, doc, cfg),
        "oracle": cmd_oracle(model, doc, cfg),
    }


def main(argv=None):
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        model, doc = modelio.load_model(args.model)
        cfg = _effective_config(args, doc)
    except (OSError, ValueError, TypeError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    try:
        if args.command == "pressure":
            report = cmd_pressure(model, doc, cfg)
        elif args.command == "solve":
            report = cmd_solve(model, doc, cfg)
        elif args.command == "game":
            report = cmd_game(model, doc, cfg)
        elif args.command == "transport":
            report = cmd_transport(model, doc, cfg)
        elif args.command == "delta":
            report = cmd_delta(model, doc, cfg, args)
        elif args.command == "oracle":
            report = cmd_oracle(model, doc, cfg)
        else:
            report = cmd_report(model, doc, cfg, args)
    except (ValueError, TypeError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except ArithmeticError as exc:
        print(f"solver error: {exc}", file=sys.stderr)
        return 3
    report = {"command": args.command, "config": cfg.to_dict(), **report}
    text = modelio.dumps_report(report)
    if cfg.out:
        with open(cfg.out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return 0


if __name__ == "__main__":
    sys.exit(main())
