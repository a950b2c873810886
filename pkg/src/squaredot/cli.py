"""Command-line front end.

    squaredot spectrum|density|dynamics|noise|protocol|table [--config F] [--seed S]
              [--out DIR] [--format csv|json] [--set key.path=value ...]

Exit codes: 0 success, 2 configuration error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import math
import os
import sys

import numpy as np

from . import config as cfgmod
from . import effective as eff
from . import io
from . import noise as nz
from . import protocol as proto
from . import reference
from .basis import Geometry, Material
from .ci import EffectiveParams, charge_density, gated_initial_state, solve_dot
from .errors import (AlignmentFailure, ConvergenceFailure, IntegratorFailure,
                     ManifoldInvalid, ResourceLimit, SolverFailure)

NUMERICAL = (ConvergenceFailure, SolverFailure, IntegratorFailure, ManifoldInvalid,
             AlignmentFailure, ResourceLimit, np.linalg.LinAlgError)
COMMANDS = ("spectrum", "density", "dynamics", "noise", "protocol", "table")


def _geometry(cfg, L=None):
    return Geometry(cfg.geometry.side_length if L is None else L, cfg.geometry.corner_fraction)


def _material(cfg):
    m = cfg.material
    kw = {} if m.coulomb else {"coulomb_prefactor": 0.0}
    return Material(m.effective_mass_ratio, m.dielectric_constant, **kw)


def _params(cfg) -> EffectiveParams:
    p = cfg.params
    if p.params_file:
        d = io.read_params(p.params_file)
        return EffectiveParams.from_delta_j(float(d["Delta"]), float(d["J"]), float(d.get("E0", 0.0)))
    if p.Delta is None or p.J is None:
        raise cfgmod.ConfigError("params.Delta and params.J (or params.params_file) are required")
    return EffectiveParams.from_delta_j(float(p.Delta), float(p.J), float(p.E0))


def _time_grid(cfg, params):
    tc = cfg.time
    t_max = tc.t_max_ps if tc.t_max_ps is not None else tc.t_max_over_tstar * eff.t_star(params)
    return np.linspace(0.0, t_max, tc.n_points)


class Run:
    def __init__(self, cfg):
        self.cfg = cfg
        self.hash = cfgmod.config_hash(cfg)
        self.cdict = cfgmod.to_dict(cfg)
        self.written = []

    def table(self, stem, columns, rows):
        self.written.append(io.write_table(self.cfg.out, stem, columns, rows, self.cfg.format,
                                           self.hash, self.cdict))

    def json(self, stem, payload):
        path = os.path.join(self.cfg.out, stem + ".json")
        io.write_json(path, payload, self.hash, self.cdict)
        self.written.append(path)


def cmd_spectrum(run: Run):
    cfg = run.cfg
    sol = solve_dot(_geometry(cfg), _material(cfg), cfg.basis.n_max, cfg.basis.k_per_block,
                    check_convergence=True)
    rows = []
    for spec in (sol.singlets, sol.triplets):
        for i, e in enumerate(spec.eigenvalues):
            px, py = spec.parity[i]
            rows.append((spec.sector, i, float(e), int(px), int(py), int(spec.diagonal_parity[i])))
    run.table("spectrum", ("sector", "index", "energy_meV", "px", "py", "diag_parity"), rows)
    run.json("params", {"params": sol.params.to_dict(), "convergence": sol.convergence,
                        "t_star_ps": eff.t_star(sol.params)})


def cmd_density(run: Run):
    cfg = run.cfg
    geo = _geometry(cfg)
    sol = solve_dot(geo, _material(cfg), cfg.basis.n_max, cfg.basis.k_per_block)
    grid = charge_density(sol.singlets, cfg.density.state_index, geo, cfg.density.resolution)
    X, Y = np.meshgrid(grid.xs, grid.ys, indexing="ij")
    rows = [(float(x), float(y), float(v)) for x, y, v in zip(X.ravel(), Y.ravel(), grid.values.ravel())]
    run.table("density", ("x_nm", "y_nm", "density_per_nm2"), rows)
    maxima = grid.local_maxima()
    run.json("density_summary", {"corner_fraction": grid.corner_fraction(geo.L),
                                 "local_maxima": [[float(x), float(y)] for x, y in maxima],
                                 "n_maxima": len(maxima), "total": grid.total})


def cmd_dynamics(run: Run):
    cfg = run.cfg
    params = _params(cfg)
    t = _time_grid(cfg, params)
    gated = None
    if cfg.params.alpha is not None:
        gated = (cfg.params.alpha, cfg.params.beta or 0.0)
    ps = eff.p_singlet(t, params)
    pi = eff.p_initial(t, params)
    pg = eff.p_singlet_gated(t, gated, params) if gated else np.full_like(t, float("nan"))
    run.table("dynamics", ("t_ps", "p_singlet", "p_initial", "p_singlet_gated"),
              list(zip(t.tolist(), ps.tolist(), pi.tolist(), pg.tolist())))
    summary = {"params": params.to_dict(), "t_star_ps": eff.t_star(params),
               "p_singlet_at_t_star": float(eff.p_singlet(eff.t_star(params), params))}
    if gated:
        v, tm = eff.gated_first_maximum(gated, params)
        summary["gated_first_max"] = {"value": v, "t_ps": tm}
    run.json("dynamics_summary", summary)


def _noise_config(cfg, **over):
    n = cfg.noise
    kw = dict(E_hf=n.E_hf, dephasing_rate=n.dephasing_rate, samples=n.samples, seed=cfg.seed,
              variance_mode=n.variance_mode, dephasing_operator=n.dephasing_operator)
    kw.update(over)
    return nz.NoiseConfig(**kw)


def cmd_noise(run: Run):
    cfg = run.cfg
    params = _params(cfg)
    ncfg = _noise_config(cfg)
    t = _time_grid(cfg, params)
    curve = nz.ensemble_filter_curve(params, ncfg, t)
    run.table("noise_curve", ("t_ps", "p_mean", "p_stderr"),
              list(zip(t.tolist(), curve.mean.tolist(), curve.stderr.tolist())))
    rec = nz.repeat_until_success(params, ncfg, cfg.noise.input, cfg.noise.rounds)
    summary = {"params": params.to_dict(), "t_star_ps": eff.t_star(params),
               "first_max": {"value": curve.first_max_value, "t_ps": curve.first_max_time},
               "repeat_until_success": {
                   "input": rec.input, "conditional_detection": rec.conditional_detection,
                   "round_detection": rec.round_detection, "cumulative_miss": rec.cumulative_miss,
                   "false_positive": rec.false_positive}}
    if ncfg.E_hf > 0:
        fit = nz.hyperfine_coherence(ncfg)
        summary["coherence"] = {"tau_ps": fit.tau, "decay_time_ps": fit.decay_time,
                                "expected_ps": fit.expected}
    run.json("noise_summary", summary)


def cmd_protocol(run: Run):
    cfg = run.cfg
    p = cfg.protocol
    povm = nz.PovmSummary(p.p_ss, p.p_ts)
    cc = proto.ChainConfig(n_dots=p.n_dots, trials=p.trials, mode=p.mode, dot_povm=povm,
                           seed=cfg.seed, confidence=p.confidence)
    stats = proto.estimate_success_prob(cc)
    out = {"statistics": stats}
    if p.mode == "swap":
        rho, rate = proto.postselected_terminal_state(p.n_dots, povm) if p.n_dots <= 6 else (None, None)
        if rho is not None:
            out["exact"] = {"rate": rate, "terminal_fidelity": proto.singlet_fidelity(rho)}
    else:
        res = proto.run_aklt_chain(proto.ChainConfig(n_dots=p.n_dots, trials=1, mode="aklt"))
        out["exact"] = {"branch_probability": res.branch_probability, "aklt_energy": res.energy}
    run.json("protocol", out)


def cmd_table(run: Run):
    cfg = run.cfg
    mat = _material(cfg)
    rows = []
    for L in cfg.table.lengths:
        ref = next((r for r in reference.TABLE if r.L == float(L)), None)
        cells = {"L_nm": float(L)}
        try:
            sol = solve_dot(_geometry(cfg, float(L)), mat, cfg.basis.n_max, cfg.basis.k_per_block,
                            check_convergence=True)
            cells.update(Delta=sol.params.Delta, J=sol.params.J, tag_params="computed",
                         converged=sol.convergence.get("converged"))
            if cfg.table.gated:
                g = gated_initial_state(cfg.table.gate_potential, sol)
                cells.update(alpha_sq=g.alpha**2, beta_sq=g.beta**2, tag_gate="computed")
        except NUMERICAL:
            if ref is None:
                raise
            cells.update(Delta=ref.Delta, J=ref.J, tag_params="input", converged=False)
        if "alpha_sq" not in cells:
            cells.update(alpha_sq=ref.alpha_sq if ref else float("nan"),
                         beta_sq=ref.beta_sq if ref else float("nan"),
                         tag_gate="input" if ref else "missing")
        cells.update(E_hf_ueV=ref.E_hf if ref else float("nan"),
                     tag_E_hf="input" if ref else "missing")
        rows.append(cells)
    cols = ("L_nm", "Delta", "J", "alpha_sq", "beta_sq", "E_hf_ueV",
            "tag_params", "tag_gate", "tag_E_hf", "converged")
    run.table("table", cols, [tuple(r[c] for c in cols) for r in rows])


HANDLERS = {"spectrum": cmd_spectrum, "density": cmd_density, "dynamics": cmd_dynamics,
            "noise": cmd_noise, "protocol": cmd_protocol, "table": cmd_table}


def build_parser():
    ap = argparse.ArgumentParser(prog="squaredot", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sp = sub.add_parser(name)
        sp.add_argument("--config")
        sp.add_argument("--seed", type=int)
        sp.add_argument("--out")
        sp.add_argument("--format", choices=("csv", "json"))
        sp.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                        help="override a config entry, e.g. geometry.side_length=200")
    return ap


def resolve_config(args):
    cfg = cfgmod.load(args.config)
    for item in args.set:
        key, sep, value = item.partition("=")
        if not sep:
            raise cfgmod.ConfigError(f"--set expects KEY=VALUE, got {item!r}")
        cfg = cfgmod.apply_override(cfg, key.strip(), value)
    for key in ("seed", "out", "format"):
        v = getattr(args, key)
        if v is not None:
            cfg = cfgmod.apply_override(cfg, key, v)
    return cfgmod.validate(cfg)


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 2 if exc.code else 0
    try:
        cfg = resolve_config(args)
        run = Run(cfg)
        HANDLERS[args.command](run)
    except cfgmod.ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (TypeError, ValueError) as exc:
        if isinstance(exc, NUMERICAL):
            print(f"numerical failure: {exc}", file=sys.stderr)
            return 3
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except NUMERICAL as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3
    for path in run.written:
        print(path)
    return 0


if __name__ == "__main__":
    sys.exit(main())
