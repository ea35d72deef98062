"""Command-line interface: ``skruin {outage,budget,ultimate,moments}``.

Exit status is 0 when every computation met its internal tolerance, 1 for
invalid input or configuration, and 2 when a tolerance check failed (a
diagnostics block is printed to stderr).
"""

from __future__ import annotations

import argparse
import csv
import io
import logging
import math
import sys
from dataclasses import dataclass, field

import numpy as np

from . import bounds, channels, config, latency, montecarlo, net_usage, ultimate
from .channels import LinkPair
from .errors import ConfigurationError, GridRangeError, NumericalError, PreconditionError, SkruinError
from .finite_time import GridSpec, solve_survival
from .net_usage import SchemeSpec

EXIT_OK = 0
EXIT_INPUT = 1
EXIT_TOLERANCE = 2
MC_Z = 3.0

log = logging.getLogger("skruin")


@dataclass
class Diagnostics:
    lines: list[str] = field(default_factory=list)
    failed: bool = False

    def note(self, msg: str):
        self.lines.append(msg)

    def fail(self, msg: str):
        self.failed = True
        self.lines.append("FAIL " + msg)


class _Parser(argparse.ArgumentParser):
    # exit status 2 is reserved for tolerance failures
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INPUT, f"{self.prog}: error: {message}\n")


# -- config helpers -------------------------------------------------------------


def _link(cfg: config.ExperimentConfig) -> LinkPair:
    return LinkPair.from_db(cfg.link.main_db, cfg.link.eve_db, cfg.link.tx_db)


def _schemes(cfg: config.ExperimentConfig) -> list[SchemeSpec]:
    if cfg.scheme.kind == "deterministic":
        return [SchemeSpec.deterministic()]
    return [SchemeSpec.random_tx(p) for p in cfg.scheme.p]


def _grid(cfg: config.ExperimentConfig, t_max: int | None = None) -> GridSpec:
    g = cfg.grid
    return GridSpec(g.b_min, g.b_max, g.step, t_max or g.t_max)


def validate(cfg: config.ExperimentConfig, command: str):
    """Check every value the command will use before any computation starts."""
    def bad(msg):
        raise ConfigurationError(f"{cfg.source}: {msg}")

    for name in ("main_db", "eve_db", "tx_db"):
        v = getattr(cfg.link, name)
        if v is not None and not math.isfinite(v):
            bad(f"link.{name} must be finite")
    kind = cfg.scheme.kind
    if kind not in ("deterministic", "random"):
        bad(f"scheme.kind must be 'deterministic' or 'random', got {kind!r}")
    if kind == "random":
        if not cfg.scheme.p:
            bad("scheme.p is required for kind = 'random'")
        if any(not 0.0 <= p <= 1.0 for p in cfg.scheme.p):
            bad("scheme.p values must lie in [0, 1]")
    elif cfg.scheme.p:
        bad("scheme.p only applies to kind = 'random'")
    try:
        format(1.5, cfg.output.float_format)
    except ValueError:
        bad(f"output.float_format {cfg.output.float_format!r} is not a valid float format")
    if cfg.mc.trials < 1:
        bad("mc.trials must be at least 1")
    if not 0 <= cfg.mc.seed < 2**64:
        bad("mc.seed must lie in [0, 2**64)")

    t = cfg.targets
    if command in ("outage", "budget"):
        try:
            grid = _grid(cfg)
        except SkruinError as exc:
            bad(f"grid: {exc}")
        if len(_schemes(cfg)) != 1:
            bad(f"'{command}' takes a single scheme; give one value of scheme.p")
    if command == "outage":
        if not t.b0:
            bad("targets.b0 is empty")
        if any(not grid.b_min <= b <= grid.b_max for b in t.b0):
            bad(f"targets.b0 must lie within the grid [{grid.b_min}, {grid.b_max}]")
        if any(not 1 <= s <= grid.t_max for s in t.t):
            bad(f"targets.t must lie in 1..{grid.t_max}")
    elif command == "budget":
        if not t.tau or not t.epsilon:
            bad("targets.tau and targets.epsilon must both be non-empty")
        if any(not 1 <= s <= grid.t_max for s in t.tau):
            bad(f"targets.tau must lie in 1..{grid.t_max}")
        if any(not 0 < e < 1 for e in t.epsilon):
            bad("targets.epsilon values must lie in (0, 1)")
    elif command == "ultimate":
        if not t.b0:
            bad("targets.b0 is empty")
        if any(b < 0 for b in t.b0):
            bad("targets.b0 must be nonnegative")
        if cfg.mc.horizon < 1:
            bad("mc.horizon must be at least 1")
        if not cfg.nystrom.node_step > 0:
            bad("nystrom.node_step must be positive")
        if cfg.nystrom.s_max is not None and not cfg.nystrom.s_max > 0:
            bad("nystrom.s_max must be positive")
    if not cfg.grid.step > 0:
        bad("grid.step must be positive")


# -- output -----------------------------------------------------------------------


def _fmt(cfg, v) -> str:
    if v is None or (isinstance(v, float) and math.isnan(v)):
        return "nan"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return format(float(v), cfg.output.float_format)


def _write_csv(cfg, header: list[str], rows: list[list], out: str | None):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([_fmt(cfg, v) for v in r])
    text = buf.getvalue()
    if out is None or out == "-":
        sys.stdout.write(text)
    else:
        with open(out, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)


def mc_agrees(p_mc: float, p_ref: float, trials: int, z: float = MC_Z) -> tuple[bool, float]:
    """Binomial agreement test ``|p_mc - p_ref| <= z SE``.

    The standard error uses the larger of the two Bernoulli variances, so an
    estimate of exactly 0 or 1 is still tested against the reference
    value; ``0.5 / trials`` accounts for the discreteness of the count.
    """
    var = max(p_mc * (1 - p_mc), p_ref * (1 - p_ref))
    se = math.sqrt(var / trials)
    return abs(p_mc - p_ref) <= z * se + 0.5 / trials, se


# -- commands -----------------------------------------------------------------


def cmd_outage(cfg, out, diag: Diagnostics):
    link = _link(cfg)
    scheme = _schemes(cfg)[0]
    dist = net_usage.build_net_usage(link, scheme, cfg.grid.step)
    surface = solve_survival(dist, _grid(cfg))
    diag.note(f"solver max clamp {surface.max_clamp:.2e}")
    ts = cfg.targets.t or list(range(1, cfg.grid.t_max + 1))
    stats = None
    if cfg.mc.enabled:
        stats = montecarlo.simulate_outage_many(link, scheme, cfg.targets.b0, max(ts), cfg.mc.trials, cfg.mc.seed)
    rows = []
    worst = 0.0
    for j, b0 in enumerate(cfg.targets.b0):
        for t in ts:
            ps = surface.outage(t, b0)
            pm = se = float("nan")
            if stats is not None:
                pm = float(stats[j].outage_by_t[t])
                se = float(stats[j].se_by_t[t])
                ok, se_test = mc_agrees(pm, ps, cfg.mc.trials)
                if se_test > 0:
                    worst = max(worst, abs(pm - ps) / se_test)
                if not ok:
                    diag.fail(f"t={t} b0={b0:g}: solver {ps:.6g} vs MC {pm:.6g} (SE {se_test:.2g})")
            rows.append([t, b0, ps, pm, se])
    if stats is not None:
        diag.note(f"largest |solver - MC| / SE = {worst:.2f} (limit {MC_Z:g})")
    _write_csv(cfg, ["t", "b0", "psi_solver", "psi_mc", "psi_mc_se"], rows, out)


def cmd_budget(cfg, out, diag: Diagnostics):
    link = _link(cfg)
    scheme = _schemes(cfg)[0]
    dist = net_usage.build_net_usage(link, scheme, cfg.grid.step)
    surface = solve_survival(dist, _grid(cfg, max(cfg.targets.tau)))
    rows = []
    for tau in cfg.targets.tau:
        for eps in cfg.targets.epsilon:
            rep = latency.latency_report(surface, link, tau, eps)
            rows.append([eps, tau, rep.required_budget, rep.mean_latency_slots])
            diag.note(
                f"tau={tau} eps={eps:g}: b0={rep.required_budget:.4f} bit, mean latency "
                f"{rep.mean_latency_realizations:.3f} realizations = {rep.mean_latency_slots:.3f} slots"
            )
    _write_csv(cfg, ["epsilon", "tau", "b0_required", "mean_latency_slots"], rows, out)


def cmd_ultimate(cfg, out, diag: Diagnostics):
    link = _link(cfg)
    b0s = np.asarray(cfg.targets.b0, dtype=float)
    rows = []
    for scheme in _schemes(cfg):
        p = scheme.tx_prob if scheme.is_random else float("nan")
        dist = net_usage.build_net_usage(link, scheme, cfg.grid.step)
        curve = ultimate.solve_ultimate_ruin(dist, s_max=cfg.nystrom.s_max, node_step=cfg.nystrom.node_step)
        psi = np.atleast_1d(curve.evaluate(b0s))
        if curve.certain:
            bound = np.ones_like(b0s)
            diag.note(f"p={p:g}: E[Z] >= 0, ruin is certain; the bound column is the trivial 1")
        elif curve.r_star is None:
            bound = np.where(b0s > 0, 0.0, 1.0)
        else:
            bound = np.atleast_1d(bounds.lundberg_bound(curve.r_star, b0s))
            diag.note(f"p={p:g}: r* = {curve.r_star:.6g}, condition ~ {curve.condition:.2e}")
        mc = [None] * b0s.size
        if cfg.mc.enabled and scheme.is_random:
            stats = montecarlo.simulate_outage_many(link, scheme, b0s, cfg.mc.horizon, cfg.mc.trials, cfg.mc.seed)
            mc = [(float(s.outage_by_t[-1]), float(s.se_by_t[-1])) for s in stats]
        for i, b0 in enumerate(b0s):
            if bound[i] < psi[i] - 1e-12:
                diag.fail(f"p={p:g} b0={b0:g}: Lundberg bound {bound[i]:.6g} below psi {psi[i]:.6g}")
            pm = float("nan")
            if mc[i] is not None:
                pm = mc[i][0]
                se = math.sqrt(max(pm * (1 - pm), psi[i] * (1 - psi[i])) / cfg.mc.trials)
                # the finite-horizon estimate can only undershoot the ultimate value
                if pm > psi[i] + MC_Z * se + 0.5 / cfg.mc.trials:
                    diag.fail(f"p={p:g} b0={b0:g}: MC at t={cfg.mc.horizon} {pm:.6g} exceeds psi {psi[i]:.6g}")
                elif abs(pm - psi[i]) > MC_Z * se + 0.5 / cfg.mc.trials:
                    diag.note(f"p={p:g} b0={b0:g}: MC at t={cfg.mc.horizon} is {psi[i] - pm:.4g} below psi "
                              "(horizon too short to reach the ultimate value)")
            rows.append([b0, p, psi[i], pm, bound[i]])
    _write_csv(cfg, ["b0", "p", "psi_nystrom", "psi_mc_150", "lundberg_bound"], rows, out)


def moments_table(cfg) -> list[tuple[str, str]]:
    link = _link(cfg)
    e_th = channels.rate_moment("skg", link, 1).value
    e_xi = channels.rate_moment("tx", link, 1).value
    m2_th = channels.rate_moment("skg", link, 2).value
    m2_xi = channels.rate_moment("tx", link, 2).value
    table = [("E[theta] (bit)", f"{e_th:.6f}"), ("E[xi] (bit)", f"{e_xi:.6f}"),
             ("p_crit", f"{net_usage.critical_tx_prob(link):.6f}")]
    for scheme in _schemes(cfg):
        if scheme.is_random:
            p = scheme.tx_prob
            tag = f" [p={p:g}]"
            mean = p * e_xi - (1 - p) * e_th
            var = p * m2_xi + (1 - p) * m2_th - mean * mean
        else:
            tag = " [deterministic]"
            mean = e_xi - e_th
            var = (m2_xi - e_xi**2) + (m2_th - e_th**2)
        table += [("E[Z] (bit)" + tag, f"{mean:.6f}"), ("Var(Z) (bit^2)" + tag, f"{var:.6f}")]
        if mean >= 0:
            table.append(("r*" + tag, "n/a (E[Z] >= 0: ruin is certain, no adjustment coefficient)"))
            continue
        try:
            coef = bounds.adjustment_coefficient(net_usage.build_net_usage(link, scheme, cfg.grid.step))
            table.append(("r* (1/bit)" + tag, f"{coef.r_star:.6f}"))
        except PreconditionError as exc:
            table.append(("r*" + tag, f"n/a ({exc})"))
    return table


def cmd_moments(cfg, out, diag: Diagnostics):
    table = moments_table(cfg)
    width = max(len(k) for k, _ in table)
    text = "".join(f"{k:<{width}}  {v}\n" for k, v in table)
    if out is None or out == "-":
        sys.stdout.write(text)
    else:
        with open(out, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)


COMMANDS = {
    "outage": (cmd_outage, "finite-horizon outage probability: solver and Monte Carlo"),
    "budget": (cmd_budget, "required initial budget and mean recharge latency"),
    "ultimate": (cmd_ultimate, "ultimate ruin probability under random transmission"),
    "moments": (cmd_moments, "rate moments, critical probability and adjustment coefficient"),
}


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="skruin", description="Secret-key budget outage analysis.")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("-v", "--verbose", action="count", default=0,
                        help="print the diagnostics block even on success (-vv adds debug logging)")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for name, (_, help_text) in COMMANDS.items():
        p = sub.add_parser(name, help=help_text, description=help_text, parents=[common])
        p.add_argument("--config", help=f"TOML file or bundled name ({', '.join(config.BUNDLED)})")
        p.add_argument("--out", help="output file ('-' for stdout); CSV commands default to output.path")
        p.add_argument("--seed", type=int, help="override mc.seed")
        p.add_argument("--trials", type=int, help="override mc.trials")
        p.add_argument("--set", dest="overrides", action="append", default=[], metavar="SECTION.KEY=VALUE",
                       help="override one config value (repeatable)")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2), format="%(name)s: %(message)s")
    fn = COMMANDS[args.command][0]
    try:
        cfg = config.load(args.config)
        for item in args.overrides:
            config.apply_override(cfg, item)
        if args.seed is not None:
            config.apply_override(cfg, f"mc.seed={args.seed}")
        if args.trials is not None:
            config.apply_override(cfg, f"mc.trials={args.trials}")
        validate(cfg, args.command)
    except (ConfigurationError, SkruinError) as exc:
        print(f"skruin: error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    out = args.out
    if out is None and args.command != "moments":
        out = cfg.output.path
    diag = Diagnostics()
    try:
        fn(cfg, out, diag)
    except GridRangeError as exc:
        print(f"skruin: error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except NumericalError as exc:
        diag.fail(str(exc))
    except OSError as exc:
        print(f"skruin: error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    if diag.failed or args.verbose:
        print("-- diagnostics --", file=sys.stderr)
        for line in diag.lines:
            print(line, file=sys.stderr)
    return EXIT_TOLERANCE if diag.failed else EXIT_OK


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
