"""``momentdet`` command-line front end.

Every command writes one JSON report (stdout, or ``<out>/<command>.json``)
and, with ``--csv``, plot-ready CSV series next to it. Reports carry the
input descriptor, the full configuration snapshot and a version stamp.
Exit status is 0 whenever the analysis completes, whatever the verdicts.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Callable, Dict, List, Optional

from . import __version__
from .bumpforge import AveragingPlan, build_psi, derivative_bounds, witness_from_class
from .config import ConfigError, RunConfig, load_config
from .exact import fmt
from .inputs import (InputError, hint_interval, moment_sequence, multisequence, parse_directions,
                     positive_sequence, tensor_sequence)
from .mp1d import (STIELTJES, MomentError, carleman_check, compact_support_check, hankel_psd,
                   quadrature_from_moments, stieltjes_check)
from .mpmulti import (commutation_residual, gns_build, moment_matrix_psd, multivariate_carleman,
                      qa_vector_norms)
from .qacheck import TruncationError, mandelbrojt_identity_check, verdict_consistency
from .realize import (BudgetError, OrderError, d_bound_check, determining_sequence, determining_verdict,
                      generalized_stieltjes_check, per_direction_sequence)
from .seqcore import WindowError, is_log_convex, log_convex_regularize
from .verdict import Verdict

COND_D_HEADER = ("r", "lnT_over_r2", "cumulative_integral")
SERIES_HEADER = ("index", "term", "cumulative")

# failures of a single check: recorded in the report, the run still completes
CHECK_ERRORS = (MomentError, WindowError, OrderError, BudgetError, TruncationError, ValueError)


@dataclass
class AnalysisReport:
    command: str
    input: Dict[str, Any]
    config: Dict[str, Any]
    window: int
    results: Dict[str, Any]
    version: str = f"momentdet {__version__}"
    csv: Dict[str, str] = field(default_factory=dict)   # file name -> content, not serialized

    def to_dict(self) -> Dict[str, Any]:
        return {"command": self.command, "input": self.input, "config": self.config,
                "window": self.window, "results": self.results, "version": self.version}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2) + "\n"

    @classmethod
    def from_dict(cls, d: Dict[str, Any]) -> "AnalysisReport":
        return cls(d["command"], d["input"], d["config"], d["window"], d["results"], d["version"])

    @classmethod
    def from_json(cls, text: str) -> "AnalysisReport":
        return cls.from_dict(json.loads(text))


def _guard(fn: Callable[[], Any]) -> Any:
    try:
        return fn()
    except CHECK_ERRORS as exc:
        return {"error": f"{type(exc).__name__}: {exc}"}


def _verdict(report: AnalysisReport, name: str, v: Verdict, header=SERIES_HEADER) -> Dict[str, Any]:
    report.csv[f"{name}.csv"] = v.trace_csv(header)
    return v.to_dict()


def _rows_csv(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def _new(args, cfg: RunConfig, desc, N: int) -> AnalysisReport:
    return AnalysisReport(args.command, desc, cfg.to_dict(), N, {})


# ---------------------------------------------------------------------------
# commands


def cmd_analyze_1d(args, cfg: RunConfig) -> AnalysisReport:
    m, desc = moment_sequence(args.gen, args.file, cfg.mode, cfg.precision)
    N = args.N or cfg.window
    if m.max_index is not None:
        N = min(N, m.max_index // 2)
        if N < 1:
            raise InputError("need at least m_0, m_1, m_2")
    rep = _new(args, cfg, desc, N)
    res = rep.results
    res["support_hint"] = m.support_hint
    res["hankel"] = _guard(lambda: hankel_psd(m, N).to_dict())
    res["carleman"] = _guard(lambda: _verdict(rep, "carleman", carleman_check(m, N, cfg.verdict)))
    if m.support_hint == "R+":
        Ns = N if m.max_index is None or 2 * N + 1 <= m.max_index else N - 1
        res["hankel_stieltjes"] = _guard(lambda: hankel_psd(m, Ns, STIELTJES).to_dict())
        res["stieltjes"] = _guard(lambda: _verdict(rep, "stieltjes", stieltjes_check(m, N, cfg.verdict)))
    K = hint_interval(m.support_hint)
    if K is not None:
        res["compact_support"] = _guard(lambda: compact_support_check(m, K, N).to_dict())
    if args.quadrature:
        res["quadrature"] = _guard(lambda: quadrature_from_moments(m, args.quadrature).to_dict())
    return rep


def cmd_qa(args, cfg: RunConfig) -> AnalysisReport:
    N = args.N or cfg.window
    seq, desc = positive_sequence(args.gen, args.file, N, cfg.mode, cfg.precision)
    N = min(N, seq.window)
    rep = _new(args, cfg, desc, N)
    res = rep.results
    lc = is_log_convex(seq, N)
    res["log_convex"] = {"holds": lc.holds, "first_violation": lc.first_violation}
    cons = verdict_consistency(seq, N, args.R, cfg.verdict)
    res["consistency"] = {"matrix": cons.matrix, "defects": [list(d) for d in cons.defects],
                          "consistent": cons.consistent}
    res["conditions"] = {k: _verdict(rep, f"condition_{k}", v, COND_D_HEADER if k == "d" else SERIES_HEADER)
                         for k, v in cons.verdicts.items()}
    res["identity"] = _guard(lambda: mandelbrojt_identity_check(seq, N, args.R).to_dict())
    return rep


def cmd_regularize(args, cfg: RunConfig) -> AnalysisReport:
    N = args.N or cfg.window
    seq, desc = positive_sequence(args.gen, args.file, N, cfg.mode, cfg.precision)
    N = min(N, seq.window)
    rep = _new(args, cfg, desc, N)
    reg = log_convex_regularize(seq, N)
    rows = [[n, fmt(seq[n]), fmt(reg[n])] for n in range(reg.start, N + 1)]
    rep.results = {"rows": rows, "support_indices": reg.support_indices, "vertices": reg.vertices,
                   "start": reg.start}
    rep.csv["regularize.csv"] = _rows_csv(("n", "M_n", "M_n_c"), rows)
    rep.csv["support_indices.csv"] = _rows_csv(("support_index",), [[i] for i in reg.support_indices])
    return rep


def _samples(psi, count: int) -> List[Fraction]:
    a, b = psi.support
    count = max(count, 2)
    return [a + (b - a) * Fraction(i, count - 1) for i in range(count)]


def cmd_bump(args, cfg: RunConfig) -> AnalysisReport:
    gen = args.gen or args.klass
    count = args.count
    if args.plan is not None:
        if gen or args.file:
            raise InputError("give a plan or a sequence, not both")
        try:
            mus = [Fraction(x) for x in args.plan.split(",")]
        except (ValueError, ZeroDivisionError) as exc:
            raise InputError(f"bad plan: {exc}") from exc
        plan = AveragingPlan.make(mus)
        psi = build_psi(plan)
        rows = derivative_bounds(psi, plan)
        rep = _new(args, cfg, {"kind": "plan", "mu": [str(x) for x in plan.mu]}, plan.count)
        rep.results = {"feasible": True, "plan": {"mu": [str(m) for m in plan.mu],
                                                  "base_interval": [str(x) for x in plan.base_interval]},
                       "support": [str(x) for x in psi.support], "psi_at_0": str(psi(0)),
                       "bounds": [r.to_dict() for r in rows], "all_verified": all(r.verified for r in rows)}
    else:
        vw = max(args.N or cfg.bump_verdict_window, count)
        seq, desc = positive_sequence(gen, args.file, vw, cfg.mode, cfg.precision)
        vw = min(vw, seq.window)
        rep = _new(args, cfg, desc, vw)
        w = witness_from_class(seq, count, vw, cfg.verdict, args.force)
        rep.results = w.to_dict()
        psi, rows = w.psi, w.bounds
        rep.csv["verdict_e.csv"] = w.verdict.trace_csv()
    if psi is not None:
        rep.results["psi"] = psi.to_dict()
        rep.csv["psi_samples.csv"] = psi.samples_csv(_samples(psi, cfg.bump_samples))
        rep.csv["psi_breakpoints.csv"] = psi.breakpoints_csv()
        rep.csv["bounds.csv"] = _rows_csv(("k", "sup_lower", "sup_upper", "bound", "verified"),
                                          [[r.k, str(r.sup_lower), str(r.sup_upper), str(r.bound),
                                            str(r.verified).lower()] for r in rows])
    return rep


def cmd_analyze_multi(args, cfg: RunConfig) -> AnalysisReport:
    N = args.N or cfg.multi_window
    m, desc = multisequence(args.gen, args.file, 2 * N, cfg.mode, cfg.precision)
    N = min(N, m.deg // 2)
    rep = _new(args, cfg, desc, N)
    res = rep.results
    res["moment_matrix"] = _guard(lambda: moment_matrix_psd(m, N).to_dict())

    def carleman():
        mc = multivariate_carleman(m, N, cfg.verdict)
        for j, v in enumerate(mc.axes, 1):
            rep.csv[f"marginal_{j}_carleman.csv"] = v.trace_csv()
        return mc.to_dict()

    res["multivariate_carleman"] = _guard(carleman)
    res["gns"] = _guard(lambda: _gns_summary(m, N, cfg))
    return rep


def _gns_summary(m, N: int, cfg: RunConfig, full: bool = False) -> Dict[str, Any]:
    g = gns_build(m, N, cfg.gram_tolerance)
    out = {"quotient_dim": g.quotient_dim, "kernel_rank": g.kernel_rank, "exact": g.exact,
           "symmetry_defect": fmt(g.symmetry_defect())}
    if N >= 2:
        out["commutation_residual"] = commutation_residual(g).to_dict()
    if full:
        out["model"] = g.to_dict()
    return out


def cmd_gns(args, cfg: RunConfig) -> AnalysisReport:
    N = args.N or cfg.multi_window
    m, desc = multisequence(args.gen, args.file, 2 * N, cfg.mode, cfg.precision)
    N = min(N, m.deg // 2)
    rep = _new(args, cfg, desc, N)
    res = rep.results
    res["gns"] = _guard(lambda: _gns_summary(m, N, cfg, full=True))
    vectors = {}
    for j in range(1, m.d + 1):
        def qa(j=j):
            q = qa_vector_norms(None, m, j, (0,) * m.d, m.deg // 4, cfg.verdict)
            rep.csv[f"qa_vector_{j}.csv"] = _rows_csv(
                ("k", "norm_squared", "cs_rhs_squared", "cs_holds"),
                [[k, fmt(a), fmt(b), str(h).lower()] for k, (a, b, h) in
                 enumerate(zip(q.norms2, q.cs_rhs2, q.cs_holds))])
            return q.to_dict()
        vectors[str(j)] = _guard(qa)
    res["qa_vectors"] = vectors
    return rep


def cmd_realize(args, cfg: RunConfig) -> AnalysisReport:
    N = args.N or cfg.realize_window
    t, desc = tensor_sequence(args.gen, args.file, 2 * N, cfg.mode, cfg.precision)
    N = min(N, t.max_order // 2)
    E = parse_directions(args.E, t.d)
    desc = dict(desc, E=E.to_dict()["E"])
    rep = _new(args, cfg, desc, N)
    res = rep.results
    res["spanning"] = E.spanning

    def ds_block():
        ds = determining_sequence(t, E, N, cfg.budget, args.heuristic)
        return ds, ds.to_dict()

    got = _guard(ds_block)
    if isinstance(got, dict):
        res["determining_sequence"] = got
        ds = None
    else:
        ds, res["determining_sequence"] = got
        res["d_bound"] = [b.to_dict() for b in d_bound_check(t, E, N, ds, cfg.budget)]

        def dv():
            v = determining_verdict(t, E, N, cfg.verdict, cfg.budget, args.heuristic)
            rep.csv["determining.csv"] = v.verdict.trace_csv()
            rep.csv["determining_carleman_type.csv"] = v.carleman_type.trace_csv()
            out = v.to_dict()
            out.pop("sequence")
            return out

        res["determining_verdict"] = _guard(dv)
    directions = {}
    for i, phi in enumerate(E.vectors):
        directions[str(i)] = _guard(lambda phi=phi, i=i: _verdict(
            rep, f"direction_{i}_carleman", carleman_check(per_direction_sequence(t, phi, N), N, cfg.verdict)))
    res["per_direction_carleman"] = directions

    def gs():
        g = generalized_stieltjes_check(t, E, N, cfg.verdict)
        rep.csv["generalized_stieltjes.csv"] = g.stieltjes.trace_csv()
        rep.csv["berezansky_kondratiev.csv"] = g.bk.trace_csv()
        return g.to_dict()

    res["generalized_stieltjes"] = _guard(gs)
    return rep


COMMANDS = {
    "analyze-1d": cmd_analyze_1d,
    "analyze-multi": cmd_analyze_multi,
    "qa": cmd_qa,
    "regularize": cmd_regularize,
    "bump": cmd_bump,
    "realize": cmd_realize,
    "gns": cmd_gns,
}


# ---------------------------------------------------------------------------
# argument parsing


def _common(p: argparse.ArgumentParser, source: bool = True) -> None:
    if source:
        src = p.add_mutually_exclusive_group()
        src.add_argument("--gen", help="builtin generator, name:p1,p2,...")
        src.add_argument("--file", help="input JSON file")
    p.add_argument("--N", type=int, help="window (largest index analysed)")
    p.add_argument("--mode", choices=("rational", "float"), help="scalar mode override")
    p.add_argument("--precision", type=int, help="float precision in bits")
    p.add_argument("--out", help="output directory (default: JSON report on stdout)")
    p.add_argument("--csv", action="store_true", help="also write CSV series")
    p.add_argument("--config", help="config file (default: $MOMENTDET_CONFIG)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="momentdet", description="Moment determinacy and quasi-analyticity toolkit")
    parser.add_argument("--version", action="version", version=f"momentdet {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("analyze-1d", help="Hankel positivity, Carleman/Stieltjes, quadrature")
    _common(p)
    p.add_argument("--quadrature", type=int, metavar="K", help="also recover a K-node quadrature")

    p = sub.add_parser("qa", help="quasi-analyticity conditions and their consistency")
    _common(p)
    p.add_argument("--R", type=Fraction, help="integration bound for the T-integral condition")

    p = sub.add_parser("regularize", help="log-convex regularization table")
    _common(p)

    p = sub.add_parser("bump", help="compactly supported witness and derivative bounds")
    _common(p)
    p.add_argument("--class", dest="klass", help="sequence class (same syntax as --gen)")
    p.add_argument("--count", type=int, default=8, help="number of averaging steps")
    p.add_argument("--plan", help="explicit averaging widths mu_1,...,mu_k")
    p.add_argument("--force", action="store_true", help="build even when the verdict is Inconclusive")

    p = sub.add_parser("analyze-multi", help="multivariate positivity, marginals and GNS diagnostics")
    _common(p)

    p = sub.add_parser("gns", help="truncated GNS model and quasi-analytic vector norms")
    _common(p)

    p = sub.add_parser("realize", help="determining sequence for tensor moment sequences")
    _common(p)
    p.add_argument("--E", help="direction set, vectors separated by ';' (default: standard basis)")
    p.add_argument("--heuristic", action="store_true", help="lower-bound search beyond the budget")
    return parser


def _write(report: AnalysisReport, out: Optional[str], want_csv: bool, stdout) -> None:
    text = report.to_json()
    if out is None:
        if want_csv:
            out = "."
        else:
            stdout.write(text)
            return
    os.makedirs(out, exist_ok=True)
    with open(os.path.join(out, f"{report.command}.json"), "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)
    if want_csv:
        for name, content in sorted(report.csv.items()):
            with open(os.path.join(out, name), "w", encoding="utf-8", newline="") as fh:
                fh.write(content)


def run(argv: Optional[List[str]] = None, stdout=None) -> AnalysisReport:
    """Parse ``argv``, run the command, write outputs and return the report."""
    args = build_parser().parse_args(argv)
    cfg = load_config(args.config).override(mode=args.mode, precision=args.precision)
    report = COMMANDS[args.command](args, cfg)
    _write(report, args.out, args.csv, stdout or sys.stdout)
    return report


def main(argv: Optional[List[str]] = None) -> int:
    try:
        run(argv)
    except (InputError, ConfigError) as exc:
        print(f"momentdet: error: {exc}", file=sys.stderr)
        return 2
    except (ValueError, ArithmeticError, OSError) as exc:
        print(f"momentdet: error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())


__all__ = ["AnalysisReport", "COMMANDS", "build_parser", "main", "run"]
