"""Command line: ``asepkpz dist|blocking|exp``."""
from __future__ import annotations

import argparse
import csv
import sys

from .blocking import BlockingQuery, mu_Z_cylinder, sample_mu_Z_batch, DEFAULT_W
from .distributions import F_GUE_with_error, F_Mp_detail, p_xi
from .harness import EXPERIMENTS, ExperimentConfig, default_config, emit_report, run_experiment
from .mixture import build_mixture


def _writer():
    return csv.writer(sys.stdout, lineterminator="\n")


def _ints(text: str) -> list[int]:
    return [int(a) for a in text.split(",") if a.strip()] if text else []


def cmd_dist(a) -> int:
    w = _writer()
    w.writerow(["input", "value", "error_estimate", "method"])
    if a.which == "fgue":
        for s in a.s:
            v, e = F_GUE_with_error(s)
            w.writerow([f"s={s:g}", f"{v:.15g}", f"{e:.3g}", "nystrom-airy"])
    elif a.which == "fmp":
        for s in a.s:
            r = F_Mp_detail(a.M, a.p, s, a.method)
            w.writerow([f"M={a.M},p={a.p:g},s={s:g}", f"{r.value:.15g}", f"{r.error:.3g}", r.method])
    elif a.which == "pxi":
        for xi in a.xi:
            w.writerow([f"xi={xi:g}", f"{p_xi(xi):.12g}", "1e-4", "gue-table-convolution"])
    elif a.which == "plr":
        mix = build_mixture(a.M, a.p, a.D)
        for L, R, v in mix.nonzero():
            w.writerow([f"L={L},R={R}", f"{v:.15g}", f"{mix.tail_bound:.3g}",
                        "hybrid" if mix.approximate else "exact"])
    return 0


def cmd_blocking(a) -> int:
    w = _writer()
    if a.which == "cyl":
        A = tuple(_ints(a.sites))
        v, e = mu_Z_cylinder(BlockingQuery(a.Z, A, a.W), a.p)
        w.writerow(["Z", "A", "value", "error_bound"])
        w.writerow([a.Z, " ".join(map(str, A)), f"{v:.15g}", f"{e:.3g}"])
    else:
        b = sample_mu_Z_batch(a.Z, a.n, a.p, a.W, a.seed)
        w.writerow(["sample", "window_lo", "occupancy"])
        for i in range(a.n):
            w.writerow([i, b.window_lo, "".join(map(str, b.occupancy[i]))])
        print(f"# acceptance {b.acceptance:.4f} (atom {b.atom:.4f}, draws {b.draws})", file=sys.stderr)
    return 0


def cmd_exp(a) -> int:
    over = dict(replicas=a.replicas, master_seed=a.seed, workers=a.workers, out=a.out)
    if a.config:
        cfg = ExperimentConfig.from_toml(a.config, id=a.id, **over)
    else:
        cfg = default_config(a.id, **{k: v for k, v in over.items() if v is not None})
    rep = run_experiment(cfg)
    out = a.out or cfg.out or "."
    cpath, jpath = emit_report(rep, out)
    failed = [r.quantity for r in rep.rows if r.passed is False]
    print(f"{rep.experiment}: {'PASS' if rep.verdict else 'FAIL'} "
          f"({len(failed)} failed rows, {rep.runtime:.1f} s) -> {cpath}, {jpath}")
    for q in failed:
        print(f"  failed: {q}")
    return 0 if rep.verdict else 1


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="asepkpz", description=__doc__)
    sub = ap.add_subparsers(dest="cmd", required=True)

    d = sub.add_parser("dist", help="distribution functions (CSV on stdout)")
    dsub = d.add_subparsers(dest="which", required=True)
    g = dsub.add_parser("fgue")
    g.add_argument("--s", type=float, nargs="+", required=True)
    g = dsub.add_parser("fmp")
    g.add_argument("--M", type=int, required=True)
    g.add_argument("--p", type=float, required=True)
    g.add_argument("--s", type=float, nargs="+", required=True)
    g.add_argument("--method", choices=["contour", "residue"], default="contour")
    g = dsub.add_parser("pxi")
    g.add_argument("--xi", type=float, nargs="+", required=True)
    g = dsub.add_parser("plr")
    g.add_argument("--M", type=int, required=True)
    g.add_argument("--p", type=float, required=True)
    g.add_argument("--D", type=int, default=8)
    d.set_defaults(func=cmd_dist)

    b = sub.add_parser("blocking", help="blocking measures")
    bsub = b.add_subparsers(dest="which", required=True)
    g = bsub.add_parser("cyl")
    g.add_argument("--Z", type=int, default=0)
    g.add_argument("--sites", "--A", dest="sites", type=str, required=True,
                   help="comma-separated sites of A, e.g. 0,1 (empty string for the empty set)")
    g.add_argument("--p", type=float, required=True)
    g.add_argument("--W", type=int, default=DEFAULT_W)
    g = bsub.add_parser("sample")
    g.add_argument("--Z", type=int, default=0)
    g.add_argument("--p", type=float, required=True)
    g.add_argument("--W", type=int, default=12)
    g.add_argument("--n", type=int, default=1)
    g.add_argument("--seed", type=int, default=0)
    b.set_defaults(func=cmd_blocking)

    e = sub.add_parser("exp", help="experiments")
    esub = e.add_subparsers(dest="which", required=True)
    g = esub.add_parser("run")
    g.add_argument("--id", choices=EXPERIMENTS, required=True)
    g.add_argument("--config", type=str, default=None, help="TOML file")
    g.add_argument("--out", type=str, default=None)
    g.add_argument("--replicas", type=int, default=None)
    g.add_argument("--seed", type=int, default=None)
    g.add_argument("--workers", type=int, default=None)
    e.set_defaults(func=cmd_exp)
    return ap


def main(argv=None) -> int:
    a = build_parser().parse_args(argv)
    try:
        return a.func(a)
    except (ValueError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
