"""Command line front end: ``riskset compute | check | report``.

Exit codes: 0 when everything passes, 1 when a check reports a violation,
2 on input errors (unreadable files, schema violations, dangling
references).
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from importlib import resources

import jsonschema

from ._rational import fmt, to_rat
from .consistency import (ENTROPIC_TOL, CheckReport, _risk_process, check_cocycle,
                          check_martingale_worstcase, check_mptc_direct, check_supermartingale,
                          find_worst_case_dual)
from .duals import DualPair, sample_dual_pairs
from .fixtures import bid_ask_cone
from .polycalc import Polyhedron
from .riskmeasures import SHP, AVaR, CustomOneStep, Entropic
from .scalarize import _split, check_proper, rho, rho_dual_value
from .scenario import NodeVector, ScenarioTree, TreeError

CHECKS = ("supermartingale", "cocycle", "mptc_direct", "martingale_worstcase", "duality",
          "proper")


class InputError(Exception):
    """Bad instance or report input (exit code 2)."""


@dataclass
class Instance:
    name: str
    tree: ScenarioTree
    model: object
    portfolios: dict
    pairs: list = field(default_factory=list)
    sampler: dict = field(default_factory=dict)
    checks: list = field(default_factory=list)


def _schema():
    text = resources.files("riskset").joinpath("schema/instance.schema.json").read_text()
    return json.loads(text)


def _read_json(path):
    try:
        with open(path, encoding="utf-8") as fh:
            return json.load(fh)
    except OSError as exc:
        raise InputError(f"{path}: {exc.strerror}") from exc
    except json.JSONDecodeError as exc:
        raise InputError(f"{path}: malformed JSON ({exc.msg} at line {exc.lineno})") from exc


def build_model(tree, cfg):
    kind = cfg["kind"]
    if kind == "avar":
        lv = cfg["levels"]
        if isinstance(lv, dict):
            lv = {int(k): v for k, v in lv.items()}
        return AVaR(tree, lv, composed=cfg.get("composed", True))
    if kind == "entropic":
        return Entropic(tree, cfg["rates"])
    if kind == "shp":
        if "market" in cfg:
            mk = cfg["market"]
            default = mk.get("default")
            market = {}
            for n in range(tree.n_nodes):
                obj = mk.get(str(n), default)
                if obj is None:
                    raise InputError(f"no solvency set for node {n}")
                market[n] = Polyhedron.from_json(obj, d=tree.d)
        else:
            ratios = cfg.get("bid_ask", {})
            market = {n: bid_ask_cone(ratios.get(str(n), ratios.get("default", 2)))
                      for n in range(tree.n_nodes)}
            if tree.d != 2:
                raise InputError("bid_ask markets have two assets")
        return SHP(tree, market)
    if kind == "custom":
        steps = {}
        for k, obj in cfg["one_step"].items():
            n = int(k)
            if not 0 <= n < tree.n_nodes:
                raise InputError(f"one_step refers to unknown node {k}")
            steps[n] = Polyhedron.from_json(obj, d=tree.d * len(tree.children[n]))
        return CustomOneStep(tree, steps)
    raise InputError(f"unknown model kind {kind!r}")


def load_instance(path):
    obj = _read_json(path)
    try:
        jsonschema.validate(obj, _schema())
    except jsonschema.ValidationError as exc:
        where = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise InputError(f"{path}: schema error at {where}: {exc.message}") from exc
    try:
        tree = ScenarioTree.from_json(obj["tree"])
        if "T" in obj["tree"] and obj["tree"]["T"] != tree.T:
            raise InputError("declared T does not match the tree")
        model = build_model(tree, obj["model"])
        portfolios = {}
        for name, nv in obj["portfolios"].items():
            X = NodeVector.from_json(tree, nv)
            if X.t != tree.T:
                raise InputError(f"portfolio {name!r} must be terminal (t = {tree.T})")
            portfolios[name] = X
        duals = obj.get("duals", {})
        pairs = [DualPair.from_json(tree, p) for p in duals.get("pairs", [])]
        for chk in obj.get("checks", []):
            if "portfolio" in chk and chk["portfolio"] not in portfolios:
                raise InputError(f"check refers to unknown portfolio {chk['portfolio']!r}")
    except (TreeError, ValueError, TypeError, KeyError) as exc:
        if isinstance(exc, InputError):
            raise
        raise InputError(f"{path}: {exc}") from exc
    return Instance(obj.get("name", os.path.splitext(os.path.basename(path))[0]), tree, model,
                    portfolios, pairs, duals.get("sampler", {}), obj.get("checks", []))


# ---------------------------------------------------------------------------
# compute


def _corner_rows(name, sp):
    for t in sp.times:
        for n, v in sorted(sp.data[t].items()):
            yield [name, t, n] + [x if isinstance(x, float) else fmt(x) for x in v]


def _vertex_rows(name, sp):
    for t in sp.times:
        for n, P in sorted(sp.data[t].items()):
            c = P.canonical()
            if c.is_empty():
                yield [name, t, n, "empty"]
                continue
            for tag, vecs in (("vertex", c.vertices), ("ray", c.rays), ("line", c.lines)):
                for v in vecs:
                    yield [name, t, n, tag] + [fmt(x) for x in P.pad(v)]


def cmd_compute(args):
    inst = load_instance(args.instance)
    names = [args.portfolio] if args.portfolio else list(inst.portfolios)
    for nm in names:
        if nm not in inst.portfolios:
            raise InputError(f"unknown portfolio {nm!r}")
    out = {"instance": inst.name, "model": inst.model.to_json(), "portfolios": {}}
    rows, box = [], True
    for nm in names:
        sp = inst.model.risk_process(inst.portfolios[nm])
        out["portfolios"][nm] = sp.to_json()
        box = sp.kind == "box"
        rows.extend(_corner_rows(nm, sp) if box else _vertex_rows(nm, sp))
    _emit(json.dumps(out, indent=2) + "\n", args.out)
    if args.csv:
        buf = io.StringIO()
        wr = csv.writer(buf, lineterminator="\n")
        d = inst.tree.d
        if box:
            wr.writerow(["portfolio", "t", "node"] + [f"r{i}" for i in range(d)])
        else:
            wr.writerow(["portfolio", "t", "node", "kind"] + [f"x{i}" for i in range(d)])
        wr.writerows(rows)
        _emit(buf.getvalue(), args.csv)
    return 0


def _emit(text, path):
    if path in (None, "-"):
        sys.stdout.write(text)
    else:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)


# ---------------------------------------------------------------------------
# check


def _threads():
    raw = os.environ.get("RISKSET_THREADS", "")
    try:
        return max(1, int(raw)) if raw else 1
    except ValueError:
        raise InputError("RISKSET_THREADS must be an integer") from None


def _pairs_for(inst, count, seed, radius):
    times = inst.sampler.get("times", list(range(inst.tree.T)))
    out = list(inst.pairs)
    for t in times:
        if not 0 <= t <= inst.tree.T:
            raise InputError(f"sampler time {t} outside the horizon")
        out.extend(sample_dual_pairs(inst.tree, t, count, seed, radius=radius))
    return out


def _ones(tree):
    return tuple([1] * tree.m + [0] * (tree.d - tree.m))


def _fail_report(name, params, exc):
    return CheckReport(name, params, False, None, {"error": str(exc)})


def _tasks(inst, specs, pairs):
    """Expand check specs into an ordered list of ``(meta, thunk)``."""
    tree, model = inst.tree, inst.model
    T = tree.T
    tasks = []
    for spec in specs:
        name = spec["name"]
        ports = [spec["portfolio"]] if "portfolio" in spec else list(inst.portfolios)
        times = [spec["t"]] if "t" in spec else list(range(T))
        if name == "supermartingale":
            kind = spec.get("kind", "V")
            for pn in ports:
                X = inst.portfolios[pn]
                for t in times:
                    s = spec.get("s", t + 1)
                    for k, p in enumerate(pairs):
                        if p.t > t:
                            continue
                        meta = {"portfolio": pn, "pair": k}
                        tasks.append((meta, lambda p=p, X=X, t=t, s=s, kind=kind:
                                      check_supermartingale(p, model, X, t, s, kind)))
        elif name == "cocycle":
            kind = spec.get("kind", "beta")
            for t in times:
                s = spec.get("s", t + 1)
                for k, p in enumerate(pairs):
                    if p.t > t:
                        continue
                    tasks.append(({"pair": k}, lambda p=p, t=t, s=s, kind=kind:
                                  check_cocycle(p, model, t, s, kind)))
        elif name == "mptc_direct":
            if not model.polyhedral:
                continue
            X = inst.portfolios[ports[0]]
            for t in times:
                s = spec.get("s", t + 1)
                tasks.append(({"portfolio": ports[0]}, lambda X=X, t=t, s=s:
                              check_mptc_direct(model, X, t, s)))
        elif name == "martingale_worstcase":
            kind = spec.get("kind", "V")
            w0 = tuple(to_rat(x) for x in spec.get("w", _ones(tree)))
            for pn in ports:
                tasks.append(({"portfolio": pn}, lambda X=inst.portfolios[pn], kind=kind:
                              _worst_case(model, X, w0, kind)))
        elif name == "duality":
            t = spec.get("t", 0)
            for pn in ports:
                X = inst.portfolios[pn]
                tasks.append(({"portfolio": pn, "pair": "lp"}, lambda X=X, t=t:
                              _strong_duality(model, X, spec.get("w", _ones(tree)), t)))
                for k, p in enumerate(pairs):
                    if p.t == t:
                        tasks.append(({"portfolio": pn, "pair": k}, lambda p=p, X=X:
                                      _weak_duality(model, X, p)))
        elif name == "proper":
            t = spec.get("t", 0)
            w = tuple(to_rat(x) for x in spec.get("w", _ones(tree)))
            tasks.append(({"portfolio": ports[0]}, lambda X=inst.portfolios[ports[0]], t=t, w=w:
                          _proper(model, X, w, t)))
        else:  # pragma: no cover - guarded by the schema
            raise InputError(f"unknown check {name!r}")
    return tasks


def _worst_case(model, X, w0, kind):
    try:
        pair = find_worst_case_dual(model, X, w0)
    except ValueError as exc:
        return _fail_report("martingale_worstcase", {"kind": kind}, exc)
    rep = check_martingale_worstcase(pair, model, X, kind)
    rep.details["pair"] = pair.to_json()
    return rep


def _close(a, b, model):
    if isinstance(model, Entropic):
        return abs(a - b) <= ENTROPIC_TOL
    return a == b


def _strong_duality(model, X, w, t):
    w = tuple(to_rat(x) for x in w)
    try:
        res = rho(model, X, w, t)
    except ValueError as exc:
        return _fail_report("duality_strong", {"t": t}, exc)
    if res.dual is None:
        ok = True
        det = {"primal": res.primal, "note": "primal not finite"}
    else:
        ok = _close(res.primal, res.dual, model)
        det = {"primal": res.primal, "dual": res.dual}
    return CheckReport("duality_strong", {"t": t}, ok, res.gap, None if ok else det, 0.0, det)


def _weak_duality(model, X, pair):
    tree = model.tree
    el, perp = _split(pair.w, tree.m)
    primal = rho(model, X, el, pair.t, with_dual=False).primal
    dual = rho_dual_value(model, X, el, pair, perp, pair.t)
    tol = ENTROPIC_TOL if isinstance(model, Entropic) else 0
    ok = primal == float("inf") or dual == float("-inf") or dual <= primal + tol
    det = {"primal": primal, "dual": dual}
    gap = None if dual == float("-inf") or primal in (float("inf"), float("-inf")) \
        else primal - dual
    return CheckReport("duality_weak", {"t": pair.t}, ok, gap, None if ok else det, 0.0, det)


def _proper(model, X, w, t):
    proper = check_proper(model, w, t)
    val = rho(model, X, w, t, with_dual=False).primal
    finite = val not in (float("inf"), float("-inf"))
    det = {"proper": proper, "rho": val}
    ok = proper == (val != float("-inf"))
    return CheckReport("proper", {"t": t, "w": [fmt(x) for x in w]}, ok, None,
                       None if ok else det, 0.0, det | {"finite": finite})


def _prewarm(inst):
    model = inst.model
    if model.polyhedral:
        for n in range(inst.tree.n_nodes):
            model.acceptance(n).vertices  # noqa: B018
    for X in inst.portfolios.values():
        _risk_process(model, X)


def cmd_check(args):
    inst = load_instance(args.instance)
    if args.checks:
        names = [c.strip() for c in args.checks.split(",") if c.strip()]
        bad = [c for c in names if c not in CHECKS]
        if bad:
            raise InputError(f"unknown checks: {', '.join(bad)}")
        specs = [{"name": c} for c in names]
    else:
        specs = inst.checks or [{"name": c} for c in CHECKS]
    count = args.pairs or inst.sampler.get("count", 20)
    seed = inst.sampler.get("seed", 0) if args.seed is None else args.seed
    radius = to_rat(inst.sampler.get("radius", "1/4"))
    pairs = _pairs_for(inst, count, seed, radius)
    _prewarm(inst)
    tasks = _tasks(inst, specs, pairs)
    n_threads = _threads()
    run = lambda task: task[1]()  # noqa: E731
    if n_threads > 1:
        with ThreadPoolExecutor(max_workers=n_threads) as pool:
            results = list(pool.map(run, tasks))
    else:
        results = [run(tk) for tk in tasks]
    reports = []
    for (meta, _), rep in zip(tasks, results):
        js = rep.to_json()
        js["params"] = dict(meta) | js["params"]
        reports.append(js)
    n_fail = sum(1 for r in reports if r["verdict"] != "pass")
    out = {"instance": inst.name, "seed": seed, "pairs": len(pairs),
           "summary": {"total": len(reports), "failed": n_fail}, "reports": reports}
    _emit(json.dumps(out, indent=2) + "\n", args.out)
    return 1 if n_fail else 0


# ---------------------------------------------------------------------------
# report

COLUMNS = ("instance", "check", "portfolio", "pair", "t", "s", "kind", "verdict", "gap")


def _parse_gap(g):
    """Worst (smallest) gap as a Fraction/float, or None."""
    if g is None:
        return None
    if isinstance(g, dict):
        vals = [v for v in (_parse_gap(x) for x in g.values()) if v is not None]
        return min(vals) if vals else None
    if isinstance(g, (int, float)):
        return g
    if g in ("inf", "+inf"):
        return float("inf")
    if g == "-inf":
        return float("-inf")
    return Fraction(g)


def _gap_str(g):
    if g is None:
        return ""
    if isinstance(g, Fraction):
        return str(g)
    if isinstance(g, float) and g in (float("inf"), float("-inf")):
        return "inf" if g > 0 else "-inf"
    return repr(g)


def _rows(batches):
    rows = []
    for src in batches:
        for rep in src.get("reports", []):
            p = rep.get("params", {})
            g = _parse_gap(rep.get("gap"))
            rows.append({
                "instance": src.get("instance", ""),
                "check": rep.get("check", ""),
                "portfolio": p.get("portfolio", ""),
                "pair": p.get("pair", ""),
                "t": p.get("t", ""),
                "s": p.get("s", ""),
                "kind": p.get("kind", ""),
                "verdict": rep.get("verdict", ""),
                "gap": _gap_str(g),
                "_gap": g,
            })
    return rows


def _bucket(g):
    if g is None:
        return "n/a"
    if g == float("inf"):
        return "+inf"
    if g == float("-inf"):
        return "-inf"
    if g < 0:
        return "< 0"
    if g == 0:
        return "= 0"
    return "(0, 1]" if g <= 1 else "> 1"


BUCKETS = ("-inf", "< 0", "= 0", "(0, 1]", "> 1", "+inf", "n/a")


def render_report(batches, fmt_):
    rows = _rows(batches)
    if fmt_ == "json":
        counts = {}
        for r in rows:
            c = counts.setdefault(r["check"], {"pass": 0, "fail": 0})
            c["pass" if r["verdict"] == "pass" else "fail"] += 1
        clean = [{k: r[k] for k in COLUMNS} for r in rows]
        return json.dumps({"rows": clean, "counts": dict(sorted(counts.items()))}, indent=2) + "\n"
    if fmt_ == "csv":
        buf = io.StringIO()
        wr = csv.writer(buf, lineterminator="\n")
        wr.writerow(COLUMNS)
        for r in rows:
            wr.writerow([r[k] for k in COLUMNS])
        return buf.getvalue()
    lines = ["# riskset report", "", "## Summary", "",
             "| check | pass | fail |", "|---|---|---|"]
    checks = sorted({r["check"] for r in rows})
    for c in checks:
        sub = [r for r in rows if r["check"] == c]
        n_pass = sum(r["verdict"] == "pass" for r in sub)
        lines.append(f"| {c} | {n_pass} | {len(sub) - n_pass} |")
    lines += ["", "## Gap histogram", "", "| check | " + " | ".join(BUCKETS) + " |",
              "|---" * (len(BUCKETS) + 1) + "|"]
    for c in checks:
        hist = {b: 0 for b in BUCKETS}
        for r in rows:
            if r["check"] == c:
                hist[_bucket(r["_gap"])] += 1
        lines.append(f"| {c} | " + " | ".join(str(hist[b]) for b in BUCKETS) + " |")
    lines += ["", "## Results", "", "| " + " | ".join(COLUMNS) + " |",
              "|---" * len(COLUMNS) + "|"]
    for r in rows:
        lines.append("| " + " | ".join(str(r[k]) for k in COLUMNS) + " |")
    return "\n".join(lines) + "\n"


def cmd_report(args):
    batches = [_read_json(p) for p in args.reports]
    for p, b in zip(args.reports, batches):
        if not isinstance(b, dict) or not isinstance(b.get("reports"), list):
            raise InputError(f"{p}: not a check report")
    _emit(render_report(batches, args.format), args.out)
    return 0


# ---------------------------------------------------------------------------


def build_parser():
    ap = argparse.ArgumentParser(prog="riskset",
                                 description="Set-valued dynamic risk measures on scenario trees.")
    sub = ap.add_subparsers(dest="command", required=True)
    c = sub.add_parser("compute", help="risk process R_t(X) for every t and node")
    c.add_argument("instance")
    c.add_argument("--portfolio")
    c.add_argument("--out")
    c.add_argument("--csv", help="also write corner or vertex tables as CSV")
    c.set_defaults(func=cmd_compute)
    k = sub.add_parser("check", help="run consistency and duality checks")
    k.add_argument("instance")
    k.add_argument("--checks", help=f"comma separated subset of {', '.join(CHECKS)}")
    k.add_argument("--pairs", type=int, help="sampled dual pairs per time")
    k.add_argument("--seed", type=int)
    k.add_argument("--out")
    k.set_defaults(func=cmd_check)
    r = sub.add_parser("report", help="aggregate check outputs")
    r.add_argument("reports", nargs="*")
    r.add_argument("--format", choices=("json", "csv", "md"), default="md")
    r.add_argument("--out")
    r.set_defaults(func=cmd_report)
    return ap


def main(argv=None):
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return 2 if exc.code else 0
    try:
        return args.func(args)
    except InputError as exc:
        print(f"riskset: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())

