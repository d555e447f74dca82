"""Command-line front end: ``ehall <command> [options]``.

Every command produces a list of records with the fields
check_id, family, params, bidegree, prime, seed, status, data, elapsed_ms.
Exit codes: 0 all PASS, 1 any FAIL, 2 usage error, 3 INCONCLUSIVE only.
"""
from __future__ import annotations

import argparse
import csv
import io
import itertools
import json
import random
import re
import sys
import time
from typing import Dict, List, Optional, Sequence

from . import __version__
from .coeff import EvalAssign
from .coproduct import FAIL, INCONCLUSIVE, PASS, delta_check_relator, eq1_decompose, tensor_oracle_zero
from .freealg import AlgElem, Bidegree, Window, commutator, component_words, u
from .relations import (DEFINING_FAMILIES, Family, enumerate_relators, kernel_tensor_check,
                        membership_deepening, random_surjection, rank_quotient, relator_cubic, relator_mixed,
                        relator_quad, relator_R, relator_theta_comm)
from .shuffle import EvalPointSet, can_map, eval_rank, rep_check_relator

DEFAULT_PRIMES = (2147483647, 2147483629, 2147483587)
DEFAULT_SEED = 42
FIELDS = ("check_id", "family", "params", "bidegree", "prime", "seed", "status", "data", "elapsed_ms")

DEFAULT_WINDOWS = {
    "relators": "u=-2..2,th=2,n=3",
    "rank": "u=-1..2,th=0,n=3",
    "check-R": "u=-5..5,th=2,n=3",
    "check-delta": "u=-4..4,th=4,n=2",
    "eq1": "u=-6..6,th=6,n=3",
    "oracle": "u=-1..2,th=0,n=2",
}


class UsageError(Exception):
    pass


# ---------------------------------------------------------------------------
# parsing helpers

_RANGE = re.compile(r"^\s*(-?\d+)\s*\.\.\s*(-?\d+)\s*$")


def parse_range(s: str) -> range:
    """"a..b" inclusive, or a single integer."""
    m = _RANGE.match(s)
    if m:
        a, b = int(m.group(1)), int(m.group(2))
        if a > b:
            raise UsageError(f"empty range {s!r}")
        return range(a, b + 1)
    try:
        v = int(s)
    except ValueError:
        raise UsageError(f"bad range {s!r}, expected a..b") from None
    return range(v, v + 1)


def parse_window(s: str) -> Window:
    """"a..b" (u-range, th=0, n=3) or "u=a..b,th=k,n=N,tw=W" with any subset of keys."""
    s = s.strip()
    if _RANGE.match(s):
        r = parse_range(s)
        return Window(3, r.start, r.stop - 1, 0)
    vals = {"n": 3, "th": 0, "tw": None, "u": None}
    for part in s.split(","):
        if "=" not in part:
            raise UsageError(f"bad window component {part!r}")
        k, v = (x.strip() for x in part.split("=", 1))
        if k not in vals:
            raise UsageError(f"unknown window key {k!r} (use u, th, n, tw)")
        vals[k] = parse_range(v) if k == "u" else _int(v, k)
    if vals["u"] is None:
        raise UsageError("window needs a u-range")
    r = vals["u"]
    try:
        return Window(vals["n"], r.start, r.stop - 1, vals["th"], vals["tw"])
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def parse_bidegrees(s: str) -> List[Bidegree]:
    """"n,d" or "n,a..b"."""
    parts = s.split(",")
    if len(parts) != 2:
        raise UsageError(f"bad bidegree {s!r}, expected n,d or n,a..b")
    n = _int(parts[0], "bidegree level")
    return [Bidegree(n, d) for d in parse_range(parts[1])]


def _int(v: str, what: str) -> int:
    try:
        return int(v)
    except ValueError:
        raise UsageError(f"{what}: expected an integer, got {v!r}") from None


def read_config(path: str) -> Dict[str, str]:
    """Flat ``key = value`` file; blank lines and ``#`` comments ignored."""
    out = {}
    try:
        fh = open(path, encoding="utf-8")
    except OSError as exc:
        raise UsageError(f"cannot read config {path}: {exc}") from None
    with fh:
        for n, line in enumerate(fh, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise UsageError(f"{path}:{n}: expected key = value")
            k, v = line.split("=", 1)
            out[k.strip().replace("_", "-")] = v.strip()
    return out


# ---------------------------------------------------------------------------
# records

def record(check_id: str, status: str, data, family: str = "", params=(), bidegree=None,
           prime: Optional[int] = None, seed: Optional[int] = None, elapsed: float = 0.0) -> dict:
    return {
        "check_id": check_id,
        "family": family,
        "params": list(params),
        "bidegree": list(bidegree) if bidegree is not None else None,
        "prime": prime,
        "seed": seed,
        "status": status,
        "data": data,
        "elapsed_ms": round(elapsed * 1000, 3),
    }


def _ok(flag: bool) -> str:
    return PASS if flag else FAIL


def _timed(fn):
    t0 = time.perf_counter()
    out = fn()
    return out, time.perf_counter() - t0


# ---------------------------------------------------------------------------
# commands

def cmd_relators(cfg) -> List[dict]:
    out = []
    for rel in enumerate_relators(cfg.window, cfg.families):
        out.append(record(rel.id, PASS, {"elem": rel.elem.serialize()}, rel.family.name, rel.params,
                          rel.bidegree))
    return out


def cmd_rank(cfg) -> List[dict]:
    if not cfg.bidegree:
        raise UsageError("rank needs --bidegree")
    out = []
    for b in cfg.bidegree:
        reps = []
        for p in cfg.primes:
            a = EvalAssign.from_seed(p, cfg.seed)
            rep, dt = _timed(lambda: rank_quotient(b, cfg.window, a, cfg.families, cfg.seed, cfg.mode))
            reps.append(rep)
            out.append(record(f"rank({b.n},{b.d})@{p}", PASS, rep.payload(), "", (), b, p, cfg.seed, dt))
        if len({r.quotient_rank for r in reps}) > 1:
            for rec in out[-len(reps):]:
                rec["status"] = FAIL
    return out


def cmd_check_cubic(cfg) -> List[dict]:
    out = []
    for m in cfg.m:
        def run():
            rel = relator_cubic(m)
            closed = commutator(commutator(u(m + 1), u(m + 3)), u(m + 2))
            return rel, rel.elem == closed
        (rel, ok), dt = _timed(run)
        out.append(record(rel.id, _ok(ok), {"residue_equals_nested_commutator": ok,
                                             "n_terms": len(rel.elem)}, rel.family.name, rel.params,
                          rel.bidegree, elapsed=dt))
    return out


def cmd_check_r(cfg) -> List[dict]:
    out = []
    p = cfg.primes[0]
    extra = tuple(cfg.primes[1:2]) if len(cfg.primes) > 1 else (DEFAULT_PRIMES[1],)
    a = EvalAssign.from_seed(p, cfg.seed)
    for trip in itertools.product(cfg.grid, repeat=3):
        rel = relator_R(*trip)
        cert, dt = _timed(lambda: membership_deepening(rel.elem, cfg.window, a, cfg.tw_max, cfg.families,
                                                       extra_primes=extra, seed=cfg.seed))
        cid = f"R({','.join(map(str, trip))})"
        if not cert:
            out.append(record(cid, INCONCLUSIVE, {"certificate": None, "note": "not in windowed span"},
                              "R_SYM", trip, rel.bidegree, p, cfg.seed, dt))
            continue
        ok = cert.verify() and all(c["verified"] for c in cert.cross_checks)
        data = {"window": cert.window.as_dict(), "certificate": cert.as_record()}
        out.append(record(cid, _ok(ok), data, "R_SYM", trip, rel.bidegree, p, cfg.seed, dt))
    return out


def cmd_check_delta(cfg) -> List[dict]:
    out = []
    p = cfg.primes[0]
    a = EvalAssign.from_seed(p, cfg.seed)
    pts = EvalPointSet(p, cfg.seed, 3, 3)
    for rel in enumerate_relators(cfg.window, cfg.families):
        rep, dt = _timed(lambda: delta_check_relator(rel, cfg.window, a, pts))
        out.append(record(rel.id, rep.status, rep.payload(), rel.family.name, rel.params, rel.bidegree,
                          p, cfg.seed, dt))
    return out


def cmd_eq1(cfg) -> List[dict]:
    res, dt = _timed(lambda: eq1_decompose(cfg.window))
    base = res.payload()
    out = [
        record("eq1/term1", _ok(res.term1_ok), {"term1_equals_r_tensor_1": res.term1_ok,
                                                "n_terms": base["n_terms"]["term1"]},
               "CUBIC", (-2,), (3, 0), elapsed=dt),
        record("eq1/term3", _ok(res.term3_ok), {"matches_formula": res.term3_ok,
                                                "theta_weight_checked": res.term3_weight,
                                                "n_terms": base["n_terms"]["term3"]},
               "CUBIC", (-2,), (3, 0)),
    ]
    for p in cfg.primes:
        pts = EvalPointSet(p, cfg.seed, cfg.points, 3)
        ok, dt = _timed(lambda: all(tensor_oracle_zero(res.E.component(k), pts) for k in res.E.components()))
        out.append(record(f"eq1/E@{p}", _ok(ok), {"E_components": base["E_components"],
                                                  "n_points": cfg.points, "can_can_zero": ok,
                                                  "dropped_components": base["dropped_components"]},
                          "CUBIC", (-2,), (3, 0), p, cfg.seed, dt))
    return out


def _oracle_relators(params: range) -> List:
    ps = list(params)
    rels = [relator_theta_comm(m, n) for m in ps for n in ps if 1 <= m < n]
    rels += [relator_quad(a, b) for a in ps for b in ps if a <= b]
    rels += [relator_mixed(a, b) for a in ps for b in ps]
    rels += [relator_cubic(m) for m in ps]
    rels += [relator_R(m, n, l) for m in ps for n in ps for l in ps if m <= n <= l]
    return [r for r in rels if r.elem]


def cmd_oracle(cfg) -> List[dict]:
    out = []
    p = cfg.primes[0]
    pts = EvalPointSet(p, cfg.seed, 3, 6)
    for rel in _oracle_relators(cfg.params):
        for lev in cfg.levels:
            ok, dt = _timed(lambda: rep_check_relator(rel, lev, pts))
            out.append(record(f"oracle/{rel.id}/L{lev}", _ok(ok), {"test_level": lev, "vanishes": ok},
                              rel.family.name, rel.params, rel.bidegree, p, cfg.seed, dt))
    # rank sandwich on every requested component
    for b in cfg.bidegree or [Bidegree(2, 1)]:
        def run():
            a = EvalAssign.from_seed(p, cfg.seed)
            upper = rank_quotient(b, cfg.window, a, DEFINING_FAMILIES, cfg.seed).quotient_rank
            words = component_words(b, cfg.window)
            imgs = [can_map(AlgElem.word(w)) for w in words]
            lower = eval_rank(imgs, EvalPointSet(p, cfg.seed, max(len(imgs), 1), b.n))
            return upper, lower, len(words)
        (upper, lower, nw), dt = _timed(run)
        status = PASS if lower == upper else (INCONCLUSIVE if lower < upper else FAIL)
        out.append(record(f"sandwich({b.n},{b.d})", status,
                          {"rank_quotient": upper, "eval_rank": lower, "n_words": nw,
                           "window": cfg.window.as_dict()}, "", (), b, p, cfg.seed, dt))
    return out


def cmd_lemma_tensor(cfg) -> List[dict]:
    out = []
    p = cfg.primes[0]
    rng = random.Random(f"{p}:{cfg.seed}:lemma")
    for i in range(cfg.trials):
        n = rng.randint(1, cfg.dim_max)
        m = rng.randint(1, n)
        f = random_surjection(n, m, p, rng)
        ok, dt = _timed(lambda: kernel_tensor_check(f, trials=3, p=p, rng=rng))
        out.append(record(f"lemma-tensor/{i:04d}", _ok(ok), {"dim_V": n, "dim_W": m,
                                                           "dim_ker_expected": n * n - m * m},
                          prime=p, seed=cfg.seed, elapsed=dt))
    return out


COMMANDS = {
    "relators": cmd_relators,
    "rank": cmd_rank,
    "check-cubic": cmd_check_cubic,
    "check-R": cmd_check_r,
    "check-delta": cmd_check_delta,
    "eq1": cmd_eq1,
    "oracle": cmd_oracle,
    "lemma-tensor": cmd_lemma_tensor,
}


# ---------------------------------------------------------------------------
# config

FAMILY_NAMES = {f.name: f for f in Family}


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="ehall", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=f"ehall {__version__}")
    ap.add_argument("command", choices=sorted(COMMANDS))
    ap.add_argument("--config", help="key = value file; flags override it")
    ap.add_argument("--window", help='"a..b" or "u=a..b,th=k,n=N,tw=W"')
    ap.add_argument("--bidegree", help='"n,d" or "n,a..b"')
    ap.add_argument("--prime", type=int, help="single prime (overrides --primes)")
    ap.add_argument("--primes", help="comma-separated primes")
    ap.add_argument("--seed", type=int)
    ap.add_argument("--mode", choices=["exact", "modular"])
    ap.add_argument("--format", choices=["json", "csv"])
    ap.add_argument("--output", help="write the report here instead of stdout")
    ap.add_argument("--families", help="comma-separated family names")
    ap.add_argument("--m", help="check-cubic: m range a..b")
    ap.add_argument("--grid", help="check-R: range for m, n, l")
    ap.add_argument("--tw-max", type=int, help="check-R: largest Θ-weight tried")
    ap.add_argument("--params", help="oracle: parameter range")
    ap.add_argument("--levels", help="oracle: probe levels a..b")
    ap.add_argument("--points", type=int, help="eq1: evaluation points per prime")
    ap.add_argument("--trials", type=int, help="lemma-tensor: number of instances")
    ap.add_argument("--dim-max", type=int, help="lemma-tensor: max dim V")
    return ap


class RunConfig:
    """Validated run configuration; ``as_dict`` is echoed into the report."""

    def __init__(self, command: str, raw: Dict[str, object]):
        self.command = command
        get = raw.get
        self.window = parse_window(str(get("window") or DEFAULT_WINDOWS.get(command, "u=-2..2,th=2,n=3")))
        if get("prime") is not None:
            self.primes = [_int(str(get("prime")), "prime")]
        elif get("primes"):
            self.primes = [_int(x, "primes") for x in str(get("primes")).split(",") if x.strip()]
        else:
            self.primes = list(DEFAULT_PRIMES)
        if not self.primes or any(p < 3 for p in self.primes):
            raise UsageError("primes must be odd primes")
        self.seed = _int(str(get("seed")), "seed") if get("seed") is not None else DEFAULT_SEED
        self.mode = str(get("mode") or "modular")
        if self.mode not in ("exact", "modular"):
            raise UsageError(f"mode must be exact or modular, got {self.mode!r}")
        self.format = str(get("format") or "json")
        if self.format not in ("json", "csv"):
            raise UsageError(f"format must be json or csv, got {self.format!r}")
        self.output = get("output")
        self.bidegree = parse_bidegrees(str(get("bidegree"))) if get("bidegree") else []
        fams = get("families")
        if fams:
            try:
                self.families = tuple(FAMILY_NAMES[x.strip()] for x in str(fams).split(","))
            except KeyError as exc:
                raise UsageError(f"unknown family {exc.args[0]!r}") from None
        else:
            self.families = DEFINING_FAMILIES
        self.m = parse_range(str(get("m") or "-5..5"))
        self.grid = parse_range(str(get("grid") or "-1..1"))
        self.tw_max = _int(str(get("tw-max")), "tw-max") if get("tw-max") is not None else 4
        self.params = parse_range(str(get("params") or "-3..3"))
        self.levels = parse_range(str(get("levels") or "0..2"))
        if self.levels.start < 0 or self.levels.stop > 3:
            raise UsageError("levels must lie in 0..2")
        self.points = _int(str(get("points")), "points") if get("points") is not None else 20
        self.trials = _int(str(get("trials")), "trials") if get("trials") is not None else 100
        self.dim_max = _int(str(get("dim-max")), "dim-max") if get("dim-max") is not None else 6
        if self.points < 1 or self.trials < 0 or self.dim_max < 1:
            raise UsageError("points, trials and dim-max must be positive")

    def as_dict(self) -> dict:
        return {
            "command": self.command,
            "window": self.window.as_dict(),
            "primes": self.primes,
            "seed": self.seed,
            "mode": self.mode,
            "format": self.format,
            "bidegree": [list(b) for b in self.bidegree],
            "families": [f.name for f in self.families],
            "m": [self.m.start, self.m.stop - 1],
            "grid": [self.grid.start, self.grid.stop - 1],
            "tw_max": self.tw_max,
            "params": [self.params.start, self.params.stop - 1],
            "levels": [self.levels.start, self.levels.stop - 1],
            "points": self.points,
            "trials": self.trials,
            "dim_max": self.dim_max,
        }


def _glue_values(argv: Sequence[str], ap: argparse.ArgumentParser) -> List[str]:
    # "--window -1..2" would otherwise be read as an unknown option
    valued = {o for a in ap._actions if a.nargs is None and a.option_strings for o in a.option_strings}
    out: List[str] = []
    it = iter(argv)
    for a in it:
        if a in valued:
            nxt = next(it, None)
            out.append(a if nxt is None else f"{a}={nxt}")
        else:
            out.append(a)
    return out


def make_config(argv: Sequence[str]) -> RunConfig:
    ap = build_parser()
    ns = ap.parse_args(_glue_values(argv, ap))
    raw: Dict[str, object] = {}
    if ns.config:
        raw.update(read_config(ns.config))
    for k, v in vars(ns).items():
        if v is not None and k not in ("command", "config"):
            raw[k.replace("_", "-")] = v
    if ns.prime is not None:
        raw.pop("primes", None)
    return RunConfig(ns.command, raw)


# ---------------------------------------------------------------------------
# execution and output

def execute(cfg: RunConfig) -> dict:
    t0 = time.time()
    records = COMMANDS[cfg.command](cfg)
    records.sort(key=lambda r: r["check_id"])
    counts = {s: sum(r["status"] == s for r in records) for s in (PASS, FAIL, INCONCLUSIVE)}
    return {
        "tool": "ehall",
        "version": __version__,
        "config": cfg.as_dict(),
        "records": records,
        "summary": counts,
        "timing": {"wall_ms": round((time.time() - t0) * 1000, 3), "started_at": t0},
    }


def payload(report: dict) -> dict:
    """The report without timing fields: identical across reruns with one config."""
    out = {k: v for k, v in report.items() if k != "timing"}
    out["records"] = [{k: v for k, v in r.items() if k != "elapsed_ms"} for r in report["records"]]
    return out


def exit_code(report: dict) -> int:
    statuses = {r["status"] for r in report["records"]}
    if FAIL in statuses:
        return 1
    if INCONCLUSIVE in statuses:
        return 3
    return 0


def render(report: dict, fmt: str) -> str:
    if fmt == "json":
        return json.dumps(report, indent=2, sort_keys=True) + "\n"
    buf = io.StringIO()
    wr = csv.writer(buf, lineterminator="\n")
    wr.writerow(FIELDS)
    for r in report["records"]:
        wr.writerow([json.dumps(r[f], sort_keys=True) if isinstance(r[f], (dict, list)) else
                     ("" if r[f] is None else r[f]) for f in FIELDS])
    return buf.getvalue()


def main(argv: Optional[Sequence[str]] = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        cfg = make_config(argv)
        report = execute(cfg)
    except UsageError as exc:
        print(f"ehall: error: {exc}", file=sys.stderr)
        return 2
    except SystemExit as exc:  # argparse
        return int(exc.code or 0)
    text = render(report, cfg.format)
    if cfg.output:
        with open(cfg.output, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return exit_code(report)


if __name__ == "__main__":
    sys.exit(main())
