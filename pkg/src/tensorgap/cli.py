"""Command line front-end: ``tensorgap {sample,norm,cn,moments,ratio,oracle-check}``.

Settings come from an optional JSON file (``--config``) overridden by flags.
Sampled sequences use one global seed: tuple ``c`` of a sequence is sampled
with ``derive_seed(seed, c)``.

Exit codes: 0 ok, 1 usage or validation error, 2 I/O error, 3 a norm did
not converge, 4 oracle check failed.
"""
from __future__ import annotations

import argparse
import json
import sys
import time
import warnings
from pathlib import Path


from . import ensembles, harness, superop, words
from .linalg import ParseError, ShapeError, ValidationError, check_unitary, save_json, save_utpl

EXIT_OK, EXIT_USAGE, EXIT_IO, EXIT_UNCONVERGED, EXIT_ORACLE = 0, 1, 2, 3, 4

DEFAULTS = {
    "seed": 0,
    "tol": 1e-9,
    "max_iter": 5000,
    "restarts": 3,
    "degree": 4,
    "jobs": 1,
    "format": "json",
    "kind": "haar",
    "n": 2,
    "dim": 4,
    "count": None,
    "split": None,
    "threshold": 0.1,
    "sample_words": None,
    "instances": 50,
    "out": None,
    "no_timestamp": False,
}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _common(p: argparse.ArgumentParser):
    S = argparse.SUPPRESS
    p.add_argument("--config", metavar="PATH", help="JSON file with default settings")
    p.add_argument("--seed", type=int, default=S, help="global seed (u64)")
    p.add_argument("--tol", type=float, default=S, help="relative eigen-residual tolerance (1e-9)")
    p.add_argument("--max-iter", dest="max_iter", type=int, default=S, help="operator applications per start (5000)")
    p.add_argument("--restarts", type=int, default=S, help="independent Lanczos starts (3)")
    p.add_argument("--degree", type=int, default=S, help="moment degree (4)")
    p.add_argument("--jobs", type=int, default=S, help="concurrent pair-norm jobs")
    p.add_argument("--out", metavar="PATH", default=S, help="output file (stdout if omitted)")
    p.add_argument("--format", choices=("json", "csv"), default=S)
    p.add_argument("--no-timestamp", dest="no_timestamp", action="store_true", default=S)


def _ensemble_flags(p: argparse.ArgumentParser, count_help: str):
    S = argparse.SUPPRESS
    p.add_argument("--kind", choices=("haar", "permutation-complement"), default=S)
    p.add_argument("--n", type=int, default=S, help="tuple length")
    p.add_argument("--dim", type=int, default=S, help="matrix size N")
    p.add_argument("--dims", default=S, help="comma-separated sizes, one tuple per size")
    p.add_argument("--count", type=int, default=S, help=count_help)
    p.add_argument("--inputs", nargs="+", default=S, metavar="FILE", help="tuple files instead of sampling")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="tensorgap", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("sample", help="sample unitary tuples to .utpl/JSON files")
    _common(p)
    _ensemble_flags(p, "number of tuples (1)")

    p = sub.add_parser("norm", help="min norm of sum u_i (x) conj(v_i) for two tuple files")
    _common(p)
    p.add_argument("left")
    p.add_argument("right")

    p = sub.add_parser("cn", help="pair-norm table and its off-diagonal supremum")
    _common(p)
    _ensemble_flags(p, "number of sampled tuples (4)")

    p = sub.add_parser("moments", help="moment tables and convergence diagnostics")
    _common(p)
    _ensemble_flags(p, "number of sampled tuples (1)")
    p.add_argument("--threshold", type=float, default=argparse.SUPPRESS)
    p.add_argument("--sample-words", dest="sample_words", type=int, default=argparse.SUPPRESS,
                   help="evaluate this many random reduced words instead of all")

    p = sub.add_parser("ratio", help="direct-sum tensor report over a split sequence")
    _common(p)
    _ensemble_flags(p, "number of sampled tuples (8)")
    p.add_argument("--split", type=int, default=argparse.SUPPRESS,
                   help="first SPLIT tuples form one side (half by default)")
    p.add_argument("--sample-words", dest="sample_words", type=int, default=argparse.SUPPRESS)

    p = sub.add_parser("oracle-check", help="compare the Krylov solver with the dense oracle")
    _common(p)
    p.add_argument("--instances", type=int, default=argparse.SUPPRESS)
    p.add_argument("--inputs", nargs="+", default=argparse.SUPPRESS, metavar="FILE",
                   help="extra tuple files paired with each other")
    return parser


def resolve(args: argparse.Namespace) -> dict:
    """Defaults < config file < flags."""
    cfg = dict(DEFAULTS)
    given = vars(args)
    if given.get("config"):
        try:
            loaded = json.loads(Path(given["config"]).read_text())
        except json.JSONDecodeError as exc:
            raise UsageError(f"config is not valid JSON: {exc}") from exc
        if not isinstance(loaded, dict):
            raise UsageError("config must be a JSON object")
        cfg.update({k.replace("-", "_"): v for k, v in loaded.items()})
    cfg.update({k: v for k, v in given.items() if k != "config"})
    for key in ("tol", "max_iter", "restarts", "jobs", "n", "dim", "instances"):
        if cfg.get(key) is not None and not cfg[key] > 0:
            raise UsageError(f"--{key.replace('_', '-')} must be positive")
    if cfg["degree"] < 0:
        raise UsageError("--degree must be >= 0")
    if cfg["format"] not in ("json", "csv"):
        raise UsageError(f"unknown format {cfg['format']!r}")
    if not 0 <= int(cfg["seed"]) < 2**64:
        raise UsageError("--seed must be an unsigned 64-bit integer")
    return cfg


def _params(cfg) -> superop.SolverParams:
    return superop.SolverParams(
        tol=float(cfg["tol"]), max_iter=int(cfg["max_iter"]),
        n_restarts=int(cfg["restarts"]), seed=int(cfg["seed"]),
    )


def _sequence(cfg, default_count: int) -> list:
    if cfg.get("inputs"):
        return [ensembles.load_tuple(p) for p in cfg["inputs"]]
    if cfg.get("dims"):
        dims = cfg["dims"]
        dims = [int(d) for d in (dims.split(",") if isinstance(dims, str) else dims)]
    else:
        dims = [int(cfg["dim"])] * int(cfg["count"] or default_count)
    specs = [
        ensembles.EnsembleSpec(cfg["kind"], int(cfg["n"]), d, ensembles.derive_seed(cfg["seed"], c))
        for c, d in enumerate(dims)
    ]
    return [ensembles.sample(s) for s in specs]


def _emit(cfg, payload, text: str | None = None):
    """Write a JSON payload (or ready-made text) to ``--out`` or stdout."""
    if text is None:
        if not cfg["no_timestamp"]:
            payload = {**payload, "created": time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime())}
        text = json.dumps(payload, indent=2, sort_keys=False, allow_nan=True) + "\n"
    if cfg["out"]:
        Path(cfg["out"]).write_text(text)
    else:
        sys.stdout.write(text)


def cmd_sample(cfg) -> int:
    """Writes ``.utpl`` files; ``--out x.json`` (single tuple) writes the JSON mirror."""
    seq = _sequence(cfg, 1)
    out = Path(cfg["out"] or "tuples")
    if len(seq) == 1 and out.suffix in (".utpl", ".json"):
        targets = [out]
    else:
        out.mkdir(parents=True, exist_ok=True)
        targets = [out / f"tuple_{c:03d}.utpl" for c in range(len(seq))]
    for t, path in zip(seq, targets):
        (save_json if path.suffix == ".json" else save_utpl)(t, path)
        _, defect = check_unitary(t)
        print(f"{path}\t{t.label}\tdefect={defect:.3e}")
    return EXIT_OK


def cmd_norm(cfg) -> int:
    left = ensembles.load_tuple(cfg["left"])
    right = ensembles.load_tuple(cfg["right"])
    if left.n != right.n:
        raise ShapeError(f"tuples have different n: {left.n} vs {right.n}")
    est = superop.min_norm(superop.BimultiplicationOperator(left, right), params=_params(cfg))
    _emit(cfg, est.to_dict())
    return EXIT_OK if est.converged else EXIT_UNCONVERGED


def cmd_cn(cfg) -> int:
    seq = _sequence(cfg, 4)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        est = harness.estimate_cn(seq, _params(cfg), cfg["jobs"])
    if cfg["format"] == "csv":
        table = dict(est.pair_norms)
        table.update({(m, m): e for m, e in est.diag_norms.items()})
        _emit(cfg, None, harness.pairs_csv(dict(sorted(table.items()))))
    else:
        _emit(cfg, {"labels": [t.label for t in seq], **est.to_dict()})
    return EXIT_UNCONVERGED if est.unconverged else EXIT_OK


def cmd_moments(cfg) -> int:
    seq = _sequence(cfg, 1)
    k, sample = int(cfg["degree"]), cfg.get("sample_words")
    try:
        tables = [words.moment_table(t, k, sample, int(cfg["seed"])) for t in seq]
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    if cfg["format"] == "csv":
        rows = ["table,word,re,im"]
        for i, t in enumerate(tables):
            rows += [f"{i},{w},{v.real!r},{v.imag!r}" for w, v in t.entries.items()]
        _emit(cfg, None, "\n".join(rows) + "\n")
        return EXIT_OK
    payload = {"labels": [t.label for t in seq], "tables": [t.to_dict() for t in tables]}
    if len(seq) >= 2:
        rep = words.convergence_report(seq, k, float(cfg["threshold"]), sample, int(cfg["seed"]))
        payload["convergence"] = rep.to_dict()
    else:
        ref = words.free_haar_table(seq[0].n, k, tables[0].words())
        payload["to_reference"] = words.distance(tables[0], ref).to_dict()
    _emit(cfg, payload)
    return EXIT_OK


def cmd_ratio(cfg) -> int:
    seq = _sequence(cfg, 8)
    split = cfg["split"] if cfg["split"] is not None else len(seq) // 2
    if not 1 <= split < len(seq):
        raise UsageError("both sides of the split need at least one tuple")
    a, b = harness.build_direct_sum(seq[:split]), harness.build_direct_sum(seq[split:])
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        rep = harness.ratio_report(a, b, int(cfg["degree"]), _params(cfg), cfg["jobs"],
                                   cfg.get("sample_words"))
    if cfg["format"] == "csv":
        _emit(cfg, None, harness.pairs_csv(rep.pair_norms))
    else:
        _emit(cfg, {"labels": [t.label for t in seq], "split": split, **rep.to_dict()})
    return EXIT_OK if rep.converged else EXIT_UNCONVERGED


def oracle_instances(seed: int, count: int) -> list:
    """Seeded random instances with ``n`` in 1..3 and sizes in 2..6, both ensembles."""
    rng = ensembles.stream(seed, 0)
    out = []
    for c in range(count):
        n = int(rng.integers(1, 4))
        na, nb = (int(d) for d in rng.integers(2, 7, size=2))
        kinds = ("haar", "permutation-complement")
        ka, kb = kinds[c % 2], kinds[(c // 2) % 2]
        u = ensembles.sample(ensembles.EnsembleSpec(ka, n, na, ensembles.derive_seed(seed, c, 0)))
        v = ensembles.sample(ensembles.EnsembleSpec(kb, n, nb, ensembles.derive_seed(seed, c, 1)))
        out.append((u, v))
    return out


def cmd_oracle_check(cfg) -> int:
    pairs = oracle_instances(int(cfg["seed"]), int(cfg["instances"]))
    extra = [ensembles.load_tuple(p) for p in cfg.get("inputs") or []]
    pairs += [(u, v) for u in extra for v in extra if u.n == v.n]
    params = _params(cfg)
    rows = []
    for u, v in pairs:
        op = superop.BimultiplicationOperator(u, v)
        est = superop.min_norm(op, params=params)
        dense = superop.dense_norm_oracle(op)
        rows.append({"n": u.n, "dim_left": u.dim, "dim_right": v.dim, "krylov": est.value,
                     "dense": dense, "discrepancy": abs(est.value - dense),
                     "converged": est.converged})
    worst = max(r["discrepancy"] for r in rows)
    ok = worst <= 1e-8 and all(r["converged"] for r in rows)
    print(f"oracle-check: {len(rows)} instances, max discrepancy {worst:.3e} -> "
          f"{'PASS' if ok else 'FAIL'}", file=sys.stderr)
    _emit(cfg, {"instances": len(rows), "max_discrepancy": worst, "passed": ok, "rows": rows})
    return EXIT_OK if ok else EXIT_ORACLE


COMMANDS = {
    "sample": cmd_sample,
    "norm": cmd_norm,
    "cn": cmd_cn,
    "moments": cmd_moments,
    "ratio": cmd_ratio,
    "oracle-check": cmd_oracle_check,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    command = args.command
    del args.command
    try:
        cfg = resolve(args)
        return COMMANDS[command](cfg)
    except (UsageError, ValidationError, ParseError, ShapeError, ValueError) as exc:
        print(f"tensorgap {command}: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"tensorgap {command}: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
