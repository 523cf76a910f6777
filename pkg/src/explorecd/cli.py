"""Command-line entry point: ``explorecd <command> [options]``."""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from . import runner
from .data import DatasetBundle, load_bundle, load_ego_snap, read_cover, save_bundle
from .generators import AgmSpec, generate_agm


class CliError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise CliError(message)


def _load_config(path: str | None) -> dict:
    if not path:
        return {}
    p = Path(path)
    text = p.read_text()
    if p.suffix in (".yaml", ".yml"):
        import yaml
        return yaml.safe_load(text) or {}
    return json.loads(text)


def _parse_value(raw: str):
    try:
        return json.loads(raw)
    except json.JSONDecodeError:
        return raw


def build_config(args) -> runner.RunConfig:
    d = _load_config(args.config)
    for item in args.set or []:
        key, _, raw = item.partition("=")
        if not _:
            raise CliError(f"--set expects key=value, got {item!r}")
        d[key] = _parse_value(raw)
    if args.dataset:
        d["dataset"] = {"bundle": args.dataset}
    if args.seed is not None:
        d["seeds"] = [args.seed]
    if args.seeds:
        d["seeds"] = args.seeds
    if args.budget_pct is not None:
        # percent on the command line, fraction in the config
        d["budget_pct"] = args.budget_pct / 100.0
        d["budget"] = None
    if args.out:
        d["out"] = args.out
    return runner.RunConfig.from_dict(d)


def _run_common(args, variant: str | None) -> dict:
    cfg = build_config(args)
    if variant:
        cfg.variant = variant
    if cfg.dataset is None:
        raise CliError("no dataset: pass --dataset or set 'dataset' in the config")
    bundle = runner.load_dataset(cfg.dataset)
    cfg.validate(bundle.n_nodes)

    def factory(_seed):
        return DatasetBundle(bundle.hidden.fresh(), bundle.features, bundle.truth, bundle.name,
                             bundle.seed, bundle.extra)

    reports = runner.run_seeds(factory, cfg, workers=args.workers)
    if cfg.out:
        runner.write_reports(reports, cfg.out)
    return {"reports": [r.to_dict() for r in reports]}


def cmd_run(args):
    return _run_common(args, None)


def cmd_sim(args):
    return _run_common(args, "sim")


def cmd_ablate(args):
    return _run_common(args, f"ablation{args.which}")


def cmd_theorems(args):
    res = runner.verify_theorems(n_instances=args.instances, Ks=tuple(args.K), p=args.p,
                                 seed=args.seed or 0)
    _write_json(res, args.out, "theorems.json")
    return res


def cmd_bench(args):
    cfg = build_config(args)
    res = runner.bench_scaling(n=args.n, qs=tuple(args.q), cfg=cfg if args.config or args.set else None,
                               seed=args.seed or 0)
    _write_json(res, args.out, "bench.json")
    return res


def cmd_convert(args):
    if args.ego:
        bundle = load_ego_snap(args.ego, keep_ego=not args.drop_ego)
    else:
        bundle = generate_agm(AgmSpec(**_load_config(args.agm)))
    save_bundle(bundle, args.output)
    return {"written": args.output, "n_nodes": bundle.n_nodes, "n_edges": bundle.hidden.n_edges,
            "n_communities": bundle.truth.K}


def cmd_metrics(args):
    from .metrics import evaluate
    if args.dataset:
        truth = load_bundle(args.dataset).truth
        return evaluate(truth, read_cover(args.detected, truth.n_nodes)).to_dict()
    if not args.truth:
        raise CliError("metrics needs a reference cover file or --dataset")
    n = args.n_nodes
    if n is None:
        n = max(read_cover(args.truth).n_nodes, read_cover(args.detected).n_nodes)
    return evaluate(read_cover(args.truth, n), read_cover(args.detected, n)).to_dict()


def _write_json(obj, out, name):
    if out:
        p = Path(out)
        p.mkdir(parents=True, exist_ok=True)
        (p / name).write_text(json.dumps(obj, indent=1, default=str))


def _add_run_flags(p):
    p.add_argument("--config", help="JSON or YAML run configuration")
    p.add_argument("--dataset", help="bundle file (overrides the config's dataset)")
    p.add_argument("--seed", type=int)
    p.add_argument("--seeds", type=int, nargs="+")
    p.add_argument("--budget-pct", type=float, help="query budget as a percentage of N")
    p.add_argument("--workers", type=int, default=1, help="threads for multi-seed runs")
    p.add_argument("--out")
    p.add_argument("--set", action="append", metavar="KEY=VALUE", help="override any config field")


def make_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="explorecd", description="Overlapping community detection on hidden graphs.")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True, parser_class=_Parser)

    for name, fn, help_ in [("run", cmd_run, "iterative query/embed/infer run"),
                            ("sim", cmd_sim, "single-shot random-query variant")]:
        p = sub.add_parser(name, help=help_)
        _add_run_flags(p)
        p.set_defaults(fn=fn)

    p = sub.add_parser("ablate", help="run one ablation variant")
    _add_run_flags(p)
    p.add_argument("--which", type=int, choices=[1, 2, 3, 4], required=True)
    p.set_defaults(fn=cmd_ablate)

    p = sub.add_parser("theorems", help="degree-ordering checks on generated instances")
    p.add_argument("--instances", type=int, default=20)
    p.add_argument("--K", type=int, nargs="+", default=[2, 3])
    p.add_argument("--p", type=float, default=0.1)
    p.add_argument("--seed", type=int)
    p.add_argument("--out")
    p.set_defaults(fn=cmd_theorems)

    p = sub.add_parser("bench", help="per-iteration time versus edge count on G(n, q)")
    _add_run_flags(p)
    p.add_argument("--n", type=int, default=2000)
    p.add_argument("--q", type=float, nargs="+", default=list(runner.DEFAULT_Q))
    p.set_defaults(fn=cmd_bench)

    p = sub.add_parser("convert", help="write a dataset bundle from raw ego files or an AGM spec")
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--ego", help="path prefix of the .edges/.feat/.egofeat/.circles files")
    src.add_argument("--agm", help="JSON/YAML file with AGM generator parameters")
    p.add_argument("--drop-ego", action="store_true")
    p.add_argument("output")
    p.set_defaults(fn=cmd_convert)

    p = sub.add_parser("metrics", help="score a detected cover file against a reference cover")
    p.add_argument("truth", nargs="?", help="reference cover file (or use --dataset)")
    p.add_argument("detected", help="detected cover file")
    p.add_argument("--dataset", help="take the reference cover from this bundle")
    p.add_argument("--n-nodes", type=int, help="node count when neither file spans all nodes")
    p.set_defaults(fn=cmd_metrics)
    return ap


def main(argv=None) -> int:
    try:
        args = make_parser().parse_args(argv)
        logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING)
        result = args.fn(args)
    except CliError as exc:
        print(json.dumps({"error": str(exc), "type": "usage"}), file=sys.stderr)
        return 2
    except Exception as exc:  # noqa: BLE001 - every failure becomes a JSON error
        phase = getattr(exc, "phase", None)
        print(json.dumps({"error": str(exc), "type": type(exc).__name__, "phase": phase}), file=sys.stderr)
        return 1
    print(json.dumps(result, indent=1, default=str))
    return 0


if __name__ == "__main__":
    sys.exit(main())
