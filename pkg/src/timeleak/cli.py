"""Command-line pipeline: gen | sweep | train | analyze | report.

Stages communicate through documented CSV/JSON artifacts. Every JSON artifact
embeds the hash of its producing run manifest; the manifest itself (with
wall-clock timings) is written next to the primary output. Exit codes: 0
success, 2 generation, 3 training, 4 analysis, 5 reporting.
"""

from __future__ import annotations

import argparse
import os
import sys
import time
from pathlib import Path

from . import __version__, counter, dataset, network, quantifier, sweep as sweep_mod
from .jsonio import canonical_dumps, hash_file, read_json, sha256_hex, write_json
from .svgplot import line_plot

_EXIT_CODES = {"gen": 2, "sweep": 3, "train": 3, "analyze": 4, "report": 5}


class CliError(Exception):
    pass


# ---------------------------------------------------------------------------
# Run manifests
# ---------------------------------------------------------------------------


class Manifest:
    """Per-run record: command, argument echo, input hashes, stage timings.

    The hash excludes filesystem paths, wall-clock fields, and execution-only
    knobs (--threads) so that re-running the same command on the same data
    elsewhere yields the same hash and hence byte-identical downstream
    artifacts.
    """

    _UNHASHED_ARGS = {"out", "out_dir", "data", "model", "census", "sweep", "config", "sidecar", "threads"}

    def __init__(self, command: str, args: dict):
        self.command = command
        self.args = {k: v for k, v in args.items() if k not in ("func", "command")}
        self.input_hashes: dict[str, str] = {}
        self.outputs: list[str] = []
        self.stages: dict[str, float] = {}
        self._t0 = time.monotonic()

    def add_input(self, path) -> None:
        self.input_hashes[Path(path).name] = hash_file(path)

    def add_output(self, path) -> None:
        self.outputs.append(Path(path).name)

    def stage_done(self, name: str) -> None:
        now = time.monotonic()
        self.stages[name] = round(now - self._t0, 6)
        self._t0 = now

    def hash(self) -> str:
        hashed_view = {
            "tool": "timeleak",
            "version": __version__,
            "command": self.command,
            "args": {k: v for k, v in self.args.items() if k not in self._UNHASHED_ARGS},
            "inputs": dict(sorted(self.input_hashes.items())),
        }
        return sha256_hex(canonical_dumps(hashed_view))

    def write(self, path) -> None:
        write_json(
            path,
            {
                "tool": "timeleak",
                "version": __version__,
                "command": self.command,
                "args": {k: (str(v) if isinstance(v, Path) else v) for k, v in self.args.items()},
                "inputs": dict(sorted(self.input_hashes.items())),
                "outputs": self.outputs,
                "stages": self.stages,
                "manifest_hash": self.hash(),
            },
        )


def _write_artifact(path, obj: dict, manifest: Manifest) -> None:
    obj = dict(obj)
    obj["manifest_hash"] = manifest.hash()
    write_json(path, obj)
    manifest.add_output(path)


# ---------------------------------------------------------------------------
# Shared helpers
# ---------------------------------------------------------------------------


def _widths(text: str) -> tuple[int, ...]:
    text = text.strip()
    if not text:
        return ()
    return tuple(int(part) for part in text.split(","))


def _load_traces(args) -> dataset.TraceDataset:
    data = Path(args.data)
    sidecar = getattr(args, "sidecar", None)
    if sidecar is None:
        candidate = data.with_suffix(data.suffix + ".schema.json")
        if not candidate.exists():
            candidate = data.with_suffix(".schema.json")
        sidecar = candidate if candidate.exists() else None
    return dataset.load_csv(data, sidecar=sidecar)


def _train_config(args) -> network.TrainConfig:
    return network.TrainConfig(
        learning_rate=args.lr,
        batch_size=args.batch_size,
        max_epochs=args.max_epochs,
        patience=args.patience,
        seed=args.seed,
        ste_clip=args.ste_clip,
    )


def _architecture(args, schema: dataset.FeatureSchema, k: int) -> network.Architecture:
    return network.Architecture(
        n_secret=schema.n_secret,
        n_public=schema.n_public,
        k=k,
        secret_widths=_widths(args.secret_widths),
        public_widths=_widths(args.public_widths),
        joint_widths=_widths(args.joint_widths),
    )


def _threads(args) -> int:
    if args.threads is not None:
        return max(1, args.threads)
    env = os.environ.get("TIMELEAK_THREADS")
    if env:
        return max(1, int(env))
    return os.cpu_count() or 1


# ---------------------------------------------------------------------------
# Subcommands
# ---------------------------------------------------------------------------


def cmd_gen(args) -> int:
    manifest = Manifest("gen", vars(args))
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)

    ground_truth = None
    if args.family == "rn":
        if not args.preset:
            raise CliError("--preset is required for the rn family")
        preset = dataset.rn_preset(args.preset)
        ds = dataset.gen_rn(
            preset.n_secret_bits, preset.clauses, preset.n_public_bits, args.rows, args.noise_std, args.seed
        )
        ground_truth = preset.ground_truth_sizes()
    elif args.family == "bl":
        i = args.variants
        secret_bits = args.secret_bits if args.secret_bits is not None else 8 + i
        ds = dataset.gen_bl(
            i,
            secret_bits,
            dataset.IntRange(args.public_lo, args.public_hi),
            args.rows,
            args.noise_std,
            args.seed,
        )
        ground_truth = dataset.bl_ground_truth(i, secret_bits)
    else:
        ds = dataset.gen_sort_demo(args.max_len, args.rows, args.seed)

    dataset.write_csv(ds, out)
    manifest.add_output(out)
    write_json(Path(str(out) + ".schema.json"), dataset.schema_to_json(ds.schema))
    manifest.add_output(str(out) + ".schema.json")
    if ground_truth is not None:
        write_json(Path(str(out) + ".groundtruth.json"), ground_truth)
        manifest.add_output(str(out) + ".groundtruth.json")
    manifest.stage_done("generate")
    manifest.write(Path(str(out) + ".manifest.json"))
    print(f"wrote {ds.n_rows} rows to {out}")
    return 0


def cmd_sweep(args) -> int:
    manifest = Manifest("sweep", vars(args))
    manifest.add_input(args.data)
    out_dir = Path(args.out_dir)
    (out_dir / "models").mkdir(parents=True, exist_ok=True)

    ds = _load_traces(args)
    arch = _architecture(args, ds.schema, k=0)
    config = _train_config(args)
    result = sweep_mod.sweep_k(
        ds,
        arch,
        args.k_max,
        config,
        seeds_per_k=args.seeds_per_k,
        tau=args.tau,
        test_fraction=args.test_fraction,
        threads=_threads(args),
    )
    manifest.stage_done("train_sweep")

    records = []
    for rec in result.records:
        rel = f"models/k{rec.k}.json"
        network.save(rec.model, out_dir / rel)
        manifest.add_output(out_dir / rel)
        records.append(
            sweep_mod.KRecord(
                k=rec.k,
                test_sse=rec.test_sse,
                test_r2=rec.test_r2,
                max_abs_residual=rec.max_abs_residual,
                seed=rec.seed,
                model=rec.model,
                model_path=rel,
            )
        )
    result = sweep_mod.SweepResult(
        records=tuple(records), k_star=result.k_star, tau=result.tau, verdict=result.verdict
    )

    verdict = sweep_mod.detect(result, epsilon=args.epsilon)
    payload = result.to_json()
    if args.epsilon is not None:
        payload["epsilon"] = args.epsilon
        payload["epsilon_verdict"] = verdict.label
        if verdict.note:
            payload["note"] = verdict.note
    _write_artifact(out_dir / "sweep.json", payload, manifest)

    svg = line_plot(
        [r.k for r in result.records],
        [r.test_sse for r in result.records],
        x_label="interface bits k",
        y_label="test SSE",
        title="SSE vs interface width",
        marker_x=result.k_star,
    )
    (out_dir / "sse_vs_k.svg").write_text(svg, encoding="utf-8")
    manifest.add_output(out_dir / "sse_vs_k.svg")
    manifest.stage_done("artifacts")
    manifest.write(out_dir / "manifest.json")

    print(f"k*={result.k_star}  verdict={verdict.label}")
    for rec in result.records:
        print(
            f"  k={rec.k}: test SSE={rec.test_sse:.6g}, R2={rec.test_r2:.4f}, "
            f"max|resid|={rec.max_abs_residual:.6g}"
        )
    return 0


def cmd_train(args) -> int:
    manifest = Manifest("train", vars(args))
    manifest.add_input(args.data)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)

    ds = _load_traces(args)
    trainval, test = dataset.split(ds, args.test_fraction, args.seed)
    train_ds, valid_ds = dataset.split(trainval, args.test_fraction, args.seed + 1)
    arch = _architecture(args, ds.schema, k=args.k)
    net, history = network.train(train_ds, valid_ds, arch, _train_config(args))
    manifest.stage_done("train")

    network.save(net, out)
    manifest.add_output(out)
    manifest.write(Path(str(out) + ".manifest.json"))
    print(
        f"trained k={args.k} model in {len(history)} epochs: "
        f"test SSE={network.sse(net, test):.6g}, R2={network.r2(net, test):.4f}"
    )
    return 0


def cmd_analyze(args) -> int:
    manifest = Manifest("analyze", vars(args))
    manifest.add_input(args.model)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)

    net = network.load(args.model)
    try:
        reducer = counter.extract_reducer(net)
    except counter.ZeroInterfaceWidth:
        raise counter.ZeroInterfaceWidth(
            "k=0 model has no reducer - nothing leaks through it"
        ) from None
    dom = counter.SecretDomain.from_schema(net.schema)
    census = counter.bnb_census(reducer, dom, cap=args.cap, budget=args.budget)
    manifest.stage_done("count")

    _write_artifact(out, census.to_json(), manifest)
    manifest.write(Path(str(out) + ".manifest.json"))
    print(
        f"census: k={census.k}, feasible classes={census.feasible_count}, "
        f"counted={census.total_counted}, complete={census.complete}, nodes={census.nodes}"
    )
    return 0


def cmd_report(args) -> int:
    manifest = Manifest("report", vars(args))
    manifest.add_input(args.census)
    manifest.add_input(args.sweep)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)

    census = counter.ClassCensus.from_json(read_json(args.census))
    sweep_obj = read_json(args.sweep)
    summary = {
        "k_star": sweep_obj.get("k_star"),
        "tau": sweep_obj.get("tau"),
        "verdict": sweep_obj.get("verdict"),
    }
    model_ref = None
    for rec in sweep_obj.get("records", []):
        if rec.get("k") == census.k:
            model_ref = rec.get("model_path")
    report = quantifier.build_report(census, sweep_summary=summary, model_ref=model_ref)
    manifest.stage_done("quantify")

    _write_artifact(out, report.to_json(), manifest)
    manifest.write(Path(str(out) + ".manifest.json"))
    print(report.summary())
    return 0


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------


def _add_train_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--secret-widths", default="10", help="comma-separated secret hidden widths")
    p.add_argument("--public-widths", default="10", help="comma-separated public hidden widths")
    p.add_argument("--joint-widths", default="20", help="comma-separated joint hidden widths")
    p.add_argument("--lr", type=float, default=1e-2)
    p.add_argument("--batch-size", type=int, default=32)
    p.add_argument("--max-epochs", type=int, default=2000)
    p.add_argument("--patience", type=int, default=20)
    p.add_argument("--ste-clip", type=float, default=1.0)
    p.add_argument("--test-fraction", type=float, default=0.1)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="timeleak",
        description="Learn a program's timing model and quantify timing-channel leakage.",
    )
    parser.add_argument("--version", action="version", version=f"timeleak {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", help="generate a synthetic trace CSV")
    p.add_argument("--family", choices=("rn", "bl", "sort"), required=True)
    p.add_argument("--preset", help="rn preset name (R_2..R_7)")
    p.add_argument("--i", dest="variants", type=int, default=1, help="bl: variants per complexity")
    p.add_argument("--secret-bits", type=int, default=None, help="bl: secret width (default 8+i)")
    p.add_argument("--public-lo", type=int, default=1)
    p.add_argument("--public-hi", type=int, default=128)
    p.add_argument("--max-len", type=int, default=20000, help="sort: largest array length")
    p.add_argument("--rows", type=int, required=True)
    p.add_argument("--noise-std", type=float, default=0.02)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("sweep", help="train models for k=0..k_max and select k*")
    p.add_argument("--data", required=True)
    p.add_argument("--sidecar", default=None, help="schema JSON (default: <data>.schema.json if present)")
    p.add_argument("--k-max", type=int, default=3)
    p.add_argument("--tau", type=float, default=sweep_mod.DEFAULT_TAU)
    p.add_argument("--seeds-per-k", type=int, default=3)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--epsilon", type=float, default=None, help="optional max-residual tolerance")
    p.add_argument("--threads", type=int, default=None)
    _add_train_flags(p)
    p.add_argument("--out-dir", required=True)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("train", help="train a single model at a fixed k")
    p.add_argument("--data", required=True)
    p.add_argument("--sidecar", default=None)
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    _add_train_flags(p)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("analyze", help="count secrets per interface valuation")
    p.add_argument("--model", required=True)
    p.add_argument("--cap", type=int, default=100)
    p.add_argument("--budget", type=int, default=counter.DEFAULT_NODE_BUDGET)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("report", help="turn a census + sweep into leak figures")
    p.add_argument("--census", required=True)
    p.add_argument("--sweep", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_report)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    argv = list(sys.argv[1:] if argv is None else argv)

    # Config-file defaults: flags beat the file, the file beats built-ins.
    if "--config" in argv:
        idx = argv.index("--config")
        try:
            config_path = argv[idx + 1]
        except IndexError:
            print("error: --config needs a path", file=sys.stderr)
            return 2
        del argv[idx : idx + 2]
        overrides = read_json(config_path)
        for subparser in parser._subparsers._group_actions[0].choices.values():  # type: ignore[union-attr]
            known = {a.dest: a for a in subparser._actions}
            for key, value in overrides.items():
                if key in known:
                    subparser.set_defaults(**{key: value})
                    known[key].required = False

    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except Exception as exc:
        code = _EXIT_CODES.get(args.command, 1)
        print(f"error: {exc}", file=sys.stderr)
        return code


def entrypoint() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entrypoint()
