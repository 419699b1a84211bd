"""Command-line interface.

Verbs:
    run <config|preset>     simulate one parameter set and write CSV outputs
    batch <config|preset>   randomized batch producing an ML-ready dataset
    train <features> <targets>   fit the PCA + boosted-tree regressor
    predict <model> <features>   apply a saved model to new fingerprints
    presets                 list the compiled-in parameter sets

Exit codes: 0 success, 1 validation error, 2 integration failure, 3 I/O.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from .errors import ConfigError, IntegrationError
from .ml import (
    GbtHyperparams,
    TARGET_NAMES,
    Dataset,
    evaluate,
    gbt_fit,
    gbt_predict,
    load_model,
    pca_fit,
    pca_transform,
    save_model,
    train_test_split,
)
from .pipeline import RunConfig, emit_batch, emit_outputs, run_batch, run_single
from .presets import PRESETS, RANDOMIZE_DEFAULTS

BATCH_RANDOMIZED = ("J_sb", "J_L12", "gamma_L1", "gamma_L2")


def _resolve_config(spec: str, grid: str | None, seed: int | None) -> RunConfig:
    if spec in PRESETS:
        config = RunConfig.from_preset(spec, grid_name=grid, seed=seed or 0)
    else:
        path = Path(spec)
        if not path.exists():
            raise ConfigError(f"{spec!r} is neither a preset name nor a config file")
        from .config import parse_config

        config = parse_config(path)
        if grid:
            from .presets import GRIDS

            config.grid = GRIDS[grid]
        if seed is not None:
            config.seed = seed
    return config


def _load_csv(path: Path) -> tuple[np.ndarray, np.ndarray, list[str]]:
    """(run_ids, value matrix, value column names) from a run_id-keyed CSV."""
    try:
        with open(path) as fh:
            header = fh.readline().strip().split(",")
        data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    except OSError as exc:
        raise OSError(f"cannot read {path}: {exc}") from exc
    except ValueError as exc:
        raise ConfigError(f"malformed CSV {path}: {exc}") from exc
    if header[0] != "run_id":
        raise ConfigError(f"{path} must start with a run_id column")
    return data[:, 0], data[:, 1:], header[1:]


def cmd_run(args) -> int:
    config = _resolve_config(args.config, args.grid, args.seed)
    record = run_single(config)
    out = args.out or f"qbath-out/{config.name}"
    paths = emit_outputs(record, out)
    print(f"run {config.name}: {len(paths)} files written to {out}")
    for key in TARGET_NAMES:
        print(f"  {key} = {record.targets[key]:.6g}")
    if record.flags:
        print(f"  flags: {record.flags}")
    return 0


def cmd_batch(args) -> int:
    config = _resolve_config(args.config, args.grid, args.seed)
    if config.randomize is None:
        if config.params is None:
            raise ConfigError("batch mode requires the canonical layered topology")
        config.randomize = {k: RANDOMIZE_DEFAULTS[k] for k in BATCH_RANDOMIZED}
    # batch rows only need the fingerprint and the scalar targets
    config.outputs.correlator = False
    config.outputs.diagnostics = False
    config.check_interval = max(config.check_interval, 25)
    ds, records, failures = run_batch(config, args.runs, workers=args.workers)
    out = args.out or f"qbath-out/{config.name}-batch"
    paths = emit_batch(ds, records, failures, out)
    print(f"batch {config.name}: {ds.n_rows}/{args.runs} runs in dataset, "
          f"{len(failures)} flagged; outputs in {out}")
    for p in paths:
        print(f"  {p}")
    return 0


def cmd_train(args) -> int:
    ids_f, X, _ = _load_csv(Path(args.features))
    ids_t, Y, names = _load_csv(Path(args.targets))
    if not np.array_equal(ids_f, ids_t):
        raise ConfigError("feature and target run_id columns differ")
    keep = np.isfinite(Y).all(axis=1)
    if not keep.all():
        print(f"dropping {int((~keep).sum())} rows with non-finite targets")
    ds = Dataset(X[keep], Y[keep], tuple(names), run_ids=list(ids_f[keep].astype(int)))
    train, test = train_test_split(ds, 0.8, args.seed)
    pca = pca_fit(train.features, args.pca)
    gbt = gbt_fit(
        pca_transform(pca, train.features),
        train.targets,
        GbtHyperparams(),
        seed=args.seed,
        target_names=ds.target_names,
    )
    pred = gbt_predict(gbt, pca_transform(pca, test.features))
    mse, r2 = evaluate(pred, test.targets)
    print(f"trained on {train.n_rows} runs, evaluated on {test.n_rows} held-out runs")
    for i, name in enumerate(ds.target_names):
        print(f"  {name}: MSE={mse[i]:.6g} R2={r2[i]:.4f}")
    save_model(args.out, pca, gbt)
    print(f"model written to {args.out}")
    return 0


def cmd_predict(args) -> int:
    pca, gbt = load_model(args.model)
    ids, X, _ = _load_csv(Path(args.features))
    if pca is not None:
        X = pca_transform(pca, X)
    pred = gbt_predict(gbt, X)
    out = Path(args.out)
    header = "run_id," + ",".join(gbt.target_names)
    np.savetxt(
        out,
        np.column_stack([ids, pred]),
        delimiter=",",
        header=header,
        comments="",
        fmt="%.17g",
    )
    print(f"predictions for {len(ids)} runs written to {out}")
    return 0


def cmd_presets(args) -> int:
    width = max(len(name) for name in PRESETS)
    for name, preset in sorted(PRESETS.items()):
        topo = preset.topology
        print(f"{name:<{width}}  [{topo.n_qubits} qubits, grid={preset.grid_name}]  {preset.description}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="qbath",
        description="Structured-bath open quantum system simulator and diagnostics toolkit.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="simulate one configuration or preset")
    p_run.add_argument("config", help="config file path or preset name")
    p_run.add_argument("--out", help="output directory")
    p_run.add_argument("--grid", choices=["short", "long"], help="override the time grid")
    p_run.add_argument("--seed", type=int, help="override the seed")
    p_run.set_defaults(func=cmd_run)

    p_batch = sub.add_parser("batch", help="randomized batch of simulations")
    p_batch.add_argument("config", help="config file path or preset name")
    p_batch.add_argument("--runs", type=int, required=True)
    p_batch.add_argument("--workers", type=int, default=1)
    p_batch.add_argument("--out", help="output directory")
    p_batch.add_argument("--grid", choices=["short", "long"])
    p_batch.add_argument("--seed", type=int)
    p_batch.set_defaults(func=cmd_batch)

    p_train = sub.add_parser("train", help="fit the PCA + boosted-tree model")
    p_train.add_argument("features", help="features CSV")
    p_train.add_argument("targets", help="targets CSV")
    p_train.add_argument("--pca", type=int, default=4)
    p_train.add_argument("--seed", type=int, default=0)
    p_train.add_argument("--out", default="model.json")
    p_train.set_defaults(func=cmd_train)

    p_pred = sub.add_parser("predict", help="apply a saved model")
    p_pred.add_argument("model", help="model JSON path")
    p_pred.add_argument("features", help="features CSV")
    p_pred.add_argument("--out", default="predictions.csv")
    p_pred.set_defaults(func=cmd_predict)

    p_presets = sub.add_parser("presets", help="list compiled-in presets")
    p_presets.set_defaults(func=cmd_presets)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, ValueError, KeyError) as exc:
        print(f"validation error: {exc}", file=sys.stderr)
        return 1
    except IntegrationError as exc:
        print(f"integration failure: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
