"""Command-line pipeline driver.

Subcommands: train-batch, train-sgd, predict, eval-auc, gridsearch,
convergence, kmeans, embed. Exit codes: 0 success, 2 usage error, 3 data
error, 4 numerical failure. Reports are CSV with a header row; training
commands print key=value lines so scripts can scrape them.
"""

from __future__ import annotations

import argparse
import csv
import sys
import time

import numpy as np

from .batch import BatchConfig, train_batch
from .dataio import (
    Dataset,
    group_binary,
    parse_libsvm,
    split,
    standardize_apply,
    standardize_fit,
)
from .embedding import embed, fit_nystroem, fit_rff, kmeans
from .errors import ConfigError, DataError, NumericalError
from .kernels import GaussianKernelParams, bandwidth_heuristic
from .metrics import auc
from .model import TrainedPipeline, embedding_digest, load_model, save_model
from .sgd import SgdConfig, sgd_result_weights, train_sgd

DEFAULT_C_GRID = [2.0**k for k in range(-15, 11)]
DEFAULT_LAMBDA_GRID = [1e-10, 1e-9, 1e-8, 1e-7]
DEFAULT_EPOCHS_GRID = [1, 2, 3, 4, 5, 10, 20, 50, 100, 200, 300, 400]


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


# ---------------------------------------------------------------------------
# shared flag groups
# ---------------------------------------------------------------------------


def _add_data_flags(p: argparse.ArgumentParser, with_split: bool = True):
    p.add_argument("--data", required=True, help="LibSVM-format input file")
    if with_split:
        p.add_argument(
            "--test-fraction",
            type=float,
            default=0.2,
            help="held-out fraction for the random split (default 0.2)",
        )
    p.add_argument("--seed", type=int, default=0, help="seed for every random stage")
    p.add_argument(
        "--positive-labels",
        default=None,
        help="comma-separated labels grouped as the positive class",
    )


def _add_kernel_flags(p: argparse.ArgumentParser):
    g = p.add_mutually_exclusive_group()
    g.add_argument("--sigma2", type=float, default=None, help="kernel bandwidth (squared-distance units)")
    g.add_argument("--gamma", type=float, default=None, help="kernel coefficient exp(-gamma ||x-y||^2)")
    p.add_argument(
        "--bandwidth-cap",
        type=int,
        default=80000,
        help="instances used by the bandwidth heuristic (default 80000)",
    )


def _add_embedding_flags(p: argparse.ArgumentParser):
    p.add_argument(
        "--embedding",
        choices=("nystroem", "rff"),
        default="nystroem",
        help="feature construction (default nystroem)",
    )
    p.add_argument("--landmarks", type=int, default=1600, help="landmark count v (default 1600)")
    p.add_argument("--rank", type=int, default=None, help="embedding rank cap (default: full)")
    p.add_argument("--kmeans-iters", type=int, default=100, help="Lloyd iteration cap (default 100)")


def _add_batch_flags(p: argparse.ArgumentParser):
    p.add_argument("--c", type=float, default=1.0, help="pair-loss weight C (default 1)")
    p.add_argument("--grad-tol", type=float, default=None, help="gradient-norm stop (default relative)")
    p.add_argument("--max-outer", type=int, default=100)
    p.add_argument("--cg-tol", type=float, default=1e-3)
    p.add_argument("--cg-max", type=int, default=200)


def _add_sgd_flags(p: argparse.ArgumentParser):
    p.add_argument("--lambda", dest="lam", type=float, default=1e-8, help="regularization scale")
    p.add_argument("--t0", type=int, default=10_000, help="step-size offset (default 10000)")
    p.add_argument("--epochs", type=int, default=20)
    p.add_argument("--rskip", type=int, default=16, help="iterations between shrink events")
    p.add_argument("--askip", type=int, default=16, help="iterations between mean captures")
    p.add_argument("--no-averaging", action="store_true", help="return the last iterate instead")


# ---------------------------------------------------------------------------
# shared pipeline pieces
# ---------------------------------------------------------------------------


def _load_grouped(args, dim: int | None = None) -> Dataset:
    with open(args.data) as fh:
        data = parse_libsvm(fh, dim=dim)
    if getattr(args, "positive_labels", None):
        try:
            positive = {int(tok) for tok in args.positive_labels.split(",") if tok.strip()}
        except ValueError as exc:
            raise ConfigError(f"--positive-labels must be comma-separated integers: {exc}")
        if not positive:
            raise ConfigError("--positive-labels is empty")
        data = group_binary(data, positive)
    return data


def _kernel_params(args, standardized: Dataset) -> GaussianKernelParams:
    if args.sigma2 is not None:
        return GaussianKernelParams(args.sigma2)
    if args.gamma is not None:
        return GaussianKernelParams.from_gamma(args.gamma)
    return bandwidth_heuristic(standardized, cap=args.bandwidth_cap)


def _fit_embedding_map(args, standardized_train: Dataset, seed: int):
    kernel = _kernel_params(args, standardized_train)
    if args.embedding == "rff":
        return fit_rff(standardized_train.dim, args.landmarks, kernel, seed=seed)
    lm = kmeans(standardized_train, v=args.landmarks, max_iter=args.kmeans_iters, seed=seed)
    return fit_nystroem(lm, kernel, rank_cap=args.rank, seed=seed)


def _prepare(args):
    """parse -> group -> split -> standardize -> embedding map -> embed both."""
    data = _load_grouped(args)
    data.require_both_classes()
    train, test = split(data, args.test_fraction, args.seed)
    t0 = time.perf_counter()
    standardizer = standardize_fit(train)
    std_train = standardize_apply(standardizer, train)
    std_test = standardize_apply(standardizer, test)
    emb_map = _fit_embedding_map(args, std_train, args.seed)
    emb_train = embed(emb_map, std_train)
    emb_test = embed(emb_map, std_test)
    embedding_seconds = time.perf_counter() - t0
    return standardizer, emb_map, emb_train, emb_test, embedding_seconds


def _report_and_save(args, standardizer, emb_map, emb_train, emb_test, linear, embedding_seconds):
    linear.embedding_id = embedding_digest(emb_map)
    meta = {"seed": str(args.seed), "test_fraction": _fmt(args.test_fraction)}
    if getattr(args, "positive_labels", None):
        meta["positive_labels"] = args.positive_labels
    pipe = TrainedPipeline(standardizer, emb_map, linear, meta=meta)
    save_model(args.model, pipe)
    train_auc = auc(emb_train.features @ linear.w, emb_train.y).auc
    test_auc = auc(emb_test.features @ linear.w, emb_test.y).auc
    print(f"train_auc={train_auc:.6f}")
    print(f"test_auc={test_auc:.6f}")
    print(f"embedding_seconds={embedding_seconds:.3f}")
    print(f"training_seconds={linear.diagnostics['seconds']:.3f}")
    print(f"model={args.model}")
    return 0


def cmd_train_batch(args) -> int:
    standardizer, emb_map, emb_train, emb_test, emb_sec = _prepare(args)
    cfg = BatchConfig(
        C=args.c,
        grad_tol=args.grad_tol,
        max_outer=args.max_outer,
        cg_tol=args.cg_tol,
        cg_max=args.cg_max,
    )
    linear = train_batch(emb_train, cfg)
    return _report_and_save(args, standardizer, emb_map, emb_train, emb_test, linear, emb_sec)


def cmd_train_sgd(args) -> int:
    standardizer, emb_map, emb_train, emb_test, emb_sec = _prepare(args)
    cfg = SgdConfig(
        lam=args.lam,
        t0=args.t0,
        epochs=args.epochs,
        rskip=args.rskip,
        askip=args.askip,
        seed=args.seed,
        averaging=not args.no_averaging,
    )
    rows = []

    def snapshot(epoch, state, elapsed):
        w = sgd_result_weights(state, cfg.averaging)
        rows.append(
            (
                epoch,
                auc(emb_train.features @ w, emb_train.y).auc,
                auc(emb_test.features @ w, emb_test.y).auc,
                elapsed,
            )
        )

    callback = snapshot if args.curve else None
    linear = train_sgd(emb_train, cfg, epoch_callback=callback)
    if args.curve:
        with open(args.curve, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["epoch", "train_auc", "test_auc", "elapsed_seconds"])
            for epoch, tr, te, sec in rows:
                writer.writerow([epoch, f"{tr:.6f}", f"{te:.6f}", f"{sec:.6f}"])
    return _report_and_save(args, standardizer, emb_map, emb_train, emb_test, linear, emb_sec)


def cmd_predict(args) -> int:
    pipe = load_model(args.model)
    with open(args.data) as fh:
        try:
            data = parse_libsvm(fh, dim=pipe.dim)
        except DataError as exc:
            raise DataError(f"model expects dimension {pipe.dim}: {exc}") from exc
    scores = pipe.score(data)
    with open(args.scores, "w") as fh:
        for s in scores:
            fh.write(_fmt(s) + "\n")
    print(f"scored={scores.shape[0]}")
    return 0


def cmd_eval_auc(args) -> int:
    scores = []
    with open(args.scores) as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                scores.append(float(line))
            except ValueError:
                raise DataError(f"{args.scores}:{lineno}: not a number: {line!r}")
    labels = []
    with open(args.labels) as fh:
        for lineno, line in enumerate(fh, start=1):
            tokens = line.split()
            if not tokens:
                continue
            try:
                labels.append(int(float(tokens[0])))
            except ValueError:
                raise DataError(f"{args.labels}:{lineno}: not an integer label: {tokens[0]!r}")
    labels = np.asarray(labels, dtype=np.int64)
    distinct = np.unique(labels)
    if distinct.size == 2 and not set(distinct.tolist()) <= {-1, 1}:
        labels = np.where(labels == distinct[0], -1, 1)
    result = auc(np.asarray(scores), labels, "strict" if args.strict else "half")
    print(f"{result.auc:.6f}")
    return 0


def _stratified_folds(y: np.ndarray, k: int, seed: int) -> list[np.ndarray]:
    pos = np.flatnonzero(y == 1)
    neg = np.flatnonzero(y == -1)
    if pos.size < k or neg.size < k:
        raise DataError(
            f"{k}-fold split leaves a fold without both classes "
            "(try fewer folds or a different stratification seed)"
        )
    rng = np.random.default_rng(seed)
    rng.shuffle(pos)
    rng.shuffle(neg)
    return [np.sort(np.concatenate([pos[i::k], neg[i::k]])) for i in range(k)]


def cmd_gridsearch(args) -> int:
    data = _load_grouped(args)
    data.require_both_classes()
    if args.grid:
        try:
            grid = [float(tok) for tok in args.grid.split(",") if tok.strip()]
        except ValueError as exc:
            raise ConfigError(f"--grid must be comma-separated numbers: {exc}")
    else:
        grid = DEFAULT_C_GRID if args.solver == "batch" else DEFAULT_LAMBDA_GRID
    if not grid:
        raise ConfigError("empty hyperparameter grid")
    if any(v <= 0 for v in grid):
        raise ConfigError("grid values must be positive")
    if args.folds < 2:
        raise ConfigError(f"need at least 2 folds, got {args.folds}")

    folds = _stratified_folds(data.y, args.folds, args.seed)
    all_idx = np.arange(data.n)
    rows = []
    for fold_id, val_idx in enumerate(folds):
        train_idx = np.setdiff1d(all_idx, val_idx)
        fold_train = data.subset(train_idx)
        fold_val = data.subset(val_idx)
        standardizer = standardize_fit(fold_train)
        std_train = standardize_apply(standardizer, fold_train)
        std_val = standardize_apply(standardizer, fold_val)
        emb_map = _fit_embedding_map(args, std_train, args.seed)
        emb_train = embed(emb_map, std_train)
        emb_val = embed(emb_map, std_val)
        for value in grid:
            t0 = time.perf_counter()
            if args.solver == "batch":
                linear = train_batch(emb_train, BatchConfig(C=value))
            else:
                linear = train_sgd(
                    emb_train,
                    SgdConfig(
                        lam=value,
                        t0=args.t0,
                        epochs=args.epochs,
                        rskip=args.rskip,
                        askip=args.askip,
                        seed=args.seed,
                    ),
                )
            seconds = time.perf_counter() - t0
            score = auc(emb_val.features @ linear.w, emb_val.y).auc
            rows.append((value, fold_id, score, seconds))

    means = {value: np.mean([r[2] for r in rows if r[0] == value]) for value in grid}
    best_auc = max(means.values())
    candidates = [value for value in grid if means[value] == best_auc]
    # ties break toward stronger regularization
    selected = min(candidates) if args.solver == "batch" else max(candidates)

    rows.sort(key=lambda r: (r[0], r[1]))
    if args.report:
        with open(args.report, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["value", "fold", "auc", "seconds"])
            for value, fold_id, score, seconds in rows:
                writer.writerow([_fmt(value), fold_id, f"{score:.6f}", f"{seconds:.6f}"])
    print(f"selected={_fmt(selected)}")
    print(f"mean_auc={means[selected]:.6f}")
    return 0


def cmd_convergence(args) -> int:
    try:
        epochs_grid = (
            sorted({int(tok) for tok in args.epochs_grid.split(",") if tok.strip()})
            if args.epochs_grid
            else DEFAULT_EPOCHS_GRID
        )
        seeds = (
            [int(tok) for tok in args.seeds.split(",") if tok.strip()]
            if args.seeds
            else [args.seed]
        )
    except ValueError as exc:
        raise ConfigError(f"grids must be comma-separated integers: {exc}")
    if not epochs_grid or epochs_grid[0] < 1:
        raise ConfigError("epochs grid must contain positive integers")
    if not seeds:
        raise ConfigError("--seeds is empty")

    standardizer, emb_map, emb_train, emb_test, emb_sec = _prepare(args)
    wanted = set(epochs_grid)
    rows = []
    for seed in seeds:
        for variant, averaging in (("averaged", True), ("non-averaged", False)):
            cfg = SgdConfig(
                lam=args.lam,
                t0=args.t0,
                epochs=epochs_grid[-1],
                rskip=args.rskip,
                askip=args.askip,
                seed=seed,
                averaging=averaging,
            )

            def snapshot(epoch, state, elapsed, variant=variant, seed=seed, avg=averaging):
                if epoch in wanted:
                    w = sgd_result_weights(state, avg)
                    score = auc(emb_test.features @ w, emb_test.y).auc
                    rows.append((variant, epoch, seed, score, elapsed))

            train_sgd(emb_train, cfg, epoch_callback=snapshot)

    rows.sort(key=lambda r: (r[0], r[1], r[2]))
    with open(args.report, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["variant", "epochs", "seed", "test_auc", "train_seconds"])
        for variant, epoch, seed, score, seconds in rows:
            writer.writerow([variant, epoch, seed, f"{score:.6f}", f"{seconds:.6f}"])
    print(f"report={args.report}")
    print(f"embedding_seconds={emb_sec:.3f}")
    return 0


def cmd_kmeans(args) -> int:
    data = _load_grouped(args)
    if data.n < 1:
        raise DataError("dataset is empty")
    lm = kmeans(data, v=args.landmarks, max_iter=args.kmeans_iters, seed=args.seed)
    with open(args.out, "w") as fh:
        fh.write(f"{lm.v} {lm.dim}\n")
        for row in lm.centroids:
            fh.write(" ".join(_fmt(v) for v in row) + "\n")
    print(f"landmarks={lm.v}")
    print(f"dim={lm.dim}")
    return 0


def cmd_embed(args) -> int:
    data = _load_grouped(args)
    data.require_both_classes()
    t0 = time.perf_counter()
    standardizer = standardize_fit(data)
    standardized = standardize_apply(standardizer, data)
    emb_map = _fit_embedding_map(args, standardized, args.seed)
    emb = embed(emb_map, standardized)
    seconds = time.perf_counter() - t0
    with open(args.out, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["label"] + [f"f{k}" for k in range(emb.r)])
        for i in range(emb.n):
            writer.writerow([int(emb.y[i])] + [_fmt(v) for v in emb.features[i]])
    print(f"rank={emb.r}")
    print(f"embedding_seconds={seconds:.3f}")
    return 0


# ---------------------------------------------------------------------------
# parser wiring
# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="aucmax",
        description="AUC maximization with kernel feature embeddings",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train-batch", help="embed and train the Newton solver")
    _add_data_flags(p)
    _add_kernel_flags(p)
    _add_embedding_flags(p)
    _add_batch_flags(p)
    p.add_argument("--model", required=True, help="output model file")
    p.set_defaults(func=cmd_train_batch)

    p = sub.add_parser("train-sgd", help="embed and train the stochastic solver")
    _add_data_flags(p)
    _add_kernel_flags(p)
    _add_embedding_flags(p)
    _add_sgd_flags(p)
    p.add_argument("--curve", default=None, help="per-epoch AUC curve CSV")
    p.add_argument("--model", required=True, help="output model file")
    p.set_defaults(func=cmd_train_sgd)

    p = sub.add_parser("predict", help="score a dataset with a saved model")
    p.add_argument("--model", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--scores", required=True, help="output file, one score per line")
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("eval-auc", help="AUC of a scores file against a labels file")
    p.add_argument("--scores", required=True)
    p.add_argument("--labels", required=True)
    p.add_argument("--strict", action="store_true", help="count ties as losses")
    p.set_defaults(func=cmd_eval_auc)

    p = sub.add_parser("gridsearch", help="stratified cross-validation over C or lambda")
    _add_data_flags(p, with_split=False)
    _add_kernel_flags(p)
    _add_embedding_flags(p)
    p.add_argument("--solver", choices=("batch", "sgd"), required=True)
    p.add_argument("--grid", default=None, help="comma-separated values (defaults per solver)")
    p.add_argument("--folds", type=int, default=3)
    p.add_argument("--report", default=None, help="per-cell CSV report")
    p.add_argument("--t0", type=int, default=10_000)
    p.add_argument("--epochs", type=int, default=20)
    p.add_argument("--rskip", type=int, default=16)
    p.add_argument("--askip", type=int, default=16)
    p.set_defaults(func=cmd_gridsearch)

    p = sub.add_parser("convergence", help="test AUC per epoch count, both variants")
    _add_data_flags(p)
    _add_kernel_flags(p)
    _add_embedding_flags(p)
    p.add_argument("--lambda", dest="lam", type=float, default=1e-8)
    p.add_argument("--t0", type=int, default=10_000)
    p.add_argument("--rskip", type=int, default=16)
    p.add_argument("--askip", type=int, default=16)
    p.add_argument("--epochs-grid", default=None, help="comma-separated epoch counts")
    p.add_argument("--seeds", default=None, help="comma-separated solver seeds")
    p.add_argument("--report", required=True, help="output CSV")
    p.set_defaults(func=cmd_convergence)

    p = sub.add_parser("kmeans", help="write landmark centroids for a dataset")
    _add_data_flags(p, with_split=False)
    p.add_argument("--landmarks", type=int, default=1600)
    p.add_argument("--kmeans-iters", type=int, default=100)
    p.add_argument("--out", required=True, help="output centroid file")
    p.set_defaults(func=cmd_kmeans)

    p = sub.add_parser("embed", help="fit an embedding and write embedded features")
    _add_data_flags(p, with_split=False)
    _add_kernel_flags(p)
    _add_embedding_flags(p)
    p.add_argument("--out", required=True, help="output features CSV")
    p.set_defaults(func=cmd_embed)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args) or 0
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except DataError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except NumericalError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
