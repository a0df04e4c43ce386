"""Command-line interface.

Commands import the numerical stack lazily so that D4_NUM_THREADS can cap
BLAS parallelism before numpy loads. All randomness flows from a single
--seed per command; reports carry no timestamps, so identical invocations
produce byte-identical output files.

Exit codes: 2 for I/O, parsing, and configuration problems; 3 for
dimension mismatches; 4 for learner failures.
"""

from __future__ import annotations

import functools
import json
import os
import sys

import click


def _configure_threads() -> None:
    threads = os.environ.get("D4_NUM_THREADS")
    if threads:
        for var in (
            "OMP_NUM_THREADS",
            "OPENBLAS_NUM_THREADS",
            "MKL_NUM_THREADS",
            "NUMEXPR_NUM_THREADS",
        ):
            os.environ.setdefault(var, threads)


def _die(code: int, message: str) -> None:
    click.echo(f"error: {message}", err=True)
    sys.exit(code)


def cli_errors(fn):
    """Map library errors onto the documented exit codes."""

    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        from .errors import (
            DegenerateDataError,
            DegenerateDirectionError,
            DimensionMismatchError,
            EmptyClassError,
            EmptySetAfterLookupError,
            FileFormatError,
            LinearlyDependentError,
            MissingWordError,
            NonConvergenceError,
            NonSymmetricKernelError,
            SingularSystemError,
            ZeroVarianceError,
            ZeroVectorError,
        )

        try:
            return fn(*args, **kwargs)
        except DimensionMismatchError as exc:
            _die(3, str(exc))
        except (
            NonConvergenceError,
            ZeroVectorError,
            LinearlyDependentError,
            SingularSystemError,
            EmptyClassError,
            DegenerateDataError,
            DegenerateDirectionError,
            NonSymmetricKernelError,
            ZeroVarianceError,
        ) as exc:
            _die(4, str(exc))
        except (FileFormatError, MissingWordError, EmptySetAfterLookupError) as exc:
            _die(2, str(exc))
        except OSError as exc:
            name = getattr(exc, "filename", None)
            _die(2, f"{name}: {exc.strerror}" if name else str(exc))
        except (ValueError, KeyError) as exc:
            _die(2, str(exc))

    return wrapper


@click.group()
@click.option("--quiet", "-q", is_flag=True, help="Suppress progress output.")
@click.version_option(package_name="d4kit", prog_name="d4")
@click.pass_context
def main(ctx, quiet):
    """Remove linearly decodable concepts from feature matrices and embeddings."""
    _configure_threads()
    ctx.ensure_object(dict)
    ctx.obj["quiet"] = quiet


def _echo(ctx, message: str) -> None:
    if not ctx.obj.get("quiet"):
        click.echo(message)


def _parse_pair(text: str) -> tuple[str, str]:
    halves = [h.strip() for h in text.split(",")]
    if len(halves) != 2 or not all(halves):
        raise ValueError(f"direction pair must be 'first,second', got {text!r}")
    return halves[0], halves[1]


@main.command("fit")
@click.option("--features", required=True, help="Feature matrix file (CSV or D4MAT binary).")
@click.option("--targets", required=True, help="Target vector file (single column).")
@click.option("--learner", type=click.Choice(["ridge", "logistic"]), default="ridge")
@click.option("--reg", type=float, default=1.0, show_default=True, help="Regularization strength.")
@click.option("--iterations", type=click.IntRange(min=1), required=True,
              help="Number of directions to remove (at least 1 iteration required).")
@click.option("--mode", type=click.Choice(["projector", "fullrank"]), default="projector")
@click.option("--stop", type=click.Choice(["fixed", "converge"]), default="fixed")
@click.option("--stop-tolerance", type=float, default=0.02, show_default=True)
@click.option("--stop-patience", type=int, default=2, show_default=True)
@click.option("--validation-fraction", type=float, default=0.2, show_default=True)
@click.option("--no-intercept", is_flag=True, help="Fit learners without an intercept.")
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--out", required=True, help="Output model file (JSON).")
@click.pass_context
@cli_errors
def cmd_fit(ctx, features, targets, learner, reg, iterations, mode, stop,
            stop_tolerance, stop_patience, validation_fraction, no_intercept, seed, out):
    """Learn decision directions on a labelled matrix and save the model."""
    import numpy as np

    from . import serialize
    from .core import D4Config, StoppingRule, d4_fit
    from .errors import DimensionMismatchError
    from .learners import LabeledDataset, LearnerSpec

    X, _ = serialize.load_matrix(features)
    y, _ = serialize.load_targets(targets)
    if y.shape[0] != X.shape[0]:
        raise DimensionMismatchError(
            f"{targets}: {y.shape[0]} targets but {features} has {X.shape[0]} rows"
        )
    task = "binary" if np.all(np.isin(y, (-1.0, 1.0))) else "regression"
    spec = LearnerSpec(
        kind="ridge-ls" if learner == "ridge" else "logistic",
        regularization=reg,
        fit_intercept=not no_intercept,
    )
    stopping = StoppingRule(
        kind="fixed" if stop == "fixed" else "probe-convergence",
        tolerance=stop_tolerance,
        patience=stop_patience,
        validation_fraction=validation_fraction,
    )
    config = D4Config(
        learner=spec,
        max_iterations=iterations,
        mode="projector" if mode == "projector" else "full-rank",
        stopping=stopping,
        seed=seed,
    )
    model = d4_fit(LabeledDataset(X, y, task=task), config)
    echo = {
        "features": os.path.basename(features),
        "targets": os.path.basename(targets),
        "learner": learner,
        "reg": reg,
        "iterations": iterations,
        "mode": mode,
        "stop": stop,
        "seed": seed,
        "task": task,
        "intercept": not no_intercept,
    }
    serialize.save_model(model, out, echo)
    metric_name = "train_acc" if task == "binary" else "train_mae"
    _echo(ctx, f"{'iter':>4} {metric_name:>10} {'val_acc':>8}")
    for d in model.diagnostics:
        val = f"{d.validation_metric:.4f}" if d.validation_metric is not None else "-"
        _echo(ctx, f"{d.iteration:>4} {d.train_metric:>10.4f} {val:>8}")
    _echo(ctx, f"status: {model.status}; wrote {out}")


@main.command("transform")
@click.option("--features", required=True, help="Feature matrix file (CSV or D4MAT binary).")
@click.option("--model", "model_path", required=True, help="Model file from `d4 fit`.")
@click.option("--k", type=int, default=None, help="Directions to remove (default: all).")
@click.option("--out-perp", required=True, help="Output file for the projected matrix.")
@click.option("--out-par", default=None, help="Optional output for the removed component.")
@click.option("--reduced", is_flag=True,
              help="Write the rank-reduced n x (p-k) representation instead.")
@click.pass_context
@cli_errors
def cmd_transform(ctx, features, model_path, k, out_perp, out_par, reduced):
    """Project a matrix onto the complement of removed directions."""
    from . import serialize
    from .core import d4_reduce, d4_transform

    X, fmt = serialize.load_matrix(features)
    model, _ = serialize.load_model(model_path)
    k_eff = model.basis.size if k is None else k
    if reduced:
        out = d4_reduce(X, model, k_eff, allow_empty=True)
        if out.shape[1] == 0:
            click.echo("warning: all directions removed; writing an empty-width matrix", err=True)
        serialize.save_matrix(out, out_perp, fmt)
        _echo(ctx, f"wrote {out_perp} ({out.shape[0]} x {out.shape[1]}, {fmt})")
        return
    perp, par = d4_transform(X, model, k_eff)
    serialize.save_matrix(perp, out_perp, fmt)
    _echo(ctx, f"wrote {out_perp} ({perp.shape[0]} x {perp.shape[1]}, {fmt})")
    if out_par is not None:
        serialize.save_matrix(par, out_par, fmt)
        _echo(ctx, f"wrote {out_par}")


@main.command("synth")
@click.option("--preset", type=click.Choice(["table1", "table1-small"]), default=None,
              help="Named benchmark configuration.")
@click.option("--n", type=int, default=None, help="Training (and test) sample count.")
@click.option("--p", type=int, default=None, help="Feature dimension.")
@click.option("--corr", type=float, default=None, help="Train latent correlation.")
@click.option("--std1", type=float, default=None)
@click.option("--std2", type=float, default=None)
@click.option("--flip-prob", type=float, default=None)
@click.option("--seed", type=int, default=None)
@click.option("--learner", type=click.Choice(["ridge", "logistic"]), default="logistic",
              show_default=True)
@click.option("--reg", type=float, default=0.5, show_default=True,
              help="Learner regularization (preset value reproduces the reference table).")
@click.option("--out", required=True, help="Output CSV report.")
@click.pass_context
@cli_errors
def cmd_synth(ctx, preset, n, p, corr, std1, std2, flip_prob, seed, learner, reg, out):
    """Run the correlation-reversal benchmark and write its table."""
    from dataclasses import replace

    from . import serialize, synthbench
    from .learners import LearnerSpec

    if preset is not None:
        train_cfg, _, spec = synthbench.preset_configs(preset)
    else:
        train_cfg = synthbench.SynthConfig()
        spec = synthbench.PRESET_LEARNER
    overrides = {}
    for key, value in (
        ("n", n), ("p", p), ("corr", corr), ("std1", std1),
        ("std2", std2), ("flip_prob", flip_prob), ("seed", seed),
    ):
        if value is not None:
            overrides[key] = value
    if overrides:
        train_cfg = replace(train_cfg, **overrides)
    spec = LearnerSpec(
        kind="ridge-ls" if learner == "ridge" else "logistic",
        regularization=reg,
    )
    test_cfg = replace(train_cfg, corr=-train_cfg.corr)
    table = synthbench.run_experiment(train_cfg, test_cfg, spec)
    serialize.atomic_write_text(out, table.to_csv())
    _echo(ctx, table.format())
    _echo(ctx, f"wrote {out}")


@main.command("debias")
@click.option("--embedding", required=True, help="Embedding file.")
@click.option("--format", "fmt", type=click.Choice(["bin", "txt"]), default="bin",
              show_default=True)
@click.option("--lexicon", required=True, help="Lexicon word-list file.")
@click.option("--iterations", type=click.IntRange(min=1), default=6, show_default=True)
@click.option("--learner", type=click.Choice(["ridge", "logistic"]), default="ridge",
              show_default=True)
@click.option("--reg", type=float, default=1.0, show_default=True)
@click.option("--no-normalize", is_flag=True,
              help="Fit directions on raw instead of unit-normalized vectors.")
@click.option("--folds", type=int, default=5, show_default=True, help="Probe CV folds.")
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--out-embedding", required=True, help="Debiased embedding output.")
@click.option("--out-model", required=True, help="Model file output (JSON).")
@click.option("--report", "report_path", required=True, help="JSON evaluation report output.")
@click.pass_context
@cli_errors
def cmd_debias(ctx, embedding, fmt, lexicon, iterations, learner, reg, no_normalize,
               folds, seed, out_embedding, out_model, report_path):
    """Remove lexicon-separating directions from a word embedding."""
    import warnings

    from . import embedkit, serialize
    from .core import D4Config
    from .learners import LearnerSpec

    emb = embedkit.load_embeddings(embedding, fmt)
    lex = embedkit.load_gender_lexicon(lexicon)
    spec = LearnerSpec(
        kind="ridge-ls" if learner == "ridge" else "logistic",
        regularization=reg,
    )
    config = D4Config(learner=spec, max_iterations=iterations, seed=seed)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        lookup = embedkit.lexicon_lookup(emb, lex)
        debiased, model = embedkit.debias(emb, lex, config, normalize_fit=not no_normalize)
        trajectory = embedkit.probe_trajectory_cv(
            emb, lex, model, folds=folds, seed=seed, unit=not no_normalize
        )
    embedkit.save_embeddings(debiased, out_embedding, fmt)
    echo = {
        "embedding": os.path.basename(embedding),
        "lexicon": os.path.basename(lexicon),
        "iterations": iterations,
        "learner": learner,
        "reg": reg,
        "seed": seed,
        "normalize": not no_normalize,
    }
    serialize.save_model(model, out_model, echo)
    report = {
        "config": echo,
        "vocabulary_size": len(emb),
        "lexicon_words_used": len(lookup.words),
        "lexicon_words_missing": sorted(lookup.missing),
        "iterations_run": model.basis.size,
        "status": model.status,
        "probe_cv_accuracy_by_iteration": list(trajectory),
        "final_probe_cv_accuracy": trajectory[-1],
    }
    serialize.atomic_write_text(report_path, json.dumps(report, indent=2, sort_keys=True) + "\n")
    _echo(ctx, f"probe CV accuracy by iteration: {[round(a, 4) for a in trajectory]}")
    _echo(ctx, f"wrote {out_embedding}, {out_model}, {report_path}")


@main.group("eval")
def cmd_eval():
    """Bias metrics on an embedding."""


def _load_embedding_opt(embedding, fmt):
    from . import embedkit

    return embedkit.load_embeddings(embedding, fmt)


@cmd_eval.command("neighbours-bias")
@click.option("--embedding", required=True)
@click.option("--format", "fmt", type=click.Choice(["bin", "txt"]), default="bin",
              show_default=True)
@click.option("--direction-pair", default="she,he", show_default=True,
              help="Definitional pair 'first,second' for the bias direction.")
@click.option("--n-extreme", type=int, default=500, show_default=True)
@click.option("--top-n", type=int, default=None,
              help="Rank only the first N vocabulary entries.")
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--out", required=True, help="CSV of per-word scatter data.")
@click.pass_context
@cli_errors
def eval_neighbours_bias(ctx, embedding, fmt, direction_pair, n_extreme, top_n, seed, out):
    """Two-means separability of the most extreme words along a direction."""
    import io as _io

    import numpy as np

    from . import embedkit, serialize
    from .learners import kmeans2

    emb = _load_embedding_opt(embedding, fmt)
    pair = _parse_pair(direction_pair)
    direction = embedkit.gender_direction(emb, pair)
    accuracy = embedkit.bias_by_neighbour(
        emb, direction, n_extreme=n_extreme, seed=seed, top_n=top_n
    )
    unit = emb.unit_vectors() if top_n is None else emb.unit_vectors()[:top_n]
    dots = unit @ direction
    order = np.argsort(-dots, kind="stable")
    chosen = np.concatenate([order[:n_extreme], order[-n_extreme:]])
    sides = [1] * n_extreme + [-1] * n_extreme
    clusters = kmeans2(unit[chosen], seed=seed)
    buf = _io.StringIO()
    buf.write("word,dot,side,cluster\n")
    for idx, side, cluster in zip(chosen, sides, clusters):
        buf.write(f"{emb.vocab[idx]},{dots[idx]!r},{side},{cluster}\n")
    serialize.atomic_write_text(out, buf.getvalue())
    click.echo(f"bias_by_neighbour: {accuracy!r}")
    _echo(ctx, f"wrote {out}")


@cmd_eval.command("professions")
@click.option("--embedding", required=True)
@click.option("--format", "fmt", type=click.Choice(["bin", "txt"]), default="bin",
              show_default=True)
@click.option("--professions", "professions_path", required=True,
              help="Word-list file of profession terms.")
@click.option("--direction-pair", default="she,he", show_default=True)
@click.option("--k", type=int, default=100, show_default=True,
              help="Neighbourhood size.")
@click.option("--out", required=True, help="CSV of (word, dot, masc_nn_count).")
@click.pass_context
@cli_errors
def eval_professions(ctx, embedding, fmt, professions_path, direction_pair, k, out):
    """Masculine-leaning neighbour counts for profession words."""
    import io as _io
    import warnings

    from . import embedkit, serialize

    emb = _load_embedding_opt(embedding, fmt)
    words = embedkit.load_word_list(professions_path)
    direction = embedkit.gender_direction(emb, _parse_pair(direction_pair))
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        report = embedkit.profession_neighbour_counts(emb, words, direction, k=k)
    buf = _io.StringIO()
    buf.write("word,dot,masc_nn_count\n")
    for rec in report.records:
        buf.write(f"{rec.word},{rec.dot!r},{rec.masculine_neighbours}\n")
    serialize.atomic_write_text(out, buf.getvalue())
    counts = [rec.masculine_neighbours for rec in report.records]
    click.echo(
        f"professions: {len(report.records)} scored, {len(report.missing)} missing, "
        f"mean masc-NN count {sum(counts) / len(counts):.2f}"
    )
    _echo(ctx, f"wrote {out}")


@cmd_eval.command("weat")
@click.option("--embedding", required=True)
@click.option("--format", "fmt", type=click.Choice(["bin", "txt"]), default="bin",
              show_default=True)
@click.option("--spec", "spec_path", required=True,
              help="WEAT word-set file (JSON or sectioned text).")
@click.option("--out", required=True, help="CSV of per-word association values.")
@click.pass_context
@cli_errors
def eval_weat(ctx, embedding, fmt, spec_path, out):
    """Differential-association effect size between two target sets."""
    import io as _io
    import warnings

    from . import embedkit, serialize

    emb = _load_embedding_opt(embedding, fmt)
    spec = embedkit.load_weat_spec(spec_path)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        result = embedkit.weat(emb, spec)
    buf = _io.StringIO()
    buf.write("word,set,s_value\n")
    x_words = [w for w in spec.target_x if w in emb]
    y_words = [w for w in spec.target_y if w in emb]
    for word, s in zip(x_words, result.s_x):
        buf.write(f"{word},X,{s!r}\n")
    for word, s in zip(y_words, result.s_y):
        buf.write(f"{word},Y,{s!r}\n")
    serialize.atomic_write_text(out, buf.getvalue())
    click.echo(f"weat_effect_size: {result.effect_size!r}")
    click.echo(f"weat_mean_diff: {result.mean_diff!r}")
    _echo(ctx, f"wrote {out}")


@cmd_eval.command("probe")
@click.option("--embedding", required=True)
@click.option("--format", "fmt", type=click.Choice(["bin", "txt"]), default="bin",
              show_default=True)
@click.option("--lexicon", required=True, help="Lexicon word-list file.")
@click.option("--kernel", type=click.Choice(["rbf", "linear"]), default="rbf",
              show_default=True)
@click.option("--gamma", type=float, default=None, help="RBF bandwidth (default: scale heuristic).")
@click.option("--folds", type=int, default=5, show_default=True)
@click.option("--reg", type=float, default=1.0, show_default=True,
              help="Kernel ridge regularization.")
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--out", required=True, help="JSON report.")
@click.pass_context
@cli_errors
def eval_probe(ctx, embedding, fmt, lexicon, kernel, gamma, folds, reg, seed, out):
    """Cross-validated recoverability of lexicon labels."""
    import warnings

    from . import embedkit, serialize

    emb = _load_embedding_opt(embedding, fmt)
    lex = embedkit.load_gender_lexicon(lexicon)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        acc = embedkit.recoverability_probe(
            emb, lex, kernel=kernel, folds=folds, seed=seed, gamma=gamma, ridge_alpha=reg
        )
    report = {
        "kernel": kernel,
        "gamma": gamma,
        "folds": folds,
        "reg": reg,
        "seed": seed,
        "cv_accuracy": acc,
    }
    serialize.atomic_write_text(out, json.dumps(report, indent=2, sort_keys=True) + "\n")
    click.echo(f"probe_cv_accuracy: {acc!r}")
    _echo(ctx, f"wrote {out}")


if __name__ == "__main__":
    main()
