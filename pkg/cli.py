# cli.py
"""
Command Line Interface for the kernel CF-OMD recommender.

The pipeline is file-mediated: split -> recommend -> eval, plus analyze and
a one-shot experiment command. Exit codes: 0 ok, 1 runtime failure,
2 usage or configuration error.
"""

import functools
import json
import sys
from pathlib import Path
from typing import Any, Dict, List, Optional

import click
import numpy as np
import pandas as pd
from click.core import ParameterSource
from pydantic import ValidationError

# Add project root to path
project_root = Path(__file__).parent
sys.path.insert(0, str(project_root))

from config.settings import ConfigManager, Settings, get_environment_info
from core.analysis import analyze as analyze_matrix
from core.dataset import InteractionMatrix, apply_fold, make_fold_plan, read_matrix
from core.exceptions import ConfigurationError, RecsysError
from core.experiment import evaluate_recommendations, run_fold, run_protocol
from core.kernel_engine import make_spec
from core.metrics import metrics_summary
from core.recommender_engine import RecommenderEngine
from core.utils import FileUtils, GramCache, LoggingUtils, TimingLog
from models.schemas import FoldPlan, Method, RecommendationMeta, RunConfig, TailAxis
from recommenders.base import Recommendation

TSV_COLUMNS = ["user", "rank", "item", "score"]
EXPLICIT_SOURCES = (ParameterSource.COMMANDLINE, ParameterSource.ENVIRONMENT)


class RecsysCLI:
    """Shared state for every command: settings, JSON config and the engine"""

    def __init__(self, config_file: Optional[str] = None):
        self.settings = Settings()
        self.config_manager = ConfigManager(config_file)
        self.engine = RecommenderEngine(self.settings)

    def cache(self, enabled: bool = True) -> GramCache:
        runtime = self.settings.runtime
        return GramCache(self.configured("runtime.cache_dir", runtime.cache_dir),
                         enabled=enabled and self.configured("runtime.use_cache", runtime.use_cache))

    def configured(self, key: str, fallback: Any) -> Any:
        """JSON config value for ``key`` or the settings fallback"""
        value = self.config_manager.get(key)
        return fallback if value is None else value

    def resolve(self, ctx: click.Context, name: str, key: str, fallback: Any) -> Any:
        """CLI flag > JSON config > environment/.env > built-in default"""
        if is_explicit(ctx, name):
            return ctx.params[name]
        return self.configured(key, fallback)


def is_explicit(ctx: click.Context, name: str) -> bool:
    return ctx.params.get(name) is not None and ctx.get_parameter_source(name) in EXPLICIT_SOURCES


def handle_errors(func):
    """Map library errors onto click's exit codes"""
    @functools.wraps(func)
    def wrapper(*args, **kwargs):
        try:
            return func(*args, **kwargs)
        except click.ClickException:
            raise
        except (ConfigurationError, ValidationError) as e:
            raise click.UsageError(str(e))
        except (RecsysError, OSError, ValueError) as e:
            raise click.ClickException(str(e))
    return wrapper


def data_options(func):
    func = click.option('--skip-header', is_flag=True, default=None, help='Ignore the first line')(func)
    func = click.option('--threshold', type=float, default=None,
                        help='Keep pairs with rating >= threshold')(func)
    func = click.option('--format', 'delimiter', default=None,
                        help='auto, tab, comma, space or a literal delimiter')(func)
    func = click.option('--data', '-d', required=True, type=click.Path(exists=True, dir_okay=False),
                        help='Interaction file (user item [rating])')(func)
    return func


def protocol_options(func):
    func = click.option('--seed', type=int, default=None, help='Fold plan seed')(func)
    func = click.option('--folds', '-k', type=int, default=None, help='Number of user folds')(func)
    func = click.option('--out', '-o', type=click.Path(file_okay=False), default=None,
                        help='Output directory')(func)
    return func


def model_options(func):
    options = [
        click.option('--method', '-m', type=click.Choice([m.value for m in Method]), default=None),
        click.option('--kernel', type=click.Choice(['linear', 'polynomial', 'rbf', 'tanimoto']),
                     default=None, help='Kernel family for cf-komd'),
        click.option('--c', 'c', type=float, default=None, help='Polynomial offset'),
        click.option('--degree', type=int, default=None, help='Polynomial degree'),
        click.option('--gamma', type=float, default=None, help='RBF width'),
        click.option('--full-kernel', is_flag=True, default=None,
                     help='Keep the zero-degree term (dense gram)'),
        click.option('--lambda-p', type=float, default=None, help='Ridge weight on positives'),
        click.option('--q-source', type=click.Choice(['tilde', 'exact']), default=None),
        click.option('--alpha', type=float, default=None, help='MSDW asymmetry'),
        click.option('--locality-q', type=float, default=None, help='MSDW locality exponent'),
        click.option('--tol', type=float, default=None),
        click.option('--max-iter', type=int, default=None),
        click.option('--fold', default=None, help="Fold id or 'all'"),
        click.option('--threads', '-t', type=int, default=None),
        click.option('--top-n', type=int, default=None, help='N for mAP@N and P@N'),
        click.option('--plan', type=click.Path(dir_okay=False), default=None,
                     help='Fold plan file (default <out>/folds.json)'),
        click.option('--no-cache', is_flag=True, help='Do not read or write the gram cache'),
    ]
    for option in reversed(options):
        func = option(func)
    return func


def build_run_config(ctx: click.Context, app: RecsysCLI) -> RunConfig:
    """Validated RunConfig from flags, the JSON config and settings"""
    s = app.settings
    r = functools.partial(app.resolve, ctx)
    method = Method(r('method', 'method', Method.ECF_OMD.value))

    kernel_flags = ['kernel', 'c', 'degree', 'gamma', 'full_kernel']
    kernel = None
    if method == Method.CF_KOMD:
        kernel = make_spec(
            family=str(r('kernel', 'kernel.family', s.kernel.family.value)),
            c=float(r('c', 'kernel.c', s.kernel.c)),
            degree=int(r('degree', 'kernel.degree', s.kernel.degree)),
            gamma=float(r('gamma', 'kernel.gamma', s.kernel.gamma)),
            reduced=not ctx.params.get('full_kernel') and bool(app.configured('kernel.reduced', s.kernel.reduced)),
        )
    elif any(is_explicit(ctx, name) for name in kernel_flags):
        raise ConfigurationError(f"kernel options are not accepted by {method.value}")

    def method_only(name: str, key: str, fallback: Any, wanted: Method) -> Any:
        if is_explicit(ctx, name):
            return ctx.params[name]
        return app.configured(key, fallback) if method == wanted else None

    return RunConfig(
        data=str(ctx.params['data']),
        delimiter=r('delimiter', 'data.delimiter', s.data.delimiter),
        threshold=r('threshold', 'data.threshold', s.data.threshold),
        method=method,
        kernel=kernel,
        lambda_p=r('lambda_p', 'solver.lambda_p', s.solver.lambda_p),
        q_source=method_only('q_source', 'solver.q_source', s.solver.q_source.value, Method.CF_KOMD),
        alpha=method_only('alpha', 'baseline.alpha', s.baseline.alpha, Method.MSDW),
        locality_q=method_only('locality_q', 'baseline.locality_q', s.baseline.locality_q, Method.MSDW),
        folds=r('folds', 'eval.folds', s.eval.folds),
        fold=r('fold', 'eval.fold', 0),
        seed=r('seed', 'eval.seed', s.eval.seed),
        top_n=r('top_n', 'eval.top_n', s.eval.top_n),
        threads=r('threads', 'runtime.threads', s.runtime.threads),
        tol=r('tol', 'solver.tol', s.solver.tol),
        max_iter=r('max_iter', 'solver.max_iter', s.solver.max_iter),
        out=str(r('out', 'runtime.output_dir', s.runtime.output_dir)),
    )


def load_data(ctx: click.Context, app: RecsysCLI) -> InteractionMatrix:
    s = app.settings
    return read_matrix(
        ctx.params['data'],
        delimiter=app.resolve(ctx, 'delimiter', 'data.delimiter', s.data.delimiter),
        threshold=app.resolve(ctx, 'threshold', 'data.threshold', s.data.threshold),
        skip_header=bool(app.resolve(ctx, 'skip_header', 'data.skip_header', s.data.skip_header)),
    )


def plan_path(ctx: click.Context, out: str) -> Path:
    return Path(ctx.params['plan']) if ctx.params.get('plan') else Path(out) / "folds.json"


def load_plan(path: Path, mtx: InteractionMatrix) -> FoldPlan:
    if not path.exists():
        raise ConfigurationError(f"fold plan not found: {path} (run 'split' first)")
    try:
        plan = FoldPlan.model_validate_json(path.read_text(encoding="utf-8"))
    except ValidationError as e:
        raise ConfigurationError(f"invalid fold plan {path}: {e}")
    if plan.dataset_hash != mtx.content_hash():
        raise ConfigurationError(f"fold plan {path} was built from a different dataset")
    return plan


def recommendations_frame(mtx: InteractionMatrix, recommendations: Dict[int, Recommendation]) -> pd.DataFrame:
    frames = []
    for user in sorted(recommendations):
        rec = recommendations[user]
        frames.append(pd.DataFrame({
            "user": mtx.user_labels[user],
            "rank": np.arange(1, len(rec.items) + 1),
            "item": [mtx.item_labels[i] for i in rec.items],
            "score": rec.scores,
        }))
    if not frames:
        return pd.DataFrame(columns=TSV_COLUMNS)
    return pd.concat(frames, ignore_index=True)


def write_recommendations(path: Path, frame: pd.DataFrame, meta: RecommendationMeta) -> None:
    FileUtils.ensure_directory(path.parent)
    frame.to_csv(path, sep="\t", index=False, float_format="%.17g", lineterminator="\n")
    FileUtils.write_json(meta.model_dump(mode="json"), meta_path(path))


def meta_path(path: Path) -> Path:
    return path.with_name(path.name + ".meta.json")


def read_recommendations(path: Path, mtx: InteractionMatrix, train: InteractionMatrix) -> Dict[int, Recommendation]:
    frame = pd.read_csv(path, sep="\t", dtype={"user": str, "item": str}, keep_default_na=False)
    missing = set(TSV_COLUMNS) - set(frame.columns)
    if missing:
        raise ConfigurationError(f"{path} lacks columns {sorted(missing)}")
    user_index = {label: i for i, label in enumerate(mtx.user_labels)}
    item_index = {label: i for i, label in enumerate(mtx.item_labels)}
    recommendations: Dict[int, Recommendation] = {}
    for label, group in frame.groupby("user", sort=False):
        if label not in user_index:
            raise ConfigurationError(f"{path}: unknown user {label!r}")
        group = group.sort_values("rank")
        user = user_index[label]
        items = np.array([item_index[i] for i in group["item"]], dtype=np.int64)
        recommendations[user] = Recommendation(user=user, items=items,
                                               scores=group["score"].to_numpy(dtype=np.float64),
                                               excluded=train.items_of(user))
    return recommendations


def recommendations_file(out: str, method: Method, fold: int) -> Path:
    return Path(out) / f"recommendations-{method.value}-fold{fold}.tsv"


@click.group(context_settings={"auto_envvar_prefix": "KOMD", "help_option_names": ["-h", "--help"]})
@click.option('--verbose', '-v', is_flag=True, help='Enable verbose output')
@click.option('--config', 'config_file', type=click.Path(dir_okay=False), default=None,
              help='JSON run configuration')
@click.option('--log-format', type=click.Choice(['text', 'json']), default=None)
@click.option('--progress/--no-progress', default=None, help='Show a progress bar over users')
@click.pass_context
def cli(ctx, verbose, config_file, log_format, progress):
    """Kernel CF-OMD recommender CLI"""
    ctx.ensure_object(dict)
    try:
        app = RecsysCLI(config_file)
    except (ConfigurationError, ValidationError) as e:
        raise click.UsageError(str(e))
    runtime = app.settings.runtime
    LoggingUtils.setup_logging(
        log_level="DEBUG" if verbose else app.configured("runtime.log_level", runtime.log_level),
        log_format=log_format or app.configured("runtime.log_format", runtime.log_format),
    )
    ctx.obj['verbose'] = verbose
    ctx.obj['cli'] = app
    ctx.obj['progress'] = progress if progress is not None else app.configured("runtime.progress", runtime.progress)


@cli.command()
@data_options
@protocol_options
@click.option('--plan', type=click.Path(dir_okay=False), default=None, help='Output path of the fold plan')
@click.pass_context
@handle_errors
def split(ctx, **_):
    """Build the user-fold / held-out-half protocol"""
    app: RecsysCLI = ctx.obj['cli']
    s = app.settings
    mtx = load_data(ctx, app)
    out = str(app.resolve(ctx, 'out', 'runtime.output_dir', s.runtime.output_dir))
    plan = make_fold_plan(
        mtx,
        k=int(app.resolve(ctx, 'folds', 'eval.folds', s.eval.folds)),
        seed=int(app.resolve(ctx, 'seed', 'eval.seed', s.eval.seed)),
        min_ratings=int(app.configured('eval.min_ratings', s.eval.min_ratings)),
        config={"data": str(ctx.params['data'])},
    )
    path = plan_path(ctx, out)
    FileUtils.ensure_directory(path.parent)
    FileUtils.safe_write_file(path, plan.to_json() + "\n")

    stats = mtx.stats()
    click.echo(f"📊 |U|={stats.n_users} |I|={stats.n_items} |R|={stats.n_ratings} "
               f"density={100 * stats.density:.3f}%")
    click.echo(f"Fold sizes: {plan.fold_sizes()}")
    click.echo(f"✅ Fold plan written to {path}")


@cli.command()
@data_options
@protocol_options
@model_options
@click.pass_context
@handle_errors
def recommend(ctx, **_):
    """Rank every test user of the selected fold(s)"""
    app: RecsysCLI = ctx.obj['cli']
    config = build_run_config(ctx, app)
    mtx = load_data(ctx, app)
    plan = load_plan(plan_path(ctx, config.out), mtx)
    if plan.k != config.folds:
        if is_explicit(ctx, 'folds'):
            raise ConfigurationError(f"fold plan has k={plan.k} but --folds is {config.folds}")
        config = RunConfig.model_validate({**config.model_dump(), "folds": plan.k})

    cache = app.cache(enabled=not ctx.params.get('no_cache'))
    with TimingLog(Path(config.out) / "timings.jsonl") as timing:
        for fold in config.fold_ids():
            train, test = apply_fold(mtx, plan, fold)
            recommender = app.engine.create(config, cache=cache)
            result = run_fold(train, test, recommender, top_n=config.top_n, threads=config.threads,
                              fold=fold, seed=config.seed, config=config.echo(), timing=timing,
                              progress=ctx.obj['progress'])
            path = recommendations_file(config.out, config.method, fold)
            meta = RecommendationMeta(method=config.method, fold=fold, n_users=len(result.recommendations),
                                      dataset_hash=mtx.content_hash(), plan_hash=plan.plan_hash(),
                                      config=config.echo())
            write_recommendations(path, recommendations_frame(mtx, result.recommendations), meta)
            if result.failures:
                click.echo(f"⚠️ fold {fold}: {len(result.failures)} users failed", err=True)
            click.echo(f"✅ fold {fold}: {len(result.recommendations)} users -> {path}")


@cli.command(name="eval")
@data_options
@protocol_options
@click.option('--recs', '-r', 'recs', multiple=True, required=True, type=click.Path(exists=True, dir_okay=False),
              help='Recommendations TSV written by recommend')
@click.option('--top-n', type=int, default=None)
@click.option('--plan', type=click.Path(dir_okay=False), default=None)
@click.option('--per-user', is_flag=True, help='Also write per-user metric rows')
@click.pass_context
@handle_errors
def eval_cmd(ctx, recs, per_user, **_):
    """Evaluate recommendation files against the held-out halves"""
    app: RecsysCLI = ctx.obj['cli']
    s = app.settings
    mtx = load_data(ctx, app)
    out = str(app.resolve(ctx, 'out', 'runtime.output_dir', s.runtime.output_dir))
    plan = load_plan(plan_path(ctx, out), mtx)
    top_n = int(app.resolve(ctx, 'top_n', 'eval.top_n', s.eval.top_n))

    for rec_file in recs:
        rec_path = Path(rec_file)
        if not meta_path(rec_path).exists():
            raise ConfigurationError(f"missing sidecar {meta_path(rec_path)}")
        meta = RecommendationMeta.model_validate(FileUtils.read_json(meta_path(rec_path)))
        if meta.dataset_hash != mtx.content_hash():
            raise ConfigurationError(f"{rec_path} was produced from a different dataset (hash mismatch)")
        if meta.plan_hash != plan.plan_hash():
            raise ConfigurationError(f"{rec_path} was produced with a different fold plan (hash mismatch)")

        train, test = apply_fold(mtx, plan, meta.fold)
        recommendations = read_recommendations(rec_path, mtx, train)
        n_failed = len(set(test) - set(recommendations))
        report = evaluate_recommendations(recommendations, test, top_n=top_n, fold=meta.fold,
                                          seed=plan.seed, config=meta.config, n_failed=n_failed,
                                          keep_per_user=per_user)
        if report.zero_users:
            click.echo(f"⚠️ {rec_path.name}: no users could be evaluated", err=True)

        report_path = rec_path.with_name(rec_path.stem + ".metrics.json")
        FileUtils.write_json(report.model_dump(mode="json", exclude={"per_user"}), report_path)
        if per_user and report.per_user is not None:
            rows = pd.DataFrame([row.model_dump() for row in report.per_user])
            rows.to_csv(rec_path.with_name(rec_path.stem + ".users.tsv"), sep="\t", index=False,
                        float_format="%.17g", lineterminator="\n")
        click.echo(f"📊 {rec_path.name}: {metrics_summary(report)}")


@cli.command(name="analyze")
@data_options
@protocol_options
@click.option('--threads', '-t', type=int, default=None)
@click.pass_context
@handle_errors
def analyze_cmd(ctx, **_):
    """Kernel density estimate, measured gram density and long-tail fits"""
    app: RecsysCLI = ctx.obj['cli']
    s = app.settings
    mtx = load_data(ctx, app)
    out = Path(app.resolve(ctx, 'out', 'runtime.output_dir', s.runtime.output_dir))
    threads = int(app.resolve(ctx, 'threads', 'runtime.threads', s.runtime.threads))

    report, tables = analyze_matrix(mtx, threads=threads, config={"data": str(ctx.params['data'])})
    FileUtils.write_json(report.model_dump(mode="json"), out / "analysis.json")
    for axis, table in tables.items():
        table.to_csv(out / f"{axis.value}.tsv", sep="\t", index=False, lineterminator="\n")

    d = report.density
    click.echo(f"📊 |U|={report.stats.n_users} |I|={report.stats.n_items} |R|={report.stats.n_ratings}")
    click.echo(f"d(K) estimate: {100 * d.d_k:.4f}%  measured: "
               + ("n/a" if d.empirical is None else f"{100 * d.empirical:.4f}%"))
    for label, fit in (("items", report.item_fit), ("users", report.user_fit)):
        if fit is None:
            click.echo(f"⚠️ {label}: {report.errors.get(_axis_name(label), 'fit unavailable')}")
        else:
            click.echo(f"{label}: exponent {fit.exponent:.3f}, r2 {fit.r2:.3f} ({fit.n_points} points)")
    click.echo(f"✅ Report written to {out / 'analysis.json'}")


def _axis_name(label: str) -> str:
    return (TailAxis.ITEM_POPULARITY if label == "items" else TailAxis.USER_ACTIVITY).value


@cli.command()
@data_options
@protocol_options
@model_options
@click.option('--per-user', is_flag=True, help='Keep per-user rows in the fold reports')
@click.pass_context
@handle_errors
def experiment(ctx, per_user, **_):
    """Run the whole protocol in memory and report fold mean and stdev"""
    app: RecsysCLI = ctx.obj['cli']
    if not is_explicit(ctx, 'fold') and app.config_manager.get('eval.fold') is None:
        ctx.params['fold'] = 'all'
        ctx.set_parameter_source('fold', ParameterSource.COMMANDLINE)
    config = build_run_config(ctx, app)
    mtx = load_data(ctx, app)
    if ctx.params.get('plan'):
        plan = load_plan(Path(ctx.params['plan']), mtx)
    else:
        plan = make_fold_plan(mtx, k=config.folds, seed=config.seed,
                              min_ratings=int(app.configured('eval.min_ratings', app.settings.eval.min_ratings)),
                              config={"data": config.data})

    with TimingLog(Path(config.out) / "timings.jsonl") as timing:
        summary, _results = run_protocol(mtx, plan, config, engine=app.engine,
                                         cache=app.cache(enabled=not ctx.params.get('no_cache')),
                                         timing=timing, progress=ctx.obj['progress'],
                                         keep_per_user=per_user)
    path = Path(config.out) / f"experiment-{config.method.value}.json"
    FileUtils.write_json(summary.model_dump(mode="json"), path)
    click.echo(f"📊 {config.method.value}: {metrics_summary(summary)}")
    click.echo(f"✅ Report written to {path}")


@cli.group()
def config():
    """Configuration management commands"""
    pass


@config.command()
@click.pass_context
def show(ctx):
    """Show the effective configuration"""
    app: RecsysCLI = ctx.obj['cli']
    click.echo("⚙️ Current Configuration")
    click.echo("=" * 30)

    effective = ConfigManager.from_settings(app.settings)
    for key, value in _flatten(app.config_manager.get_config_dict()).items():
        effective.set(key, value)

    def print_config(obj, prefix=""):
        for key, value in obj.items():
            if isinstance(value, dict):
                click.echo(f"{prefix}{key}:")
                print_config(value, prefix + "  ")
            else:
                click.echo(f"{prefix}{key}: {value}")

    print_config(effective.get_config_dict())


@config.command()
@click.argument('path', type=click.Path(dir_okay=False))
@click.pass_context
def init(ctx, path):
    """Write a JSON template holding every tunable"""
    app: RecsysCLI = ctx.obj['cli']
    ConfigManager.from_settings(app.settings).save_config(path)
    click.echo(f"✅ Configuration template written to {path}")


@config.command()
@click.pass_context
def env(ctx):
    """Show environment information"""
    click.echo(json.dumps(get_environment_info(ctx.obj['cli'].settings), indent=2, sort_keys=True))


def _flatten(obj: Dict[str, Any], prefix: str = "") -> Dict[str, Any]:
    flat: Dict[str, Any] = {}
    for key, value in obj.items():
        name = f"{prefix}{key}"
        if isinstance(value, dict):
            flat.update(_flatten(value, name + "."))
        else:
            flat[name] = value
    return flat


@cli.command()
@click.pass_context
def version(ctx):
    """Show version information"""
    settings = ctx.obj['cli'].settings
    click.echo(f"🧮 {settings.title}")
    click.echo(f"Version: {settings.version}")
    click.echo(f"Python: {sys.version}")
    click.echo(f"Methods: {', '.join(ctx.obj['cli'].engine.get_available_methods())}")


def main(argv: Optional[List[str]] = None) -> int:
    try:
        cli.main(args=argv, prog_name="komd", standalone_mode=False)
    except click.exceptions.Exit as e:
        return e.exit_code
    except click.ClickException as e:
        e.show()
        return e.exit_code
    except click.exceptions.Abort:
        return 1
    return 0


if __name__ == '__main__':
    sys.exit(main())
