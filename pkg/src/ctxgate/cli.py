"""Command line interface.

analyze / render drive the offline pipeline on one package; gen-corpus,
train and eval reproduce the experiment suite on a synthetic corpus;
simulate replays a trace through the mediator; serve starts the gateway
for the decision console.
"""

from __future__ import annotations

import functools
import sys
from pathlib import Path

import click

from . import analyzer, corpus, evalharness, mediator, reporting
from .appmodel import (
    ApiMapError,
    PackageError,
    PermissionType,
    default_sensitive_api_map,
    load_sensitive_api_map,
    parse_package,
)
from .learners import Algo, ModelFormatError, PermissionModel, load_model, save_model
from .render import RenderError, render_window, serialize_snapshot

ALGO_CHOICES = [a.value.lower() for a in Algo]

_USER_ERRORS = (
    PackageError,
    ApiMapError,
    analyzer.AmbiguityError,
    RenderError,
    corpus.CorpusError,
    evalharness.HarnessError,
    mediator.MediatorError,
    ModelFormatError,
    ValueError,
    OSError,
)


def surface_errors(fn):
    """Turn domain errors into clean CLI messages instead of tracebacks."""

    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except click.ClickException:
            raise
        except _USER_ERRORS as e:
            raise click.ClickException(str(e)) from e

    return wrapper


def _load_api_map(path: str | None):
    if path is None:
        return default_sensitive_api_map()
    return load_sensitive_api_map(Path(path).read_text(encoding="utf-8"))


def _load_models_dir(models_dir: str) -> dict[PermissionType, PermissionModel]:
    models = {}
    for f in sorted(Path(models_dir).glob("*.model")):
        model = load_model(f)
        models[model.permission] = model
    if not models:
        raise click.ClickException(f"no .model files in {models_dir}")
    return models


def _device_state(corpus_dir: str, models_dir: str, policy: str) -> mediator.DeviceState:
    bundle = corpus.load_corpus(corpus_dir)
    return mediator.DeviceState(
        packages={p.package_id: p for p in bundle.packages},
        api_map=default_sensitive_api_map(),
        models=_load_models_dir(models_dir),
        config=mediator.MediatorConfig(
            background_policy=mediator.BackgroundPolicy(policy)
        ),
    )


@click.group()
def main():
    """Context-sensitive permission mediation toolkit."""
    try:
        import signal

        signal.signal(signal.SIGPIPE, signal.SIG_DFL)
    except (ImportError, AttributeError, ValueError):
        pass


@main.command()
@click.argument("package_file", type=click.Path(exists=True))
@click.option("--api-map", "api_map_path", type=click.Path(exists=True), default=None,
              help="Sensitive API map file; bundled map by default.")
@click.option("--review", "review_path", type=click.Path(exists=True), default=None,
              help="JSON allow/deny list of site_ids applied after extraction.")
@click.option("--out", "out_path", type=click.Path(), default=None,
              help="Write bindings to this .bind file instead of stdout.")
@surface_errors
def analyze(package_file, api_map_path, review_path, out_path):
    """Locate sensitive call sites and their UI bindings in a package."""
    pkg = parse_package(Path(package_file).read_text(encoding="utf-8"))
    api_map = _load_api_map(api_map_path)
    bindings = analyzer.extract_bindings(pkg, api_map)
    if review_path:
        review = analyzer.ReviewList.parse(Path(review_path).read_text(encoding="utf-8"))
        bindings = analyzer.apply_review(bindings, review)
    text = analyzer.serialize_bindings(bindings)
    if out_path:
        Path(out_path).write_text(text, encoding="utf-8")
        click.echo(f"wrote {len(bindings)} bindings to {out_path}")
    else:
        click.echo(text, nl=False)


@main.command("render")
@click.argument("package_file", type=click.Path(exists=True))
@click.argument("activity")
@click.option("--out", "out_path", type=click.Path(), default=None,
              help="Write the snapshot to this .snap file instead of stdout.")
@surface_errors
def render_cmd(package_file, activity, out_path):
    """Render one Activity to a resolved window snapshot."""
    pkg = parse_package(Path(package_file).read_text(encoding="utf-8"))
    snapshot = render_window(pkg, activity)
    text = serialize_snapshot(snapshot)
    if out_path:
        Path(out_path).write_text(text, encoding="utf-8")
        click.echo(f"wrote snapshot {snapshot.snapshot_id} to {out_path}")
    else:
        click.echo(text, nl=False)


@main.command("gen-corpus")
@click.option("--seed", type=int, default=1, show_default=True)
@click.option("--apps", "n_apps", type=int, default=200, show_default=True)
@click.option("--mix", default=None,
              help="Label mix as Legal=0.5,Illegal=0.35,UserDependent=0.15")
@click.option("--out", "out_dir", type=click.Path(), required=True)
@surface_errors
def gen_corpus(seed, n_apps, mix, out_dir):
    """Generate a labeled synthetic corpus."""
    template_mix = None
    if mix:
        template_mix = {}
        for part in mix.split(","):
            key, _, value = part.partition("=")
            template_mix[key.strip()] = float(value)
    bundle = corpus.generate_corpus(seed, n_apps, template_mix)
    corpus.write_corpus(bundle, out_dir)
    click.echo(
        f"corpus: {len(bundle.packages)} apps, {len(bundle.instances)} instances "
        f"-> {out_dir}"
    )


@main.command()
@click.option("--corpus", "corpus_dir", type=click.Path(exists=True), required=True)
@click.option("--algo", type=click.Choice(ALGO_CHOICES), default="lr", show_default=True)
@click.option("--permission", default="all", show_default=True,
              help="One permission name or 'all'.")
@click.option("--epochs", type=int, default=evalharness.OFFLINE_EPOCHS, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--out", "out_dir", type=click.Path(), required=True)
@surface_errors
def train(corpus_dir, algo, permission, epochs, seed, out_dir):
    """Train the offline generic model per permission."""
    bundle = corpus.load_corpus(corpus_dir)
    models = evalharness.train_generic_models(
        bundle.instances, Algo(algo.upper()), epochs=epochs, seed=seed
    )
    wanted = (
        list(models)
        if permission == "all"
        else [PermissionType(permission.upper())]
    )
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    for perm in wanted:
        model = models[perm]
        save_model(model, out / f"{perm.value}_{model.algo.value}.model")
        click.echo(
            f"{perm.value}: {model.algo.value} trained on "
            f"{model.examples_seen} updates"
        )


@main.group("eval")
def eval_group():
    """Experiment suite over a generated corpus."""


@eval_group.command("cv")
@click.option("--corpus", "corpus_dir", type=click.Path(exists=True), required=True)
@click.option("--algo", type=click.Choice(ALGO_CHOICES + ["all"]), default="lr",
              show_default=True)
@click.option("--k", type=int, default=5, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--no-app-stratify", is_flag=True,
              help="Fold on raw instances instead of whole apps.")
@click.option("--report", "report_dir", type=click.Path(), required=True)
@surface_errors
def eval_cv(corpus_dir, algo, k, seed, no_app_stratify, report_dir):
    """k-fold cross validation per permission."""
    bundle = corpus.load_corpus(corpus_dir)
    instances = bundle.training_instances()
    stratify = not no_app_stratify
    if algo == "all":
        results = {}
        for a in Algo:
            results[a.value] = evalharness.cross_validate(
                instances, a, k=k, seed=seed, stratify_by_app=stratify
            )
        click.echo(reporting.write_comparison_report(results, report_dir), nl=False)
        for name, r in results.items():
            click.echo(f"\n[{name}]")
            click.echo(reporting.write_cv_report(r, Path(report_dir) / name.lower()), nl=False)
    else:
        result = evalharness.cross_validate(
            instances, Algo(algo.upper()), k=k, seed=seed, stratify_by_app=stratify
        )
        click.echo(reporting.write_cv_report(result, report_dir), nl=False)


@eval_group.command("ablate")
@click.option("--corpus", "corpus_dir", type=click.Path(exists=True), required=True)
@click.option("--algo", type=click.Choice(ALGO_CHOICES), default="lr", show_default=True)
@click.option("--k", type=int, default=5, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--subcorpus", type=click.Choice(["default", "when-violation"]),
              default="default", show_default=True)
@click.option("--report", "report_dir", type=click.Path(), required=True)
@surface_errors
def eval_ablate(corpus_dir, algo, k, seed, subcorpus, report_dir):
    """Cross validation for every non-empty feature-set subset."""
    bundle = corpus.load_corpus(corpus_dir)
    if subcorpus == "when-violation":
        instances = evalharness.when_violation_subcorpus(bundle)
    else:
        instances = bundle.training_instances()
    results = evalharness.ablate(instances, Algo(algo.upper()), k=k, seed=seed)
    click.echo(reporting.write_ablation_report(results, report_dir), nl=False)


@eval_group.command("personalize")
@click.option("--corpus", "corpus_dir", type=click.Path(exists=True), required=True)
@click.option("--algo", type=click.Choice(ALGO_CHOICES), default="lr", show_default=True)
@click.option("--noise", type=float, default=0.1, show_default=True)
@click.option("--decisions", type=int, default=50, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--report", "report_dir", type=click.Path(), required=True)
@surface_errors
def eval_personalize(corpus_dir, algo, noise, decisions, seed, report_dir):
    """Per-user personalization from simulated decisions."""
    bundle = corpus.load_corpus(corpus_dir)
    pretrained = evalharness.train_generic_models(
        bundle.instances, Algo(algo.upper()), seed=seed
    )
    profiles = corpus.make_profiles(seed, noise_rate=noise)
    result = evalharness.personalize_eval(
        profiles, bundle, pretrained, decisions_per_user=decisions, seed=seed
    )
    click.echo(reporting.write_personalization_report(result, report_dir), nl=False)


@eval_group.command("bench")
@click.option("--corpus", "corpus_dir", type=click.Path(exists=True), required=True)
@click.option("--models", "models_dir", type=click.Path(exists=True), required=True)
@click.option("--trace", "trace_path", type=click.Path(exists=True), required=True)
@click.option("--reps", type=int, default=10, show_default=True)
@click.option("--report", "report_dir", type=click.Path(), required=True)
@surface_errors
def eval_bench(corpus_dir, models_dir, trace_path, reps, report_dir):
    """Replay a trace repeatedly and report per-request latency."""
    events = mediator.parse_trace(Path(trace_path).read_text(encoding="utf-8"))

    def factory():
        return _device_state(corpus_dir, models_dir, "always-deny")

    stats = evalharness.bench_overhead(factory, events, repetitions=reps)
    click.echo(reporting.write_bench_report(stats, report_dir), nl=False)


@main.command()
@click.argument("trace_file", type=click.Path(exists=True))
@click.option("--corpus", "corpus_dir", type=click.Path(exists=True), required=True)
@click.option("--models", "models_dir", type=click.Path(exists=True), required=True)
@click.option("--policy", type=click.Choice(["prompt", "always-deny"]),
              default="prompt", show_default=True,
              help="What to do with background requests that have no context.")
@click.option("--log", "log_path", type=click.Path(), default=None,
              help="Append closed request records to this JSONL file.")
@surface_errors
def simulate(trace_file, corpus_dir, models_dir, policy, log_path):
    """Replay a device trace through the mediation pipeline."""
    state = _device_state(corpus_dir, models_dir, policy)
    events = mediator.parse_trace(Path(trace_file).read_text(encoding="utf-8"))
    records = mediator.run_trace(state, events)
    for r in records:
        click.echo(
            f"{r.request_id} {r.permission.value} {r.package_id} "
            f"-> {r.verdict.value} ({r.decision_source.value}, p={r.p_legal:.3f}, "
            f"{r.latency_ms:.2f} ms)"
        )
    if state.pending:
        click.echo(f"{len(state.pending)} prompt(s) left pending")
    if log_path:
        mediator.write_decision_log(records, log_path)
        click.echo(f"appended {len(records)} records to {log_path}")


@main.command()
@click.option("--port", type=int, default=8787, show_default=True)
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--corpus", "corpus_dir", type=click.Path(exists=True), required=True)
@click.option("--models", "models_dir", type=click.Path(exists=True), required=True)
@click.option("--policy", type=click.Choice(["prompt", "always-deny"]),
              default="prompt", show_default=True)
@click.option("--static", "static_dir", type=click.Path(exists=True), default=None,
              help="Directory with the built decision console.")
@surface_errors
def serve(port, host, corpus_dir, models_dir, policy, static_dir):
    """Run the gateway service for the decision console."""
    from .gateway import GatewayApp, make_server

    state = _device_state(corpus_dir, models_dir, policy)
    app = GatewayApp(state, static_dir=static_dir)
    server = make_server(app, host, port)
    click.echo(f"gateway listening on http://{host}:{server.server_address[1]}/v1")
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        pass
    finally:
        server.server_close()


if __name__ == "__main__":
    main(sys.argv[1:])
