"""Experiment harness: cross-validation, feature ablation, personalization
and latency benchmarks over a generated corpus.

All partitions and training orders derive from explicit seeds, so every
table is reproducible; only wall-clock latency numbers vary between runs.
"""

from __future__ import annotations

import random
import statistics
import time
from dataclasses import dataclass, field

from .appmodel import PermissionType
from .corpus import (
    CorpusBundle,
    CorpusInstance,
    InstanceLabel,
    UserProfile,
    simulate_user,
)
from .features import FEATURE_SETS
from .learners import (
    Algo,
    Label,
    Metrics,
    OFFLINE_EPOCHS,
    PermissionModel,
    TrainExample,
    evaluate,
)
from .mediator import DeviceState, run_trace

ALL_SUBSETS: tuple[frozenset[str], ...] = (
    frozenset({"who"}),
    frozenset({"when"}),
    frozenset({"what"}),
    frozenset({"who", "when"}),
    frozenset({"who", "what"}),
    frozenset({"when", "what"}),
    frozenset({"who", "when", "what"}),
)


def subset_key(subset: frozenset[str]) -> str:
    return "+".join(s for s in FEATURE_SETS if s in subset)


class HarnessError(Exception):
    pass


def _example(instance: CorpusInstance, label: Label) -> TrainExample:
    return TrainExample(
        features=instance.features, label=label, permission=instance.permission
    )


def offline_train(
    model: PermissionModel,
    examples: list[TrainExample],
    epochs: int = OFFLINE_EPOCHS,
    seed: int = 0,
) -> PermissionModel:
    """Multiple shuffled passes for the gradient learners; a single pass
    for the count-based ones (counts are order-free, and replaying a
    stream would overstate the tree's confidence)."""
    if model.algo in (Algo.LR, Algo.SVM):
        for epoch in range(epochs):
            order = list(examples)
            random.Random(f"{seed}:{epoch}").shuffle(order)
            for ex in order:
                model.update(ex)
    elif model.algo is Algo.HT:
        order = list(examples)
        random.Random(f"{seed}:0").shuffle(order)
        for ex in order:
            model.update(ex)
    else:
        for ex in examples:
            model.update(ex)
    return model


def train_generic_models(
    instances: list[CorpusInstance],
    algo: Algo,
    epochs: int = OFFLINE_EPOCHS,
    seed: int = 0,
    thresholds: tuple[float, float] = (0.2, 0.8),
) -> dict[PermissionType, PermissionModel]:
    """One model per permission from the Legal/Illegal instances."""
    models = {}
    for permission in PermissionType:
        subset = [
            i for i in instances
            if i.permission is permission and i.label is not InstanceLabel.USER_DEPENDENT
        ]
        model = PermissionModel(permission=permission, algo=algo, thresholds=thresholds)
        examples = [_example(i, i.train_label()) for i in subset]
        offline_train(model, examples, epochs=epochs, seed=seed)
        models[permission] = model
    return models


# --------------------------------------------------------------------------
# cross-validation


@dataclass
class CvResult:
    algo: Algo
    k: int
    seed: int
    per_permission: dict[PermissionType, Metrics]
    median_f: float
    average_precision: float
    average_recall: float


def make_folds(
    instances: list[CorpusInstance], k: int, seed: int, stratify_by_app: bool
) -> list[list[CorpusInstance]]:
    """Partition into k folds. With app stratification, whole apps move
    together (no same-app leakage) and folds are balanced greedily;
    without it, instances split evenly with sizes differing by at most 1."""
    if len(instances) < k:
        raise HarnessError(f"need at least {k} instances, got {len(instances)}")
    rng = random.Random(f"{seed}:folds")
    folds: list[list[CorpusInstance]] = [[] for _ in range(k)]
    if stratify_by_app:
        by_app: dict[str, list[CorpusInstance]] = {}
        for inst in instances:
            by_app.setdefault(inst.package_id, []).append(inst)
        groups = sorted(by_app.values(), key=lambda g: (-len(g), g[0].package_id))
        order = list(range(len(groups)))
        rng.shuffle(order)
        # largest groups first, each into the currently smallest fold
        for gi in sorted(order, key=lambda i: -len(groups[i])):
            target = min(range(k), key=lambda f: (len(folds[f]), f))
            folds[target].extend(groups[gi])
    else:
        shuffled = list(instances)
        rng.shuffle(shuffled)
        for i, inst in enumerate(shuffled):
            folds[i % k].append(inst)
    return folds


def cross_validate(
    instances: list[CorpusInstance],
    algo: Algo,
    k: int = 5,
    seed: int = 0,
    epochs: int = OFFLINE_EPOCHS,
    stratify_by_app: bool = True,
) -> CvResult:
    """k-fold CV per permission; every fold serves exactly once as test."""
    eligible = [i for i in instances if i.label is not InstanceLabel.USER_DEPENDENT]
    present = sorted({i.permission for i in eligible}, key=lambda p: p.value)
    if not present:
        raise HarnessError("no Legal/Illegal instances to cross-validate")
    per_permission: dict[PermissionType, Metrics] = {}
    for permission in present:
        subset = [i for i in eligible if i.permission is permission]
        if len(subset) < k:
            raise HarnessError(
                f"{permission.value}: need at least {k} instances, got {len(subset)}"
            )
        folds = make_folds(subset, k, seed, stratify_by_app)
        predictions: list[Label] = []
        labels: list[Label] = []
        for held_out in range(k):
            train = [i for f, fold in enumerate(folds) if f != held_out for i in fold]
            model = PermissionModel(permission=permission, algo=algo)
            offline_train(
                model,
                [_example(i, i.train_label()) for i in train],
                epochs=epochs,
                seed=seed * 1000 + held_out,
            )
            for inst in folds[held_out]:
                p = model.predict(inst.features)
                predictions.append(Label.LEGAL if p >= 0.5 else Label.ILLEGAL)
                labels.append(inst.train_label())
        per_permission[permission] = evaluate(predictions, labels)
    fs = [m.weighted_f for m in per_permission.values()]
    ps = [m.weighted_precision for m in per_permission.values()]
    rs = [m.weighted_recall for m in per_permission.values()]
    return CvResult(
        algo=algo,
        k=k,
        seed=seed,
        per_permission=per_permission,
        median_f=statistics.median(fs),
        average_precision=sum(ps) / len(ps),
        average_recall=sum(rs) / len(rs),
    )


# --------------------------------------------------------------------------
# ablation


def mask_instances(
    instances: list[CorpusInstance], enabled: frozenset[str]
) -> list[CorpusInstance]:
    from dataclasses import replace

    return [replace(i, features=i.features.mask(enabled)) for i in instances]


def ablate(
    instances: list[CorpusInstance],
    algo: Algo,
    subsets: tuple[frozenset[str], ...] = ALL_SUBSETS,
    k: int = 5,
    seed: int = 0,
    epochs: int = OFFLINE_EPOCHS,
    stratify_by_app: bool = True,
) -> dict[str, CvResult]:
    """One cross-validation per feature-set subset."""
    results = {}
    for subset in subsets:
        results[subset_key(subset)] = cross_validate(
            mask_instances(instances, subset), algo,
            k=k, seed=seed, epochs=epochs, stratify_by_app=stratify_by_app,
        )
    return results


def when_violation_subcorpus(bundle: CorpusBundle) -> list[CorpusInstance]:
    """The recorder pair separable only through 'when': same pages, same
    trigger widget, different activation event."""
    return [
        i for i in bundle.instances
        if i.scenario in ("voice_recorder", "touch_wiretap")
    ]


# --------------------------------------------------------------------------
# personalization


@dataclass
class UserResult:
    profile_id: str
    weighted_f: float
    allow_precision: float
    allow_recall: float
    decisions: int
    allowed: int


@dataclass
class PersonalizationResult:
    median_f: float
    per_user: list[UserResult] = field(default_factory=list)


def personalize_eval(
    profiles: list[UserProfile],
    bundle: CorpusBundle,
    pretrained: dict[PermissionType, PermissionModel],
    decisions_per_user: int = 50,
    train_fraction: float = 2.0 / 3.0,
    seed: int = 0,
) -> PersonalizationResult:
    """Start each user from the generic model, fold in the training share
    of their simulated decisions one at a time, and score the held-out
    share. Reported precision/recall are for the allow class, which is
    what makes the conservative-user outlier visible."""
    pool = bundle.user_dependent_instances()
    if len(pool) < decisions_per_user:
        raise HarnessError(
            f"need at least {decisions_per_user} user-dependent instances, "
            f"got {len(pool)}"
        )
    per_user = []
    for profile in profiles:
        rng = random.Random(f"{seed}:{profile.profile_id}")
        chosen = rng.sample(pool, decisions_per_user)
        decided = [(inst, simulate_user(profile, inst, rng)) for inst in chosen]
        rng.shuffle(decided)
        n_train = round(decisions_per_user * train_fraction)
        train, test = decided[:n_train], decided[n_train:]
        models = {perm: model.clone() for perm, model in pretrained.items()}
        for inst, allow in train:
            models[inst.permission].update(_example(inst, inst.train_label(allow)))
        predictions = []
        labels = []
        for inst, allow in test:
            p = models[inst.permission].predict(inst.features)
            predictions.append(Label.LEGAL if p >= 0.5 else Label.ILLEGAL)
            labels.append(inst.train_label(allow))
        metrics = evaluate(predictions, labels)
        allow_cls = metrics.per_class[Label.LEGAL]
        per_user.append(
            UserResult(
                profile_id=profile.profile_id,
                weighted_f=metrics.weighted_f,
                allow_precision=allow_cls.precision,
                allow_recall=allow_cls.recall,
                decisions=decisions_per_user,
                allowed=sum(1 for _, a in decided if a),
            )
        )
    return PersonalizationResult(
        median_f=statistics.median(u.weighted_f for u in per_user),
        per_user=per_user,
    )


# --------------------------------------------------------------------------
# latency benchmark


@dataclass
class BenchStats:
    requests: int
    repetitions: int
    mean_ms: float
    median_ms: float
    p95_ms: float
    requests_per_minute: float
    latencies_ms: list[float] = field(default_factory=list)


def bench_overhead(state_factory, events, repetitions: int = 1) -> BenchStats:
    """Replay a model-decidable trace and report per-request pipeline
    latency; waiting on a user never happens here by construction."""
    latencies: list[float] = []
    wall_start = time.perf_counter()
    for _ in range(repetitions):
        state: DeviceState = state_factory()
        records = run_trace(state, events)
        latencies.extend(r.latency_ms for r in records)
    wall_minutes = (time.perf_counter() - wall_start) / 60.0
    if not latencies:
        raise HarnessError("trace produced no mediated requests")
    ordered = sorted(latencies)
    p95 = ordered[min(len(ordered) - 1, int(0.95 * len(ordered)))]
    return BenchStats(
        requests=len(latencies),
        repetitions=repetitions,
        mean_ms=sum(latencies) / len(latencies),
        median_ms=statistics.median(latencies),
        p95_ms=p95,
        requests_per_minute=len(latencies) / wall_minutes if wall_minutes > 0 else 0.0,
        latencies_ms=latencies,
    )
