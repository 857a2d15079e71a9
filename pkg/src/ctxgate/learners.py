"""Incremental per-permission classifiers.

Four single-example-update algorithms score a request as legal vs
illegal: multinomial naive Bayes with Laplace smoothing, SGD logistic
regression, a Pegasos linear SVM, and a Hoeffding tree over binarized
features. Every predict returns a probability-like value in [0, 1] and
never mutates state; updates are single-writer.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from enum import Enum

from .appmodel import PermissionType
from .features import ContextFeatures, DENSE_SIZE, HASH_DIM

MODEL_FORMAT = "model/1"

TOKEN_SPACE = 3 * HASH_DIM

# fixed training hyperparameters; exposed for configuration, never tuned
# per run so that results stay reproducible
LR_ETA = 0.1
LR_LAMBDA = 1e-4
SVM_LAMBDA = 1e-4
HT_DELTA = 1e-7
HT_GRACE = 200
OFFLINE_EPOCHS = 10

DEFAULT_THRESHOLDS = (0.2, 0.8)


class Label(Enum):
    LEGAL = "Legal"
    ILLEGAL = "Illegal"


class Algo(Enum):
    NB = "NB"
    LR = "LR"
    SVM = "SVM"
    HT = "HT"


@dataclass(frozen=True)
class TrainExample:
    features: ContextFeatures
    label: Label
    permission: PermissionType
    weight: float = 1.0

    def __post_init__(self):
        if self.weight <= 0:
            raise ValueError("example weight must be positive")


class ModelFormatError(Exception):
    pass


def hoeffding_bound(r: float, delta: float, n: int) -> float:
    """eps = sqrt(R^2 * ln(1/delta) / (2n))."""
    if r <= 0:
        raise ValueError("range R must be positive")
    if not 0 < delta <= 1:
        raise ValueError("delta must be in (0, 1]")
    if n < 1:
        raise ValueError("n must be at least 1")
    return math.sqrt(r * r * math.log(1.0 / delta) / (2.0 * n))


def _sigmoid(z: float) -> float:
    if z >= 0:
        return 1.0 / (1.0 + math.exp(-z))
    e = math.exp(z)
    return e / (1.0 + e)


def _binarize_dense(dense: tuple[float, ...]) -> tuple[int, ...]:
    return tuple(1 if v >= 0.5 else 0 for v in dense)


# --------------------------------------------------------------------------
# naive Bayes


class NaiveBayesState:
    """Per-class token counts (multinomial, alpha=1 over the combined token
    space) plus Bernoulli counts for the binarized dense block."""

    def __init__(self):
        self.class_counts = {Label.LEGAL: 0.0, Label.ILLEGAL: 0.0}
        self.token_counts = {Label.LEGAL: {}, Label.ILLEGAL: {}}
        self.token_totals = {Label.LEGAL: 0.0, Label.ILLEGAL: 0.0}
        self.dense_on = {Label.LEGAL: [0.0] * DENSE_SIZE, Label.ILLEGAL: [0.0] * DENSE_SIZE}

    def update(self, example: TrainExample) -> None:
        label, w = example.label, example.weight
        self.class_counts[label] += w
        counts = self.token_counts[label]
        for idx, value in example.features.indexed():
            if idx >= TOKEN_SPACE:
                break
            amount = value * w
            counts[idx] = counts.get(idx, 0.0) + amount
            self.token_totals[label] += amount
        on = self.dense_on[label]
        for j, bit in enumerate(_binarize_dense(example.features.dense)):
            if bit:
                on[j] += w

    def predict(self, features: ContextFeatures) -> float:
        total = self.class_counts[Label.LEGAL] + self.class_counts[Label.ILLEGAL]
        log_post = {}
        bits = _binarize_dense(features.dense)
        for label in (Label.LEGAL, Label.ILLEGAL):
            lp = math.log((self.class_counts[label] + 1.0) / (total + 2.0))
            counts = self.token_counts[label]
            denom = self.token_totals[label] + TOKEN_SPACE
            for idx, value in features.indexed():
                if idx >= TOKEN_SPACE:
                    break
                lp += value * math.log((counts.get(idx, 0.0) + 1.0) / denom)
            n = self.class_counts[label]
            for j, bit in enumerate(bits):
                p_on = (self.dense_on[label][j] + 1.0) / (n + 2.0)
                lp += math.log(p_on if bit else 1.0 - p_on)
            log_post[label] = lp
        m = max(log_post.values())
        e_legal = math.exp(log_post[Label.LEGAL] - m)
        e_illegal = math.exp(log_post[Label.ILLEGAL] - m)
        return e_legal / (e_legal + e_illegal)

    def to_doc(self) -> dict:
        return {
            "class_counts": {l.value: c for l, c in self.class_counts.items()},
            "token_counts": {
                l.value: [[i, c] for i, c in sorted(counts.items())]
                for l, counts in self.token_counts.items()
            },
            "token_totals": {l.value: t for l, t in self.token_totals.items()},
            "dense_on": {l.value: list(on) for l, on in self.dense_on.items()},
        }

    @classmethod
    def from_doc(cls, doc: dict) -> "NaiveBayesState":
        state = cls()
        state.class_counts = {Label(l): c for l, c in doc["class_counts"].items()}
        state.token_counts = {
            Label(l): {int(i): float(c) for i, c in pairs}
            for l, pairs in doc["token_counts"].items()
        }
        state.token_totals = {Label(l): float(t) for l, t in doc["token_totals"].items()}
        state.dense_on = {Label(l): list(map(float, on)) for l, on in doc["dense_on"].items()}
        return state

    def clone(self) -> "NaiveBayesState":
        return NaiveBayesState.from_doc(self.to_doc())


# --------------------------------------------------------------------------
# logistic regression

def logistic_loss(
    weights: dict[int, float], bias: float, x: list[tuple[int, float]],
    y: float, lam: float = LR_LAMBDA, weight: float = 1.0,
) -> float:
    """weight * cross-entropy + (lam/2)*||w||^2, the objective one SGD step
    descends. Written over explicit weights so tests can probe it
    numerically."""
    z = bias + sum(weights.get(i, 0.0) * v for i, v in x)
    # stable log(1+exp(.)) forms
    if z >= 0:
        ce = (1.0 - y) * z + math.log1p(math.exp(-z))
    else:
        ce = -y * z + math.log1p(math.exp(z))
    reg = 0.5 * lam * sum(w * w for w in weights.values())
    return weight * ce + reg


def logistic_gradient(
    weights: dict[int, float], bias: float, x: list[tuple[int, float]],
    y: float, lam: float = LR_LAMBDA, weight: float = 1.0,
) -> tuple[dict[int, float], float]:
    z = bias + sum(weights.get(i, 0.0) * v for i, v in x)
    g = weight * (_sigmoid(z) - y)
    grad = {i: lam * w for i, w in weights.items()}
    for i, v in x:
        grad[i] = grad.get(i, 0.0) + g * v
    return grad, g


class LogisticState:
    """SGD on L2-regularized logistic loss; the L2 shrink is carried in a
    scale factor so each step only touches active coordinates."""

    def __init__(self, eta: float = LR_ETA, lam: float = LR_LAMBDA):
        self.eta = eta
        self.lam = lam
        self.v: dict[int, float] = {}
        self.scale = 1.0
        self.bias = 0.0

    def _margin(self, x: list[tuple[int, float]]) -> float:
        return self.bias + self.scale * sum(self.v.get(i, 0.0) * val for i, val in x)

    def _rescale(self) -> None:
        if self.scale < 1e-9:
            self.v = {i: w * self.scale for i, w in self.v.items()}
            self.scale = 1.0

    def update(self, example: TrainExample) -> None:
        x = example.features.indexed()
        y = 1.0 if example.label is Label.LEGAL else 0.0
        g = example.weight * (_sigmoid(self._margin(x)) - y)
        self.scale *= 1.0 - self.eta * self.lam
        self._rescale()
        for i, val in x:
            self.v[i] = self.v.get(i, 0.0) - self.eta * g * val / self.scale
        self.bias -= self.eta * g

    def predict(self, features: ContextFeatures) -> float:
        return _sigmoid(self._margin(features.indexed()))

    def to_doc(self) -> dict:
        return {
            "eta": self.eta,
            "lam": self.lam,
            "weights": [[i, self.scale * w] for i, w in sorted(self.v.items())],
            "bias": self.bias,
        }

    @classmethod
    def from_doc(cls, doc: dict) -> "LogisticState":
        state = cls(eta=doc["eta"], lam=doc["lam"])
        state.v = {int(i): float(w) for i, w in doc["weights"]}
        state.bias = float(doc["bias"])
        return state

    def clone(self) -> "LogisticState":
        return LogisticState.from_doc(self.to_doc())


# --------------------------------------------------------------------------
# linear SVM (Pegasos)


class PegasosState:
    """Pegasos on hinge loss: step 1/(lam*t), projection onto the
    1/sqrt(lam) ball; margins map through sigmoid(2m) for thresholding."""

    def __init__(self, lam: float = SVM_LAMBDA):
        self.lam = lam
        self.v: dict[int, float] = {}
        self.scale = 1.0
        self.sq_norm = 0.0  # of v, unscaled
        self.t = 0

    def margin(self, x: list[tuple[int, float]]) -> float:
        return self.scale * sum(self.v.get(i, 0.0) * val for i, val in x)

    def update(self, example: TrainExample) -> None:
        x = example.features.indexed()
        y = 1.0 if example.label is Label.LEGAL else -1.0
        self.t += 1
        eta = 1.0 / (self.lam * self.t)
        m = self.margin(x)
        if self.t == 1:
            # (1 - 1/t) zeroes the vector on the first step
            self.v = {}
            self.scale = 1.0
            self.sq_norm = 0.0
        else:
            self.scale *= 1.0 - 1.0 / self.t
            if abs(self.scale) < 1e-9:
                self.v = {i: w * self.scale for i, w in self.v.items()}
                self.sq_norm = sum(w * w for w in self.v.values())
                self.scale = 1.0
        if y * m < 1.0:
            step = eta * example.weight * y
            for i, val in x:
                old = self.v.get(i, 0.0)
                new = old + step * val / self.scale
                self.v[i] = new
                self.sq_norm += new * new - old * old
        norm = abs(self.scale) * math.sqrt(max(self.sq_norm, 0.0))
        limit = 1.0 / math.sqrt(self.lam)
        if norm > limit:
            self.scale *= limit / norm

    def predict(self, features: ContextFeatures) -> float:
        return _sigmoid(2.0 * self.margin(features.indexed()))

    def norm(self) -> float:
        return abs(self.scale) * math.sqrt(max(self.sq_norm, 0.0))

    def to_doc(self) -> dict:
        return {
            "lam": self.lam,
            "weights": [[i, self.scale * w] for i, w in sorted(self.v.items())],
            "t": self.t,
        }

    @classmethod
    def from_doc(cls, doc: dict) -> "PegasosState":
        state = cls(lam=doc["lam"])
        state.v = {int(i): float(w) for i, w in doc["weights"]}
        state.sq_norm = sum(w * w for w in state.v.values())
        state.t = int(doc["t"])
        return state

    def clone(self) -> "PegasosState":
        return PegasosState.from_doc(self.to_doc())


# --------------------------------------------------------------------------
# Hoeffding tree


class _HtNode:
    __slots__ = ("split_feature", "children", "class_counts", "feat_counts", "since_eval")

    def __init__(self, class_counts: list[float] | None = None):
        self.split_feature: int | None = None
        self.children: list["_HtNode"] | None = None  # [absent, present]
        self.class_counts = class_counts or [0.0, 0.0]  # [legal, illegal]
        self.feat_counts: dict[int, list[float]] = {}
        self.since_eval = 0


def _entropy(counts: list[float]) -> float:
    total = sum(counts)
    if total <= 0:
        return 0.0
    h = 0.0
    for c in counts:
        if c > 0:
            p = c / total
            h -= p * math.log2(p)
    return h


class HoeffdingTreeState:
    """VFDT over binarized features: token presence plus the dense block
    thresholded at 0.5. Leaves hold class counts; a leaf splits when the
    best-vs-second information gain clears the Hoeffding bound."""

    def __init__(self, delta: float = HT_DELTA, grace: int = HT_GRACE):
        self.delta = delta
        self.grace = grace
        self.root = _HtNode()
        self.node_count = 1

    @staticmethod
    def _active(features: ContextFeatures) -> set[int]:
        base = 3 * HASH_DIM
        active = {i for i, v in features.indexed() if i < base and v > 0}
        active.update(
            base + j for j, bit in enumerate(_binarize_dense(features.dense)) if bit
        )
        return active

    def _leaf_for(self, active: set[int]) -> _HtNode:
        node = self.root
        while node.children is not None:
            node = node.children[1 if node.split_feature in active else 0]
        return node

    def update(self, example: TrainExample) -> None:
        active = self._active(example.features)
        leaf = self._leaf_for(active)
        cls = 0 if example.label is Label.LEGAL else 1
        w = example.weight
        leaf.class_counts[cls] += w
        for idx in active:
            on = leaf.feat_counts.setdefault(idx, [0.0, 0.0])
            on[cls] += w
        leaf.since_eval += 1
        if leaf.since_eval >= self.grace:
            leaf.since_eval = 0
            self._try_split(leaf)

    def _try_split(self, leaf: _HtNode) -> None:
        total = leaf.class_counts[0] + leaf.class_counts[1]
        if total <= 0 or min(leaf.class_counts) == 0:
            return
        h_parent = _entropy(leaf.class_counts)
        best_gain, best_feat = 0.0, None
        second_gain = 0.0
        for idx in sorted(leaf.feat_counts):
            on = leaf.feat_counts[idx]
            n_on = on[0] + on[1]
            off = [leaf.class_counts[0] - on[0], leaf.class_counts[1] - on[1]]
            n_off = off[0] + off[1]
            gain = h_parent - (n_on / total) * _entropy(on) - (n_off / total) * _entropy(off)
            if gain > best_gain:
                second_gain = best_gain
                best_gain, best_feat = gain, idx
            elif gain > second_gain:
                second_gain = gain
        if best_feat is None:
            return
        eps = hoeffding_bound(1.0, self.delta, int(total))
        if best_gain - second_gain <= eps:
            return
        on = leaf.feat_counts[best_feat]
        off = [leaf.class_counts[0] - on[0], leaf.class_counts[1] - on[1]]
        leaf.split_feature = best_feat
        leaf.children = [_HtNode(list(off)), _HtNode(list(on))]
        leaf.feat_counts = {}
        self.node_count += 2

    def predict(self, features: ContextFeatures) -> float:
        leaf = self._leaf_for(self._active(features))
        total = leaf.class_counts[0] + leaf.class_counts[1]
        if total <= 0:
            return 0.5
        return leaf.class_counts[0] / total

    def _node_doc(self, node: _HtNode) -> dict:
        doc: dict = {"class_counts": list(node.class_counts)}
        if node.children is not None:
            doc["split_feature"] = node.split_feature
            doc["children"] = [self._node_doc(c) for c in node.children]
        else:
            doc["feat_counts"] = [[i, c] for i, c in sorted(node.feat_counts.items())]
            doc["since_eval"] = node.since_eval
        return doc

    def to_doc(self) -> dict:
        return {
            "delta": self.delta,
            "grace": self.grace,
            "node_count": self.node_count,
            "root": self._node_doc(self.root),
        }

    @classmethod
    def _node_from_doc(cls, doc: dict) -> _HtNode:
        node = _HtNode(list(map(float, doc["class_counts"])))
        if "children" in doc:
            node.split_feature = int(doc["split_feature"])
            node.children = [cls._node_from_doc(c) for c in doc["children"]]
        else:
            node.feat_counts = {int(i): list(map(float, c)) for i, c in doc["feat_counts"]}
            node.since_eval = int(doc["since_eval"])
        return node

    @classmethod
    def from_doc(cls, doc: dict) -> "HoeffdingTreeState":
        state = cls(delta=doc["delta"], grace=doc["grace"])
        state.root = cls._node_from_doc(doc["root"])
        state.node_count = int(doc["node_count"])
        return state

    def clone(self) -> "HoeffdingTreeState":
        return HoeffdingTreeState.from_doc(self.to_doc())


_STATE_TYPES = {
    Algo.NB: NaiveBayesState,
    Algo.LR: LogisticState,
    Algo.SVM: PegasosState,
    Algo.HT: HoeffdingTreeState,
}


@dataclass
class PermissionModel:
    """One permission's classifier plus its decision thresholds."""

    permission: PermissionType
    algo: Algo
    state: object = None
    thresholds: tuple[float, float] = DEFAULT_THRESHOLDS
    examples_seen: int = 0

    def __post_init__(self):
        lo, hi = self.thresholds
        if not (0.0 < lo < hi < 1.0):
            raise ValueError("thresholds must satisfy 0 < tau_lo < tau_hi < 1")
        if self.state is None:
            self.state = _STATE_TYPES[self.algo]()

    def update(self, example: TrainExample) -> None:
        if example.permission is not self.permission:
            raise ValueError(
                f"example for {example.permission.value} fed to {self.permission.value} model"
            )
        self.state.update(example)
        self.examples_seen += 1

    def predict(self, features: ContextFeatures) -> float:
        return self.state.predict(features)

    def clone(self) -> "PermissionModel":
        return PermissionModel(
            permission=self.permission,
            algo=self.algo,
            state=self.state.clone(),
            thresholds=self.thresholds,
            examples_seen=self.examples_seen,
        )

    def to_doc(self) -> dict:
        return {
            "format": MODEL_FORMAT,
            "permission": self.permission.value,
            "algo": self.algo.value,
            "thresholds": list(self.thresholds),
            "examples_seen": self.examples_seen,
            "state": self.state.to_doc(),
        }

    @classmethod
    def from_doc(cls, doc: dict) -> "PermissionModel":
        fmt = doc.get("format")
        if fmt != MODEL_FORMAT:
            raise ModelFormatError(
                f"model format {fmt!r} does not match supported {MODEL_FORMAT!r}"
            )
        algo = Algo(doc["algo"])
        return cls(
            permission=PermissionType(doc["permission"]),
            algo=algo,
            state=_STATE_TYPES[algo].from_doc(doc["state"]),
            thresholds=tuple(doc["thresholds"]),
            examples_seen=int(doc["examples_seen"]),
        )


def save_model(model: PermissionModel, path) -> None:
    with open(path, "w", encoding="utf-8") as f:
        json.dump(model.to_doc(), f)
        f.write("\n")


def load_model(path) -> PermissionModel:
    with open(path, encoding="utf-8") as f:
        return PermissionModel.from_doc(json.load(f))


# --------------------------------------------------------------------------
# metrics


@dataclass(frozen=True)
class ClassMetrics:
    precision: float
    recall: float
    f_measure: float
    support: int


@dataclass(frozen=True)
class Metrics:
    per_class: dict[Label, ClassMetrics]
    weighted_precision: float
    weighted_recall: float
    weighted_f: float
    macro_precision: float
    macro_recall: float
    macro_f: float
    total: int


def f_measure(p: float, r: float) -> float:
    return 2.0 * p * r / (p + r) if p + r > 0 else 0.0


def evaluate(predictions: list[Label], labels: list[Label]) -> Metrics:
    """Per-class and aggregate precision/recall/F.

    A class nobody predicted has vacuous precision 1.0 (no false alarms);
    a class with no true members has vacuous recall 1.0.
    """
    if len(predictions) != len(labels):
        raise ValueError(
            f"got {len(predictions)} predictions for {len(labels)} labels"
        )
    if not labels:
        raise ValueError("cannot evaluate an empty run")
    per_class: dict[Label, ClassMetrics] = {}
    for cls in (Label.LEGAL, Label.ILLEGAL):
        tp = sum(1 for p, l in zip(predictions, labels) if p is cls and l is cls)
        fp = sum(1 for p, l in zip(predictions, labels) if p is cls and l is not cls)
        fn = sum(1 for p, l in zip(predictions, labels) if p is not cls and l is cls)
        precision = tp / (tp + fp) if tp + fp > 0 else 1.0
        recall = tp / (tp + fn) if tp + fn > 0 else 1.0
        per_class[cls] = ClassMetrics(precision, recall, f_measure(precision, recall), tp + fn)
    total = len(labels)
    weighted = [0.0, 0.0, 0.0]
    for cls, m in per_class.items():
        share = m.support / total
        weighted[0] += share * m.precision
        weighted[1] += share * m.recall
        weighted[2] += share * m.f_measure
    macro_p = sum(m.precision for m in per_class.values()) / len(per_class)
    macro_r = sum(m.recall for m in per_class.values()) / len(per_class)
    macro_f = sum(m.f_measure for m in per_class.values()) / len(per_class)
    return Metrics(
        per_class=per_class,
        weighted_precision=weighted[0],
        weighted_recall=weighted[1],
        weighted_f=weighted[2],
        macro_precision=macro_p,
        macro_recall=macro_r,
        macro_f=macro_f,
        total=total,
    )
