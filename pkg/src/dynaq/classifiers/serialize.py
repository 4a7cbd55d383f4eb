"""Line-oriented text dumps of trained classifiers, for debugging.

Format (version 1): a header line, one ``meta`` line per scalar field, then
payload lines. Every line is whitespace-separated tokens, first token is the
record kind, so the file is greppable and diff-friendly.
"""
from __future__ import annotations

import numpy as np

from .gbm import ConstantModel, GbmEnsemble, LinearModel, TrainedClassifier
from .trees import Tree

FORMAT_HEADER = "dynaq-classifier v1"


def _r(v) -> str:
    """repr of a builtin float: round-trips exactly, parseable by float()."""
    return repr(float(v))


def dump_model(clf: TrainedClassifier, path: str) -> None:
    lines = [FORMAT_HEADER]
    lines.append(f"meta kind {clf.kind}")
    lines.append(f"meta theta {_r(clf.theta)}")
    lines.append(f"meta n_features {clf.n_features}")
    m = clf.model
    if isinstance(m, GbmEnsemble):
        lines.append(f"meta base_score {_r(m.base_score)}")
        lines.append(f"meta ntrees {len(m.trees)}")
        for ti, (tree, rate) in enumerate(zip(m.trees, m.rates)):
            lines.append(f"tree {ti} rate {_r(rate)} nodes {len(tree.feature)} depth {tree.depth}")
            for i in range(len(tree.feature)):
                lines.append(
                    f"node {i} {tree.feature[i]} {_r(tree.threshold[i])} "
                    f"{tree.left[i]} {tree.right[i]} {_r(tree.value[i])}"
                )
    elif isinstance(m, LinearModel):
        lines.append("weights " + " ".join(_r(v) for v in m.weights))
        lines.append(f"bias {_r(m.bias)}")
        lines.append("mean " + " ".join(_r(v) for v in m.mean))
        lines.append("scale " + " ".join(_r(v) for v in m.scale))
    elif isinstance(m, ConstantModel):
        lines.append(f"prior {_r(m.prior)}")
    else:
        raise TypeError(f"cannot dump model payload of type {type(m).__name__}")
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def load_model(path: str) -> TrainedClassifier:
    with open(path) as fh:
        lines = [ln.rstrip("\n") for ln in fh if ln.strip()]
    if not lines or lines[0] != FORMAT_HEADER:
        raise ValueError(f"not a classifier dump: {path}")
    meta: dict[str, str] = {}
    body = []
    for ln in lines[1:]:
        if ln.startswith("meta "):
            _, key, val = ln.split(" ", 2)
            meta[key] = val
        else:
            body.append(ln)
    kind = meta["kind"]
    theta = float(meta["theta"])
    n_features = int(meta["n_features"])

    if kind == "gbm":
        trees: list[Tree] = []
        rates: list[float] = []
        i = 0
        while i < len(body):
            head = body[i].split()
            assert head[0] == "tree", f"unexpected line: {body[i]}"
            rate = float(head[3])
            n_nodes = int(head[5])
            depth = int(head[7])
            feat = np.empty(n_nodes, dtype=np.int32)
            thr = np.empty(n_nodes, dtype=np.float64)
            left = np.empty(n_nodes, dtype=np.int32)
            right = np.empty(n_nodes, dtype=np.int32)
            val = np.empty(n_nodes, dtype=np.float64)
            for j in range(n_nodes):
                tok = body[i + 1 + j].split()
                feat[j] = int(tok[2])
                thr[j] = float(tok[3])
                left[j] = int(tok[4])
                right[j] = int(tok[5])
                val[j] = float(tok[6])
            trees.append(
                Tree(feature=feat, threshold=thr, left=left, right=right, value=val, depth=depth)
            )
            rates.append(rate)
            i += 1 + n_nodes
        model = GbmEnsemble(
            base_score=float(meta["base_score"]),
            trees=trees,
            rates=rates,
            n_features=n_features,
        )
    elif kind == "logreg":
        fields = {}
        for ln in body:
            tok = ln.split()
            fields[tok[0]] = np.array([float(v) for v in tok[1:]], dtype=np.float64)
        model = LinearModel(
            weights=fields["weights"],
            bias=float(fields["bias"][0]),
            mean=fields["mean"],
            scale=fields["scale"],
            n_features=n_features,
        )
    elif kind == "constant":
        prior = float(body[0].split()[1])
        model = ConstantModel(prior=prior, n_features=n_features)
    else:
        raise ValueError(f"unknown classifier kind in dump: {kind}")
    return TrainedClassifier(model=model, theta=theta, kind=kind, n_features=n_features)
