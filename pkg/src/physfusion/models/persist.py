"""Versioned JSON artifacts for fitted models.

Python's JSON float formatting is the shortest repr that round-trips, so a
save/load cycle reproduces every coefficient bit for bit.
"""

import json

import numpy as np

from ..errors import ModelFormatError

FORMAT = "physfusion.model"
VERSION = 1


def _arr(a):
    a = np.asarray(a)
    return {"dtype": a.dtype.str, "shape": list(a.shape), "data": a.ravel().tolist()}


def _unarr(d):
    return np.array(d["data"], dtype=np.dtype(d["dtype"])).reshape(d["shape"])


def _encode(model):
    from .gbt import GBTModel
    from .gnb import GNBModel
    from .svm import OVOSVMModel, SVMModel

    if isinstance(model, GNBModel):
        return {"type": "gnb", "classes": _arr(model.classes), "log_prior": _arr(model.log_prior),
                "mean": _arr(model.mean), "var": _arr(model.var)}
    if isinstance(model, SVMModel):
        return {"type": "svm", "support_vectors": _arr(model.support_vectors),
                "dual_coef": _arr(model.dual_coef), "b": model.b, "kernel": model.kernel,
                "gamma": model.gamma, "C": model.C}
    if isinstance(model, OVOSVMModel):
        return {"type": "ovo_svm", "classes": _arr(model.classes),
                "pairs": [[a, b, _encode(m)] for a, b, m in model.pairs]}
    if isinstance(model, GBTModel):
        return {"type": "gbt", "classes": _arr(model.classes), "n_rounds": model.n_rounds,
                "learning_rate": model.learning_rate, "max_depth": model.max_depth,
                "reg_lambda": model.reg_lambda, "min_child_weight": model.min_child_weight,
                "trees": [[{k: _arr(getattr(t, k)) for k in
                            ("feature", "threshold", "left", "right", "value")}
                           for t in trees] for trees in model.trees]}
    raise ModelFormatError(f"cannot serialise {type(model).__name__}")


def _decode(d):
    from .gbt import GBTModel, Tree
    from .gnb import GNBModel
    from .svm import OVOSVMModel, SVMModel

    kind = d.get("type")
    if kind == "gnb":
        return GNBModel(_unarr(d["classes"]), _unarr(d["log_prior"]), _unarr(d["mean"]),
                        _unarr(d["var"]))
    if kind == "svm":
        return SVMModel(_unarr(d["support_vectors"]), _unarr(d["dual_coef"]), d["b"],
                        d["kernel"], d["gamma"], d["C"])
    if kind == "ovo_svm":
        return OVOSVMModel(_unarr(d["classes"]),
                           tuple((a, b, _decode(m)) for a, b, m in d["pairs"]))
    if kind == "gbt":
        trees = tuple(tuple(Tree(*(_unarr(t[k]) for k in
                                   ("feature", "threshold", "left", "right", "value")))
                            for t in rnd) for rnd in d["trees"])
        return GBTModel(_unarr(d["classes"]), trees, d["n_rounds"], d["learning_rate"],
                        d["max_depth"], d["reg_lambda"], d["min_child_weight"])
    raise ModelFormatError(f"unknown model type {kind!r}")


def save_model(fm):
    """Serialise a :class:`FittedModel` to JSON text."""
    std = fm.standardizer
    payload = {
        "format": FORMAT,
        "version": VERSION,
        "kind": fm.kind,
        "params": fm.params,
        "classes": _arr(fm.classes),
        "standardizer": None if std is None else {"mean": _arr(std.mean), "std": _arr(std.std)},
        "model": _encode(fm.model),
    }
    return json.dumps(payload, sort_keys=True)


def load_model(text):
    from . import FittedModel
    from .standardize import Standardizer

    try:
        d = json.loads(text)
    except json.JSONDecodeError as err:
        raise ModelFormatError(f"not a model artifact: {err}") from None
    if d.get("format") != FORMAT:
        raise ModelFormatError(f"unexpected format {d.get('format')!r}")
    if d.get("version") != VERSION:
        raise ModelFormatError(f"unsupported model version {d.get('version')!r}")
    std = d["standardizer"]
    std = None if std is None else Standardizer(_unarr(std["mean"]), _unarr(std["std"]))
    return FittedModel(d["kind"], d["params"], _unarr(d["classes"]), _decode(d["model"]), std)
