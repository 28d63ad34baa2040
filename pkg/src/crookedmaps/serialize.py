"""JSON interchange for maps, models and reports.

Every scalar is a rational string.  Files are written with sorted keys and a
fixed indent so identical inputs give byte-identical output.
"""
import json

from .continuum import FiberedContinuum, interval_model
from .crooking import g0_params, lift_g
from .errors import DomainError
from .fibmap import FiberRoutedMap, from_plmap
from .knaster import SnModel, parse_model_ref
from .plmap import PLMap
from .scalar import fmt


def dumps(obj):
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def write_json(path, obj):
    with open(path, "w") as fh:
        fh.write(dumps(obj))


def read_json(path):
    with open(path) as fh:
        return json.load(fh)


def resolve_model(ref):
    """A model from ``"interval"``, ``"sn:<n>:depth=<d>"`` or an inline dict."""
    if ref is None or ref == "interval":
        return interval_model()
    if isinstance(ref, str):
        return parse_model_ref(ref).model
    if isinstance(ref, dict):
        if "sn" in ref:
            return SnModel.from_json(ref).model
        return FiberedContinuum.from_json(ref)
    raise DomainError(f"unrecognized model reference {ref!r}")


def map_to_json(f, model_ref=None, meta=None):
    if isinstance(f, PLMap):
        out = f.to_json()
    else:
        out = f.to_json()
        out["model"] = model_ref if model_ref is not None else f.model.to_json()
    if meta:
        out["meta"] = meta
    return out


def generator_to_json(params, model_ref=None):
    """Symbolic form of a lifted generator: its parameters only."""
    out = {
        "generator": {
            "eps": fmt(params.eps),
            "gamma": fmt(params.gamma),
            "q": params.q,
            "surrogate": params.surrogate,
        }
    }
    out["model"] = model_ref or "interval"
    return out


def map_from_json(data):
    """PLMap for ``{"nodes", "values"}``, FiberRoutedMap for ``{"model", "pieces"}``,
    a symbolic lift for ``{"generator"}``."""
    if not isinstance(data, dict):
        raise DomainError("map file must hold a JSON object")
    if "generator" in data:
        gen = data["generator"]
        params = g0_params(gen["eps"], gen["gamma"], gen["q"] if gen.get("surrogate") else None)
        if params.q != gen["q"]:
            raise DomainError("generator q does not match its eps and gamma")
        return lift_g(resolve_model(data.get("model")), params)
    if "nodes" in data:
        return PLMap.from_json(data)
    if "pieces" in data:
        model = resolve_model(data.get("model"))
        return FiberRoutedMap.from_json(model, data)
    raise DomainError("map file has neither 'nodes' nor 'pieces'")


def as_fibered(f):
    """Fibered view of a map; a PLMap is read on the interval model."""
    if isinstance(f, PLMap):
        return from_plmap(interval_model(), f)
    return f
