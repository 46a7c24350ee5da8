from scenebm.models.state import ModelDims, ModelState, UnitRef
from scenebm.models.cosmo import CosmoModel
from scenebm.models.gbm import GbmModel
from scenebm.models.rbm import RbmModel
from scenebm.models.io import load_model, save_model

MODEL_KINDS = ("cosmo", "gbm", "rbm")


def new_model(kind: str, dims: ModelDims, sigma: float = 0.0, rng=None):
    """Create a model of the given kind; zero weights unless sigma > 0."""
    cls = {"cosmo": CosmoModel, "gbm": GbmModel, "rbm": RbmModel}.get(kind)
    if cls is None:
        raise ValueError(f"unknown model kind {kind!r}; choose from {MODEL_KINDS}")
    if sigma > 0.0:
        return cls.random(dims, sigma, rng)
    return cls.zeros(dims)


__all__ = [
    "ModelDims",
    "ModelState",
    "UnitRef",
    "CosmoModel",
    "GbmModel",
    "RbmModel",
    "load_model",
    "save_model",
    "new_model",
    "MODEL_KINDS",
]
