"""Generative scene modeling with Boltzmann machines.

Scenes are sets of objects, directed spatial relations between object
pairs, and affordances (action possibilities) between object pairs.
Three model families share one state/sampling interface:

* ``cosmo`` -- hidden units fully connected to object units, plus tri-way
  edges that tie each relation/affordance node to its two object
  endpoints, with per-type weights shared toward the hidden layer.
* ``gbm``   -- two-way edges among all visible nodes plus visible-hidden.
* ``rbm``   -- visible-hidden edges only.

The package also ships the training loop, eight scene-reasoning tasks,
evaluation metrics with Monte Carlo chance levels, and an exact
enumeration oracle for verifying the stochastic machinery on tiny models.
"""

__version__ = "0.1.0"

from scenebm.vocab import RelationType, VocabularySet, canonicalize_relation
from scenebm.scenes import SceneDescription, decode_scene, encode_scene

__all__ = [
    "RelationType",
    "VocabularySet",
    "canonicalize_relation",
    "SceneDescription",
    "encode_scene",
    "decode_scene",
    "__version__",
]
