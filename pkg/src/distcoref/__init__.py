"""Distantly labeled cross-document coreference.

Pipeline pieces: within-document mention building (:mod:`.withindoc`),
knowledge-base candidate lookup (:mod:`.kb`), multinomial entity selection
(:mod:`.ranker`), the factor-graph model (:mod:`.model`), canopy MH inference
(:mod:`.sampler`), SampleRank training (:mod:`.learner`) and pairwise
evaluation (:mod:`.metrics`).
"""

__version__ = "0.1.0"
