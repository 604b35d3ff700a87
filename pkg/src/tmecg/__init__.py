"""Interpretable Tsetlin-machine classification of ECG beats.

Pipeline: wavelet denoising (``wavelet``), beat segmentation and Boolean
rasterization (``segmentation``), data ingestion and synthetic generation
(``dataset``), the multi-class clause learner itself (``tm``), evaluation
and cross-validation (``metrics``), and clause-level visual explanations
(``interpretability``).  ``tmecg.cli`` wires everything into a command
line tool.
"""

from . import (beatfile, cli, dataset, interpretability, metrics,
               segmentation, tm, wavelet)

__all__ = ["beatfile", "cli", "dataset", "interpretability", "metrics",
           "segmentation", "tm", "wavelet"]

__version__ = "0.1.0"
