"""Bidirectional translation between herbal prescriptions and patient phenotypes.

A prescription (weighted granule components plus serving schedule and
duration) is encoded as an 840-element vector and classified back into
patient phenotype heads by a residual convolutional multitask classifier.
In the opposite direction an attention-based encoder-decoder translates a
7-token phenotype sentence into a prescription token sentence whose dose
profile is carried by a single power-law decay token.

Set PHENORX_THREADS to pin the BLAS/OpenMP thread count; it must take
effect before numpy first loads, which importing this package guarantees
for every entry point.
"""

import os as _os

_threads = _os.environ.get("PHENORX_THREADS")
if _threads:
    for _var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS",
                 "MKL_NUM_THREADS", "NUMEXPR_NUM_THREADS"):
        _os.environ.setdefault(_var, _threads)

__version__ = "0.1.0"
