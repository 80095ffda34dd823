"""Central finite-difference validation of the analytic loss gradients.

The check perturbs entries of the flat trainable vector by +-step and compares
the symmetric difference quotient against the backpropagated gradient. Two
numerical caveats are handled explicitly:

- Rectifier kinks: a perturbation that flips a rectifier input across zero
  makes the central difference measure a chord over two linear pieces, which
  legitimately disagrees with the one-sided analytic slope. kink_margin()
  reports the smallest rectifier |input| of a forward pass so callers can skip
  probe points that sit too close to a kink for the chosen step.
- Near-zero gradients: the difference quotient of a flat direction is pure
  float64 roundoff, so the relative error uses a small absolute floor in the
  denominator to keep such entries comparable.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable

import numpy as np

from .autograd import relu_margin_recording
from .model import InstanceFeatures, loss_from_features
from .params import ModelParameters

DEFAULT_STEP = 1e-5
DEFAULT_REL_FLOOR = 1e-6


@dataclass(frozen=True)
class GradCheckReport:
    max_rel_err: float
    worst_index: int
    n_checked: int
    kink_margin: float
    loss: float


def kink_margin(params: ModelParameters, feats: InstanceFeatures) -> float:
    """Smallest |rectifier input| seen while evaluating the loss."""
    sink: list[float] = []
    with relu_margin_recording(sink):
        loss_from_features(params, params.config, feats)
    return min(sink) if sink else math.inf


def check_gradients(
    params: ModelParameters,
    feats: InstanceFeatures,
    step: float = DEFAULT_STEP,
    rel_floor: float = DEFAULT_REL_FLOOR,
    indices: Iterable[int] | None = None,
) -> GradCheckReport:
    """Compare analytic gradients against central differences.

    Checks every trainable parameter by default; pass indices to spot-check.
    The parameter vector is restored afterwards.
    """
    config = params.config
    loss, grads = loss_from_features(params, config, feats)
    margin = kink_margin(params, feats)
    flat = params.flat()
    index_list = np.arange(flat.size) if indices is None else np.asarray(list(indices), dtype=int)
    worst = 0.0
    worst_index = -1
    probe = flat.copy()
    try:
        for i in index_list:
            probe[i] = flat[i] + step
            params.set_flat(probe)
            up, _ = loss_from_features(params, config, feats)
            probe[i] = flat[i] - step
            params.set_flat(probe)
            down, _ = loss_from_features(params, config, feats)
            probe[i] = flat[i]
            fd = (up - down) / (2.0 * step)
            rel = abs(fd - grads[i]) / max(abs(fd), abs(grads[i]), rel_floor)
            if rel > worst:
                worst = rel
                worst_index = int(i)
    finally:
        params.set_flat(flat)
    return GradCheckReport(worst, worst_index, int(index_list.size), margin, loss)
