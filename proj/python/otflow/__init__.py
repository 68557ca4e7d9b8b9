"""Finite metric measure spaces, optimal transport and gradient flows."""

import json as _json

from . import _core
from ._core import (
    OtflowError,
    Space,
    c_transform,
    cheeger_energy,
    entropy,
    fisher_information,
    geodesic_plan,
    heat_flow,
    hopf_lax,
    jko_flow,
    kantorovich_potential,
    laplacian,
    preset_density,
    preset_field,
    prox,
    run_pipeline,
    slope,
    w2,
)

__version__ = _core.__version__


def _report(fn):
    def wrapped(*args, **kwargs):
        return _json.loads(fn(*args, **kwargs))

    wrapped.__name__ = fn.__name__
    wrapped.__doc__ = fn.__doc__
    return wrapped


hj_residuals = _report(_core.hj_residuals)
ede_residual = _report(_core.ede_residual)
kuwada_check = _report(_core.kuwada_check)
brenier_check = _report(_core.brenier_check)
quadraticity_check = _report(_core.quadraticity_check)
displacement_convexity_check = _report(_core.displacement_convexity_check)
ede_nonuniqueness_demo = _report(_core.ede_nonuniqueness_demo)
