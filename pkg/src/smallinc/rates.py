"""Log-log rate fitting for convergence studies."""
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class LogLogFit:
    slope: float
    intercept: float
    residual: float

    @property
    def constant(self):
        """``C`` in ``y ~ C x**slope``."""
        return float(np.exp(self.intercept))


def fit_loglog(x, y):
    """Least-squares line through ``(log x, log y)``."""
    lx = np.log(np.asarray(x, dtype=float))
    ly = np.log(np.asarray(y, dtype=float))
    (slope, intercept), res, *_ = np.polyfit(lx, ly, 1, full=True)
    resid = float(np.sqrt(res[0] / len(lx))) if len(res) else 0.0
    return LogLogFit(float(slope), float(intercept), resid)


def check_geometric(values, rtol=1e-6, minimum=3):
    """Raise ValueError unless ``values`` has ``minimum`` geometrically spaced entries."""
    v = np.asarray(values, dtype=float)
    if len(v) < minimum:
        raise ValueError(f"need >={minimum} scales, got {len(v)}")
    if np.any(v <= 0):
        raise ValueError("scales must be positive")
    ratios = v[1:] / v[:-1]
    if not np.allclose(ratios, ratios[0], rtol=rtol):
        raise ValueError("scales must be geometrically spaced")
