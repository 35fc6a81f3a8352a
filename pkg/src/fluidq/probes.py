"""Fixed probe points, one or more per regime, for convergence studies in c."""

from __future__ import annotations

from dataclasses import dataclass

from .model import ModelParams, y0_curve


@dataclass(frozen=True)
class Probe:
    name: str
    regime: str
    method: str
    kind: str  # "yz": a = y, b = z; "corner": a = x, b = l; "x0": a = u, b = z; "z0": a = y, b = k
    a: float
    b: float

    def point(self, m: ModelParams) -> tuple[float, int]:
        """(x, k) for this probe at the model's c."""
        if self.kind == "corner":
            return self.a, int(self.b) + m.floor_c
        if self.kind == "z0":
            return self.a * m.c * m.c, int(self.b)
        k = int(round(self.b * m.c))
        if self.kind == "x0":
            return self.a * m.c, k
        if self.kind == "y0":
            return y0_curve(m, k * m.eps) * m.c * m.c, k
        return self.a * m.c * m.c, k


PROBES = (
    Probe("interior-below", "interior", "ray", "yz", 0.5, 0.5),
    Probe("interior-above", "interior", "ray", "yz", 0.6, 1.5),
    Probe("shadow", "shadow", "ray", "yz", 0.1, 1.5),
    Probe("corner-l0", "corner", "corner", "corner", 2.0, 0),
    Probe("corner-l2", "corner", "corner", "corner", 1.0, 2),
    Probe("transition-y0", "transition", "transition", "y0", 0.0, 1.5),
    Probe("z0-layer", "z0", "boundary-z0", "z0", 0.5, 2),
    Probe("x0-layer", "x0", "boundary-x0", "x0", 0.5, 1.5),
)
