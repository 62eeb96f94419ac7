"""Symmetric piecewise-constant barriers on a finite support.

Units are hbar = m = 1 throughout the package, so E = k^2/2 and a free
particle of wavenumber k moves at speed k. Outside [a, b] the potential
is identically zero. Interior segment boundaries follow a right-open
convention: evaluate() returns the height of the segment to the right,
so repeated runs are bit-reproducible.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import AsymmetricPotential, NonPositiveWidth

SYMMETRY_TOL = 1e-12
WIDTH_SUM_TOL = 1e-12


@dataclass(frozen=True)
class PotentialSpec:
    """Validated barrier: ordered (width, height) segments starting at `a`.

    Immutable and hashable; safe to share read-only across workers.
    """

    a: float
    segments: tuple[tuple[float, float], ...]
    b: float = field(init=False)
    x_c: float = field(init=False)
    symmetric: bool = field(init=False)

    def __post_init__(self):
        if not self.segments:
            raise NonPositiveWidth("potential needs at least one segment")
        widths = [w for w, _ in self.segments]
        if any(w <= 0 for w in widths):
            raise NonPositiveWidth(f"segment widths must be positive, got {widths}")
        b = self.a + sum(widths)
        object.__setattr__(self, "b", b)
        object.__setattr__(self, "x_c", 0.5 * (self.a + b))
        heights = [h for _, h in self.segments]
        sym = all(
            abs(w1 - w2) <= SYMMETRY_TOL and abs(h1 - h2) <= SYMMETRY_TOL
            for (w1, h1), (w2, h2) in zip(self.segments, self.segments[::-1])
        )
        object.__setattr__(self, "symmetric", sym)

    @property
    def width(self) -> float:
        return self.b - self.a

    def edges(self) -> np.ndarray:
        """Interface positions x_0 = a, ..., x_n = b (n = len(segments))."""
        return self.a + np.concatenate(([0.0], np.cumsum([w for w, _ in self.segments])))

    def heights(self) -> np.ndarray:
        return np.array([h for _, h in self.segments])

    def require_symmetric(self):
        if not self.symmetric:
            raise AsymmetricPotential(
                "height sequence is not mirror-symmetric about the midpoint"
            )


def make_rectangular(v0: float, length: float, a: float) -> PotentialSpec:
    """Single segment of height v0 on [a, a+length]."""
    if length <= 0:
        raise NonPositiveWidth(f"barrier length must be positive, got {length}")
    return PotentialSpec(a=float(a), segments=((float(length), float(v0)),))


def make_piecewise(a: float, segments) -> PotentialSpec:
    """Validated multi-segment barrier; refuses asymmetric height sequences."""
    spec = PotentialSpec(a=float(a), segments=tuple((float(w), float(h)) for w, h in segments))
    spec.require_symmetric()
    return spec


def discretize(a: float, b: float, profile, n_segments: int) -> PotentialSpec:
    """Uniform staircase approximation of a smooth profile on [a, b].

    Heights are midpoint samples; accuracy is the caller's responsibility.
    """
    if n_segments < 1:
        raise NonPositiveWidth("need at least one segment")
    w = (b - a) / n_segments
    mids = a + w * (np.arange(n_segments) + 0.5)
    return PotentialSpec(a=float(a), segments=tuple((w, float(profile(x))) for x in mids))


def evaluate(spec: PotentialSpec, x) -> np.ndarray | float:
    """V(x); zero outside [a, b], right-open at interior boundaries."""
    x_arr = np.asarray(x, dtype=float)
    out = np.zeros_like(x_arr)
    edges = spec.edges()
    inside = (x_arr >= spec.a) & (x_arr < spec.b)
    idx = np.clip(np.searchsorted(edges, x_arr[inside], side="right") - 1, 0, len(spec.segments) - 1)
    out[inside] = spec.heights()[idx]
    if np.isscalar(x):
        return float(out)
    return out
