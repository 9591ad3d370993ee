"""Rectangular (t, x)-grids for curvature fields and integrals."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = ["GridSpec"]


@dataclass(frozen=True)
class GridSpec:
    """Equidistant discretization of [t0, t1] x prod_j [lo_j, hi_j].

    Node counts of 1 are allowed (the lower endpoint is used); ranges must
    be nondegenerate otherwise.
    """

    t_range: tuple[float, float]
    n_t: int
    x_ranges: tuple[tuple[float, float], ...]
    n_x: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "t_range", tuple(float(v) for v in self.t_range))
        object.__setattr__(
            self, "x_ranges", tuple(tuple(float(v) for v in r) for r in self.x_ranges)
        )
        object.__setattr__(self, "n_x", tuple(int(n) for n in self.n_x))
        if len(self.x_ranges) != len(self.n_x):
            raise ValueError("x_ranges and n_x lengths differ")
        for (lo, hi), n in zip((self.t_range,) + self.x_ranges, (self.n_t,) + self.n_x):
            if n < 1:
                raise ValueError("node counts must be >= 1")
            if n > 1 and not hi > lo:
                raise ValueError(f"range ({lo}, {hi}) must be increasing for {n} nodes")

    @property
    def k(self) -> int:
        return len(self.x_ranges)

    @property
    def node_count(self) -> int:
        return self.n_t * int(np.prod(self.n_x))

    def axes(self) -> list[np.ndarray]:
        out = []
        for (lo, hi), n in zip((self.t_range,) + self.x_ranges, (self.n_t,) + self.n_x):
            out.append(np.array([lo]) if n == 1 else np.linspace(lo, hi, n))
        return out

    def nodes(self) -> np.ndarray:
        """All grid nodes as rows (t, x_1..x_k), t-major order."""
        mesh = np.meshgrid(*self.axes(), indexing="ij")
        return np.stack([m.ravel() for m in mesh], axis=1)

    @classmethod
    def parse(cls, text: str, k: int | None = None) -> "GridSpec":
        """Parse ``"t=0:2:10,x1=0:3:20"`` (axis=lo:hi:count per axis)."""
        parts = [p.strip() for p in text.split(",") if p.strip()]
        seen = {}
        for part in parts:
            if "=" not in part:
                raise ValueError(f"bad grid axis {part!r}; expected name=lo:hi:count")
            name, rng = part.split("=", 1)
            pieces = rng.split(":")
            if len(pieces) != 3:
                raise ValueError(f"bad grid range {rng!r}; expected lo:hi:count")
            lo, hi, n = float(pieces[0]), float(pieces[1]), int(pieces[2])
            name = name.strip()
            if name in seen:
                raise ValueError(f"duplicate grid axis {name!r}")
            seen[name] = ((lo, hi), n)
        if "t" not in seen:
            raise ValueError("grid must include a t axis")
        x_names = sorted((n for n in seen if n != "t"), key=lambda s: s)
        expected = [f"x{i + 1}" for i in range(len(x_names))]
        if x_names != expected:
            raise ValueError(f"grid slow axes must be named x1..xk, got {x_names}")
        if k is not None and len(x_names) != k:
            raise ValueError(f"grid has {len(x_names)} slow axes, model needs {k}")
        t_rng, n_t = seen["t"]
        return cls(
            t_range=t_rng,
            n_t=n_t,
            x_ranges=tuple(seen[n][0] for n in expected),
            n_x=tuple(seen[n][1] for n in expected),
        )

    def spec_string(self) -> str:
        parts = [f"t={self.t_range[0]:g}:{self.t_range[1]:g}:{self.n_t}"]
        for i, ((lo, hi), n) in enumerate(zip(self.x_ranges, self.n_x)):
            parts.append(f"x{i + 1}={lo:g}:{hi:g}:{n}")
        return ",".join(parts)
