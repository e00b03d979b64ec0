"""
Square M-QAM constellations with per-axis Gray labels.

IQ samples are carried as complex numbers throughout the package
(real part = I, imaginary part = Q). Symbol index ``k`` is the integer
value of its label, so ``modulate`` is a plain table lookup.

Label layout for 16QAM: the first two bits select the I level, the last
two the Q level, each through the binary-reflected Gray code

    level  -3  -1  +1  +3
    bits   00  01  11  10
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

SUPPORTED_ORDERS = (4, 16)


class UnsupportedModulationError(ValueError):
    pass


class DegenerateTargetError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class ConstellationSpec:
    order: int
    points: np.ndarray  # complex, shape (M,), unit average power
    labels: tuple[str, ...]
    scale: float

    @property
    def bits_per_symbol(self) -> int:
        return int(np.log2(self.order))

    @property
    def side(self) -> int:
        """Number of amplitude levels per axis."""
        return int(round(np.sqrt(self.order)))

    @property
    def levels(self) -> np.ndarray:
        """Scaled amplitude levels along one axis, ascending."""
        return (2 * np.arange(self.side) - self.side + 1) * self.scale

    def index_of(self, label: str) -> int:
        try:
            return self.labels.index(label)
        except ValueError:
            raise ValueError(f"label {label!r} is not in the {self.order}-QAM alphabet") from None

    def grid_position(self, symbol: int) -> tuple[int, int]:
        """(I level index, Q level index) of a symbol, both ascending from 0."""
        half = self.bits_per_symbol // 2
        gi, gq = symbol >> half, symbol & ((1 << half) - 1)
        return _gray_inverse(gi), _gray_inverse(gq)

    def decision_cell(self, symbol: int) -> tuple[float, float, float, float]:
        """Minimum-distance decision cell as (i_lo, i_hi, q_lo, q_hi).

        For a square grid the Voronoi cells are axis-aligned rectangles;
        outer cells are unbounded (+/-inf).
        """
        li, lq = self.grid_position(symbol)
        i_lo, i_hi = self._axis_interval(li)
        q_lo, q_hi = self._axis_interval(lq)
        return i_lo, i_hi, q_lo, q_hi

    def _axis_interval(self, level: int) -> tuple[float, float]:
        lv = self.levels
        lo = -np.inf if level == 0 else 0.5 * (lv[level - 1] + lv[level])
        hi = np.inf if level == self.side - 1 else 0.5 * (lv[level] + lv[level + 1])
        return float(lo), float(hi)


def _gray(n: int) -> int:
    return n ^ (n >> 1)


def _gray_inverse(g: int) -> int:
    n = 0
    while g:
        n ^= g
        g >>= 1
    return n


@lru_cache(maxsize=None)
def build_qam(order: int) -> ConstellationSpec:
    """Unit-average-power square QAM with per-axis Gray labels (M = 4 or 16)."""
    if order not in SUPPORTED_ORDERS:
        raise UnsupportedModulationError(
            f"unsupported modulation order {order}; expected one of {SUPPORTED_ORDERS}")
    side = int(round(np.sqrt(order)))
    half = int(np.log2(side))
    amp = 2 * np.arange(side) - side + 1  # -3, -1, 1, 3
    raw_power = 2 * np.mean(amp.astype(float) ** 2)
    scale = 1.0 / np.sqrt(raw_power)

    nbits = 2 * half
    points = np.empty(order, dtype=complex)
    labels = []
    for k in range(order):
        li = _gray_inverse(k >> half)
        lq = _gray_inverse(k & (side - 1))
        points[k] = complex(amp[li] * scale, amp[lq] * scale)
        labels.append(format(k, f"0{nbits}b"))
    points.setflags(write=False)
    return ConstellationSpec(order=order, points=points, labels=tuple(labels), scale=float(scale))


def _bits_array(bits) -> np.ndarray:
    if isinstance(bits, str):
        return np.frombuffer(bits.encode("ascii"), dtype=np.uint8) - ord("0")
    return np.asarray(bits, dtype=np.uint8).ravel()


def bits_to_symbols(bits, spec: ConstellationSpec) -> np.ndarray:
    """Group bits MSB-first into symbol indices."""
    b = _bits_array(bits)
    k = spec.bits_per_symbol
    if b.size % k:
        raise ValueError(f"bit length {b.size} is not a multiple of {k} bits per symbol")
    if b.size and b.max() > 1:
        raise ValueError("bits must be 0 or 1")
    weights = 1 << np.arange(k - 1, -1, -1)
    return b.reshape(-1, k).astype(np.int64) @ weights


def symbols_to_bits(symbols, spec: ConstellationSpec) -> np.ndarray:
    s = np.asarray(symbols, dtype=np.int64).ravel()
    k = spec.bits_per_symbol
    shifts = np.arange(k - 1, -1, -1)
    return ((s[:, None] >> shifts) & 1).astype(np.uint8).ravel()


def modulate(bits, spec: ConstellationSpec) -> np.ndarray:
    """Map a bit sequence (str of '0'/'1' or array) to complex IQ samples."""
    return spec.points[bits_to_symbols(bits, spec)]


def nearest_point(x, spec: ConstellationSpec):
    """Index of the closest constellation point; ties go to the lowest index.

    Accepts a complex scalar or array and returns an int or int array to match.
    """
    xa = np.asarray(x, dtype=complex)
    d2 = np.abs(xa[..., None] - spec.points) ** 2
    idx = np.argmin(d2, axis=-1)
    if idx.ndim == 0:
        return int(idx)
    return idx


def min_distance(spec: ConstellationSpec) -> float:
    p = spec.points
    d = np.abs(p[:, None] - p[None, :])
    d[np.diag_indices_from(d)] = np.inf
    return float(d.min())


def boundary_vectors(symbol: int, spec: ConstellationSpec, rtol: float = 1e-9) -> list[complex]:
    """All minimal-norm displacements that take ``symbol`` onto a decision boundary.

    Each is half the vector to a nearest neighbour. Ordered by neighbour index.
    """
    p = spec.points
    d = np.abs(p - p[symbol])
    d[symbol] = np.inf
    dmin = d.min()
    nbrs = np.flatnonzero(d <= dmin * (1 + rtol))
    return [complex(0.5 * (p[j] - p[symbol])) for j in nbrs]


def nearest_boundary_vector(symbol: int, spec: ConstellationSpec) -> complex:
    """Perpendicular displacement to the nearest decision boundary of ``symbol``.

    The cell is an intersection of half-planes, so the closest exit is the
    bisector with the nearest neighbour; equidistant neighbours resolve to the
    lowest index.
    """
    if not 0 <= symbol < spec.order:
        raise IndexError(f"symbol {symbol} out of range for {spec.order}-QAM")
    return boundary_vectors(symbol, spec)[0]


def targeted_vector(src: int, dst: int, spec: ConstellationSpec) -> complex:
    """Shortest displacement from point ``src`` onto the decision cell of ``dst``."""
    if src == dst:
        raise DegenerateTargetError(f"source and target symbol are both {src}")
    x = spec.points[src]
    i_lo, i_hi, q_lo, q_hi = spec.decision_cell(dst)
    proj = complex(np.clip(x.real, i_lo, i_hi), np.clip(x.imag, q_lo, q_hi))
    return proj - x
