"""Shared numeric primitives: attribution vectors, significant-figure rounding,
deterministic substreamed RNG, and mean / 95%-CI summaries.

Everything here is immutable after construction and safe to share across
workers.
"""
from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "Attribution",
    "SummaryStat",
    "RngStream",
    "round_sig",
    "round_sig_vec",
    "dot_with_intercept",
    "mean_ci95",
]


def round_sig(value: float, figures: int = 1) -> float:
    """Round `value` to `figures` significant figures, half away from zero.

    round_sig(0, k) == 0 for any k; the sign and nonzero-ness of the input
    are always preserved.
    """
    if figures < 1:
        raise ValueError(f"figures must be >= 1, got {figures}")
    v = float(value)
    if not math.isfinite(v):
        raise ValueError(f"cannot round non-finite value {value!r}")
    if v == 0.0:
        return 0.0
    exponent = math.floor(math.log10(abs(v)))
    if -250 <= exponent <= 250:
        shift = figures - 1 - exponent
        scaled = abs(v) * 10.0 ** shift
        rounded = math.floor(scaled + 0.5)
        # floor(+0.5) can bump the mantissa to the next decade (0.96 -> 10);
        # integer powers keep the rescaling exactly rounded (6/10 == 0.6)
        if shift >= 0:
            return math.copysign(rounded / 10 ** shift, v)
        return math.copysign(rounded * 10 ** (-shift), v)
    # extreme magnitudes: power-of-ten scaling would over/underflow a float,
    # so round on the shortest decimal representation instead
    import decimal
    d = decimal.Decimal(repr(abs(v)))
    quantum = decimal.Decimal(1).scaleb(d.adjusted() - figures + 1)
    r = d.quantize(quantum, rounding=decimal.ROUND_HALF_UP)
    return math.copysign(float(r), v)


def round_sig_vec(values, figures: int = 1) -> np.ndarray:
    """Elementwise round_sig over an array-like; always returns float64."""
    arr = np.asarray(values, dtype=float)
    out = np.empty_like(arr)
    flat_in, flat_out = arr.ravel(), out.ravel()
    for i, v in enumerate(flat_in):
        flat_out[i] = round_sig(v, figures)
    return out


@dataclass(frozen=True)
class Attribution:
    """A per-feature weight vector plus an intercept entry.

    The intercept is a first-class entry: property metrics and human-input
    construction treat the attribution as a (D+1)-vector.
    """

    weights: np.ndarray
    intercept: float

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float)
        w.setflags(write=False)
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "intercept", float(self.intercept))
        if not np.all(np.isfinite(w)) or not math.isfinite(self.intercept):
            raise ValueError("attribution entries must be finite")

    @property
    def dimension(self) -> int:
        return len(self.weights)

    def as_vector(self) -> np.ndarray:
        """All D+1 entries, intercept last."""
        return np.append(self.weights, self.intercept)

    def rounded(self, figures: int = 1) -> "Attribution":
        return Attribution(round_sig_vec(self.weights, figures),
                           round_sig(self.intercept, figures))

    def __eq__(self, other) -> bool:
        if not isinstance(other, Attribution):
            return NotImplemented
        return (self.intercept == other.intercept
                and self.weights.shape == other.weights.shape
                and bool(np.all(self.weights == other.weights)))


def dot_with_intercept(x, attribution: Attribution) -> float:
    """sum_d x_d * weights_d + intercept."""
    x = np.asarray(x, dtype=float)
    if x.shape != attribution.weights.shape:
        raise ValueError(
            f"dimension mismatch: input has shape {x.shape}, "
            f"attribution weights have shape {attribution.weights.shape}")
    return float(x @ attribution.weights + attribution.intercept)


@dataclass(frozen=True)
class SummaryStat:
    """Mean with a normal-approximation 95% confidence halfwidth."""

    mean: float
    ci95_halfwidth: float
    n: int

    def __str__(self) -> str:
        return f"{self.mean:.2f} ± {self.ci95_halfwidth:.2f}"


def mean_ci95(samples) -> SummaryStat:
    """Arithmetic mean and 1.96 * s / sqrt(n) halfwidth (s: ddof=1 std).

    A single sample has halfwidth 0 by convention.
    """
    arr = np.asarray(list(samples), dtype=float)
    if arr.size == 0:
        raise ValueError("mean_ci95 requires at least one sample")
    if not np.all(np.isfinite(arr)):
        raise ValueError("mean_ci95 requires finite samples")
    n = int(arr.size)
    if n == 1 or np.all(arr == arr[0]):
        return SummaryStat(float(arr[0]), 0.0, n)
    s = float(arr.std(ddof=1))
    return SummaryStat(float(arr.mean()), 1.96 * s / math.sqrt(n), n)


class RngStream:
    """A named, reproducible random stream.

    Identical (seed, label) pairs yield bitwise-identical draw sequences on
    any platform.  Substreams derived with different labels never share
    draws, so trials, perturbation sampling, and study randomization stay
    independent.
    """

    __slots__ = ("seed", "label", "_gen")

    def __init__(self, seed: int, label: str = "root"):
        self.seed = int(seed) & 0xFFFFFFFFFFFFFFFF
        self.label = str(label)
        self._gen = None

    @property
    def generator(self) -> np.random.Generator:
        if self._gen is None:
            digest = hashlib.sha256(self.label.encode("utf-8")).digest()
            words = [int.from_bytes(digest[i:i + 4], "little") for i in range(0, 16, 4)]
            ss = np.random.SeedSequence(entropy=[self.seed, *words])
            self._gen = np.random.Generator(np.random.Philox(ss))
        return self._gen

    def substream(self, label: str) -> "RngStream":
        return RngStream(self.seed, f"{self.label}/{label}")

    def __repr__(self) -> str:
        return f"RngStream(seed={self.seed}, label={self.label!r})"
