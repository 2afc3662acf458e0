"""Counter-based random streams and entry distributions.

Draws for sample ``i`` of a stream are a pure function of
``(master_seed, stream_id, i)``: each sample owns a fixed block range of a
Philox counter, so any chunking of the sample range across workers yields the
same values.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Sequence

import numpy as np

from .errors import InvalidDistribution

_U64 = 1 << 64
CHUNK = 4096


@dataclass(frozen=True)
class RngSpec:
    master_seed: int
    stream_id: int = 0

    def __post_init__(self):
        for name in ("master_seed", "stream_id"):
            v = getattr(self, name)
            if not 0 <= v < _U64:
                raise ValueError(f"{name} must be a 64-bit unsigned integer")

    def child(self, k: int) -> RngSpec:
        """A statistically independent stream, deterministically derived."""
        state = np.random.SeedSequence([self.stream_id, k]).generate_state(1, np.uint64)
        return RngSpec(self.master_seed, int(state[0]))

    def words(self, start: int, stop: int, per_sample: int) -> np.ndarray:
        """uint64 array of shape (stop - start, per_sample)."""
        count = stop - start
        blocks = -(-per_sample // 4)
        key = np.array([self.master_seed, self.stream_id], dtype=np.uint64)
        bg = np.random.Philox(key=key, counter=start * blocks)
        raw = bg.random_raw(count * blocks * 4).reshape(count, blocks * 4)
        return raw[:, :per_sample]

    def signs(self, start: int, stop: int, n: int) -> np.ndarray:
        """int8 array (count, n) of uniform +-1 vectors, one per sample index."""
        wpr = -(-n // 64)
        w = self.words(start, stop, wpr)
        return _words_to_signs(w, n)

    def sign_matrices(self, start: int, stop: int, n: int) -> np.ndarray:
        """int8 array (count, n, n) of uniform +-1 matrices."""
        wpr = -(-n // 64)
        w = self.words(start, stop, n * wpr).reshape(stop - start, n, wpr)
        return _words_to_signs(w, n)

    def uniforms(self, start: int, stop: int, k: int) -> np.ndarray:
        """float64 array (count, k) uniform on [0, 1), 53-bit resolution."""
        w = self.words(start, stop, k)
        return (w >> np.uint64(11)).astype(np.float64) * (1.0 / (1 << 53))


def _words_to_signs(w: np.ndarray, n: int) -> np.ndarray:
    # bit j of the row (little-endian across words) -> entry 1 - 2*bit
    w = np.ascontiguousarray(w.astype("<u8"))
    bits = np.unpackbits(w.view(np.uint8), axis=-1, bitorder="little")
    bits = bits.reshape(*w.shape[:-1], w.shape[-1] * 64)[..., :n]
    return (1 - 2 * bits.astype(np.int8)).astype(np.int8)


def signs_to_bits(row: Sequence[int]) -> int:
    bits = 0
    for j, s in enumerate(row):
        if s < 0:
            bits |= 1 << j
    return bits


def map_chunks(fn: Callable[[int, int], object], total: int, workers: int = 1,
               chunk: int = CHUNK) -> list:
    """Apply ``fn(start, stop)`` over fixed-size chunks of range(total), in order.

    The chunk boundaries do not depend on ``workers``, so neither do results.
    """
    bounds = [(s, min(s + chunk, total)) for s in range(0, total, chunk)]
    if workers <= 1 or len(bounds) <= 1:
        return [fn(a, b) for a, b in bounds]
    with ThreadPoolExecutor(max_workers=workers) as ex:
        return list(ex.map(lambda ab: fn(*ab), bounds))


# --------------------------------------------------------------------------
# entry distributions
# --------------------------------------------------------------------------

KINDS = ("bernoulli_pm1", "lazy", "discrete", "bounded_custom")


@dataclass(frozen=True)
class EntryDistribution:
    """A finitely supported entry law with rational values and probabilities.

    ``c`` and ``rho`` declare the (c, rho)-property
    min{P(x >= c), P(x <= -c)} >= rho; it is checked exactly on construction.
    When omitted, c is the smallest nonzero |value| and rho the attained minimum.
    ``bound`` is only used by ``bounded_custom``, which additionally requires
    mean 0, variance 1 and |x| <= bound.
    """

    kind: str
    support: tuple[tuple[Fraction, Fraction], ...]
    c: Fraction = None
    rho: Fraction = None
    mu: Fraction | None = None
    bound: Fraction | None = None
    _cum: tuple = field(default=(), repr=False, compare=False)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise InvalidDistribution(f"unknown kind {self.kind!r}")
        merged: dict[Fraction, Fraction] = {}
        for v, p in self.support:
            v, p = Fraction(v), Fraction(p)
            if p < 0:
                raise InvalidDistribution("negative probability")
            if p:
                merged[v] = merged.get(v, Fraction(0)) + p
        if not merged:
            raise InvalidDistribution("empty support")
        if sum(merged.values()) != 1:
            raise InvalidDistribution(f"probabilities sum to {sum(merged.values())}, not 1")
        support = tuple(sorted(merged.items()))
        object.__setattr__(self, "support", support)

        c = self.c
        if c is None:
            nz = [abs(v) for v, _ in support if v != 0]
            c = min(nz) if nz else Fraction(0)
        c = Fraction(c)
        attained = self.rho_at(c)
        rho = attained if self.rho is None else Fraction(self.rho)
        if c < 0 or not 0 <= rho <= Fraction(1, 2):
            raise InvalidDistribution("need c >= 0 and 0 <= rho <= 1/2")
        if attained < rho:
            raise InvalidDistribution(
                f"(c, rho) = ({c}, {rho}) not satisfied: min tail mass is {attained}")
        object.__setattr__(self, "c", c)
        object.__setattr__(self, "rho", rho)

        if self.kind == "bounded_custom":
            if self.bound is None:
                raise InvalidDistribution("bounded_custom needs a bound")
            mean = sum(v * p for v, p in support)
            var = sum(v * v * p for v, p in support) - mean * mean
            if mean != 0 or var != 1:
                raise InvalidDistribution(f"need mean 0 and variance 1, got {mean}, {var}")
            if any(abs(v) > Fraction(self.bound) for v, _ in support):
                raise InvalidDistribution("support exceeds the declared bound")
        cum = np.cumsum([float(p) for _, p in support])
        cum[-1] = 1.0
        object.__setattr__(self, "_cum", tuple(cum))

    def rho_at(self, c) -> Fraction:
        c = Fraction(c)
        up = sum((p for v, p in self.support if v >= c), Fraction(0))
        down = sum((p for v, p in self.support if v <= -c), Fraction(0))
        return min(up, down)

    @property
    def values(self) -> list[Fraction]:
        return [v for v, _ in self.support]

    @property
    def denominator(self) -> int:
        """Common denominator of the support values."""
        return math.lcm(*(v.denominator for v in self.values))

    def scaled_values(self) -> np.ndarray:
        """Support values times the common denominator, as int64."""
        d = self.denominator
        return np.array([int(v * d) for v in self.values], dtype=np.int64)

    def sample_indices(self, u: np.ndarray) -> np.ndarray:
        """Map uniforms to support indices."""
        return np.searchsorted(np.array(self._cum), u, side="right").clip(0, len(self.support) - 1)

    def spec(self) -> str:
        if self.kind == "bernoulli_pm1":
            return "bernoulli"
        if self.kind == "lazy":
            return f"lazy:{self.mu}"
        body = ",".join(f"{v}@{p}" for v, p in self.support)
        if self.kind == "bounded_custom":
            return f"bounded:{self.bound}:{body}"
        return f"discrete:{body}"


def bernoulli() -> EntryDistribution:
    return EntryDistribution("bernoulli_pm1", ((-1, Fraction(1, 2)), (1, Fraction(1, 2))),
                             c=Fraction(1), rho=Fraction(1, 2))


def lazy(mu) -> EntryDistribution:
    """+1 and -1 with probability mu/2 each, 0 with probability 1 - mu."""
    mu = Fraction(mu)
    if not 0 <= mu <= 1:
        raise InvalidDistribution("mu must lie in [0, 1]")
    return EntryDistribution("lazy", ((-1, mu / 2), (0, 1 - mu), (1, mu / 2)),
                             c=Fraction(1), rho=mu / 2, mu=mu)


def discrete(support, c=None, rho=None) -> EntryDistribution:
    return EntryDistribution("discrete", tuple((Fraction(v), Fraction(p)) for v, p in support),
                             c=c, rho=rho)


def bounded_custom(support, bound, c=None, rho=None) -> EntryDistribution:
    return EntryDistribution("bounded_custom", tuple((Fraction(v), Fraction(p)) for v, p in support),
                             c=c, rho=rho, bound=Fraction(bound))


def _parse_pairs(body: str):
    pairs = []
    for item in body.split(","):
        try:
            v, p = item.split("@")
            pairs.append((Fraction(v.strip()), Fraction(p.strip())))
        except (ValueError, ZeroDivisionError) as exc:
            raise InvalidDistribution(f"bad support item {item!r}") from exc
    return pairs


def parse_distribution(text: str) -> EntryDistribution:
    """Parse 'bernoulli', 'lazy:1/16', 'discrete:-1@1/4,0@1/2,1@1/4' or
    'bounded:K:v@p,...'."""
    text = text.strip()
    if text in ("bernoulli", "bernoulli_pm1", "pm1"):
        return bernoulli()
    kind, _, rest = text.partition(":")
    try:
        if kind == "lazy":
            return lazy(Fraction(rest))
        if kind == "discrete":
            return discrete(_parse_pairs(rest))
        if kind == "bounded":
            bound, _, body = rest.partition(":")
            return bounded_custom(_parse_pairs(body), Fraction(bound))
    except (ValueError, ZeroDivisionError) as exc:
        if isinstance(exc, InvalidDistribution):
            raise
        raise InvalidDistribution(str(exc)) from exc
    raise InvalidDistribution(f"cannot parse distribution {text!r}")


def sample_int_matrices(rng: RngSpec, dist: EntryDistribution, start: int, stop: int,
                        rows: int, cols: int) -> np.ndarray:
    """Integer matrices (count, rows, cols) equal to samples times dist.denominator."""
    if dist.kind == "bernoulli_pm1":
        if rows == cols:
            return rng.sign_matrices(start, stop, rows).astype(np.int64)
        w = rng.words(start, stop, rows * -(-cols // 64)).reshape(stop - start, rows, -1)
        return _words_to_signs(w, cols).astype(np.int64)
    u = rng.uniforms(start, stop, rows * cols)
    idx = dist.sample_indices(u)
    return dist.scaled_values()[idx].reshape(stop - start, rows, cols)
