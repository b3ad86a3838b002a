"""Observed counts and their multiplicities (frequency-of-frequencies)."""

from collections import Counter
from dataclasses import dataclass, field
from types import MappingProxyType

import numpy as np

from .exceptions import DomainError


@dataclass(frozen=True)
class Multiplicities:
    """Number of symbols ``m_k`` seen exactly ``k`` times.

    ``freqs`` and ``mults`` are parallel integer arrays sorted by frequency;
    every estimator iterates these instead of the per-symbol counts.
    """

    freqs: np.ndarray
    mults: np.ndarray

    def __post_init__(self):
        f = np.asarray(self.freqs, dtype=np.int64).reshape(-1)
        m = np.asarray(self.mults, dtype=np.int64).reshape(-1)
        if f.shape != m.shape:
            raise DomainError("freqs and mults must have the same length")
        if np.any(f < 1) or np.any(m < 1):
            raise DomainError("frequencies and multiplicities must be positive")
        order = np.argsort(f, kind="stable")
        f, m = f[order], m[order]
        if np.any(np.diff(f) == 0):
            raise DomainError("duplicate frequency")
        f.setflags(write=False)
        m.setflags(write=False)
        object.__setattr__(self, "freqs", f)
        object.__setattr__(self, "mults", m)

    def __eq__(self, other):
        if not isinstance(other, Multiplicities):
            return NotImplemented
        return np.array_equal(self.freqs, other.freqs) and np.array_equal(self.mults, other.mults)

    def __hash__(self):
        return hash((self.freqs.tobytes(), self.mults.tobytes()))

    @classmethod
    def from_mapping(cls, entries):
        items = sorted(entries.items())
        return cls(np.array([k for k, _ in items], dtype=np.int64),
                   np.array([v for _, v in items], dtype=np.int64))

    @property
    def entries(self):
        return {int(k): int(v) for k, v in zip(self.freqs, self.mults)}

    @property
    def M(self):
        return int(self.freqs[-1]) if self.freqs.size else 0

    @property
    def N(self):
        return int(np.dot(self.freqs, self.mults))

    @property
    def K(self):
        return int(self.mults.sum())

    def expand(self):
        """Sorted count multiset that these multiplicities summarize."""
        return np.repeat(self.freqs, self.mults)

    def to_counts(self):
        """CountData with synthetic integer symbol ids."""
        return CountData.from_counts(dict(enumerate(self.expand().tolist())))


@dataclass(frozen=True)
class CountData:
    """Positive symbol counts; unobserved symbols are implicit."""

    counts: MappingProxyType
    _mult: Multiplicities = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        clean = {}
        for sym, n in dict(self.counts).items():
            if int(n) != n or n < 1:
                raise DomainError(f"count for {sym!r} must be a positive integer, got {n!r}")
            clean[sym] = int(n)
        object.__setattr__(self, "counts", MappingProxyType(clean))
        tally = Counter(clean.values())
        object.__setattr__(self, "_mult", Multiplicities.from_mapping(tally))

    @classmethod
    def from_samples(cls, samples):
        """Tally an iterable of hashable symbol ids."""
        return cls(Counter(samples))

    @classmethod
    def from_counts(cls, counts):
        return cls(dict(counts))

    @classmethod
    def from_multiplicities(cls, mult):
        if not isinstance(mult, Multiplicities):
            mult = Multiplicities.from_mapping(mult)
        return mult.to_counts()

    @property
    def N(self):
        return sum(self.counts.values())

    @property
    def K(self):
        return len(self.counts)

    @property
    def multiplicities(self):
        return self._mult

    def values(self):
        return np.fromiter(self.counts.values(), dtype=np.int64, count=len(self.counts))


def from_samples(samples):
    return CountData.from_samples(samples)


def to_multiplicities(c):
    """Compress counts into ``{frequency: number of symbols}``."""
    return c.multiplicities


def coincidences(c):
    """Number of repeat observations, ``N - K``."""
    return c.N - c.K


def as_multiplicities(data):
    """Accept CountData, Multiplicities, a mapping of counts, or a count sequence."""
    if isinstance(data, Multiplicities):
        return data
    if isinstance(data, CountData):
        return data.multiplicities
    if isinstance(data, dict):
        return CountData.from_counts(data).multiplicities
    arr = np.asarray(data, dtype=np.int64).reshape(-1)
    arr = arr[arr > 0]
    f, m = np.unique(arr, return_counts=True)
    return Multiplicities(f, m)
