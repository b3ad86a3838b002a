from dataclasses import dataclass, field
import math


@dataclass
class EntropyEstimate:
    """Point estimate of entropy in nats with optional posterior spread.

    ``std`` is None for point estimators (plugin, Miller-Madow, ANSB).
    ``map_d``/``map_alpha`` are set by the mixture estimators.
    """

    estimator: str
    mean: float
    std: float | None = None
    map_d: float | None = None
    map_alpha: float | None = None
    log_evidence_at_map: float | None = None
    diagnostics: dict = field(default_factory=dict)

    @property
    def variance(self):
        return None if self.std is None else self.std ** 2

    def interval(self, width=2.0):
        """``mean -/+ width * std``; None when no spread is available."""
        if self.std is None:
            return None
        return self.mean - width * self.std, self.mean + width * self.std

    def covers(self, value, width=2.0):
        iv = self.interval(width)
        return iv is not None and iv[0] <= value <= iv[1]

    def is_finite(self):
        return math.isfinite(self.mean) and (self.std is None or math.isfinite(self.std))
