"""Base-rate / likelihood-ratio / precision algebra for binary flags.

Closed-form relationships between a flag's likelihood ratio (LR), the
outcome base rate, and the positive predictive value (PPV) the flag can
achieve, plus the derived quantities built on them: the LR required for a
target PPV, the number needed to detain (NND = 1/PPV), and comparison
against evidentiary benchmark bands.

Everything here is plain arithmetic, deliberately free of ``math`` calls,
so the functions are polymorphic over ``float`` and ``fractions.Fraction``:
exact inputs give exact outputs.
"""

from __future__ import annotations

from dataclasses import dataclass

__all__ = [
    "BaseRate",
    "OperatingPoint",
    "PrecisionSummary",
    "BenchmarkBand",
    "BENCHMARK_BANDS",
    "UndefinedFlagError",
    "PerfectSpecificityError",
    "InfiniteNNDError",
    "ppv_from_lr",
    "ppv_from_rates",
    "required_lr",
    "nnd_from_ppv",
    "benchmark_compare",
    "required_lr_table",
    "projection_table",
    "wall_curve",
]


class UndefinedFlagError(ValueError):
    """The flag fires on neither class (s = q = 0); no rate is defined."""


class PerfectSpecificityError(ValueError):
    """q = 0 with s > 0: the likelihood ratio has no finite value."""


class InfiniteNNDError(ValueError):
    """PPV = 0: no finite number of detentions prevents one outcome."""


@dataclass(frozen=True)
class BaseRate:
    """Prevalence of the positive outcome, strictly inside (0, 1)."""

    value: float

    def __post_init__(self):
        if not 0 < self.value < 1:
            raise ValueError(f"base rate must lie strictly in (0, 1), got {self.value!r}")

    @property
    def odds(self):
        """Prior odds value / (1 - value)."""
        return self.value / (1 - self.value)


def _as_base_rate(pi) -> BaseRate:
    return pi if isinstance(pi, BaseRate) else BaseRate(pi)


@dataclass(frozen=True)
class OperatingPoint:
    """Sensitivity and false positive rate of a flag at one cutoff."""

    sensitivity: float
    fpr: float

    def __post_init__(self):
        for name in ("sensitivity", "fpr"):
            v = getattr(self, name)
            if not 0 <= v <= 1:
                raise ValueError(f"{name} must lie in [0, 1], got {v!r}")

    @property
    def lr(self):
        """Likelihood ratio sensitivity / fpr.

        Zero when the flag never fires on positives; raises rather than
        returning a non-finite number when fpr = 0.
        """
        if self.fpr == 0:
            if self.sensitivity == 0:
                raise UndefinedFlagError("flag fires on neither class; LR undefined")
            raise PerfectSpecificityError(
                "fpr = 0 with positive sensitivity: LR unbounded (perfect specificity)"
            )
        return self.sensitivity / self.fpr


def ppv_from_lr(lr, pi):
    """PPV achieved by a flag with likelihood ratio ``lr`` at base rate ``pi``.

    PPV = LR*omega / (1 + LR*omega) where omega = pi/(1-pi) is the prior
    odds. Strictly increasing in both arguments.
    """
    if lr < 0:
        raise ValueError(f"likelihood ratio must be nonnegative, got {lr!r}")
    x = lr * _as_base_rate(pi).odds
    return x / (1 + x)


def ppv_from_rates(point: OperatingPoint, pi):
    """PPV from an operating point by Bayes' theorem: s*pi / (s*pi + q*(1-pi)).

    Equals ``ppv_from_lr(point.lr, pi)`` whenever q > 0; also covers the
    perfect-specificity case q = 0, s > 0 (PPV = 1) that has no finite LR.
    """
    s, q = point.sensitivity, point.fpr
    if s == 0 and q == 0:
        raise UndefinedFlagError("flag fires on neither class; PPV undefined")
    p = _as_base_rate(pi).value
    return s * p / (s * p + q * (1 - p))


def required_lr(alpha, pi):
    """Minimum likelihood ratio for PPV >= ``alpha`` at base rate ``pi``.

    Inverts ``ppv_from_lr``: LR = (alpha/(1-alpha)) * ((1-pi)/pi).
    """
    if not 0 < alpha < 1:
        raise ValueError(f"target PPV must lie strictly in (0, 1), got {alpha!r}")
    return (alpha / (1 - alpha)) / _as_base_rate(pi).odds


def nnd_from_ppv(ppv):
    """Number needed to detain: flagged individuals per true positive, 1/PPV."""
    if not 0 <= ppv <= 1:
        raise ValueError(f"PPV must lie in [0, 1], got {ppv!r}")
    if ppv == 0:
        raise InfiniteNNDError("PPV = 0: NND is infinite")
    return 1 / ppv


@dataclass(frozen=True)
class PrecisionSummary:
    """LR, PPV and NND of one flag at one base rate; nnd = 1/ppv by construction."""

    lr: float
    ppv: float
    nnd: float
    base_rate: BaseRate

    @classmethod
    def from_lr(cls, lr, pi):
        pi = _as_base_rate(pi)
        ppv = ppv_from_lr(lr, pi)
        return cls(lr=lr, ppv=ppv, nnd=nnd_from_ppv(ppv), base_rate=pi)


@dataclass(frozen=True)
class BenchmarkBand:
    """One evidentiary benchmark band; spans [lower_bound, next band's lower bound)."""

    name: str
    lower_bound: float


# Bands partition [0, 1] with closed lower boundaries at 0.50 / 0.75 / 0.95.
BENCHMARK_BANDS = (
    BenchmarkBand("below-preponderance", 0.0),
    BenchmarkBand("preponderance", 0.50),
    BenchmarkBand("clear-and-convincing", 0.75),
    BenchmarkBand("beyond-reasonable-doubt", 0.95),
)


def benchmark_compare(ppv) -> BenchmarkBand:
    """Benchmark band containing ``ppv``; boundary values belong to the higher band."""
    if not 0 <= ppv <= 1:
        raise ValueError(f"PPV must lie in [0, 1], got {ppv!r}")
    chosen = BENCHMARK_BANDS[0]
    for band in BENCHMARK_BANDS:
        if ppv >= band.lower_bound:
            chosen = band
    return chosen


def required_lr_table(pis, alphas):
    """Grid of required LRs: grid[i][j] = required_lr(alphas[j], pis[i]).

    Values are unrounded; display rounding is a rendering concern.
    """
    pis, alphas = list(pis), list(alphas)
    if not pis or not alphas:
        raise ValueError("both grid axes must be nonempty")
    return [[required_lr(alpha, pi) for alpha in alphas] for pi in pis]


def projection_table(lr, pis):
    """Project one LR across base rates: a PrecisionSummary row per base rate."""
    if lr <= 0:
        raise ValueError(f"likelihood ratio must be positive, got {lr!r}")
    return [PrecisionSummary.from_lr(lr, pi) for pi in pis]


def wall_curve(alpha, pi_grid):
    """Required-LR curve at target PPV ``alpha``: (base rate, required LR) pairs.

    The grid must be strictly increasing; the output is then strictly
    decreasing in the base rate.
    """
    values = [_as_base_rate(pi).value for pi in pi_grid]
    if any(b <= a for a, b in zip(values, values[1:])):
        raise ValueError("base-rate grid must be strictly increasing")
    return [(v, required_lr(alpha, v)) for v in values]
