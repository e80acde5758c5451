"""Monotone score recalibration and threshold-invariance verification.

Recalibration rescales scores so the stated probabilities better match
observed frequencies. The maps produced are monotone, so they reorder
nobody: every threshold on the original scale has a corresponding threshold
on the recalibrated scale with identical confusion counts, hence identical
sensitivity, false positive rate and likelihood ratio. The checker here
verifies that count identity exactly, and localizes the one genuine
exception: nondecreasing step maps (isotonic fits) are not invertible on
their flat regions.

The two fitters follow the scikit-learn estimator API (fit / transform /
get_params) so they compose with pipelines.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.exceptions import NotFittedError

from .metrics import AuditRecord, ConfusionCounts, CutoffSpec, SCORE_AT_LEAST, confusion_at_cutoff

__all__ = [
    "MonotoneTransform",
    "FunctionTransform",
    "ExpressionTransform",
    "StepTransform",
    "PlattCalibrator",
    "IsotonicCalibrator",
    "NonIncreasingFitError",
    "fit_platt",
    "fit_isotonic",
    "apply_transform",
    "lr_invariance_check",
    "flat_region_report",
    "InvarianceRow",
]


class NonIncreasingFitError(ValueError):
    """Fit produced a non-orientation-preserving (slope <= 0) transform."""


class MonotoneTransform:
    """A monotone map applied elementwise to scores.

    Subclasses set ``strictly_increasing``; only strictly increasing maps
    carry the exact threshold-invariance guarantee.
    """

    strictly_increasing: bool = True

    def __call__(self, scores: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def map_cutoff(self, cutoff: float) -> float:
        return float(self(np.asarray([cutoff], dtype=float))[0])


class FunctionTransform(MonotoneTransform):
    """Strictly increasing closed-form map given as a vectorized callable."""

    def __init__(self, func, name: str = "custom"):
        self.func = func
        self.name = name

    def __call__(self, scores):
        with np.errstate(invalid="ignore", divide="ignore"):
            out = np.asarray(self.func(np.asarray(scores, dtype=float)), dtype=float)
        if not np.all(np.isfinite(out)):
            raise ValueError(f"transform {self.name!r} left its domain (non-finite output)")
        return out


_EXPR_NAMES = {
    "exp": np.exp,
    "log": np.log,
    "sqrt": np.sqrt,
    "tanh": np.tanh,
    "arctan": np.arctan,
    "pi": np.pi,
    "e": np.e,
}


class ExpressionTransform(FunctionTransform):
    """Strictly increasing map written as an expression in ``x``, e.g. ``2*x + 1``."""

    def __init__(self, expression: str):
        code = compile(expression, "<transform>", "eval")
        for name in code.co_names:
            if name != "x" and name not in _EXPR_NAMES:
                raise ValueError(f"unknown name {name!r} in transform expression")
        super().__init__(
            lambda x: eval(code, {"__builtins__": {}}, {**_EXPR_NAMES, "x": x}),
            name=expression,
        )
        self.expression = expression


class StepTransform(MonotoneTransform):
    """Nondecreasing step map: ordered breakpoints with level values.

    A score takes the level of the largest breakpoint not exceeding it;
    scores below the first breakpoint take the first level.
    """

    strictly_increasing = False

    def __init__(self, breakpoints, levels):
        breakpoints = np.asarray(breakpoints, dtype=float)
        levels = np.asarray(levels, dtype=float)
        if breakpoints.size == 0 or breakpoints.shape != levels.shape:
            raise ValueError("need equally many breakpoints and levels, at least one")
        if np.any(np.diff(breakpoints) <= 0):
            raise ValueError("breakpoints must be strictly ascending")
        if np.any(np.diff(levels) < 0):
            raise ValueError("levels must be nondecreasing")
        self.breakpoints = breakpoints
        self.levels = levels

    def __call__(self, scores):
        scores = np.asarray(scores, dtype=float)
        idx = np.searchsorted(self.breakpoints, scores, side="right") - 1
        return self.levels[np.clip(idx, 0, len(self.levels) - 1)]

    def flat_regions(self) -> list[tuple[float, float]]:
        """Maximal [lo, hi] spans of two or more breakpoints sharing one level."""
        regions = []
        start = 0
        for i in range(1, len(self.levels) + 1):
            if i == len(self.levels) or self.levels[i] != self.levels[start]:
                if i - start >= 2:
                    regions.append((float(self.breakpoints[start]), float(self.breakpoints[i - 1])))
                start = i
        return regions


def _check_scores_outcomes(scores, outcomes, require_both_classes=True):
    scores = np.asarray(scores, dtype=float)
    outcomes = np.asarray(outcomes)
    if scores.ndim != 1 or scores.shape != outcomes.shape:
        raise ValueError("scores and outcomes must be equal-length 1-d sequences")
    if not np.all(np.isfinite(scores)):
        raise ValueError("scores must be finite")
    if not np.all((outcomes == 0) | (outcomes == 1)):
        raise ValueError("outcomes must be 0 or 1")
    if require_both_classes and (outcomes.min() == outcomes.max()):
        raise ValueError("need both outcome classes")
    return scores, outcomes.astype(float)


def _sigmoid(z):
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


class PlattCalibrator(BaseEstimator, TransformerMixin):
    """Two-parameter sigmoid recalibration fit by maximum likelihood.

    Fits p(y=1 | s) = sigmoid(a*s + b) by damped Newton iteration on the
    Bernoulli log-likelihood. With ``label_smoothing`` (the original
    method's convention) the targets are (n_pos+1)/(n_pos+2) for positives
    and 1/(n_neg+2) for negatives instead of 1 and 0, which keeps the
    optimum finite on separable data. Without smoothing, separable data
    drives the slope toward infinity; the iteration then stops at the cap
    or when the likelihood saturates numerically, whichever comes first,
    and ``converged_`` stays False.

    The optimizer contract is deterministic: start at a = 1,
    b = -mean(logit(target)), tolerance 1e-10 on the step size, iteration
    cap 10^4. Refitting the same data always gives bitwise-identical
    parameters.

    Attributes (after fit): ``slope_``, ``intercept_``, ``converged_``,
    ``separated_``, ``n_iter_``.
    """

    def __init__(self, label_smoothing: bool = True, tol: float = 1e-10, max_iter: int = 10_000):
        self.label_smoothing = label_smoothing
        self.tol = tol
        self.max_iter = max_iter

    def fit(self, scores, outcomes):
        scores, y = _check_scores_outcomes(scores, outcomes)
        n_pos = float(y.sum())
        n_neg = float(len(y) - n_pos)
        if self.label_smoothing:
            t = np.where(y == 1, (n_pos + 1) / (n_pos + 2), 1 / (n_neg + 2))
        else:
            t = y
        # Perfect separation: every negative scores strictly below every positive.
        self.separated_ = bool(scores[y == 1].min() > scores[y == 0].max())

        tc = np.clip(t, 1e-12, 1 - 1e-12)
        a = 1.0
        b = -float(np.mean(np.log(tc / (1 - tc))))

        def nll(av, bv):
            z = av * scores + bv
            # log(1 + e^z) - t*z, numerically stable
            return float(np.sum(np.logaddexp(0.0, z) - t * z))

        current = nll(a, b)
        self.converged_ = False
        it = 0
        for it in range(1, self.max_iter + 1):
            p = _sigmoid(a * scores + b)
            r = p - t
            grad = np.array([np.dot(r, scores), r.sum()])
            w = p * (1 - p)
            h11 = np.dot(w, scores * scores)
            h12 = np.dot(w, scores)
            h22 = w.sum()
            det = h11 * h22 - h12 * h12
            if det <= 0 or not np.isfinite(det):
                break
            step_a = (h22 * grad[0] - h12 * grad[1]) / det
            step_b = (h11 * grad[1] - h12 * grad[0]) / det
            # damp: halve until the objective does not increase
            scale = 1.0
            for _ in range(50):
                cand = nll(a - scale * step_a, b - scale * step_b)
                if cand <= current + 1e-15:
                    break
                scale /= 2
            a -= scale * step_a
            b -= scale * step_b
            current = min(current, cand)
            if max(abs(scale * step_a), abs(scale * step_b)) < self.tol:
                self.converged_ = True
                break
        self.n_iter_ = it
        self.slope_ = float(a)
        self.intercept_ = float(b)
        if self.slope_ <= 0:
            raise NonIncreasingFitError(
                f"fitted slope {self.slope_:.6g} is not orientation-preserving; "
                "the score carries no increasing relationship with the outcome"
            )
        return self

    def transform(self, scores):
        if not hasattr(self, "slope_"):
            raise NotFittedError("PlattCalibrator is not fitted")
        return _sigmoid(self.slope_ * np.asarray(scores, dtype=float) + self.intercept_)

    def as_transform(self) -> FunctionTransform:
        if not hasattr(self, "slope_"):
            raise NotFittedError("PlattCalibrator is not fitted")
        a, b = self.slope_, self.intercept_
        return FunctionTransform(lambda x: _sigmoid(a * x + b), name="platt")


class IsotonicCalibrator(BaseEstimator, TransformerMixin):
    """Nondecreasing step recalibration by pool-adjacent-violators.

    Ties in score are pooled before fitting; the solution minimizes squared
    error among nondecreasing fits. Single-class input degenerates to a
    constant fit, which is allowed and flagged via ``constant_``.

    Attributes (after fit): ``breakpoints_`` (distinct scores, ascending),
    ``levels_`` (fitted probabilities, nondecreasing), ``constant_``.
    """

    def fit(self, scores, outcomes):
        scores, y = _check_scores_outcomes(scores, outcomes, require_both_classes=False)
        order = np.argsort(scores, kind="mergesort")
        xs, ys = scores[order], y[order]
        # pool exact score ties
        uniq, start = np.unique(xs, return_index=True)
        bounds = np.append(start, len(xs))
        values = [float(ys[a:b].mean()) for a, b in zip(bounds[:-1], bounds[1:])]
        weights = [float(b - a) for a, b in zip(bounds[:-1], bounds[1:])]

        # pool-adjacent-violators on the tie-pooled sequence
        means: list[float] = []
        wsum: list[float] = []
        sizes: list[int] = []
        for v, w in zip(values, weights):
            means.append(v)
            wsum.append(w)
            sizes.append(1)
            while len(means) > 1 and means[-2] > means[-1]:
                w_tot = wsum[-2] + wsum[-1]
                means[-2] = (means[-2] * wsum[-2] + means[-1] * wsum[-1]) / w_tot
                wsum[-2] = w_tot
                sizes[-2] += sizes[-1]
                del means[-1], wsum[-1], sizes[-1]

        levels = np.repeat(means, sizes)
        self.breakpoints_ = uniq
        self.levels_ = np.asarray(levels, dtype=float)
        self.constant_ = bool(np.all(self.levels_ == self.levels_[0]))
        return self

    def transform(self, scores):
        return self.as_transform()(scores)

    def as_transform(self) -> StepTransform:
        if not hasattr(self, "levels_"):
            raise NotFittedError("IsotonicCalibrator is not fitted")
        return StepTransform(self.breakpoints_, self.levels_)


def fit_platt(scores, outcomes, **params) -> PlattCalibrator:
    """Fit a Platt sigmoid recalibration; see PlattCalibrator."""
    return PlattCalibrator(**params).fit(scores, outcomes)


def fit_isotonic(scores, outcomes) -> IsotonicCalibrator:
    """Fit an isotonic step recalibration; see IsotonicCalibrator."""
    return IsotonicCalibrator().fit(scores, outcomes)


def apply_transform(transform: MonotoneTransform, scores) -> np.ndarray:
    """Apply a monotone transform to an array of scores."""
    return transform(np.asarray(scores, dtype=float))


@dataclass(frozen=True)
class InvarianceRow:
    """Confusion counts at one cutoff before vs after recalibration."""

    cutoff: float
    mapped_cutoff: float
    before: ConfusionCounts
    after: ConfusionCounts
    counts_match: bool
    flat_region: tuple[float, float] | None


def _flat_region_containing(transform, cutoff):
    if not isinstance(transform, StepTransform):
        return None
    for lo, hi in transform.flat_regions():
        # half-open on the original scale: a cutoff at the left edge maps cleanly
        if lo < cutoff <= hi:
            return (lo, hi)
    return None


def lr_invariance_check(
    records,
    transform: MonotoneTransform,
    cutoffs,
) -> list[InvarianceRow]:
    """Compare confusion counts at each cutoff before vs after recalibration.

    For strictly increasing transforms the counts are equal as integers, so
    sensitivity, FPR and LR are identical exactly; the report asserts count
    equality, not ratio equality. For step transforms a mismatch is
    attributed to the flat region containing the cutoff.
    """
    records = list(records)
    scores = np.array([r.score for r in records], dtype=float)
    if len(scores) == 0:
        raise ValueError("no records")
    lo, hi = float(scores.min()), float(scores.max())
    transformed_scores = transform(scores)
    transformed = [
        AuditRecord(score=float(ts), outcome=r.outcome, group=r.group, factors=r.factors)
        for ts, r in zip(transformed_scores, records)
    ]
    rows = []
    for c in cutoffs:
        c = float(c)
        if not lo <= c <= hi:
            raise ValueError(f"cutoff {c!r} outside observed score range [{lo}, {hi}]")
        mapped = transform.map_cutoff(c)
        before = confusion_at_cutoff(records, CutoffSpec(SCORE_AT_LEAST, c))
        after = confusion_at_cutoff(transformed, CutoffSpec(SCORE_AT_LEAST, mapped))
        rows.append(
            InvarianceRow(
                cutoff=c,
                mapped_cutoff=mapped,
                before=before,
                after=after,
                counts_match=before == after,
                flat_region=_flat_region_containing(transform, c),
            )
        )
    return rows


def flat_region_report(fit) -> list[tuple[float, float]]:
    """Score intervals on which a step fit is constant, i.e. where threshold
    invariance is not guaranteed. Empty for strictly increasing level runs."""
    if isinstance(fit, IsotonicCalibrator):
        fit = fit.as_transform()
    if not isinstance(fit, StepTransform):
        raise ValueError("flat regions are defined for step transforms only")
    return fit.flat_regions()
