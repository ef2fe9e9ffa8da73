"""Inter-rater agreement statistics: Pearson's r and Krippendorff's alpha.

Krippendorff's alpha uses the coincidence-matrix formulation, so any number
of raters is supported and missing entries simply drop out of the pairable
set. Three difference metrics are provided: nominal, ordinal (cumulative
marginal ranks), and interval.
"""

from __future__ import annotations

import math
from typing import Mapping, Sequence

from .errors import PreconditionError

ALPHA_LEVELS = ("nominal", "ordinal", "interval")


def pearson(x: Sequence[float], y: Sequence[float]) -> float:
    """Pearson correlation coefficient, clamped into [-1, 1]."""
    if len(x) != len(y):
        raise PreconditionError(f"length mismatch: {len(x)} vs {len(y)}")
    n = len(x)
    if n < 2:
        raise PreconditionError(f"need at least 2 points, got {n}")
    mean_x = math.fsum(x) / n
    mean_y = math.fsum(y) / n
    dx = [value - mean_x for value in x]
    dy = [value - mean_y for value in y]
    var_x = math.fsum(d * d for d in dx)
    var_y = math.fsum(d * d for d in dy)
    denominator = math.sqrt(var_x) * math.sqrt(var_y)
    if denominator == 0.0:  # includes exact zero variance and underflow
        raise PreconditionError("zero variance in at least one input vector")
    r = math.fsum(a * b for a, b in zip(dx, dy)) / denominator
    return max(-1.0, min(1.0, r))


RatingsMatrix = Mapping[str, Mapping[str, object]]


def _units_from_ratings(
    ratings: RatingsMatrix | Sequence[Sequence[object]],
) -> dict[object, list[object]]:
    """Collect per-item value lists from either input shape, dropping missing."""
    units: dict[object, list[object]] = {}
    if isinstance(ratings, Mapping):
        rater_items = [ratings[rater] for rater in ratings]
    else:
        rater_items = [
            {idx: value for idx, value in enumerate(row)} for row in ratings
        ]
    for items in rater_items:
        for item, value in items.items():
            if value is None:
                continue
            units.setdefault(item, []).append(value)
    return {item: values for item, values in units.items() if len(values) > 1}


def krippendorff_alpha(
    ratings: RatingsMatrix | Sequence[Sequence[object]],
    level: str = "ordinal",
) -> float:
    """Chance-corrected agreement over a rater x item matrix with missing entries.

    ratings is either {rater: {item: value}} or a sequence of per-rater
    sequences with None marking a missing rating. Items rated by fewer than
    two raters are excluded. alpha <= 1 always; 1.0 on perfect agreement
    (including the degenerate no-variation case, where expected disagreement
    is zero).
    """
    if level not in ALPHA_LEVELS:
        raise PreconditionError(f"unknown measurement level: {level!r}")
    units = _units_from_ratings(ratings)
    if not units:
        raise PreconditionError("no co-rated items (every unit has fewer than 2 ratings)")

    if level in ("ordinal", "interval"):
        try:
            units = {
                item: [float(value) for value in values]  # type: ignore[arg-type]
                for item, values in units.items()
            }
        except (TypeError, ValueError) as exc:
            raise PreconditionError(f"{level} level requires numeric ratings: {exc}") from exc

    # coincidence matrix: each ordered pair of distinct ratings inside a unit
    # contributes 1/(m_u - 1)
    coincidence: dict[tuple[object, object], float] = {}
    for values in units.values():
        m = len(values)
        weight = 1.0 / (m - 1)
        for i, left in enumerate(values):
            for j, right in enumerate(values):
                if i == j:
                    continue
                key = (left, right)
                coincidence[key] = coincidence.get(key, 0.0) + weight

    values_seen = {value for values in units.values() for value in values}
    if level == "nominal":
        domain = sorted(values_seen, key=str)
    else:
        domain = sorted(values_seen)
    marginals = {
        value: math.fsum(
            coincidence.get((value, other), 0.0) for other in domain
        )
        for value in domain
    }
    n = math.fsum(marginals.values())

    def delta_sq(c: object, k: object) -> float:
        if c == k:
            return 0.0
        if level == "nominal":
            return 1.0
        if level == "interval":
            return (float(c) - float(k)) ** 2  # type: ignore[arg-type]
        # ordinal: squared difference of cumulative marginals between ranks
        lo, hi = sorted((domain.index(c), domain.index(k)))
        between = math.fsum(marginals[domain[g]] for g in range(lo, hi + 1))
        return (between - (marginals[c] + marginals[k]) / 2.0) ** 2

    observed = math.fsum(
        coincidence.get((c, k), 0.0) * delta_sq(c, k) for c in domain for k in domain
    ) / n
    expected = math.fsum(
        marginals[c] * marginals[k] * delta_sq(c, k) for c in domain for k in domain
    ) / (n * (n - 1.0))
    if expected == 0.0:
        return 1.0  # no variation anywhere: define as perfect agreement
    return 1.0 - observed / expected
