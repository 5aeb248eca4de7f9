"""Per-round gamification badges from interest, control, and the decision.

The power surplus of actor i is their control slice minus their interest
slice; its positive part is power without matching interest, its negative
part interest without matching power. The Player and Contributor badges go
to the actors whose negative/positive surplus patterns put the least weight
on the decided allocation; the Gainer (and the never-communicated Loser)
come from Frobenius closeness of the interest slices to the decision.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ShapeMismatch
from .linalg import as_matrix, as_tensor3


@dataclass(frozen=True)
class PowerSurplus:
    """Control-minus-interest tensor with its exact sign split."""

    surplus: np.ndarray  # (m, n, o)
    positive: np.ndarray
    negative: np.ndarray  # magnitudes of the negative parts
    frobenius: float  # total motivation for negotiations


@dataclass
class RoundBadges:
    gainer: int
    loser: int  # internal only; never serialized to player-facing payloads
    player: int | None
    contributor: int | None
    gain_distances: np.ndarray
    pi_minus: np.ndarray  # NaN marks INELIGIBLE actors
    pi_plus: np.ndarray

    def public_view(self) -> dict:
        return {
            "gainer": self.gainer,
            "player": self.player,
            "contributor": self.contributor,
        }

    def master_view(self) -> dict:
        view = self.public_view()
        view["loser"] = self.loser
        view["gain_distances"] = [float(v) for v in self.gain_distances]
        view["pi_minus"] = [None if np.isnan(v) else float(v) for v in self.pi_minus]
        view["pi_plus"] = [None if np.isnan(v) else float(v) for v in self.pi_plus]
        return view


def power_surplus(controls: np.ndarray, interests: np.ndarray) -> PowerSurplus:
    """Surplus[i, j, k] = C[j, i, k] - X[i, j, k], split into exact sign parts."""
    c = as_tensor3(controls, "controls")
    x = as_tensor3(interests, "interests")
    if c.shape != (x.shape[1], x.shape[0], x.shape[2]):
        raise ShapeMismatch(f"controls {c.shape} do not match interests {x.shape} transposed")
    surplus = c.transpose(1, 0, 2) - x
    positive = np.where(surplus > 0, surplus, 0.0)
    negative = np.where(surplus < 0, -surplus, 0.0)
    return PowerSurplus(surplus, positive, negative, float(np.linalg.norm(surplus)))


def gainer_loser(interests: np.ndarray, allocation: np.ndarray) -> tuple[int, int, np.ndarray]:
    """Closest and farthest interest slices to the decision, Frobenius norm.

    Ties break toward the lower actor index.
    """
    x = as_tensor3(interests, "interests")
    a = as_matrix(allocation, "allocation")
    if a.shape != x.shape[1:]:
        raise ShapeMismatch(f"allocation {a.shape} does not match interest slices {x.shape[1:]}")
    distances = np.linalg.norm(x - a[None, :, :], axis=(1, 2))
    return int(np.argmin(distances)), int(np.argmax(distances)), distances


def badge_scores(surplus_part: np.ndarray, allocation: np.ndarray) -> np.ndarray:
    """Allocation-weighted mean of a nonnegative surplus part, per actor.

    pi[i] = sum_jk part[i,j,k] A[j,k] / sum_jk part[i,j,k]; an actor whose
    part is identically zero is ineligible and comes back as NaN (a value,
    not an error).
    """
    part = as_tensor3(surplus_part, "surplus part")
    a = as_matrix(allocation, "allocation")
    if a.shape != part.shape[1:]:
        raise ShapeMismatch(f"allocation {a.shape} does not match surplus slices {part.shape[1:]}")
    weighted = (part * a[None, :, :]).sum(axis=(1, 2))
    mass = part.sum(axis=(1, 2))
    return np.divide(weighted, mass, out=np.full(part.shape[0], np.nan), where=mass > 0)


def _eligible_argmin(scores: np.ndarray) -> int | None:
    if np.all(np.isnan(scores)):
        return None
    return int(np.nanargmin(scores))


def issue_badges(
    interests: np.ndarray, controls: np.ndarray, allocation: np.ndarray
) -> RoundBadges:
    """All four badges for one round.

    Consumes the allocation fractions A, never the volume matrix: A lives on
    the same scale as the interest and control tensors. Ties break toward
    the lower actor index; all-ineligible score vectors leave the badge
    unissued.
    """
    surplus = power_surplus(controls, interests)
    gainer, loser, distances = gainer_loser(interests, allocation)
    pi_minus = badge_scores(surplus.negative, allocation)
    pi_plus = badge_scores(surplus.positive, allocation)
    return RoundBadges(
        gainer=gainer,
        loser=loser,
        player=_eligible_argmin(pi_minus),
        contributor=_eligible_argmin(pi_plus),
        gain_distances=distances,
        pi_minus=pi_minus,
        pi_plus=pi_plus,
    )
