"""Exact outcome distributions and the information quantities derived from them.

Everything here is computed by pushing state vectors through the engine and
enumerating measurement branches with their Born weights; nothing is sampled.
Logarithms are base 2 and ``0 log 0 = 0``.
"""

from __future__ import annotations

import math
from collections import defaultdict
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterable, Mapping, Sequence

from . import attack
from .attack import AttackVariant
from .engine import (
    PSI_MINUS,
    PSI_PLUS,
    VACUUM,
    StateVector,
    bell_branches,
    occupancy_distribution,
    polarization_branches,
)
from .protocol import detection_rule

AXES = ("j", "k", "m", "c")
_BELL_TO_BIT = {PSI_PLUS: 0, PSI_MINUS: 1}


@dataclass(frozen=True)
class JointDistribution:
    """Probabilities over ``(j, k, m, c)``.

    ``j`` Alice's bit, ``k`` Eve's y-readout (None without an attack), ``m``
    Bob's decoded bit (or a non-Psi Bell label / ``'loss'``), ``c`` whether Eve
    applied the symmetrizing operation (always 0 without symmetrization).
    """

    probs: Mapping[tuple, float]

    @classmethod
    def from_counts(cls, counts: Mapping[tuple, int]) -> "JointDistribution":
        total = sum(counts.values())
        if not total:
            raise ValueError("no counts")
        return cls({key: n / total for key, n in counts.items()})

    def total(self) -> float:
        return sum(self.probs.values())

    def marginal(self, *axes: str) -> dict[tuple, float]:
        idx = [AXES.index(a) for a in axes]
        out: dict[tuple, float] = defaultdict(float)
        for key, p in self.probs.items():
            out[tuple(key[i] for i in idx)] += p
        return dict(out)

    def table(self) -> dict[tuple, float]:
        """``p_jkm`` with the symmetrization coin summed out."""
        return self.marginal("j", "k", "m")

    def condition(self, **fixed) -> "JointDistribution":
        keep = {
            key: p for key, p in self.probs.items()
            if all(key[AXES.index(a)] == v for a, v in fixed.items())
        }
        z = sum(keep.values())
        if z <= 0:
            raise ValueError(f"conditioning event {fixed} has probability 0")
        return JointDistribution({key: p / z for key, p in keep.items()})

    def p(self, j, k, m) -> float:
        return self.table().get((j, k, m), 0.0)

    def total_variation(self, other: "JointDistribution") -> float:
        a, b = self.table(), other.table()
        return 0.5 * sum(abs(a.get(key, 0.0) - b.get(key, 0.0)) for key in set(a) | set(b))


def entropy(probs: Iterable[float]) -> float:
    return -sum(p * math.log2(p) for p in probs if p > 0)


def _mutual_information(joint: JointDistribution, xs: Sequence[str], ys: Sequence[str]) -> float:
    pxy = joint.marginal(*xs, *ys)
    px = joint.marginal(*xs)
    py = joint.marginal(*ys)
    nx = len(xs)
    mi = 0.0
    for key, p in pxy.items():
        if p > 0:
            mi += p * math.log2(p / (px[key[:nx]] * py[key[nx:]]))
    return mi if mi > 1e-15 else 0.0


# Eve's observation is her readout together with the coin she flipped herself.
_PAIRS = {
    "AE": (("j",), ("k", "c")),
    "AB": (("j",), ("m",)),
    "BE": (("m",), ("k", "c")),
}


def mutual_information(joint: JointDistribution, pair: str) -> float:
    """Shannon mutual information in bits between two parties' observations."""
    try:
        xs, ys = _PAIRS[pair]
    except KeyError:
        raise ValueError(f"pair must be one of {sorted(_PAIRS)}, got {pair!r}") from None
    return _mutual_information(joint, xs, ys)


def qber(joint: JointDistribution) -> float:
    """P(m != j) over rounds where Bob decoded something (loss excluded)."""
    errors = decoded = 0.0
    for (j, _, m), p in joint.table().items():
        if m == "loss":
            continue
        decoded += p
        if m != j:
            errors += p
    return errors / decoded if decoded else math.nan


def mix(parts: Iterable[tuple[float, JointDistribution]]) -> JointDistribution:
    out: dict[tuple, float] = defaultdict(float)
    for w, joint in parts:
        for key, p in joint.probs.items():
            out[key] += w * p
    return JointDistribution(dict(out))


def _as_variant(variant) -> AttackVariant:
    return variant if isinstance(variant, AttackVariant) else AttackVariant(variant)


def _joint_from_returned(returned: Iterable[tuple[int, int, float, StateVector]], eve: bool) -> JointDistribution:
    """Enumerate Eve's and Bob's measurements on states arriving back at Bob.

    ``returned`` holds ``(j, coin, weight, state)`` with weights summing to 1.
    """
    probs: dict[tuple, float] = defaultdict(float)
    for j, coin, w, state in returned:
        eve_branches = attack.eve_branches(state) if eve else [(None, 1.0, state)]
        for k, pk, post in eve_branches:
            for value, pm, _ in bell_branches(post):
                m = _BELL_TO_BIT.get(value, value)
                probs[(j, k, m, coin)] += w * pk * pm
    return JointDistribution(dict(probs))


def returned_states(variant) -> list[tuple[int, int, float, StateVector]]:
    """States at Bob's station per (j, coin), ideal channel, uniform j and coin."""
    v = _as_variant(variant)
    init = attack.make_initial(ancilla=v.active)
    outbound = attack.ba_attack(init, v.kind)
    coins = (0, 1) if v.symmetrize else (0,)
    out = []
    for j in (0, 1):
        back = attack.ab_attack(attack.encode(outbound, j), v.kind)
        for c in coins:
            out.append((j, c, 0.5 / len(coins), attack.symmetrize(back, bool(c))))
    return out


@lru_cache(maxsize=None)
def exact_joint(variant) -> JointDistribution:
    """Exact ``(j, k, m, c)`` distribution of the full attack path on an ideal channel."""
    v = _as_variant(variant)
    return _joint_from_returned(returned_states(v), eve=v.active)


def oracle_joint(symmetrize: bool = False) -> JointDistribution:
    """Distribution obtained by measuring the closed-form return-leg oracle states.

    The oracles are taken as given, not derived from the attack operators;
    compare with :func:`exact_joint` to see where the two disagree.
    """
    coins = (0, 1) if symmetrize else (0,)
    returned = []
    for j in (0, 1):
        for c in coins:
            state = attack.expected_after_symmetrization(j) if c else attack.expected_after_ab(j)
            returned.append((j, c, 0.5 / len(coins), state))
    return _joint_from_returned(returned, eve=True)


@lru_cache(maxsize=None)
def induced_loss(variant) -> float:
    """Probability Alice finds the travel mode empty right after Eve's outbound step."""
    v = _as_variant(variant)
    state = attack.ba_attack(attack.make_initial(ancilla=v.active), v.kind)
    return occupancy_distribution(state, "t")[0]


@lru_cache(maxsize=None)
def detection_probability(variant, two_basis: bool = False) -> float:
    """Exact control-mode detection probability on an ideal channel."""
    v = _as_variant(variant)
    state = attack.ba_attack(attack.make_initial(ancilla=v.active), v.kind)
    bases = ("z", "x") if two_basis else ("z",)
    total = 0.0
    for basis in bases:
        for a, pa, post in polarization_branches(state, "t", basis):
            if a == VACUUM:
                continue
            for b, pb, _ in polarization_branches(post, "h", basis):
                if detection_rule(basis, a, b):
                    total += pa * pb
    return total / len(bases)


def attack_fraction_limit(survival: float, eta: float) -> float:
    """Largest fraction of rounds Eve can attack while Alice still sees rate ``eta``.

    Attacked rounds survive with ``survival``; the rest pass an ideal link.
    Loss matching ``f * survival + (1 - f) >= eta`` gives
    ``f* = min(1, (1 - eta) / (1 - survival))``.
    """
    if not 0.0 <= eta <= 1.0 or not 0.0 <= survival <= 1.0:
        raise ValueError("survival and eta must lie in [0, 1]")
    if survival >= eta:
        return 1.0
    return min(1.0, (1.0 - eta) / (1.0 - survival))


@dataclass(frozen=True)
class InfoReport:
    I_AE: float
    I_AB: float
    I_BE: float
    qber: float
    induced_loss: float
    detection_z: float
    detection_two_basis: float


def info_report(variant) -> InfoReport:
    v = _as_variant(variant)
    joint = exact_joint(v)
    eve = v.active
    return InfoReport(
        I_AE=mutual_information(joint, "AE") if eve else 0.0,
        I_AB=mutual_information(joint, "AB"),
        I_BE=mutual_information(joint, "BE") if eve else 0.0,
        qber=qber(joint),
        induced_loss=induced_loss(v),
        detection_z=detection_probability(v, False),
        detection_two_basis=detection_probability(v, True),
    )


@dataclass(frozen=True)
class SweepPoint:
    eta: float
    variant: str
    f_star: float
    I_AE_eff: float
    I_AB_eff: float
    induced_loss: float


SWEEP_VARIANTS = ("wojcik", "improved")


def sweep(eta_grid: Iterable[float], symmetrize: bool = False,
          variants: Sequence[str] = SWEEP_VARIANTS) -> list[SweepPoint]:
    """Per-message-bit information when Eve attacks the largest maskable fraction.

    Unattacked bits give Eve nothing and give Bob one full bit.
    """
    rows = []
    per_bit = {kind: info_report(AttackVariant(kind, symmetrize)) for kind in variants}
    for eta in eta_grid:
        if not 0.0 <= eta <= 1.0:
            raise ValueError(f"eta must lie in [0, 1], got {eta}")
        for kind in variants:
            rep = per_bit[kind]
            f = attack_fraction_limit(1.0 - rep.induced_loss, eta)
            rows.append(SweepPoint(
                eta=float(eta),
                variant=kind,
                f_star=f,
                I_AE_eff=f * rep.I_AE,
                I_AB_eff=f * rep.I_AB + (1.0 - f),
                induced_loss=rep.induced_loss,
            ))
    return rows


def eta_grid(start: float = 0.0, stop: float = 1.0, steps: int = 101) -> list[float]:
    if steps < 1:
        raise ValueError("steps must be >= 1")
    if steps == 1:
        return [float(start)]
    return [start + (stop - start) * i / (steps - 1) for i in range(steps)]
