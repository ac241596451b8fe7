"""Round-level ping-pong protocol with a lossy channel and an optional eavesdropper.

A round: Bob prepares Psi+ on (h, t) and sends ``t``; the channel (or Eve,
who swaps in an ideal link and masks her own loss by discarding photons)
delivers it; Alice either measures it (control mode) or encodes ``Z_t^j``
and returns it (message mode); on the way back Eve undoes her outbound
operation, optionally symmetrizes, and reads ``y``; Bob Bell-measures.
"""

from __future__ import annotations

import math
from collections import Counter
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Optional, Union

import numpy as np

from . import attack
from .attack import AttackVariant
from .engine import (
    PSI_MINUS,
    PSI_PLUS,
    TWO_PHOTON,
    VACUUM,
    StateVector,
    lose_photons,
    measure_bell,
    measure_polarization,
    occupancy_distribution,
)

CHUNK_ROUNDS = 4096
LOSS_LEGS = ("outbound", "both")


@dataclass(frozen=True)
class ChannelConfig:
    eta: float = 1.0
    loss_leg: str = "outbound"

    def __post_init__(self):
        if not 0.0 <= self.eta <= 1.0:
            raise ValueError(f"eta must lie in [0, 1], got {self.eta}")
        if self.loss_leg not in LOSS_LEGS:
            raise ValueError(f"loss_leg must be one of {LOSS_LEGS}, got {self.loss_leg!r}")


@dataclass(frozen=True)
class ProtocolConfig:
    control_probability: float = 0.5
    attack: AttackVariant = AttackVariant("none")
    attack_fraction: float = 1.0
    two_basis_control: bool = False
    rounds: int = 100_000
    seed: int = 0

    def __post_init__(self):
        for name in ("control_probability", "attack_fraction"):
            p = getattr(self, name)
            if not 0.0 <= p <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1], got {p}")
        if self.rounds < 1:
            raise ValueError(f"rounds must be >= 1, got {self.rounds}")


@dataclass
class RoundRecord:
    mode: str
    j: Optional[int] = None
    k: Optional[int] = None
    m: Union[int, str, None] = None
    control_basis: Optional[str] = None
    alice_outcome: Union[int, str, None] = None
    bob_outcome: Optional[int] = None
    detection: bool = False
    attacked: bool = False
    symmetrized: bool = False
    photon_lost: bool = False

    @property
    def photon_found(self) -> bool:
        return self.alice_outcome not in (None, VACUUM)


def detection_rule(control_basis: str, alice_outcome, bob_outcome) -> bool:
    """True when the pair of control outcomes is impossible for Psi+.

    Psi+ is anticorrelated in z and correlated in x (``(|++> - |-->)/sqrt2``).
    For x-basis outcomes, 0 means ``+`` and 1 means ``-``.
    """
    if alice_outcome == TWO_PHOTON:
        return True
    if alice_outcome not in (0, 1) or bob_outcome not in (0, 1):
        raise ValueError(f"detection needs photon outcomes, got {alice_outcome!r}, {bob_outcome!r}")
    same = alice_outcome == bob_outcome
    if control_basis == "z":
        return same
    if control_basis == "x":
        return not same
    raise ValueError(f"unknown control basis {control_basis!r}")


@lru_cache(maxsize=None)
def intrinsic_survival(kind: str) -> float:
    """Probability the travel mode still holds a photon right after Eve's outbound step."""
    state = attack.ba_attack(attack.make_initial(), kind)
    return 1.0 - occupancy_distribution(state, "t")[0]


def eve_keep_probability(variant: AttackVariant, attack_fraction: float, eta: float) -> float:
    """Uniform keep probability Eve applies so Alice sees a photon-found rate of ``eta``.

    If her attack already loses more than the channel would, she cannot add
    photons back and keeps everything.
    """
    s = intrinsic_survival(variant.kind)
    natural = attack_fraction * s + (1.0 - attack_fraction)
    if natural <= eta:
        return 1.0
    return eta / natural


@lru_cache(maxsize=None)
def _initial(ancilla: bool) -> StateVector:
    return attack.make_initial(ancilla)


_BELL_TO_BIT = {PSI_PLUS: 0, PSI_MINUS: 1}


def run_round(config: ProtocolConfig, channel: ChannelConfig, rng,
              keep: Optional[float] = None) -> RoundRecord:
    """Play one round. ``keep`` is Eve's discard-masking factor (computed if omitted)."""
    variant = config.attack
    eve_present = variant.active
    attacked = eve_present and rng.random() < config.attack_fraction
    state = _initial(eve_present)
    rec = RoundRecord(mode="control", attacked=attacked)

    # Bob -> Alice
    if eve_present:
        if attacked:
            state = attack.ba_attack(state, variant.kind)
        if keep is None:
            keep = eve_keep_probability(variant, config.attack_fraction, channel.eta)
        if keep < 1.0 and rng.random() >= keep:
            _, state = lose_photons(state, "t", rng)
            rec.photon_lost = True
    elif channel.eta < 1.0 and rng.random() >= channel.eta:
        _, state = lose_photons(state, "t", rng)
        rec.photon_lost = True

    if rng.random() < config.control_probability:
        basis = "z"
        if config.two_basis_control and rng.random() < 0.5:
            basis = "x"
        alice, state = measure_polarization(state, "t", basis, rng)
        bob, state = measure_polarization(state, "h", basis, rng)
        rec.control_basis = basis
        rec.alice_outcome = alice.value
        rec.bob_outcome = bob.value
        rec.detection = alice.value != VACUUM and detection_rule(basis, alice.value, bob.value)
        return rec

    rec.mode = "message"
    rec.j = j = int(rng.random() < 0.5)
    state = attack.encode(state, j)

    # Alice -> Bob
    if not eve_present and channel.loss_leg == "both" and channel.eta < 1.0:
        if rng.random() >= channel.eta:
            _, state = lose_photons(state, "t", rng)
            rec.photon_lost = True
    if attacked and not rec.photon_lost:
        state = attack.ab_attack(state, variant.kind)
        if variant.symmetrize:
            rec.symmetrized = coin = rng.random() < 0.5
            state = attack.symmetrize(state, coin)
        rec.k, state = attack.eve_measure(state, rng)

    outcome, _ = measure_bell(state, rng)
    rec.m = _BELL_TO_BIT.get(outcome.value, outcome.value)
    return rec


@dataclass
class SessionStats:
    """Aggregated counts; ``+`` merges two sessions."""

    joint: Counter = field(default_factory=Counter)  # (j, k, m, coin) -> count
    rounds: Counter = field(default_factory=Counter)  # mode -> count
    control_by_basis: Counter = field(default_factory=Counter)
    detections_by_basis: Counter = field(default_factory=Counter)
    found_by_basis: Counter = field(default_factory=Counter)
    attacked: int = 0
    photon_lost: int = 0

    def add(self, rec: RoundRecord) -> None:
        self.rounds[rec.mode] += 1
        self.attacked += rec.attacked
        self.photon_lost += rec.photon_lost
        if rec.mode == "control":
            b = rec.control_basis
            self.control_by_basis[b] += 1
            self.detections_by_basis[b] += rec.detection
            self.found_by_basis[b] += rec.photon_found
        else:
            self.joint[(rec.j, rec.k, rec.m, int(rec.symmetrized))] += 1

    def __add__(self, other: "SessionStats") -> "SessionStats":
        return SessionStats(
            self.joint + other.joint,
            self.rounds + other.rounds,
            self.control_by_basis + other.control_by_basis,
            self.detections_by_basis + other.detections_by_basis,
            self.found_by_basis + other.found_by_basis,
            self.attacked + other.attacked,
            self.photon_lost + other.photon_lost,
        )

    @property
    def total_rounds(self) -> int:
        return sum(self.rounds.values())

    @property
    def control_rounds(self) -> int:
        return self.rounds["control"]

    @property
    def message_rounds(self) -> int:
        return self.rounds["message"]

    @property
    def detections(self) -> int:
        return sum(self.detections_by_basis.values())

    @property
    def photons_found(self) -> int:
        return sum(self.found_by_basis.values())

    def detection_rate(self, basis: Optional[str] = None) -> float:
        if basis is None:
            return _ratio(self.detections, self.control_rounds)
        return _ratio(self.detections_by_basis[basis], self.control_by_basis[basis])

    def photon_found_rate(self) -> float:
        return _ratio(self.photons_found, self.control_rounds)

    def message_error_rate(self) -> float:
        """Fraction of decoded message bits with m != j (loss excluded)."""
        errors = decoded = 0
        for (j, _, m, _), n in self.joint.items():
            if m == "loss":
                continue
            decoded += n
            errors += n * (m != j)
        return _ratio(errors, decoded)

    def to_dict(self) -> dict:
        def key(t):
            return ",".join("" if v is None else str(v) for v in t)

        return {
            "rounds": dict(sorted(self.rounds.items())),
            "attacked": self.attacked,
            "photon_lost": self.photon_lost,
            "control_by_basis": dict(sorted(self.control_by_basis.items())),
            "detections_by_basis": dict(sorted(self.detections_by_basis.items())),
            "found_by_basis": dict(sorted(self.found_by_basis.items())),
            "joint_jkmc": {key(k): v for k, v in sorted(self.joint.items(), key=lambda kv: key(kv[0]))},
        }


def _ratio(a: int, b: int) -> float:
    return a / b if b else math.nan


def binomial_sigma(p: float, n: int) -> float:
    return math.sqrt(p * (1.0 - p) / n) if n else math.nan


def _run_chunk(args) -> SessionStats:
    config, channel, seed_seq, n = args
    rng = np.random.default_rng(seed_seq)
    keep = None
    if config.attack.active:
        keep = eve_keep_probability(config.attack, config.attack_fraction, channel.eta)
    stats = SessionStats()
    for _ in range(n):
        stats.add(run_round(config, channel, rng, keep))
    return stats


def run_session(config: ProtocolConfig, channel: ChannelConfig = ChannelConfig(),
                workers: int = 1) -> SessionStats:
    """Run ``config.rounds`` independent rounds.

    Rounds are split into fixed-size chunks, each with its own child seed, so
    the result depends only on the seed, never on ``workers``.
    """
    n_chunks = -(-config.rounds // CHUNK_ROUNDS)
    seeds = np.random.SeedSequence(config.seed).spawn(n_chunks)
    sizes = [min(CHUNK_ROUNDS, config.rounds - i * CHUNK_ROUNDS) for i in range(n_chunks)]
    jobs = [(config, channel, s, n) for s, n in zip(seeds, sizes)]
    if workers > 1 and n_chunks > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(_run_chunk, jobs))
    else:
        parts = [_run_chunk(job) for job in jobs]
    total = SessionStats()
    for part in parts:
        total = total + part
    return total
