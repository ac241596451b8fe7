"""Eve's operations on the travel mode.

Two attacks are built on the same ancilla pair (an empty mode ``x`` and a
photon in mode ``y``):

* ``wojcik``: ``Q = SWAP_tx CPBS_txy H_y`` on the way to Alice and ``Q^-1``
  on the way back. Half the time it leaves the travel mode empty.
* ``improved``: ``W = U V Q`` and ``W^-1``, where ``U``/``V`` swap ``t`` and
  ``x`` when ``y`` holds polarization 0/1. This refills the travel mode.

Eve optionally follows the return-leg operation with ``S_ty`` on a fair coin
and finally reads the polarization of ``y``.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

from .engine import (
    CPBS_CONVENTIONS,
    POL0,
    POL1,
    VAC,
    BasisLabel,
    GateSpec,
    StateVector,
    apply,
    gate_cnot,
    gate_cpbs,
    gate_hadamard,
    gate_pauli,
    gate_swap,
    label,
    measure_polarization,
    polarization_branches,
    product,
)

ATTACK_KINDS = ("none", "wojcik", "improved")


@dataclass(frozen=True)
class AttackVariant:
    kind: str = "improved"
    symmetrize: bool = False

    def __post_init__(self):
        if self.kind not in ATTACK_KINDS:
            raise ValueError(f"unknown attack kind {self.kind!r}; expected one of {ATTACK_KINDS}")
        if self.kind == "none" and self.symmetrize:
            raise ValueError("symmetrization needs an attack")

    @property
    def active(self) -> bool:
        return self.kind != "none"

    def __str__(self) -> str:
        return self.kind + ("+sym" if self.symmetrize else "")


def make_initial(ancilla: bool = True) -> StateVector:
    """Psi+ on (h, t) with Eve's ancillas ``|vac>_x |0>_y`` (``y`` empty if no ancilla)."""
    y = POL0 if ancilla else VAC
    a = 2 ** -0.5
    return StateVector.from_terms([
        (a, BasisLabel(0, POL1, VAC, y)),
        (a, BasisLabel(1, POL0, VAC, y)),
    ])


def _swap_when_y(pol_occ, name: str) -> GateSpec:
    swap = gate_swap("t", "x")

    def act(lab):
        return swap.action(lab) if lab.y == pol_occ else [(lab, 1.0)]

    return GateSpec.from_action(name, act)


@lru_cache(maxsize=None)
def build_U() -> GateSpec:
    return _swap_when_y(POL0, "U")


@lru_cache(maxsize=None)
def build_V() -> GateSpec:
    return _swap_when_y(POL1, "V")


@lru_cache(maxsize=None)
def build_Q(convention: int = 0) -> GateSpec:
    return product(
        gate_swap("t", "x"), gate_cpbs("t", "x", "y", convention), gate_hadamard("y"), name="Q"
    )


@lru_cache(maxsize=None)
def build_Q_inverse(convention: int = 0) -> GateSpec:
    return build_Q(convention).inverse("Q^-1")


@lru_cache(maxsize=None)
def build_W(convention: int = 0) -> GateSpec:
    return product(build_U(), build_V(), build_Q(convention), name="W")


@lru_cache(maxsize=None)
def build_W_inverse(convention: int = 0) -> GateSpec:
    # each of U, V is its own inverse
    return product(build_Q_inverse(convention), build_V(), build_U(), name="W^-1")


@lru_cache(maxsize=None)
def build_S() -> GateSpec:
    """``S_ty = X_t Z_t CNOT_ty X_t Z_t`` (rightmost first)."""
    x, z = gate_pauli("t", "X"), gate_pauli("t", "Z")
    return product(x, z, gate_cnot("t", "y"), x, z, name="S")


@lru_cache(maxsize=None)
def _z_t() -> GateSpec:
    return gate_pauli("t", "Z")


def outbound_gate(kind: str) -> GateSpec | None:
    return {"none": None, "wojcik": build_Q(), "improved": build_W()}[kind]


def return_gate(kind: str) -> GateSpec | None:
    return {"none": None, "wojcik": build_Q_inverse(), "improved": build_W_inverse()}[kind]


def ba_attack(state: StateVector, kind: str = "improved") -> StateVector:
    gate = outbound_gate(kind)
    return state if gate is None else apply(gate, state)


def encode(state: StateVector, j: int) -> StateVector:
    """Alice's encoding ``Z_t^j``."""
    if j not in (0, 1):
        raise ValueError(f"message bit must be 0 or 1, got {j!r}")
    return apply(_z_t(), state) if j else state


def ab_attack(state: StateVector, kind: str = "improved") -> StateVector:
    gate = return_gate(kind)
    return state if gate is None else apply(gate, state)


def symmetrize(state: StateVector, coin: bool) -> StateVector:
    return apply(build_S(), state) if coin else state


def eve_measure(state: StateVector, rng) -> tuple[int | None, StateVector]:
    """z-measurement of ``y``; returns ``None`` for k when ``y`` turns out empty."""
    outcome, post = measure_polarization(state, "y", "z", rng)
    k = outcome.value if outcome.value in (0, 1) else None
    return k, post


def eve_branches(state: StateVector):
    """Exact counterpart of :func:`eve_measure`: ``(k, probability, post_state)``."""
    return [
        (value if value in (0, 1) else None, p, post)
        for value, p, post in polarization_branches(state, "y", "z")
    ]


# --------------------------------------------------------------------------
# Closed-form states used as oracles


def psi_pm(sign: int, y, x=VAC) -> list[tuple[complex, BasisLabel]]:
    """Terms of ``Psi^(sign)_ht |x>|y>``."""
    a = 2 ** -0.5
    return [(a, label(0, 1, x, y)), (sign * a, label(1, 0, x, y))]


def expected_after_ba() -> StateVector:
    """Travel photon anticorrelated with h, entangled with the ancilla routing."""
    return StateVector.from_terms([
        (0.5, label(0, 1, "vac", 0)),
        (0.5, label(0, 1, 1, "vac")),
        (0.5, label(1, 0, "vac", 1)),
        (0.5, label(1, 0, 0, "vac")),
    ])


def _scaled(c: complex, terms):
    return [(c * amp, lab) for amp, lab in terms]


def expected_after_ab(j: int) -> StateVector:
    """``1/2 [(-1)^j (Psi+ + Psi-)|j>_y + (Psi+ - Psi-)|0>_y] |vac>_x``."""
    s = (-1) ** j
    terms = (
        _scaled(0.5 * s, psi_pm(+1, j)) + _scaled(0.5 * s, psi_pm(-1, j))
        + _scaled(0.5, psi_pm(+1, 0)) + _scaled(-0.5, psi_pm(-1, 0))
    )
    return StateVector.from_terms(terms)


def expected_after_symmetrization(j: int) -> StateVector:
    """``1/2 [(Psi+ + Psi-)|j>_y + (-1)^j (Psi+ - Psi-)|1>_y] |vac>_x``."""
    s = (-1) ** j
    terms = (
        _scaled(0.5, psi_pm(+1, j)) + _scaled(0.5, psi_pm(-1, j))
        + _scaled(0.5 * s, psi_pm(+1, 1)) + _scaled(-0.5 * s, psi_pm(-1, 1))
    )
    return StateVector.from_terms(terms)


def cpbs_convention_search() -> dict[int, float]:
    """Deviation of ``W|initial>`` from the closed-form post-attack state, per CPBS convention."""
    init, target = make_initial(), expected_after_ba()
    return {
        conv: apply(build_W(conv), init).max_deviation(target)
        for conv in sorted(CPBS_CONVENTIONS)
    }

