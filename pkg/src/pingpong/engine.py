"""Exact state vectors over one polarization qubit and three optical modes.

The composite space has registers ``h`` (Bob's home photon, always present,
polarization 0 or 1) and optical modes ``t``, ``x``, ``y`` that may each be
empty, hold one photon of either polarization, or hold one photon of each
polarization. That gives 2 * 4 * 4 * 4 = 128 basis labels, indexed in
lexicographic (h, t, x, y) order with Vac < Pol0 < Pol1 < Pair.

Gates are stored as dense 128x128 matrices (for composition, inversion and
checks) plus COO triplets consumed by the kernels in :mod:`pingpong.kernels`.
Each gate carries a per-label domain code; applying it to a state with
amplitude on an undefined label raises instead of silently producing junk.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Iterable, Iterator, Mapping, NamedTuple, Union

import numpy as np

from . import kernels

DIM = 128
SUPPORT_TOL = 1e-12  # amplitudes below this are treated as absent
NORM_TOL = 1e-9
_CLEAN_TOL = 1e-14
INV_SQRT2 = 1.0 / math.sqrt(2.0)


class EngineError(ValueError):
    """Base class for state-engine failures."""


class DomainError(EngineError):
    """A gate was applied to a basis label outside its declared domain."""


class OccupancyOverflowError(DomainError):
    """An operation would put two same-polarization photons in one mode."""


@dataclass(frozen=True)
class ModeOccupancy:
    """Photon content of one optical mode: counts per polarization, each 0 or 1."""

    n0: int
    n1: int

    def __post_init__(self):
        for n in (self.n0, self.n1):
            if n > 1:
                raise OccupancyOverflowError(
                    f"occupancy ({self.n0},{self.n1}) exceeds one photon per polarization"
                )
            if n < 0:
                raise EngineError(f"negative occupancy ({self.n0},{self.n1})")

    @property
    def code(self) -> int:
        return self.n0 + 2 * self.n1

    @property
    def photons(self) -> int:
        return self.n0 + self.n1

    def count(self, pol: int) -> int:
        return self.n1 if pol else self.n0

    def with_count(self, pol: int, n: int) -> "ModeOccupancy":
        return ModeOccupancy(self.n0, n) if pol else ModeOccupancy(n, self.n1)

    def __lt__(self, other: "ModeOccupancy") -> bool:
        return self.code < other.code

    def __str__(self) -> str:
        return _OCC_NAMES[self.code]

    def __repr__(self) -> str:
        return _OCC_NAMES[self.code].capitalize() if self.code in (0, 3) else f"Pol{self.n1}"


VAC = ModeOccupancy(0, 0)
POL0 = ModeOccupancy(1, 0)
POL1 = ModeOccupancy(0, 1)
PAIR = ModeOccupancy(1, 1)
OCCUPANCIES = (VAC, POL0, POL1, PAIR)
_OCC_NAMES = ("vac", "0", "1", "pair")

MODES = ("t", "x", "y")
REGISTERS = ("h",) + MODES

OccLike = Union[ModeOccupancy, int, str, None]


def occ(value: OccLike) -> ModeOccupancy:
    """Coerce shorthand (``'vac'``/None, 0, 1, ``'pair'``) to a ModeOccupancy."""
    if isinstance(value, ModeOccupancy):
        return value
    if value is None or value == "vac":
        return VAC
    if value == "pair":
        return PAIR
    if value in (0, 1, "0", "1"):
        return POL1 if int(value) else POL0
    raise EngineError(f"cannot interpret {value!r} as a mode occupancy")


class BasisLabel(NamedTuple):
    h: int
    t: ModeOccupancy
    x: ModeOccupancy
    y: ModeOccupancy

    @property
    def index(self) -> int:
        return self.h * 64 + self.t.code * 16 + self.x.code * 4 + self.y.code

    @property
    def photons(self) -> int:
        """Photon count over the optical modes (h excluded)."""
        return self.t.photons + self.x.photons + self.y.photons

    def get(self, register: str):
        return getattr(self, register)

    def set(self, register: str, value) -> "BasisLabel":
        return self._replace(**{register: value})

    def __str__(self) -> str:
        return f"{self.h},{self.t},{self.x},{self.y}"


def label(h: int, t: OccLike, x: OccLike, y: OccLike) -> BasisLabel:
    if h not in (0, 1):
        raise EngineError(f"home polarization must be 0 or 1, got {h!r}")
    return BasisLabel(int(h), occ(t), occ(x), occ(y))


LABELS: tuple[BasisLabel, ...] = tuple(
    BasisLabel(h, t, x, y)
    for h in (0, 1)
    for t in OCCUPANCIES
    for x in OCCUPANCIES
    for y in OCCUPANCIES
)
assert all(lab.index == i for i, lab in enumerate(LABELS))

_LABEL_PHOTONS = np.array([lab.photons for lab in LABELS])


def _check_register(register: str, allow_h: bool = True) -> None:
    allowed = REGISTERS if allow_h else MODES
    if register not in allowed:
        raise EngineError(f"unknown register {register!r}; expected one of {allowed}")


# --------------------------------------------------------------------------
# State vectors


class StateVector:
    """Immutable vector of 128 complex amplitudes indexed by :data:`LABELS`."""

    __slots__ = ("_psi",)

    def __init__(self, amplitudes: Union[Mapping[BasisLabel, complex], np.ndarray]):
        if isinstance(amplitudes, Mapping):
            psi = np.zeros(DIM, dtype=np.complex128)
            for lab, amp in amplitudes.items():
                psi[lab.index] += amp
        else:
            psi = np.array(amplitudes, dtype=np.complex128)
            if psi.shape != (DIM,):
                raise EngineError(f"expected {DIM} amplitudes, got shape {psi.shape}")
        psi.setflags(write=False)
        self._psi = psi

    @classmethod
    def _wrap(cls, psi: np.ndarray) -> "StateVector":
        obj = cls.__new__(cls)
        psi.setflags(write=False)
        obj._psi = psi
        return obj

    @classmethod
    def from_terms(cls, terms: Iterable[tuple[complex, BasisLabel]]) -> "StateVector":
        psi = np.zeros(DIM, dtype=np.complex128)
        for amp, lab in terms:
            psi[lab.index] += amp
        return cls._wrap(psi)

    @classmethod
    def basis(cls, lab: BasisLabel) -> "StateVector":
        return cls.from_terms([(1.0, lab)])

    @property
    def amplitudes(self) -> np.ndarray:
        return self._psi

    def amplitude(self, lab: BasisLabel) -> complex:
        return complex(self._psi[lab.index])

    def items(self, tol: float = SUPPORT_TOL) -> Iterator[tuple[BasisLabel, complex]]:
        for i in np.flatnonzero(np.abs(self._psi) > tol):
            yield LABELS[i], complex(self._psi[i])

    def support(self, tol: float = SUPPORT_TOL) -> list[BasisLabel]:
        return [lab for lab, _ in self.items(tol)]

    def norm(self) -> float:
        return math.sqrt(kernels.norm2(self._psi))

    def normalized(self) -> "StateVector":
        return StateVector._wrap(self._psi / self.norm())

    def canonical(self) -> "StateVector":
        """Copy with the global phase fixed: largest amplitude made real positive.

        Ties in magnitude (to 12 digits) go to the first label in basis order.
        """
        mags = np.round(np.abs(self._psi), 12)
        i = int(np.argmax(mags))
        if mags[i] == 0:
            return self
        phase = self._psi[i] / abs(self._psi[i])
        return StateVector._wrap(self._psi / phase)

    def max_deviation(self, other: "StateVector", up_to_phase: bool = False) -> float:
        a, b = (self.canonical(), other.canonical()) if up_to_phase else (self, other)
        return float(np.max(np.abs(a._psi - b._psi)))

    def allclose(self, other: "StateVector", atol: float = 1e-12, up_to_phase: bool = False) -> bool:
        return self.max_deviation(other, up_to_phase) <= atol

    def dump(self, tol: float | None = None) -> str:
        """One line per label, ``h,t,x,y,re,im``, in basis order.

        With ``tol`` set, rows with ``|amp| <= tol`` are dropped.
        """
        lines = []
        for i, lab in enumerate(LABELS):
            amp = self._psi[i]
            if tol is None or abs(amp) > tol:
                lines.append(f"{lab},{amp.real:.17g},{amp.imag:.17g}")
        return "\n".join(lines)

    def __repr__(self) -> str:
        terms = " + ".join(f"({amp:.6g})|{lab}>" for lab, amp in self.items())
        return f"StateVector({terms or '0'})"


# --------------------------------------------------------------------------
# Gates

_OK, _OUTSIDE, _OVERFLOW = 0, 1, 2

Action = Callable[[BasisLabel], Iterable[tuple[BasisLabel, complex]]]


class GateSpec:
    """A linear map on the 128-label space, defined on a declared subset of labels.

    ``G @ F`` is the operator product with ``F`` acting first, matching the
    right-to-left reading of operator strings like ``SWAP_tx CPBS_txy H_y``.
    """

    __slots__ = ("name", "matrix", "domain_code", "_cols", "_rows", "_data")

    def __init__(self, name: str, matrix: np.ndarray, domain_code: np.ndarray):
        matrix = np.where(np.abs(matrix) < _CLEAN_TOL, 0.0, matrix).astype(np.complex128)
        matrix[:, domain_code != _OK] = 0.0
        matrix.setflags(write=False)
        domain_code = np.asarray(domain_code, dtype=np.int8)
        domain_code.setflags(write=False)
        self.name = name
        self.matrix = matrix
        self.domain_code = domain_code
        rows, cols = np.nonzero(matrix.T)  # column-major order
        self._cols = np.ascontiguousarray(rows, dtype=np.intp)
        self._rows = np.ascontiguousarray(cols, dtype=np.intp)
        self._data = np.ascontiguousarray(matrix[self._rows, self._cols])

    @classmethod
    def from_action(cls, name: str, action: Action) -> "GateSpec":
        """Build from a per-label action; raising DomainError marks a label undefined."""
        matrix = np.zeros((DIM, DIM), dtype=np.complex128)
        code = np.zeros(DIM, dtype=np.int8)
        for lab in LABELS:
            try:
                for out, amp in action(lab):
                    matrix[out.index, lab.index] += amp
            except OccupancyOverflowError:
                code[lab.index] = _OVERFLOW
                matrix[:, lab.index] = 0.0
            except DomainError:
                code[lab.index] = _OUTSIDE
                matrix[:, lab.index] = 0.0
        return cls(name, matrix, code)

    @property
    def domain(self) -> np.ndarray:
        return self.domain_code == _OK

    def in_domain(self, lab: BasisLabel) -> bool:
        return bool(self.domain_code[lab.index] == _OK)

    def action(self, lab: BasisLabel) -> list[tuple[BasisLabel, complex]]:
        if not self.in_domain(lab):
            raise DomainError(f"{self.name} is undefined on |{lab}>")
        col = self.matrix[:, lab.index]
        return [(LABELS[i], complex(col[i])) for i in np.flatnonzero(col)]

    def __matmul__(self, first: "GateSpec") -> "GateSpec":
        # first acts, then self
        image_hits = np.abs(first.matrix) > SUPPORT_TOL
        code = first.domain_code.copy()
        live = code == _OK
        hits_overflow = image_hits[self.domain_code == _OVERFLOW].any(axis=0)
        hits_outside = image_hits[self.domain_code == _OUTSIDE].any(axis=0)
        code[live & hits_outside] = _OUTSIDE
        code[live & hits_overflow] = _OVERFLOW
        return GateSpec(f"{self.name}*{first.name}", self.matrix @ first.matrix, code)

    def inverse(self, name: str | None = None) -> "GateSpec":
        """Adjoint restricted to the image of the domain."""
        dom = self.domain
        image = (np.abs(self.matrix[:, dom]) > SUPPORT_TOL).any(axis=1)
        code = np.where(image, _OK, _OUTSIDE).astype(np.int8)
        return GateSpec(name or f"{self.name}^-1", self.matrix.conj().T, code)

    def renamed(self, name: str) -> "GateSpec":
        return GateSpec(name, self.matrix.copy(), self.domain_code.copy())

    def unitarity_defect(self) -> float:
        """Max deviation of the domain columns from an orthonormal set."""
        block = self.matrix[:, self.domain]
        gram = block.conj().T @ block
        return float(np.max(np.abs(gram - np.eye(gram.shape[0])))) if gram.size else 0.0

    def conserves_photons(self) -> bool:
        dom = np.flatnonzero(self.domain)
        nz = np.abs(self.matrix[:, dom]) > SUPPORT_TOL
        out_n = np.where(nz, _LABEL_PHOTONS[:, None], -1)
        return bool(np.all((out_n == -1) | (out_n == _LABEL_PHOTONS[dom][None, :])))

    def __repr__(self) -> str:
        return f"GateSpec({self.name!r}, domain={int(self.domain.sum())}/{DIM})"


def product(*gates: GateSpec, name: str | None = None) -> GateSpec:
    """Operator product ``gates[0] @ gates[1] @ ...``; the last gate acts first."""
    if not gates:
        return gate_identity()
    out = gates[-1]
    for g in reversed(gates[:-1]):
        out = g @ out
    return out.renamed(name) if name else out


def apply(gate: GateSpec, state: StateVector) -> StateVector:
    psi = state.amplitudes
    out = np.empty(DIM, dtype=np.complex128)
    bad = kernels.apply_coo(
        gate._cols, gate._rows, gate._data, gate.domain_code, psi, out, SUPPORT_TOL
    )
    if bad >= 0:
        lab = LABELS[bad]
        if gate.domain_code[bad] == _OVERFLOW:
            raise OccupancyOverflowError(f"{gate.name} overflows a mode on |{lab}>")
        raise DomainError(f"{gate.name} is undefined on |{lab}>")
    n_in, n_out = kernels.norm2(psi), kernels.norm2(out)
    if abs(n_out - n_in) > NORM_TOL * max(1.0, n_in):
        raise EngineError(f"{gate.name} changed the norm: {n_in!r} -> {n_out!r}")
    return StateVector._wrap(out)


def apply_all(state: StateVector, *gates: GateSpec) -> StateVector:
    """Apply gates in the order given (first argument acts first)."""
    for g in gates:
        state = apply(g, state)
    return state


_IDENTITY: GateSpec | None = None


def gate_identity() -> GateSpec:
    global _IDENTITY
    if _IDENTITY is None:
        _IDENTITY = GateSpec("I", np.eye(DIM, dtype=np.complex128), np.zeros(DIM, np.int8))
    return _IDENTITY


def gate_hadamard(mode: str) -> GateSpec:
    _check_register(mode)

    def act(lab):
        v = lab.get(mode)
        if mode == "h":
            return [(lab.set("h", 0), INV_SQRT2), (lab.set("h", 1), INV_SQRT2 * (1 - 2 * v))]
        if v == VAC:
            return [(lab, 1.0)]
        if v == PAIR:
            raise DomainError("Hadamard on a two-photon mode")
        sign = -1.0 if v == POL1 else 1.0
        return [(lab.set(mode, POL0), INV_SQRT2), (lab.set(mode, POL1), sign * INV_SQRT2)]

    return GateSpec.from_action(f"H_{mode}", act)


def gate_swap(mode_a: str, mode_b: str) -> GateSpec:
    _check_register(mode_a, allow_h=False)
    _check_register(mode_b, allow_h=False)
    if mode_a == mode_b:
        raise EngineError("SWAP needs two distinct modes")

    def act(lab):
        return [(lab._replace(**{mode_a: lab.get(mode_b), mode_b: lab.get(mode_a)}), 1.0)]

    return GateSpec.from_action(f"SWAP_{mode_a}{mode_b}", act)


# The four ways a polarizing beam splitter can pick its reflected polarization
# from the control polarization c: r = c, r = 1 - c, r = 0, r = 1.
CPBS_CONVENTIONS: dict[int, tuple[str, Callable[[int], int]]] = {
    0: ("reflect control polarization", lambda c: c),
    1: ("reflect opposite polarization", lambda c: 1 - c),
    2: ("always reflect 0", lambda c: 0),
    3: ("always reflect 1", lambda c: 1),
}
CPBS_DEFAULT = 0


def gate_cpbs(control: str = "t", port_a: str = "x", port_b: str = "y",
              convention: int = CPBS_DEFAULT) -> GateSpec:
    """Controlled polarizing beam splitter.

    With the control mode holding one photon of polarization ``c``, every
    photon of the reflected polarization ``r(c)`` is exchanged between the
    two ports; photons of the other polarization stay put. An empty control
    leaves everything alone; a two-photon control is undefined.
    """
    reflect = CPBS_CONVENTIONS[convention][1]

    def act(lab):
        c = lab.get(control)
        if c == VAC:
            return [(lab, 1.0)]
        if c == PAIR:
            raise DomainError("CPBS control holds two photons")
        r = reflect(c.n1)
        a, b = lab.get(port_a), lab.get(port_b)
        new_a = a.with_count(r, b.count(r))
        new_b = b.with_count(r, a.count(r))
        return [(lab._replace(**{port_a: new_a, port_b: new_b}), 1.0)]

    return GateSpec.from_action(f"CPBS_{control}{port_a}{port_b}", act)


def gate_pauli(target: str, which: str) -> GateSpec:
    """Z: phase -1 per polarization-1 photon present; X: exchange polarizations."""
    _check_register(target)
    if which not in ("Z", "X"):
        raise EngineError(f"unknown Pauli {which!r}")

    def act(lab):
        v = lab.get(target)
        if target == "h":
            if which == "Z":
                return [(lab, -1.0 if v else 1.0)]
            return [(lab.set("h", 1 - v), 1.0)]
        if which == "Z":
            return [(lab, -1.0 if v.n1 else 1.0)]
        return [(lab.set(target, ModeOccupancy(v.n1, v.n0)), 1.0)]

    return GateSpec.from_action(f"{which}_{target}", act)


def gate_cnot(control: str, target: str) -> GateSpec:
    """Flip the target's polarization when the control holds polarization 1."""
    _check_register(control)
    _check_register(target)
    if control == target:
        raise EngineError("CNOT needs distinct control and target")

    def act(lab):
        c = lab.get(control)
        if control != "h":
            if c == PAIR:
                raise DomainError("CNOT control holds two photons")
            active = c == POL1
        else:
            active = c == 1
        if not active:
            return [(lab, 1.0)]
        v = lab.get(target)
        if target == "h":
            return [(lab.set("h", 1 - v), 1.0)]
        if v in (VAC, PAIR):
            raise DomainError("CNOT target has no single photon to flip")
        return [(lab.set(target, ModeOccupancy(v.n1, v.n0)), 1.0)]

    return GateSpec.from_action(f"CNOT_{control}{target}", act)


def _bell_action(lab: BasisLabel):
    # Maps Bell states of (h, t-polarization) to product labels:
    # Phi+ -> (0,Pol0), Phi- -> (1,Pol0), Psi+ -> (0,Pol1), Psi- -> (1,Pol1).
    if lab.t not in (POL0, POL1):
        return [(lab, 1.0)]
    h, p = lab.h, lab.t.n1
    # |h,p> = sum over Bell states; CNOT_{h->p} then H_h
    p2 = p ^ h
    sign = -1.0 if h else 1.0
    t_occ = POL1 if p2 else POL0
    return [
        (BasisLabel(0, t_occ, lab.x, lab.y), INV_SQRT2),
        (BasisLabel(1, t_occ, lab.x, lab.y), sign * INV_SQRT2),
    ]


BELL_ROTATION = GateSpec.from_action("BELL", _bell_action)
BELL_ROTATION_INV = BELL_ROTATION.inverse("BELL^-1")


# --------------------------------------------------------------------------
# Measurements

PSI_PLUS, PSI_MINUS, PHI_PLUS, PHI_MINUS, LOSS = "psi+", "psi-", "phi+", "phi-", "loss"
VACUUM, TWO_PHOTON = "vac", "two-photon"
_POL_VALUES = (VACUUM, 0, 1, TWO_PHOTON)
_BELL_VALUES = (PHI_PLUS, PHI_MINUS, PSI_PLUS, PSI_MINUS, LOSS)


@dataclass(frozen=True)
class MeasurementOutcome:
    register: str
    basis: str
    value: Union[int, str]
    probability: float


def _pol_classes(register: str) -> np.ndarray:
    if register == "h":
        return np.array([lab.h + 1 for lab in LABELS], dtype=np.intp)
    return np.array([lab.get(register).code for lab in LABELS], dtype=np.intp)


def _bell_classes() -> np.ndarray:
    out = []
    for lab in LABELS:
        if lab.t in (POL0, POL1):
            out.append(lab.h + 2 * lab.t.n1)
        else:
            out.append(4)
    return np.array(out, dtype=np.intp)


_CLASSES = {reg: _pol_classes(reg) for reg in REGISTERS}
_CLASSES["bell"] = _bell_classes()
_OCCUPANCY_COUNT = {reg: np.array([lab.get(reg).photons for lab in LABELS], dtype=np.intp)
                    for reg in MODES}
_HADAMARDS: dict[str, GateSpec] = {}


def _hadamard_cached(register: str) -> GateSpec:
    if register not in _HADAMARDS:
        _HADAMARDS[register] = gate_hadamard(register)
    return _HADAMARDS[register]


def _weights(state: StateVector, classes: np.ndarray, n: int) -> np.ndarray:
    w = np.empty(n)
    kernels.class_weights(state.amplitudes, classes, w)
    return w


def _pick(weights: np.ndarray, u: float) -> int:
    total = 0.0
    last = -1
    for i, w in enumerate(weights):
        if w <= 0.0:
            continue
        total += w
        last = i
        if u < total:
            return i
    if last < 0:
        raise EngineError("cannot measure the zero vector")
    return last


def _collapse(state: StateVector, classes: np.ndarray, keep: int, weight: float) -> StateVector:
    out = np.empty(DIM, dtype=np.complex128)
    kernels.project(state.amplitudes, classes, keep, weight, out)
    return StateVector._wrap(out)


def _check_basis(register: str, basis: str) -> None:
    _check_register(register)
    if basis not in ("z", "x"):
        raise EngineError(f"unknown polarization basis {basis!r}")


def polarization_branches(state: StateVector, register: str, basis: str = "z"):
    """All outcomes with positive probability as ``(value, probability, post_state)``."""
    _check_basis(register, basis)
    rotated = apply(_hadamard_cached(register), state) if basis == "x" else state
    classes = _CLASSES[register]
    values = (0, 1) if register == "h" else _POL_VALUES
    offset = 1 if register == "h" else 0
    w = _weights(rotated, classes, 4)
    branches = []
    for i, value in enumerate(values):
        p = float(w[i + offset])
        if p <= SUPPORT_TOL**2:
            continue
        post = _collapse(rotated, classes, i + offset, p)
        if basis == "x":
            post = apply(_hadamard_cached(register), post)
        branches.append((value, p, post))
    return branches


def polarization_distribution(state: StateVector, register: str, basis: str = "z") -> dict:
    """Born probabilities of every polarization outcome (zeros included)."""
    _check_basis(register, basis)
    rotated = apply(_hadamard_cached(register), state) if basis == "x" else state
    w = _weights(rotated, _CLASSES[register], 4)
    if register == "h":
        return {0: float(w[1]), 1: float(w[2])}
    return dict(zip(_POL_VALUES, map(float, w)))


def measure_polarization(state: StateVector, register: str, basis: str, rng) -> tuple[MeasurementOutcome, StateVector]:
    _check_basis(register, basis)
    h = _hadamard_cached(register)
    rotated = apply(h, state) if basis == "x" else state
    classes = _CLASSES[register]
    w = _weights(rotated, classes, 4)
    i = _pick(w, rng.random())
    post = _collapse(rotated, classes, i, float(w[i]))
    if basis == "x":
        post = apply(h, post)
    value = i - 1 if register == "h" else _POL_VALUES[i]
    return MeasurementOutcome(register, basis, value, float(w[i])), post


def bell_branches(state: StateVector):
    rotated = apply(BELL_ROTATION, state)
    classes = _CLASSES["bell"]
    w = _weights(rotated, classes, 5)
    branches = []
    for i, value in enumerate(_BELL_VALUES):
        p = float(w[i])
        if p <= SUPPORT_TOL**2:
            continue
        post = apply(BELL_ROTATION_INV, _collapse(rotated, classes, i, p))
        branches.append((value, p, post))
    return branches


def bell_distribution(state: StateVector) -> dict[str, float]:
    w = _weights(apply(BELL_ROTATION, state), _CLASSES["bell"], 5)
    return dict(zip(_BELL_VALUES, map(float, w)))


def measure_bell(state: StateVector, rng) -> tuple[MeasurementOutcome, StateVector]:
    """Bell measurement of (h, t); components where t is empty or doubly occupied read ``loss``."""
    rotated = apply(BELL_ROTATION, state)
    classes = _CLASSES["bell"]
    w = _weights(rotated, classes, 5)
    i = _pick(w, rng.random())
    post = apply(BELL_ROTATION_INV, _collapse(rotated, classes, i, float(w[i])))
    return MeasurementOutcome("ht", "bell", _BELL_VALUES[i], float(w[i])), post


def occupancy_distribution(state: StateVector, mode: str) -> dict[int, float]:
    _check_register(mode, allow_h=False)
    w = _weights(state, _OCCUPANCY_COUNT[mode], 3)
    return {n: float(w[n]) for n in range(3)}


_VACATE = {
    reg: np.array([lab.set(reg, VAC).index for lab in LABELS], dtype=np.intp) for reg in MODES
}


def vacate(state: StateVector, mode: str) -> StateVector:
    """Empty ``mode`` on every label. Only norm-preserving after a z-collapse of ``mode``."""
    psi = np.zeros(DIM, dtype=np.complex128)
    np.add.at(psi, _VACATE[mode], state.amplitudes)
    return StateVector._wrap(psi)


def lose_photons(state: StateVector, mode: str, rng) -> tuple[MeasurementOutcome, StateVector]:
    """Photon loss into the environment: whatever ``mode`` holds is removed.

    The environment is modelled as absorbing the content in the z basis, so
    the rest of the system collapses accordingly before ``mode`` is emptied.
    """
    outcome, post = measure_polarization(state, mode, "z", rng)
    if outcome.value == VACUUM:
        return outcome, post
    return outcome, vacate(post, mode)
