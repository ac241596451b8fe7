"""Verification suite behind ``pingpong verify``.

Two suites:

``properties``
    engine and protocol invariants: unitarity, involutions, photon-number
    conservation, inverse composition, exhaustive path safety, the CPBS
    convention search and exact-vs-Monte-Carlo agreement.
``claims``
    the closed-form states and numbers reported for the attacks, compared
    with what the engine actually produces.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Iterator

import numpy as np

from . import analysis, attack
from .attack import AttackVariant
from .engine import (
    CPBS_CONVENTIONS,
    DIM,
    LABELS,
    VACUUM,
    GateSpec,
    StateVector,
    apply,
    bell_branches,
    gate_cnot,
    gate_cpbs,
    gate_hadamard,
    gate_pauli,
    gate_swap,
    polarization_branches,
    vacate,
)
from .protocol import ChannelConfig, ProtocolConfig, detection_rule, run_session

SUITES = ("properties", "claims")

LOG2_3 = math.log2(3)
I_AE_CLAIM = 0.75 * math.log2(4 / 3)
I_BE_CLAIM = 1 - 1.5 * LOG2_3 + 0.625 * math.log2(5)
I_AB_SYM_CLAIM = 0.75 * LOG2_3 - 1
P_JKM_CLAIM = {(0, 0, 0): 0.5, (1, 0, 0): 0.125, (1, 0, 1): 0.125, (1, 1, 0): 0.125, (1, 1, 1): 0.125}


@dataclass(frozen=True)
class Check:
    name: str
    passed: bool
    measured: str = ""
    expected: str = ""
    suite: str = "properties"

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        detail = f" (measured {self.measured}; expected {self.expected})" if self.expected else ""
        return f"{self.name}: {status}{detail}"


def _fmt(x) -> str:
    return f"{x:.12g}" if isinstance(x, float) else str(x)


def _close(name, measured, expected, tol, suite) -> Check:
    ok = abs(measured - expected) <= tol
    return Check(name, ok, _fmt(measured), f"{_fmt(expected)} +/- {tol:g}", suite)


# --------------------------------------------------------------------------
# Named gates


def named_gates() -> dict[str, GateSpec]:
    gates = {}
    for reg in ("h", "t", "x", "y"):
        gates[f"H_{reg}"] = gate_hadamard(reg)
        gates[f"Z_{reg}"] = gate_pauli(reg, "Z")
        gates[f"X_{reg}"] = gate_pauli(reg, "X")
    for a, b in (("t", "x"), ("t", "y"), ("x", "y")):
        gates[f"SWAP_{a}{b}"] = gate_swap(a, b)
    gates["CPBS_txy"] = gate_cpbs()
    gates["CNOT_ty"] = gate_cnot("t", "y")
    gates["U"] = attack.build_U()
    gates["V"] = attack.build_V()
    gates["Q"] = attack.build_Q()
    gates["Q^-1"] = attack.build_Q_inverse()
    gates["W"] = attack.build_W()
    gates["W^-1"] = attack.build_W_inverse()
    gates["S_ty"] = attack.build_S()
    return gates


INVOLUTIONS = ("H_y", "SWAP_tx", "CPBS_txy", "U", "V", "X_t", "Z_t", "CNOT_ty", "S_ty")


def involution_defect(gate: GateSpec) -> float:
    """Max deviation of ``G G`` from the identity on G's domain."""
    sq = gate @ gate
    dom = gate.domain
    if not np.array_equal(sq.domain, dom):
        return math.inf
    return float(np.max(np.abs(sq.matrix[:, dom] - np.eye(DIM)[:, dom])))


def inverse_defect(gate: GateSpec, inverse: GateSpec) -> float:
    prod = inverse @ gate
    dom = gate.domain
    if not np.array_equal(prod.domain, dom):
        return math.inf
    return float(np.max(np.abs(prod.matrix[:, dom] - np.eye(DIM)[:, dom])))


# --------------------------------------------------------------------------
# Exhaustive path enumeration


def enumerate_paths(variant: AttackVariant, lossy: bool = True) -> Iterator[StateVector]:
    """Yield every intermediate state of every branch a protocol round can take.

    Mirrors :func:`pingpong.protocol.run_round` with each random choice and
    each measurement outcome expanded; engine errors propagate.
    """
    kind = variant.kind
    for attacked in ((True, False) if variant.active else (False,)):
        s0 = attack.make_initial(variant.active)
        yield s0
        s1 = attack.ba_attack(s0, kind) if attacked else s0
        yield s1
        outbound = [(False, s1)]
        if lossy:
            outbound += [(True, vacate(post, "t")) for _, _, post in polarization_branches(s1, "t", "z")]
        for lost, s in outbound:
            yield s
            for basis in ("z", "x"):
                for a, _, post in polarization_branches(s, "t", basis):
                    yield post
                    for b, _, post2 in polarization_branches(post, "h", basis):
                        yield post2
                        if a != VACUUM:
                            detection_rule(basis, a, b)
            for j in (0, 1):
                s2 = attack.encode(s, j)
                yield s2
                returned = [(lost, s2)]
                if lossy and not variant.active:
                    returned += [(True, vacate(post, "t")) for _, _, post in polarization_branches(s2, "t", "z")]
                for lost_back, s3 in returned:
                    finals = [s3]
                    if attacked and not lost_back:
                        s4 = attack.ab_attack(s3, kind)
                        yield s4
                        coins = (False, True) if variant.symmetrize else (False,)
                        finals = []
                        for coin in coins:
                            s5 = attack.symmetrize(s4, coin)
                            yield s5
                            finals += [post for _, _, post in attack.eve_branches(s5)]
                    for s6 in finals:
                        yield s6
                        for _, _, post in bell_branches(s6):
                            yield post


ALL_VARIANTS = (
    AttackVariant("none"),
    AttackVariant("wojcik"),
    AttackVariant("wojcik", True),
    AttackVariant("improved"),
    AttackVariant("improved", True),
)


def reachable_labels() -> list:
    """Union of supports over every enumerated path, in basis order."""
    seen = np.zeros(DIM, dtype=bool)
    for v in ALL_VARIANTS:
        for s in enumerate_paths(v):
            seen |= np.abs(s.amplitudes) > 1e-12
    return [LABELS[i] for i in np.flatnonzero(seen)]


def random_state(labels, rng) -> StateVector:
    amps = rng.normal(size=len(labels)) + 1j * rng.normal(size=len(labels))
    amps /= np.linalg.norm(amps)
    return StateVector.from_terms(zip(amps, labels))


# --------------------------------------------------------------------------
# Suites


def property_checks(rounds: int = 100_000, seed: int = 0) -> Iterator[Check]:
    search = attack.cpbs_convention_search()
    winners = [c for c, dev in search.items() if dev < 1e-12]
    if len(winners) == 1:
        yield Check(f"CPBS convention search: convention #{winners[0]} selected "
                    f"({CPBS_CONVENTIONS[winners[0]][0]})", True)
    else:
        yield Check("CPBS convention search", False, f"{len(winners)} conventions match", "exactly 1")

    gates = named_gates()
    for name, g in gates.items():
        yield _close(f"unitarity {name}", g.unitarity_defect(), 0.0, 1e-12, "properties")
    for name, g in gates.items():
        yield Check(f"photon conservation {name}", g.conserves_photons())
    for name in INVOLUTIONS:
        yield _close(f"involution {name}", involution_defect(gates[name]), 0.0, 1e-12, "properties")
    yield _close("inverse Q^-1 Q", inverse_defect(gates["Q"], gates["Q^-1"]), 0.0, 1e-12, "properties")
    yield _close("inverse W^-1 W", inverse_defect(gates["W"], gates["W^-1"]), 0.0, 1e-12, "properties")
    init = attack.make_initial()
    back = apply(gates["W^-1"], apply(gates["W"], init))
    yield _close("W^-1 W |initial>", back.max_deviation(init), 0.0, 1e-12, "properties")

    rng = np.random.default_rng(seed)
    labels = [lab for lab in reachable_labels() if gates["W"].in_domain(lab)]
    worst_norm = worst_inv = 0.0
    for _ in range(100):
        s = random_state(labels, rng)
        w = apply(gates["W"], s)
        worst_norm = max(worst_norm, abs(w.norm() - s.norm()))
        worst_inv = max(worst_inv, apply(gates["W^-1"], w).max_deviation(s))
    yield _close("norm preservation W (100 random reachable states)", worst_norm, 0.0, 1e-9, "properties")
    yield _close("W^-1 W on random reachable states", worst_inv, 0.0, 1e-12, "properties")

    for v in ALL_VARIANTS:
        try:
            n = sum(1 for _ in enumerate_paths(v))
            yield Check(f"reachability {v}", True, f"{n} states visited, no domain errors")
        except Exception as exc:  # noqa: BLE001
            yield Check(f"reachability {v}", False, repr(exc), "no domain errors")

    yield from monte_carlo_checks(rounds, seed)


def monte_carlo_checks(rounds: int, seed: int) -> Iterator[Check]:
    for i, v in enumerate((AttackVariant("improved"), AttackVariant("wojcik"),
                           AttackVariant("improved", True))):
        cfg = ProtocolConfig(control_probability=0.0, attack=v, rounds=rounds, seed=seed + i)
        stats = run_session(cfg)
        tv = analysis.exact_joint(v).total_variation(analysis.JointDistribution.from_counts(stats.joint))
        yield Check(f"exact vs Monte Carlo joint {v}", tv < 0.01, _fmt(tv), "< 0.01")

    ctl = dict(control_probability=1.0, rounds=rounds)
    st = run_session(ProtocolConfig(attack=AttackVariant("improved"), seed=seed + 10, **ctl))
    yield Check("MC improved z-detection rate", st.detections == 0, f"{st.detections}/{st.control_rounds}", "0")
    yield Check("MC improved photon-found rate", st.photons_found == st.control_rounds,
                f"{st.photons_found}/{st.control_rounds}", "all")
    yield _sigma_check("MC wojcik photon-found rate",
                       run_session(ProtocolConfig(attack=AttackVariant("wojcik"), seed=seed + 11, **ctl)),
                       lambda s: (s.photons_found, s.control_rounds), 0.5)
    yield _sigma_check("MC improved two-basis detection rate",
                       run_session(ProtocolConfig(attack=AttackVariant("improved"), two_basis_control=True,
                                                  seed=seed + 12, **ctl)),
                       lambda s: (s.detections, s.control_rounds), 0.25)
    st = run_session(ProtocolConfig(two_basis_control=True, seed=seed + 13, **ctl), ChannelConfig(0.7))
    yield Check("MC no-attack detection rate (eta=0.7, two-basis)", st.detections == 0,
                f"{st.detections}/{st.control_rounds}", "0")


def _sigma_check(name, stats, extract: Callable, p: float) -> Check:
    k, n = extract(stats)
    sigma = math.sqrt(p * (1 - p) / n)
    rate = k / n
    return Check(name, abs(rate - p) <= 3 * sigma, _fmt(rate), f"{p} +/- 3 sigma ({3 * sigma:.2g})")


def claim_checks(rounds: int = 100_000, seed: int = 0) -> Iterator[Check]:
    S = "claims"
    init = attack.make_initial()
    after_ba = attack.ba_attack(init, "improved")
    yield _close("outbound-state oracle", after_ba.max_deviation(attack.expected_after_ba()), 0.0, 1e-12, S)
    for j in (0, 1):
        ab = attack.ab_attack(attack.encode(after_ba, j), "improved")
        yield _close(f"return-state oracle j={j}", ab.max_deviation(attack.expected_after_ab(j), True), 0.0, 1e-12, S)
        sym = attack.symmetrize(ab, True)
        yield _close(f"symmetrized-state oracle j={j}",
                     sym.max_deviation(attack.expected_after_symmetrization(j), True), 0.0, 1e-12, S)

    improved = AttackVariant("improved")
    table = analysis.exact_joint(improved).table()
    dev = max(abs(table.get(key, 0.0) - P_JKM_CLAIM.get(key, 0.0)) for key in set(table) | set(P_JKM_CLAIM))
    yield _close("p_jkm improved", dev, 0.0, 1e-12, S)
    rep = analysis.info_report(improved)
    yield _close("I_AE improved", rep.I_AE, I_AE_CLAIM, 1e-6, S)
    yield _close("I_AB improved", rep.I_AB, I_AE_CLAIM, 1e-6, S)
    yield _close("I_BE improved", rep.I_BE, I_BE_CLAIM, 1e-6, S)
    sym = analysis.info_report(AttackVariant("improved", True))
    yield _close("symmetrized I_AB improved", sym.I_AB, I_AB_SYM_CLAIM, 1e-6, S)
    yield _close("symmetrized I_AE improved (coin known)", sym.I_AE, I_AE_CLAIM, 1e-6, S)
    yield _close("QBER improved", rep.qber, 0.25, 1e-12, S)
    yield _close("QBER no attack", analysis.info_report(AttackVariant("none")).qber, 0.0, 1e-12, S)
    yield _close("induced loss improved", rep.induced_loss, 0.0, 0.0, S)
    yield _close("induced loss wojcik", analysis.induced_loss("wojcik"), 0.5, 1e-12, S)
    yield _close("detection z improved", rep.detection_z, 0.0, 0.0, S)
    yield _close("detection two-basis improved", rep.detection_two_basis, 0.25, 1e-12, S)

    woj = analysis.exact_joint(AttackVariant("wojcik")).table()
    dev = max(abs(woj.get(key, 0.0) - P_JKM_CLAIM.get(key, 0.0)) for key in set(woj) | set(P_JKM_CLAIM))
    yield _close("p_jkm wojcik baseline", dev, 0.0, 1e-12, S)

    yield from sweep_checks()


def sweep_checks() -> Iterator[Check]:
    S = "claims"
    grid = analysis.eta_grid(0.0, 1.0, 101)
    rows = analysis.sweep(grid)
    imp = [r for r in rows if r.variant == "improved"]
    woj = [r for r in rows if r.variant == "wojcik"]
    yield Check("sweep improved f* == 1", all(r.f_star == 1.0 for r in imp), "", "", S)
    worst = max(imp, key=lambda r: abs(r.I_AE_eff - I_AE_CLAIM))
    yield _close("sweep improved I_AE_eff (worst grid point)", worst.I_AE_eff, I_AE_CLAIM, 1e-6, S)
    expected = [1.0 if r.eta <= 0.5 else (1 - r.eta) / 0.5 for r in woj]
    worst = max(abs(r.f_star - e) for r, e in zip(woj, expected))
    yield _close("sweep wojcik f*(eta)", worst, 0.0, 1e-12, S)
    yield _close("sweep wojcik f*(1)", woj[-1].f_star, 0.0, 1e-12, S)
    sym_ab = analysis.info_report(AttackVariant("improved", True)).I_AB
    ok = all(r.I_AE_eff >= sym_ab for r in imp)
    low = min(r.I_AE_eff for r in imp)
    yield Check("sweep improved I_AE_eff >= symmetrized I_AB", ok, _fmt(low), f">= {_fmt(sym_ab)}", S)


def run_checks(suites=SUITES, rounds: int = 100_000, seed: int = 0) -> list[Check]:
    out: list[Check] = []
    if "properties" in suites:
        out.extend(property_checks(rounds, seed))
    if "claims" in suites:
        out.extend(claim_checks(rounds, seed))
    return out
