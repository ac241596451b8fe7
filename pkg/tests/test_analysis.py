import math
import itertools

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pingpong import analysis
from pingpong.analysis import (
    JointDistribution,
    attack_fraction_limit,
    detection_probability,
    entropy,
    exact_joint,
    induced_loss,
    info_report,
    mix,
    mutual_information,
    oracle_joint,
    qber,
    sweep,
)
from pingpong.attack import AttackVariant

LOG2_3 = math.log2(3)
I_34 = 0.75 * math.log2(4 / 3)          # 0.311278...
I_BE_CLOSED = 1 - 1.5 * LOG2_3 + 0.625 * math.log2(5)   # 0.073761...
I_SYM = 0.75 * LOG2_3 - 1               # 0.188722...
P_JKM = {(0, 0, 0): 0.5, (1, 0, 0): 0.125, (1, 0, 1): 0.125, (1, 1, 0): 0.125, (1, 1, 1): 0.125}


def brute_mi(pxy):
    """I(X;Y) = H(X) + H(Y) - H(X,Y) from a dict {(x, y): p}."""
    px, py = {}, {}
    for (x, y), p in pxy.items():
        px[x] = px.get(x, 0) + p
        py[y] = py.get(y, 0) + p

    def h(d):
        return -sum(p * math.log2(p) for p in d.values() if p > 0)
    return h(px) + h(py) - h(pxy)


def table_dev(a, b):
    return max(abs(a.get(k, 0.0) - b.get(k, 0.0)) for k in set(a) | set(b))


def test_closed_form_values():
    assert I_34 == pytest.approx(0.311278, abs=1e-6)
    assert I_BE_CLOSED == pytest.approx(0.073761, abs=1e-6)
    assert I_SYM == pytest.approx(0.188722, abs=1e-6)


def test_entropy():
    assert entropy([0.5, 0.5]) == 1.0
    assert entropy([1.0, 0.0]) == 0.0


class TestMutualInformation:
    def test_independent_uniform(self):
        joint = JointDistribution({(j, k, m, 0): 1 / 8 for j, k, m in itertools.product((0, 1), repeat=3)})
        for pair in ("AE", "AB", "BE"):
            assert mutual_information(joint, pair) == 0.0

    def test_perfect_channel(self):
        joint = JointDistribution({(0, None, 0, 0): 0.5, (1, None, 1, 0): 0.5})
        assert mutual_information(joint, "AB") == pytest.approx(1.0)

    def test_matches_closed_forms_on_reference_table(self):
        joint = JointDistribution({(j, k, m, 0): p for (j, k, m), p in P_JKM.items()})
        assert mutual_information(joint, "AE") == pytest.approx(I_34, abs=1e-12)
        assert mutual_information(joint, "AB") == pytest.approx(I_34, abs=1e-12)
        assert mutual_information(joint, "BE") == pytest.approx(I_BE_CLOSED, abs=1e-12)

    def test_bad_pair(self):
        with pytest.raises(ValueError):
            mutual_information(exact_joint("none"), "AX")

    @given(st.lists(st.floats(0.0, 1.0), min_size=16, max_size=16).filter(lambda w: sum(w) > 1e-3))
    @settings(max_examples=60, deadline=None)
    def test_agrees_with_brute_force(self, weights):
        z = sum(weights)
        keys = list(itertools.product((0, 1), (0, 1), (0, 1), (0, 1)))
        joint = JointDistribution({k: w / z for k, w in zip(keys, weights)})
        project = {
            "AE": lambda j, k, m, c: (j, (k, c)),
            "AB": lambda j, k, m, c: (j, m),
            "BE": lambda j, k, m, c: (m, (k, c)),
        }
        for pair, key_of in project.items():
            merged = {}
            for key, p in joint.probs.items():
                merged[key_of(*key)] = merged.get(key_of(*key), 0.0) + p
            expected = brute_mi(merged)
            got = mutual_information(joint, pair)
            assert got == pytest.approx(max(expected, 0.0), abs=1e-12)
            assert 0.0 <= got <= 1.0 + 1e-12


class TestExactJoint:
    def test_sums_to_one(self):
        for v in ("none", "wojcik", "improved", AttackVariant("improved", True),
                  AttackVariant("wojcik", True)):
            assert exact_joint(v).total() == pytest.approx(1.0, abs=1e-12)

    def test_no_attack(self):
        table = exact_joint("none").table()
        assert table_dev(table, {(0, None, 0): 0.5, (1, None, 1): 0.5}) < 1e-12

    def test_wojcik_reference_table(self):
        assert table_dev(exact_joint("wojcik").table(), P_JKM) < 1e-12

    def test_wojcik_information(self):
        rep = info_report("wojcik")
        assert rep.I_AE == pytest.approx(I_34, abs=1e-12)
        assert rep.I_AB == pytest.approx(I_34, abs=1e-12)
        assert rep.I_BE == pytest.approx(I_BE_CLOSED, abs=1e-12)
        assert rep.qber == pytest.approx(0.25, abs=1e-12)

    def test_wojcik_symmetry(self):
        joint = exact_joint("wojcik")
        jk = {(j, k): p for (j, k), p in joint.marginal("j", "k").items()}
        jm = {(j, m): p for (j, m), p in joint.marginal("j", "m").items()}
        assert table_dev(jk, jm) < 1e-12

    def test_improved_engine_values(self):
        # Eve's ancilla ends untouched, Bob decodes perfectly
        table = exact_joint("improved").table()
        assert table_dev(table, {(0, 0, 0): 0.5, (1, 0, 1): 0.5}) < 1e-12
        rep = info_report("improved")
        assert rep.I_AE == 0.0
        assert rep.I_AB == pytest.approx(1.0, abs=1e-12)
        assert rep.qber == 0.0

    def test_improved_symmetrized_engine_values(self):
        rep = info_report(AttackVariant("improved", True))
        assert rep.I_AB == pytest.approx(I_SYM, abs=1e-9)
        assert rep.I_AE == 0.0
        assert rep.qber == pytest.approx(0.25, abs=1e-12)

    def test_accepts_variant_or_str(self):
        assert exact_joint("improved") == exact_joint(AttackVariant("improved"))


class TestOracleJoint:
    def test_reference_table(self):
        assert table_dev(oracle_joint(False).table(), P_JKM) < 1e-12

    def test_information(self):
        joint = oracle_joint(False)
        assert mutual_information(joint, "AE") == pytest.approx(I_34, abs=1e-12)
        assert mutual_information(joint, "BE") == pytest.approx(I_BE_CLOSED, abs=1e-12)
        assert qber(joint) == pytest.approx(0.25, abs=1e-12)

    def test_symmetrized(self):
        joint = oracle_joint(True)
        assert mutual_information(joint, "AB") == pytest.approx(I_SYM, abs=1e-12)
        assert mutual_information(joint, "AE") == pytest.approx(I_34, abs=1e-12)

    def test_coin_true_j1_single_outcome(self):
        cond = oracle_joint(True).condition(c=1, j=1)
        assert cond.table() == pytest.approx({(1, 1, 1): 1.0})


class TestQber:
    def test_none(self):
        assert qber(exact_joint("none")) == 0.0

    def test_half_mixture(self):
        mixed = mix([(0.5, exact_joint("wojcik")), (0.5, exact_joint("none"))])
        assert qber(mixed) == pytest.approx(0.125, abs=1e-12)

    def test_loss_excluded(self):
        joint = JointDistribution({(0, None, "loss", 0): 0.5, (0, None, 1, 0): 0.25, (0, None, 0, 0): 0.25})
        assert qber(joint) == pytest.approx(0.5)


class TestLossAndDetection:
    def test_induced_loss(self):
        assert induced_loss("improved") == 0.0
        assert induced_loss("wojcik") == pytest.approx(0.5, abs=1e-12)
        assert induced_loss("none") == 0.0

    def test_detection(self):
        assert detection_probability("improved", False) == 0.0
        assert detection_probability("improved", True) == pytest.approx(0.25, abs=1e-12)
        assert detection_probability("none", True) == 0.0
        assert detection_probability("none", False) == 0.0


class TestAttackFractionLimit:
    @pytest.mark.parametrize("s,eta,expected", [
        (1.0, 0.9, 1.0),
        (1.0, 0.0, 1.0),
        (0.5, 0.5, 1.0),
        (0.5, 0.75, 0.5),
        (0.5, 1.0, 0.0),
        (0.5, 0.2, 1.0),
    ])
    def test_examples(self, s, eta, expected):
        assert attack_fraction_limit(s, eta) == pytest.approx(expected, abs=1e-12)

    def test_monotone(self):
        grid = analysis.eta_grid(0.0, 1.0, 201)
        f = [attack_fraction_limit(0.5, e) for e in grid]
        assert all(a >= b for a, b in zip(f, f[1:]))
        assert all(v == 1.0 for e, v in zip(grid, f) if e <= 0.5)

    def test_range(self):
        with pytest.raises(ValueError):
            attack_fraction_limit(0.5, 1.2)


class TestSweep:
    def test_grid(self):
        g = analysis.eta_grid(0.0, 1.0, 101)
        assert len(g) == 101 and g[0] == 0.0 and g[-1] == 1.0
        assert g[25] == pytest.approx(0.25)

    def test_rows(self):
        rows = sweep(analysis.eta_grid(0.0, 1.0, 5))
        assert [(r.eta, r.variant) for r in rows[:2]] == [(0.0, "wojcik"), (0.0, "improved")]
        assert len(rows) == 10

    def test_wojcik_shape(self):
        rows = {r.eta: r for r in sweep([0.25, 0.75, 1.0], variants=("wojcik",))}
        assert rows[0.25].f_star == 1.0
        assert rows[0.75].f_star == pytest.approx(0.5)
        assert rows[1.0].f_star == 0.0
        assert rows[1.0].I_AE_eff == 0.0
        assert rows[1.0].I_AB_eff == 1.0
        assert rows[0.25].I_AE_eff == pytest.approx(I_34, abs=1e-12)

    def test_improved_f_star_always_one(self):
        assert all(r.f_star == 1.0 for r in sweep(analysis.eta_grid(), variants=("improved",)))

    def test_rejects_bad_eta(self):
        with pytest.raises(ValueError):
            sweep([1.5])
