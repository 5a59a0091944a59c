import math

import numpy as np
import pytest

from resetkit import classifiers as cls
from resetkit import distributions as d
from resetkit import mrl
from resetkit import reset_transform as rt
from resetkit import simulator as sim

from fixture_laws import (ALL_LAWS, exp_law, levy, pe_mean_only, plateau,
                          pw_finite, pw_sixth, sps, uniform02, weib)

NO_BIGGER = ("no_bigger_reset", "no_bigger_exp_reset", "no_bigger_mean",
             "no_bigger_exp_mean")
NO_SMALLER = ("no_smaller_reset", "no_smaller_exp_reset", "no_smaller_mean",
              "no_smaller_exp_mean")


class TestMultiplicativity:
    def test_exponential_is_multiplicative(self):
        for lam in (0.3, 1.0, 2.0):
            v = cls.check_supermultiplicative(exp_law(lam),
                                              variant="multiplicative")
            assert v.holds and abs(v.margin) <= 1e-9

    def test_weibull_super_iff_shape_below_one(self):
        assert cls.check_supermultiplicative(weib(0.5)).holds
        v = cls.check_supermultiplicative(weib(1.5))
        assert v.fails
        x, y = v.witness
        assert abs(x - y) < max(x, y)  # worst violation sits near x == y

    def test_every_nonexponential_fixture_fails_multiplicativity(self):
        for name, make in ALL_LAWS.items():
            if name == "exp1":
                continue
            v = cls.check_supermultiplicative(make(), variant="multiplicative")
            assert v.fails and abs(v.margin) > 1e-8, name

    def test_plateau_example(self):
        # fails on the diagonal x + y == 1 while the shifted family holds
        spec = plateau()
        v = cls.check_supermultiplicative(spec)
        assert v.fails
        x, y = v.witness
        assert x + y == pytest.approx(1.0, abs=0.25)
        us = np.linspace(0.0, 6.0, 601)
        lhs = np.asarray(spec.log_tail(us)) + float(spec.log_tail(1.0))
        rhs = np.asarray(spec.log_tail(1.0 + us))
        assert np.all(lhs <= rhs + 1e-12)

    def test_brute_force_pair_oracle(self):
        # dense independent scan agrees with the verdict margins
        spec = pw_sixth()
        xs = np.linspace(0.0, 4.0, 161)
        worst = np.inf
        tail = np.asarray(spec.tail(xs))
        for i, x in enumerate(xs):
            lhs = tail[i] * tail
            rhs = np.asarray(spec.tail(x + xs))
            worst = min(worst, float(np.min(np.log(rhs) - np.log(lhs))))
        v = cls.check_supermultiplicative(spec)
        assert v.fails
        assert v.margin <= worst + 1e-9


class TestExpResetCondition:
    def test_exponential_equality(self):
        v = cls.check_exp_reset_condition(exp_law(1.7), variant="invariant")
        assert v.holds and abs(v.margin) <= 1e-9

    def test_step_example_holds_while_supermult_fails(self):
        spec = pw_sixth()
        assert cls.check_exp_reset_condition(spec).holds
        assert cls.check_supermultiplicative(spec).fails

    def test_ratio_against_brute_riemann(self):
        spec = pw_sixth()
        for t in (0.5, 1.2, 1.5, 2.0, 3.7):
            u = np.linspace(0.0, t, 400_001)
            f = np.asarray(spec.tail(u)) * np.asarray(spec.tail(t - u))
            brute = float(np.trapezoid(f, u)) / (t * float(spec.tail(t)))
            got = cls._exp_reset_ratio(spec, t, 1)
            assert got == pytest.approx(brute, rel=5e-4), t

    def test_weibull_lfold_condition(self):
        assert cls.check_exp_reset_condition(weib(0.5), l=2).holds
        assert cls.check_exp_reset_condition(weib(1.5), l=2).fails
        # the k just above 1 failures appear only at very large times
        v = cls.check_exp_reset_condition(weib(1.1), l=3)
        assert v.fails
        assert v.witness[0] > 1e3

    def test_mean_only_example_fails_dominance(self):
        v = cls.check_exp_reset_condition(pe_mean_only())
        assert v.fails
        assert v.witness[0] == pytest.approx(1.0, abs=0.05)

    def test_compact_support_fails(self):
        assert cls.check_exp_reset_condition(uniform02()).fails

    def test_no_smaller_rejects_l_above_one(self):
        with pytest.raises(ValueError):
            cls.check_exp_reset_condition(exp_law(), l=2, variant="no_smaller")


class TestMeanConditions:
    def test_exponential_invariant(self):
        v = cls.check_mean_conditions(exp_law(), variant="invariant")
        assert v.holds

    def test_mean_only_example_holds(self):
        v = cls.check_mean_conditions(pe_mean_only(), variant="no_bigger")
        assert v.holds

    def test_weibull_directions(self):
        assert cls.check_mean_conditions(weib(0.5), variant="no_bigger").holds
        assert cls.check_mean_conditions(weib(0.5), variant="no_smaller").fails
        assert cls.check_mean_conditions(weib(2.0), variant="no_smaller").holds

    def test_tail_below_one_blocks_no_smaller(self):
        v = cls.check_mean_conditions(pw_finite(), variant="no_smaller")
        assert v.fails
        assert "tail(0) < 1" in v.note

    def test_infinite_mean_undefined(self):
        v = cls.check_mean_conditions(levy())
        assert v.status == "undefined"
        assert "m0=inf" in v.note

    def test_normalized_pareto_square_holds_in_mean(self):
        # with tail k^2/(t+k)^2 the residual mean t+k always exceeds m0=k
        v = cls.check_mean_conditions(sps(0.5), variant="no_bigger")
        assert v.holds


class TestExpMeanCondition:
    def test_exponential_equality_every_rate(self):
        verdict, margins = cls.check_exp_mean_condition(exp_law(),
                                                        variant="invariant")
        assert verdict.holds
        assert all(abs(m) <= 1e-9 for m in margins.values())

    def test_weibull_heavy_holds(self):
        verdict, _ = cls.check_exp_mean_condition(weib(0.5))
        assert verdict.holds

    def test_normalized_pareto_square_holds(self):
        # the normalized law is supermultiplicative, so this must hold
        verdict, margins = cls.check_exp_mean_condition(sps(0.5))
        assert verdict.holds
        assert all(m > 0 for m in margins.values())

    def test_formal_profile_fails_all_rates(self):
        # residual-mean profile t + k with declared mean 1/k: the worked
        # failure case; no actual law realizes this pair
        k = 0.5
        for mu in (0.1, 0.5, 1.0, 5.0):
            margin = cls.exp_mean_margin_from_curve(lambda t: t + k, 1.0 / k,
                                                    mu)
            assert margin < -1e-3, mu

    def test_formal_profile_matches_closed_form(self):
        # for m = t + k the inner integral is log((t+k)/k), so the left side
        # is k * exp(mu k) * E1(mu k)
        from scipy.special import exp1
        k, mu = 0.5, 1.0
        lhs = k * math.exp(mu * k) * float(exp1(mu * k))
        rhs = 1.0 / (k + mu)
        want = (lhs - rhs) / rhs
        got = cls.exp_mean_margin_from_curve(lambda t: t + k, 1.0 / k, mu)
        assert got == pytest.approx(want, rel=1e-5)

    def test_infinite_mean_undefined(self):
        verdict, margins = cls.check_exp_mean_condition(levy())
        assert verdict.status == "undefined"
        assert all(math.isnan(m) for m in margins.values())


class TestSecondOrder:
    def test_exponential_equality(self):
        v = cls.check_second_order(exp_law())
        assert v.holds and "equality" in v.note

    def test_sps_trivially_met(self):
        v = cls.check_second_order(sps(0.5))
        assert v.holds and "infinite" in v.note

    def test_weibull_iff_shape_below_one(self):
        assert cls.check_second_order(weib(0.5)).holds
        assert "strict" in cls.check_second_order(weib(0.5)).note
        assert cls.check_second_order(weib(1.5)).fails


class TestLfold:
    def test_weibull_lfold_pointwise(self):
        main, probe = cls.check_lfold_supermultiplicative(weib(0.5), 2)
        assert main.holds and probe.fails
        main, probe = cls.check_lfold_supermultiplicative(weib(1.5), 2)
        assert main.fails and probe.fails

    def test_exponential_lfold_holds_but_never_invariant(self):
        main, probe = cls.check_lfold_supermultiplicative(exp_law(), 2)
        assert main.holds
        assert probe.fails  # invariance is impossible under branching

    def test_invariance_probe_fails_on_every_fixture(self):
        for name, make in ALL_LAWS.items():
            _, probe = cls.check_lfold_supermultiplicative(make(), 2)
            assert probe.fails, name


class TestMomentTransfer:
    def test_weibull_power_two(self):
        rep = cls.moment_transfer_check(weib(0.5),
                                        rt.ResetLaw.deterministic(1.0),
                                        d.MomentFunction.power_of(2),
                                        direction="no_bigger")
        assert rep.base_value == pytest.approx(24.0, rel=1e-8)
        assert rep.transformed_finite
        assert rep.transformed_value <= 24.0
        assert rep.consistent

    def test_exponential_identity(self):
        rep = cls.moment_transfer_check(exp_law(),
                                        rt.ResetLaw.exponential(2.0),
                                        d.MomentFunction.identity())
        assert rep.transformed_value == pytest.approx(1.0, rel=1e-8)

    def test_levy_identity_becomes_finite(self):
        rep = cls.moment_transfer_check(levy(), rt.ResetLaw.deterministic(1.0),
                                        d.MomentFunction.identity(),
                                        direction="no_bigger")
        assert not rep.base_finite
        assert rep.transformed_finite
        assert rep.consistent  # only finite => finite is claimed


class TestClassifyReport:
    def test_exponential_all_invariances(self):
        rep = cls.classify(exp_law())
        assert rep.exponential_flag
        for name in ("invariant_reset", "invariant_exp_reset",
                     "invariant_mean"):
            assert rep.conditions[name].holds, name

    def test_weibull_heavy_all_no_bigger(self):
        rep = cls.classify(weib(0.5))
        for name in NO_BIGGER:
            assert rep.conditions[name].holds, name
        for name in ("invariant_reset", "invariant_exp_reset",
                     "invariant_mean"):
            assert not rep.conditions[name].holds, name
        assert not rep.exponential_flag

    def test_weibull_light_all_no_smaller(self):
        rep = cls.classify(weib(1.5))
        for name in NO_SMALLER:
            assert rep.conditions[name].holds, name

    def test_deterministic_aliases_match(self):
        rep = cls.classify(weib(0.5))
        assert rep.conditions["no_bigger_deterministic_reset"] is \
            rep.conditions["no_bigger_reset"]
        assert rep.conditions["no_bigger_deterministic_mean"] is \
            rep.conditions["no_bigger_mean"]

    @pytest.mark.parametrize("name", sorted(ALL_LAWS))
    def test_implication_lattice(self, name):
        rep = cls.classify(ALL_LAWS[name]())
        for row in rep.implications:
            assert row["consistent"], (name, row)

    @pytest.mark.parametrize("name", sorted(ALL_LAWS))
    def test_supermult_implies_mean_condition(self, name):
        rep = cls.classify(ALL_LAWS[name]())
        if rep.conditions["no_bigger_reset"].holds \
                and rep.conditions["no_bigger_mean"].status != "undefined":
            assert rep.conditions["no_bigger_mean"].holds, name

    def test_report_serializes(self):
        rep = cls.classify(pw_finite())
        doc = rep.to_dict()
        assert "conditions" in doc and "implications" in doc
        assert doc["conditions"]["second_order"]["status"] in (
            "holds", "fails", "inconclusive", "undefined")

    def test_remark_generators(self):
        # non-constant residual mean bounded below by its start: helped in
        # mean by every restart, but not invariant
        ts = np.linspace(0.0, 8.0, 81)
        bump = 1.0 + 0.5 * (ts / (1.0 + ts)) ** 2
        law = mrl.law_from_mrl(mrl.MrlCurve(grid=tuple(ts),
                                            values=tuple(bump)))
        rep = cls.classify(law)
        assert rep.conditions["no_bigger_mean"].holds
        assert not rep.conditions["invariant_mean"].holds

    def test_remark_generator_exp_mean_only(self):
        # residual mean that first rises, then dips below its starting value:
        # the averaged reciprocal stays below 1/m(0) throughout, so constant-
        # rate restart helps in mean at every rate, while the dip makes
        # arbitrary restart harmful in mean
        curve = mrl.MrlCurve(grid=(0.0, 1.0, 5.0, 7.0, 9.0, 12.0),
                             values=(1.0, 1.5, 1.5, 0.9, 1.2, 1.2))
        law = mrl.law_from_mrl(curve)
        ts = np.linspace(1e-4, 40.0, 4001)
        inv_int = np.cumsum(np.diff(np.concatenate([[0.0], ts]))
                            / np.asarray(curve(ts)))
        assert np.all(inv_int <= ts / curve.values[0] + 1e-9)
        assert float(np.min(np.asarray(curve(ts)))) < curve.values[0]
        rep = cls.classify(law)
        assert rep.conditions["no_bigger_mean"].fails
        assert rep.conditions["no_bigger_exp_mean"].holds


class TestClassifierVsSimulator:
    def test_no_bigger_laws_dominate_monte_carlo(self):
        resets = (rt.ResetLaw.deterministic(0.7), rt.ResetLaw.exponential(1.0),
                  rt.ResetLaw.general(uniform02()))
        for make in (lambda: weib(0.5), sps, exp_law):
            spec = make()
            assert cls.check_supermultiplicative(spec).holds
            probes = tuple(float(spec.isf(u))
                           for u in (0.8, 0.6, 0.4, 0.2, 0.08))
            for reset in resets:
                res = sim.simulate_reset(
                    spec, reset, sim.SimulationConfig(replicates=20_000,
                                                      seed=99,
                                                      probe_times=probes))
                for p, hat, se in zip(probes, res.tail_probs, res.tail_se):
                    assert hat <= float(spec.tail(p)) + 4.0 * se + 1e-9


class TestInconclusive:
    def test_sub_tolerance_violation_reports_inconclusive(self):
        # a hand-made curve with a 1e-8 dent: beyond roundoff, below the
        # tabulated tolerance of 1e-6
        grid = np.linspace(0.0, 8.0, 321)
        vals = np.exp(-grid)
        vals[40] *= 1.0 - 1e-8
        curve = d.TailCurve(grid=tuple(grid), values=tuple(vals[:-1]),
                            terminal=float(vals[-1]), mode="log-linear")
        spec = d.Tabulated(curve=curve)
        v = cls.check_supermultiplicative(spec)
        assert v.status == "inconclusive"
