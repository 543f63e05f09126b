"""Fitness backend tests: the synthetic landscape, pairing requests, and the
operator hand-off used by the hardware path."""

import threading
import time

import numpy as np
import pytest

from vawtevo.fitness import (
    DEFAULT_TARGET,
    EvaluationRequest,
    HardwareEvaluator,
    MeasurementExchange,
    PendingRequest,
    RunSuspended,
    SyntheticEvaluator,
    SyntheticLandscapeConfig,
    combined_speed,
)
from vawtevo.genome import Genome
from vawtevo.mesh import read_stl
from vawtevo.rng import make_stream


def make_genome(profile, rotation=False, zshift=(0,) * 5):
    return Genome(profile=tuple(profile), zshift=tuple(zshift), rotation=rotation)


TARGET_GENOME = make_genome(DEFAULT_TARGET)
FAR_GENOME = make_genome((42,) * 10)


def request(genome, partner, position="A", species="A", fab_index=0, role="steady"):
    return EvaluationRequest(
        run_id="test",
        fab_index=fab_index,
        species=species,
        genome=genome,
        partner=partner,
        position=position,
        role=role,
    )


class TestCombinedSpeed:
    def test_perfect_pair_scores_2700(self):
        cfg = SyntheticLandscapeConfig()
        assert combined_speed(TARGET_GENOME, TARGET_GENOME, cfg) == pytest.approx(2700.0)

    def test_counter_rotating_pair_loses_the_bonus(self):
        cfg = SyntheticLandscapeConfig()
        flipped = make_genome(DEFAULT_TARGET, rotation=True)
        value = combined_speed(TARGET_GENOME, flipped, cfg)
        assert value == pytest.approx(2600.0)

    def test_separable_term_per_position(self):
        # far-from-target profile in one position drops only that term
        cfg = SyntheticLandscapeConfig(target_a=(1,) * 10, target_b=(1,) * 10,
                                       coupling_weight=0.0, corotation_bonus=0.0)
        near = make_genome((1,) * 10)
        value = combined_speed(near, FAR_GENOME, cfg)
        assert value == pytest.approx(1200.0)
        assert combined_speed(FAR_GENOME, near, cfg) == pytest.approx(1200.0)

    def test_coupling_rewards_similar_profiles(self):
        cfg = SyntheticLandscapeConfig(separable_weight=0.0, corotation_bonus=0.0)
        same = combined_speed(FAR_GENOME, FAR_GENOME, cfg)
        assert same == pytest.approx(200.0)
        apart = combined_speed(FAR_GENOME, make_genome((1,) * 10), cfg)
        assert apart == pytest.approx(0.0)

    def test_closeness_is_mean_absolute_deviation(self):
        cfg = SyntheticLandscapeConfig(target_a=(21,) * 10, target_b=(21,) * 10,
                                       coupling_weight=0.0, corotation_bonus=0.0)
        g = make_genome((11,) * 10)   # mean deviation 10 of a 41 range
        expected = 2 * 1200.0 * (1 - 10 / 41)
        assert combined_speed(g, g, cfg) == pytest.approx(expected)

    def test_noise_is_additive_before_the_clamp(self):
        cfg = SyntheticLandscapeConfig()
        base = combined_speed(TARGET_GENOME, TARGET_GENOME, cfg)
        assert combined_speed(TARGET_GENOME, TARGET_GENOME, cfg, eps=12.5) == pytest.approx(base + 12.5)

    def test_clamped_at_zero(self):
        cfg = SyntheticLandscapeConfig()
        assert combined_speed(TARGET_GENOME, TARGET_GENOME, cfg, eps=-1e9) == 0.0


class TestLandscapeConfig:
    def test_defaults_validate(self):
        SyntheticLandscapeConfig().validate()

    @pytest.mark.parametrize("kwargs", [
        {"target_a": (5,) * 9},
        {"target_b": (5,) * 11},
        {"target_a": (0,) + (5,) * 9},
        {"target_b": (5,) * 9 + (43,)},
        {"noise_sigma": -1.0},
    ])
    def test_bad_values_rejected(self, kwargs):
        with pytest.raises(ValueError):
            SyntheticLandscapeConfig(**kwargs).validate()


class TestRequest:
    def test_position_mapping(self):
        req = request(TARGET_GENOME, FAR_GENOME, position="A")
        assert req.position_a() is TARGET_GENOME
        assert req.position_b() is FAR_GENOME
        swapped = request(TARGET_GENOME, FAR_GENOME, position="B")
        assert swapped.position_a() is FAR_GENOME
        assert swapped.position_b() is TARGET_GENOME

    def test_arrangement_spin_labels(self):
        cw = make_genome(DEFAULT_TARGET, rotation=False)
        ccw = make_genome(DEFAULT_TARGET, rotation=True)
        arr = request(cw, ccw, position="A").arrangement()
        assert arr["position_a"]["spin"] == "clockwise"
        assert arr["position_b"]["spin"] == "counter-clockwise"
        assert arr["position_a"]["genome"] == list(cw.as_flat())

    def test_arrangement_text_mentions_both_positions(self):
        req = request(TARGET_GENOME, make_genome(DEFAULT_TARGET, rotation=True))
        text = req.arrangement_text()
        assert "position A" in text
        assert "position B" in text
        assert "rpm" in text
        assert "clockwise" in text and "counter-clockwise" in text


class TestSyntheticEvaluator:
    def test_sigma_zero_is_the_exact_landscape(self):
        cfg = SyntheticLandscapeConfig(noise_sigma=0.0)
        ev = SyntheticEvaluator(cfg, make_stream(0, "noise"))
        value = ev.evaluate(request(TARGET_GENOME, TARGET_GENOME))
        assert value == pytest.approx(2700.0)

    def test_exactly_one_draw_per_evaluation(self):
        for sigma in (0.0, 50.0):
            stream = make_stream(0, "noise")
            ev = SyntheticEvaluator(SyntheticLandscapeConfig(noise_sigma=sigma), stream)
            for n in range(1, 4):
                ev.evaluate(request(TARGET_GENOME, FAR_GENOME))
                assert stream.calls == n

    def test_deterministic_given_the_stream_seed(self):
        def run_three(seed):
            ev = SyntheticEvaluator(SyntheticLandscapeConfig(), make_stream(seed, "noise"))
            return [ev.evaluate(request(TARGET_GENOME, FAR_GENOME)) for _ in range(3)]

        assert run_three(5) == run_three(5)
        assert run_three(5) != run_three(6)

    def test_position_affects_asymmetric_targets(self):
        cfg = SyntheticLandscapeConfig(target_a=(1,) * 10, target_b=(42,) * 10,
                                       noise_sigma=0.0)
        ev = SyntheticEvaluator(cfg, make_stream(0, "noise"))
        near_a = make_genome((1,) * 10)
        good = ev.evaluate(request(near_a, FAR_GENOME, position="A"))
        bad = ev.evaluate(request(near_a, FAR_GENOME, position="B"))
        assert good == pytest.approx(combined_speed(near_a, FAR_GENOME, cfg))
        assert bad == pytest.approx(combined_speed(FAR_GENOME, near_a, cfg))
        assert good > bad

    def test_evaluator_is_flagged_deterministic(self):
        ev = SyntheticEvaluator(SyntheticLandscapeConfig(), make_stream(0, "noise"))
        assert ev.deterministic is True


def wait_for(predicate, timeout=5.0):
    deadline = time.monotonic() + timeout
    while time.monotonic() < deadline:
        if predicate():
            return True
        time.sleep(0.005)
    return False


def pending_card(request_id=7):
    return PendingRequest(
        request_id=request_id,
        run_id="test",
        species="A",
        role="steady",
        arrangement={},
        arrangement_text="",
        stl_paths={"A": "a.stl", "B": "b.stl"},
    )


class TestMeasurementExchange:
    def test_submit_answers_the_blocked_engine(self):
        exchange = MeasurementExchange()
        result = {}

        def engine():
            result["rpm"] = exchange.publish_and_wait(pending_card())

        thread = threading.Thread(target=engine)
        thread.start()
        assert wait_for(lambda: exchange.pending() is not None)
        assert exchange.pending().request_id == 7

        assert exchange.submit(99, 100.0) == "unknown"
        assert exchange.submit(7, 123.5) == "accepted"
        thread.join(timeout=5)
        assert not thread.is_alive()
        assert result["rpm"] == 123.5
        assert exchange.pending() is None

    def test_resubmission_after_answer_is_duplicate(self):
        exchange = MeasurementExchange()
        thread = threading.Thread(target=lambda: exchange.publish_and_wait(pending_card()))
        thread.start()
        wait_for(lambda: exchange.pending() is not None)
        assert exchange.submit(7, 10.0) == "accepted"
        thread.join(timeout=5)
        assert exchange.submit(7, 11.0) == "duplicate"

    def test_double_submit_is_duplicate(self):
        # whether or not the engine consumed the first value yet, the second
        # submission for the same id must be rejected as a duplicate
        exchange = MeasurementExchange()
        result = {}

        def engine():
            result["rpm"] = exchange.publish_and_wait(pending_card())

        thread = threading.Thread(target=engine)
        thread.start()
        wait_for(lambda: exchange.pending() is not None)
        first = exchange.submit(7, 10.0)
        second = exchange.submit(7, 11.0)
        assert first == "accepted"
        assert second == "duplicate"
        thread.join(timeout=5)
        assert result["rpm"] == 10.0

    def test_abort_raises_in_the_engine_thread(self):
        exchange = MeasurementExchange()
        outcome = {}

        def engine():
            try:
                exchange.publish_and_wait(pending_card())
            except RunSuspended:
                outcome["suspended"] = True

        thread = threading.Thread(target=engine)
        thread.start()
        wait_for(lambda: exchange.pending() is not None)
        exchange.abort()
        thread.join(timeout=5)
        assert outcome.get("suspended") is True
        assert exchange.pending() is None

    def test_publish_after_abort_raises_immediately(self):
        exchange = MeasurementExchange()
        exchange.abort()
        with pytest.raises(RunSuspended):
            exchange.publish_and_wait(pending_card())

    def test_on_pending_callback_fires(self):
        exchange = MeasurementExchange()
        seen = []
        exchange.on_pending = seen.append
        thread = threading.Thread(target=lambda: exchange.publish_and_wait(pending_card()))
        thread.start()
        wait_for(lambda: exchange.pending() is not None)
        exchange.submit(7, 1.0)
        thread.join(timeout=5)
        assert len(seen) == 1
        assert seen[0].request_id == 7


class TestHardwareEvaluator:
    def test_writes_stls_and_returns_the_submission(self, tmp_path):
        exchange = MeasurementExchange()
        evaluator = HardwareEvaluator(tmp_path, exchange, smooth_steps=1)
        assert evaluator.deterministic is False
        req = request(TARGET_GENOME, make_genome((10,) * 10, rotation=True),
                      fab_index=3, role="init")
        result = {}

        def engine():
            result["rpm"] = evaluator.evaluate(req)

        thread = threading.Thread(target=engine)
        thread.start()
        assert wait_for(lambda: exchange.pending() is not None, timeout=30)
        card = exchange.pending()
        assert card.request_id == 3
        assert card.role == "init"
        assert card.arrangement["position_a"]["spin"] == "clockwise"
        for species in ("A", "B"):
            path = card.stl_paths[species]
            assert path == tmp_path / species / "3.stl"
            parsed = read_stl(path)
            assert parsed.vertices.shape[0] > 1000

        assert exchange.submit(3, 456.0) == "accepted"
        thread.join(timeout=30)
        assert result["rpm"] == 456.0
