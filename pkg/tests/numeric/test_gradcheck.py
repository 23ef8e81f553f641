"""Tests for the `gradcheck` module."""
import logging

import numpy as np
import pytest

from mmkgc.numeric import ParamStore, Rng, finite_diff_check, gradient_check_report


def half_square(store: ParamStore, scale: float = 1.0):
    """Loss 0.5 * |theta|^2 whose analytic gradient is multiplied by `scale`."""

    def loss() -> float:
        theta = store.value("theta")
        store.accumulate("theta", scale * theta)
        return 0.5 * float(theta @ theta)

    return loss


def test_correct_gradient_passes(store: ParamStore, rng: Rng) -> None:
    """Test that an exact gradient of a quadratic agrees to high precision."""
    store.add("theta", rng.uniform(20, 0.5, 1.5))

    report = gradient_check_report(half_square(store), store, eps=1e-5, sample_count=10, rng=rng)

    assert len(report.samples) == 10
    assert report.max_relative_error < 1e-6
    assert not store.grads["theta"].any()


def test_constant_loss_has_no_error(store: ParamStore) -> None:
    """Test that a loss that ignores its parameters checks with error 0."""
    store.add("theta", np.ones(4))

    assert finite_diff_check(lambda: 3.0, store, eps=1e-5, sample_count=4) == 0.0


def test_wrong_gradient_fails(store: ParamStore, rng: Rng) -> None:
    """Test that a doubled analytic gradient shows a relative error of one half."""
    store.add("theta", rng.uniform(5, 0.5, 1.5))

    report = gradient_check_report(half_square(store, scale=2.0), store, eps=1e-5, sample_count=5)

    assert report.skipped_kinks == 0
    assert abs(report.max_relative_error - 0.5) < 1e-4
    assert report.worst is not None and report.worst.group == "theta"


def test_kinks_are_skipped(store: ParamStore) -> None:
    """Test that a parameter sitting on a ReLU kink is not counted."""
    store.add("theta", np.array([0.0, 1.0]))

    def loss() -> float:
        theta = store.value("theta")
        store.accumulate("theta", (theta > 0).astype(float))
        return float(np.maximum(theta, 0.0).sum())

    report = gradient_check_report(loss, store, eps=1e-5, sample_count=2)

    assert report.skipped_kinks == 1
    assert len(report.samples) == 1 and report.samples[0].index == 1
    assert not report.complete


def test_shortfall_is_reported(store: ParamStore, caplog: pytest.LogCaptureFixture) -> None:
    """Test that asking for more samples than there are parameters is flagged, not hidden."""
    store.add("theta", np.array([0.5, 1.5, -2.0]))

    with caplog.at_level(logging.WARNING, logger="mmkgc"):
        report = gradient_check_report(half_square(store), store, eps=1e-5, sample_count=10)

    assert len(report.samples) == 3
    assert report.requested == 10
    assert not report.complete
    assert "Only 3 of 10" in caplog.text


def test_full_quota_is_complete(store: ParamStore, rng: Rng) -> None:
    """Test that a check reaching its quota reports itself complete."""
    store.add("theta", rng.uniform(20, 0.5, 1.5))

    report = gradient_check_report(half_square(store), store, eps=1e-5, sample_count=20, rng=rng)

    assert report.complete
