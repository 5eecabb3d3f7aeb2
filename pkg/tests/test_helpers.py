"""Tests for seed and label helpers."""

from __future__ import annotations

import pytest

from ttergm.helpers import coerce_seed, derive_seed, label_width, next_label, shift_month

pytestmark = pytest.mark.unit


def test_month_labels_advance_by_calendar_month() -> None:
    assert next_label("2017-11", 3) == "2018-02"
    assert shift_month("2018-01", -1) == "2017-12"


@pytest.mark.parametrize(("horizon", "width"), [(1, 4), (9999, 4), (10_000, 5), (123_456, 6)])
def test_label_width_covers_horizon(horizon: int, width: int) -> None:
    assert label_width(horizon) == width


def test_step_labels_stay_ordered_past_four_digits() -> None:
    width = label_width(12_000)
    labels = [next_label("t0003", step, width) for step in (1, 999, 9_999, 10_000, 12_000)]
    assert labels[0] == "t0003+00001"
    assert labels == sorted(labels)
    assert next_label("t0003", 7) == "t0003+0007"


def test_seed_derivation() -> None:
    assert derive_seed(12, 2) == derive_seed(12, 2)
    assert derive_seed(12, 2) != derive_seed(12, 3)
    assert coerce_seed("7") == 7
    with pytest.raises(ValueError, match="unsigned"):
        coerce_seed(-1)
