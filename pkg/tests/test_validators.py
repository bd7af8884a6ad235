import math

import pytest

from utils.validators import ConfigValidator


@pytest.mark.parametrize("value", [True, "3", None, math.nan, math.inf])
def test_rejects_non_numbers(value):
    ok, message = ConfigValidator.validate_number(value)
    assert not ok and message


def test_thresholds():
    assert ConfigValidator.validate_thresholds(10, 30) == (True, "")
    assert not ConfigValidator.validate_thresholds(30, 30)[0]
    assert not ConfigValidator.validate_thresholds(0, 30)[0]


def test_rect_and_board():
    assert ConfigValidator.validate_rect([0, 0, 4, 4])[0]
    assert not ConfigValidator.validate_rect([0, 0, 4])[0]
    assert not ConfigValidator.validate_rect([0, 0, 4.5, 4])[0]
    assert ConfigValidator.validate_board([4, 4])[0]
    assert not ConfigValidator.validate_board([4, True])[0]


def test_unit_interval():
    assert ConfigValidator.validate_unit_interval(0.0)[0]
    assert not ConfigValidator.validate_unit_interval(0.0, open_low=True)[0]
    assert not ConfigValidator.validate_unit_interval(1.2)[0]
