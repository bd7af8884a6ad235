import math
from typing import Any, Tuple


class ConfigValidator:
    """Parameter checks for pipeline configuration documents.

    Each check returns (ok, message) so the loader can collect every problem
    before reporting, instead of stopping at the first one.
    """

    @staticmethod
    def validate_number(value: Any) -> Tuple[bool, str]:
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            return False, f"expected a number, got {type(value).__name__}"
        if not math.isfinite(value):
            return False, "must be finite"
        return True, ""

    @staticmethod
    def validate_integer(value: Any, minimum: int = None) -> Tuple[bool, str]:
        if isinstance(value, bool) or not isinstance(value, int):
            return False, f"expected an integer, got {type(value).__name__}"
        if minimum is not None and value < minimum:
            return False, f"must be >= {minimum}, got {value}"
        return True, ""

    @staticmethod
    def validate_positive(value: float) -> Tuple[bool, str]:
        if not value > 0:
            return False, f"must be positive, got {value}"
        return True, ""

    @staticmethod
    def validate_nonnegative(value: float) -> Tuple[bool, str]:
        if value < 0:
            return False, f"must be >= 0, got {value}"
        return True, ""

    @staticmethod
    def validate_unit_interval(value: float, open_low: bool = False) -> Tuple[bool, str]:
        low_ok = value > 0 if open_low else value >= 0
        if not (low_ok and value <= 1):
            bracket = "(0, 1]" if open_low else "[0, 1]"
            return False, f"must lie in {bracket}, got {value}"
        return True, ""

    @staticmethod
    def validate_weight(value: float) -> Tuple[bool, str]:
        if not -1.0 <= value <= 1.0:
            return False, f"weight must lie in [-1, 1], got {value}"
        return True, ""

    @staticmethod
    def validate_thresholds(low: float, high: float) -> Tuple[bool, str]:
        """Canny thresholds shared by both channels."""
        if not low > 0:
            return False, f"canny_low must be positive, got {low}"
        if not low < high:
            return False, f"canny_low ({low}) must be below canny_high ({high})"
        return True, ""

    @staticmethod
    def validate_rect(rect: Any) -> Tuple[bool, str]:
        if not isinstance(rect, (list, tuple)) or len(rect) != 4:
            return False, "rect must be [x, y, w, h]"
        if any(isinstance(v, bool) or not isinstance(v, int) for v in rect):
            return False, "rect entries must be integers"
        if rect[2] <= 0 or rect[3] <= 0:
            return False, f"empty rect {list(rect)}"
        return True, ""

    @staticmethod
    def validate_board(board: Any) -> Tuple[bool, str]:
        if not isinstance(board, (list, tuple)) or len(board) != 2:
            return False, "board must be [inner_cols, inner_rows]"
        if any(isinstance(v, bool) or not isinstance(v, int) or v < 2 for v in board):
            return False, f"board needs at least 2x2 inner corners, got {list(board)}"
        return True, ""

    @staticmethod
    def validate_choice(value: Any, choices: Tuple[str, ...]) -> Tuple[bool, str]:
        if value not in choices:
            return False, f"must be one of {', '.join(choices)}, got {value!r}"
        return True, ""
