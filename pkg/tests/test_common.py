# tests/test_common.py
import json
import logging
import time

import numpy as np
import pytest

from common.api_error import ConfigurationError, DivergenceError, DomainError
from common.config import configure_structlog, is_configured, reset_structlog
from common.context_vars import stage_timer_context_var
from common.logger import StageTimer, get_app_logger, stage
from common.scripts import dumps_json, format_cell, map_ordered, write_csv


class TestErrors:
    def test_report(self):
        error = ConfigurationError("bad", violations=["runs: must be >= 2"])
        assert error.exit_code == 2
        assert error.to_report() == {
            "error": "CONFIG_ERROR",
            "message": "bad",
            "details": {"violations": ["runs: must be >= 2"]},
        }

    def test_divergence(self):
        error = DivergenceError(12, float("inf"))
        assert error.exit_code == 1
        assert error.details == {"step": 12, "loss": "inf"}

    def test_domain_error_is_value_error(self):
        assert issubclass(DomainError, ValueError)


class TestWriters:
    @pytest.mark.parametrize(
        "value,text",
        [(None, ""), (True, "true"), (np.int64(3), "3"), (0.1, "0.1"), (np.float32(0.5), "0.5")],
    )
    def test_format_cell(self, value, text):
        assert format_cell(value) == text

    def test_json_is_sorted_and_finite(self):
        text = dumps_json({"b": np.arange(2), "a": float("nan")})
        assert text.endswith("\n")
        assert json.loads(text) == {"a": "nan", "b": [0, 1]}
        assert text.index('"a"') < text.index('"b"')

    def test_csv(self, tmp_path):
        path = write_csv(tmp_path / "deep" / "t.csv", ["x", "y"], [[1, None], [0.25, "s"]])
        assert path.read_text() == "x,y\n1,\n0.25,s\n"


class TestMapOrdered:
    def test_input_order(self):
        def slow_first(i: int) -> int:
            time.sleep(0.01 * (5 - i))
            return i * i

        assert map_ordered(slow_first, range(5), threads=4) == [0, 1, 4, 9, 16]

    def test_errors_propagate(self):
        def fail(i: int) -> int:
            if i == 2:
                raise DomainError("boom")
            return i

        with pytest.raises(DomainError):
            map_ordered(fail, range(4), threads=2)


class TestStageTimer:
    def test_accumulates_on_active_timer(self):
        timer = StageTimer()
        token = stage_timer_context_var.set(timer)
        try:
            with stage("ensemble"):
                pass
            with stage("ensemble"):
                pass
        finally:
            stage_timer_context_var.reset(token)
        assert list(timer.as_dict()) == ["ensemble"]
        assert timer.format_summary().startswith("ensemble=")

    def test_no_timer(self):
        with stage("ignored"):
            pass

    def test_logger_timing(self):
        logger = get_app_logger("igb.test", track_timing=True)
        logger.debug("quiet")
        assert logger.get_timing_stats()["total_calls"] == 1
        assert "error" in get_app_logger("igb.test").get_timing_stats()


class TestStructlogSetup:
    def test_same_level_is_a_no_op(self):
        configure_structlog(logging.INFO)
        assert is_configured()

    def test_other_level_rejected(self):
        with pytest.raises(RuntimeError):
            configure_structlog(logging.DEBUG)

    def test_reset(self):
        reset_structlog()
        try:
            assert not is_configured()
        finally:
            configure_structlog(logging.INFO)
        assert is_configured()
