import logging
import re

import pytest


@pytest.fixture(autouse=True, scope="function")
def auto_fail_on_logged_warnings_errors(caplog: pytest.LogCaptureFixture, request: pytest.FixtureRequest):
    tests_failed_before_module = request.session.testsfailed
    yield
    tests_failed = request.session.testsfailed - tests_failed_before_module
    if tests_failed:
        return  # no need to double-fail
    messages = [x.getMessage() for x in caplog.get_records("call") if x.levelno >= logging.WARNING]
    if not messages:
        return
    for marker in request.node.iter_markers("ignore_warnings"):
        if not marker.args:
            return  # ignore all warnings
        (patterns,) = marker.args
        if isinstance(patterns, str):
            patterns = [patterns]
        if all(any(re.search(p, x) for p in patterns) for x in messages):
            return
    pytest.fail(f"Logged warnings or errors: {messages}")
