# Ensure that tests can import from project root
import logging
import sys
from pathlib import Path

import pytest

ROOT = Path(__file__).resolve().parent
if str(ROOT) not in sys.path:
    sys.path.insert(0, str(ROOT))


@pytest.fixture(autouse=True)
def _reset_semispec_logging():
    """CLI runs configure handlers on captured streams; drop them after each test."""
    root = logging.getLogger()
    root_handlers = list(root.handlers)
    yield
    package = logging.getLogger("semispec")
    for handler in list(package.handlers):
        package.removeHandler(handler)
        handler.close()
    package.propagate = True
    for handler in list(root.handlers):
        if handler not in root_handlers and not type(handler).__module__.startswith("_pytest"):
            root.removeHandler(handler)
            handler.close()
