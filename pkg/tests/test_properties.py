"""Randomized invariant checks, one test per suite."""

import pytest

from property_suites import ALL_SUITES


@pytest.mark.parametrize("suite", ALL_SUITES, ids=lambda s: s.__name__)
def test_property_suite(suite):
    suite()
