"""
Run budgets for the current experiment.

A config's budgets are activated around each task and each suite job;
outside of a run the lab settings apply.
"""
from contextlib import contextmanager
from contextvars import ContextVar
from typing import Iterator, Optional

from django.conf import settings

from dynamics.models import Budgets

_active: ContextVar[Optional[Budgets]] = ContextVar("dynamics_budgets", default=None)


@contextmanager
def active_budgets(budgets: Optional[Budgets]) -> Iterator[Optional[Budgets]]:
    """Make budgets the defaults for the services inside the block (this thread only)."""
    token = _active.set(budgets)
    try:
        yield budgets
    finally:
        _active.reset(token)


def current_budgets() -> Optional[Budgets]:
    return _active.get()


def node_budget() -> int:
    budgets = _active.get()
    if budgets is not None and budgets.nodes:
        return int(budgets.nodes)
    return int(settings.DYNAMICS_NODE_BUDGET)


def monte_carlo_draws() -> int:
    budgets = _active.get()
    if budgets is not None:
        return int(budgets.monte_carlo)
    return int(settings.DYNAMICS_MONTE_CARLO_DRAWS)
