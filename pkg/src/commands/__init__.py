# Commands package
from . import analytic, experiments, replay, simulate
from .common import HANDLERS, UsageError

MODULES = (analytic, simulate, experiments, replay)
