import dataclasses
import time

import pytest

from consensus_lab import scenario_io as sio
from consensus_lab import sim


class BundledRuns:
    """Lazily computed, session-cached simulations of the bundled scenarios."""

    def __init__(self):
        self._scenarios = {}
        self._traces = {}
        self._elapsed = {}

    def scenario(self, name: str) -> sim.Scenario:
        if name not in self._scenarios:
            self._scenarios[name], _ = sio.load_scenario(f"builtin:{name}")
        return self._scenarios[name]

    def trace(self, key: str) -> sim.Trace:
        if key not in self._traces:
            scenario = self._variant(key)
            start = time.perf_counter()
            self._traces[key] = sim.run(scenario)
            self._elapsed[key] = time.perf_counter() - start
        return self._traces[key]

    def elapsed(self, key: str) -> float:
        self.trace(key)
        return self._elapsed[key]

    def _variant(self, key: str) -> sim.Scenario:
        if key.endswith(":no_avoidance"):
            base = self.scenario(key.split(":")[0])
            gains = dataclasses.replace(base.gains, gamma0=0.0, gamma1=0.0, gamma2=0.0)
            return dataclasses.replace(base, gains=gains)
        return self.scenario(key)


@pytest.fixture(scope="session")
def bundled() -> BundledRuns:
    return BundledRuns()
