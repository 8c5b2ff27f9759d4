"""Every bundled scenario's documented outcome, pinned per configuration."""

import pytest

from stucksim.backends.base import LatencyModel
from stucksim.backends.oracle import rule_oracle
from stucksim.config import RunConfig
from stucksim.guidance import GuidanceQueue
from stucksim.harness.loop import SimulationRun
from stucksim.metrics import score_run
from stucksim.world.scenario import bundled_names, load_bundled

GUIDE = {
    "traversable_debris": ((12.0, "it's just a plastic bag, drive over it"),),
    "plastic_bag": ((12.0, "the bag is just trash, drive over it"),),
}

MODES = ("baseline", "oracle", "guided")


def expected_for(scenario, mode):
    return scenario.expected.get(mode) or scenario.expected.get("oracle")


@pytest.mark.parametrize("name", bundled_names())
@pytest.mark.parametrize("mode", MODES)
def test_scenario_outcome_matches_documentation(name, mode):
    scenario = load_bundled(name, seed=7)
    want = expected_for(scenario, mode)
    if want is None:
        pytest.skip(f"{name} documents no expectation for {mode}")
    cfg = RunConfig(seed=7, recovery="off" if mode == "baseline" else "oracle")
    backend = None if mode == "baseline" else rule_oracle
    queue = GuidanceQueue(name) if backend else None
    script = GUIDE.get(name, ()) if mode == "guided" else ()
    run = SimulationRun(
        scenario,
        cfg,
        backend=backend,
        latency=LatencyModel() if backend else None,
        guidance_queue=queue,
        guidance_script=script,
        run_id=name,
    )
    result = run.run()
    assert result.end_reason == want, f"{name}/{mode}: expected {want}, got {result.end_reason}"
    metrics = score_run(result.trace_lines)
    if want == "arrival":
        assert metrics.rc == 1.0
    else:
        assert not metrics.success


@pytest.mark.parametrize("name", bundled_names())
def test_zero_intervention_scenarios_stay_clean(name):
    scenario = load_bundled(name, seed=7)
    if scenario.expected.get("interventions") != 0:
        pytest.skip("scenario permits interventions")
    run = SimulationRun(
        scenario,
        RunConfig(seed=7, recovery="oracle"),
        backend=rule_oracle,
        latency=LatencyModel(),
        guidance_queue=GuidanceQueue(name),
        run_id=name,
    )
    result = run.run()
    assert result.interventions == 0, f"{name}: solver intervened"
