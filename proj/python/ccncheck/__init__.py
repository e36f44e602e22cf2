"""Checkpoint/restart simulator for distributed applications over a content-centric network."""

from ._ccncheck import (
    CheckMarker,
    CheckpointInProgress,
    CheckReport,
    Error,
    MalformedName,
    NoCheckpoint,
    RestartPlan,
    RunResult,
    Scenario,
    ScenarioError,
    ScenarioEvent,
    Signal,
    StructuredName,
    check_output_equivalence,
    counter_scenario,
    escape_component,
    evaluate_run,
    fibonacci_scenario,
    format_name,
    load_scenario,
    parse_name,
    plan_restart,
    run_scenario,
    scenario_from_json,
    unescape_component,
    verify,
)

__all__ = [name for name in dir() if not name.startswith("_")]
