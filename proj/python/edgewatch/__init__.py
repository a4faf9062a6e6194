"""Python bindings for the edgewatch multi-agent detection runtime."""

from ._edgewatch import (
    BBox,
    Detection,
    Error,
    ParseError,
    ScenarioError,
    Track,
    TrackerConfig,
    TrackerState,
    ValidationError,
    build_prompt,
    evaluate_triggers,
    format_args,
    iou,
    load_config,
    ollama_request_body,
    parse_command,
    passive_tracker_update,
    run_scenario,
    socket_mode_ack,
)

__all__ = [
    "BBox",
    "Detection",
    "Error",
    "ParseError",
    "ScenarioError",
    "Track",
    "TrackerConfig",
    "TrackerState",
    "ValidationError",
    "build_prompt",
    "evaluate_triggers",
    "format_args",
    "iou",
    "load_config",
    "ollama_request_body",
    "parse_command",
    "passive_tracker_update",
    "run_scenario",
    "socket_mode_ack",
]
