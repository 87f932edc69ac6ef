"""Simulated devices, the end-to-end pipeline and cross-device execution."""

from .crossdevice import Bus, CrossDeviceResult, Message, plan_from_world, run_cross_device
from .pipeline import PipelineConfig, RunResult, TraceLog, read_traces, reexecute, respond_feedback, run_pipeline
from .world import (
    Clear,
    Clock,
    DeviceEnv,
    SimApp,
    SimDevice,
    StepOutcome,
    World,
    bundled_scenarios,
    current_digest,
    load_world,
    render,
    reset_device,
    step_device,
)

__all__ = [
    "Bus", "Clear", "Clock", "CrossDeviceResult", "DeviceEnv", "Message", "PipelineConfig", "RunResult",
    "SimApp", "SimDevice", "StepOutcome", "TraceLog", "World", "bundled_scenarios", "current_digest",
    "load_world", "plan_from_world", "read_traces", "reexecute", "render", "reset_device", "respond_feedback", "run_cross_device",
    "run_pipeline", "step_device",
]
