"""Decision layer for GUI automation agents plus a deterministic device simulator."""

from .actions import Action, action_from_record, denormalize_point, normalize_point, parse_action, serialize_action
from .calibration import FailureMemory, correct_point, distance_to_box, record_failure
from .dispatch import BoundCall, FunctionDescriptor, ParamSpec, Registry, ToolEnv, execute, plan_path, resolve
from .ensemble import Proposal, aggregate_parameters, decide, vote_action_type
from .experience import ExperienceEntry, ExperiencePool, efficiency_gain, replay
from .memory import PersonalStore
from .planner import allocate, build_graph, check_log, classify_cross_task, run_plan
from .screen import Screen, WidgetRecord, hash_screen, hit_test, ingest_widgets

__version__ = "0.1.0"

__all__ = [
    "Action", "BoundCall", "ExperienceEntry", "ExperiencePool", "FailureMemory", "FunctionDescriptor",
    "ParamSpec", "PersonalStore", "Proposal", "Registry", "Screen", "ToolEnv", "WidgetRecord",
    "action_from_record", "aggregate_parameters", "allocate", "build_graph", "check_log",
    "classify_cross_task", "correct_point", "decide", "denormalize_point", "distance_to_box",
    "efficiency_gain", "execute", "hash_screen", "hit_test", "ingest_widgets", "normalize_point",
    "parse_action", "plan_path", "record_failure", "replay", "resolve", "run_plan",
    "serialize_action", "vote_action_type",
]
