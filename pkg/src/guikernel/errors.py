"""Exception hierarchy shared across the kernel."""

from __future__ import annotations


class KernelError(Exception):
    """Base class for every error raised by guikernel."""


# ---- action schema ----


class ActionError(KernelError, ValueError):
    pass


class MalformedRecord(ActionError):
    pass


class UnknownKey(ActionError):
    pass


class InvalidCombination(ActionError):
    pass


class OutOfRange(ActionError):
    pass


class OutOfBounds(ActionError):
    pass


# ---- screen model ----


class ScreenError(KernelError, ValueError):
    pass


class BadBbox(ScreenError):
    pass


class DuplicateIndex(ScreenError):
    pass


# ---- ensemble ----


class EmptyProposalSet(KernelError, ValueError):
    pass


class NoMatchingProposals(KernelError, ValueError):
    pass


# ---- planner ----


class PlanError(KernelError, ValueError):
    pass


class CycleDetected(PlanError):
    def __init__(self, cycle: list[str]):
        self.cycle = list(cycle)
        super().__init__("cycle detected: " + " -> ".join(map(str, self.cycle)))


class DanglingEdge(PlanError):
    pass


class PartialAllocation(PlanError):
    pass


class MixedEndpointKinds(PlanError):
    pass


class UnknownEndpoint(PlanError):
    pass


class IllegalTransition(PlanError):
    pass


class UnclassifiableFeatureCombination(PlanError):
    pass


class ExecutorError(KernelError):
    """Wraps a fault raised by an endpoint executor."""


# ---- memory store ----


class ValidationFailed(KernelError, ValueError):
    pass


class UnknownField(KernelError, KeyError):
    pass


class NothingMatched(KernelError, LookupError):
    pass


# ---- experience store ----


class NoQueriesYet(KernelError, ZeroDivisionError):
    pass


class NonPositiveBaseline(KernelError, ValueError):
    pass


class EnvFault(KernelError, RuntimeError):
    pass


# ---- grpo ----


class GroupTooSmall(KernelError, ValueError):
    pass


class NonFiniteInput(KernelError, ValueError):
    pass


# ---- hybrid dispatch ----


class DispatchError(KernelError):
    pass


class DuplicateName(DispatchError, ValueError):
    pass


class UnknownFunction(DispatchError, KeyError):
    pass


class MissingRequiredParam(DispatchError, ValueError):
    pass


class UnknownParam(DispatchError, ValueError):
    pass


class ToolFault(DispatchError, RuntimeError):
    pass


# ---- policy / harness ----


class PolicyFault(KernelError, RuntimeError):
    pass


class SchemaError(KernelError, ValueError):
    pass


class DanglingReference(SchemaError):
    pass


class NoSuchDevice(KernelError, KeyError):
    pass


class StepCapExceeded(KernelError, RuntimeError):
    pass
