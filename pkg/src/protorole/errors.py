"""Exception hierarchy shared across the package."""


class ProtoRoleError(Exception):
    """Base class for all package-specific errors."""


class DimensionError(ProtoRoleError, ValueError):
    """Operand shapes are incompatible for the requested operation."""


class DomainError(ProtoRoleError, ValueError):
    """An input value falls outside the mathematical domain of an operation."""


class ContractError(ProtoRoleError, ValueError):
    """A caller violated an API contract (mismatched keys, non-scalar loss, ...)."""


class DataFormatError(ProtoRoleError, ValueError):
    """A data file could not be parsed; message carries the offending location."""


class DataIntegrityError(ProtoRoleError, ValueError):
    """Parsed data violates a dataset-level invariant (missing annotation, ...)."""


class FrameLookupError(ProtoRoleError, KeyError):
    """A (predicate sense, role label) pair is absent from the frame map."""

    def __init__(self, sense: str, label: str):
        super().__init__(f"no frame mapping for sense={sense!r} label={label!r}")
        self.sense = sense
        self.label = label


class ConfigError(ProtoRoleError, ValueError):
    """A configuration file or option set is invalid."""


class CheckpointError(ProtoRoleError, ValueError):
    """A checkpoint file is corrupt, truncated, or of an unsupported version."""


class DivergenceError(ProtoRoleError, ArithmeticError):
    """Training produced a non-finite loss; carries the offending instance id."""

    def __init__(self, instance_id: str, value: float):
        super().__init__(f"non-finite loss {value!r} on instance {instance_id!r}")
        self.instance_id = instance_id
        self.value = value
