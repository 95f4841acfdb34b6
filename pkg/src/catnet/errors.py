"""Error types for the simulator.

Plain parameter problems (bad indices, non-unitary matrices, malformed
arguments) raise ValueError. The classes below mark violations of the
distributed execution model itself.
"""


class CatnetError(Exception):
    """Base class for model-level errors."""


class LocalityError(CatnetError):
    """A gate tried to touch qubits held by different nodes."""


class PoolError(CatnetError):
    """An operation used a qubit from the wrong pool (register vs channel)."""


class CapacityError(CatnetError):
    """A node ran out of register or channel slots."""


class CausalityError(CatnetError):
    """A classically controlled gate used a bit its node never received."""


class ImpossibleBranchError(CatnetError):
    """A forced measurement outcome has (near-)zero probability."""


class PreconditionError(CatnetError):
    """A protocol input was not in its required state."""


class EntanglementError(PreconditionError):
    """A qubit group did not hold the entangled resource a protocol needs."""


class ResourceError(CatnetError):
    """An entangled resource was required but not available."""


class CannotResetError(PreconditionError):
    """A channel qubit cannot be erased back to zero.

    Measured qubits can be restored with a classically controlled X; an
    unmeasured qubit in an unknown state cannot, so asking for it is an
    error rather than a silent overwrite.
    """
