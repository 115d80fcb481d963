"""Exception types shared across the package."""


class DecompositionError(RuntimeError):
    """Base class for algorithmic failures (as opposed to bad inputs/files)."""


class ZeroUpdateError(DecompositionError):
    """An ALS update (or initialization) collapsed to a zero-norm vector."""


class CoherentCollapseError(DecompositionError):
    """A least-squares system lost column rank beyond the rcond threshold."""


class DegenerateProbesError(DecompositionError):
    """Random probes produced near-coincident eigenvalues after all retries."""


class EigenDecompositionError(DecompositionError):
    """Dense eigen-decomposition failed to converge."""


class PermutationBudgetError(DecompositionError):
    """Exhaustive permutation alignment would exceed the combination budget."""


class CpdtFormatError(ValueError):
    """Malformed or truncated CPDT tensor file."""


class ConfigError(ValueError):
    """Harness config file could not be parsed; message carries the line."""
