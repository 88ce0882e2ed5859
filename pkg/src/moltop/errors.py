"""Exception hierarchy shared across the toolkit.

The CLI maps these onto its exit-code table: configuration problems -> 2,
data/input problems -> 3, violated internal invariants -> 4.
"""


class MoltopError(Exception):
    """Base class for all toolkit errors."""


class ConfigError(MoltopError):
    """Invalid run configuration or incompatible artifact versions."""


class DataError(MoltopError):
    """Invalid input data (datasets, molecule files, SMILES strings)."""


class SmilesParseError(DataError):
    """SMILES text rejected; carries the character offset of the problem."""

    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} (at offset {offset})")
        self.offset = offset


class SchemaError(DataError):
    """Molecule/dataset JSON violating the documented schema; carries the JSON path."""

    def __init__(self, message: str, path: str = "$"):
        super().__init__(f"{message} (at {path})")
        self.path = path


class UnsupportedElementError(DataError):
    """Element outside the set a filtration or lookup table supports."""


class ChargesRequiredError(DataError):
    """Partial-charge filtration requested on a molecule missing charges."""


class LayoutMismatchError(ConfigError):
    """Fingerprints with different layout versions cannot be combined."""


class InternalInvariantError(MoltopError):
    """A structural invariant the engine relies on was violated; indicates a bug."""
