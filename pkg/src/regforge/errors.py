class ContractError(ValueError):
    """An operation was called outside its stated preconditions."""


class ShapeError(ValueError):
    """Array extents do not satisfy the operation's shape requirements."""


class FormatError(ValueError):
    """A file or byte stream does not parse under its declared format."""


class DegenerateCostError(ValueError):
    """Cost matrix scaled to an all-zero kernel row; transport undefined."""
