"""Exception hierarchy.

Every error carries an ``exit_code`` so the CLI can map failures onto its
documented exit statuses without a lookup table.
"""


class BikeCongestError(Exception):
    exit_code = 4


class ConfigError(BikeCongestError, ValueError):
    exit_code = 2


class InputError(BikeCongestError, ValueError):
    exit_code = 3


class MissingFile(InputError, FileNotFoundError):
    def __init__(self, path):
        super().__init__(f"input file not found: {path}")
        self.path = str(path)


class MissingColumn(InputError):
    def __init__(self, name, path=None):
        where = f" in {path}" if path else ""
        super().__init__(f"required column {name!r} missing{where}")
        self.name = name


class EmptyInput(InputError):
    pass


class DegeneratePolygon(InputError):
    pass


class ZeroArea(DegeneratePolygon):
    pass


class EmptyPoiDataset(InputError):
    pass


class WindowMisaligned(ConfigError):
    pass


class KTooLarge(ConfigError):
    pass


class InvariantViolation(BikeCongestError, AssertionError):
    exit_code = 4


class SingularCovariance(InvariantViolation):
    pass
