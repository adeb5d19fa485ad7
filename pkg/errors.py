# Exit codes used by app.py
EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_DIVERGED = 3


class SynergyError(Exception):
    exit_code = EXIT_DATA


# Shape, dimension or channel mismatch between tensors
class ShapeError(SynergyError, ValueError):
    pass


# Backward called on something that cannot be differentiated
class GraphError(SynergyError, RuntimeError):
    pass


class ConfigError(SynergyError, ValueError):
    exit_code = EXIT_USAGE


# Bad records, labels, indices or rankings
class DataError(SynergyError, ValueError):
    pass


class CheckpointError(DataError):
    pass


# Loss became NaN or Inf during training
class DivergenceError(SynergyError, ArithmeticError):
    exit_code = EXIT_DIVERGED


def exit_code_for(error):
    if isinstance(error, SynergyError):
        return error.exit_code
    return EXIT_DATA
