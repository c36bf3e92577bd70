"""Exception types shared across the package.

The CLI maps each class to a distinct exit code, so keep the taxonomy
small: bad configuration vs. bad data files vs. a run that diverged.
"""


class ConfigError(ValueError):
    """Invalid configuration, hyperparameter, or dataset specification."""


class DataFormatError(ValueError):
    """Malformed dataset or config file. Message names the offending line."""


class TrainingError(RuntimeError):
    """Training produced a non-finite loss or otherwise cannot continue."""
