class ConfigError(Exception):
    """Bad input: config documents, AIR files, workload parameters. Exit code 1."""

    exit_code = 1


class SimulationError(Exception):
    """Fatal inconsistency inside a simulation run. Exit code 2."""

    exit_code = 2


class SchemaError(ConfigError):
    def __init__(self, path: str, message: str):
        self.path = path
        self.message = message
        super().__init__(f"{path}: {message}" if path else message)


class IoError(ConfigError):
    pass
