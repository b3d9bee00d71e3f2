from __future__ import annotations


class ConfigError(ValueError):
    """Invalid experiment or channel configuration.

    ``location`` is a dotted path into the offending config object, when known.
    """

    def __init__(self, message: str, location: str | None = None):
        self.message = message
        self.location = location
        super().__init__(f"{location}: {message}" if location else message)

    def to_json(self) -> dict:
        return {"error": "config", "location": self.location, "message": self.message}


class BudgetExhausted(RuntimeError):
    pass
