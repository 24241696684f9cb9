"""Domain error hierarchy shared by the core, CLI, and HTTP layers."""


class DomainError(Exception):
    """A violated domain rule.

    `code` is the stable machine-readable identifier surfaced in CLI stderr
    and HTTP error bodies; `http_status` is the status the HTTP layer maps
    this error to. `details` holds structured extras (entity ids, counts)
    for error bodies.
    """

    code = "domain_error"
    http_status = 422

    def __init__(self, message: str, **details):
        super().__init__(message)
        self.message = message
        self.details = details
