"""Exception hierarchy.

Two kinds of failure are kept apart: the caller asked for something invalid
(:class:`ParameterError`), or the numerics declined to certify something at
the requested resolution (:class:`Refusal`).  The CLI maps the first to exit
code 1 and the second to exit code 2.
"""


class EscapeLabError(Exception):
    pass


class ParameterError(EscapeLabError, ValueError):
    pass


class Refusal(EscapeLabError):
    """An empirical refusal; ``reason`` is a short machine-readable tag."""

    def __init__(self, reason, message="", **details):
        self.reason = reason
        self.details = details
        super().__init__(f"{reason}: {message}" if message else reason)

    def to_dict(self):
        out = {"reason": self.reason, "message": str(self)}
        for key, value in self.details.items():
            if isinstance(value, complex):
                value = [value.real, value.imag]
            out[key] = value
        return out
