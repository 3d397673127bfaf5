# nestprof/exceptions.py
from typing import Optional


class NestprofError(Exception):
    """Base error. ``exit_code`` is what the CLI returns when it escapes."""

    exit_code = 2


class UsageError(NestprofError):
    exit_code = 1


class PathSyntaxError(UsageError, ValueError):
    def __init__(self, text: str, position: int, reason: str):
        self.text = text
        self.position = position
        super().__init__(f"invalid path {text!r} at offset {position}: {reason}")


class InputError(NestprofError):
    exit_code = 2


class ParseError(InputError):
    def __init__(self, message: str, document: Optional[int] = None, line: Optional[int] = None):
        self.document = document
        self.line = line
        parts = [f"document {document}" if document is not None else None, f"line {line}" if line is not None else None]
        location = ", ".join(p for p in parts if p) or "input"
        super().__init__(f"{location}: {message}")


class StructuralError(InputError):
    pass


class MiningError(NestprofError):
    pass


class InsufficientDocumentsError(MiningError):
    def __init__(self, n_docs: int):
        self.n_docs = n_docs
        super().__init__(f"insufficient documents: functional dependencies need at least 2, got {n_docs}")


class GenerationError(NestprofError):
    pass


class ResourceLimitError(NestprofError):
    exit_code = 3
