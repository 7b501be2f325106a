"""
Error hierarchy. ``code`` is the exit status the command line reports.
"""


class FindabilityError(Exception):
    code = 1
    description = "findability error"

    def __init__(self, description=None):
        if description is not None:
            self.description = description
        super().__init__(self.description)

    def __str__(self):
        return self.description


class ConfigurationError(FindabilityError):
    code = 2
    description = "invalid configuration"


class ParseError(FindabilityError):
    code = 3
    description = "malformed record"

    def __init__(self, description=None, line=None):
        self.line = line
        if line is not None and description is not None:
            description = f"line {line}: {description}"
        super().__init__(description)


class IntegrityError(FindabilityError):
    code = 3
    description = "duplicate document id"


class IndexFormatError(FindabilityError):
    code = 4
    description = "not a findability index"


class ConstructionError(FindabilityError):
    code = 4
    description = "cannot build an index from an empty corpus"


class EmptyQueryError(FindabilityError):
    code = 5
    description = "empty query"


class UnknownDocumentError(FindabilityError):
    code = 5
    description = "unknown document"


class EmptyDocumentError(FindabilityError):
    code = 5
    description = "document has no terms"


class NoRelevantQueriesError(FindabilityError):
    code = 5
    description = "document has no relevant queries"


class DegenerateInputError(FindabilityError):
    code = 6
    description = "degenerate input"


class ConfigMismatchError(FindabilityError):
    code = 7
    description = "fingerprint mismatch"


class RankError(FindabilityError):
    code = 5
    description = "rank must be >= 1"
