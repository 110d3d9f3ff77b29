"""Exception hierarchy.

Every error carries a dotted ``code`` so the CLI can emit a single
machine-parsable cause line.
"""


class PmdStabError(Exception):
    code = "error"

    def __init__(self, message, code=None):
        super().__init__(message)
        if code is not None:
            self.code = code


class NetworkParseError(PmdStabError):
    code = "parse.error"


class NetworkValidationError(PmdStabError):
    code = "model.invalid"

    def __init__(self, violations):
        self.violations = list(violations)
        text = "; ".join(str(v) for v in self.violations)
        super().__init__(f"invalid network: {text}")


class SingularElementError(PmdStabError):
    code = "element.singular"


class VscSingularError(PmdStabError):
    code = "vsc.singular"


class AggregationError(PmdStabError):
    code = "assembly.aggregation"


class GroupingError(PmdStabError):
    code = "assembly.grouping"


class EigenError(PmdStabError):
    code = "modal.eig"


class SweepError(PmdStabError):
    code = "modal.sweep"


class MarginalCrossingError(PmdStabError):
    code = "gnc.marginal"


class ParameterPathError(PmdStabError):
    code = "cli.parameter_path"
