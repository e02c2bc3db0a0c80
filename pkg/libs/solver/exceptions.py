from libs.exceptions import SvciError


class SolverInputError(SvciError): pass
class NonFiniteObjectiveError(SvciError): pass
