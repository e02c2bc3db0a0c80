from libs.exceptions import SvciError


class DegenerateQuadratureError(SvciError): pass
class EmptyPatternError(SvciError): pass
class QuadratureKindError(SvciError): pass
class NonPositiveBaselineError(SvciError): pass
class BadBandwidthError(SvciError): pass
