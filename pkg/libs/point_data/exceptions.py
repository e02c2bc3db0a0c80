from libs.exceptions import SvciError


class PatternParseError(SvciError): pass
class PointOffDomainError(SvciError): pass
class MissingCovariateError(SvciError): pass
class CovariateShapeError(SvciError): pass
class CovariateFileError(SvciError): pass
