class SvciError(Exception): pass
class DimensionMismatchError(SvciError): pass
class BadRuntimeConfigurationError(SvciError): pass
