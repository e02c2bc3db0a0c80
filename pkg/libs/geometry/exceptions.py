from libs.exceptions import SvciError


class DomainConstructionError(SvciError): pass
class LocationOffDomainError(SvciError): pass
class DomainFileError(SvciError): pass
class SubdivisionError(SvciError): pass
class LocationsMismatchError(SvciError): pass
